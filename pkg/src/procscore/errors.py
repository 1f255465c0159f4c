"""Exception hierarchy shared by all modules."""


class ProcScoreError(Exception):
    """Base class for every error raised by this package."""


class InputError(ProcScoreError):
    """Bad input supplied by the caller (maps to CLI exit code 2)."""


class InvariantViolation(InputError):
    pass


class UnsupportedBinaryContent(InputError):
    pass


class RepositoryNotFound(InputError):
    pass


class CorruptObject(ProcScoreError):
    def __init__(self, object_id: str, detail: str = ""):
        super().__init__(f"corrupt or unreadable object {object_id}: {detail}".rstrip(": "))
        self.object_id = object_id


class EmptyDataset(InputError):
    pass


class SchemaFieldUnknown(InputError):
    pass


class EmptyTrainingSet(InputError):
    pass


class InsufficientData(InputError):
    pass


class OrderMismatch(InputError):
    pass


class InvalidDistribution(InputError):
    pass


class LengthMismatch(InputError):
    pass


class DegenerateTimeRange(InputError):
    pass


class NoEvents(InputError):
    pass


class ZeroTotalWeight(InputError):
    pass


class OutOfDomain(InputError):
    pass


class AllZeroWeights(InputError):
    pass


class InvalidSegment(InputError):
    pass


class ZeroMassSegment(InputError):
    pass


class MissingActivity(InputError):
    pass


class InvalidConfig(InputError):
    pass


class DegenerateSample(InputError):
    pass


class EmptySamples(InputError):
    pass


class TooFewSamples(InputError):
    pass


class TooFewInstances(InputError):
    pass


class SingularSystem(InputError):
    pass


class MissingTransform(InputError):
    pass
