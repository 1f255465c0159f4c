"""Feature schemas over commit records and featurized commit chains."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from procscore.classification.labels import Activity
from procscore.errors import InputError, SchemaFieldUnknown
from procscore.mining.records import COUNTER_FIELDS, CommitRecord

NUMERIC_SOURCES = (*COUNTER_FIELDS, "density", "gross_lines", "net_lines", "sojourn_seconds", "has_sojourn")


def _source_value(record: CommitRecord, source: str) -> float:
    if source == "sojourn_seconds":
        return float(record.sojourn_seconds or 0)
    if source == "has_sojourn":
        return 0.0 if record.sojourn_seconds is None else 1.0
    if source in NUMERIC_SOURCES:
        return float(getattr(record, source))
    if source.endswith("_count"):
        keyword = source[: -len("_count")]
        if keyword in record.keyword_counts:
            return float(record.keyword_counts[keyword])
    raise SchemaFieldUnknown(f"unknown feature source {source!r}")


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered (name, source) pairs.

    A source is a numeric CommitRecord field, ``gross_lines``/``net_lines``,
    ``has_sojourn`` (indicator companion of ``sojourn_seconds``, which reads
    0 when absent) or ``<keyword>_count``.
    """

    entries: tuple[tuple[str, str], ...]

    @classmethod
    def of(cls, items: Iterable[str | Sequence[str]]) -> "FeatureSchema":
        entries = []
        for item in items:
            if isinstance(item, str):
                entries.append((item, item))
            else:
                name, source = item
                entries.append((str(name), str(source)))
        names = [n for n, _ in entries]
        if len(set(names)) != len(names):
            raise InputError(f"duplicate feature names in schema: {names}")
        return cls(tuple(entries))

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def index_of(self, source: str) -> int | None:
        for i, (_, src) in enumerate(self.entries):
            if src == source:
                return i
        return None


DEFAULT_SCHEMA = FeatureSchema.of([
    "files_added_net", "files_modified_net", "files_deleted_net", "files_renamed_net",
    "lines_added_net", "lines_deleted_net", "density",
    "fix_count", "bug_count", "feature_count", "implement_count", "add_count",
    "refactor_count", "clean_count", "test_count", "doc_count",
])


def featurize(record: CommitRecord, schema: FeatureSchema) -> np.ndarray:
    if record.is_merge:
        raise InputError(f"merge commit {record.id} cannot be featurized")
    return np.array([_source_value(record, src) for _, src in schema.entries], dtype=float)


@dataclass(frozen=True)
class CommitChain:
    """Consecutive first-parent commits, oldest first; the last one is the principal.

    ``sojourns`` holds seconds since the first parent (NaN when unknown) and
    ``labels`` may contain None for unlabeled commits.
    """

    features: np.ndarray
    sojourns: np.ndarray
    labels: tuple[Activity | None, ...]
    ids: tuple[str, ...] = ()

    def __post_init__(self):
        n = self.features.shape[0]
        if self.features.ndim != 2 or n == 0:
            raise InputError("chain features must be a non-empty 2-D array")
        if len(self.sojourns) != n or len(self.labels) != n:
            raise InputError("chain features, sojourns and labels differ in length")
        if self.ids and len(self.ids) != n:
            raise InputError("chain ids differ in length")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def principal_label(self) -> Activity | None:
        return self.labels[-1]

    def with_unlabeled_principal(self) -> "CommitChain":
        return CommitChain(self.features, self.sojourns, self.labels[:-1] + (None,), self.ids)

    def unlabeled(self) -> "CommitChain":
        return CommitChain(self.features, self.sojourns, (None,) * len(self), self.ids)

    @classmethod
    def from_records(
        cls,
        records: Sequence[CommitRecord],
        schema: FeatureSchema,
        labels: Sequence[Activity | str | None] | None = None,
    ) -> "CommitChain":
        records = list(records)
        for prev, cur in zip(records, records[1:]):
            if cur.first_parent != prev.id:
                raise InputError(f"{cur.id} does not have {prev.id} as its first parent")
        for r in records:
            if r.is_merge:
                raise InputError(f"merge commit {r.id} in chain")
        if labels is None:
            labels = [None] * len(records)
        parsed = tuple(None if lab is None else Activity.parse(lab) for lab in labels)
        feats = np.vstack([featurize(r, schema) for r in records])
        soj = np.array([np.nan if r.sojourn_seconds is None else float(r.sojourn_seconds) for r in records])
        return cls(feats, soj, parsed, tuple(r.id for r in records))


def build_chains(
    records: Sequence[CommitRecord],
    schema: FeatureSchema,
    length: int,
    labels: dict[str, Activity] | None = None,
    require_labels: bool = False,
) -> list[CommitChain]:
    """One chain per non-merge commit, walking back up to ``length - 1`` first parents.

    Chains stop early at merges, the initial commit or (with
    ``require_labels``) an unlabeled ancestor.
    """
    by_id = {r.id: r for r in records}
    labels = labels or {}
    chains = []
    for r in records:
        if r.is_merge or (require_labels and r.id not in labels):
            continue
        members = [r]
        while len(members) < length:
            parent = by_id.get(members[-1].first_parent or "")
            if parent is None or parent.is_merge or (require_labels and parent.id not in labels):
                break
            members.append(parent)
        members.reverse()
        chains.append(CommitChain.from_records(members, schema, [labels.get(m.id) for m in members]))
    return chains
