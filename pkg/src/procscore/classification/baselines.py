from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from procscore.classification.labels import ACTIVITIES, Activity
from procscore.errors import EmptyTrainingSet
from procscore.mining.records import CommitRecord, count_keywords

CORRECTIVE_WORDS = ("fix", "bug", "error", "fail")
ADAPTIVE_WORDS = ("implement", "add", "feature", "new")
PERFECTIVE_WORDS = ("refactor", "clean", "style", "format", "rename", "doc")


@dataclass(frozen=True)
class ZeroRule:
    majority: Activity

    def predict(self, *_args) -> Activity:
        return self.majority


def zero_rule_fit(labels: Iterable[Activity | str]) -> ZeroRule:
    counts = Counter(Activity.parse(lab) for lab in labels)
    if not counts:
        raise EmptyTrainingSet("zero rule needs at least one label")
    best = max(ACTIVITIES, key=lambda a: (counts[a], -a.index))
    return ZeroRule(best)


def zero_rule_predict(model: ZeroRule) -> Activity:
    return model.majority


def keyword_rule(record: CommitRecord, net_empty_rule: bool = False) -> Activity:
    """Fixed-priority keyword rule: corrective, then adaptive, then perfective.

    With ``net_empty_rule`` a commit without net added lines is never adaptive.
    """
    words = CORRECTIVE_WORDS + ADAPTIVE_WORDS + PERFECTIVE_WORDS
    counts = count_keywords(record.message, words)
    if any(counts[w] for w in CORRECTIVE_WORDS):
        return Activity.CORRECTIVE
    adaptive_allowed = not (net_empty_rule and record.lines_added_net == 0)
    if adaptive_allowed and any(counts[w] for w in ADAPTIVE_WORDS):
        return Activity.ADAPTIVE
    return Activity.PERFECTIVE
