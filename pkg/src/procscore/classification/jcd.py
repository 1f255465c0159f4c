"""Joint conditional density (JCD) chain classifier.

For a chain whose youngest commit is unlabeled, every label assignment of
the last ``order + 1`` commits consistent with the known labels is scored as

    log P(c_1) + sum_j log T_j(c_{j+1} | c_1..c_j)
      + sum_t sum_f log f_{c_t,f}(x_{t,f}) + sum_t log g(log1p(s_t) | c_{t-1}, c_t)

and the principal's posterior is the normalized marginal over the rest.
With labeled predecessors this reduces to the order-k transition term plus
the principal's own feature and sojourn log-densities.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from procscore.classification.features import CommitChain, FeatureSchema
from procscore.classification.labels import ACTIVITIES, Activity
from procscore.errors import DegenerateSample, InputError, InsufficientData, OrderMismatch
from procscore.kde import GaussianKDE, select_bandwidth

DENSITY_FLOOR = 1e-12
LOG_FLOOR = float(np.log(DENSITY_FLOOR))
MIN_CLASS_EXAMPLES = 3
MAX_ORDER = 3


@dataclass(frozen=True)
class JCDModel:
    order: int
    schema: FeatureSchema
    classes: tuple[Activity, ...]
    priors: dict[Activity, float]
    # transitions[j][history] -> probabilities over ``classes``, for j = 1..order
    transitions: dict[int, dict[tuple[Activity, ...], np.ndarray]]
    feature_kdes: dict[Activity, tuple[GaussianKDE, ...]]
    sojourn_pair_kdes: dict[tuple[Activity, Activity], GaussianKDE] = field(default_factory=dict)
    sojourn_class_kdes: dict[Activity, GaussianKDE] = field(default_factory=dict)
    sojourn_pooled_kde: GaussianKDE | None = None
    use_sojourn: bool = True
    net_empty_rule: bool = False

    def transition(self, history: tuple[Activity, ...]) -> np.ndarray:
        j = len(history)
        if j == 0:
            return np.array([self.priors[c] for c in self.classes])
        table = self.transitions[j]
        if history in table:
            return table[history]
        return np.full(len(self.classes), 1.0 / len(self.classes))

    def feature_loglik(self, features: np.ndarray) -> np.ndarray:
        """(n_commits, n_classes) summed per-feature log-densities."""
        x = np.atleast_2d(features)
        out = np.zeros((x.shape[0], len(self.classes)))
        for ci, c in enumerate(self.classes):
            for fi, kde in enumerate(self.feature_kdes[c]):
                out[:, ci] += np.maximum(kde.logpdf(x[:, fi]), LOG_FLOOR)
        return out

    def sojourn_loglik(self, seconds: float, prev: Activity | None, cur: Activity) -> float:
        if not self.use_sojourn or not np.isfinite(seconds):
            return 0.0
        kde = None
        if prev is not None:
            kde = self.sojourn_pair_kdes.get((prev, cur))
        if kde is None:
            kde = self.sojourn_class_kdes.get(cur, self.sojourn_pooled_kde)
        if kde is None:
            return 0.0
        return max(float(kde.logpdf(np.log1p(seconds))[0]), LOG_FLOOR)

    # serialization

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "schema": [list(e) for e in self.schema.entries],
            "classes": [c.value for c in self.classes],
            "priors": {c.value: p for c, p in self.priors.items()},
            "transitions": {
                str(j): [{"history": [h.value for h in hist], "probs": probs.tolist()}
                         for hist, probs in table.items()]
                for j, table in self.transitions.items()
            },
            "feature_kdes": {c.value: [k.to_dict() for k in kdes] for c, kdes in self.feature_kdes.items()},
            "sojourn_pair_kdes": [
                {"from": a.value, "to": b.value, **k.to_dict()} for (a, b), k in self.sojourn_pair_kdes.items()
            ],
            "sojourn_class_kdes": {c.value: k.to_dict() for c, k in self.sojourn_class_kdes.items()},
            "sojourn_pooled_kde": None if self.sojourn_pooled_kde is None else self.sojourn_pooled_kde.to_dict(),
            "use_sojourn": self.use_sojourn,
            "net_empty_rule": self.net_empty_rule,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "JCDModel":
        act = Activity.parse
        pooled = data.get("sojourn_pooled_kde")
        return cls(
            order=int(data["order"]),
            schema=FeatureSchema.of(tuple(e) for e in data["schema"]),
            classes=tuple(act(c) for c in data["classes"]),
            priors={act(c): float(p) for c, p in data["priors"].items()},
            transitions={
                int(j): {tuple(act(h) for h in item["history"]): np.asarray(item["probs"], dtype=float)
                         for item in items}
                for j, items in data["transitions"].items()
            },
            feature_kdes={act(c): tuple(GaussianKDE.from_dict(k) for k in kdes)
                          for c, kdes in data["feature_kdes"].items()},
            sojourn_pair_kdes={(act(d["from"]), act(d["to"])): GaussianKDE.from_dict(d)
                               for d in data["sojourn_pair_kdes"]},
            sojourn_class_kdes={act(c): GaussianKDE.from_dict(k) for c, k in data["sojourn_class_kdes"].items()},
            sojourn_pooled_kde=None if pooled is None else GaussianKDE.from_dict(pooled),
            use_sojourn=bool(data.get("use_sojourn", True)),
            net_empty_rule=bool(data.get("net_empty_rule", False)),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "JCDModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _fit_kde(values, fallback_bandwidth: float | None, rule) -> GaussianKDE | None:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return None
    try:
        h = select_bandwidth(values, rule)
    except DegenerateSample:
        h = fallback_bandwidth if fallback_bandwidth else 1.0
    return GaussianKDE(tuple(values.tolist()), h)


def _pooled_bandwidth(values, rule) -> float | None:
    try:
        return select_bandwidth(np.asarray(values, dtype=float), rule)
    except DegenerateSample:
        return None


def fit_jcd(
    chains: Sequence[CommitChain],
    order: int,
    schema: FeatureSchema,
    bandwidth_rule="sj",
    use_sojourn: bool = True,
    net_empty_rule: bool = False,
) -> JCDModel:
    """Fit priors, k-order add-one-smoothed transitions, per-class feature KDEs
    and sojourn densities on ``log1p(seconds)`` from fully labeled chains."""
    if order not in range(MAX_ORDER + 1):
        raise InputError(f"order must be in 0..{MAX_ORDER}, got {order}")
    if not chains:
        raise InsufficientData("no training chains")
    for ch in chains:
        if len(ch) <= order:
            raise InsufficientData(f"chain of length {len(ch)} is too short for order {order}")
        if any(lab is None for lab in ch.labels):
            raise InputError("training chains must be fully labeled")
        if ch.features.shape[1] != len(schema):
            raise InputError("chain features do not match the schema")

    # each commit contributes once, even when chains overlap
    commits: dict[object, tuple[np.ndarray, float, Activity, Activity | None]] = {}
    transitions_seen: dict[int, dict[object, tuple[tuple[Activity, ...], Activity]]] = defaultdict(dict)
    for ci, ch in enumerate(chains):
        for t in range(len(ch)):
            key = ch.ids[t] if ch.ids else (ci, t)
            prev = ch.labels[t - 1] if t > 0 else None
            if key not in commits or (commits[key][3] is None and prev is not None):
                commits[key] = (ch.features[t], float(ch.sojourns[t]), ch.labels[t], prev)
            for j in range(1, min(t, order) + 1):
                transitions_seen[j][key] = (tuple(ch.labels[t - j:t]), ch.labels[t])

    counts = Counter(lab for _, _, lab, _ in commits.values())
    classes = tuple(c for c in ACTIVITIES if counts[c] > 0)
    for c in classes:
        if counts[c] < MIN_CLASS_EXAMPLES:
            raise InsufficientData(f"class {c.name} has {counts[c]} examples, need >= {MIN_CLASS_EXAMPLES}")
    total = sum(counts.values())
    priors = {c: counts[c] / total for c in classes}

    transitions = {}
    for j in range(1, order + 1):
        tally: dict[tuple[Activity, ...], Counter] = defaultdict(Counter)
        for hist, nxt in transitions_seen[j].values():
            tally[hist][nxt] += 1
        transitions[j] = {
            hist: np.array([(ctr[c] + 1.0) / (sum(ctr.values()) + len(classes)) for c in classes])
            for hist, ctr in sorted(tally.items(), key=lambda kv: [a.index for a in kv[0]])
        }

    all_x = np.vstack([x for x, _, _, _ in commits.values()])
    pooled_h = [_pooled_bandwidth(all_x[:, f], bandwidth_rule) for f in range(all_x.shape[1])]
    feature_kdes = {}
    for c in classes:
        xc = np.vstack([x for x, _, lab, _ in commits.values() if lab is c])
        feature_kdes[c] = tuple(_fit_kde(xc[:, f], pooled_h[f], bandwidth_rule) for f in range(xc.shape[1]))

    pair_kdes, class_kdes, pooled_kde = {}, {}, None
    if use_sojourn:
        logs = [(np.log1p(s), lab, prev) for _, s, lab, prev in commits.values() if np.isfinite(s)]
        if logs:
            values = [v for v, _, _ in logs]
            soj_h = _pooled_bandwidth(values, bandwidth_rule)
            pooled_kde = _fit_kde(values, soj_h, bandwidth_rule)
            for c in classes:
                vc = [v for v, lab, _ in logs if lab is c]
                if vc:
                    class_kdes[c] = _fit_kde(vc, soj_h, bandwidth_rule)
            if order >= 1:
                for a, b in itertools.product(classes, classes):
                    vab = [v for v, lab, prev in logs if lab is b and prev is a]
                    if len(vab) >= 2:
                        pair_kdes[(a, b)] = _fit_kde(vab, soj_h, bandwidth_rule)

    return JCDModel(order, schema, classes, priors, transitions, feature_kdes,
                    pair_kdes, class_kdes, pooled_kde, use_sojourn, net_empty_rule)


def _normalize(log_scores: np.ndarray) -> np.ndarray:
    finite = np.isfinite(log_scores)
    out = np.zeros_like(log_scores)
    if finite.any():
        out[finite] = np.exp(log_scores[finite] - logsumexp(log_scores[finite]))
    return out


def predict_jcd(
    model: JCDModel,
    chain: CommitChain,
    allow_shorter: bool = False,
) -> tuple[Activity, np.ndarray]:
    """Most probable activity of the chain's youngest commit and the posterior
    over all three activities (A, C, P order; classes unseen in training get 0).

    Predecessor labels that are None are marginalized out.
    """
    if chain.features.shape[1] != len(model.schema):
        raise OrderMismatch("chain features do not conform to the model schema")
    if len(chain) <= model.order and not allow_shorter:
        raise OrderMismatch(f"chain of length {len(chain)} needs > {model.order} commits")
    window = min(len(chain), model.order + 1)
    start = len(chain) - window
    feats = chain.features[start:]
    sojourns = chain.sojourns[start:]
    known = list(chain.labels[start:])
    known[-1] = None

    classes = model.classes
    cidx = {c: i for i, c in enumerate(classes)}
    feat_ll = model.feature_loglik(feats)
    if model.net_empty_rule:
        net_idx = model.schema.index_of("lines_added_net")
        if net_idx is not None and Activity.ADAPTIVE in cidx:
            for t in range(window):
                if feats[t, net_idx] == 0:
                    feat_ll[t, cidx[Activity.ADAPTIVE]] = -np.inf

    # unknown labels, and labels never seen in training, are marginalized
    options = [[lab] if lab in cidx else list(classes) for lab in known]

    log_post = np.full(len(classes), -np.inf)
    for assignment in itertools.product(*options):
        score = 0.0
        for t, c in enumerate(assignment):
            probs = model.transition(tuple(assignment[:t]))
            score += np.log(probs[cidx[c]])
            score += feat_ll[t, cidx[c]]
            prev = assignment[t - 1] if t > 0 else None
            score += model.sojourn_loglik(sojourns[t], prev, c)
        last = cidx[assignment[-1]]
        log_post[last] = np.logaddexp(log_post[last], score)

    post_present = _normalize(log_post)
    posterior = np.zeros(len(ACTIVITIES))
    for c, p in zip(classes, post_present):
        posterior[c.index] = p
    return ACTIVITIES[int(np.argmax(posterior))], posterior
