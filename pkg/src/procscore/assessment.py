"""Project features, small-data severity regressors and score reports."""

from __future__ import annotations

import csv
import itertools
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from procscore.activity import ActivityCurve, activity_mass
from procscore.deviations import FeatureDef, Segment, compute_all, segment_jsd
from procscore.errors import (
    InputError,
    InvalidConfig,
    LengthMismatch,
    MissingActivity,
    MissingTransform,
    SingularSystem,
    TooFewInstances,
)
from procscore.scoring import ScoreTransform, to_score

SEVERITY_MAX = 10.0
IMPORTANCE_TOLERANCE = 1e-6


# --- features ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProjectFeatures:
    project_id: str
    names: tuple
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        names = tuple(self.names)
        if len(set(names)) != len(names):
            raise InputError("feature names must be unique")
        if len(names) != vals.size:
            raise LengthMismatch(f"{len(names)} names vs {vals.size} values")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", vals)

    def as_dict(self) -> dict:
        return dict(zip(self.names, self.values.tolist()))


def build_features(project_curves: Mapping[str, ActivityCurve], segments: Sequence[Segment],
                   activities: Sequence[str], extra_defs: Sequence[FeatureDef] = (), pm=None,
                   project_id: str = "") -> ProjectFeatures:
    """Per-segment activity masses, pairwise divergences, then any extra deviation features.

    Extra features compare against ``pm`` and store the calibrated quantity
    (``-ln`` of a divergence for JSD definitions).
    """
    if not segments:
        raise InputError("need at least one segment")
    for act in activities:
        if act not in project_curves:
            raise MissingActivity(f"project has no curve for activity {act!r}")
    names, values = [], []
    for act in activities:
        for seg in segments:
            names.append(f"mass:{act}:{seg.label}")
            values.append(activity_mass(project_curves[act], (seg.a, seg.b)))
    for a1, a2 in itertools.combinations(activities, 2):
        for seg in segments:
            names.append(f"div:{a1}-{a2}:{seg.label}")
            values.append(segment_jsd(project_curves[a1], project_curves[a2], seg))
    if extra_defs:
        if pm is None:
            raise MissingActivity("extra deviation features need a process model")
        for fd, dv in zip(extra_defs, compute_all(pm, project_curves, extra_defs)):
            names.append(fd.name)
            values.append(dv.value)
    return ProjectFeatures(project_id, tuple(names), np.asarray(values))


@dataclass(frozen=True, eq=False)
class Standardizer:
    mean: np.ndarray
    sd: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        x = np.asarray(x, dtype=float)
        sd = x.std(axis=0)
        # constant columns map to 0 instead of dividing by zero
        sd = np.where(sd > 0, sd, 1.0)
        return cls(x.mean(axis=0), sd)

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.sd


def feature_matrix(projects: Sequence[ProjectFeatures]) -> np.ndarray:
    if not projects:
        raise TooFewInstances("no projects")
    names = projects[0].names
    for p in projects:
        if p.names != names:
            raise InputError(f"project {p.project_id!r} has a different feature schema")
    return np.vstack([p.values for p in projects])


# --- ground truth -------------------------------------------------------------

@dataclass(frozen=True)
class GroundTruth:
    project_id: str
    severity: float

    def __post_init__(self):
        if not 0.0 <= self.severity <= SEVERITY_MAX:
            raise InputError(f"severity {self.severity} outside [0, {SEVERITY_MAX:g}]")

    @property
    def scaled(self) -> float:
        return self.severity / SEVERITY_MAX


def read_ground_truth(path: str | Path) -> list[GroundTruth]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    if not rows or not {"project_id", "severity"} <= set(rows[0]):
        raise InputError(f"{path}: expected columns project_id, severity")
    return [GroundTruth(r["project_id"], float(r["severity"])) for r in rows]


def read_feature_matrix(path: str | Path) -> list[ProjectFeatures]:
    """CSV with a ``project_id`` column followed by one column per feature."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if not header or header[0] != "project_id":
            raise InputError(f"{path}: first column must be project_id")
        return [ProjectFeatures(row[0], tuple(header[1:]), np.asarray(row[1:], dtype=float)) for row in reader if row]


def write_feature_matrix(projects: Sequence[ProjectFeatures], path: str | Path, comment: str | None = None) -> None:
    feature_matrix(projects)  # schema check
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\r\n")
        writer = csv.writer(fh)
        writer.writerow(["project_id", *projects[0].names])
        for p in projects:
            writer.writerow([p.project_id, *[repr(float(v)) for v in p.values]])


# --- regressors ------------------------------------------------------------------

_SPEC_RE = re.compile(r"^\s*(knn|ridge|zero_rule)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


@dataclass(frozen=True)
class RegressorSpec:
    kind: str = "ridge"
    k: int = 5
    lam: float = 1e-3
    preprocessing: str = "z_standardize"
    smote_new: int = 0       # synthetic instances added to every training fold
    smote_k: int = 5

    def __post_init__(self):
        if self.kind not in ("knn", "ridge", "zero_rule"):
            raise InvalidConfig(f"unknown regressor {self.kind!r}")
        if self.k < 1 or self.lam < 0 or self.smote_new < 0 or self.smote_k < 1:
            raise InvalidConfig("need k >= 1, lambda >= 0, smote_new >= 0, smote_k >= 1")
        if self.preprocessing not in ("none", "z_standardize"):
            raise InvalidConfig(f"unknown preprocessing {self.preprocessing!r}")

    @classmethod
    def parse(cls, text: str, **kw) -> "RegressorSpec":
        """``knn(3)``, ``ridge(0.1)`` or ``zero_rule``."""
        m = _SPEC_RE.match(text)
        if not m:
            raise InvalidConfig(f"cannot parse regressor spec {text!r}")
        kind, arg = m.group(1), m.group(2)
        if kind == "knn" and arg:
            kw["k"] = int(arg)
        elif kind == "ridge" and arg:
            kw["lam"] = float(arg)
        return cls(kind, **kw)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "k": self.k, "lam": self.lam, "preprocessing": self.preprocessing,
                "smote_new": self.smote_new, "smote_k": self.smote_k}

    @classmethod
    def from_dict(cls, data: Mapping) -> "RegressorSpec":
        return cls(**{k: data[k] for k in ("kind", "k", "lam", "preprocessing", "smote_new", "smote_k") if k in data})


@dataclass(frozen=True, eq=False)
class RegressorModel:
    spec: RegressorSpec
    scaler: Standardizer | None
    intercept: float = 0.0
    coef: np.ndarray | None = None
    train_x: np.ndarray | None = None   # scaled, knn only
    train_y: np.ndarray | None = None

    def to_dict(self) -> dict:
        arr = lambda a: None if a is None else np.asarray(a).tolist()
        return {
            "spec": self.spec.to_dict(),
            "scaler": None if self.scaler is None else {"mean": arr(self.scaler.mean), "sd": arr(self.scaler.sd)},
            "intercept": self.intercept,
            "coef": arr(self.coef),
            "train_x": arr(self.train_x),
            "train_y": arr(self.train_y),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "RegressorModel":
        arr = lambda a: None if a is None else np.asarray(a, dtype=float)
        sc = data.get("scaler")
        scaler = None if sc is None else Standardizer(arr(sc["mean"]), arr(sc["sd"]))
        return cls(RegressorSpec.from_dict(data["spec"]), scaler, float(data.get("intercept", 0.0)),
                   arr(data.get("coef")), arr(data.get("train_x")), arr(data.get("train_y")))


def _check_xy(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != y.size:
        raise LengthMismatch(f"{x.shape[0]} instances vs {y.size} targets")
    return x, y


def fit_regressor(spec: RegressorSpec, x, y) -> RegressorModel:
    x, y = _check_xy(x, y)
    if y.size < 2:
        raise TooFewInstances(f"need >= 2 instances to fit, got {y.size}")
    if spec.kind == "zero_rule":
        return RegressorModel(spec, None, float(y.mean()))
    scaler = Standardizer.fit(x) if spec.preprocessing == "z_standardize" else None
    xs = scaler.transform(x) if scaler else x
    if spec.kind == "knn":
        return RegressorModel(spec, scaler, train_x=xs, train_y=y)
    # ridge with an unpenalized intercept: centre, solve, recover the intercept
    mx, my = xs.mean(axis=0), y.mean()
    xc, yc = xs - mx, y - my
    p = xs.shape[1]
    if spec.lam == 0 and np.linalg.matrix_rank(xc) < p:
        raise SingularSystem("lambda = 0 with collinear or too few instances")
    gram = xc.T @ xc + spec.lam * np.eye(p)
    try:
        beta = np.linalg.solve(gram, xc.T @ yc)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    return RegressorModel(spec, scaler, float(my - mx @ beta), beta)


def predict(model: RegressorModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if model.spec.kind == "zero_rule":
        out = np.full(x.shape[0], model.intercept)
    else:
        xs = model.scaler.transform(x) if model.scaler else x
        if model.spec.kind == "ridge":
            out = xs @ model.coef + model.intercept
        else:
            k = min(model.spec.k, model.train_y.size)
            d2 = ((xs[:, None, :] - model.train_x[None, :, :]) ** 2).sum(axis=2)
            nn = np.argsort(d2, axis=1, kind="stable")[:, :k]
            out = model.train_y[nn].mean(axis=1)
    out = np.clip(out, 0.0, SEVERITY_MAX)
    return out[0] if single else out


def rmse(pred, truth) -> float:
    pred, truth = np.asarray(pred, dtype=float), np.asarray(truth, dtype=float)
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


# --- SMOTE for regression -----------------------------------------------------------

def smote_regression(x, y, k: int = 5, n_new: int | None = None, seed: int = 0):
    """Originals plus ``n_new`` synthetic instances interpolated towards z-space neighbours."""
    x, y = _check_xy(x, y)
    n = y.size
    if not 1 <= k < n:
        raise TooFewInstances(f"SMOTE needs more than k={k} instances, got {n}")
    n_new = n if n_new is None else int(n_new)
    rng = np.random.default_rng(seed)
    z = Standardizer.fit(x).transform(x)
    d2 = ((z[:, None, :] - z[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    neighbours = np.argsort(d2, axis=1, kind="stable")[:, :k]
    base = rng.integers(0, n, n_new)
    nn = neighbours[base, rng.integers(0, k, n_new)]
    u = rng.random(n_new)
    new_x = x[base] + u[:, None] * (x[nn] - x[base])
    new_y = y[base] + u * (y[nn] - y[base])
    return np.vstack([x, new_x]), np.concatenate([y, new_y])


# --- validation ---------------------------------------------------------------------

@dataclass(frozen=True)
class LoocvResult:
    mean_rmse: float
    sd: float
    rmses: tuple

    @property
    def bands(self) -> dict:
        """mean +/- {1, 2, 3} sd."""
        return {s: (self.mean_rmse - s * self.sd, self.mean_rmse + s * self.sd) for s in (1, 2, 3)}


def _fit_fold(spec: RegressorSpec, x, y, seed):
    if spec.smote_new > 0:
        k = min(spec.smote_k, y.size - 1)
        if k >= 1:
            x, y = smote_regression(x, y, k, spec.smote_new, seed)
    return fit_regressor(spec, x, y)


def loocv(x, y, spec: RegressorSpec, repeats: int = 1, seed: int = 0) -> LoocvResult:
    x, y = _check_xy(x, y)
    n = y.size
    if n < 3:
        raise TooFewInstances(f"LOOCV needs >= 3 instances, got {n}")
    rmses = []
    for r in range(repeats):
        pred = np.empty(n)
        for i in range(n):
            keep = np.arange(n) != i
            fold_seed = np.random.SeedSequence([seed, r, i]).generate_state(1)[0]
            model = _fit_fold(spec, x[keep], y[keep], int(fold_seed))
            pred[i] = predict(model, x[i])
        rmses.append(rmse(pred, y))
    sd = float(np.std(rmses, ddof=1)) if repeats > 1 else 0.0
    return LoocvResult(float(np.mean(rmses)), sd, tuple(rmses))


def permutation_importance(model: RegressorModel, x, y, repeats: int = 30, seed: int = 0) -> np.ndarray:
    """Mean RMSE increase when one column is shuffled, floored at 0 and normalized.

    If no column increases the error the importances are uniform.
    """
    x, y = _check_xy(x, y)
    if y.size < 3:
        raise TooFewInstances("permutation importance needs >= 3 instances")
    rng = np.random.default_rng(seed)
    base = rmse(predict(model, x), y)
    p = x.shape[1]
    gain = np.zeros(p)
    for j in range(p):
        for _ in range(repeats):
            xp = x.copy()
            xp[:, j] = xp[rng.permutation(y.size), j]
            gain[j] += rmse(predict(model, xp), y) - base
    gain = np.maximum(gain / repeats, 0.0)
    total = gain.sum()
    return gain / total if total > 0 else np.full(p, 1.0 / p)


def brier_score(binary_predictions, truth_probabilities) -> float:
    pred = np.asarray(binary_predictions, dtype=float)
    prob = np.asarray(truth_probabilities, dtype=float)
    if pred.shape != prob.shape:
        raise LengthMismatch(f"{pred.shape} predictions vs {prob.shape} probabilities")
    if pred.size == 0:
        raise LengthMismatch("empty input")
    if not np.all((pred == 0) | (pred == 1)):
        raise InputError("predictions must be 0 or 1")
    if np.any((prob < 0) | (prob > 1)):
        raise InputError("probabilities must lie in [0, 1]")
    return float(np.mean((pred - prob) ** 2))


# --- reports --------------------------------------------------------------------------

def weighted_scores(scores, importances):
    s = np.asarray(scores, dtype=float)
    w = np.asarray(importances, dtype=float)
    if s.shape != w.shape:
        raise LengthMismatch(f"{s.size} scores vs {w.size} importances")
    if np.any(w < 0) or abs(w.sum() - 1.0) > IMPORTANCE_TOLERANCE:
        raise InputError(f"importances must be nonnegative and sum to 1 (sum {w.sum():.9g})")
    weighted = s * w
    return weighted, float(weighted.sum()), float(s.mean())


def _descending(values: Sequence[float]) -> list[int]:
    # stable: equal values keep declaration order
    return sorted(range(len(values)), key=lambda i: -values[i])


@dataclass(frozen=True)
class FeatureReport:
    feature: str
    raw: float
    z: float | None
    score: float
    weighted_score: float
    importance: float


@dataclass(frozen=True)
class AssessmentReport:
    project_id: str
    severity: float | None
    features: tuple          # FeatureReport, in declaration order
    average_score: float
    weighted_total: float
    order_by_score: tuple
    order_by_weighted: tuple
    meta: Mapping = field(default_factory=dict)

    def sorted_features(self) -> list[FeatureReport]:
        by_name = {f.feature: f for f in self.features}
        return [by_name[n] for n in self.order_by_weighted]

    def to_dict(self) -> dict:
        out = {
            "project_id": self.project_id,
            "severity": self.severity,
            "average_score": self.average_score,
            "weighted_total": self.weighted_total,
            "order_by_score": list(self.order_by_score),
            "order_by_weighted": list(self.order_by_weighted),
            "features": [vars(f).copy() for f in self.features],
        }
        if self.meta:
            out = {"meta": dict(self.meta), **out}
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "AssessmentReport":
        return cls(data["project_id"], data["severity"], tuple(FeatureReport(**f) for f in data["features"]),
                   data["average_score"], data["weighted_total"], tuple(data["order_by_score"]),
                   tuple(data["order_by_weighted"]), data.get("meta", {}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "AssessmentReport":
        return cls.from_dict(json.loads(text))

    def table(self) -> str:
        cols = ["feature", "raw", "z", "score", "weighted_score", "importance"]
        rows = [[f.feature, f"{f.raw:.5f}", "" if f.z is None else f"{f.z:.5f}", f"{f.score:.5f}",
                 f"{f.weighted_score:.5f}", f"{f.importance:.4f}"] for f in self.sorted_features()]
        widths = [max(len(c), *(len(r[i]) for r in rows)) if rows else len(c) for i, c in enumerate(cols)]
        line = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
        out = [line(cols)] + [line(r) for r in rows]
        out.append(f"average score: {self.average_score:.5f}")
        out.append(f"importance-weighted score: {self.weighted_total:.5f}")
        if self.severity is not None:
            out.append(f"predicted severity: {self.severity:.2f} / 10")
        return "\n".join(out) + "\n"


def report_from_scores(names: Sequence[str], raw, scores, importances, z=None,
                       severity: float | None = None, project_id: str = "", meta=None) -> AssessmentReport:
    names = list(names)
    raw = np.asarray(raw, dtype=float)
    scores = np.asarray(scores, dtype=float)
    if not (len(names) == raw.size == scores.size):
        raise LengthMismatch("names, raw values and scores differ in length")
    weighted, dot, avg = weighted_scores(scores, importances)
    imp = np.asarray(importances, dtype=float)
    zs = [None] * len(names) if z is None else [float(v) for v in z]
    feats = tuple(FeatureReport(n, float(r), zv, float(s), float(w), float(i))
                  for n, r, zv, s, w, i in zip(names, raw, zs, scores, weighted, imp))
    by_score = tuple(names[i] for i in _descending(scores.tolist()))
    by_weighted = tuple(names[i] for i in _descending(weighted.tolist()))
    return AssessmentReport(project_id, None if severity is None else float(severity), feats,
                            avg, dot, by_score, by_weighted, meta or {})


def assess(project_curves: Mapping[str, ActivityCurve], pm, model: RegressorModel | None,
           transforms: Mapping[str, ScoreTransform], importances, feature_defs: Sequence[FeatureDef],
           project_id: str = "", meta=None) -> AssessmentReport:
    """Deviations against the process model, their scores, and the predicted severity.

    The model, when given, must be trained on the same feature definitions in
    the same order; its frozen standardization supplies the z column.
    """
    for fd in feature_defs:
        if fd.name not in transforms:
            raise MissingTransform(f"no transform for feature {fd.name!r}")
    values = np.array([dv.value for dv in compute_all(pm, project_curves, feature_defs)])
    scores = np.array([to_score(transforms[fd.name], v) for fd, v in zip(feature_defs, values)])
    z = severity = None
    if model is not None:
        if model.scaler is not None:
            if model.scaler.mean.size != values.size:
                raise InputError("model was trained on a different feature schema")
            z = model.scaler.transform(values)
        severity = float(predict(model, values))
    return report_from_scores([fd.name for fd in feature_defs], values, scores, importances, z,
                              severity, project_id, meta)
