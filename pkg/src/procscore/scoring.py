"""Automatic calibration: simulated random processes turned into to-score transforms.

A transform keeps the sorted distances ``D_j = |x_j - i|`` of the calibration
values from an ideal ``i`` and a Gaussian bandwidth ``h`` fitted on ``D``. The
score of a new value is the smoothed complementary CDF of its own distance::

    score(x) = 1 - mean_j Phi((|x - i| - D_j) / h)
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import stats
from scipy.special import ndtr

from procscore.activity import ActivityCurve, Event, build_curve
from procscore.deviations import DeviationKind, FeatureDef, deviation, deviation_from_samples, neg_log_jsd, segment_samples
from procscore.errors import EmptySamples, InvalidConfig, InputError, MissingActivity, TooFewSamples
from procscore.kde import GaussianKDE, select_bandwidth, sj_bandwidth  # noqa: F401  (sj_bandwidth re-exported)

PRACTICAL_STATISTICS = ("sup", "inf", "expectation", "mode", "median")
MODE_GRID = 1024
MIN_KS_SAMPLES = 20


@dataclass(frozen=True)
class IdealValue:
    """``utopian`` and ``user`` carry a fixed value; ``practical`` is derived from samples."""

    kind: str
    value: float | None = None
    statistic: str | None = None

    def __post_init__(self):
        if self.kind not in ("utopian", "practical", "user"):
            raise InvalidConfig(f"unknown ideal kind {self.kind!r}")
        if self.kind == "practical":
            if self.statistic not in PRACTICAL_STATISTICS:
                raise InvalidConfig(f"practical ideal needs one of {PRACTICAL_STATISTICS}, got {self.statistic!r}")
        elif self.value is None or not math.isfinite(self.value):
            raise InvalidConfig(f"{self.kind} ideal needs a finite value")

    @classmethod
    def utopian(cls, value: float) -> "IdealValue":
        return cls("utopian", float(value))

    @classmethod
    def practical(cls, statistic: str) -> "IdealValue":
        return cls("practical", statistic=statistic)

    @classmethod
    def user(cls, value: float) -> "IdealValue":
        return cls("user", float(value))

    def to_dict(self) -> dict:
        if self.kind == "practical":
            return {"kind": self.kind, "statistic": self.statistic}
        return {"kind": self.kind, "value": self.value}

    @classmethod
    def from_dict(cls, data: Mapping) -> "IdealValue":
        return cls(data["kind"], data.get("value"), data.get("statistic"))


# ideals used when a feature definition does not name its own
DEFAULT_IDEALS = {
    DeviationKind.CORRELATION: IdealValue.utopian(1.0),
    DeviationKind.JSD: IdealValue.practical("sup"),
    DeviationKind.AREA: IdealValue.utopian(0.0),
}


def resolve_ideal(ideal: IdealValue, samples: Sequence[float] | None = None) -> float:
    if ideal.kind != "practical":
        return float(ideal.value)
    x = np.asarray([] if samples is None else samples, dtype=float)
    if x.size == 0:
        raise EmptySamples(f"practical ideal {ideal.statistic!r} needs samples")
    if ideal.statistic == "sup":
        out = x.max()
    elif ideal.statistic == "inf":
        out = x.min()
    elif ideal.statistic == "expectation":
        out = x.mean()
    elif ideal.statistic == "median":
        out = np.percentile(x, 50.0)
    else:
        if x.size < 2 or np.ptp(x) == 0:
            out = x[0]
        else:
            kde = GaussianKDE.fit(x, "sj")
            grid = np.linspace(x.min(), x.max(), MODE_GRID)
            out = grid[int(np.argmax(kde.logpdf(grid)))]
    if not np.isfinite(out):
        raise EmptySamples("ideal resolved to a non-finite value")
    return float(out)


@dataclass(frozen=True, eq=False)
class ScoreTransform:
    feature_id: str
    ideal: float
    distances: np.ndarray
    bandwidth: float

    def __post_init__(self):
        d = np.sort(np.asarray(self.distances, dtype=float).ravel())
        if d.size == 0 or np.any(d < 0) or not np.all(np.isfinite(d)):
            raise InputError("distances must be a non-empty set of finite nonnegative values")
        if not self.bandwidth > 0:
            raise InputError(f"bandwidth must be positive, got {self.bandwidth}")
        d.setflags(write=False)
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "ideal", float(self.ideal))
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    @property
    def n(self) -> int:
        return int(self.distances.size)

    def score_distance(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        flat = d.reshape(-1)
        out = np.empty(flat.shape)
        step = max(1, 2_000_000 // self.n)
        for s in range(0, flat.size, step):
            z = (flat[s:s + step, None] - self.distances[None, :]) / self.bandwidth
            out[s:s + step] = 1.0 - ndtr(z).mean(axis=1)
        return out.reshape(d.shape)

    def to_dict(self) -> dict:
        return {
            "feature_id": self.feature_id,
            "ideal": self.ideal,
            "distances": self.distances.tolist(),
            "bandwidth": self.bandwidth,
            "n": self.n,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ScoreTransform":
        t = cls(data.get("feature_id", ""), data["ideal"], np.asarray(data["distances"]), data["bandwidth"])
        if "n" in data and int(data["n"]) != t.n:
            raise InputError(f"transform declares n={data['n']} but has {t.n} distances")
        return t

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ScoreTransform":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def to_score(transform: ScoreTransform, x):
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)):
        raise InputError("scores need finite inputs")
    out = transform.score_distance(np.abs(x_arr - transform.ideal))
    return float(out) if out.ndim == 0 else out


def calibrate(raw_values: Sequence[float], ideal: IdealValue, bandwidth_rule="sj", feature_id: str = "") -> ScoreTransform:
    x = np.asarray(raw_values, dtype=float)
    if x.size < 2:
        raise TooFewSamples(f"calibration needs >= 2 values, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise InputError("calibration values must be finite")
    i = resolve_ideal(ideal, x)
    d = np.sort(np.abs(x - i))
    h = select_bandwidth(d, bandwidth_rule)
    return ScoreTransform(feature_id, i, d, h)


def ks_uniformity(scores: Sequence[float]) -> float:
    s = np.asarray(scores, dtype=float)
    if s.size < MIN_KS_SAMPLES:
        raise TooFewSamples(f"KS check needs >= {MIN_KS_SAMPLES} scores, got {s.size}")
    if np.any((s < 0) | (s > 1)):
        raise InputError("scores must lie in [0, 1]")
    return float(stats.kstest(s, "uniform").statistic)


# --- simulation --------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationConfig:
    n_processes: int = 10_000
    seed: int = 0
    events_per_process: tuple = (10, 100)
    bandwidth_rule: str = "sj"
    ideals: Mapping[str, IdealValue] = field(default_factory=dict)  # feature name -> ideal override

    def __post_init__(self):
        lo, hi = self.events_per_process
        if self.n_processes < 10:
            raise InvalidConfig(f"n_processes must be >= 10, got {self.n_processes}")
        if not 1 <= lo <= hi:
            raise InvalidConfig(f"events_per_process must satisfy 1 <= min <= max, got {self.events_per_process}")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig("seed must fit in 64 unsigned bits")
        object.__setattr__(self, "events_per_process", (int(lo), int(hi)))

    def to_dict(self) -> dict:
        return {
            "n_processes": self.n_processes,
            "seed": self.seed,
            "events_per_process": list(self.events_per_process),
            "bandwidth_rule": self.bandwidth_rule,
            "ideals": {k: v.to_dict() for k, v in sorted(self.ideals.items())},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "CalibrationConfig":
        ideals = {k: IdealValue.from_dict(v) for k, v in data.get("ideals", {}).items()}
        return cls(int(data.get("n_processes", 10_000)), int(data.get("seed", 0)),
                   tuple(data.get("events_per_process", (10, 100))),
                   str(data.get("bandwidth_rule", "sj")), ideals)


def simulate_process(config: CalibrationConfig, index: int) -> ActivityCurve:
    """Process ``index`` of the simulation; its random stream depends only on (seed, index)."""
    rng = np.random.default_rng([config.seed, index])
    lo, hi = config.events_per_process
    m = int(rng.integers(lo, hi, endpoint=True))
    times = rng.random(m)
    weights = 1.0 - rng.random(m)  # (0, 1]
    return build_curve([Event(t, w) for t, w in zip(times, weights)], config.bandwidth_rule)


def simulate_processes(config: CalibrationConfig, start: int = 0) -> list[ActivityCurve]:
    return [simulate_process(config, j) for j in range(start, start + config.n_processes)]


def feature_value(fd: FeatureDef, pm_curve: ActivityCurve, curve: ActivityCurve) -> float:
    raw = deviation(fd.kind, pm_curve, curve, fd.segment, fd.grid)
    return neg_log_jsd(raw) if fd.kind is DeviationKind.JSD else raw


def simulated_values(config: CalibrationConfig, pm, feature_defs: Sequence[FeatureDef],
                     curves: Sequence[ActivityCurve] | None = None) -> np.ndarray:
    """Matrix (n_processes, n_features) of calibration values."""
    for fd in feature_defs:
        if fd.activity not in pm:
            raise MissingActivity(f"process model has no curve for activity {fd.activity!r}")
    if curves is None:
        curves = simulate_processes(config)
    # the process-model side is the same for every simulated curve
    pm_samples = [segment_samples(pm[fd.activity], fd.segment, fd.grid) for fd in feature_defs]
    out = np.empty((len(curves), len(feature_defs)))
    for j, curve in enumerate(curves):
        for k, fd in enumerate(feature_defs):
            raw = deviation_from_samples(fd.kind, pm_samples[k], segment_samples(curve, fd.segment, fd.grid), fd.segment)
            out[j, k] = neg_log_jsd(raw) if fd.kind is DeviationKind.JSD else raw
    return out


def calibrate_features(config: CalibrationConfig, pm, feature_defs: Sequence[FeatureDef],
                       values: np.ndarray | None = None) -> dict[str, ScoreTransform]:
    if values is None:
        values = simulated_values(config, pm, feature_defs)
    transforms = {}
    for k, fd in enumerate(feature_defs):
        ideal = config.ideals.get(fd.name, DEFAULT_IDEALS[fd.kind])
        transforms[fd.name] = calibrate(values[:, k], ideal, config.bandwidth_rule, fd.name)
    return transforms


def write_calibration_report(transforms: Mapping[str, ScoreTransform], path: str | Path,
                             comment: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\r\n")
        writer = csv.writer(fh)
        writer.writerow(["feature", "n", "ideal", "h", "min_distance", "max_distance"])
        for name in transforms:
            t = transforms[name]
            writer.writerow([name, t.n, repr(t.ideal), repr(t.bandwidth),
                             repr(float(t.distances[0])), repr(float(t.distances[-1]))])


def save_transforms(transforms: Mapping[str, ScoreTransform], path: str | Path, meta: Mapping | None = None) -> None:
    payload = {"transforms": [transforms[k].to_dict() for k in transforms]}
    if meta:
        payload = {"meta": dict(meta), **payload}
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_transforms(path: str | Path) -> dict[str, ScoreTransform]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    items = data["transforms"] if isinstance(data, dict) and "transforms" in data else data
    if isinstance(items, dict):
        items = [items]
    return {t["feature_id"]: ScoreTransform.from_dict(t) for t in items}
