"""Segment-wise deviations between a process-model curve and a project curve."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.special import rel_entr

from procscore.activity import ActivityCurve, check_segment
from procscore.errors import InvalidConfig, InvalidSegment, MissingActivity, ZeroMassSegment

DEFAULT_GRID = 256
MIN_GRID = 8
JSD_FLOOR = 1e-300


class DeviationKind(enum.Enum):
    CORRELATION = "corr"
    JSD = "jsd"
    AREA = "area"

    @classmethod
    def parse(cls, value) -> "DeviationKind":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        aliases = {"segmentcorrelation": "corr", "segmentjsd": "jsd", "segmentarea": "area"}
        return cls(aliases.get(text, text))


@dataclass(frozen=True)
class Segment:
    a: float
    b: float
    label: str = ""

    def __post_init__(self):
        check_segment(self.a, self.b)
        if not self.label:
            object.__setattr__(self, "label", f"{self.a:g}-{self.b:g}")


@dataclass(frozen=True)
class FeatureDef:
    activity: str
    kind: DeviationKind
    segment: Segment
    grid: int = DEFAULT_GRID

    @property
    def name(self) -> str:
        return f"{self.kind.value}:{self.activity}:{self.segment.label}"

    def to_dict(self) -> dict:
        return {"activity": self.activity, "kind": self.kind.value,
                "segment": [self.segment.a, self.segment.b], "grid": self.grid}

    @classmethod
    def from_dict(cls, data: Mapping) -> "FeatureDef":
        a, b = data["segment"]
        grid = int(data.get("grid", DEFAULT_GRID))
        if grid < MIN_GRID:
            raise InvalidConfig(f"feature grid must be >= {MIN_GRID}, got {grid}")
        return cls(str(data["activity"]), DeviationKind.parse(data["kind"]),
                   Segment(float(a), float(b), data.get("label", "")), grid)


@dataclass(frozen=True)
class DeviationValue:
    kind: DeviationKind
    segment: Segment
    raw: float          # correlation, divergence or area
    grid_points: int
    activity: str = ""

    @property
    def value(self) -> float:
        """The quantity that gets calibrated; for JSD this is -ln(divergence)."""
        return neg_log_jsd(self.raw) if self.kind is DeviationKind.JSD else self.raw


def _segment(segment) -> Segment:
    if isinstance(segment, Segment):
        return segment
    a, b = segment
    return Segment(float(a), float(b))


def segment_samples(curve: ActivityCurve, segment, n: int = DEFAULT_GRID) -> np.ndarray:
    seg = _segment(segment)
    if n < 2:
        raise InvalidSegment(f"need at least 2 grid points, got {n}")
    return curve.pdf(np.linspace(seg.a, seg.b, n))


def _check_grid(n: int) -> None:
    if n < MIN_GRID:
        raise InvalidConfig(f"deviation features need a grid of >= {MIN_GRID} points, got {n}")


def correlation(u: np.ndarray, v: np.ndarray) -> float:
    """Pearson r; zero when either vector is constant."""
    du, dv = u - u.mean(), v - v.mean()
    su, sv = math.sqrt(float(du @ du)), math.sqrt(float(dv @ dv))
    # relative test so float noise on a flat curve does not count as variance
    if su <= 1e-12 * max(1.0, float(np.abs(u).max())) * math.sqrt(u.size) or \
            sv <= 1e-12 * max(1.0, float(np.abs(v).max())) * math.sqrt(v.size):
        return 0.0
    return float(np.clip((du @ dv) / (su * sv), -1.0, 1.0))


def jensen_shannon(p: np.ndarray, q: np.ndarray, base: float = math.e) -> float:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    sp, sq = p.sum(), q.sum()
    if not (sp > 0 and sq > 0):
        raise ZeroMassSegment("a curve has zero mass on the segment")
    p, q = p / sp, q / sq
    m = 0.5 * (p + q)
    d = 0.5 * rel_entr(p, m).sum() + 0.5 * rel_entr(q, m).sum()
    d = min(max(float(d), 0.0), math.log(2.0))
    return d / math.log(base)


def segment_correlation(pm: ActivityCurve, p: ActivityCurve, segment, n: int = DEFAULT_GRID) -> float:
    _check_grid(n)
    return correlation(segment_samples(pm, segment, n), segment_samples(p, segment, n))


def segment_jsd(pm: ActivityCurve, p: ActivityCurve, segment, n: int = DEFAULT_GRID, base: float = math.e) -> float:
    _check_grid(n)
    return jensen_shannon(segment_samples(pm, segment, n), segment_samples(p, segment, n), base)


def neg_log_jsd(d: float) -> float:
    return -math.log(max(float(d), JSD_FLOOR))


def area_between(u: np.ndarray, v: np.ndarray, a: float, b: float) -> float:
    x = np.linspace(a, b, len(u))
    return float(np.trapezoid(np.abs(u - v), x))


def segment_area(pm: ActivityCurve, p: ActivityCurve, segment, n: int = DEFAULT_GRID) -> float:
    _check_grid(n)
    seg = _segment(segment)
    return area_between(segment_samples(pm, seg, n), segment_samples(p, seg, n), seg.a, seg.b)


def deviation_from_samples(kind: DeviationKind, u: np.ndarray, v: np.ndarray, segment) -> float:
    """Raw deviation between two curves already sampled on the segment grid."""
    seg = _segment(segment)
    _check_grid(len(u))
    kind = DeviationKind.parse(kind)
    if kind is DeviationKind.CORRELATION:
        return correlation(u, v)
    if kind is DeviationKind.JSD:
        return jensen_shannon(u, v)
    return area_between(u, v, seg.a, seg.b)


def deviation(kind: DeviationKind, pm: ActivityCurve, p: ActivityCurve, segment, n: int = DEFAULT_GRID) -> float:
    return deviation_from_samples(kind, segment_samples(pm, segment, n), segment_samples(p, segment, n), segment)


def compute_all(pm_set, project_curves: Mapping[str, ActivityCurve], feature_defs: Sequence[FeatureDef]) -> list[DeviationValue]:
    out = []
    for fd in feature_defs:
        if fd.activity not in pm_set:
            raise MissingActivity(f"process model has no curve for activity {fd.activity!r}")
        if fd.activity not in project_curves:
            raise MissingActivity(f"project has no curve for activity {fd.activity!r}")
        raw = deviation(fd.kind, pm_set[fd.activity], project_curves[fd.activity], fd.segment, fd.grid)
        out.append(DeviationValue(fd.kind, fd.segment, raw, fd.grid, fd.activity))
    return out


def load_feature_defs(path: str | Path) -> list[FeatureDef]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return [FeatureDef.from_dict(d) for d in data]


def save_feature_defs(defs: Sequence[FeatureDef], path: str | Path) -> None:
    Path(path).write_text(json.dumps([d.to_dict() for d in defs], indent=2) + "\n", encoding="utf-8")


def default_feature_defs(activity: str = "req") -> list[FeatureDef]:
    """Correlation early, divergence mid-project, area late; all on one activity."""
    return [
        FeatureDef(activity, DeviationKind.CORRELATION, Segment(0.1, 0.3)),
        FeatureDef(activity, DeviationKind.JSD, Segment(0.4, 0.6)),
        FeatureDef(activity, DeviationKind.AREA, Segment(0.7, 0.9)),
    ]
