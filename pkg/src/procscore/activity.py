"""Activity curves over normalized project time.

A curve is a weighted Gaussian KDE folded onto [0, 1] by reflecting at both
ends. Reflection is done with the full set of mirror images (kernels centred
at ``t + 2k`` and ``-t + 2k``), so the folded density integrates to one on
the unit interval for any bandwidth, not only for narrow kernels.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import ndtr

from procscore.errors import (
    AllZeroWeights,
    DegenerateSample,
    DegenerateTimeRange,
    InputError,
    InvalidSegment,
    LengthMismatch,
    NoEvents,
    OutOfDomain,
    ZeroTotalWeight,
)
from procscore.kde import select_bandwidth

ISSUE_ACTIVITIES = ("req", "dev", "desc")
COMMIT_ACTIVITIES = ("a", "c", "p")
DEFAULT_GRID = 512
# kernels further than this many bandwidths from [0, 1] contribute < 1e-15
_IMAGE_REACH = 8.5
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_UNIFORM_SD = 1.0 / math.sqrt(12.0)
# narrower kernels are not resolvable in float arithmetic on [0, 1]
MIN_BANDWIDTH = 1e-9


@dataclass(frozen=True)
class Event:
    time: float
    weight: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.time <= 1.0:
            raise OutOfDomain(f"event time {self.time} outside [0, 1]")
        if not self.weight >= 0.0:
            raise InputError(f"event weight must be nonnegative, got {self.weight}")


@dataclass(frozen=True)
class IssueRecord:
    activity: str   # req | dev | desc
    time: float
    hours: float

    def __post_init__(self):
        if self.activity not in ISSUE_ACTIVITIES:
            raise InputError(f"unknown issue activity {self.activity!r}")
        if not self.hours > 0:
            raise InputError(f"issue hours must be positive, got {self.hours}")
        if not 0.0 <= self.time <= 1.0:
            raise OutOfDomain(f"issue time {self.time} outside [0, 1]")


@dataclass(frozen=True, eq=False)
class ActivityCurve:
    """Density on [0, 1] as a sum of reflected Gaussian kernels.

    Every kernel carries its own bandwidth so a mixture of curves is again a
    curve. ``weights`` sum to one.
    """

    points: np.ndarray
    weights: np.ndarray
    bandwidths: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        h = np.broadcast_to(np.asarray(self.bandwidths, dtype=float), pts.shape).copy()
        if not (pts.shape == w.shape and pts.size > 0):
            raise LengthMismatch("points and weights must be equally sized and non-empty")
        if np.any(h <= 0) or not np.all(np.isfinite(h)):
            raise InputError("bandwidths must be positive and finite")
        for arr in (pts, w, h):
            arr.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bandwidths", h)

    @property
    def bandwidth(self) -> float:
        """Weight-averaged bandwidth (the single bandwidth for a plain KDE curve)."""
        return float(np.dot(self.weights, self.bandwidths))

    def _kernels(self, lo: float, hi: float):
        """Every mirror image that can reach [lo, hi]: centres, bandwidths, weights.

        Images sit at ``t + 2k`` and ``2k - t``; anything further than
        _IMAGE_REACH bandwidths from the evaluation range is dropped.
        """
        h_max = float(self.bandwidths.max())
        k_max = int(math.ceil((1.0 + _IMAGE_REACH * h_max) / 2.0)) + 1
        shifts = 2.0 * np.arange(-k_max, k_max + 1)
        centres = np.concatenate([self.points[:, None] + shifts, shifts - self.points[:, None]], axis=1)
        reach = _IMAGE_REACH * self.bandwidths[:, None]
        keep = (centres >= lo - reach) & (centres <= hi + reach)
        rows = np.nonzero(keep)[0]
        return centres[keep], self.bandwidths[rows], self.weights[rows]

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        if flat.size == 0:
            return np.zeros(x.shape)
        c, h, w = self._kernels(float(flat.min()), float(flat.max()))
        z = (flat[:, None] - c) / h
        dens = np.exp(-0.5 * z * z) @ (w / h) * _INV_SQRT_2PI
        return dens.reshape(x.shape)

    def cdf(self, x) -> np.ndarray:
        """F(x) = integral of f over [0, x], closed form via normal CDF terms."""
        x = np.asarray(x, dtype=float)
        flat = np.clip(x, 0.0, 1.0).reshape(-1)
        if flat.size == 0:
            return np.zeros(x.shape)
        # only images near [0, max x] put mass into the integral
        c, h, w = self._kernels(0.0, float(flat.max()))
        terms = ndtr((flat[:, None] - c) / h) - ndtr(-c / h)
        out = terms @ w
        return np.clip(out, 0.0, 1.0).reshape(x.shape)

    def to_dict(self) -> dict:
        return {
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
            "bandwidths": self.bandwidths.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ActivityCurve":
        return cls(np.asarray(data["points"]), np.asarray(data["weights"]), np.asarray(data["bandwidths"]))


def normalize_project_time(timestamps: Sequence[float]) -> list[float]:
    ts = np.asarray(timestamps, dtype=float)
    if ts.size == 0:
        raise DegenerateTimeRange("no timestamps")
    lo, hi = ts.min(), ts.max()
    if hi == lo:
        raise DegenerateTimeRange("all timestamps are equal")
    return np.clip((ts - lo) / (hi - lo), 0.0, 1.0).tolist()


def _curve_bandwidth(times: np.ndarray, rule) -> float:
    # bandwidth uses the unweighted event times; weights only scale kernels
    try:
        return max(select_bandwidth(times, rule), MIN_BANDWIDTH)
    except DegenerateSample:
        if isinstance(rule, str) and rule.strip().lower() not in ("sj", "silverman"):
            raise
        # fewer than two distinct times: take the spread of a uniform project
        return 0.9 * _UNIFORM_SD * max(times.size, 1) ** -0.2


def build_curve(events: Iterable[Event], bandwidth_rule="sj") -> ActivityCurve:
    events = list(events)
    if not events:
        raise NoEvents("cannot build a curve from zero events")
    times = np.array([e.time for e in events], dtype=float)
    weights = np.array([e.weight for e in events], dtype=float)
    total = weights.sum()
    if not total > 0:
        raise ZeroTotalWeight("event weights sum to zero")
    keep = weights > 0
    times, weights = times[keep], weights[keep] / total
    # sorting makes the result independent of input order down to the last bit
    order = np.lexsort((weights, times))
    times, weights = times[order], weights[order]
    h = _curve_bandwidth(times, bandwidth_rule)
    return ActivityCurve(times, weights, np.full(times.shape, h))


def cumulative(curve: ActivityCurve, x) -> np.ndarray | float:
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0.0) | (arr > 1.0)) or not np.all(np.isfinite(arr)):
        raise OutOfDomain("cumulative is defined on [0, 1]")
    out = curve.cdf(arr)
    return float(out) if out.ndim == 0 else out


def mixture(curves: Sequence[ActivityCurve], weights: Sequence[float]) -> ActivityCurve:
    if len(curves) != len(weights) or not curves:
        raise LengthMismatch(f"{len(curves)} curves vs {len(weights)} weights")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InputError("mixture weights must be nonnegative and finite")
    if not w.sum() > 0:
        raise AllZeroWeights("mixture weights are all zero")
    w = w / w.sum()
    used = [(c, wi) for c, wi in zip(curves, w) if wi > 0]
    return ActivityCurve(
        np.concatenate([c.points for c, _ in used]),
        np.concatenate([c.weights * wi for c, wi in used]),
        np.concatenate([c.bandwidths for c, _ in used]),
    )


def check_segment(a: float, b: float) -> None:
    if not (0.0 <= a < b <= 1.0):
        raise InvalidSegment(f"segment [{a}, {b}] must satisfy 0 <= a < b <= 1")


def activity_mass(curve: ActivityCurve, segment: Sequence[float]) -> float:
    a, b = float(segment[0]), float(segment[1])
    check_segment(a, b)
    lo, hi = curve.cdf(np.array([a, b]))
    return float(max(hi - lo, 0.0))


@dataclass(frozen=True)
class ProcessModel:
    """One mixture curve per activity plus the project weights behind it."""

    curves: Mapping[str, ActivityCurve]
    project_weights: tuple = ()

    def __getitem__(self, activity: str) -> ActivityCurve:
        return self.curves[activity]

    def __contains__(self, activity: str) -> bool:
        return activity in self.curves

    @classmethod
    def from_projects(cls, projects: Sequence[Mapping[str, ActivityCurve]], weights: Sequence[float]) -> "ProcessModel":
        if len(projects) != len(weights) or not projects:
            raise LengthMismatch(f"{len(projects)} projects vs {len(weights)} weights")
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0):
            raise InputError("project weights must be nonnegative")
        if not w.sum() > 0:
            raise AllZeroWeights("project weights are all zero")
        w = w / w.sum()
        activities = sorted(set().union(*[set(p) for p in projects]))
        curves = {}
        for act in activities:
            members = [(p[act], wi) for p, wi in zip(projects, w) if act in p]
            curves[act] = mixture([c for c, _ in members], [wi for _, wi in members])
        return cls(curves, tuple(float(v) for v in w))

    def to_dict(self) -> dict:
        return {
            "project_weights": list(self.project_weights),
            "curves": {k: self.curves[k].to_dict() for k in sorted(self.curves)},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ProcessModel":
        curves = {k: ActivityCurve.from_dict(v) for k, v in data["curves"].items()}
        return cls(curves, tuple(data.get("project_weights", ())))


# --- I/O ---------------------------------------------------------------------

def read_issue_csv(path: str | Path) -> list[IssueRecord]:
    """Columns ``activity, timestamp, hours``; timestamps normalized per file."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.DictReader(line for line in fh if not line.startswith("#"))]
    if not rows:
        raise NoEvents(f"{path}: no issue rows")
    missing = {"activity", "timestamp", "hours"} - set(rows[0])
    if missing:
        raise InputError(f"{path}: missing columns {sorted(missing)}")
    times = normalize_project_time([float(r["timestamp"]) for r in rows])
    return [IssueRecord(r["activity"].strip().lower(), t, float(r["hours"])) for r, t in zip(rows, times)]


def issue_events(issues: Iterable[IssueRecord]) -> dict[str, list[Event]]:
    out: dict[str, list[Event]] = {}
    for rec in issues:
        out.setdefault(rec.activity, []).append(Event(rec.time, rec.hours))
    return out


def curve_table(curve: ActivityCurve, n: int = DEFAULT_GRID) -> np.ndarray:
    if n < 2:
        raise InputError("grid needs at least 2 points")
    x = np.linspace(0.0, 1.0, n)
    return np.column_stack([x, curve.pdf(x), curve.cdf(x)])


def export_curve_csv(curve: ActivityCurve, path: str | Path, n: int = DEFAULT_GRID, comment: str | None = None) -> None:
    table = curve_table(curve, n)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\r\n")
        writer = csv.writer(fh)
        writer.writerow(["x", "f", "F"])
        for row in table:
            writer.writerow([repr(float(v)) for v in row])


def export_curves_json(curves: Mapping[str, ActivityCurve], path: str | Path, meta: Mapping | None = None) -> None:
    payload = {"curves": {k: curves[k].to_dict() for k in sorted(curves)}}
    if meta:
        payload = {"meta": dict(meta), **payload}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_curves_json(path: str | Path) -> dict[str, ActivityCurve]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return {k: ActivityCurve.from_dict(v) for k, v in data["curves"].items()}


def export_svg(curves: Mapping[str, ActivityCurve], path: str | Path, n: int = 256,
               width: int = 640, height: int = 360) -> None:
    """Minimal line plot of each density, no plotting dependency needed."""
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    x = np.linspace(0.0, 1.0, n)
    ys = {k: curves[k].pdf(x) for k in sorted(curves)}
    top = max(float(y.max()) for y in ys.values()) * 1.05 or 1.0
    pad = 30
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
             'fill="none" stroke="#999"/>']
    for i, (name, y) in enumerate(ys.items()):
        px = pad + x * (width - 2 * pad)
        py = height - pad - y / top * (height - 2 * pad)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        color = palette[i % len(palette)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{width - pad - 60}" y="{pad + 16 * (i + 1)}" fill="{color}">{name}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
