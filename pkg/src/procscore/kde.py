"""Gaussian kernel density helpers and bandwidth selectors.

The Sheather-Jones selector is the "solve-the-equation" plug-in variant.
Pairwise sums are computed exactly for moderate sample sizes and on a
1000-bin grid of pairwise bin distances above that, the same binning
scheme used by R's ``bw.SJ``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from procscore.errors import DegenerateSample

SQRT_2PI = math.sqrt(2.0 * math.pi)

# exact pairwise sums up to this many samples; binned above
EXACT_PAIRWISE_MAX_N = 256
N_BINS = 1000
# squared scaled distances are capped here; kernel terms beyond it are negligible
DELMAX = 1000.0


def _scale(x: np.ndarray) -> float:
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    return min(sd, float(q75 - q25) / 1.349)


def silverman_bandwidth(samples: Sequence[float]) -> float:
    """0.9 * min(sd, IQR/1.34) * n^(-1/5); falls back to sd when IQR is zero."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise DegenerateSample("need at least 2 samples for a bandwidth")
    sd = float(np.std(x, ddof=1))
    # equal values can leave a rounding-level sd, so test the range exactly
    if not np.isfinite(sd) or sd <= 0.0 or np.ptp(x) == 0.0:
        raise DegenerateSample("zero-variance sample")
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, float(q75 - q25) / 1.34)
    if spread <= 0.0:
        spread = sd
    return 0.9 * spread * x.size ** (-0.2)


class _PairSums:
    """Pairwise-difference sums of the 4th/6th Gaussian derivatives."""

    def __init__(self, x: np.ndarray):
        self.n = x.size
        if self.n <= EXACT_PAIRWISE_MAX_N:
            i, j = np.triu_indices(self.n, k=1)
            self.dist = np.abs(x[i] - x[j])
            self.count = None
        else:
            lo, hi = float(x.min()), float(x.max())
            dd = (hi - lo) * 1.01 / N_BINS
            idx = np.minimum(((x - lo) / dd).astype(np.int64), N_BINS - 1)
            c = np.bincount(idx, minlength=N_BINS).astype(float)
            full = np.correlate(c, c, mode="full")[N_BINS - 1:]
            full[0] = float(np.sum(c * (c - 1.0)) / 2.0)
            keep = full > 0
            self.dist = np.arange(N_BINS, dtype=float)[keep] * dd
            self.count = full[keep]

    def _sum(self, values: np.ndarray) -> float:
        if self.count is None:
            return float(values.sum())
        return float(np.dot(values, self.count))

    def phi4(self, h: float) -> float:
        d2 = np.minimum((self.dist / h) ** 2, DELMAX)
        terms = np.exp(-d2 / 2.0) * (d2 * d2 - 6.0 * d2 + 3.0)
        s = 2.0 * self._sum(terms) + 3.0 * self.n
        return s / (self.n * (self.n - 1) * h**5 * SQRT_2PI)

    def phi6(self, h: float) -> float:
        d2 = np.minimum((self.dist / h) ** 2, DELMAX)
        terms = np.exp(-d2 / 2.0) * (d2**3 - 15.0 * d2 * d2 + 45.0 * d2 - 15.0)
        s = 2.0 * self._sum(terms) - 15.0 * self.n
        return s / (self.n * (self.n - 1) * h**7 * SQRT_2PI)


def sj_bandwidth(samples: Sequence[float]) -> float:
    """Sheather-Jones solve-the-equation bandwidth.

    Raises DegenerateSample for fewer than 5 samples, zero spread, or when
    the pilot estimates are unusable; callers wanting a fallback should use
    :func:`select_bandwidth`.
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 5:
        raise DegenerateSample(f"Sheather-Jones needs >= 5 samples, got {n}")
    if not np.all(np.isfinite(x)):
        raise DegenerateSample("non-finite samples")
    scale = _scale(x)
    if not scale > 0.0:
        raise DegenerateSample("zero spread (sd or IQR) in sample")

    sums = _PairSums(x)
    a = 1.24 * scale * n ** (-1.0 / 7.0)
    b = 1.23 * scale * n ** (-1.0 / 9.0)
    c1 = 1.0 / (2.0 * math.sqrt(math.pi) * n)
    td = -sums.phi6(b)
    if not np.isfinite(td) or td <= 0.0:
        raise DegenerateSample("sample too sparse to estimate the 6th-derivative functional")
    sd_a = sums.phi4(a)
    alph2 = 1.357 * (sd_a / td) ** (1.0 / 7.0)
    if not np.isfinite(alph2) or alph2 <= 0.0:
        raise DegenerateSample("pilot bandwidth is not finite")

    def equation(h: float) -> float:
        s = sums.phi4(alph2 * h ** (5.0 / 7.0))
        if s <= 0.0:
            return -h
        return (c1 / s) ** 0.2 - h

    hmax = 1.144 * scale * n ** (-0.2)
    lower, upper = 0.1 * hmax, hmax
    f_lo, f_hi = equation(lower), equation(upper)
    tries = 1
    while f_lo * f_hi > 0.0:
        if tries > 99:
            raise DegenerateSample("no sign change while bracketing the SJ root")
        if tries % 2:
            upper *= 1.2
            f_hi = equation(upper)
        else:
            lower /= 1.2
            f_lo = equation(lower)
        tries += 1
    return float(brentq(equation, lower, upper, xtol=lower * 1e-12, rtol=1e-13))


def select_bandwidth(samples: Sequence[float], rule: str | float = "sj") -> float:
    """Resolve a bandwidth rule: ``"sj"``, ``"silverman"`` or a fixed positive float.

    SJ falls back to Silverman on degenerate samples (including n < 5);
    zero-variance samples raise DegenerateSample either way.
    """
    if isinstance(rule, (int, float)) and not isinstance(rule, bool):
        if not rule > 0:
            raise DegenerateSample(f"fixed bandwidth must be positive, got {rule}")
        return float(rule)
    rule = parse_bandwidth_rule(rule)
    if isinstance(rule, float):
        return rule
    if rule == "sj":
        try:
            return sj_bandwidth(samples)
        except DegenerateSample:
            return silverman_bandwidth(samples)
    return silverman_bandwidth(samples)


def parse_bandwidth_rule(rule: str | float) -> str | float:
    """Accepts ``sj``, ``silverman``, ``fixed(h)`` or a number."""
    if isinstance(rule, (int, float)) and not isinstance(rule, bool):
        return float(rule)
    text = str(rule).strip().lower()
    if text in ("sj", "silverman"):
        return text
    if text.startswith("fixed(") and text.endswith(")"):
        h = float(text[6:-1])
        if h <= 0:
            raise DegenerateSample(f"fixed bandwidth must be positive, got {h}")
        return h
    try:
        h = float(text)
    except ValueError:
        raise ValueError(f"unknown bandwidth rule {rule!r}") from None
    if h <= 0:
        raise DegenerateSample(f"fixed bandwidth must be positive, got {h}")
    return h


@dataclass(frozen=True)
class GaussianKDE:
    """Unbounded univariate Gaussian KDE with equal point weights."""

    points: tuple[float, ...]
    bandwidth: float

    @classmethod
    def fit(cls, samples: Sequence[float], rule: str | float = "sj") -> "GaussianKDE":
        x = np.asarray(samples, dtype=float)
        return cls(tuple(float(v) for v in x), select_bandwidth(x, rule))

    def logpdf(self, x) -> np.ndarray:
        pts = np.asarray(self.points, dtype=float)
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        z = (xs[:, None] - pts[None, :]) / self.bandwidth
        out = logsumexp(-0.5 * z * z, axis=1) - math.log(pts.size * self.bandwidth * SQRT_2PI)
        return out

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def to_dict(self) -> dict:
        return {"points": list(self.points), "bandwidth": self.bandwidth}

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianKDE":
        return cls(tuple(float(v) for v in data["points"]), float(data["bandwidth"]))
