"""Shared statistical machinery.

Two-sample Kolmogorov-Smirnov with the fixed 1% asymptotic gate, percentile
bootstrap intervals, empirical characteristic functions, log-log slope
regression, and an exhaustive-enumeration checker for the power-moment
subadditivity bound used by the solver's moment arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "KSResult",
    "SlopeFit",
    "SubadditivityReport",
    "ks_two_sample",
    "bootstrap_ci",
    "empirical_cf",
    "loglog_slope",
    "check_moment_subadditivity",
]

KS_CRITICAL_CONSTANT_1PCT = 1.628


@dataclass(frozen=True)
class KSResult:
    statistic: float
    n1: int
    n2: int
    critical_1pct: float
    rejected: bool


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> KSResult:
    """Exact sup-distance between the two empirical CDFs.

    The distance is evaluated at every sample point of the merged sample,
    which is where the sup of the difference of two step functions lives.
    """
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    pts = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pts, side="right") / a.size
    cdf_b = np.searchsorted(b, pts, side="right") / b.size
    stat = float(np.max(np.abs(cdf_a - cdf_b)))
    n1, n2 = a.size, b.size
    crit = KS_CRITICAL_CONSTANT_1PCT * math.sqrt((n1 + n2) / (n1 * n2))
    return KSResult(statistic=stat, n1=n1, n2=n2, critical_1pct=crit, rejected=stat > crit)


def bootstrap_ci(values: np.ndarray, statistic: Callable[[np.ndarray], float],
                 n_boot: int = 500, rng: Optional[np.random.Generator] = None,
                 alpha: float = 0.05) -> tuple[float, float]:
    """Percentile bootstrap interval for a statistic of one sample."""
    if rng is None:
        rng = np.random.default_rng(0)
    values = np.asarray(values)
    n = values.size
    if n == 0:
        raise ValueError("empty sample")
    stats = np.empty(n_boot)
    for k in range(n_boot):
        stats[k] = statistic(values[rng.integers(0, n, size=n)])
    lo, hi = np.quantile(stats, [alpha / 2.0, 1.0 - alpha / 2.0])
    return float(lo), float(hi)


def empirical_cf(values: np.ndarray, xi: float) -> complex:
    """Empirical characteristic function at one frequency."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty sample")
    return complex(np.mean(np.exp(1j * xi * values)))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    se: float
    ci_lo: float
    ci_hi: float


def loglog_slope(points: Sequence[tuple]) -> SlopeFit:
    """Least-squares slope of log y against log x with a normal-theory CI."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log regression needs positive coordinates")
    lx, ly = np.log(x), np.log(y)
    n = lx.size
    sxx = np.sum((lx - lx.mean()) ** 2)
    slope = float(np.sum((lx - lx.mean()) * (ly - ly.mean())) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    var = float(np.sum(resid**2) / max(n - 2, 1))
    se = math.sqrt(var / sxx)
    half = 1.959963984540054 * se
    return SlopeFit(slope, intercept, se, slope - half, slope + half)


@dataclass(frozen=True)
class SubadditivityReport:
    gamma: float
    trials: int
    violations: int
    max_ratio: float  # largest observed lhs/rhs, should stay <= 1


def check_moment_subadditivity(gamma: float, trials: int,
                               rng: np.random.Generator) -> SubadditivityReport:
    """Exhaustively verify E|sum X_j|^gamma <= 2 * sum E|X_j|^gamma on random
    small instances.

    Each instance draws up to 6 independent discrete summands with supports
    of 2..4 points; when gamma > 1 every summand is centered first, matching
    the moment-class requirement. The expectations are exact sums over all
    outcome combinations, so a violation would be a genuine counterexample
    within float tolerance, not noise.
    """
    if not (0.0 < gamma <= 2.0):
        raise ValueError("gamma must lie in (0, 2]")
    violations = 0
    max_ratio = 0.0
    for _ in range(trials):
        k = int(rng.integers(1, 7))
        laws = []
        for _ in range(k):
            m = int(rng.integers(2, 5))
            values = rng.uniform(-2.0, 2.0, m)
            raw = rng.random(m) + 1e-3
            probs = raw / raw.sum()
            if gamma > 1.0:
                values = values - float(np.dot(values, probs))
            laws.append((values, probs))
        sums = np.zeros(1)
        pr = np.ones(1)
        for values, probs in laws:
            sums = (sums[:, None] + values[None, :]).ravel()
            pr = (pr[:, None] * probs[None, :]).ravel()
        lhs = float(np.dot(pr, np.abs(sums) ** gamma))
        rhs = 2.0 * sum(float(np.dot(p, np.abs(v) ** gamma)) for v, p in laws)
        if rhs > 0:
            ratio = lhs / rhs
            max_ratio = max(max_ratio, ratio)
            if ratio > 1.0 + 1e-12:
                violations += 1
    return SubadditivityReport(gamma=gamma, trials=trials,
                               violations=violations, max_ratio=max_ratio)
