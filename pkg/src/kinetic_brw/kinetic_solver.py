"""Scaling studies of the random-sum law on a time grid.

A study draws a fresh sample of the time-t sum at every grid point (fully
independent across times, so the Kolmogorov-Smirnov distances between
consecutive sets obey the usual two-sample null), applies the rescaler
t^p * exp(-r*t) picked by the regime classification, and tracks weak
convergence through the consecutive-time KS trajectory, a non-degeneracy
statistic (interquartile range), and empirical characteristic function
values with bootstrap bands.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import brw_engine
from .errors import AnalysisError
from .initial_laws import InitialLaw
from .spectral import RegimeReport, SpectralProfile, classify_regime
from .stats import bootstrap_ci, empirical_cf, ks_two_sample
from .weight_models import WeightModel

__all__ = [
    "SampleSet",
    "CfPoint",
    "ScalingStudyResult",
    "rescale",
    "scaling_study",
    "empirical_cf_curve",
]


@dataclass(frozen=True)
class SampleSet:
    """Scalar samples of one law with the provenance needed to rescale them."""

    values: np.ndarray
    t: float
    scaling: Optional[tuple]  # (p, r) already applied, or None
    seed: Optional[int]
    count: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if v.size != self.count:
            raise ValueError("count must equal the number of values")
        if v.size and not np.all(np.isfinite(v)):
            raise ValueError("sample values must be finite")


def rescale(sample_set: SampleSet, p: float, r: float) -> SampleSet:
    """Multiply every value by t^p * exp(-r*t), recording the exponents.

    Applying a second rescaling is refused; undo-and-redo would silently
    compound floating error.
    """
    if sample_set.scaling is not None:
        raise ValueError("sample set is already rescaled")
    t = sample_set.t
    if t == 0.0 and p != 0.0:
        raise ValueError("t must be positive when p != 0")
    multiplier = t**p * math.exp(-r * t)
    return SampleSet(
        values=sample_set.values * multiplier,
        t=t,
        scaling=(p, r),
        seed=sample_set.seed,
        count=sample_set.count,
    )


@dataclass(frozen=True)
class CfPoint:
    xi: float
    re: float
    im: float
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float


def empirical_cf_curve(sample_set: SampleSet, xi_grid: Sequence[float],
                       bootstrap: int = 500,
                       rng: Optional[np.random.Generator] = None) -> tuple[CfPoint, ...]:
    """Empirical characteristic function on a frequency grid with percentile
    bootstrap bands for the real and imaginary parts."""
    if bootstrap < 1:
        raise ValueError("bootstrap count must be >= 1")
    values = sample_set.values
    if values.size == 0:
        raise ValueError("empty sample set")
    if rng is None:
        rng = np.random.default_rng(0)
    points = []
    for xi in xi_grid:
        z = empirical_cf(values, xi)
        re_lo, re_hi = bootstrap_ci(values, lambda v: float(np.mean(np.cos(xi * v))),
                                    n_boot=bootstrap, rng=rng)
        im_lo, im_hi = bootstrap_ci(values, lambda v: float(np.mean(np.sin(xi * v))),
                                    n_boot=bootstrap, rng=rng)
        points.append(CfPoint(float(xi), z.real, z.imag, re_lo, re_hi, im_lo, im_hi))
    return tuple(points)


@dataclass(frozen=True)
class ScalingStudyResult:
    regime: RegimeReport
    times: tuple
    ks_prev: tuple  # nan at the first grid point
    iqr: tuple
    median_abs: tuple
    mean_unscaled: tuple
    mean_unscaled_se: tuple
    cf: tuple  # per time: tuple of CfPoint
    sets: tuple  # per time: the (rescaled) SampleSet
    converged: bool
    final_ks: float
    iqr_floor_ok: bool


def scaling_study(model: WeightModel, law: InitialLaw, profile: SpectralProfile,
                  t_grid: Sequence[float], n_samples: int, rng: np.random.Generator,
                  cap: int = brw_engine.DEFAULT_CAP, threads: int = 1,
                  xi_grid: Sequence[float] = (0.5, 1.0, 2.0), bootstrap: int = 200,
                  ks_threshold: float = 0.05, iqr_floor: float = 0.1,
                  regime_override: Optional[RegimeReport] = None,
                  seed: Optional[int] = None) -> ScalingStudyResult:
    """Run the rescaled-convergence diagnostic over an increasing time grid.

    Every time point gets a fresh independent sample of the time-t sum,
    rescaled with the regime's exponents (the t = 0 point, if present, is
    left as drawn: it is the initial law itself). The study refuses the
    beyond-boundary regime when theta_star >= 2, where the limit statement
    is out of range, and warns ahead of time grids that a particle cap
    cannot support.
    """
    t_grid = [float(t) for t in t_grid]
    if len(t_grid) < 2:
        raise ValueError("need at least two grid times")
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ValueError("t_grid must be strictly increasing")

    regime = regime_override if regime_override is not None else classify_regime(profile, law.gamma)
    if regime.regime == "beyond_boundary" and profile.theta_star >= 2.0:
        raise AnalysisError(
            f"beyond-boundary study refused: theta_star = {profile.theta_star:.4f} >= 2"
        )

    t_ok = brw_engine.suggested_max_t(model, cap)
    if t_grid[-1] > t_ok:
        warnings.warn(
            f"t = {t_grid[-1]:g} is beyond the comfortable budget for cap {cap} "
            f"(suggested max t: {t_ok:.2f}); replicates may truncate",
            stacklevel=2,
        )

    time_rngs = rng.spawn(len(t_grid))
    sets = []
    ks_prev = []
    iqr = []
    median_abs = []
    means = []
    mean_ses = []
    cf = []
    prev_values = None
    for t, t_rng in zip(t_grid, time_rngs):
        raw = brw_engine.sample_mu_t(model, law, t, n_samples, t_rng, cap, threads, seed=seed)
        means.append(float(raw.values.mean()))
        mean_ses.append(float(raw.values.std(ddof=1) / math.sqrt(raw.count)))
        scaled = rescale(raw, regime.p, regime.r) if t > 0.0 else raw
        q75, q25 = np.percentile(scaled.values, [75.0, 25.0])
        iqr.append(float(q75 - q25))
        median_abs.append(float(np.median(np.abs(scaled.values))))
        ks_prev.append(
            math.nan if prev_values is None
            else ks_two_sample(prev_values, scaled.values).statistic
        )
        cf.append(empirical_cf_curve(scaled, xi_grid, bootstrap, t_rng))
        sets.append(scaled)
        prev_values = scaled.values

    final_ks = ks_prev[-1]
    iqr_ok = iqr[-1] >= iqr_floor * iqr[0]
    return ScalingStudyResult(
        regime=regime,
        times=tuple(t_grid),
        ks_prev=tuple(ks_prev),
        iqr=tuple(iqr),
        median_abs=tuple(median_abs),
        mean_unscaled=tuple(means),
        mean_unscaled_se=tuple(mean_ses),
        cf=tuple(cf),
        sets=tuple(sets),
        converged=bool(final_ks < ks_threshold and iqr_ok),
        final_ks=float(final_ks),
        iqr_floor_ok=bool(iqr_ok),
    )
