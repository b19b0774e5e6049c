"""Event-driven simulation of the continuous-time branching random walk.

Particles carry a log-scale position; a particle born at time b lives an
independent unit-mean exponential lifetime, then dies and is replaced by one
child per sampled positive weight, displaced by the weight's negative log.
The walk is expanded breadth first, generation by generation: all randomness
is drawn in bulk per generation (weights first, then lifetimes) and the
arithmetic-only expansion runs in the swappable kernel, so results are
identical for the compiled and pure-python kernels and for any thread count.

Positions stay in log scale throughout; exp(-position) terms are only formed
at aggregation time and reduced with numpy's pairwise summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._kernel import expand_generation
from .errors import BudgetError
from .initial_laws import InitialLaw
from .seeding import run_replicates
from .spectral import SpectralProfile, phi as spectral_phi
from .weight_models import WeightModel, WeightVector

__all__ = [
    "DEFAULT_CAP",
    "Particle",
    "PopulationSnapshot",
    "ManyToOneResult",
    "MartingaleReport",
    "simulate_population",
    "simulate_lattice",
    "many_to_one_check",
    "compute_Ut",
    "sample_mu_t",
    "sample_branching_composition",
    "skeleton_diagnostics",
    "suggested_max_t",
]

DEFAULT_CAP = 10_000_000


@dataclass(frozen=True)
class Particle:
    """A single particle record: generation, log-scale position, lifespan."""

    depth: int
    position: float
    birth: float
    death: float

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if not self.death > self.birth:
            raise ValueError("death must be strictly after birth")

    def alive_at(self, t: float) -> bool:
        return self.birth <= t < self.death


def children_of(parent: Particle, weights: WeightVector,
                lifetimes: Sequence[float]) -> list[Particle]:
    """Child records for one death event; children are born as the parent dies."""
    if len(weights) != len(lifetimes):
        raise ValueError("one lifetime per child is required")
    return [
        Particle(
            depth=parent.depth + 1,
            position=parent.position - math.log(w),
            birth=parent.death,
            death=parent.death + e,
        )
        for w, e in zip(weights.weights, lifetimes)
    ]


@dataclass(frozen=True)
class PopulationSnapshot:
    """The alive set at one observation time, as a flat array of positions."""

    t: float
    positions: np.ndarray
    truncated: bool
    particles_processed: int


def simulate_population(model: WeightModel, t: float, rng: np.random.Generator,
                        cap: int = DEFAULT_CAP) -> PopulationSnapshot:
    """Alive positions at time t, grown breadth first from a single ancestor.

    Deterministic given (model, t, rng state). If the total number of
    particles created exceeds cap the snapshot is returned truncated rather
    than raising; consumers that need the exact law must refuse it.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    lifetime = float(rng.standard_exponential())
    processed = 1
    if lifetime > t:
        return PopulationSnapshot(t, np.zeros(1), False, processed)

    pos = np.zeros(1)
    death = np.array([lifetime])
    alive_chunks = []
    truncated = False
    while pos.size:
        nlw, counts = model.sample_neg_log_batch(rng, pos.size)
        if nlw.size == 0:
            break
        lifetimes = rng.standard_exponential(nlw.size)
        alive_pos, pos, death = expand_generation(pos, death, counts, nlw, lifetimes, t)
        processed += nlw.size
        if alive_pos.size:
            alive_chunks.append(np.asarray(alive_pos))
        if processed > cap:
            truncated = True
            break
    positions = np.concatenate(alive_chunks) if alive_chunks else np.empty(0)
    return PopulationSnapshot(t, positions, truncated, processed)


def simulate_lattice(model: WeightModel, delta: float, n_max: int,
                     rng: np.random.Generator, cap: int = DEFAULT_CAP) -> list[np.ndarray]:
    """Alive positions at every lattice time k*delta, k = 1..n_max, on one path.

    Returns a list of position arrays indexed by k-1. Raises on truncation:
    lattice diagnostics have no use for biased paths.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    t_max = delta * n_max
    times = delta * np.arange(1, n_max + 1)
    buckets: list[list] = [[] for _ in range(n_max)]

    pos = np.zeros(1)
    birth = np.zeros(1)
    death = np.array([rng.standard_exponential()])
    processed = 1
    while pos.size:
        for k, tk in enumerate(times):
            sel = (birth <= tk) & (tk < death)
            if sel.any():
                buckets[k].append(pos[sel])
        expand = death <= t_max
        if not expand.any():
            break
        p_pos, p_death = pos[expand], death[expand]
        nlw, counts = model.sample_neg_log_batch(rng, p_pos.size)
        if nlw.size == 0:
            break
        parent_idx = np.repeat(np.arange(counts.size), counts)
        pos = p_pos[parent_idx] + nlw
        birth = p_death[parent_idx]
        death = birth + rng.standard_exponential(nlw.size)
        processed += nlw.size
        if processed > cap:
            raise BudgetError(f"lattice path exceeded the particle budget ({cap})")
    return [np.concatenate(b) if b else np.empty(0) for b in buckets]


@dataclass(frozen=True)
class ManyToOneResult:
    """MC check of the mean weighted mass against its exact exponential value."""

    t: float
    theta: float
    mean: float
    se: float
    target: float
    replicates: int
    truncated_fraction: float
    flagged: bool  # too many truncated replicates to trust the estimate


def many_to_one_check(model: WeightModel, t: float, theta: float, replicates: int,
                      rng: np.random.Generator, cap: int = DEFAULT_CAP,
                      threads: int = 1) -> ManyToOneResult:
    """Estimate E[sum over alive u of exp(-theta*S(u))] and compare to exp(t*phi(theta))."""
    if replicates < 100:
        raise ValueError("need at least 100 replicates")
    rngs = rng.spawn(replicates)

    def one(_i, child):
        snap = simulate_population(model, t, child, cap)
        if snap.truncated:
            return math.nan
        return float(np.sum(np.exp(-theta * snap.positions)))

    values = np.array(run_replicates(one, rngs, threads))
    ok = values[~np.isnan(values)]
    trunc_frac = 1.0 - ok.size / replicates
    target = spectral_phi(model, theta, rng=rng).value
    return ManyToOneResult(
        t=t,
        theta=theta,
        mean=float(ok.mean()),
        se=float(ok.std(ddof=1) / math.sqrt(ok.size)),
        target=math.exp(t * target),
        replicates=replicates,
        truncated_fraction=trunc_frac,
        flagged=trunc_frac > 0.01,
    )


def compute_Ut(snapshot: PopulationSnapshot, law: InitialLaw,
               rng: np.random.Generator) -> float:
    """Attach i.i.d. initial draws to the alive set and form the weighted sum.

    Refuses truncated snapshots: dropping particles would bias the law.
    """
    if snapshot.truncated:
        raise BudgetError("snapshot is truncated; the weighted sum would be biased")
    n = snapshot.positions.size
    if n == 0:
        return 0.0
    x = np.asarray(law.sample(rng, n), dtype=np.float64)
    return float(np.sum(np.exp(-snapshot.positions) * x))


def sample_mu_t(model: WeightModel, law: InitialLaw, t: float, n_samples: int,
                rng: np.random.Generator, cap: int = DEFAULT_CAP, threads: int = 1,
                seed: int = None):
    """n_samples independent draws of the random sum at time t, one fresh
    population each. Any truncated replicate aborts the whole set. The
    optional seed is provenance metadata echoed into the sample set."""
    from .kinetic_solver import SampleSet

    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rngs = rng.spawn(n_samples)

    def one(i, child):
        snap = simulate_population(model, t, child, cap)
        if snap.truncated:
            raise BudgetError(
                f"replicate {i} exceeded the particle budget ({cap}) at t = {t}; "
                f"suggested max t for this cap: {suggested_max_t(model, cap):.2f}"
            )
        return compute_Ut(snap, law, child)

    values = np.array(run_replicates(one, rngs, threads))
    return SampleSet(values=values, t=t, scaling=None, seed=seed, count=n_samples)


def sample_branching_composition(model: WeightModel, law: InitialLaw, t: float, s: float,
                                 n_samples: int, rng: np.random.Generator,
                                 cap: int = DEFAULT_CAP, threads: int = 1):
    """Draws of the time-(t+s) sum built by composition: grow the population
    to time t, then hang an independent time-s sum on every alive particle.

    This is the second sampling route of the branching self-consistency
    identity; it is meant for validation at small t where alive sets are
    small, not for production sampling.
    """
    from .kinetic_solver import SampleSet

    rngs = rng.spawn(n_samples)

    def one(i, child):
        snap = simulate_population(model, t, child, cap)
        if snap.truncated:
            raise BudgetError(f"replicate {i} exceeded the particle budget at t = {t}")
        total = 0.0
        weights = np.exp(-snap.positions)
        for w in weights:
            inner = simulate_population(model, s, child, cap)
            if inner.truncated:
                raise BudgetError(f"replicate {i} exceeded the particle budget at s = {s}")
            total += w * compute_Ut(inner, law, child)
        return total

    values = np.array(run_replicates(one, rngs, threads))
    return SampleSet(values=values, t=t + s, scaling=None, seed=None, count=n_samples)


@dataclass(frozen=True)
class MartingaleReport:
    """Lattice martingale diagnostics: per-step means with standard errors."""

    delta: float
    steps: tuple  # 1..n_max
    w_mean: tuple
    w_se: tuple
    d_mean: tuple
    d_se: tuple
    v2_mean: tuple
    v2_se: tuple
    min_recentred_mean: tuple
    min_recentred_se: tuple
    sigma2: float  # second-moment estimate at the first lattice step


def skeleton_diagnostics(model: WeightModel, profile: SpectralProfile, delta: float,
                         n_max: int, replicates: int, rng: np.random.Generator,
                         cap: int = DEFAULT_CAP, threads: int = 1) -> MartingaleReport:
    """Additive and derivative martingales of the recentred skeleton walk.

    At lattice step k the recentred position of an alive particle is
    v = theta_star * position + k*delta*phi(theta_star). The additive
    martingale sum(exp(-v)) has mean one for every k and the derivative sum
    sum(v*exp(-v)) has mean zero at k = 1; both are estimated across
    replicates together with the second-moment sum and the recentred minimum
    min(v) - (3/2)*log(k).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    ts = profile.theta_star
    phi_ts = profile.phi_at_theta()
    rngs = rng.spawn(replicates)

    def one(_i, child):
        buckets = simulate_lattice(model, delta, n_max, child, cap)
        rows = []
        for k, positions in enumerate(buckets, start=1):
            if positions.size == 0:
                rows.append((0.0, 0.0, 0.0, math.nan))
                continue
            v = ts * positions + k * delta * phi_ts
            ev = np.exp(-v)
            rows.append((
                float(np.sum(ev)),
                float(np.sum(v * ev)),
                float(np.sum(v * v * ev)),
                float(v.min() - 1.5 * math.log(k)),
            ))
        return rows

    per_rep = run_replicates(one, rngs, threads)
    data = np.array(per_rep)  # (replicates, n_max, 4)

    def stats(col):
        vals = data[:, :, col]
        mean = np.nanmean(vals, axis=0)
        n_ok = np.sum(~np.isnan(vals), axis=0)
        se = np.nanstd(vals, axis=0, ddof=1) / np.sqrt(np.maximum(n_ok, 1))
        return tuple(map(float, mean)), tuple(map(float, se))

    w_mean, w_se = stats(0)
    d_mean, d_se = stats(1)
    v2_mean, v2_se = stats(2)
    mn_mean, mn_se = stats(3)
    return MartingaleReport(
        delta=delta,
        steps=tuple(range(1, n_max + 1)),
        w_mean=w_mean,
        w_se=w_se,
        d_mean=d_mean,
        d_se=d_se,
        v2_mean=v2_mean,
        v2_se=v2_se,
        min_recentred_mean=mn_mean,
        min_recentred_se=mn_se,
        sigma2=v2_mean[0],
    )


def suggested_max_t(model: WeightModel, cap: int, safety: float = 10.0) -> float:
    """Largest time with comfortable headroom under the particle cap.

    The mean alive count grows like exp(t*phi(0)); the suggestion keeps the
    expected total safety-fold below the cap.
    """
    phi0 = spectral_phi(model, 0.0, rng=np.random.default_rng(0)).value
    if phi0 <= 0:
        return math.inf
    return math.log(cap / safety) / phi0
