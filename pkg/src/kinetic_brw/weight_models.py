"""Random weight vector models.

A model describes the law of a finite vector of strictly positive
multiplicative weights. Children of a branching particle are displaced by
the negative logs of one fresh draw, so samplers work in negative-log space
throughout; zero weights (infinite displacement) are dropped at sampling
time and never enter the population.

Models carry optional analytic knowledge used by the spectral module:
closed forms for the moment function phi(theta) = E[sum_j A_j^theta] - 1
and its first two log-weighted derivatives, or a one-parameter integral
representation suited to quadrature. Models without either are evaluated
by Monte Carlo.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError

__all__ = [
    "WeightVector",
    "WeightModel",
    "ParamLaw",
    "sample_weights",
    "builtin_models",
    "kac",
    "deterministic_pair",
    "power_uniform_split",
    "econophysics",
    "user_table",
    "from_sampler",
    "model_from_config",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class WeightVector:
    """One realization of the weight vector, zero entries already removed."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        if w.size and (not np.all(np.isfinite(w)) or np.any(w <= 0.0)):
            raise ValueError("weights must be finite and strictly positive")

    def __len__(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class WeightModel:
    """Samplable weight-vector law plus declared structural knowledge.

    The batch sampler returns (neg_log_weights, counts): a flat float64
    array of -log(weight) values for n draws laid out draw by draw, and the
    per-draw child counts after ghost removal. Samplers must consume the
    random stream in a fixed draw order so runs are reproducible.
    """

    kind: str
    params: dict = field(default_factory=dict)
    nonlattice_declared: Optional[bool] = None
    max_children: Optional[int] = None
    analytic_phi: Optional[Callable[[float], float]] = None
    analytic_phi_prime: Optional[Callable[[float], float]] = None
    analytic_phi_log2: Optional[Callable[[float], float]] = None
    # (weights_of_u, lo, hi): weights_of_u maps a node array u in (lo, hi)
    # to the tuple of weight arrays of a draw parameterized by u ~ U(lo, hi)
    uniform_param_weights: Optional[tuple] = None
    sampler: Callable = None

    def sample_neg_log_batch(self, rng: np.random.Generator, n: int):
        """n independent draws as (neg_log_weights, counts)."""
        nlw, counts = self.sampler(rng, n)
        return _drop_ghosts(nlw, counts)

    def describe(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.kind}({inner})"


def _drop_ghosts(nlw: np.ndarray, counts: np.ndarray):
    """Remove infinite displacements (zero weights) from a flat batch."""
    bad = ~np.isfinite(nlw)
    if not bad.any():
        return nlw, counts
    parent_idx = np.repeat(np.arange(counts.size), counts)
    removed = np.bincount(parent_idx[bad], minlength=counts.size)
    return nlw[~bad], counts - removed


def sample_weights(model: WeightModel, rng: np.random.Generator) -> WeightVector:
    """One realization of the weight vector with zero entries removed."""
    nlw, _ = model.sample_neg_log_batch(rng, 1)
    return WeightVector(np.exp(-nlw))


# ---------------------------------------------------------------------------
# presets


def deterministic_pair(a: float) -> WeightModel:
    """Two equal constant weights (a, a)."""
    if not (math.isfinite(a) and a > 0):
        raise ConfigError("deterministic_pair requires a > 0")
    nla = -math.log(a)
    log_a = math.log(a)

    def sampler(rng, n):
        return np.full(2 * n, nla), np.full(n, 2, dtype=np.int64)

    return WeightModel(
        kind="deterministic_pair",
        params={"a": a},
        nonlattice_declared=False,  # support {a} is contained in a geometric lattice
        max_children=2,
        analytic_phi=lambda th: 2.0 * a**th - 1.0,
        analytic_phi_prime=lambda th: 2.0 * a**th * log_a,
        analytic_phi_log2=lambda th: 2.0 * a**th * log_a**2,
        sampler=sampler,
    )


def power_uniform_split(a: float) -> WeightModel:
    """Weights (U^a, (1-U)^a) with U uniform on (0, 1)."""
    if not (math.isfinite(a) and a > 0):
        raise ConfigError("power_uniform_split requires a > 0")

    def sampler(rng, n):
        u = rng.random(n)
        nlw = np.empty(2 * n)
        with np.errstate(divide="ignore"):  # u = 0 gives a ghost, dropped later
            nlw[0::2] = -a * np.log(u)
            nlw[1::2] = -a * np.log1p(-u)
        return nlw, np.full(n, 2, dtype=np.int64)

    # E[U^(a t)] = 1/(a t + 1); differentiate under the integral for the
    # log-weighted moments.
    def phi(th):
        return 2.0 / (a * th + 1.0) - 1.0

    def phi_prime(th):
        return -2.0 * a / (a * th + 1.0) ** 2

    def phi_log2(th):
        return 4.0 * a * a / (a * th + 1.0) ** 3

    return WeightModel(
        kind="power_uniform_split",
        params={"a": a},
        nonlattice_declared=True,
        max_children=2,
        analytic_phi=phi,
        analytic_phi_prime=phi_prime,
        analytic_phi_log2=phi_log2,
        uniform_param_weights=(lambda u: (u**a, (1.0 - u) ** a), 0.0, 1.0),
        sampler=sampler,
    )


def kac() -> WeightModel:
    """Weights (|sin U|, |cos U|) with U uniform on [0, 2*pi).

    The absolute values are the standard reduction of the signed collision
    weights to nonnegative ones; the sign is absorbed into symmetric initial
    laws. Conservation at exponent 2 holds exactly: A1^2 + A2^2 = 1.
    """

    def sampler(rng, n):
        u = rng.random(n) * TWO_PI
        nlw = np.empty(2 * n)
        with np.errstate(divide="ignore"):  # axis-aligned angles give ghosts
            nlw[0::2] = -np.log(np.abs(np.sin(u)))
            nlw[1::2] = -np.log(np.abs(np.cos(u)))
        return nlw, np.full(n, 2, dtype=np.int64)

    return WeightModel(
        kind="kac",
        params={},
        nonlattice_declared=True,
        max_children=2,
        uniform_param_weights=(
            lambda u: (np.abs(np.sin(u)), np.abs(np.cos(u))),
            0.0,
            TWO_PI,
        ),
        sampler=sampler,
    )


@dataclass(frozen=True)
class ParamLaw:
    """Bounded-support scalar law for trade coefficients: uniform or discrete."""

    kind: str
    lo: float = 0.0
    hi: float = 0.0
    values: tuple = ()
    probs: tuple = ()

    def __post_init__(self):
        if self.kind == "uniform":
            if not (self.lo >= 0 and self.hi > self.lo):
                raise ConfigError("uniform param law needs 0 <= lo < hi")
        elif self.kind == "discrete":
            v = np.asarray(self.values, dtype=np.float64)
            p = np.asarray(self.probs, dtype=np.float64)
            if v.size == 0 or v.size != p.size:
                raise ConfigError("discrete param law needs matching values/probs")
            if np.any(v < 0):
                raise ConfigError("discrete param law values must be >= 0")
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
                raise ConfigError("discrete param law probs must sum to 1")
        else:
            raise ConfigError(f"unknown param law kind {self.kind!r}")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "uniform":
            return self.lo + (self.hi - self.lo) * rng.random(n)
        cum = np.cumsum(np.asarray(self.probs, dtype=np.float64))
        idx = np.searchsorted(cum, rng.random(n), side="right")
        idx = np.minimum(idx, len(self.values) - 1)
        return np.asarray(self.values, dtype=np.float64)[idx]

    def mean(self) -> float:
        if self.kind == "uniform":
            return 0.5 * (self.lo + self.hi)
        return float(np.dot(self.values, self.probs))

    def is_continuous(self) -> bool:
        return self.kind == "uniform"


def econophysics(p1: ParamLaw, q1: ParamLaw, q2: ParamLaw, p2: ParamLaw) -> WeightModel:
    """Wealth-exchange weights (eps*p1 + (1-eps)*q2, eps*q1 + (1-eps)*p2).

    eps is an independent fair Bernoulli coin; the four coefficient laws are
    bounded-support (uniform or discrete). Mean wealth is conserved exactly
    when E[p1 + q1 + q2 + p2] = 2, which makes phi(1) = 0.
    """
    laws = (p1, q1, q2, p2)
    continuous = all(law.is_continuous() for law in laws)

    def sampler(rng, n):
        eps = rng.random(n) < 0.5
        d_p1 = p1.sample(rng, n)
        d_q1 = q1.sample(rng, n)
        d_q2 = q2.sample(rng, n)
        d_p2 = p2.sample(rng, n)
        a1 = np.where(eps, d_p1, d_q2)
        a2 = np.where(eps, d_q1, d_p2)
        nlw = np.empty(2 * n)
        with np.errstate(divide="ignore"):
            nlw[0::2] = -np.log(a1)
            nlw[1::2] = -np.log(a2)
        return nlw, np.full(n, 2, dtype=np.int64)

    return WeightModel(
        kind="econophysics",
        params={"p1": p1, "q1": q1, "q2": q2, "p2": p2},
        nonlattice_declared=True if continuous else None,
        max_children=2,
        sampler=sampler,
    )


def user_table(atoms: Sequence[tuple]) -> WeightModel:
    """Finite mixture of fixed weight vectors.

    atoms is a sequence of (probability, weights) pairs; probabilities must
    sum to 1 within 1e-9 and weights must be strictly positive.
    """
    probs = np.array([float(p) for p, _ in atoms], dtype=np.float64)
    tables = [np.asarray(w, dtype=np.float64) for _, w in atoms]
    if probs.size == 0:
        raise ConfigError("table model needs at least one atom")
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
        raise ConfigError("table probabilities must sum to 1 within 1e-9")
    for w in tables:
        if w.size == 0 or np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ConfigError("table atoms must contain strictly positive finite weights")
    nlw_tables = [-np.log(w) for w in tables]
    lens = np.array([w.size for w in tables], dtype=np.int64)
    cum = np.cumsum(probs)

    def sampler(rng, n):
        if len(tables) == 1:
            idx = np.zeros(n, dtype=np.int64)
        else:
            idx = np.searchsorted(cum, rng.random(n), side="right")
            idx = np.minimum(idx, len(tables) - 1)
        counts = lens[idx]
        offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
        nlw = np.empty(int(counts.sum()))
        for k, row in enumerate(nlw_tables):
            sel = np.nonzero(idx == k)[0]
            for j in range(row.size):
                nlw[offsets[sel] + j] = row[j]
        return nlw, counts

    def exact_sum(weight_fn):
        return float(sum(p * weight_fn(w).sum() for p, w in zip(probs, tables)))

    return WeightModel(
        kind="table",
        params={"atoms": tuple((float(p), tuple(map(float, w))) for p, w in zip(probs, tables))},
        nonlattice_declared=None,
        max_children=int(lens.max()),
        analytic_phi=lambda th: exact_sum(lambda w: w**th) - 1.0,
        analytic_phi_prime=lambda th: exact_sum(lambda w: w**th * np.log(w)),
        analytic_phi_log2=lambda th: exact_sum(lambda w: w**th * np.log(w) ** 2),
        sampler=sampler,
    )


def from_sampler(
    kind: str,
    sampler: Callable,
    max_children: Optional[int] = None,
    nonlattice_declared: Optional[bool] = None,
    params: Optional[dict] = None,
) -> WeightModel:
    """Wrap a user-supplied batch sampler (rng, n) -> (neg_log_weights, counts)."""
    if nonlattice_declared is None:
        warnings.warn(
            f"model {kind!r} has no non-lattice declaration; treating it as unknown",
            stacklevel=2,
        )
    return WeightModel(
        kind=kind,
        params=params or {},
        nonlattice_declared=nonlattice_declared,
        max_children=max_children,
        sampler=sampler,
    )


def builtin_models() -> list[WeightModel]:
    """Default-parameterized instances of every preset."""
    return [
        kac(),
        deterministic_pair(0.5),
        power_uniform_split(2.0),
        econophysics(
            ParamLaw("uniform", 0.5, 1.0),
            ParamLaw("uniform", 0.0, 0.5),
            ParamLaw("uniform", 0.0, 0.5),
            ParamLaw("uniform", 0.5, 1.0),
        ),
        user_table([(1.0, (0.5, 0.5))]),
    ]


# ---------------------------------------------------------------------------
# config parsing


def _param_law_from_config(block: dict, where: str) -> ParamLaw:
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected an object")
    kind = block.get("kind")
    if kind == "uniform":
        _check_keys(block, {"kind", "lo", "hi"}, where)
        return ParamLaw("uniform", lo=float(block["lo"]), hi=float(block["hi"]))
    if kind == "discrete":
        _check_keys(block, {"kind", "values", "probs"}, where)
        return ParamLaw("discrete", values=tuple(block["values"]), probs=tuple(block["probs"]))
    raise ConfigError(f"{where}: unknown param law kind {kind!r}")


def _check_keys(block: dict, allowed: set, where: str):
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def model_from_config(block: dict) -> WeightModel:
    """Build a weight model from the run-config "model" block."""
    if not isinstance(block, dict) or "kind" not in block:
        raise ConfigError("model block must be an object with a 'kind' key")
    kind = block["kind"]
    if kind == "kac":
        _check_keys(block, {"kind"}, "model")
        return kac()
    if kind == "deterministic_pair":
        _check_keys(block, {"kind", "a"}, "model")
        return deterministic_pair(float(block["a"]))
    if kind == "power_uniform_split":
        _check_keys(block, {"kind", "a"}, "model")
        return power_uniform_split(float(block["a"]))
    if kind == "econophysics":
        _check_keys(block, {"kind", "p1", "q1", "q2", "p2"}, "model")
        return econophysics(
            _param_law_from_config(block["p1"], "model.p1"),
            _param_law_from_config(block["q1"], "model.q1"),
            _param_law_from_config(block["q2"], "model.q2"),
            _param_law_from_config(block["p2"], "model.p2"),
        )
    if kind == "table":
        _check_keys(block, {"kind", "atoms"}, "model")
        atoms = block.get("atoms")
        if not isinstance(atoms, list):
            raise ConfigError("model.atoms must be a list")
        parsed = []
        for i, atom in enumerate(atoms):
            if not isinstance(atom, dict):
                raise ConfigError(f"model.atoms[{i}]: expected an object")
            _check_keys(atom, {"p", "w"}, f"model.atoms[{i}]")
            parsed.append((float(atom["p"]), tuple(float(x) for x in atom["w"])))
        return user_table(parsed)
    raise ConfigError(f"unknown model kind {kind!r}")
