"""Initial condition presets.

Each law carries a declared integrability index gamma in (0, 2] and a
centering flag. Laws declaring gamma > 1 must be centered; the membership
checker reports the analytic verdict for a queried gamma next to a Monte
Carlo estimate of the absolute moment, but never overrides declarations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError

__all__ = [
    "InitialLaw",
    "MembershipReport",
    "sample_initial",
    "check_membership",
    "point_mass",
    "centered_uniform",
    "gaussian",
    "symmetric_stable",
    "law_from_config",
]


@dataclass(frozen=True)
class InitialLaw:
    kind: str
    params: dict = field(default_factory=dict)
    gamma: float = 2.0
    centered: bool = True
    sampler: Callable = None
    # E|X|^g as a function of g, when a closed form exists
    abs_moment: Optional[Callable[[float], float]] = None
    # analytic finite-absolute-moment predicate for a queried gamma
    moment_finite: Callable[[float], bool] = lambda g: True

    def __post_init__(self):
        if not (0.0 < self.gamma <= 2.0):
            raise ConfigError("declared gamma must lie in (0, 2]")
        if self.gamma > 1.0 and not self.centered:
            raise ConfigError("laws declaring gamma > 1 must be centered")

    def sample(self, rng: np.random.Generator, size=None):
        return self.sampler(rng, size)

    def describe(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.kind}({inner})"


@dataclass(frozen=True)
class MembershipReport:
    member: bool
    gamma: float
    mc_moment: float
    mc_se: float
    analytic_moment: Optional[float]
    n: int


def sample_initial(law: InitialLaw, rng: np.random.Generator, size=None):
    """Draw from the initial law; scalar when size is None."""
    return law.sample(rng, size)


def check_membership(law: InitialLaw, gamma: float, n: int = 100_000, rng=None) -> MembershipReport:
    """Analytic membership verdict for the queried gamma plus an MC moment estimate."""
    if not (0.0 < gamma <= 2.0):
        raise ValueError("gamma must lie in (0, 2]")
    member = law.moment_finite(gamma) and (gamma <= 1.0 or law.centered)
    rng = rng if rng is not None else np.random.default_rng(0)
    x = np.abs(np.asarray(law.sample(rng, n), dtype=np.float64)) ** gamma
    mc = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(n))
    analytic = float(law.abs_moment(gamma)) if law.abs_moment is not None else None
    return MembershipReport(member=member, gamma=gamma, mc_moment=mc, mc_se=se,
                            analytic_moment=analytic, n=n)


def point_mass(c: float, gamma: Optional[float] = None) -> InitialLaw:
    """Degenerate law at c. Centered only when c = 0."""
    centered = c == 0.0
    if gamma is None:
        gamma = 2.0 if centered else 1.0

    def sampler(rng, size):
        if size is None:
            return c
        return np.full(size, float(c))

    return InitialLaw(
        kind="point_mass",
        params={"c": c},
        gamma=gamma,
        centered=centered,
        sampler=sampler,
        abs_moment=lambda g: abs(c) ** g,
    )


def centered_uniform(half_width: float, gamma: float = 2.0) -> InitialLaw:
    """Uniform on (-half_width, half_width)."""
    if half_width <= 0:
        raise ConfigError("half_width must be positive")
    h = float(half_width)

    def sampler(rng, size):
        if size is None:
            return h * (2.0 * rng.random() - 1.0)
        return h * (2.0 * rng.random(size) - 1.0)

    return InitialLaw(
        kind="centered_uniform",
        params={"half_width": h},
        gamma=gamma,
        centered=True,
        sampler=sampler,
        abs_moment=lambda g: h**g / (g + 1.0),
    )


def gaussian(sigma: float, gamma: float = 2.0) -> InitialLaw:
    """Centered normal with standard deviation sigma."""
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    s = float(sigma)

    def sampler(rng, size):
        if size is None:
            return s * rng.standard_normal()
        return s * rng.standard_normal(size)

    def abs_moment(g):
        return s**g * 2.0 ** (g / 2.0) * math.gamma((g + 1.0) / 2.0) / math.sqrt(math.pi)

    return InitialLaw(
        kind="gaussian",
        params={"sigma": s},
        gamma=gamma,
        centered=True,
        sampler=sampler,
        abs_moment=abs_moment,
    )


def symmetric_stable(alpha: float, scale: float = 1.0, gamma: Optional[float] = None) -> InitialLaw:
    """Symmetric alpha-stable law with characteristic function exp(-|scale*xi|^alpha).

    Exact sampling by the polar transformation of a uniform angle and a unit
    exponential; no discretization. The absolute moment of order g is finite
    iff g < alpha, so the declared index defaults to alpha itself (the
    attraction index), while membership checks report the strict verdict.
    """
    if not (0.0 < alpha <= 2.0):
        raise ConfigError("alpha must lie in (0, 2]")
    if scale <= 0:
        raise ConfigError("scale must be positive")
    if gamma is None:
        gamma = alpha
    a = float(alpha)
    c = float(scale)

    def sampler(rng, size):
        n = 1 if size is None else int(size)
        theta = math.pi * (rng.random(n) - 0.5)
        w = rng.standard_exponential(n)
        if a == 1.0:
            x = np.tan(theta)
        else:
            x = (np.sin(a * theta) / np.cos(theta) ** (1.0 / a)) * (
                np.cos((1.0 - a) * theta) / w
            ) ** ((1.0 - a) / a)
        x = c * x
        if size is None:
            return float(x[0])
        return x

    return InitialLaw(
        kind="symmetric_stable",
        params={"alpha": a, "scale": c},
        gamma=gamma,
        centered=True,
        sampler=sampler,
        abs_moment=None,
        moment_finite=lambda g: g < a,
    )


def law_from_config(block: dict) -> InitialLaw:
    """Build an initial law from the run-config "initial" block."""
    if not isinstance(block, dict) or "kind" not in block:
        raise ConfigError("initial block must be an object with a 'kind' key")
    kind = block["kind"]
    known = {
        "point_mass": ({"kind", "c", "gamma"}, lambda b: point_mass(float(b["c"]), b.get("gamma"))),
        "centered_uniform": (
            {"kind", "half_width", "gamma"},
            lambda b: centered_uniform(float(b["half_width"]), float(b.get("gamma", 2.0))),
        ),
        "gaussian": (
            {"kind", "sigma", "gamma"},
            lambda b: gaussian(float(b["sigma"]), float(b.get("gamma", 2.0))),
        ),
        "symmetric_stable": (
            {"kind", "alpha", "scale", "gamma"},
            lambda b: symmetric_stable(
                float(b["alpha"]), float(b.get("scale", 1.0)), b.get("gamma")
            ),
        ),
    }
    if kind not in known:
        raise ConfigError(f"unknown initial law kind {kind!r}")
    allowed, builder = known[kind]
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"initial: unknown keys {sorted(unknown)}")
    return builder(block)
