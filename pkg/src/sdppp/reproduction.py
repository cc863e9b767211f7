"""Parametric offspring laws with closed-form cumulant kappa.

Three built-in families:

* ``BinaryGaussian(mu, sigma)``     -- always two children, i.i.d. normal
  displacements; kappa(t) = log 2 + t*mu + t^2 sigma^2 / 2.
* ``PoissonGaussian(m, mu, sigma)`` -- Poisson(m) children (m > 1), normal
  displacements; kappa(t) = log m + t*mu + t^2 sigma^2 / 2.
* ``BinaryDeterministic(a, b)``     -- two children at fixed offsets;
  kappa(t) = log(e^{t a} + e^{t b}).  Lattice by construction, so it only
  serves as a negative control for the non-lattice assumption.

Only closed-form families are supported: the criticality checks below
(sign of the first moment at the critical exponent, log-moment
conditions) are not reliably decidable by Monte Carlo alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ClassificationError, NoCriticalRootError
from .point_measure import NEG_INF, PointMeasure

KAPPA_ROOT_TOL = 1e-9        # |kappa(alpha)| beyond this: invalid report
BOUNDARY_TOL = 1e-9          # |first moment| band for the boundary verdict


@dataclass(frozen=True)
class BinaryGaussian:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class PoissonGaussian:
    m: float
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.m > 1:
            raise ValueError("mean offspring count m must exceed 1")


@dataclass(frozen=True)
class BinaryDeterministic:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("child offsets must be finite")


ReproductionLaw = Union[BinaryGaussian, PoissonGaussian, BinaryDeterministic]


@dataclass(frozen=True)
class CriticalityReport:
    alpha: float
    case: str                    # regular | boundary | supercritical | invalid
    a1_ok: bool
    a3_ok: bool
    first_moment: float          # E sum z_j e^{alpha z_j}
    xlogx_moments_ok: bool
    kappa_at_alpha: float


def mean_offspring_count(law: ReproductionLaw) -> float:
    if isinstance(law, PoissonGaussian):
        return law.m
    return 2.0


def gaussian_step_params(law: ReproductionLaw):
    """(mu, sigma) of the per-child displacement, or None for deterministic laws."""
    if isinstance(law, (BinaryGaussian, PoissonGaussian)):
        return law.mu, law.sigma
    return None


def max_child_offset(law: ReproductionLaw) -> float:
    """Largest possible single-child displacement; +inf for Gaussian laws."""
    if isinstance(law, BinaryDeterministic):
        return max(law.a, law.b)
    return math.inf


def sample_offspring_positions(law: ReproductionLaw, rng: np.random.Generator) -> np.ndarray:
    """Unsorted child displacements of a single particle."""
    if isinstance(law, BinaryGaussian):
        return rng.normal(law.mu, law.sigma, 2)
    if isinstance(law, PoissonGaussian):
        n = rng.poisson(law.m)
        return rng.normal(law.mu, law.sigma, n)
    return np.array([law.a, law.b])


def sample_offspring(law: ReproductionLaw, rng: np.random.Generator) -> PointMeasure:
    """One draw of the offspring point measure (exact, floor -inf)."""
    return PointMeasure(sample_offspring_positions(law, rng), NEG_INF)


def kappa(law: ReproductionLaw, theta: float) -> float:
    """log E sum_j exp(theta z_j)."""
    if isinstance(law, BinaryDeterministic):
        return float(np.logaddexp(theta * law.a, theta * law.b))
    return (
        math.log(mean_offspring_count(law))
        + theta * law.mu
        + 0.5 * theta * theta * law.sigma * law.sigma
    )


def kappa_d1(law: ReproductionLaw, theta: float) -> float:
    if isinstance(law, BinaryDeterministic):
        wa = 1.0 / (1.0 + math.exp(theta * (law.b - law.a)))
        return wa * law.a + (1.0 - wa) * law.b
    return law.mu + theta * law.sigma * law.sigma


def kappa_d2(law: ReproductionLaw, theta: float) -> float:
    if isinstance(law, BinaryDeterministic):
        wa = 1.0 / (1.0 + math.exp(theta * (law.b - law.a)))
        mean = wa * law.a + (1.0 - wa) * law.b
        return wa * (law.a - mean) ** 2 + (1.0 - wa) * (law.b - mean) ** 2
    return law.sigma * law.sigma


def solve_critical_alpha(law: ReproductionLaw, rel_tol: float = 1e-12) -> float:
    """Smallest positive root of kappa; raises if none exists.

    The smallest root always satisfies kappa'(alpha) <= 0 because kappa is
    convex with kappa(0+) = log(mean count) > 0.
    """
    if isinstance(law, (BinaryGaussian, PoissonGaussian)):
        # root of sigma^2 t^2 / 2 + mu t + log m
        logm = math.log(mean_offspring_count(law))
        s2 = law.sigma * law.sigma
        disc = law.mu * law.mu - 2.0 * s2 * logm
        if disc < 0:
            if disc > -1e-9 * max(1.0, law.mu * law.mu):
                disc = 0.0   # double root up to rounding
            else:
                raise NoCriticalRootError(
                    "kappa stays positive on (0, inf): supercritical-only regime"
                )
        if law.mu >= 0:
            raise NoCriticalRootError(
                "non-negative drift keeps kappa positive on (0, inf)"
            )
        return (-law.mu - math.sqrt(disc)) / s2

    # Deterministic family: convex kappa, bracketed bisection.
    if law.a == law.b:
        if law.a >= 0:
            raise NoCriticalRootError("kappa positive for non-negative offsets")
        return math.log(2.0) / (-law.a)
    if law.a + law.b >= 0:
        # kappa' (0) >= 0 and kappa(0) = log 2 > 0: no positive root
        raise NoCriticalRootError("kappa increasing from log 2: no root")
    lo, hi = 0.0, 1.0
    while kappa(law, hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            raise NoCriticalRootError("no sign change found for kappa")
        if kappa_d1(law, hi) >= 0 and kappa(law, hi) > 0:
            raise NoCriticalRootError("kappa minimum is positive: no root")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if kappa(law, mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def is_lattice(law: ReproductionLaw) -> bool:
    """True when every offspring draw lies on a fixed lattice a*Z + b."""
    return isinstance(law, BinaryDeterministic)


def classify(law: ReproductionLaw, alpha: float) -> CriticalityReport:
    """Criticality verdict at a candidate exponent alpha.

    ``first_moment`` is E sum z_j e^{alpha z_j} = kappa'(alpha) e^{kappa(alpha)},
    exact for all built-in families.  The log-moment conditions hold for
    every built-in family (Gaussian tails or bounded support), so the flag
    records that analytic fact.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    k = kappa(law, alpha)
    first = kappa_d1(law, alpha) * math.exp(k)
    if abs(k) > KAPPA_ROOT_TOL:
        return CriticalityReport(
            alpha=alpha, case="invalid", a1_ok=False, a3_ok=not is_lattice(law),
            first_moment=first, xlogx_moments_ok=True, kappa_at_alpha=k,
        )
    if first < -BOUNDARY_TOL:
        case = "regular"
    elif first <= BOUNDARY_TOL:
        case = "boundary"
    else:
        case = "supercritical"
    return CriticalityReport(
        alpha=alpha,
        case=case,
        a1_ok=mean_offspring_count(law) > 1.0,
        a3_ok=not is_lattice(law),
        first_moment=first,
        xlogx_moments_ok=True,
        kappa_at_alpha=k,
    )


def require_case(law: ReproductionLaw, alpha: float, case: str) -> CriticalityReport:
    report = classify(law, alpha)
    if report.case != case:
        raise ClassificationError(
            f"law classifies as {report.case!r} at alpha={alpha}, expected {case!r}"
        )
    return report
