"""Additive and derivative martingales and the random shift S.

At the critical exponent (kappa(alpha) = 0) the additive martingale is
W_n = <Z_n, e^{alpha x}>; in the regular case it converges to a
non-degenerate limit S with mean one.  In the boundary case W_n -> 0 and
the shift is instead the limit of the derivative martingale
<Z_n, x e^{alpha x}>, a signed martingale with a non-negative limit.

S is always approximated here by a finite-n martingale value; n is an
explicit parameter carried in the sampler metadata, never hidden.
Negative derivative-martingale values are clamped to zero, and the clamp
rate is exposed as a bias diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .branching import POPULATION_CAP, simulate_positions
from .errors import ClassificationError
from .point_measure import NEG_INF
from .reproduction import ReproductionLaw, classify, mean_offspring_count
from .stats import ks_two_sample, mean_and_se
from .streams import derive_seed, replicate_map

DEFAULT_GENERATIONS = 12


@dataclass(frozen=True)
class ShiftSampler:
    """Law of the non-negative random shift S, with provenance metadata."""

    draw: Callable[[np.random.Generator], float]
    alpha: float
    case: str                          # regular | boundary | constant | scaled
    generations_used: int = 0
    law: Optional[ReproductionLaw] = None
    description: str = ""

    def __call__(self, rng: np.random.Generator) -> float:
        return self.draw(rng)

    def sample(self, reps: int, rng: np.random.Generator, threads: int = 1) -> np.ndarray:
        seed = derive_seed(rng)
        return np.asarray(
            replicate_map(self.draw, reps, seed, threads), dtype=float
        )


def martingale_barrier(
    law: ReproductionLaw,
    alpha: float,
    n: int,
    bias: float = 1e-6,
    linear_factor: bool = False,
) -> float:
    """Barrier whose killing perturbs E<Z_n, w> by at most ``bias``.

    A particle killed at position y would have contributed e^{alpha y}
    expected mass to the additive martingale (times (1+|y|) covers the
    derivative integrand), so the total bias is below
    (1+|L|)^{0/1} e^{alpha L} times the expected number of particles.
    """
    if n == 0:
        return NEG_INF
    mbar = mean_offspring_count(law)
    n_total = sum(mbar**k for k in range(1, n + 1))
    level = math.log(bias / n_total) / alpha
    if linear_factor:
        for _ in range(4):
            level = (math.log(bias / n_total) - math.log1p(abs(level))) / alpha
    return level


def additive_martingale(
    law: ReproductionLaw,
    alpha: float,
    n: int,
    rng: np.random.Generator,
    miss: float = 1e-6,
    cap: int = POPULATION_CAP,
) -> float:
    """One draw of W_n = <Z_n, e^{alpha x}> at a critical alpha."""
    barrier = martingale_barrier(law, alpha, n, miss)
    pos = simulate_positions(law, n, barrier, rng, cap)
    return float(np.exp(alpha * pos).sum())


def derivative_martingale(
    law: ReproductionLaw,
    alpha: float,
    n: int,
    rng: np.random.Generator,
    miss: float = 1e-6,
    cap: int = POPULATION_CAP,
) -> float:
    """One draw of the derivative martingale <Z_n, -x e^{alpha x}>;
    boundary-case laws only.

    Orientation: with weights e^{alpha x} summing to one in expectation,
    the population drifts downward and the signed martingale with
    integrand (-x) e^{alpha x} is the one converging almost surely to a
    non-negative limit, which is the shift the Poisson constructions
    consume.  It starts at 0 and is not uniformly integrable.
    """
    report = classify(law, alpha)
    if report.case != "boundary":
        raise ClassificationError(
            f"derivative martingale requires the boundary case, got {report.case!r}"
        )
    barrier = martingale_barrier(law, alpha, n, miss, linear_factor=True)
    pos = simulate_positions(law, n, barrier, rng, cap)
    return float((-pos * np.exp(alpha * pos)).sum())


def constant_shift(value: float, alpha: float) -> ShiftSampler:
    if value < 0:
        raise ValueError("shift values must be non-negative")
    return ShiftSampler(
        draw=lambda rng: value,
        alpha=alpha,
        case="constant",
        description=f"const[{value:g}]",
    )


def scaled_shift(shift: ShiftSampler, c: float) -> ShiftSampler:
    """The law of c*S."""
    if not c > 0:
        raise ValueError("scale must be positive")
    return ShiftSampler(
        draw=lambda rng: c * shift.draw(rng),
        alpha=shift.alpha,
        case=shift.case,
        generations_used=shift.generations_used,
        law=shift.law,
        description=f"{c:g}*{shift.description}",
    )


def sample_S(
    law: ReproductionLaw,
    alpha: float,
    n: int = DEFAULT_GENERATIONS,
    case: str = "auto",
    miss: float = 1e-6,
    cap: int = POPULATION_CAP,
) -> ShiftSampler:
    """Finite-n approximation of the martingale limit S as a sampler.

    Regular case: additive martingale draws (mean one).  Boundary case:
    derivative martingale draws clamped at zero; quantify the clamping
    with ``clamp_fraction``.
    """
    if case == "auto":
        case = classify(law, alpha).case
    if case == "regular":
        draw = lambda rng: additive_martingale(law, alpha, n, rng, miss, cap)
    elif case == "boundary":
        draw = lambda rng: max(
            derivative_martingale(law, alpha, n, rng, miss, cap), 0.0
        )
    else:
        raise ClassificationError(f"no shift construction for case {case!r}")
    return ShiftSampler(
        draw=draw,
        alpha=alpha,
        case=case,
        generations_used=n,
        law=law,
        description=f"martingale[{case}, n={n}]",
    )


def clamp_fraction(
    law: ReproductionLaw,
    alpha: float,
    n: int,
    reps: int,
    rng: np.random.Generator,
    threads: int = 1,
) -> float:
    """Fraction of derivative-martingale draws below zero at generation n."""
    seed = derive_seed(rng)
    draws = replicate_map(
        lambda r: derivative_martingale(law, alpha, n, r), reps, seed, threads
    )
    return float(np.mean(np.asarray(draws) < 0.0))


@dataclass(frozen=True)
class SmoothingIdentityReport:
    ks_statistic: float
    p_value: float
    reps: int
    mean_left: float
    se_left: float
    mean_right: float
    se_right: float

    @property
    def passed(self) -> bool:
        return self.p_value > 1e-3


def check_smoothing_identity(
    law: ReproductionLaw,
    alpha: float,
    shift: ShiftSampler,
    reps: int,
    rng: np.random.Generator,
    threads: int = 1,
) -> SmoothingIdentityReport:
    """Two-sample KS test of S against sum_j e^{alpha z_j} S^(j).

    Left sample: plain shift draws.  Right sample: one fresh offspring
    draw and independent shift copies per child.  Both sides of a
    replicate use the same stream sequentially, which keeps the variates
    independent while staying reproducible.
    """
    from .reproduction import sample_offspring_positions

    def one(r: np.random.Generator) -> tuple[float, float]:
        left = shift.draw(r)
        z = sample_offspring_positions(law, r)
        right = float(
            sum(math.exp(alpha * zj) * shift.draw(r) for zj in z)
        )
        return left, right

    seed = derive_seed(rng)
    pairs = replicate_map(one, reps, seed, threads)
    left = np.array([p[0] for p in pairs])
    right = np.array([p[1] for p in pairs])
    stat, p = ks_two_sample(left, right)
    ml, sl = mean_and_se(left)
    mr, sr = mean_and_se(right)
    return SmoothingIdentityReport(
        ks_statistic=stat,
        p_value=p,
        reps=reps,
        mean_left=ml,
        se_left=sl,
        mean_right=mr,
        se_right=sr,
    )
