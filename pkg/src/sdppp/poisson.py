"""Exponential-intensity Poisson processes, decorations, and SDPPPs.

The shifted decorated Poisson point process with shift variable S,
intensity e^{-alpha x} dx, and decoration law D superposes independent
decoration draws translated to log(S)/alpha + xi_i, where (xi_i) are the
Poisson atoms.  With the decoration normalized to have its largest atom
at zero, every cluster whose top exceeds the requested floor is kept, so
sampling is exact above the floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .branching import POPULATION_CAP, MeasureSampler
from .errors import PopulationCapError
from .martingale import ShiftSampler
from .point_measure import NEG_INF, PointMeasure
from .stats import mean_and_se
from .streams import derive_seed, replicate_map


def sample_ppp_exponential(
    alpha: float,
    floor: float,
    rng: np.random.Generator,
    cap: int = POPULATION_CAP,
) -> PointMeasure:
    """Poisson point process with intensity e^{-alpha x} dx above ``floor``.

    The total mass above the floor is e^{-alpha*floor}/alpha, the count is
    Poisson with that mean, and each atom sits at floor plus an
    exponential of rate alpha.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if not math.isfinite(floor):
        raise ValueError("floor must be finite")
    mass = math.exp(-alpha * floor) / alpha
    if mass > 4.0 * cap:
        raise PopulationCapError(
            f"expected atom count {mass:.3g} exceeds the cap {cap}"
        )
    n = int(rng.poisson(mass))
    if n > cap:
        raise PopulationCapError(f"atom count {n} exceeds the cap {cap}")
    atoms = floor + rng.exponential(1.0 / alpha, n)
    return PointMeasure(np.sort(atoms)[::-1], floor, _trusted=True)


def ppp_sampler(alpha: float, floor: float, cap: int = POPULATION_CAP) -> MeasureSampler:
    return MeasureSampler(
        draw=lambda rng: sample_ppp_exponential(alpha, floor, rng, cap),
        declared_floor=floor,
        description=f"ppp[alpha={alpha:g}, floor={floor:g}]",
    )


@dataclass(frozen=True)
class DecorationLaw:
    """Law of the decoration: explicit finite mixture or black-box sampler.

    ``normalized`` asserts that every draw has its largest atom exactly at
    zero.  ``window`` bounds the atom range: all atoms lie within
    [max - window, max] almost surely (exact for mixtures, declared for
    samplers).
    """

    mixture: Optional[tuple[tuple[float, PointMeasure], ...]] = None
    sampler: Optional[MeasureSampler] = None
    normalized: bool = False
    window: float = 0.0

    def __post_init__(self):
        if (self.mixture is None) == (self.sampler is None):
            raise ValueError("provide exactly one of mixture or sampler")
        if self.mixture is not None:
            probs = np.array([p for p, _ in self.mixture])
            if probs.size == 0 or (probs <= 0).any():
                raise ValueError("mixture probabilities must be positive")
            if abs(probs.sum() - 1.0) > 1e-9:
                raise ValueError("mixture probabilities must sum to one")
            for _, comp in self.mixture:
                if comp.is_null:
                    raise ValueError("mixture components must carry atoms")
            if self.normalized and any(
                comp.max_atom() != 0.0 for _, comp in self.mixture
            ):
                raise ValueError("normalized decorations must have max atom 0")
            width = max(
                comp.max_atom() - float(comp.atoms.min()) for _, comp in self.mixture
            )
            object.__setattr__(self, "window", width)

    @classmethod
    def from_mixture(cls, pairs, normalized: bool | None = None) -> "DecorationLaw":
        comps = tuple(
            (float(p), m if isinstance(m, PointMeasure) else PointMeasure(m))
            for p, m in pairs
        )
        if normalized is None:
            normalized = all(c.max_atom() == 0.0 for _, c in comps)
        return cls(mixture=comps, normalized=normalized)

    @classmethod
    def dirac_origin(cls) -> "DecorationLaw":
        return cls.from_mixture([(1.0, PointMeasure([0.0]))])

    @classmethod
    def from_sampler(cls, sampler: MeasureSampler, window: float,
                     normalized: bool = False) -> "DecorationLaw":
        law = cls(sampler=sampler, normalized=normalized)
        object.__setattr__(law, "window", float(window))
        return law

    def draw(self, rng: np.random.Generator) -> PointMeasure:
        if self.mixture is not None:
            probs = [p for p, _ in self.mixture]
            idx = rng.choice(len(self.mixture), p=probs)
            return self.mixture[idx][1]
        return self.sampler.draw(rng)


def normalize_decoration(
    raw: DecorationLaw,
    alpha: float,
    budget: int = 2000,
    rng: Optional[np.random.Generator] = None,
) -> tuple[float, DecorationLaw]:
    """Exponential change of measure sending a decoration onto max-at-zero
    support.

    Returns (c, star) with c = E e^{alpha * max D}; under star, outcomes are
    reweighted by e^{alpha max}/c and recentred at their max.  Mixtures are
    transformed exactly; sampler laws go through self-normalized importance
    resampling over ``budget`` draws (the star mixture then carries an
    ``ess`` effective-sample-size diagnostic in its components' weights).
    """
    if raw.normalized:
        return 1.0, raw
    if raw.mixture is not None:
        weights = np.array(
            [p * math.exp(alpha * comp.max_atom()) for p, comp in raw.mixture]
        )
        if not np.isfinite(weights).all():
            raise ValueError("diverging exponential weights; c is infinite")
        c = float(weights.sum())
        star = tuple(
            (float(w / c), comp.translate(-comp.max_atom()))
            for w, (_, comp) in zip(weights, raw.mixture)
        )
        return c, DecorationLaw(mixture=star, normalized=True)
    if rng is None:
        raise ValueError("sampler-based normalization needs an rng")
    draws = [raw.sampler.draw(rng) for _ in range(budget)]
    draws = [d for d in draws if not d.is_null]
    if not draws:
        raise ValueError("sampler produced only null measures")
    w = np.array([math.exp(alpha * d.max_atom()) for d in draws])
    if not np.isfinite(w).all() or w.sum() == 0.0:
        raise ValueError("diverging exponential weights; c estimate is infinite")
    c = float(w.mean())
    ess = float(w.sum() ** 2 / np.square(w).sum())
    if ess < 30.0:
        raise ValueError(
            f"importance resampling collapsed (effective sample size {ess:.1f})"
        )
    probs = w / w.sum()
    star = tuple(
        (float(p), d.translate(-d.max_atom())) for p, d in zip(probs, draws) if p > 0
    )
    return c, DecorationLaw(mixture=star, normalized=True)


def sample_sdppp(
    shift: ShiftSampler,
    alpha: float,
    decoration: DecorationLaw,
    floor: float,
    rng: np.random.Generator,
    cap: int = POPULATION_CAP,
) -> PointMeasure:
    """One draw of the SDPPP, exact above ``floor``.

    A zero shift draw maps to log 0 = -inf and yields the null measure
    (extinction convention).  The Poisson atoms are taken above
    floor - log(S)/alpha, so exactly the clusters whose maximum clears the
    floor are produced; atoms of kept clusters falling below the floor are
    discarded and the floor is recorded.
    """
    if not decoration.normalized:
        raise ValueError("decoration must be normalized (max atom 0); "
                         "use normalize_decoration first")
    s = float(shift.draw(rng))
    if s < 0:
        raise ValueError("shift draws must be non-negative")
    if s == 0.0:
        return PointMeasure((), floor)
    offset = math.log(s) / alpha
    centers = sample_ppp_exponential(alpha, floor - offset, rng, cap).atoms + offset
    if centers.size == 0:
        return PointMeasure((), floor)
    parts = []
    total = 0
    for xi in centers:
        dec = decoration.draw(rng)
        part = dec.atoms + xi
        total += part.size
        if total > cap:
            raise PopulationCapError(f"SDPPP population {total} exceeds the cap {cap}")
        parts.append(part)
    atoms = np.concatenate(parts)
    atoms = atoms[atoms >= floor]
    return PointMeasure(np.sort(atoms)[::-1], floor, _trusted=True)


def sdppp_sampler(
    shift: ShiftSampler,
    alpha: float,
    decoration: DecorationLaw,
    floor: float,
    cap: int = POPULATION_CAP,
) -> MeasureSampler:
    return MeasureSampler(
        draw=lambda rng: sample_sdppp(shift, alpha, decoration, floor, rng, cap),
        declared_floor=floor,
        description=f"sdppp[{shift.description}, alpha={alpha:g}, floor={floor:g}]",
    )


def cox_sampler(
    shift: ShiftSampler,
    c: float,
    alpha: float,
    floor: float,
    cap: int = POPULATION_CAP,
) -> MeasureSampler:
    """Cox process with intensity c * S * e^{-alpha x} dx above ``floor``."""

    def draw(rng: np.random.Generator) -> PointMeasure:
        s = float(shift.draw(rng))
        mass = c * s * math.exp(-alpha * floor) / alpha
        if mass > 4.0 * cap:
            raise PopulationCapError(f"expected count {mass:.3g} exceeds cap {cap}")
        n = int(rng.poisson(mass))
        if n > cap:
            raise PopulationCapError(f"atom count {n} exceeds the cap {cap}")
        atoms = floor + rng.exponential(1.0 / alpha, n)
        return PointMeasure(np.sort(atoms)[::-1], floor, _trusted=True)

    return MeasureSampler(
        draw=draw,
        declared_floor=floor,
        description=f"cox[c={c:g}, {shift.description}, alpha={alpha:g}, floor={floor:g}]",
    )


def max_cdf_semi_analytic(
    c: float,
    shift: ShiftSampler,
    alpha: float,
    x: float,
    reps: int,
    rng: np.random.Generator,
    threads: int = 1,
) -> tuple[float, float]:
    """Monte Carlo value and standard error of E exp(-c S e^{-alpha x}).

    For an SDPPP(S, e^{-alpha x}dx, D) the maximum satisfies
    P(max <= x) = E exp(-c_m S e^{-alpha x}) with c_m = E[e^{alpha max D}]/alpha;
    pass that constant as ``c``.
    """
    seed = derive_seed(rng)
    vals = replicate_map(
        lambda r: math.exp(-c * shift.draw(r) * math.exp(-alpha * x)),
        reps, seed, threads,
    )
    return mean_and_se(vals)


def max_cdf_curve(
    c: float,
    shift: ShiftSampler,
    alpha: float,
    xs,
    reps: int,
    rng: np.random.Generator,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """The semi-analytic max CDF on a grid, sharing shift draws across it."""
    xs = np.asarray(xs, dtype=float)
    s = shift.sample(reps, rng, threads)
    vals = np.exp(-c * np.outer(np.exp(-alpha * xs), s))
    return vals.mean(axis=1), vals.std(axis=1, ddof=1) / math.sqrt(reps)


def estimate_g(
    shift: ShiftSampler,
    alpha: float,
    x: float,
    reps: int,
    rng: np.random.Generator,
    threads: int = 1,
) -> tuple[float, float]:
    """Monte Carlo value and standard error of g(x) = E exp(-S e^{alpha x})."""
    seed = derive_seed(rng)
    vals = replicate_map(
        lambda r: math.exp(-shift.draw(r) * math.exp(alpha * x)),
        reps, seed, threads,
    )
    return mean_and_se(vals)


def estimate_g_curve(
    shift: ShiftSampler,
    alpha: float,
    xs,
    reps: int,
    rng: np.random.Generator,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """g on a grid with common shift draws across the grid points."""
    xs = np.asarray(xs, dtype=float)
    s = shift.sample(reps, rng, threads)
    vals = np.exp(-np.outer(np.exp(alpha * xs), s))
    means = vals.mean(axis=1)
    ses = vals.std(axis=1, ddof=1) / math.sqrt(reps)
    return means, ses


@dataclass(frozen=True)
class GAsymptoticsReport:
    case: str
    z_grid: tuple[float, ...]
    ratios: tuple[float, ...]
    std_errors: tuple[float, ...]
    g_values: tuple[float, ...]
    reps: int


def check_g_asymptotics(
    case: str,
    shift: ShiftSampler,
    alpha: float,
    z_grid,
    reps: int,
    rng: np.random.Generator,
    threads: int = 1,
) -> GAsymptoticsReport:
    """Deep-left tail ratios of g against the case-specific expansion.

    Regular case: (1 - g(z)) e^{-alpha z} should approach 1 as z -> -inf.
    Boundary case: (1 - g(z)) / (alpha |z| e^{alpha z}) should approach 1,
    slowly.
    """
    z = np.asarray(z_grid, dtype=float)
    if (z >= 0).any():
        raise ValueError("the asymptotic grid must be negative")
    g_vals, g_ses = estimate_g_curve(shift, alpha, z, reps, rng, threads)
    if case == "regular":
        scale = np.exp(-alpha * z)
    elif case == "boundary":
        scale = 1.0 / (alpha * np.abs(z) * np.exp(alpha * z))
    else:
        raise ValueError(f"no asymptotic form for case {case!r}")
    ratios = (1.0 - g_vals) * scale
    ses = g_ses * scale
    return GAsymptoticsReport(
        case=case,
        z_grid=tuple(float(v) for v in z),
        ratios=tuple(float(v) for v in ratios),
        std_errors=tuple(float(v) for v in ses),
        g_values=tuple(float(v) for v in g_vals),
        reps=reps,
    )
