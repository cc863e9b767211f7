"""Branching random walk engine and the branching convolution combinator.

The convolution of two point-measure laws draws a base measure, then
replaces each of its atoms by an independent translated draw of the
second law and superposes.  Applied with an offspring law on the left it
performs one branching step; iterated from a Dirac mass at the origin it
generates the branching random walk.

Truncation contract: convolutions of unbounded-displacement laws admit no
exact finite floor.  Consumers read measures only through test functions
with a left support edge ``a``, and ``recommend_floor`` picks the floor
so that atoms discarded below it would have re-entered [a, inf) with
probability at most ``miss_probability``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from .errors import PopulationCapError
from .point_measure import NEG_INF, PointMeasure
from .reproduction import (
    BinaryDeterministic,
    PoissonGaussian,
    ReproductionLaw,
    gaussian_step_params,
    max_child_offset,
    mean_offspring_count,
    sample_offspring_positions,
)

POPULATION_CAP = 10**7


@dataclass(frozen=True)
class MeasureSampler:
    """A law on point measures, packaged as an rng -> PointMeasure closure.

    ``declared_floor`` is the guidance floor: non-null draws carry a floor
    at or above it.  Samplers are immutable; independence across draws is
    the caller's responsibility (pass independent streams).
    """

    draw: Callable[[np.random.Generator], PointMeasure]
    declared_floor: float
    description: str

    def __call__(self, rng: np.random.Generator) -> PointMeasure:
        return self.draw(rng)


def _offspring_step(law: ReproductionLaw):
    """Vectorized one-generation step: positions array -> children array."""
    if isinstance(law, BinaryDeterministic):
        offsets = np.array([law.a, law.b])

        def step(pos, rng):
            return (pos[:, None] + offsets).ravel()

        return step
    mu, sigma = gaussian_step_params(law)
    if isinstance(law, PoissonGaussian):
        m = law.m

        def step(pos, rng):
            counts = rng.poisson(m, pos.size)
            return np.repeat(pos, counts) + rng.normal(mu, sigma, int(counts.sum()))

        return step

    def step(pos, rng):
        return np.repeat(pos, 2) + rng.normal(mu, sigma, 2 * pos.size)

    return step


def simulate_positions(
    law: ReproductionLaw,
    n: int,
    barrier: float,
    rng: np.random.Generator,
    cap: int = POPULATION_CAP,
) -> np.ndarray:
    """Unsorted particle positions of generation n, absorbing barrier below.

    Particles strictly below the barrier are killed together with all their
    descendants.  Generation 0 is a single particle at the origin.
    """
    if n < 0:
        raise ValueError("generation index must be non-negative")
    pos = np.zeros(1)
    step = _offspring_step(law)
    for _ in range(n):
        if pos.size == 0:
            break
        pos = step(pos, rng)
        if barrier != NEG_INF:
            pos = pos[pos >= barrier]
        if pos.size > cap:
            raise PopulationCapError(
                f"population {pos.size} exceeds the cap {cap}"
            )
    return pos


def simulate_generation(
    law: ReproductionLaw,
    n: int,
    barrier: float,
    rng: np.random.Generator,
    cap: int = POPULATION_CAP,
) -> PointMeasure:
    """Generation n of the branching random walk as a ranked measure."""
    pos = simulate_positions(law, n, barrier, rng, cap)
    return PointMeasure(np.sort(pos)[::-1], barrier, _trusted=True)


def simulate_genealogy(
    law: ReproductionLaw,
    n: int,
    rng: np.random.Generator,
    cap: int = POPULATION_CAP,
):
    """Barrier-free tree: per-generation (positions, parent index) arrays.

    Killing at any barrier can be replayed on the returned tree by pruning
    a particle and its descendants, which couples different barriers on one
    realization of the offspring randomness.
    """
    positions = [np.zeros(1)]
    parents = [np.array([-1], dtype=np.intp)]
    pos = positions[0]
    for _ in range(n):
        if isinstance(law, BinaryDeterministic):
            parent = np.repeat(np.arange(pos.size, dtype=np.intp), 2)
            child = (pos[:, None] + np.array([law.a, law.b])).ravel()
        elif isinstance(law, PoissonGaussian):
            counts = rng.poisson(law.m, pos.size)
            parent = np.repeat(np.arange(pos.size, dtype=np.intp), counts)
            child = pos[parent] + rng.normal(law.mu, law.sigma, parent.size)
        else:
            parent = np.repeat(np.arange(pos.size, dtype=np.intp), 2)
            child = pos[parent] + rng.normal(law.mu, law.sigma, parent.size)
        if child.size > cap:
            raise PopulationCapError(f"population {child.size} exceeds the cap {cap}")
        positions.append(child)
        parents.append(parent)
        pos = child
    return positions, parents


def prune_genealogy(positions, parents, barrier: float) -> np.ndarray:
    """Positions of the last generation after killing below ``barrier``."""
    alive = positions[0] >= barrier
    for gen in range(1, len(positions)):
        alive = alive[parents[gen]] & (positions[gen] >= barrier)
    return positions[-1][alive]


def offspring_sampler(law: ReproductionLaw) -> MeasureSampler:
    return MeasureSampler(
        draw=lambda rng: PointMeasure(sample_offspring_positions(law, rng)),
        declared_floor=NEG_INF,
        description=f"offspring[{law}]",
    )


def brw_sampler(
    law: ReproductionLaw, n: int, barrier: float, cap: int = POPULATION_CAP
) -> MeasureSampler:
    return MeasureSampler(
        draw=lambda rng: simulate_generation(law, n, barrier, rng, cap),
        declared_floor=barrier,
        description=f"brw[{law}, n={n}, barrier={barrier:g}]",
    )


def dirac_sampler(shift_draw: Callable[[np.random.Generator], float],
                  description: str = "dirac") -> MeasureSampler:
    """Law of a single random Dirac mass; a -inf draw emits the null measure."""

    def draw(rng: np.random.Generator) -> PointMeasure:
        s = float(shift_draw(rng))
        if s == NEG_INF:
            return PointMeasure((), NEG_INF)
        return PointMeasure(np.array([s]), NEG_INF, _trusted=True)

    return MeasureSampler(draw=draw, declared_floor=NEG_INF, description=description)


def convolve(a: MeasureSampler, b: MeasureSampler,
             cap: int = POPULATION_CAP) -> MeasureSampler:
    """The branching convolution of two sampler laws.

    A draw takes D from ``a`` and superposes independent ``b``-draws
    translated by each atom of D.  When ``b`` is truncated at a finite
    floor f, the result is exact above max(D) + f and recorded as such;
    when ``b`` is exact the result inherits the floor of the ``a``-draw
    (atoms dropped by ``a`` have their whole translated cluster missing,
    which is what the miss-probability budget accounts for).
    """

    def draw(rng: np.random.Generator) -> PointMeasure:
        base = a.draw(rng)
        if base.is_null:
            return PointMeasure((), NEG_INF)
        parts = []
        total = 0
        for d in base.atoms:
            part = b.draw(rng)
            if part.is_null:
                continue
            shifted = part.atoms + d
            total += shifted.size
            if total > cap:
                raise PopulationCapError(
                    f"convolution population {total} exceeds the cap {cap}"
                )
            parts.append(shifted)
        if math.isfinite(b.declared_floor):
            floor = base.max_atom() + b.declared_floor
        else:
            floor = base.floor
        if not parts:
            return PointMeasure((), floor)
        atoms = np.concatenate(parts)
        if floor != NEG_INF:
            atoms = atoms[atoms >= floor]
        return PointMeasure(np.sort(atoms)[::-1], floor, _trusted=True)

    if math.isfinite(a.declared_floor) and math.isfinite(b.declared_floor):
        declared = a.declared_floor + b.declared_floor
    elif math.isfinite(b.declared_floor):
        declared = NEG_INF if a.declared_floor == NEG_INF else a.declared_floor
    else:
        declared = a.declared_floor
    return MeasureSampler(
        draw=draw,
        declared_floor=declared,
        description=f"conv({a.description}, {b.description})",
    )


def translated_sampler(base: MeasureSampler, y: float) -> MeasureSampler:
    return MeasureSampler(
        draw=lambda rng: base.draw(rng).translate(y),
        declared_floor=base.declared_floor + y,
        description=f"shift({base.description}, {y:g})",
    )


def _displacement_tail(law: ReproductionLaw, n_steps: int, q: float) -> float:
    """Union bound on P(some descendant line climbs more than q in <= n steps)."""
    params = gaussian_step_params(law)
    mbar = mean_offspring_count(law)
    if params is None:
        c = max_child_offset(law)
        return 0.0 if q >= n_steps * max(c, 0.0) else 1.0
    mu, sigma = params
    total = 0.0
    for j in range(1, n_steps + 1):
        total += mbar**j * norm.sf((q - j * mu) / (sigma * math.sqrt(j)))
    return total


def recommend_floor(
    phi_support_left: float,
    law: ReproductionLaw,
    n_steps: int,
    miss_probability: float,
) -> float:
    """Floor low enough that discarded atoms re-enter [a, inf) with
    probability at most ``miss_probability`` after ``n_steps`` branching
    steps.

    The budget is split over the expected particle count, and the needed
    climb quantile q is bounded through a union bound over descendant
    lines (normal quantiles for Gaussian families, exact support for the
    deterministic family).  Returns a - q.
    """
    if not 0.0 < miss_probability:
        raise ValueError("miss probability must lie in (0, 1]")
    if miss_probability >= 1.0 or n_steps == 0:
        return phi_support_left
    mbar = mean_offspring_count(law)
    n_total = sum(mbar**k for k in range(1, n_steps + 1))
    per_particle = 1.0 - (1.0 - miss_probability) ** (1.0 / n_total)
    if gaussian_step_params(law) is None:
        return phi_support_left - n_steps * max(max_child_offset(law), 0.0)
    if _displacement_tail(law, n_steps, 0.0) <= per_particle:
        return phi_support_left
    hi = 1.0
    while _displacement_tail(law, n_steps, hi) > per_particle:
        hi *= 2.0
        if hi > 1e9:
            raise RuntimeError("failed to bracket the climb quantile")
    q = brentq(
        lambda v: _displacement_tail(law, n_steps, v) - per_particle,
        0.0,
        hi,
        xtol=1e-9,
    )
    return phi_support_left - q


def floor_miss_probability(
    floor: float,
    phi_support_left: float,
    law: ReproductionLaw,
    n_steps: int = 1,
) -> float:
    """Achieved miss probability of a configured floor (inverse of
    ``recommend_floor``); 0 for exact samplers."""
    if floor == NEG_INF:
        return 0.0
    q = phi_support_left - floor
    if q < 0:
        return 1.0
    mbar = mean_offspring_count(law)
    n_total = sum(mbar**k for k in range(1, n_steps + 1))
    per_particle = min(1.0, _displacement_tail(law, n_steps, q))
    return 1.0 - (1.0 - per_particle) ** n_total
