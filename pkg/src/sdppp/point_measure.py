"""Ranked point measures on the real line with an explicit truncation floor.

A measure is stored as its non-increasing sequence of atom positions.
Conceptually the objects of interest may carry infinitely many atoms
drifting to -inf; we represent the finitely many atoms at or above
``floor`` and record ``floor`` so consumers can tell which part of the
line is exact.  ``floor = -inf`` means the representation is exact
everywhere.  The empty measure is a valid value (the null measure).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import TruncationError

NEG_INF = float("-inf")


class PointMeasure:
    """Immutable finite point measure, atoms ranked non-increasing.

    Invariants: atoms are finite reals sorted non-increasing, every atom is
    >= floor, and ties are kept as duplicates (multiset semantics).
    """

    __slots__ = ("_atoms", "_floor")

    def __init__(self, atoms, floor: float = NEG_INF, _trusted: bool = False):
        if math.isnan(floor):
            raise ValueError("floor must not be NaN")
        arr = np.asarray(atoms, dtype=float)
        if arr.ndim != 1:
            arr = arr.reshape(-1)
        if not _trusted:
            if np.isnan(arr).any() or (arr == math.inf).any():
                raise ValueError("atom positions must exclude NaN and +inf")
            arr = arr[arr != NEG_INF]          # -inf entries denote absent atoms
            arr = arr[arr >= floor]            # strictly below floor: discarded
            arr = np.sort(arr)[::-1]
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self._atoms = arr
        self._floor = float(floor)

    # -- basic accessors ---------------------------------------------------

    @property
    def atoms(self) -> np.ndarray:
        """Read-only array of atom positions, non-increasing."""
        return self._atoms

    @property
    def floor(self) -> float:
        return self._floor

    @property
    def is_null(self) -> bool:
        return self._atoms.size == 0

    def __len__(self) -> int:
        return int(self._atoms.size)

    def __iter__(self):
        return iter(self._atoms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointMeasure):
            return NotImplemented
        return self._floor == other._floor and np.array_equal(self._atoms, other._atoms)

    __hash__ = None  # mutable-feeling equality; not hashable

    def __repr__(self) -> str:
        shown = ", ".join(f"{a:g}" for a in self._atoms[:6])
        if len(self) > 6:
            shown += f", ... ({len(self)} atoms)"
        return f"PointMeasure([{shown}], floor={self._floor:g})"

    # -- elementary operations ----------------------------------------------

    def max_atom(self) -> float:
        """Position of the largest atom, -inf for the null measure."""
        return float(self._atoms[0]) if self._atoms.size else NEG_INF

    def tail_count(self, x: float) -> int:
        """Number of atoms strictly above x (open interval convention)."""
        if x < self._floor:
            raise TruncationError(
                f"tail count at {x} reads below the truncation floor {self._floor}"
            )
        return int(np.count_nonzero(self._atoms > x))

    def translate(self, y: float) -> "PointMeasure":
        """Shift every atom and the floor by y (must be finite)."""
        if not math.isfinite(y):
            raise ValueError("translation offset must be finite")
        out = PointMeasure.__new__(PointMeasure)
        arr = self._atoms + y
        arr.flags.writeable = False
        out._atoms = arr
        out._floor = self._floor + y
        return out

    def integrate(self, phi) -> float:
        """Sum of phi over the atoms.

        ``phi`` must expose ``support_left``; the floor must lie at or below
        it, otherwise discarded atoms could have contributed and the sum
        would be biased.
        """
        if getattr(phi, "support_left", NEG_INF) < self._floor:
            raise TruncationError(
                f"test function support edge {phi.support_left} lies below "
                f"the truncation floor {self._floor}"
            )
        if self._atoms.size == 0:
            return 0.0
        return float(np.sum(phi(self._atoms)))

    # -- serialization -------------------------------------------------------

    def to_json_obj(self) -> dict:
        """JSON-safe dict; floor -inf encodes as null."""
        return {
            "atoms": [float(a) for a in self._atoms],
            "floor": None if self._floor == NEG_INF else self._floor,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "PointMeasure":
        floor = obj.get("floor")
        return cls(obj["atoms"], NEG_INF if floor is None else float(floor))

    def to_csv_row(self) -> list:
        return [repr(self._floor)] + [repr(float(a)) for a in self._atoms]

    @classmethod
    def from_csv_row(cls, row) -> "PointMeasure":
        values = [float(v) for v in row if str(v).strip() != ""]
        if not values:
            raise ValueError("empty CSV row for a point measure")
        return cls(values[1:], values[0])


def null_measure(floor: float = NEG_INF) -> PointMeasure:
    return PointMeasure((), floor)


def dirac(x: float) -> PointMeasure:
    return PointMeasure((x,))


# Free-function forms of the elementary operations.

def from_atoms(positions, floor: float = NEG_INF) -> PointMeasure:
    """Build a measure from unsorted positions; entries below floor are dropped."""
    return PointMeasure(positions, floor)


def translate(measure: PointMeasure, y: float) -> PointMeasure:
    return measure.translate(y)


def integrate(measure: PointMeasure, phi) -> float:
    return measure.integrate(phi)


def max_atom(measure: PointMeasure) -> float:
    return measure.max_atom()


def tail_count(measure: PointMeasure, x: float) -> int:
    return measure.tail_count(x)
