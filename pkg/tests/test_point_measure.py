import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdppp import NEG_INF, PointMeasure, dirac, from_atoms, null_measure
from sdppp.battery import ramp
from sdppp.errors import TruncationError

finite_floats = st.floats(min_value=-50, max_value=50, allow_nan=False)


def test_from_atoms_sorts_and_filters():
    m = from_atoms([0.5, 1.0, -2.0], floor=-1.0)
    assert m.atoms.tolist() == [1.0, 0.5]
    assert m.floor == -1.0


def test_empty_is_null_measure():
    m = from_atoms([])
    assert m.is_null
    assert len(m) == 0
    assert m.max_atom() == NEG_INF


def test_duplicates_preserved():
    m = from_atoms([3.0, 3.0])
    assert m.atoms.tolist() == [3.0, 3.0]


def test_rejects_nan_and_pos_inf():
    with pytest.raises(ValueError):
        from_atoms([0.0, math.nan])
    with pytest.raises(ValueError):
        from_atoms([math.inf])


def test_neg_inf_entries_mean_absent():
    m = from_atoms([1.0, NEG_INF])
    assert m.atoms.tolist() == [1.0]


def test_translate_examples():
    assert dirac(0.0).translate(2.0) == dirac(2.0)
    m = from_atoms([1.0, 0.5])
    assert m.translate(0.0) == m
    assert m.translate(-1.0).atoms.tolist() == [0.0, -0.5]


def test_translate_requires_finite_offset():
    with pytest.raises(ValueError):
        dirac(0.0).translate(math.inf)


def test_integrate_examples():
    phi = ramp(0.0, 1.0, 1.0)
    assert from_atoms([1.0, 0.5]).integrate(phi) == pytest.approx(1.5)
    assert null_measure().integrate(phi) == 0.0
    m = from_atoms([2.0, -3.0])
    assert m.integrate(phi) == pytest.approx(float(phi(2.0)))


def test_integrate_gates_on_floor():
    m = from_atoms([1.0], floor=0.5)
    with pytest.raises(TruncationError):
        m.integrate(ramp(0.0, 1.0, 1.0))


def test_tail_count_examples():
    m = from_atoms([1.0, 0.5, -1.0])
    assert m.tail_count(0.0) == 2
    assert from_atoms([1.0, 0.5]).tail_count(1.0) == 0  # open interval


def test_tail_count_below_floor_errors():
    m = from_atoms([1.0], floor=0.0)
    with pytest.raises(TruncationError):
        m.tail_count(-1.0)


def test_json_round_trip():
    m = from_atoms([1.5, -0.25], floor=-2.0)
    assert PointMeasure.from_json_obj(m.to_json_obj()) == m
    exact = from_atoms([0.0])
    obj = exact.to_json_obj()
    assert obj["floor"] is None
    assert PointMeasure.from_json_obj(obj) == exact


def test_csv_round_trip():
    m = from_atoms([1.5, -0.25], floor=-2.0)
    assert PointMeasure.from_csv_row(m.to_csv_row()) == m
    exact = from_atoms([3.0, 1.0])
    assert PointMeasure.from_csv_row(exact.to_csv_row()) == exact


@settings(max_examples=200, deadline=None)
@given(st.lists(finite_floats, max_size=30), finite_floats)
def test_translate_round_trip_within_ulp(atoms, y):
    m = from_atoms(atoms)
    back = m.translate(y).translate(-y)
    assert back.atoms.size == m.atoms.size
    for a, b in zip(m.atoms, back.atoms):
        assert abs(a - b) <= math.ulp(max(abs(a), abs(y), 1.0))


@settings(max_examples=200, deadline=None)
@given(st.lists(finite_floats, min_size=1, max_size=30))
def test_tail_count_monotone_and_vanishes_at_max(atoms):
    m = from_atoms(atoms)
    xs = sorted(set(atoms)) + [m.max_atom()]
    counts = [m.tail_count(x) for x in xs]
    assert all(c1 >= c2 for c1, c2 in zip(counts, counts[1:]))
    assert m.tail_count(m.max_atom()) == 0


@settings(max_examples=200, deadline=None)
@given(
    st.lists(finite_floats, max_size=20),
    st.floats(min_value=-8, max_value=8, allow_nan=False),
)
def test_integrate_translate_covariance(atoms, y):
    m = from_atoms(atoms)
    phi = ramp(-1.0, 1.3, 2.0)
    lhs = m.translate(y).integrate(phi)
    rhs = m.integrate(phi.shifted(y))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
