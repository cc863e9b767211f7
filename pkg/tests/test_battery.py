import numpy as np
import pytest

from sdppp.battery import default_battery, plateau, ramp


def test_ramp_shape():
    phi = ramp(0.0, 1.0, 1.0)
    xs = np.array([-1.0, 0.0, 0.5, 1.0, 10.0])
    assert phi(xs).tolist() == [0.0, 0.0, 0.5, 1.0, 1.0]
    assert phi.support_left == 0.0


def test_plateau_shape():
    phi = plateau(0.0, 3.0, 2.0, 1.5)
    assert float(phi(-0.1)) == 0.0
    assert float(phi(0.25)) == pytest.approx(0.75)
    assert float(phi(1.5)) == pytest.approx(1.5)
    assert float(phi(2.75)) == pytest.approx(0.75)
    assert float(phi(3.5)) == 0.0


def test_shifted_evaluates_at_offset_argument():
    phi = plateau(-1.0, 2.0, 0.7, 2.0)
    shifted = phi.shifted(0.6)
    xs = np.linspace(-3, 4, 41)
    assert np.allclose(shifted(xs), phi(xs + 0.6), rtol=1e-12, atol=1e-12)
    assert shifted.support_left == pytest.approx(-1.6)


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        ramp(0.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        plateau(1.0, 0.5, 1.0, 1.0)


def test_default_battery_spans_requirements():
    battery = default_battery()
    assert len(battery) >= 8
    heights = {phi.height for phi in battery}
    assert {0.5, 1.0, 2.0} <= heights
    assert len({phi.name for phi in battery}) == len(battery)
