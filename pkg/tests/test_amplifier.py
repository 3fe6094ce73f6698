import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from activeris.amplifier import (
    LINEAR,
    NONLINEAR,
    REFLECT_HIGH,
    REFLECT_LOW,
    AmplifierModel,
    amplification_factor,
    incident_bounds_for_gain,
    linear_gain_db,
    reflection_gain_db,
    region,
)
from activeris.units import dbm_to_mw

DEFAULT = AmplifierModel()
# interval wide enough to contain the 0 and 10 dBm operating points of the fitted law
WIDE = AmplifierModel(p_in_min=-40.0, p_in_m=15.0, p_in_max=25.0)


def test_fitted_law_values():
    assert linear_gain_db(0.0, DEFAULT) == 22.46
    assert linear_gain_db(10.0, DEFAULT) == pytest.approx(20.51, abs=1e-12)
    assert reflection_gain_db(0.0, WIDE) == 22.46
    assert reflection_gain_db(10.0, WIDE) == pytest.approx(20.51, abs=1e-12)


def test_reflect_only_outside_interval():
    for p in (DEFAULT.p_in_min - 1e-6, -200.0, DEFAULT.p_in_max + 1e-6, 50.0):
        assert reflection_gain_db(p, DEFAULT) == 0.0
    assert amplification_factor(dbm_to_mw(-150.0), DEFAULT) == 1.0


def test_continuity_at_saturation_knee():
    for model in (DEFAULT, WIDE):
        left = reflection_gain_db(model.p_in_m, model)
        right = reflection_gain_db(np.nextafter(model.p_in_m, np.inf), model)
        assert abs(left - right) < 1e-9
        assert model.p_out_sat == pytest.approx(model.p_in_m + linear_gain_db(model.p_in_m, model))


def test_saturation_keeps_output_constant():
    p = np.linspace(DEFAULT.p_in_m + 0.1, DEFAULT.p_in_max, 20)
    np.testing.assert_allclose(p + reflection_gain_db(p, DEFAULT), DEFAULT.p_out_sat, atol=1e-12)


def test_regions():
    m = DEFAULT
    got = region(np.array([m.p_in_min - 1, m.p_in_min, m.p_in_m, m.p_in_m + 1, m.p_in_max, m.p_in_max + 1]), m)
    assert list(got) == [REFLECT_LOW, LINEAR, LINEAR, NONLINEAR, NONLINEAR, REFLECT_HIGH]
    assert region(-500.0, m) == REFLECT_LOW


def test_threshold_order_enforced():
    with pytest.raises(ValueError):
        AmplifierModel(p_in_min=-10.0, p_in_m=-20.0, p_in_max=0.0)


def test_negative_power_rejected():
    with pytest.raises(ValueError):
        amplification_factor(-1.0, DEFAULT)


@given(st.floats(-160.0, 20.0))
def test_gain_at_least_unity_and_bounded(p_dbm):
    a = amplification_factor(dbm_to_mw(p_dbm), DEFAULT)
    assert a >= 1.0
    assert a <= 10 ** (linear_gain_db(DEFAULT.p_in_min, DEFAULT) / 10) * (1 + 1e-12)


def test_linear_region_gain_decreasing():
    p = np.linspace(DEFAULT.p_in_min, DEFAULT.p_in_max, 200)
    g = reflection_gain_db(p, DEFAULT)
    assert np.all(np.diff(g) < 0)


def test_nominal_gain_midpoint():
    mid = 0.5 * (DEFAULT.p_in_min + DEFAULT.p_in_m)
    assert DEFAULT.nominal_gain_db == pytest.approx(-0.195 * mid + 22.46)


@given(st.floats(0.5, 3e4))
def test_incident_bounds_for_gain(a):
    b = incident_bounds_for_gain(a, DEFAULT)
    if b is None:
        assert a > amplification_factor(dbm_to_mw(DEFAULT.p_in_min), DEFAULT)
        return
    lo, hi = b
    assert lo <= hi
    for p in np.geomspace(lo, hi, 7):
        assert amplification_factor(p, DEFAULT) >= a * (1 - 1e-9)
