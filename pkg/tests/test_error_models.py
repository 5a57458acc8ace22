import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gbas_screen.config import load_config
from gbas_screen.constellation import SatelliteView
from gbas_screen.error_models import (AircraftModel, LimitTable, NominalModel, ScreeningCombo,
                                      ThreatModel, active_gradient, budget_arrays, grid_combos,
                                      interpolate, obliquity, sigma_budget, sigma_iono, tel_of,
                                      val_of)
from gbas_screen.errors import ConfigError

AIRCRAFT = AircraftModel()


# -- obliquity -----------------------------------------------------------------

def test_zenith_obliquity_is_one():
    assert obliquity(math.pi / 2) == pytest.approx(1.0, abs=1e-15)


def test_horizon_obliquity_closed_form():
    f = obliquity(0.0, shell_height=350e3, earth_radius=6378e3)
    assert f == pytest.approx((1 - (6378 / 6728) ** 2) ** -0.5, rel=1e-12)
    assert f == pytest.approx(3.135, abs=1e-2)


def test_obliquity_decreases_with_elevation():
    el = np.linspace(0.0, math.pi / 2, 500)
    f = obliquity(el)
    assert np.all(np.diff(f) < 0) and np.all(f >= 1.0)


# -- budget ----------------------------------------------------------------------

def test_iono_sigma_arithmetic():
    assert sigma_iono(1.0, 14.0, 6.0, AIRCRAFT) == pytest.approx(0.28, abs=1e-12)


def test_iono_sigma_scales_with_floor():
    ratio = sigma_iono(1.0, 6.4, 6.0, AIRCRAFT) / sigma_iono(1.0, 14.0, 6.0, AIRCRAFT)
    assert ratio == pytest.approx(6.4 / 14.0, rel=1e-12)


@given(st.floats(1.0, 3.2), st.floats(0.1, 100.0), st.floats(0.0, 13.0), st.floats(0.1, 10.0))
def test_iono_sigma_linear(f, vig, x, k):
    base = sigma_iono(f, vig, x, AIRCRAFT)
    assert sigma_iono(f, k * vig, x, AIRCRAFT) == pytest.approx(k * base, rel=1e-12)
    lag = AIRCRAFT.smoothing_lag_km
    assert base == pytest.approx(f * vig * 1e-3 * (x + lag), rel=1e-12)


def test_total_variance_is_sum_of_components():
    view = SatelliteView(1, 0.3, math.radians(35.0))
    b = sigma_budget(view, ScreeningCombo(2.0, 5.0), 14.0, AIRCRAFT, NominalModel())
    assert b.sigma_total_sq == (b.sigma_pr_gnd ** 2 + b.sigma_tropo ** 2
                                + b.sigma_pr_air ** 2 + b.sigma_iono ** 2)


def test_budget_arrays_match_scalar_budget():
    el = np.radians([12.0, 35.0, 70.0])
    combos = grid_combos()
    arr = budget_arrays(el, combos, AIRCRAFT, NominalModel())
    total = arr.total_sq(arr.sigma_pr_gnd, 6.4)
    for c, combo in enumerate(combos[::9]):
        c_idx = combos.index(combo)
        for j, e in enumerate(el):
            b = sigma_budget(SatelliteView(j, 0.0, float(e)), combo, 6.4, AIRCRAFT, NominalModel())
            assert total[c_idx, j] == pytest.approx(b.sigma_total_sq, rel=1e-12)


def test_nominal_curves_reject_non_positive_elevation():
    with pytest.raises(ConfigError):
        NominalModel().sigma_pr_gnd(0.0)


def test_nominal_curves_decrease_with_elevation():
    el = np.linspace(1.0, 90.0, 200)
    m = NominalModel()
    assert np.all(np.diff(m.sigma_pr_gnd(el)) < 0)
    assert np.all(np.diff(m.sigma_pr_air(el)) < 0)


# -- VAL / TEL ---------------------------------------------------------------------

LIMITS = LimitTable()


@pytest.mark.parametrize("delta, expect", [(0.0, 10.0), (3.0, 25.0), (1.5, 17.5), (7.0, 25.0)])
def test_val_table(delta, expect):
    assert val_of(ScreeningCombo(2.0, 2.0 + delta), LIMITS) == pytest.approx(expect, abs=1e-12)


def test_tel_anchor_and_clamp():
    assert tel_of(ScreeningCombo(0.0, 3.0), LIMITS) == pytest.approx(78.0)
    assert tel_of(ScreeningCombo(0.0, 7.0), LIMITS) == pytest.approx(78.0)


@given(st.floats(0.0, 10.0))
def test_tel_never_below_val(delta):
    assert interpolate(LIMITS.tel, delta) >= interpolate(LIMITS.val, delta)


def test_anchors_reproduced_exactly():
    for x, y in LIMITS.val:
        assert interpolate(LIMITS.val, x) == y
    for x, y in LIMITS.tel:
        assert interpolate(LIMITS.tel, x) == y


@pytest.mark.parametrize("val, tel", [
    ((), ((0.0, 31.0),)),
    (((0.0, 10.0), (0.0, 12.0)), ((0.0, 31.0),)),
    (((0.0, 10.0),), ((0.0, 5.0),)),
    (((0.0, -1.0),), ((0.0, 31.0),)),
])
def test_limit_table_validation(val, tel):
    with pytest.raises(ValueError):
        LimitTable(val, tel)


# -- threat model ----------------------------------------------------------------

def test_galeao_night_gradient():
    g = load_config("galeao").threat
    assert active_gradient(2.0, g, math.radians(30)) == pytest.approx(850.7)
    assert active_gradient(22.5, g, math.radians(30)) == pytest.approx(850.7)


@pytest.mark.parametrize("airport", ["ishigaki", "chennai"])
def test_asian_night_gradient(airport):
    threat = load_config(airport).threat
    start, end = max(threat.night_windows_ut, key=lambda w: w[1] - w[0])
    hour = 0.5 * (start + end)
    assert active_gradient(hour, threat, math.radians(30)) == pytest.approx(600.0)


def test_memphis_uses_daytime_model_all_day():
    threat = load_config("memphis").threat
    el = np.radians([10.0, 40.0, 80.0])
    for hour in np.arange(0.0, 24.0, 0.5):
        assert np.array_equal(active_gradient(hour, threat, el), threat.daytime(el))


def test_daytime_table_clamped_and_linear():
    t = ThreatModel()
    assert t.daytime(math.radians(5.0)) == pytest.approx(375.0)
    assert t.daytime(math.radians(40.0)) == pytest.approx(400.0)
    assert t.daytime(math.radians(89.0)) == pytest.approx(425.0)


def test_active_gradient_hour_range():
    with pytest.raises(ValueError):
        active_gradient(24.0, ThreatModel(), 0.5)


@pytest.mark.parametrize("kwargs", [{"c_factor": 0.0}, {"c_factor": 1.5}, {"g_max_night": -1.0},
                                    {"night_windows_ut": ((5.0, 3.0),)}])
def test_threat_validation(kwargs):
    with pytest.raises(ValueError):
        ThreatModel(**kwargs)


# -- grid ----------------------------------------------------------------------------

def test_default_grid_has_56_combos():
    combos = grid_combos()
    assert len(combos) == 56
    assert len({c.x_dh for c in combos}) == 7
    assert len({c.delta for c in combos}) == 8
    assert all(c.x_aircraft >= c.x_dh for c in combos)


def test_degenerate_grid():
    assert grid_combos(0.0, 0.0) == [ScreeningCombo(0.0, 0.0)]


def test_combo_validation():
    with pytest.raises(ValueError):
        ScreeningCombo(3.0, 2.0)
