import math
from dataclasses import replace

import numpy as np
import pytest

from gbas_screen.error_models import LimitTable
from gbas_screen.errors import Unscreenable
from gbas_screen.geometry import projection_vertical
from gbas_screen.inflation import (ALGORITHMS, adjust, build_optimal_lp, evaluate_vpl,
                                   nominal_params, optimal_sigma_prgnd_inflation, run_algorithm,
                                   sigma_vig_inflation, targeted_inflation, verify_screened)
from gbas_screen.lp_solver import is_feasible, solve
from gbas_screen.screening import ScreeningResult, build_epoch, nominal_sigma_sq, screen_epoch
from conftest import synthetic_epoch, synthetic_views

QUIET = dict(g_max_night=1.0, daytime_gradient=((0.0, 1.0), (90.0, 1.0)))


@pytest.fixture(scope="module")
def night_runs(galeao_night_epochs):
    return [(e, s, {a: run_algorithm(a, e, s) for a in ALGORITHMS}) for e, s in galeao_night_epochs]


def test_every_algorithm_screens(night_runs):
    for epoch, screening, runs in night_runs:
        for name, r in runs.items():
            ok, margin = verify_screened(r.params, screening, epoch)
            assert ok and r.screened and margin >= 0.0, (epoch.t, name)


def test_inflation_never_goes_below_nominal(night_runs):
    for epoch, screening, runs in night_runs:
        nominal = evaluate_vpl(epoch, nominal_params(epoch), [0], [epoch.ref])[2][0]
        for r in runs.values():
            assert np.all(r.params.sigma_pr_gnd >= epoch.sigma_gnd0 - 1e-12)
            assert np.all(r.params.sigma_pr_gnd <= epoch.config.sigma_pr_gnd_max + 1e-12)
            assert r.params.sigma_vig >= epoch.sigma_vig0
            assert np.all(r.params.p >= epoch.p0)
            assert r.all_in_view_vpl[epoch.ref] >= nominal - 1e-9


def test_broadcast_values_are_quantized(night_runs):
    for _, _, runs in night_runs:
        for r in runs.values():
            q = r.params.sigma_pr_gnd / 0.02
            assert np.allclose(q, np.round(q), atol=1e-9)


def test_lp_counts(night_runs):
    for epoch, _, runs in night_runs:
        assert runs["optimal"].lp_count == 1
        assert runs["sigma-vig"].lp_count == 0
        assert runs["targeted"].lp_count <= 2 * len(epoch.combos)


def test_adjustment_terminates_within_bound(night_runs):
    for epoch, _, runs in night_runs:
        bound = epoch.n * (5.08 - epoch.sigma_gnd0.min()) / 0.02
        for name in ("optimal", "targeted"):
            assert runs[name].adjust_iterations <= bound


def test_lp_solution_meets_linearised_rows(galeao_night_epochs):
    for epoch, screening in galeao_night_epochs:
        lp = build_optimal_lp(epoch, screening)
        out = solve(lp)
        assert out.optimal
        assert is_feasible(lp, out.x)


def test_forcing_one_satellite_back_breaks_screening(night_runs):
    epoch, screening, runs = night_runs[2]
    params = runs["optimal"].params
    broken = 0
    for j in np.flatnonzero(params.sigma_pr_gnd > epoch.sigma_gnd0 + 1e-9):
        p = params.copy()
        p.sigma_pr_gnd[j] = epoch.sigma_gnd0[j]
        broken += not verify_screened(p, screening, epoch)[0]
    assert broken >= 1


def test_quiet_epoch_keeps_nominal(galeao):
    epoch, screening = synthetic_epoch(galeao.with_threat(**QUIET), n=7)
    assert screening.count == 0
    opt = optimal_sigma_prgnd_inflation(epoch, screening)
    assert opt.lp_count == 1 and opt.adjust_iterations == 0
    assert np.array_equal(opt.params.sigma_pr_gnd, epoch.sigma_gnd0)
    assert targeted_inflation(epoch, screening).lp_count == 0
    vig = sigma_vig_inflation(epoch, screening)
    assert vig.params.sigma_vig == epoch.sigma_vig0 and vig.adjust_iterations == 0
    assert verify_screened(nominal_params(epoch), screening, epoch) == (True, math.inf)


def test_empty_lp_sits_at_lower_bounds(galeao):
    epoch, screening = synthetic_epoch(galeao.with_threat(**QUIET), n=7)
    lp = build_optimal_lp(epoch, screening)
    assert lp.m == 0
    assert np.allclose(solve(lp).x, lp.lower)


def _one_pair(epoch, m, c):
    mask = np.zeros((len(epoch.subsets), len(epoch.combos)), dtype=bool)
    mask[m, c] = True
    base = screen_epoch(epoch)
    return ScreeningResult(base.miev, base.nominal_vpl, base.singular, base.s_nominal, mask)


def test_five_satellite_row_by_hand(galeao):
    epoch = build_epoch(galeao, synthetic_views(5, seed=9), 43200.0)
    m, c = 1, epoch.ref  # first four-satellite subset at the availability combo
    lp = build_optimal_lp(epoch, _one_pair(epoch, m, c))
    assert lp.m == 1

    idx = list(epoch.subsets[m].members)
    sig2 = nominal_sigma_sq(epoch)[c]
    s = np.zeros(5)
    s[idx] = projection_vertical(epoch.G.subset(idx), sig2[idx])
    k = galeao.constants
    val = epoch.val[c]
    bias = float(np.max(np.abs(s) * epoch.p0)) * epoch.x_air[c] * 1000.0
    h0_bound = -(val / k.k_ffmd) ** 2
    assert h0_bound == pytest.approx(-3.012, abs=1e-3)
    expect_b = max(h0_bound, -((val - bias) / k.k_md_eph) ** 2)
    assert np.allclose(lp.A[0], -s * s, atol=1e-12)
    assert lp.b[0] == pytest.approx(expect_b, abs=1e-12)  # no shift at the objective combo
    assert np.allclose(lp.c, s_all_sq(epoch), atol=1e-12)
    other = epoch.budgets.other_sq(epoch.sigma_vig0)[c]
    assert np.allclose(lp.lower, epoch.sigma_gnd0 ** 2 + other)
    assert np.allclose(lp.upper, 5.08 ** 2 + other)


def s_all_sq(epoch):
    sig2 = nominal_sigma_sq(epoch)[epoch.ref]
    return projection_vertical(epoch.G, sig2) ** 2


def test_row_shift_for_other_combo(galeao):
    epoch = build_epoch(galeao, synthetic_views(5, seed=9), 43200.0)
    c = len(epoch.combos) - 1
    lp = build_optimal_lp(epoch, _one_pair(epoch, 0, c))
    other = epoch.budgets.other_sq(epoch.sigma_vig0)
    s = screen_epoch(epoch).s_nominal[0, c]
    k = galeao.constants
    bias = float(np.max(np.abs(s) * epoch.p0)) * epoch.x_air[c] * 1000.0
    base = max(-(epoch.val[c] / k.k_ffmd) ** 2, -((epoch.val[c] - bias) / k.k_md_eph) ** 2)
    assert lp.b[0] == pytest.approx(base + float((s * s) @ (other[c] - other[epoch.ref])), abs=1e-12)


def test_row_dropped_when_ephemeris_term_already_screens(galeao):
    epoch = build_epoch(galeao, synthetic_views(5, seed=9), 43200.0)
    epoch = replace(epoch, p0=np.full(epoch.n, 1.0))
    assert build_optimal_lp(epoch, _one_pair(epoch, 1, len(epoch.combos) - 1)).m == 0


def test_sigma_vig_monotone_in_gradient(galeao):
    views = synthetic_views(8, seed=4)
    last = 0.0
    for g in (300.0, 600.0, 850.7, 1500.0, 3000.0):
        epoch = build_epoch(galeao.with_threat(g_max_night=g), views, 7200.0)
        r = sigma_vig_inflation(epoch, screen_epoch(epoch))
        assert r.params.sigma_vig >= last - 1e-12
        last = r.params.sigma_vig


def test_sigma_vig_is_smallest_grid_value(galeao_night):
    epoch, screening = galeao_night
    r = sigma_vig_inflation(epoch, screening)
    below = replace(r.params, sigma_vig=round(r.params.sigma_vig - 0.1, 9))
    if below.sigma_vig >= epoch.sigma_vig0:
        assert not verify_screened(below, screening, epoch)[0]


def _hopeless(galeao):
    cfg = galeao.with_threat(g_max_night=1e6, daytime_gradient=((0.0, 1e6), (90.0, 1e6)))
    cfg = replace(cfg, limits=LimitTable(((0.0, 1000.0),), ((0.0, 2000.0),)))
    return synthetic_epoch(cfg, n=6)


def test_unscreenable_is_signalled(galeao):
    epoch, screening = _hopeless(galeao)
    assert screening.count > 0
    with pytest.raises(Unscreenable):
        optimal_sigma_prgnd_inflation(epoch, screening)
    with pytest.raises(Unscreenable):
        sigma_vig_inflation(epoch, screening)
    with pytest.raises(Unscreenable):
        targeted_inflation(epoch, screening)


def test_adjust_raises_one_step_at_a_time(galeao_night):
    epoch, screening = galeao_night
    start = nominal_params(epoch)
    out, iterations = adjust(epoch, screening, start)
    steps = np.round((out.sigma_pr_gnd - start.sigma_pr_gnd) / 0.02).astype(int)
    assert np.all(steps >= 0)
    capped = out.sigma_pr_gnd >= 5.08 - 1e-9
    assert steps.sum() == iterations or capped.any()
    assert verify_screened(out, screening, epoch)[0]


def test_unknown_algorithm(galeao_night):
    with pytest.raises(ValueError):
        run_algorithm("bogus", *galeao_night)
