"""Geometry-screening algorithms.

Three ways of choosing broadcast parameters so that every unsafe subset
geometry shows a VPL at or above VAL to the aircraft:

* :func:`sigma_vig_inflation` - raise the common ionospheric sigma_vig;
* :func:`targeted_inflation` - per-combination LPs on P_k, then sigma_pr_gnd;
* :func:`optimal_sigma_prgnd_inflation` - a single LP on sigma_pr_gnd over
  every combination at once.

Both LP methods linearise around the nominal projections and then run the
same increment-and-recheck adjustment, so the final check in
:func:`verify_screened` always uses projections rebuilt from the inflated
sigmas.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import Unscreenable
from .geometry import batch_vertical, batch_vpl
from .lp_solver import LinearProgram, solve
from .screening import EpochInputs, ScreeningResult, quantize_broadcast

__all__ = [
    "BroadcastParams", "InflationResult", "build_optimal_lp", "optimal_sigma_prgnd_inflation",
    "sigma_vig_inflation", "targeted_inflation", "quantize_broadcast", "verify_screened",
    "evaluate_vpl", "nominal_params", "ALGORITHMS", "run_algorithm",
]


@dataclass
class BroadcastParams:
    sigma_pr_gnd: np.ndarray  # m, per satellite
    sigma_vig: float  # mm/km
    p: np.ndarray  # per satellite

    def copy(self) -> "BroadcastParams":
        return BroadcastParams(self.sigma_pr_gnd.copy(), self.sigma_vig, self.p.copy())


@dataclass
class InflationResult:
    algorithm: str
    params: BroadcastParams
    lp_count: int
    adjust_iterations: int
    all_in_view_vpl_by_combo: np.ndarray
    screened: bool
    margin: float
    infeasible_combos: list[int] = field(default_factory=list)
    lp_status: str = ""
    elapsed_ms: float = 0.0

    @property
    def all_in_view_vpl(self) -> np.ndarray:
        return self.all_in_view_vpl_by_combo


def nominal_params(epoch: EpochInputs) -> BroadcastParams:
    return BroadcastParams(epoch.sigma_gnd0.copy(), epoch.sigma_vig0, epoch.p0.copy())


def sigma_sq(epoch: EpochInputs, params: BroadcastParams) -> np.ndarray:
    """(C, N) variances under ``params``."""
    return epoch.budgets.total_sq(params.sigma_pr_gnd, params.sigma_vig)


def evaluate_vpl(epoch: EpochInputs, params: BroadcastParams, m_idx, c_idx):
    """(h0, eph, vpl) for the given (subset, combo) pairs, projections rebuilt from ``params``."""
    m_idx = np.asarray(m_idx, dtype=int)
    c_idx = np.asarray(c_idx, dtype=int)
    if m_idx.size == 0:
        empty = np.zeros(0)
        return empty, empty, empty
    sig2 = sigma_sq(epoch, params)[c_idx]
    w = epoch.masks[m_idx] / sig2
    s, _ = batch_vertical(epoch.G.rows, w)
    return batch_vpl(s, sig2, params.p, epoch.x_air[c_idx], epoch.config.constants)


def all_in_view_vpl(epoch: EpochInputs, params: BroadcastParams) -> np.ndarray:
    c = np.arange(len(epoch.combos))
    return evaluate_vpl(epoch, params, np.zeros_like(c), c)[2]


def verify_screened(params: BroadcastParams, screening: ScreeningResult,
                    epoch: EpochInputs) -> tuple[bool, float]:
    """Whether every unsafe (subset, combo) has VPL >= VAL, and the worst margin."""
    m_idx, c_idx = screening.pairs
    if m_idx.size == 0:
        return True, math.inf
    vpl = evaluate_vpl(epoch, params, m_idx, c_idx)[2]
    margin = vpl - epoch.val[c_idx]
    worst = float(np.min(margin))
    return bool(np.all(margin >= 0.0)) and math.isfinite(worst), worst


# -- LP construction --------------------------------------------------------

def _other_sq(epoch: EpochInputs) -> np.ndarray:
    return epoch.budgets.other_sq(epoch.sigma_vig0)


def build_optimal_lp(epoch: EpochInputs, screening: ScreeningResult, p=None, pairs=None,
                     objective_combo: int | None = None) -> LinearProgram:
    """The sigma_pr_gnd inflation LP.

    Variables are the total variances sigma_i^2 of the all-in-view
    satellites evaluated at the objective combo (the availability combo by
    default). A row for another combo shifts its right-hand side by the
    difference of the non-ground variance terms, so one variable per
    satellite serves every combo. Rows already satisfied through the
    ephemeris term are left out.
    """
    k = epoch.config.constants
    p = epoch.p0 if p is None else np.asarray(p, dtype=float)
    m_idx, c_idx = screening.pairs if pairs is None else pairs
    oc = epoch.ref if objective_combo is None else objective_combo
    other = _other_sq(epoch)
    shift = other - other[oc]  # (C, N)

    rows, rhs, labels = [], [], []
    for m, c in zip(m_idx, c_idx):
        s = screening.s_nominal[m, c]
        s2 = s * s
        val = epoch.val[c]
        eph_bias = float(np.max(np.abs(s) * p)) * epoch.x_air[c] * 1000.0
        if val - eph_bias <= 0.0:
            continue
        bound = max(-(val / k.k_ffmd) ** 2, -((val - eph_bias) / k.k_md_eph) ** 2)
        rows.append(-s2)
        rhs.append(bound + float(s2 @ shift[c]))
        sub = epoch.subsets[m]
        combo = epoch.combos[c]
        labels.append(f"subset {[epoch.prns[i] for i in sub.members]} "
                      f"x_dh={combo.x_dh:g} x_aircraft={combo.x_aircraft:g}")
    s_all = screening.s_nominal[0, oc]
    cap = epoch.config.sigma_pr_gnd_max
    n = epoch.n
    return LinearProgram(
        c=s_all * s_all,
        A=np.array(rows).reshape(-1, n),
        b=np.array(rhs, dtype=float),
        lower=epoch.sigma_gnd0 ** 2 + other[oc],
        upper=np.maximum(cap ** 2, epoch.sigma_gnd0 ** 2) + other[oc],
        labels=labels,
    )


ROUNDOFF_M = 1e-9


def _sigma_from_lp(epoch: EpochInputs, x: np.ndarray, objective_combo: int) -> np.ndarray:
    cfg = epoch.config
    other = _other_sq(epoch)[objective_combo]
    raw = np.sqrt(np.maximum(x - other, 0.0))
    raw = np.clip(raw, epoch.sigma_gnd0, max(cfg.sigma_pr_gnd_max, float(epoch.sigma_gnd0.max())))
    # shed square-root round-off so a value sitting on a broadcast step is not bumped a step up
    raw = np.maximum(raw - ROUNDOFF_M, epoch.sigma_gnd0)
    return np.array([quantize_broadcast(v, cfg.quantum) for v in raw])


# -- adjustment -------------------------------------------------------------

EFFICIENCY_FRACTION = 0.5


def _efficient_members(epoch: EpochInputs, params: BroadcastParams, m: int, c: int,
                       free: np.ndarray) -> np.ndarray:
    """Members of subset ``m`` worth inflating for the pair (m, c).

    A satellite's efficiency is how fast its variance raises the subset's
    fault-free VPL at combo ``c`` relative to the all-in-view VPL at the
    availability combo. Members within ``EFFICIENCY_FRACTION`` of the best
    are kept.
    """
    sig2 = sigma_sq(epoch, params)
    w = np.stack([epoch.masks[m] / sig2[c], 1.0 / sig2[epoch.ref]])
    s, var = batch_vertical(epoch.G.rows, w)
    gain_u = s[0] ** 2 / math.sqrt(var[0])
    gain_all = s[1] ** 2 / math.sqrt(var[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(gain_u > 0.0, gain_u / gain_all, 0.0)
    cand = free & epoch.masks[m]
    if not cand.any():
        return cand
    return cand & (ratio >= EFFICIENCY_FRACTION * ratio[cand].max())


def adjust(epoch: EpochInputs, screening: ScreeningResult, params: BroadcastParams) -> tuple[BroadcastParams, int]:
    """Raise sigma_pr_gnd one quantum at a time until every unsafe pair screens.

    Each failed check raises exactly one satellite. Candidates are the
    efficient members (see :func:`_efficient_members`) of the most violated
    pair, falling back to any member of a failing subset; they take turns in
    ascending PRN order. A pair whose fault-free VPL already reaches VAL
    stays screened, since that term never decreases when any sigma grows, so
    it is not rechecked.
    """
    cfg = epoch.config
    params = params.copy()
    cap = cfg.sigma_pr_gnd_max
    q = cfg.quantum
    m_all, c_all = screening.pairs
    iterations = 0
    turn = 0
    active = np.ones(m_all.size, dtype=bool)
    while True:
        idx = np.flatnonzero(active)
        h0, _, vpl = evaluate_vpl(epoch, params, m_all[idx], c_all[idx])
        val = epoch.val[c_all[idx]]
        active[idx[h0 >= val]] = False
        margin = vpl - val
        if np.all(margin >= 0.0):
            return params, iterations
        free = params.sigma_pr_gnd < cap - 1e-12
        worst = idx[int(np.argmin(margin))]
        cand = _efficient_members(epoch, params, m_all[worst], c_all[worst], free)
        if not cand.any():
            cand = epoch.masks[m_all[idx[margin < 0.0]]].any(axis=0) & free
        if not cand.any():
            raise Unscreenable("constraints still fail with every involved satellite at the "
                               f"{cap:g} m cap", epoch.t)
        order = np.roll(np.arange(epoch.n), -turn)
        j = int(order[cand[order]][0])
        params.sigma_pr_gnd[j] = min(quantize_broadcast(params.sigma_pr_gnd[j] + q - 1e-12, q), cap)
        turn = (j + 1) % epoch.n
        iterations += 1


# -- algorithms ---------------------------------------------------------------

def _finish(name, epoch, screening, params, lp_count, iterations, t0, **extra) -> InflationResult:
    ok, margin = verify_screened(params, screening, epoch)
    return InflationResult(
        algorithm=name, params=params, lp_count=lp_count, adjust_iterations=iterations,
        all_in_view_vpl_by_combo=all_in_view_vpl(epoch, params), screened=ok, margin=margin,
        elapsed_ms=(time.perf_counter() - t0) * 1000.0, **extra,
    )


def optimal_sigma_prgnd_inflation(epoch: EpochInputs, screening: ScreeningResult) -> InflationResult:
    t0 = time.perf_counter()
    lp = build_optimal_lp(epoch, screening)
    outcome = solve(lp)
    params = nominal_params(epoch)
    if outcome.optimal:
        params.sigma_pr_gnd = _sigma_from_lp(epoch, outcome.x, epoch.ref)
    else:
        # even the linearised rows cannot be met: start the adjustment from the cap
        params.sigma_pr_gnd = np.maximum(params.sigma_pr_gnd, epoch.config.sigma_pr_gnd_max)
    params, iterations = adjust(epoch, screening, params)
    return _finish("optimal", epoch, screening, params, 1, iterations, t0, lp_status=outcome.status)


def sigma_vig_inflation(epoch: EpochInputs, screening: ScreeningResult,
                        step: float | None = None) -> InflationResult:
    """Smallest sigma_vig on the ``step`` grid above the floor that screens every pair.

    The VPL of every subset grows with sigma_vig, so the grid is bisected
    rather than walked; ``adjust_iterations`` counts the checks made.
    """
    t0 = time.perf_counter()
    cfg = epoch.config
    step = cfg.sigma_vig_step if step is None else step
    if step <= 0:
        raise ValueError("sigma_vig step must be positive")
    floor = epoch.sigma_vig0
    params = nominal_params(epoch)
    m_idx, c_idx = screening.pairs
    val = epoch.val[c_idx]
    checks = 0

    def at(k: int) -> BroadcastParams:
        return replace(params, sigma_vig=round(floor + k * step, 9))

    def screens(k: int) -> bool:
        nonlocal checks
        checks += 1
        return bool(np.all(evaluate_vpl(epoch, at(k), m_idx, c_idx)[2] >= val))

    k = 0
    if m_idx.size and not screens(0):
        hi = int(math.floor((cfg.sigma_vig_ceiling - floor) / step + 1e-9))
        if not screens(hi):
            raise Unscreenable(f"sigma_vig ceiling {cfg.sigma_vig_ceiling:g} mm/km reached", epoch.t)
        lo = 0
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if screens(mid):
                hi = mid
            else:
                lo = mid
        k = hi
    return _finish("sigma-vig", epoch, screening, at(k), 0, checks, t0)


def _p_lp(epoch: EpochInputs, screening: ScreeningResult, m_idx, c) -> LinearProgram:
    """Per-combo P_k LP: push each unsafe subset's VPL_eph up to VAL.

    Each subset is credited to its satellite with the largest nominal
    vertical projection; the objective is the sum of all-in-view
    ``|S_k| P_k`` at the same combo.
    """
    k = epoch.config.constants
    n = epoch.n
    sig2 = epoch.budgets.total_sq(epoch.sigma_gnd0, epoch.sigma_vig0)[c]
    x_m = epoch.x_air[c] * 1000.0
    rows, rhs = [], []
    for m in m_idx:
        s = screening.s_nominal[m, c]
        sd = math.sqrt(float(np.sum(s * s * sig2)))
        if k.k_ffmd * sd >= epoch.val[c]:
            continue
        need = epoch.val[c] - k.k_md_eph * sd
        j = int(np.argmax(np.abs(s)))
        row = np.zeros(n)
        row[j] = -abs(s[j]) * x_m
        rows.append(row)
        rhs.append(-need)
    s_all = np.abs(screening.s_nominal[0, c])
    return LinearProgram(c=s_all, A=np.array(rows).reshape(-1, n), b=np.array(rhs, dtype=float),
                         lower=epoch.p0.copy(),
                         upper=np.maximum(np.full(n, epoch.config.p_k_max), epoch.p0))


def targeted_inflation(epoch: EpochInputs, screening: ScreeningResult) -> InflationResult:
    """Per-combo P_k LP, falling back to a per-combo sigma_pr_gnd LP.

    For every combo holding unsafe subsets a P_k LP is tried first; when it
    is infeasible a sigma_pr_gnd LP restricted to that combo is solved. The
    per-satellite results are merged by taking the largest value across
    combos, then adjusted exactly as in the optimal method.
    """
    t0 = time.perf_counter()
    params = nominal_params(epoch)
    m_all, c_all = screening.pairs
    lp_count = 0
    infeasible = []
    for c in np.unique(c_all):
        m_idx = m_all[c_all == c]
        p_out = solve(_p_lp(epoch, screening, m_idx, c))
        lp_count += 1
        if p_out.optimal:
            params.p = np.maximum(params.p, p_out.x)
            continue
        infeasible.append(int(c))
        lp = build_optimal_lp(epoch, screening, pairs=(m_idx, np.full(m_idx.size, c)),
                              objective_combo=int(c))
        s_out = solve(lp)
        lp_count += 1
        if s_out.optimal:
            sig = _sigma_from_lp(epoch, s_out.x, int(c))
        else:
            sig = np.full(epoch.n, epoch.config.sigma_pr_gnd_max)
        params.sigma_pr_gnd = np.maximum(params.sigma_pr_gnd, sig)
    params, iterations = adjust(epoch, screening, params)
    return _finish("targeted", epoch, screening, params, lp_count, iterations, t0,
                   infeasible_combos=infeasible)


ALGORITHMS = {
    "sigma-vig": sigma_vig_inflation,
    "targeted": targeted_inflation,
    "optimal": optimal_sigma_prgnd_inflation,
}


def run_algorithm(name: str, epoch: EpochInputs, screening: ScreeningResult) -> InflationResult:
    try:
        fn = ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None
    return fn(epoch, screening)
