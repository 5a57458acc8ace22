"""Per-epoch identification of subset geometries unsafe under the threat model."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import AirportConfig
from .constellation import SatelliteView
from .error_models import (AircraftModel, BudgetArrays, ScreeningCombo, active_gradient,
                           budget_arrays, grid_combos, interpolate)
from .errors import ConfigError
from .geometry import (GeometryMatrix, SubsetId, batch_vertical, batch_vpl, enumerate_subsets,
                       subset_masks)

log = logging.getLogger(__name__)


def quantize_broadcast(sigma: float, quantum: float = 0.02) -> float:
    """Smallest multiple of ``quantum`` that is not below ``sigma``."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    k = math.ceil(sigma / quantum)
    while k > 0 and (k - 1) * quantum >= sigma:
        k -= 1
    while k * quantum < sigma:
        k += 1
    return k * quantum


@dataclass
class EpochInputs:
    """Everything the screening and inflation steps need for one epoch."""

    t: float
    hour: float
    config: AirportConfig
    views: list[SatelliteView]
    G: GeometryMatrix
    combos: list[ScreeningCombo]
    ref: int  # index of the availability combo
    budgets: BudgetArrays
    sigma_gnd0: np.ndarray  # nominal broadcast sigma_pr_gnd, quantized
    p0: np.ndarray
    val: np.ndarray  # (C,)
    tel: np.ndarray  # (C,)
    x_air: np.ndarray  # (C,) km
    eps: np.ndarray  # (C, N) worst range error per satellite, m
    subsets: list[SubsetId]
    masks: np.ndarray  # (M, N)

    @property
    def n(self) -> int:
        return len(self.views)

    @property
    def sigma_vig0(self) -> float:
        return self.config.threat.sigma_vig_min

    @property
    def night(self) -> bool:
        return self.config.threat.is_night(self.hour)

    @property
    def prns(self) -> tuple[int, ...]:
        return self.G.prns


def combos_for(config: AirportConfig) -> tuple[list[ScreeningCombo], int]:
    combos = grid_combos(*config.grid)
    ref = ScreeningCombo(config.availability_x_dh, config.availability_x_dh)
    for i, c in enumerate(combos):
        if abs(c.x_dh - ref.x_dh) < 1e-9 and abs(c.x_aircraft - ref.x_aircraft) < 1e-9:
            return combos, i
    return combos + [ref], len(combos)


def worst_range_error(g_max, combo: ScreeningCombo, aircraft: AircraftModel):
    """Differential range error (m) left by gradient ``g_max`` (mm/km)."""
    return np.asarray(g_max) * (combo.x_aircraft + aircraft.smoothing_lag_km) / 1000.0


def build_epoch(config: AirportConfig, views: Sequence[SatelliteView], t: float) -> EpochInputs:
    if len(views) < 4:
        raise ConfigError(f"only {len(views)} satellites in view at t={t:g} s; need at least 4")
    hour = (t / 3600.0) % 24.0
    G = GeometryMatrix.from_views(views)
    combos, ref = combos_for(config)
    el = np.array([v.elevation for v in views])
    budgets = budget_arrays(el, combos, config.aircraft, config.nominal)
    sigma_gnd0 = np.array([quantize_broadcast(s, config.quantum) for s in budgets.sigma_pr_gnd])
    budgets.sigma_pr_gnd = sigma_gnd0
    threat = config.threat
    grad = np.atleast_1d(active_gradient(hour, threat, el))
    if threat.obliquity_scaling:
        grad = grad * budgets.obliquity
    eps = np.array([worst_range_error(grad, c, config.aircraft) for c in combos])
    if threat.epsilon_cap_m is not None:
        eps = np.minimum(eps, threat.epsilon_cap_m)
    subsets = enumerate_subsets(len(views), config.subset_depth)
    return EpochInputs(
        t=t, hour=hour, config=config, views=list(views), G=G, combos=combos, ref=ref,
        budgets=budgets, sigma_gnd0=sigma_gnd0, p0=np.full(len(views), config.p_k),
        val=np.array([interpolate(config.limits.val, c.delta) for c in combos], dtype=float),
        tel=np.array([interpolate(config.limits.tel, c.delta) for c in combos], dtype=float),
        x_air=np.array([c.x_aircraft for c in combos]),
        eps=eps, subsets=subsets, masks=subset_masks(subsets, len(views)),
    )


# -- MIEV ------------------------------------------------------------------

def miev(s_vert, eps, c: float) -> float:
    """Largest vertical error from a worst-case impact on one satellite pair.

    Each impacted satellite's error ranges over ``[-c*eps, +eps]``; the
    extremes are reached at the corners, which are enumerated for every
    unordered pair and for every single satellite.
    """
    if not 0.0 < c <= 1.0:
        raise ValueError("c factor must lie in (0, 1]")
    a = np.asarray(s_vert, dtype=float) * np.asarray(eps, dtype=float)
    best = float(np.max(np.abs(a))) if a.size else 0.0
    signs = (1.0, -c)
    for m in range(a.size):
        for n in range(m + 1, a.size):
            for sm in signs:
                for sn in signs:
                    best = max(best, abs(a[m] * sm + a[n] * sn))
    return best


def batch_miev(s: np.ndarray, eps: np.ndarray, c: float) -> np.ndarray:
    """Vectorised :func:`miev` over leading axes; ``s`` and ``eps`` are (..., N)."""
    a = s * eps
    n = a.shape[-1]
    single = np.max(np.abs(a), axis=-1)
    if n < 2:
        return single
    i, j = np.triu_indices(n, 1)
    am, an = a[..., i], a[..., j]
    pair = np.maximum(np.abs(am + an), np.maximum(np.abs(am - c * an), np.abs(an - c * am)))
    return np.maximum(single, pair.max(axis=-1))


@dataclass
class SubsetVerdict:
    subset: SubsetId
    combo: ScreeningCombo
    miev: float
    tel: float
    unsafe: bool
    nominal_vpl: float


@dataclass
class ScreeningResult:
    """Full (subset x combo) screening tables for one epoch.

    Arrays indexed ``[m, c]``; singular subsets carry NaN and are never
    flagged unsafe.
    """

    miev: np.ndarray  # (M, C)
    nominal_vpl: np.ndarray  # (M, C)
    singular: np.ndarray  # (M,)
    s_nominal: np.ndarray  # (M, C, N)
    unsafe_mask: np.ndarray  # (M, C)

    @property
    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Unsafe (subset index, combo index) arrays, ordered subset-major."""
        return np.nonzero(self.unsafe_mask)

    @property
    def count(self) -> int:
        return int(self.unsafe_mask.sum())


def nominal_sigma_sq(epoch: EpochInputs) -> np.ndarray:
    """(C, N) nominal variances."""
    return epoch.budgets.total_sq(epoch.sigma_gnd0, epoch.sigma_vig0)


def screen_epoch(epoch: EpochInputs) -> ScreeningResult:
    M, C, N = len(epoch.subsets), len(epoch.combos), epoch.n
    sig2 = nominal_sigma_sq(epoch)  # (C, N)
    w = epoch.masks[:, None, :] / sig2[None, :, :]  # (M, C, N)
    s, _, singular = batch_vertical(epoch.G.rows, w.reshape(M * C, N), check=True)
    s = s.reshape(M, C, N)
    singular_mc = singular.reshape(M, C)
    singular_m = singular_mc.any(axis=1)
    for m in np.flatnonzero(singular_m):
        log.warning("t=%g s: skipping singular subset %s", epoch.t,
                    [epoch.prns[i] for i in epoch.subsets[m].members])
    s[singular_m] = np.nan
    m_iev = batch_miev(s, epoch.eps[None, :, :], epoch.config.threat.c_factor)
    sig2_b = np.broadcast_to(sig2[None], (M, C, N))
    _, _, vpl = batch_vpl(np.nan_to_num(s), sig2_b, epoch.p0, epoch.x_air[None, :], epoch.config.constants)
    vpl = np.where(singular_m[:, None], np.nan, vpl)
    unsafe = (m_iev > epoch.tel[None, :]) & ~singular_m[:, None]
    return ScreeningResult(m_iev, vpl, singular_m, s, unsafe)


def find_unsafe(epoch: EpochInputs, result: ScreeningResult | None = None) -> list[SubsetVerdict]:
    result = result or screen_epoch(epoch)
    out = []
    for m, c in zip(*result.pairs):
        out.append(SubsetVerdict(epoch.subsets[m], epoch.combos[c], float(result.miev[m, c]),
                                 float(epoch.tel[c]), True, float(result.nominal_vpl[m, c])))
    return out


def verdict_rows(epoch: EpochInputs, result: ScreeningResult):
    """All (subset, combo) verdicts as flat rows for CSV dumps."""
    for m, sub in enumerate(epoch.subsets):
        members = " ".join(str(epoch.prns[i]) for i in sub.members)
        for c, combo in enumerate(epoch.combos):
            yield (epoch.t, members, combo.x_dh, combo.x_aircraft, result.miev[m, c],
                   epoch.tel[c], bool(result.unsafe_mask[m, c]))
