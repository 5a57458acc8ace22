"""Nominal range-error budget, ionospheric threat model and VAL/TEL tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constellation import SatelliteView
from .errors import ConfigError

EARTH_RADIUS_M = 6378136.3
SHELL_HEIGHT_M = 350000.0


@dataclass(frozen=True)
class AircraftModel:
    tau: float = 100.0  # s
    v_aircraft: float = 70.0  # m/s
    glide_slope_deg: float = 3.0

    def __post_init__(self):
        if self.tau <= 0 or self.v_aircraft < 0:
            raise ValueError("tau must be positive and v_aircraft non-negative")

    @property
    def smoothing_lag_km(self) -> float:
        """``2 tau v`` expressed in km."""
        return 2.0 * self.tau * self.v_aircraft / 1000.0

    def height_above_station(self, x_aircraft_km):
        return np.asarray(x_aircraft_km) * 1000.0 * math.tan(math.radians(self.glide_slope_deg))


@dataclass(frozen=True)
class ScreeningCombo:
    x_dh: float  # km
    x_aircraft: float  # km

    def __post_init__(self):
        if self.x_dh < 0 or self.x_aircraft < self.x_dh:
            raise ValueError(f"invalid combo x_dh={self.x_dh}, x_aircraft={self.x_aircraft}")

    @property
    def delta(self) -> float:
        return self.x_aircraft - self.x_dh


@dataclass(frozen=True)
class ExpCurve:
    """``a0 + a1 exp(-el/el0)`` in metres, elevation in degrees."""

    a0: float
    a1: float
    el0_deg: float

    def __call__(self, el_deg):
        return self.a0 + self.a1 * np.exp(-np.asarray(el_deg) / self.el0_deg)


@dataclass(frozen=True)
class NominalModel:
    """Elevation-dependent nominal error curves.

    Ground: ``sqrt(curve(el)^2 / M + a2^2)``, M reference receivers.
    Airborne: root-sum-square of a multipath and a noise curve.
    Troposphere: residual refractivity model scaled by aircraft height.
    """

    ground: ExpCurve = ExpCurve(0.15, 0.84, 15.5)
    ground_receivers: int = 4
    ground_floor: float = 0.04
    air_multipath: ExpCurve = ExpCurve(0.13, 0.53, 10.0)
    air_noise: ExpCurve = ExpCurve(0.11, 0.13, 4.0)
    refractivity_sigma: float = 10.0
    tropo_scale_height: float = 7600.0
    shell_height: float = SHELL_HEIGHT_M
    earth_radius: float = EARTH_RADIUS_M
    min_elevation_deg: float = 0.0

    def _check(self, el_deg):
        el = np.asarray(el_deg, dtype=float)
        if np.any(el <= self.min_elevation_deg) or np.any(el > 90.0 + 1e-9):
            raise ConfigError(f"nominal curves undefined at elevation(s) {el[(el <= self.min_elevation_deg) | (el > 90)]}")
        return el

    def sigma_pr_gnd(self, el_deg):
        el = self._check(el_deg)
        return np.sqrt(self.ground(el) ** 2 / self.ground_receivers + self.ground_floor ** 2)

    def sigma_pr_air(self, el_deg):
        el = self._check(el_deg)
        return np.hypot(self.air_multipath(el), self.air_noise(el))

    def sigma_tropo(self, el_deg, height_m):
        el = self._check(el_deg)
        h0 = self.tropo_scale_height
        s = np.sin(np.radians(el))
        return (self.refractivity_sigma * h0 * 1e-6 / np.sqrt(0.002 + s * s)
                * (1.0 - np.exp(-np.asarray(height_m) / h0)))


@dataclass(frozen=True)
class SigmaBudget:
    sigma_pr_gnd: float
    sigma_tropo: float
    sigma_pr_air: float
    sigma_iono: float
    obliquity: float

    @property
    def sigma_total_sq(self) -> float:
        return (self.sigma_pr_gnd ** 2 + self.sigma_tropo ** 2
                + self.sigma_pr_air ** 2 + self.sigma_iono ** 2)


@dataclass(frozen=True)
class ThreatModel:
    """Worst-case slant gradient bound.

    ``daytime_gradient`` holds (elevation deg, mm/km) anchors interpolated
    linearly and clamped; inside a night window the flat ``g_max_night``
    bound applies instead.
    """

    g_max_night: float = 425.0  # mm/km
    daytime_gradient: tuple[tuple[float, float], ...] = ((0.0, 375.0), (15.0, 375.0),
                                                         (65.0, 425.0), (90.0, 425.0))
    night_windows_ut: tuple[tuple[float, float], ...] = ()
    c_factor: float = 1.0
    sigma_vig_min: float = 6.4  # mm/km
    obliquity_scaling: bool = False
    epsilon_cap_m: float | None = None

    def __post_init__(self):
        if self.g_max_night <= 0:
            raise ValueError("g_max_night must be positive")
        if not 0.0 < self.c_factor <= 1.0:
            raise ValueError("c factor must lie in (0, 1]")
        for start, end in self.night_windows_ut:
            if not 0.0 <= start < end <= 24.0:
                raise ValueError(f"night window [{start}, {end}) outside [0, 24)")
        if not self.daytime_gradient:
            raise ValueError("daytime gradient table is empty")

    def is_night(self, hour: float) -> bool:
        return any(start <= hour < end for start, end in self.night_windows_ut)

    def daytime(self, el_rad):
        el, g = zip(*self.daytime_gradient)
        return np.interp(np.degrees(el_rad), el, g)


@dataclass(frozen=True)
class LimitTable:
    """VAL/TEL anchors over ``x_aircraft - x_dh`` (km); linear, clamped."""

    val: tuple[tuple[float, float], ...] = ((0.0, 10.0), (3.0, 25.0))
    tel: tuple[tuple[float, float], ...] = ((0.0, 31.0), (3.0, 78.0))

    def __post_init__(self):
        for name in ("val", "tel"):
            pts = getattr(self, name)
            if not pts:
                raise ValueError(f"{name} table is empty")
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ValueError(f"{name} anchors must be strictly increasing in delta x")
            if any(y <= 0 for y in ys) or any(b < a for a, b in zip(ys, ys[1:])):
                raise ValueError(f"{name} values must be positive and nondecreasing")
        for x, _ in self.val + self.tel:
            if interpolate(self.tel, x) < interpolate(self.val, x):
                raise ValueError(f"TEL below VAL at delta x = {x}")


def interpolate(points, x):
    xs, ys = zip(*points)
    return np.interp(x, xs, ys)


def obliquity(elevation: float, shell_height: float = SHELL_HEIGHT_M,
              earth_radius: float = EARTH_RADIUS_M):
    """Thin-shell slant/vertical mapping; accepts scalars or arrays."""
    ratio = earth_radius * np.cos(elevation) / (earth_radius + shell_height)
    return 1.0 / np.sqrt(1.0 - ratio * ratio)


def sigma_iono(f, sigma_vig: float, x_aircraft_km, aircraft: AircraftModel):
    """``F * sigma_vig * (x_aircraft + 2 tau v)`` in metres; sigma_vig in mm/km."""
    return f * sigma_vig * 1e-6 * (np.asarray(x_aircraft_km) + aircraft.smoothing_lag_km) * 1000.0


def sigma_budget(view: SatelliteView, combo: ScreeningCombo, sigma_vig: float,
                 aircraft: AircraftModel, nominal: NominalModel) -> SigmaBudget:
    el_deg = math.degrees(view.elevation)
    f = float(obliquity(view.elevation, nominal.shell_height, nominal.earth_radius))
    return SigmaBudget(
        sigma_pr_gnd=float(nominal.sigma_pr_gnd(el_deg)),
        sigma_tropo=float(nominal.sigma_tropo(el_deg, aircraft.height_above_station(combo.x_aircraft))),
        sigma_pr_air=float(nominal.sigma_pr_air(el_deg)),
        sigma_iono=float(sigma_iono(f, sigma_vig, combo.x_aircraft, aircraft)),
        obliquity=f,
    )


def val_of(combo: ScreeningCombo, table: LimitTable) -> float:
    return float(interpolate(table.val, combo.delta))


def tel_of(combo: ScreeningCombo, table: LimitTable) -> float:
    return float(interpolate(table.tel, combo.delta))


def active_gradient(epoch_ut_hours: float, threat: ThreatModel, elevation) -> np.ndarray | float:
    """Gradient bound (mm/km) in force for a satellite at ``elevation``."""
    if not 0.0 <= epoch_ut_hours < 24.0:
        raise ValueError("hour must lie in [0, 24)")
    if threat.is_night(epoch_ut_hours):
        return np.full_like(np.asarray(elevation, dtype=float), threat.g_max_night)[()]
    return threat.daytime(elevation)[()]


def grid_combos(x_dh_max: float = 6.0, extra: float = 7.0, step: float = 1.0) -> list[ScreeningCombo]:
    if step <= 0:
        raise ValueError("grid step must be positive")
    n_dh = int(math.floor(x_dh_max / step + 1e-9)) + 1
    n_off = int(math.floor(extra / step + 1e-9)) + 1
    return [ScreeningCombo(round(i * step, 9), round(i * step + j * step, 9))
            for i in range(n_dh) for j in range(n_off)]


@dataclass
class BudgetArrays:
    """Per-combo, per-satellite nominal error components, shape (C, N)."""

    sigma_pr_gnd: np.ndarray  # (N,), elevation only
    sigma_tropo: np.ndarray  # (C, N)
    sigma_pr_air: np.ndarray  # (N,)
    iono_per_vig: np.ndarray  # (C, N): sigma_iono for sigma_vig = 1 mm/km
    obliquity: np.ndarray = field(default=None)

    def other_sq(self, sigma_vig: float) -> np.ndarray:
        """Every variance term except the ground one."""
        return (self.sigma_tropo ** 2 + self.sigma_pr_air ** 2
                + (self.iono_per_vig * sigma_vig) ** 2)

    def total_sq(self, sigma_pr_gnd, sigma_vig: float) -> np.ndarray:
        return np.asarray(sigma_pr_gnd) ** 2 + self.other_sq(sigma_vig)


def budget_arrays(elevations, combos: Sequence[ScreeningCombo], aircraft: AircraftModel,
                  nominal: NominalModel) -> BudgetArrays:
    el = np.asarray(elevations, dtype=float)
    el_deg = np.degrees(el)
    x_air = np.array([c.x_aircraft for c in combos])
    f = obliquity(el, nominal.shell_height, nominal.earth_radius)
    height = aircraft.height_above_station(x_air)[:, None]
    return BudgetArrays(
        sigma_pr_gnd=nominal.sigma_pr_gnd(el_deg),
        sigma_tropo=nominal.sigma_tropo(el_deg[None, :], height),
        sigma_pr_air=nominal.sigma_pr_air(el_deg),
        iono_per_vig=sigma_iono(f[None, :], 1.0, x_air[:, None], aircraft),
        obliquity=f,
    )
