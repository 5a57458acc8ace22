"""Airport configuration files (YAML), merged over bundled defaults."""

from __future__ import annotations

import copy
import math
import os
from dataclasses import dataclass, field, replace
from importlib import resources

import yaml

from .constellation import SiteLocation
from .error_models import AircraftModel, ExpCurve, LimitTable, NominalModel, ThreatModel
from .errors import ConfigError
from .geometry import IntegrityConstants

AIRPORTS = ("galeao", "ishigaki", "chennai", "memphis")


@dataclass(frozen=True)
class AirportConfig:
    name: str
    site: SiteLocation
    threat: ThreatModel
    limits: LimitTable = LimitTable()
    nominal: NominalModel = NominalModel()
    constants: IntegrityConstants = IntegrityConstants()
    aircraft: AircraftModel = AircraftModel()
    runways_x_dh: tuple[float, ...] = (2.0,)
    availability_x_dh: float = 2.0
    elevation_mask_deg: float = 5.0
    subset_depth: int = 2
    p_k: float = 0.000180
    p_k_max: float = 0.001275
    grid: tuple[float, float, float] = (6.0, 7.0, 1.0)
    sigma_vig_step: float = 0.1
    sigma_vig_ceiling: float = 100.0
    quantum: float = 0.02
    sigma_pr_gnd_max: float = 5.08
    almanac: str | None = None
    source: str = field(default="", compare=False)

    def with_threat(self, **changes) -> "AirportConfig":
        return replace(self, threat=replace(self.threat, **changes))

    @property
    def elevation_mask(self) -> float:
        return math.radians(self.elevation_mask_deg)


def _deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in (over or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _read_yaml(text: str, origin: str) -> dict:
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{origin}: invalid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{origin}: top level must be a mapping")
    return data


def _defaults() -> dict:
    text = resources.files("gbas_screen.data").joinpath("defaults.yaml").read_text("utf-8")
    return _read_yaml(text, "defaults.yaml")


def _pairs(rows, what):
    try:
        return tuple((float(a), float(b)) for a, b in rows)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be a list of [x, y] pairs") from None


def _curve(d):
    return ExpCurve(float(d["a0"]), float(d["a1"]), float(d["el0_deg"]))


def from_dict(data: dict, source: str = "") -> AirportConfig:
    cfg = _deep_merge(_defaults(), data)
    try:
        site = cfg["site"]
        th = cfg["threat"]
        nom = cfg["nominal"]
        runways = tuple(float(x) for x in cfg["runways"]["x_dh_km"])
        if not runways:
            raise ConfigError("at least one runway x_dh is required")
        avail = cfg["availability"]["x_dh_km"]
        almanac = cfg.get("almanac")
        if almanac and source and not os.path.isabs(almanac):
            almanac = os.path.join(os.path.dirname(source), almanac)
        return AirportConfig(
            name=str(cfg.get("name", "unnamed")),
            site=SiteLocation.from_degrees(float(site["latitude_deg"]), float(site["longitude_deg"]),
                                           float(site.get("height_m", 0.0))),
            threat=ThreatModel(
                g_max_night=float(th["g_max_night"]),
                daytime_gradient=_pairs(th["daytime_gradient"], "threat.daytime_gradient"),
                night_windows_ut=_pairs(th["night_windows_ut"], "threat.night_windows_ut"),
                c_factor=float(th["c_factor"]),
                sigma_vig_min=float(th["sigma_vig_min"]),
                obliquity_scaling=bool(th["obliquity_scaling"]),
                epsilon_cap_m=None if th["epsilon_cap_m"] is None else float(th["epsilon_cap_m"]),
            ),
            limits=LimitTable(_pairs(cfg["limits"]["val"], "limits.val"),
                              _pairs(cfg["limits"]["tel"], "limits.tel")),
            nominal=NominalModel(
                ground=_curve(nom["ground"]),
                ground_receivers=int(nom["ground"]["receivers"]),
                ground_floor=float(nom["ground"]["floor_m"]),
                air_multipath=_curve(nom["air_multipath"]),
                air_noise=_curve(nom["air_noise"]),
                refractivity_sigma=float(nom["tropo"]["refractivity_sigma"]),
                tropo_scale_height=float(nom["tropo"]["scale_height_m"]),
                shell_height=float(nom["iono_shell"]["shell_height_m"]),
                earth_radius=float(nom["iono_shell"]["earth_radius_m"]),
            ),
            constants=IntegrityConstants(float(cfg["integrity"]["k_ffmd"]),
                                         float(cfg["integrity"]["k_md_eph"])),
            aircraft=AircraftModel(float(cfg["aircraft"]["tau_s"]),
                                   float(cfg["aircraft"]["v_aircraft_mps"]),
                                   float(cfg["aircraft"]["glide_slope_deg"])),
            runways_x_dh=runways,
            availability_x_dh=runways[0] if avail is None else float(avail),
            elevation_mask_deg=float(cfg["elevation_mask_deg"]),
            subset_depth=int(cfg["subset_depth"]),
            p_k=float(cfg["ephemeris"]["p_k"]),
            p_k_max=float(cfg["ephemeris"]["p_k_max"]),
            grid=(float(cfg["grid"]["x_dh_max_km"]), float(cfg["grid"]["extra_km"]),
                  float(cfg["grid"]["step_km"])),
            sigma_vig_step=float(cfg["inflation"]["sigma_vig_step"]),
            sigma_vig_ceiling=float(cfg["inflation"]["sigma_vig_ceiling"]),
            quantum=float(cfg["inflation"]["quantum_m"]),
            sigma_pr_gnd_max=float(cfg["inflation"]["sigma_pr_gnd_max_m"]),
            almanac=almanac,
            source=source,
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{source or 'config'}: {type(exc).__name__}: {exc}") from None


def load_config(path_or_name: str) -> AirportConfig:
    """Load a config file, or a bundled airport by name (e.g. ``galeao``)."""
    key = str(path_or_name).lower()
    if key in AIRPORTS and not os.path.exists(path_or_name):
        text = resources.files("gbas_screen.data").joinpath(f"airports/{key}.yaml").read_text("utf-8")
        return from_dict(_read_yaml(text, key), source=f"<bundled {key}>")
    try:
        with open(path_or_name, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path_or_name}: {exc.strerror}") from None
    return from_dict(_read_yaml(text, str(path_or_name)), source=str(path_or_name))
