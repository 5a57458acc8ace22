"""GPS almanac ingestion, two-body propagation and site visibility."""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from typing import Iterable

import numpy as np

from .errors import NonConvergence, ParseError

GM = 3.986005e14  # m^3/s^2
OMEGA_E = 7.2921151467e-5  # rad/s
WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)

KEPLER_TOL = 1e-12
KEPLER_MAX_ITER = 50

FIELDS = {
    "ID": "prn",
    "SQRT_A (m^1/2)": "sqrt_semimajor_axis",
    "ECC": "eccentricity",
    "INC (rad)": "inclination",
    "RAAN (rad)": "raan_at_epoch",
    "RAAN_RATE (rad/s)": "raan_rate",
    "ARG_PERIGEE (rad)": "argument_of_perigee",
    "MEAN_ANOM (rad)": "mean_anomaly_at_epoch",
    "TOA (s)": "reference_time",
}


@dataclass(frozen=True)
class AlmanacEntry:
    prn: int
    sqrt_semimajor_axis: float
    eccentricity: float
    inclination: float
    raan_at_epoch: float
    raan_rate: float
    argument_of_perigee: float
    mean_anomaly_at_epoch: float
    reference_time: float

    @property
    def semimajor_axis(self) -> float:
        return self.sqrt_semimajor_axis ** 2

    @property
    def mean_motion(self) -> float:
        return math.sqrt(GM / self.semimajor_axis ** 3)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.mean_motion


@dataclass(frozen=True)
class SiteLocation:
    latitude: float  # rad
    longitude: float  # rad
    height: float = 0.0  # m, ellipsoidal

    def __post_init__(self):
        if abs(self.latitude) > math.pi / 2 or abs(self.longitude) > math.pi:
            raise ValueError(f"site coordinates out of range: {self}")

    @classmethod
    def from_degrees(cls, lat: float, lon: float, height: float = 0.0) -> "SiteLocation":
        return cls(math.radians(lat), math.radians(lon), height)


@dataclass(frozen=True)
class SatelliteView:
    prn: int
    azimuth: float  # rad, [0, 2pi)
    elevation: float  # rad


def _check_entry(entry: AlmanacEntry, line: int) -> None:
    if not 0.0 <= entry.eccentricity <= 0.05:
        raise ParseError(f"eccentricity {entry.eccentricity} outside [0, 0.05]", line)
    if not 0.0 < entry.inclination < math.pi:
        raise ParseError(f"inclination {entry.inclination} outside (0, pi)", line)
    if not entry.sqrt_semimajor_axis > 0.0:
        raise ParseError("sqrt semi-major axis must be positive", line)


def parse_almanac(text: str) -> list[AlmanacEntry]:
    """Parse blank-line separated ``KEY: value`` records.

    Lines starting with ``#`` are comments. Every record must carry each
    field of :data:`FIELDS` exactly once.
    """
    entries: list[AlmanacEntry] = []
    record: dict[str, float] = {}
    start = 0

    def flush(end_line: int) -> None:
        nonlocal record
        if not record:
            return
        missing = [k for k in FIELDS.values() if k not in record]
        if missing:
            raise ParseError(f"record missing fields {missing}", start)
        values = dict(record)
        values["prn"] = int(values["prn"])
        entry = AlmanacEntry(**values)
        _check_entry(entry, start)
        entries.append(entry)
        record = {}

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("#"):
            continue
        if not line:
            flush(lineno)
            continue
        if not record:
            start = lineno
        key, sep, value = line.partition(":")
        key = key.strip()
        if not sep or key not in FIELDS:
            raise ParseError(f"unrecognised field {key!r}", lineno)
        name = FIELDS[key]
        if name in record:
            raise ParseError(f"duplicate field {key!r}", lineno)
        try:
            number = float(value)
        except ValueError:
            raise ParseError(f"non-numeric value {value.strip()!r} for {key!r}", lineno) from None
        if not math.isfinite(number):
            raise ParseError(f"non-finite value for {key!r}", lineno)
        if name == "prn" and number != int(number):
            raise ParseError(f"non-integer satellite id {number}", lineno)
        record[name] = number
    flush(-1)
    return entries


def load_almanac(path=None) -> list[AlmanacEntry]:
    """Load an almanac file; without a path, the bundled 24-slot constellation."""
    if path is None:
        text = resources.files("gbas_screen.data").joinpath("almanac_24slot.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_almanac(text)


def solve_kepler(mean_anomaly: float, ecc: float) -> float:
    """Eccentric anomaly by Newton iteration."""
    E = mean_anomaly if ecc < 0.8 else math.pi
    for _ in range(KEPLER_MAX_ITER):
        f = E - ecc * math.sin(E) - mean_anomaly
        if abs(f) < KEPLER_TOL:
            return E
        E -= f / (1.0 - ecc * math.cos(E))
    if abs(E - ecc * math.sin(E) - mean_anomaly) < KEPLER_TOL:
        return E
    raise NonConvergence(f"Kepler iteration did not converge (M={mean_anomaly}, e={ecc})")


def _orbit_plane(entry: AlmanacEntry, t: float) -> tuple[float, float]:
    """Radius and argument of latitude at time t."""
    dt = t - entry.reference_time
    M = math.remainder(entry.mean_anomaly_at_epoch + entry.mean_motion * dt, 2.0 * math.pi)
    e = entry.eccentricity
    E = solve_kepler(M, e)
    nu = math.atan2(math.sqrt(1.0 - e * e) * math.sin(E), math.cos(E) - e)
    r = entry.semimajor_axis * (1.0 - e * math.cos(E))
    return r, nu + entry.argument_of_perigee


def _rotate(r: float, u: float, inc: float, node: float) -> np.ndarray:
    xp, yp = r * math.cos(u), r * math.sin(u)
    cn, sn, ci = math.cos(node), math.sin(node), math.cos(inc)
    return np.array([xp * cn - yp * ci * sn, xp * sn + yp * ci * cn, yp * math.sin(inc)])


def propagate_inertial(entry: AlmanacEntry, t: float) -> np.ndarray:
    """Position in the non-rotating frame aligned with ECEF at the weekly epoch."""
    r, u = _orbit_plane(entry, t)
    node = entry.raan_at_epoch + entry.raan_rate * (t - entry.reference_time)
    return _rotate(r, u, entry.inclination, node)


def propagate(entry: AlmanacEntry, t: float) -> np.ndarray:
    """ECEF position (m) at ``t`` seconds of week."""
    if not math.isfinite(t):
        raise ValueError("propagation time must be finite")
    r, u = _orbit_plane(entry, t)
    node = (entry.raan_at_epoch + (entry.raan_rate - OMEGA_E) * (t - entry.reference_time)
            - OMEGA_E * entry.reference_time)
    return _rotate(r, u, entry.inclination, node)


def site_ecef(site: SiteLocation) -> np.ndarray:
    slat, clat = math.sin(site.latitude), math.cos(site.latitude)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * slat * slat)
    return np.array([
        (n + site.height) * clat * math.cos(site.longitude),
        (n + site.height) * clat * math.sin(site.longitude),
        (n * (1.0 - WGS84_E2) + site.height) * slat,
    ])


def enu_rotation(site: SiteLocation) -> np.ndarray:
    """Rows are the east, north and up unit vectors in ECEF."""
    sl, cl = math.sin(site.latitude), math.cos(site.latitude)
    so, co = math.sin(site.longitude), math.cos(site.longitude)
    return np.array([
        [-so, co, 0.0],
        [-sl * co, -sl * so, cl],
        [cl * co, cl * so, sl],
    ])


def azimuth_elevation(sat_ecef, site: SiteLocation) -> tuple[float, float]:
    los = np.asarray(sat_ecef, dtype=float) - site_ecef(site)
    e, n, u = enu_rotation(site) @ los
    horiz = math.hypot(e, n)
    el = math.atan2(u, horiz)
    az = math.atan2(e, n) % (2.0 * math.pi) if horiz > 0.0 else 0.0
    return az, el


def visible_satellites(almanac: Iterable[AlmanacEntry], site: SiteLocation, t: float,
                       mask: float) -> list[SatelliteView]:
    if not 0.0 <= mask < math.pi / 2:
        raise ValueError(f"elevation mask {mask} outside [0, pi/2)")
    views = []
    for entry in sorted(almanac, key=lambda a: a.prn):
        az, el = azimuth_elevation(propagate(entry, t), site)
        if el > mask:
            views.append(SatelliteView(entry.prn, az, el))
    return views
