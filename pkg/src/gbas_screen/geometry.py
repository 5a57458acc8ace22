"""Weighted least-squares vertical projections and protection levels.

Scalar helpers mirror the textbook formulas; the ``batch_*`` functions do
the same work for many (subset, weighting) pairs at once and are what the
screening and inflation loops use.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constellation import SatelliteView
from .errors import SingularGeometry

COND_LIMIT = 1e12
VERTICAL = 2
MIN_SATELLITES = 4


@dataclass(frozen=True)
class IntegrityConstants:
    k_ffmd: float = 5.762
    k_md_eph: float = 4.1

    def __post_init__(self):
        if self.k_ffmd <= 0 or self.k_md_eph <= 0:
            raise ValueError("integrity multipliers must be positive")


@dataclass(frozen=True)
class GeometryMatrix:
    rows: np.ndarray  # (n, 4)
    prns: tuple[int, ...]

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[1] != 4:
            raise ValueError("geometry rows must be n x 4")
        if self.rows.shape[0] != len(self.prns):
            raise ValueError("row count does not match prn count")
        if len(self.prns) < MIN_SATELLITES:
            raise ValueError(f"need at least {MIN_SATELLITES} satellites, got {len(self.prns)}")

    @classmethod
    def from_angles(cls, azimuth, elevation, prns=None) -> "GeometryMatrix":
        az = np.asarray(azimuth, dtype=float)
        el = np.asarray(elevation, dtype=float)
        # east, north, up, clock
        rows = np.column_stack([-np.cos(el) * np.sin(az), -np.cos(el) * np.cos(az),
                                -np.sin(el), np.ones_like(el)])
        if prns is None:
            prns = range(1, len(az) + 1)
        return cls(rows, tuple(int(p) for p in prns))

    @classmethod
    def from_views(cls, views: Sequence[SatelliteView]) -> "GeometryMatrix":
        return cls.from_angles([v.azimuth for v in views], [v.elevation for v in views],
                               [v.prn for v in views])

    def subset(self, members: Sequence[int]) -> "GeometryMatrix":
        idx = list(members)
        return GeometryMatrix(self.rows[idx], tuple(self.prns[i] for i in idx))

    def __len__(self):
        return len(self.prns)


@dataclass(frozen=True)
class SubsetId:
    members: tuple[int, ...]

    def __post_init__(self):
        if len(self.members) < MIN_SATELLITES:
            raise ValueError("subset smaller than four satellites")
        if any(b <= a for a, b in zip(self.members, self.members[1:])):
            raise ValueError("subset indices must be strictly increasing")

    @property
    def n_u(self) -> int:
        return len(self.members)


def projection_matrix(G: GeometryMatrix, sigmas_sq) -> np.ndarray:
    """Full 4 x n weighted least-squares projection ``(G'WG)^-1 G'W``."""
    w = 1.0 / np.asarray(sigmas_sq, dtype=float)
    if w.shape != (len(G),) or not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("sigma^2 must be positive, one per satellite")
    normal = G.rows.T @ (w[:, None] * G.rows)
    if np.linalg.cond(normal) > COND_LIMIT:
        raise SingularGeometry(f"normal matrix condition number exceeds {COND_LIMIT:g}")
    return np.linalg.solve(normal, G.rows.T * w)


def projection_vertical(G: GeometryMatrix, sigmas_sq) -> np.ndarray:
    return projection_matrix(G, sigmas_sq)[VERTICAL]


def vertical_sigma(s, sigmas_sq) -> float:
    s = np.asarray(s, dtype=float)
    return math.sqrt(float(np.sum(s * s * np.asarray(sigmas_sq, dtype=float))))


def vpl_h0(s, sigmas_sq, k: IntegrityConstants) -> float:
    return k.k_ffmd * vertical_sigma(s, sigmas_sq)


def vpl_eph(s, sigmas_sq, p, x_aircraft: float, k: IntegrityConstants) -> float:
    """Ephemeris-fault protection level; ``x_aircraft`` in km."""
    if x_aircraft < 0:
        raise ValueError("x_aircraft must be non-negative")
    s = np.asarray(s, dtype=float)
    bias = float(np.max(np.abs(s) * np.asarray(p, dtype=float))) * x_aircraft * 1000.0
    return bias + k.k_md_eph * vertical_sigma(s, sigmas_sq)


def vpl(s, sigmas_sq, p, x_aircraft: float, k: IntegrityConstants) -> float:
    return max(vpl_h0(s, sigmas_sq, k), vpl_eph(s, sigmas_sq, p, x_aircraft, k))


def enumerate_subsets(n: int, depth: int) -> list[SubsetId]:
    """All-in-view plus every subset with up to ``depth`` satellites removed.

    Ordered by removal count, then lexicographically; subsets below four
    satellites are never produced.
    """
    if n < MIN_SATELLITES:
        raise ValueError("need at least four satellites in view")
    out = []
    for removed in range(0, min(depth, n - MIN_SATELLITES) + 1):
        for members in itertools.combinations(range(n), n - removed):
            out.append(SubsetId(members))
    return out


def subset_masks(subsets: Sequence[SubsetId], n: int) -> np.ndarray:
    mask = np.zeros((len(subsets), n), dtype=bool)
    for i, sub in enumerate(subsets):
        mask[i, list(sub.members)] = True
    return mask


# -- batched evaluation ---------------------------------------------------

def batch_normal(rows: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``G' diag(w) G`` for each weight vector; weights (B, n) -> (B, 4, 4)."""
    outer = (rows[:, :, None] * rows[:, None, :]).reshape(len(rows), 16)
    return (weights @ outer).reshape(-1, 4, 4)


def batch_vertical(rows: np.ndarray, weights: np.ndarray, check: bool = False):
    """Vertical projection rows for many weightings.

    ``weights`` is (B, n) with zeros marking satellites outside the subset.
    Returns ``(s, var)`` where ``s`` is (B, n) and ``var`` the vertical
    variance ``[(G'WG)^-1]_33``. With ``check`` set, also returns a boolean
    array flagging normal matrices above the condition limit; those entries
    of ``s`` and ``var`` are NaN.
    """
    normal = batch_normal(rows, weights)
    singular = np.zeros(len(weights), dtype=bool)
    if check:
        singular = np.linalg.cond(normal) > COND_LIMIT
        if singular.any():
            normal = normal.copy()
            normal[singular] = np.eye(4)
    unit = np.zeros((len(normal), 4, 1))
    unit[:, VERTICAL] = 1.0
    inv_v = np.linalg.solve(normal, unit)[..., 0]  # symmetric: row 3 of the inverse
    s = (inv_v @ rows.T) * weights
    var = inv_v[:, VERTICAL]
    if check:
        s[singular] = np.nan
        var = np.where(singular, np.nan, var)
        return s, var, singular
    return s, var


def batch_vpl(s: np.ndarray, sigmas_sq: np.ndarray, p: np.ndarray, x_aircraft_km,
              k: IntegrityConstants):
    """Protection levels for batched projections; returns (h0, eph, vpl).

    ``s`` and ``sigmas_sq`` are (B, n); satellites outside a subset carry
    ``s == 0`` and so drop out of every sum.
    """
    sd = np.sqrt(np.sum(s * s * sigmas_sq, axis=-1))
    h0 = k.k_ffmd * sd
    bias = np.max(np.abs(s) * p, axis=-1) * np.asarray(x_aircraft_km) * 1000.0
    eph = bias + k.k_md_eph * sd
    return h0, eph, np.maximum(h0, eph)
