"""24-hour availability simulation and algorithm comparison."""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import AirportConfig
from .constellation import AlmanacEntry, load_almanac, visible_satellites
from .errors import ConfigError, EmptyInput, IntegrityError, Unscreenable
from .inflation import ALGORITHMS, InflationResult, all_in_view_vpl, nominal_params, run_algorithm
from .screening import EpochInputs, ScreeningResult, build_epoch, screen_epoch, verdict_rows

log = logging.getLogger(__name__)

DAY_S = 86400.0
STEP_S = 60.0


@dataclass(frozen=True)
class RunConfig:
    airport: AirportConfig
    algorithm: str = "optimal"
    c_factor: float | None = None  # None keeps the airport's value
    step_s: float = STEP_S
    day_s: float = DAY_S
    out_dir: str | None = None
    verdicts: bool = False  # also write the per-epoch screening verdicts

    def __post_init__(self):
        if self.step_s <= 0:
            raise ConfigError("epoch step must be positive")
        n = self.day_s / self.step_s
        if abs(n - round(n)) > 1e-9 or n < 1:
            raise ConfigError("day length must be a positive multiple of the step")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")

    @property
    def effective_airport(self) -> AirportConfig:
        if self.c_factor is None:
            return self.airport
        try:
            return self.airport.with_threat(c_factor=self.c_factor)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def epochs(self) -> np.ndarray:
        return np.arange(int(round(self.day_s / self.step_s))) * self.step_s


@dataclass
class EpochResult:
    epoch: float
    prns: tuple[int, ...]
    nominal_vpl: float
    inflated_vpl: float
    val: float
    available: bool
    unsafe_count: int
    lp_count: int
    adjust_iterations: int
    sigma_vig: float
    sigma_pr_gnd: tuple[float, ...]
    night: bool
    timing_ms: float = field(default=0.0, compare=False)

    @property
    def inflation(self) -> float:
        return self.inflated_vpl - self.nominal_vpl


def _almanac(airport: AirportConfig) -> list[AlmanacEntry]:
    almanac = load_almanac(airport.almanac)
    if not almanac:
        raise ConfigError("almanac holds no satellites")
    return almanac


def prepare_epoch(airport: AirportConfig, almanac: Sequence[AlmanacEntry], t: float):
    views = visible_satellites(almanac, airport.site, t, airport.elevation_mask)
    try:
        epoch = build_epoch(airport, views, t)
    except ConfigError as exc:
        raise ConfigError(f"epoch {t:g} s: {exc}") from None
    return epoch, screen_epoch(epoch)


def record(epoch: EpochInputs, screening: ScreeningResult, result: InflationResult) -> EpochResult:
    ok, margin = result.screened, result.margin
    if not ok:
        raise IntegrityError(f"{result.algorithm} output fails verification (worst margin "
                             f"{margin:.4f} m)", epoch.t)
    nominal = float(all_in_view_vpl(epoch, nominal_params(epoch))[epoch.ref])
    inflated = float(result.all_in_view_vpl_by_combo[epoch.ref])
    val = float(epoch.val[epoch.ref])
    return EpochResult(
        epoch=epoch.t, prns=epoch.prns, nominal_vpl=nominal, inflated_vpl=inflated, val=val,
        available=inflated < val, unsafe_count=screening.count, lp_count=result.lp_count,
        adjust_iterations=result.adjust_iterations, sigma_vig=result.params.sigma_vig,
        sigma_pr_gnd=tuple(float(s) for s in result.params.sigma_pr_gnd), night=epoch.night,
        timing_ms=result.elapsed_ms,
    )


def _run_epochs(config: RunConfig, algorithms: Iterable[str]):
    """Yield ``(epoch, screening, {algorithm: EpochResult})`` in epoch order."""
    airport = config.effective_airport
    almanac = _almanac(airport)
    algorithms = list(algorithms)
    for t in config.epochs:
        epoch, screening = prepare_epoch(airport, almanac, float(t))
        out = {}
        for name in algorithms:
            try:
                result = run_algorithm(name, epoch, screening)
            except Unscreenable as exc:
                if exc.epoch is None:
                    exc = Unscreenable(str(exc), float(t))
                raise exc
            out[name] = record(epoch, screening, result)
        yield epoch, screening, out


def _collect(config: RunConfig, algorithms: Sequence[str]) -> dict[str, list[EpochResult]]:
    results: dict[str, list[EpochResult]] = {a: [] for a in algorithms}
    verdict_file = None
    if config.out_dir and config.verdicts:
        os.makedirs(config.out_dir, exist_ok=True)
        verdict_file = open(os.path.join(config.out_dir, "verdicts.csv"), "w", newline="",
                            encoding="utf-8")
    try:
        writer = csv.writer(verdict_file) if verdict_file else None
        if writer:
            writer.writerow(VERDICT_COLUMNS)
        for epoch, screening, per_epoch in _run_epochs(config, algorithms):
            for name, r in per_epoch.items():
                results[name].append(r)
            if writer:
                for row in verdict_rows(epoch, screening):
                    writer.writerow(_verdict_row(row))
    finally:
        if verdict_file:
            verdict_file.close()
    return results


def run_day(config: RunConfig) -> list[EpochResult]:
    """Simulate one day at the configured cadence with one algorithm."""
    results = _collect(config, [config.algorithm])[config.algorithm]
    if config.out_dir:
        write_run(config, results)
    return results


def availability(results: Sequence[EpochResult]) -> float:
    """Percentage of epochs whose inflated all-in-view VPL is below VAL."""
    if not results:
        raise EmptyInput("no epoch results")
    return round(100.0 * sum(r.available for r in results) / len(results), 2)


def summarize(results: Sequence[EpochResult]) -> dict:
    night = [r for r in results if r.night]
    return {
        "epochs": len(results),
        "availability_pct": availability(results),
        "night_epochs": len(night),
        "night_availability_pct": availability(night) if night else None,
        "mean_vpl_inflation_m": round(float(np.mean([r.inflation for r in results])), 6),
        "mean_inflated_vpl_m": round(float(np.mean([r.inflated_vpl for r in results])), 6),
        "max_inflated_vpl_m": round(float(np.max([r.inflated_vpl for r in results])), 6),
        "total_lp_count": int(sum(r.lp_count for r in results)),
        "max_lp_count": int(max(r.lp_count for r in results)),
        "total_adjust_iterations": int(sum(r.adjust_iterations for r in results)),
        "epochs_with_unsafe_subsets": int(sum(r.unsafe_count > 0 for r in results)),
        "wall_time_ms": round(float(sum(r.timing_ms for r in results)), 1),
    }


@dataclass
class Comparison:
    airport: str
    c_factor: float
    results: dict[str, list[EpochResult]]
    wall_time_s: float = 0.0

    def night_fraction_lower(self, better: str, worse: str) -> float:
        """Fraction of night epochs where ``better`` has strictly lower inflated VPL."""
        pairs = [(a, b) for a, b in zip(self.results[better], self.results[worse]) if a.night]
        if not pairs:
            return float("nan")
        return sum(a.inflated_vpl < b.inflated_vpl for a, b in pairs) / len(pairs)

    def report(self) -> dict:
        algos = {name: summarize(res) for name, res in self.results.items()}
        out = {"airport": self.airport, "c_factor": self.c_factor, "algorithms": algos}
        if {"optimal", "sigma-vig", "targeted"} <= set(self.results):
            out["night_optimal_lower_than_sigma_vig"] = round(self.night_fraction_lower("optimal", "sigma-vig"), 6)
            out["night_optimal_lower_than_targeted"] = round(self.night_fraction_lower("optimal", "targeted"), 6)
        out["wall_time_s"] = round(self.wall_time_s, 3)
        return out


def compare_algorithms(config: RunConfig, algorithms: Sequence[str] = tuple(ALGORITHMS)) -> Comparison:
    """Run every algorithm on identical epochs."""
    t0 = time.perf_counter()
    results = _collect(config, algorithms)
    airport = config.effective_airport
    cmp = Comparison(airport.name, airport.threat.c_factor, results, time.perf_counter() - t0)
    if config.out_dir:
        write_comparison(config, cmp)
    return cmp


# -- output files -----------------------------------------------------------

EPOCH_COLUMNS = ["epoch", "algorithm", "prns", "nominal_vpl", "inflated_vpl", "val", "available",
                 "unsafe_count", "lp_count", "adjust_iterations", "sigma_vig", "sigma_pr_gnd",
                 "night", "timing_ms"]
TIMING_KEYS = ("wall_time_ms", "wall_time_s", "timing_ms")
VERDICT_COLUMNS = ["epoch", "subset", "x_dh", "x_aircraft", "miev", "tel", "unsafe"]


def _verdict_row(row) -> list:
    t, members, x_dh, x_air, miev, tel, unsafe = row
    miev_txt = "nan" if np.isnan(miev) else f"{miev:.6f}"
    return [f"{t:.0f}", members, f"{x_dh:g}", f"{x_air:g}", miev_txt, f"{tel:.3f}", int(unsafe)]


def _epoch_row(algorithm: str, r: EpochResult) -> list:
    return [f"{r.epoch:.0f}", algorithm, " ".join(map(str, r.prns)), f"{r.nominal_vpl:.6f}",
            f"{r.inflated_vpl:.6f}", f"{r.val:.3f}", int(r.available), r.unsafe_count, r.lp_count,
            r.adjust_iterations, f"{r.sigma_vig:.1f}", " ".join(f"{s:.2f}" for s in r.sigma_pr_gnd),
            int(r.night), f"{r.timing_ms:.3f}"]


def write_epochs_csv(path: str, results: dict[str, list[EpochResult]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(EPOCH_COLUMNS)
        for name, rows in results.items():
            for r in rows:
                w.writerow(_epoch_row(name, r))


def write_vpl_series(path: str, results: dict[str, list[EpochResult]]) -> None:
    names = list(results)
    first = results[names[0]]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "hour_ut", "nominal_vpl", "val"] + [f"vpl_{n}" for n in names])
        for i, r in enumerate(first):
            w.writerow([f"{r.epoch:.0f}", f"{r.epoch / 3600.0:.4f}", f"{r.nominal_vpl:.6f}",
                        f"{r.val:.3f}"] + [f"{results[n][i].inflated_vpl:.6f}" for n in names])


def _write_json(path: str, data: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_run(config: RunConfig, results: list[EpochResult]) -> None:
    os.makedirs(config.out_dir, exist_ok=True)
    airport = config.effective_airport
    data = {config.algorithm: results}
    write_epochs_csv(os.path.join(config.out_dir, "epochs.csv"), data)
    write_vpl_series(os.path.join(config.out_dir, "vpl_series.csv"), data)
    summary = {"airport": airport.name, "c_factor": airport.threat.c_factor,
               "algorithm": config.algorithm, **summarize(results)}
    _write_json(os.path.join(config.out_dir, "summary.json"), summary)


def write_comparison(config: RunConfig, cmp: Comparison) -> None:
    os.makedirs(config.out_dir, exist_ok=True)
    write_epochs_csv(os.path.join(config.out_dir, "epochs.csv"), cmp.results)
    write_vpl_series(os.path.join(config.out_dir, "vpl_series.csv"), cmp.results)
    _write_json(os.path.join(config.out_dir, "summary.json"), cmp.report())


def strip_timing(data):
    """Drop wall-clock fields from a summary for reproducibility comparisons."""
    if isinstance(data, dict):
        return {k: strip_timing(v) for k, v in data.items() if k not in TIMING_KEYS}
    if isinstance(data, list):
        return [strip_timing(v) for v in data]
    return data
