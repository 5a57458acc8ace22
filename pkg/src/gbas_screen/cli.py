"""Command-line entry point: ``gbas-screen {run,compare,dump-lp}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import load_config
from .errors import ConfigError, GbasScreenError, IntegrityError, Unscreenable
from .inflation import ALGORITHMS, build_optimal_lp
from .lp_solver import format_lp, solve
from .simulator import DAY_S, STEP_S, RunConfig, _almanac, compare_algorithms, prepare_epoch, run_day, summarize

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_INTEGRITY = 3

log = logging.getLogger("gbas_screen")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gbas-screen", description="GBAS geometry-screening simulator")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True,
                        help="airport YAML file or bundled airport name (galeao, ishigaki, chennai, memphis)")
        sp.add_argument("--c-factor", type=float, default=None, help="override the config's c factor")
        sp.add_argument("--step", type=float, default=STEP_S, help="epoch spacing in seconds (default 60)")
        sp.add_argument("--day", type=float, default=DAY_S, help="simulated span in seconds (default 86400)")

    run = sub.add_parser("run", help="simulate one day with one algorithm")
    common(run)
    run.add_argument("--algorithm", required=True, choices=sorted(ALGORITHMS))
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--verdicts", action="store_true", help="also write verdicts.csv")

    cmp = sub.add_parser("compare", help="run all three algorithms on identical epochs")
    common(cmp)
    cmp.add_argument("--out", required=True, help="output directory")
    cmp.add_argument("--verdicts", action="store_true", help="also write verdicts.csv")

    dump = sub.add_parser("dump-lp", help="print the sigma_pr_gnd LP of one epoch")
    dump.add_argument("--config", required=True)
    dump.add_argument("--epoch", type=int, required=True, help="epoch index (0 = start of day)")
    dump.add_argument("--c-factor", type=float, default=None)
    dump.add_argument("--step", type=float, default=STEP_S)
    dump.add_argument("--solve", action="store_true", help="append the solver outcome")
    return p


def _run_config(args, algorithm="optimal") -> RunConfig:
    airport = load_config(args.config)
    return RunConfig(airport, algorithm=algorithm, c_factor=args.c_factor, step_s=args.step,
                     day_s=args.day, out_dir=getattr(args, "out", None),
                     verdicts=getattr(args, "verdicts", False))


def _cmd_run(args) -> int:
    cfg = _run_config(args, args.algorithm)
    results = run_day(cfg)
    s = summarize(results)
    print(f"{cfg.effective_airport.name} {args.algorithm}: availability {s['availability_pct']:.2f}% "
          f"over {s['epochs']} epochs, mean VPL inflation {s['mean_vpl_inflation_m']:.3f} m")
    return EXIT_OK


def _cmd_compare(args) -> int:
    cmp = compare_algorithms(_run_config(args))
    report = cmp.report()
    for name, s in report["algorithms"].items():
        print(f"{name:10s} availability {s['availability_pct']:6.2f}%  mean inflation "
              f"{s['mean_vpl_inflation_m']:.3f} m  LPs {s['total_lp_count']}")
    return EXIT_OK


def _cmd_dump_lp(args) -> int:
    if args.epoch < 0:
        raise ConfigError("epoch index must be non-negative")
    airport = load_config(args.config)
    if args.c_factor is not None:
        airport = RunConfig(airport, c_factor=args.c_factor).effective_airport
    epoch, screening = prepare_epoch(airport, _almanac(airport), args.epoch * args.step)
    lp = build_optimal_lp(epoch, screening)
    sys.stdout.write(f"# epoch {args.epoch} t={epoch.t:g} s prns {' '.join(map(str, epoch.prns))}\n")
    sys.stdout.write(format_lp(lp))
    if args.solve:
        out = solve(lp)
        sys.stdout.write(json.dumps({"status": out.status, "objective": out.objective,
                                     "x": None if out.x is None else [float(v) for v in out.x]}) + "\n")
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "compare": _cmd_compare, "dump-lp": _cmd_dump_lp}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrityError, Unscreenable) as exc:
        print(f"integrity failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except GbasScreenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
