"""Command-line front end: ``softrgg {simulate,sweep,bounds,verify}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import checks, theory
from .config import ConfigError, RunConfig, parse_config
from .connection import InvalidRegimeError, check_assumptions
from .montecarlo import SWEEP_CSV_HEADER, TRIAL_CSV_HEADER, ResourceLimitError, run_trials, sweep
from .output import dumps_csv, dumps_json

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--trials", type=int, help="trial count (overrides config)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), help="output format")
    common.add_argument(
        "--workers", type=int,
        help="worker processes; the SOFTRGG_MAX_WORKERS environment variable takes precedence",
    )
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="softrgg", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="Monte Carlo trials for one regime")
    sub.add_parser("sweep", parents=[common], help="trials and bounds over L_values")
    sub.add_parser("bounds", parents=[common], help="Chen-Stein bound numerics, no simulation")
    sub.add_parser("verify", parents=[common], help="desk-scale acceptance checks")
    return p


def load_config(args) -> RunConfig:
    if args.config is None:
        raise ConfigError("--config is required for this command")
    try:
        text = args.config.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {args.config}: {exc}") from None
    overrides = {
        "seed": args.seed,
        "trials": args.trials,
        "out": args.out,
        "format": args.format,
        "workers": args.workers,
    }
    return parse_config(text, command=args.command, overrides=overrides)


def emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(cfg: RunConfig) -> int:
    res = run_trials(cfg.to_spec(), cfg.workers)
    if cfg.format == "csv":
        emit(dumps_csv(TRIAL_CSV_HEADER, res.trial_rows()), cfg.out)
    else:
        emit(dumps_json(res.to_dict()), cfg.out)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    Ls = cfg.L_values or (cfg.L,)
    rows = sweep(cfg.to_spec(), Ls, cfg.workers)
    if cfg.format == "csv":
        emit(dumps_csv(SWEEP_CSV_HEADER, [r.to_csv_row() for r in rows]), cfg.out)
    else:
        emit(dumps_json([r.to_dict() for r in rows]), cfg.out)
    return EXIT_OK


def cmd_bounds(cfg: RunConfig) -> int:
    spec = cfg.to_spec()
    cf = spec.connection()
    reports = []
    for L in cfg.L_values or (cfg.L,):
        regime = spec.regime(cf) if L == cfg.L else cfg.to_spec(L).regime(cf)
        d = theory.chen_stein_report(regime, cf, cfg.m_bound).to_dict()
        d["R_L"] = regime.R_L
        d["truncation_cutoff"] = regime.truncation_cutoff
        d["coupling_gap"] = theory.coupling_gap(regime, cf)
        d["assumption_margin"] = check_assumptions(cf).margin
        reports.append(d)
    if cfg.format == "csv":
        emit(dumps_csv(list(reports[0]), reports), cfg.out)
    else:
        emit(dumps_json(reports[0] if len(reports) == 1 else reports), cfg.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    results = checks.desk_checks(args.workers or 1)
    text = "".join(r.line() + "\n" for r in results)
    emit(text, args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "verify":
        print("# verify: desk-scale acceptance checks", file=sys.stderr)
        return cmd_verify(args)
    try:
        cfg = load_config(args)
    except (ConfigError, InvalidRegimeError) as exc:
        print(f"softrgg: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stderr.write("# resolved configuration\n")
    sys.stderr.write("".join(f"# {line}\n" for line in cfg.serialize().splitlines()))
    try:
        return {"simulate": cmd_simulate, "sweep": cmd_sweep, "bounds": cmd_bounds}[args.command](cfg)
    except (ValueError, ResourceLimitError) as exc:
        print(f"softrgg: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
