"""Command-line interface.

Subcommands:
  sim run      — run one experiment; write metrics.csv, summary.txt, figures
  sim validate — parse and validate a config file, reporting the first error
  sim compare  — run several protocols on one config; write per-protocol
                 CSVs and combined comparison figures

Exit codes: 0 success, 1 missing config file, 2 invalid configuration
(offending key reported on stderr), 3 output I/O failure.

Seed precedence: ``--seed`` flag, then ``SIM_SEED`` environment variable,
then the config file value.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import PROTOCOLS, ConfigError, ExperimentConfig, parse_config_file
from .engine import RunResult, run_experiment
from .metrics import write_metrics_csv
from .plots import render_report

EXIT_OK = 0
EXIT_MISSING_FILE = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sim",
        description="Deterministic P2P search/replication experiment runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--config", required=True, help="flat key=value config file")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override the run seed")
    run.add_argument(
        "--protocol",
        choices=PROTOCOLS,
        default=None,
        help="override the configured protocol",
    )
    run.add_argument(
        "--no-plots",
        action="store_true",
        help="skip figure rendering (CSV and summary only)",
    )

    val = sub.add_parser("validate", help="check a config file")
    val.add_argument("--config", required=True)

    cmp_ = sub.add_parser("compare", help="run several protocols on one config")
    cmp_.add_argument("--config", required=True)
    cmp_.add_argument("--out", required=True)
    cmp_.add_argument("--seed", type=int, default=None)
    cmp_.add_argument(
        "--protocols",
        default="proposed,rw",
        help="comma-separated protocol list (default: proposed,rw)",
    )
    cmp_.add_argument("--no-plots", action="store_true")
    return parser


def _load_config(path: str) -> ExperimentConfig:
    if not Path(path).is_file():
        print(f"config file not found: {path}", file=sys.stderr)
        raise SystemExit(EXIT_MISSING_FILE)
    try:
        return parse_config_file(path)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _apply_seed(cfg: ExperimentConfig, flag_seed: int | None) -> ExperimentConfig:
    seed = flag_seed
    if seed is None:
        env = os.environ.get("SIM_SEED")
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                print(f"invalid config: SIM_SEED: bad value {env!r}", file=sys.stderr)
                raise SystemExit(EXIT_CONFIG)
    if seed is None:
        return cfg
    try:
        return cfg.with_overrides(seed=seed)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _summary_text(result: RunResult) -> str:
    lines = [f"{key}={value}" for key, value in result.summary.items()]
    return "\n".join(lines) + "\n"


def _write_outputs(out_dir: Path, name: str, result: RunResult) -> None:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(result.records, out_dir / f"{name}.csv")
        (out_dir / "summary.txt").open("a", encoding="utf-8").write(
            _summary_text(result)
        )
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO)


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    cfg = _apply_seed(cfg, args.seed)
    if args.protocol is not None:
        try:
            cfg = cfg.with_overrides(protocol=args.protocol)
        except ConfigError as exc:
            print(f"invalid config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    result = run_experiment(cfg)
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(result.records, out_dir / "metrics.csv")
        (out_dir / "summary.txt").write_text(
            _summary_text(result), encoding="utf-8"
        )
        if not args.no_plots:
            render_report({cfg.protocol: result.records}, out_dir)
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    _load_config(args.config)
    print("ok")
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    cfg = _apply_seed(cfg, args.seed)
    protocols = [p.strip() for p in args.protocols.split(",") if p.strip()]
    if not protocols:
        print("invalid config: protocols: empty protocol list", file=sys.stderr)
        return EXIT_CONFIG
    results = {}
    for proto in protocols:
        try:
            run_cfg = cfg.with_overrides(protocol=proto)
        except ConfigError as exc:
            print(f"invalid config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        results[proto] = run_experiment(run_cfg)
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        summary_path = out_dir / "summary.txt"
        summary_path.write_text("", encoding="utf-8")
        for proto, result in results.items():
            write_metrics_csv(result.records, out_dir / f"metrics_{proto}.csv")
            with summary_path.open("a", encoding="utf-8") as fh:
                fh.write(_summary_text(result))
        if not args.no_plots:
            render_report(
                {p: r.records for p, r in results.items()}, out_dir
            )
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "validate":
        return _cmd_validate(args)
    if args.command == "compare":
        return _cmd_compare(args)
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
