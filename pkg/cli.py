"""
Command-line entry point for experiment runs.

Usage:
    python cli.py sweep configs/sweep_synthetic.json [--output-dir DIR] [--epochs N] ...
    python cli.py bench configs/bench_synthetic.json
    python cli.py audit predictions.csv [--strict]
    python cli.py gen-synth configs/unfair2d_params.json data/unfair2d.csv

Exit codes: 0 success, 1 validation error, 2 solver failure.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

from pydantic import ValidationError

from config import ConstantsVar, __version__, debug_critical, debug_error, debug_info
from models.errors import ConfigError, RobustFairError
from models.schemas import SweepConfig
from services.data_service import format_validation_error
from services.sweep_service import (
    audit_predictions_csv,
    load_config,
    load_params,
    run_bench,
    run_sweep,
    write_synthetic,
)


def _float_list(text: str) -> list[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def _name_list(text: str) -> list[str]:
    return [item.strip().upper() for item in text.split(",") if item.strip()]


class CliParser(argparse.ArgumentParser):
    """Argument errors are validation errors: exit 1, not argparse's 2."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(ConstantsVar.FAIL_RESULT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(
        prog="robustfair",
        description="Adversarially robust logistic regression and fairness audits."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (("sweep", "train and audit a radius sweep"), ("bench", "time epochs per solver and radius")):
        command = commands.add_parser(name, help=help_text)
        command.add_argument("config", help="sweep configuration JSON")
        command.add_argument("--output-dir", help="result directory (overrides file and environment)")
        command.add_argument("--radii", type=_float_list, help="comma-separated radii")
        command.add_argument("--solvers", type=_name_list, help="comma-separated solvers (TRS,PGD,RANDOM)")
        command.add_argument("--epochs", type=int)
        command.add_argument("--lr", type=float, dest="learning_rate")
        command.add_argument("--seed", type=int)
        command.add_argument("--threads", type=int)
        command.add_argument("--batch-size", type=int)
        command.add_argument("--full-batch", action="store_true", help="clear batch_size from the file")

    audit = commands.add_parser("audit", help="fairness gaps of precomputed predictions")
    audit.add_argument("predictions", help="CSV with columns pred, label, sensitive")
    audit.add_argument("--strict", action="store_true", help="fail on gaps over empty groups")
    audit.add_argument("--output", help="write the JSON report here instead of stdout")

    synth = commands.add_parser("gen-synth", help="write a synthetic two-score dataset")
    synth.add_argument("params", help="generator parameters JSON")
    synth.add_argument("out", help="output CSV path")
    return parser


def apply_cli_overrides(cfg: SweepConfig, args: argparse.Namespace) -> SweepConfig:
    """
    Merge command-line flags into a configuration and re-validate it.

    Flags take precedence over file values.
    """
    document: dict[str, Any] = cfg.model_dump(mode="json")
    train: dict[str, Any] = document["train"]
    if args.radii is not None:
        document["radii"] = args.radii
    if args.solvers is not None:
        document["solvers"] = args.solvers
    for key in ("epochs", "learning_rate", "seed", "threads", "batch_size"):
        value: Optional[Any] = getattr(args, key)
        if value is not None:
            train[key] = value
    if args.full_batch:
        train["batch_size"] = None
    try:
        return SweepConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigError(f"command-line override: {format_validation_error(e)}") from e


def cmd_sweep(args: argparse.Namespace) -> None:
    cfg: SweepConfig = apply_cli_overrides(load_config(args.config), args)
    report = run_sweep(cfg, output_dir=args.output_dir, base_dir=Path(args.config).resolve().parent)
    for path in report.files:
        print(path)


def cmd_bench(args: argparse.Namespace) -> None:
    cfg: SweepConfig = apply_cli_overrides(load_config(args.config), args)
    table = run_bench(cfg, output_dir=args.output_dir, base_dir=Path(args.config).resolve().parent)
    for row in table.rows:
        print(f"{row.solver.value:>7} r={row.radius:<6g} {row.mean_epoch_time:.4g} s/epoch")
    for radius, ratio in table.ratios.items():
        print(f"PGD/TRS r={radius:<6g} {ratio:.4g}")


def cmd_audit(args: argparse.Namespace) -> None:
    result: dict[str, Any] = audit_predictions_csv(args.predictions, strict=args.strict)
    text: str = json.dumps(result, indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
        debug_info(f"[CLI] Wrote audit to {args.output}")
    else:
        print(text)


def cmd_gen_synth(args: argparse.Namespace) -> None:
    write_synthetic(load_params(args.params), args.out)


COMMANDS: dict[str, Callable[[argparse.Namespace], None]] = {
    "sweep": cmd_sweep,
    "bench": cmd_bench,
    "audit": cmd_audit,
    "gen-synth": cmd_gen_synth,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        int: Process exit code (0 success, 1 validation error, 2 solver failure)
    """
    args: argparse.Namespace = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except RobustFairError as e:
        debug_error(f"[CLI] {args.command} failed ({e.status.name}): {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.status.value
    except Exception as e:
        debug_critical(f"[CLI] Unexpected error in {args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return ConstantsVar.FAIL_RESULT
    return ConstantsVar.PASS_RESULT


if __name__ == "__main__":
    sys.exit(main())
