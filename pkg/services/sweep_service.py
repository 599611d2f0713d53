"""
Sweep Service - Configuration-driven experiment runs.

This module parses sweep configurations, trains one model per
(solver, radius) cell plus the nonrobust baseline, evaluates every model on
both splits and writes the long-format result files:

    fairness.csv    five gaps and accuracy per (solver, radius, split)
    accuracy.csv    accuracy and final losses per (solver, radius, split)
    timing.csv      mean epoch times and PGD/TRS ratios
    comparison.csv  side-by-side table at one radius
    summary.json    resolved config, model weights, improvement counts
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from config import ConstantsVar, SweepDefaults, debug_error, debug_info, debug_success
from models.errors import ConfigError, DatasetError, RobustFairError
from models.schemas import CsvSource, SolverKind, SweepConfig, TrainConfig, Unfair2dParams
from services.data_service import (
    TabularDataset,
    format_validation_error,
    generate_unfair2d,
    generate_unfair2d_frame,
    load_csv,
    load_schema,
    train_test_split,
)
from services.fairness_service import (
    FairnessReport,
    count_improvements,
    fairness_report,
    gap_to_float,
)
from services.trainer_service import TimingTable, TimingRow, TrainHistory, benchmark_epochs, evaluate, train
from services.model_service import AffineModel
from services.solver_service import default_pgd_alpha, default_pgd_stop_tol, default_trs_tol

SPLITS: tuple[str, str] = ("train", "test")
FAIRNESS_COLUMNS: list[str] = [
    "solver", "radius", "split", "ind", "sep_y0", "sep_y1", "suf_yhat0", "suf_yhat1", "accuracy"
]
GAP_FORMAT: str = "{:.6f}"


@dataclass(frozen=True)
class SweepRow:
    """Evaluation of one trained model on one split."""
    solver: SolverKind
    radius: float
    split: str
    report: FairnessReport
    accuracy: float
    mean_epoch_time: float


@dataclass(frozen=True)
class CellResult:
    """One trained (solver, radius) cell."""
    solver: SolverKind
    radius: float
    config: TrainConfig
    model: AffineModel
    history: TrainHistory
    rows: tuple[SweepRow, ...]


@dataclass
class SweepReport:
    """
    Everything a sweep produced.

    Attributes:
        config: The resolved configuration
        cells: Trained cells, baseline first, then radius-major in solver order
        complete: False when a failure cut the sweep short
        error: Message of that failure
        files: Paths written
    """
    config: SweepConfig
    cells: list[CellResult] = field(default_factory=list)
    complete: bool = True
    error: Optional[str] = None
    files: list[Path] = field(default_factory=list)

    @property
    def rows(self) -> list[SweepRow]:
        return [row for cell in self.cells for row in cell.rows]

    def row(self, solver: SolverKind, radius: float, split: str) -> SweepRow:
        for candidate in self.rows:
            if candidate.solver is solver and candidate.radius == radius and candidate.split == split:
                return candidate
        raise KeyError((solver, radius, split))


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def parse_config(text: str) -> SweepConfig:
    """
    Parse and validate a JSON sweep configuration.

    Args:
        text: JSON document

    Returns:
        SweepConfig with every default filled in

    Raises:
        ConfigError: Syntax error (with line and column) or constraint
            violation (with the dotted field path)
    """
    try:
        document: Any = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"line {e.lineno}, column {e.colno}: {e.msg}") from e
    try:
        return SweepConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigError(format_validation_error(e)) from e


def serialize_config(cfg: SweepConfig) -> str:
    """Resolved configuration as indented JSON."""
    return cfg.model_dump_json(indent=2)


def load_config(path: Union[str, Path]) -> SweepConfig:
    try:
        text: str = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        return parse_config(text)
    except ConfigError as e:
        raise ConfigError(f"{path}: {e}") from e


def resolve_output_dir(cfg: SweepConfig, override: Optional[Union[str, Path]] = None) -> Path:
    """Explicit override, then ROBUSTFAIR_OUTPUT_DIR, then the config file, then `results`."""
    return Path(override or ConstantsVar.OUTPUT_DIR or cfg.output_dir or SweepDefaults.OUTPUT_DIR)


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------

def load_splits(cfg: SweepConfig, base_dir: Optional[Path] = None) -> tuple[TabularDataset, TabularDataset]:
    """
    Build the train and test splits named by the configuration.

    Relative CSV and schema paths resolve against base_dir when given.
    """
    source = cfg.dataset
    if isinstance(source, CsvSource):
        def resolve(path: str) -> Path:
            candidate = Path(path)
            return candidate if candidate.is_absolute() or base_dir is None else base_dir / candidate

        schema = source.columns if source.columns is not None else load_schema(resolve(source.schema_file))
        full: TabularDataset = load_csv(resolve(source.path), schema)
        return train_test_split(full, source.test_fraction, source.split_seed)

    params: Unfair2dParams = source.params
    test_params: Unfair2dParams = params.model_copy(update={"m": source.test_size, "seed": params.seed + 1})
    return generate_unfair2d(params), generate_unfair2d(test_params)


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

def _cells(cfg: SweepConfig) -> list[tuple[SolverKind, float]]:
    cells: list[tuple[SolverKind, float]] = [(SolverKind.NONE, 0.0)]
    for radius in cfg.radii:
        cells.extend((solver, radius) for solver in cfg.robust_solvers if radius > 0.0)
    return cells


def _run_cell(
    solver: SolverKind,
    radius: float,
    base: TrainConfig,
    splits: dict[str, TabularDataset]
) -> CellResult:
    cell_cfg: TrainConfig = base.model_copy(update={"solver": solver, "radius": radius})
    model, history = train(splits["train"], cell_cfg)
    rows: list[SweepRow] = []
    for split, data in splits.items():
        accuracy, preds = evaluate(model, data)
        rows.append(SweepRow(
            solver=solver,
            radius=radius,
            split=split,
            report=fairness_report(preds, data.y, data.s),
            accuracy=accuracy,
            mean_epoch_time=history.mean_epoch_time
        ))
    debug_info(
        f"[Sweep] {solver.value} r={radius}: train acc={rows[0].accuracy:.4f}, test acc={rows[1].accuracy:.4f}"
    )
    return CellResult(solver, radius, cell_cfg, model, history, tuple(rows))


def run_sweep(
    cfg: SweepConfig,
    output_dir: Optional[Union[str, Path]] = None,
    base_dir: Optional[Path] = None
) -> SweepReport:
    """
    Train, evaluate and write every cell of a sweep.

    Cells run sequentially and single-threaded when timing is emitted;
    otherwise up to cfg.cell_workers cells train in parallel. Files are
    written once at the end. If a cell fails, the finished cells are still
    written (summary.json marks the run partial) before the error propagates.

    Args:
        cfg: Validated sweep configuration
        output_dir: Overrides cfg.output_dir and the environment default
        base_dir: Directory that relative dataset paths resolve against

    Returns:
        SweepReport
    """
    target: Path = resolve_output_dir(cfg, output_dir)
    train_set, test_set = load_splits(cfg, base_dir)
    splits: dict[str, TabularDataset] = {"train": train_set, "test": test_set}

    base: TrainConfig = cfg.train
    if cfg.emit.timing:
        base = base.model_copy(update={"threads": 1})
    workers: int = 1 if cfg.emit.timing else cfg.cell_workers

    cells: list[tuple[SolverKind, float]] = _cells(cfg)
    debug_info(f"[Sweep] {len(cells)} cells on m_train={train_set.m}, m_test={test_set.m} -> {target}")
    resolved: SweepConfig = cfg.model_copy(update={"output_dir": str(target), "train": base})
    report = SweepReport(config=resolved)

    try:
        if workers == 1:
            for solver, radius in cells:
                report.cells.append(_run_cell(solver, radius, base, splits))
        else:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                futures = [executor.submit(_run_cell, solver, radius, base, splits) for solver, radius in cells]
                for future in futures:
                    report.cells.append(future.result())
    except RobustFairError as e:
        debug_error(f"[Sweep] Aborted after {len(report.cells)} of {len(cells)} cells: {e}")
        report.complete = False
        report.error = str(e)
        write_results(report, target, splits)
        raise

    write_results(report, target, splits)
    debug_success(f"[Sweep] Wrote {len(report.files)} files to {target}")
    return report


# ---------------------------------------------------------------------------
# Result files
# ---------------------------------------------------------------------------

def _fmt_gap(value: Optional[float]) -> str:
    return SweepDefaults.NA_LITERAL if value is None else GAP_FORMAT.format(value)


def _fmt_radius(radius: float) -> str:
    return format(radius, "g")


def _fmt_time(seconds: float) -> str:
    return format(seconds, f".{SweepDefaults.TIMING_DIGITS}g")


def fairness_frame(report: SweepReport) -> pd.DataFrame:
    records: list[dict[str, str]] = []
    for row in report.rows:
        gaps: dict[str, Optional[float]] = row.report.as_floats()
        records.append({
            "solver": row.solver.value,
            "radius": _fmt_radius(row.radius),
            "split": row.split,
            **{key: _fmt_gap(value) for key, value in gaps.items()},
            "accuracy": GAP_FORMAT.format(row.accuracy),
        })
    return pd.DataFrame(records, columns=FAIRNESS_COLUMNS)


def accuracy_frame(report: SweepReport) -> pd.DataFrame:
    records: list[dict[str, str]] = []
    for cell in report.cells:
        for row in cell.rows:
            records.append({
                "solver": cell.solver.value,
                "radius": _fmt_radius(cell.radius),
                "split": row.split,
                "accuracy": GAP_FORMAT.format(row.accuracy),
                "final_loss": GAP_FORMAT.format(cell.history.loss[-1]),
                "final_perturbed_loss": GAP_FORMAT.format(cell.history.perturbed_loss[-1]),
            })
    return pd.DataFrame(records, columns=["solver", "radius", "split", "accuracy", "final_loss", "final_perturbed_loss"])


def timing_table_from_cells(cells: list[CellResult]) -> TimingTable:
    """PGD/TRS ratios from full-precision cell timings."""
    rows: list[TimingRow] = [TimingRow(c.solver, c.radius, c.history.mean_epoch_time) for c in cells]
    ratios: dict[float, float] = {}
    for radius in sorted({c.radius for c in cells}):
        timed: dict[SolverKind, float] = {row.solver: row.mean_epoch_time for row in rows if row.radius == radius}
        if SolverKind.PGD in timed and SolverKind.TRS in timed and timed[SolverKind.TRS] > 0.0:
            ratios[radius] = timed[SolverKind.PGD] / timed[SolverKind.TRS]
    return TimingTable(rows=rows, ratios=ratios)


def timing_frame(table: TimingTable) -> pd.DataFrame:
    """
    Long-format timing table.

    Ratios are computed before rounding; the extremes appear as
    `PGD/TRS min` and `PGD/TRS max` rows.
    """
    records: list[dict[str, str]] = [
        {"solver": row.solver.value, "radius": _fmt_radius(row.radius), "seconds_per_epoch": _fmt_time(row.mean_epoch_time)}
        for row in table.rows
    ]
    records += [
        {"solver": "PGD/TRS", "radius": _fmt_radius(radius), "seconds_per_epoch": _fmt_time(ratio)}
        for radius, ratio in table.ratios.items()
    ]
    for label, extreme in (("PGD/TRS min", table.min_ratio), ("PGD/TRS max", table.max_ratio)):
        if extreme is not None:
            records.append({"solver": label, "radius": _fmt_radius(extreme[0]), "seconds_per_epoch": _fmt_time(extreme[1])})
    return pd.DataFrame(records, columns=["solver", "radius", "seconds_per_epoch"])


def comparison_frame(report: SweepReport) -> Optional[pd.DataFrame]:
    """
    Side-by-side table: nonrobust baseline next to every solver at one radius.

    Each metric has a row per conditioning value (Y = 0 / Y = 1 for
    independence and separation, Yhat = 0 / Yhat = 1 for sufficiency).
    """
    radius: Optional[float] = report.config.resolved_compare_radius
    if radius is None:
        return None
    columns: list[tuple[str, SolverKind, float]] = [("nonrobust", SolverKind.NONE, 0.0)]
    for solver in report.config.robust_solvers:
        if any(c.solver is solver and c.radius == radius for c in report.cells):
            columns.append((solver.value, solver, radius))
    if len(columns) == 1:
        return None

    records: list[dict[str, str]] = []
    for split in SPLITS:
        rows: dict[str, SweepRow] = {name: report.row(solver, r, split) for name, solver, r in columns}
        tables: dict[str, list] = {name: row.report.to_table_rows() for name, row in rows.items()}
        for index, (metric, _, _) in enumerate(tables["nonrobust"]):
            for condition in (0, 1):
                record: dict[str, str] = {"split": split, "metric": metric, "condition": str(condition)}
                for name in tables:
                    record[name] = _fmt_gap(tables[name][index][1 + condition])
                records.append(record)
        accuracy: dict[str, str] = {"split": split, "metric": "Accuracy", "condition": ""}
        accuracy.update({name: GAP_FORMAT.format(row.accuracy) for name, row in rows.items()})
        records.append(accuracy)

    frame: pd.DataFrame = pd.DataFrame(records, columns=["split", "metric", "condition", *[c[0] for c in columns]])
    frame.attrs["radius"] = radius
    return frame


def resolved_solver_settings(cfg: TrainConfig) -> dict[str, Any]:
    """
    Inner-solver settings a cell actually ran with.

    Radius-dependent defaults (PGD step and stop threshold, TRS tolerance)
    are materialized at the cell's radius. Cells without an iterative solver
    report an empty mapping.
    """
    if cfg.radius <= 0.0 or cfg.solver in (SolverKind.NONE, SolverKind.RANDOM):
        return {}
    if cfg.solver is SolverKind.TRS:
        return {
            "tol": default_trs_tol(cfg.radius) if cfg.trs.tol is None else cfg.trs.tol,
            "max_iter": cfg.trs.max_iter,
        }
    return {
        "alpha": default_pgd_alpha(cfg.radius) if cfg.pgd.alpha is None else cfg.pgd.alpha,
        "max_iter": cfg.pgd.max_iter,
        "stop_tol": default_pgd_stop_tol(cfg.radius) if cfg.pgd.stop_tol is None else cfg.pgd.stop_tol,
        "step_rule": cfg.pgd.step_rule.value,
    }


def summary_document(report: SweepReport, splits: dict[str, TabularDataset]) -> dict[str, Any]:
    """Resolved config, dataset shape, model weights and improvement counts."""
    baseline: dict[str, FairnessReport] = {
        row.split: row.report for row in report.rows if row.solver is SolverKind.NONE
    }
    improvements: list[dict[str, Any]] = []
    improved_by: dict[tuple[SolverKind, float, str], int] = {}
    for row in report.rows:
        if row.solver is SolverKind.NONE or row.split not in baseline:
            continue
        improved, comparable = count_improvements(row.report, baseline[row.split])
        improved_by[(row.solver, row.radius, row.split)] = improved
        improvements.append({
            "solver": row.solver.value,
            "radius": row.radius,
            "split": row.split,
            "improved": improved,
            "comparable": comparable,
        })

    trs_vs_random: list[dict[str, Any]] = []
    for (solver, radius, split), improved in improved_by.items():
        if solver is SolverKind.TRS and (SolverKind.RANDOM, radius, split) in improved_by:
            rival: int = improved_by[(SolverKind.RANDOM, radius, split)]
            trs_vs_random.append({
                "radius": radius,
                "split": split,
                "trs_improved": improved,
                "random_improved": rival,
                "trs_better": improved > rival,
            })

    timing: TimingTable = timing_table_from_cells(report.cells)
    return {
        "status": "complete" if report.complete else "partial",
        "error": report.error,
        "config": report.config.model_dump(mode="json"),
        "dataset": {
            "m_train": splits["train"].m,
            "m_test": splits["test"].m,
            "n_in": splits["train"].n_in,
            "feature_names": list(splits["train"].feature_names),
        },
        "models": [
            {
                "solver": cell.solver.value,
                "radius": cell.radius,
                "w": cell.model.w.tolist(),
                "b": cell.model.b,
                "final_loss": cell.history.loss[-1],
                "final_perturbed_loss": cell.history.perturbed_loss[-1],
                "mean_epoch_time": cell.history.mean_epoch_time,
                "settings": resolved_solver_settings(cell.config),
            }
            for cell in report.cells
        ],
        "improvements": improvements,
        "trs_vs_random": trs_vs_random,
        "timing": {
            "ratios": [{"radius": r, "pgd_over_trs": v} for r, v in timing.ratios.items()],
            "min_ratio": None if timing.min_ratio is None else {"radius": timing.min_ratio[0], "pgd_over_trs": timing.min_ratio[1]},
            "max_ratio": None if timing.max_ratio is None else {"radius": timing.max_ratio[0], "pgd_over_trs": timing.max_ratio[1]},
        },
    }


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def write_results(report: SweepReport, target: Path, splits: dict[str, TabularDataset]) -> list[Path]:
    """Write every enabled result file for the cells finished so far."""
    target.mkdir(parents=True, exist_ok=True)
    emit = report.config.emit
    written: list[Path] = []

    if emit.fairness:
        written.append(_write_csv(fairness_frame(report), target / "fairness.csv"))
    if emit.accuracy:
        written.append(_write_csv(accuracy_frame(report), target / "accuracy.csv"))
    if emit.timing:
        written.append(_write_csv(timing_frame(timing_table_from_cells(report.cells)), target / "timing.csv"))
    if emit.comparison and report.complete:
        comparison: Optional[pd.DataFrame] = comparison_frame(report)
        if comparison is not None:
            written.append(_write_csv(comparison, target / "comparison.csv"))

    summary_path: Path = target / "summary.json"
    summary_path.write_text(json.dumps(summary_document(report, splits), indent=2) + "\n", encoding="utf-8")
    written.append(summary_path)
    report.files = written
    return written


# ---------------------------------------------------------------------------
# Benchmark, audit and synthetic export
# ---------------------------------------------------------------------------

def run_bench(
    cfg: SweepConfig,
    output_dir: Optional[Union[str, Path]] = None,
    base_dir: Optional[Path] = None
) -> TimingTable:
    """
    Single-threaded epoch timing of every swept solver and radius.

    Writes timing.csv into the output directory.
    """
    target: Path = resolve_output_dir(cfg, output_dir)
    train_set, _ = load_splits(cfg, base_dir)
    solvers: list[SolverKind] = cfg.robust_solvers or [SolverKind.NONE]
    radii: list[float] = [r for r in cfg.radii if r > 0.0] or [0.0]
    table: TimingTable = benchmark_epochs(train_set, radii, solvers, cfg.train)

    target.mkdir(parents=True, exist_ok=True)
    _write_csv(timing_frame(table), target / "timing.csv")
    debug_success(f"[Bench] Wrote {target / 'timing.csv'}")
    return table


AUDIT_COLUMNS: tuple[str, str, str] = ("pred", "label", "sensitive")


def audit_predictions_csv(path: Union[str, Path], strict: bool = False) -> dict[str, Any]:
    """
    Fairness gaps of precomputed predictions.

    The CSV needs the columns pred, label and sensitive, all binary.

    Returns:
        dict: gap name -> value (None where undefined), plus the row count
    """
    try:
        frame: pd.DataFrame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DatasetError(f"cannot read {path}: {e}") from e
    missing: list[str] = [name for name in AUDIT_COLUMNS if name not in frame.columns]
    if missing:
        raise DatasetError(f"{path}: missing column(s) {', '.join(missing)}")

    values: dict[str, np.ndarray] = {}
    for name in AUDIT_COLUMNS:
        column: pd.Series = pd.to_numeric(frame[name], errors="coerce")
        if column.isna().any():
            raise DatasetError(f"{path}: non-numeric value in column {name}")
        values[name] = column.to_numpy()

    result: FairnessReport = fairness_report(values["pred"], values["label"], values["sensitive"], strict=strict)
    return {"rows": int(len(frame)), **{key: gap_to_float(gap) for key, gap in result.gaps().items()}}


def write_synthetic(params: Unfair2dParams, out_path: Union[str, Path]) -> Path:
    """Write pre-shift and post-shift coordinates with labels and groups."""
    path = Path(out_path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(generate_unfair2d_frame(params), path)
    debug_success(f"[Data] Wrote {params.m} synthetic samples to {path}")
    return path


def load_params(path: Union[str, Path]) -> Unfair2dParams:
    try:
        document: Any = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read params {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from e
    try:
        return Unfair2dParams.model_validate(document)
    except ValidationError as e:
        raise ConfigError(f"{path}: {format_validation_error(e)}") from e
