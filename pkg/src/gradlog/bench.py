"""Experiment workbench: sweeps over template counts and seeds, persistence,
significance testing, and report rendering.

A sweep is a cross product of template counts and seeds for one task.  Every
run is classified into the outcome taxonomy and persisted as one JSON line;
failures (including divergence) become FAIL records and never abort a sweep.
Reports render a CSV with fixed columns, a human-readable success table,
per-category sweep series for plotting, and DOT graphs for one classically
correct program per cell.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field, fields, replace
from multiprocessing import get_context
from pathlib import Path
from typing import Callable, Iterable, Sequence

from scipy.stats import fisher_exact, norm

from .evaluate import (
    Outcome,
    Program,
    ProgramClause,
    classify_outcome,
    extract_program,
    program_to_dot,
)
from .logic import Clause, parse_atom
from .tasks import Task, compile_task, make_task
from .train import TrainConfig, TrainingDiverged, train

WORKERS_ENV = "GRADLOG_WORKERS"
CATEGORIES = ("C", "F", "CT", "FT", "FAIL")
CSV_COLUMNS = (
    "task", "templates", "seed", "outcome",
    "C", "F", "CT", "FT", "steps", "final_loss",
)


def resolve_workers(workers: int | None = None) -> int:
    """Explicit argument, else the GRADLOG_WORKERS variable, else 1."""
    if workers is None:
        raw = os.environ.get(WORKERS_ENV, "1")
        try:
            workers = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if workers < 1:
        raise ValueError("worker count must be positive")
    return workers


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """One task swept over template counts, each cell trained on many seeds."""

    task: str
    templates: tuple[int, ...] = (10,)
    seeds: tuple[int, ...] = tuple(range(20))
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self) -> None:
        if not self.templates or not self.seeds:
            raise ValueError("templates and seeds must be non-empty")
        if any(t < 0 for t in self.templates):
            raise ValueError("template counts must be non-negative")


def parse_experiment_config(text: str) -> ExperimentConfig:
    """Read a sweep config from JSON.

    Keys: task (required), templates (list), seeds (list or count), train
    (TrainConfig field overrides, tnorms given as a string-to-string map).
    """
    data = json.loads(text)
    unknown = set(data) - {"task", "templates", "seeds", "train"}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    seeds = data.get("seeds", 20)
    if isinstance(seeds, int):
        seeds = range(seeds)
    overrides = dict(data.get("train", {}))
    bad = set(overrides) - {f.name for f in fields(TrainConfig)}
    if bad:
        raise ValueError(f"unknown train config fields: {sorted(bad)}")
    if "tnorms" in overrides:
        from .engine import TNormConfig

        overrides["tnorms"] = TNormConfig(**overrides["tnorms"])
    if "betas" in overrides:
        overrides["betas"] = tuple(overrides["betas"])
    return ExperimentConfig(
        task=data["task"],
        templates=tuple(data.get("templates", (10,))),
        seeds=tuple(seeds),
        train=TrainConfig(**overrides),
    )


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    return parse_experiment_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# run records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunRecord:
    """Everything persisted about one training run."""

    run_id: str
    task: str
    variant: str
    templates: int
    seed: int
    outcome: str
    c: bool
    f: bool
    ct: bool
    ft: bool
    steps: int
    final_loss: float
    stop_reason: str
    seconds: float
    target: str
    program: tuple[str, ...]

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @staticmethod
    def from_json(line: str) -> "RunRecord":
        data = json.loads(line)
        data["program"] = tuple(data["program"])
        return RunRecord(**data)

    def to_program(self) -> Program:
        clauses = []
        for text in self.program:
            head, body = text.split(":-")
            first, second = body.split("),")
            clause = Clause(
                parse_atom(head), (parse_atom(first + ")"), parse_atom(second))
            )
            slot = sum(pc.template == clause.head.pred for pc in clauses)
            clauses.append(ProgramClause(clause, clause.head.pred, slot))
        return Program(tuple(clauses), self.target)


def make_run_id(task: Task, templates: int, seed: int) -> str:
    suffix = f"-{task.variant}" if task.variant else ""
    return f"{task.name}{suffix}-t{templates}-s{seed}"


def run_cell(
    task: Task,
    templates: int,
    seeds: Sequence[int],
    config: TrainConfig = TrainConfig(),
    log: Callable[[str], None] | None = None,
) -> list[RunRecord]:
    """Train one (task, template count) cell across seeds; indices built once."""
    train_problem = compile_task(task, templates, "train")
    test_problem = compile_task(task, templates, "test")
    records = []
    for seed in seeds:
        cfg = replace(config, seed=seed)
        started = time.perf_counter()
        try:
            result = train(train_problem, cfg)
            program = extract_program(result.weights, train_problem.index, cfg.prune)
            outcome = classify_outcome(
                result.weights, program, train_problem, test_problem,
                cfg.tnorms, cfg.infer_steps, cfg.prune,
            )
            steps, loss = result.steps_used, result.final_full_loss
            stop_reason = result.stop_reason
        except TrainingDiverged:
            program = Program((), task.target.name)
            outcome = Outcome(False, False, False, False)
            steps, loss, stop_reason = 0, math.nan, "diverged"
        record = RunRecord(
            run_id=make_run_id(task, templates, seed),
            task=task.name,
            variant=task.variant,
            templates=templates,
            seed=seed,
            outcome=outcome.category,
            c=outcome.c, f=outcome.f, ct=outcome.ct, ft=outcome.ft,
            steps=steps,
            final_loss=loss,
            stop_reason=stop_reason,
            seconds=time.perf_counter() - started,
            target=task.target.name,
            program=tuple(str(cl) for cl in program.clause_list()),
        )
        records.append(record)
        if log is not None:
            log(f"{record.run_id}: {record.outcome} "
                f"steps={record.steps} loss={record.final_loss:.4f}")
    return records


def _cell_worker(args: tuple[str, int, tuple[int, ...], TrainConfig]) -> list[RunRecord]:
    name, templates, seeds, config = args
    return run_cell(make_task(name), templates, seeds, config)


def run_experiment(
    config: ExperimentConfig,
    workers: int | None = None,
    log: Callable[[str], None] | None = None,
) -> list[RunRecord]:
    """Run every (templates, seed) cell; cells fan out across workers."""
    workers = resolve_workers(workers)
    task = make_task(config.task)
    if workers == 1:
        cells = [
            run_cell(task, t, config.seeds, config.train, log)
            for t in config.templates
        ]
    else:
        jobs = [(config.task, t, config.seeds, config.train) for t in config.templates]
        with get_context("spawn").Pool(min(workers, len(jobs))) as pool:
            cells = pool.map(_cell_worker, jobs)
        if log is not None:
            for cell in cells:
                for record in cell:
                    log(f"{record.run_id}: {record.outcome} "
                        f"steps={record.steps} loss={record.final_loss:.4f}")
    return [record for cell in cells for record in cell]


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def save_records(records: Iterable[RunRecord], out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "runs.jsonl"
    with path.open("w") as fh:
        for record in records:
            fh.write(record.to_json() + "\n")
    return path


def load_records(results_dir: str | Path) -> list[RunRecord]:
    path = Path(results_dir) / "runs.jsonl"
    if not path.exists():
        raise FileNotFoundError(f"no runs.jsonl under {results_dir}")
    with path.open() as fh:
        return [RunRecord.from_json(line) for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# aggregation and significance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CellSummary:
    """Outcome counts for one (task, templates) cell."""

    task: str
    variant: str
    templates: int
    runs: int
    counts: dict[str, int]

    def percent(self, category: str) -> float:
        return 100.0 * self.counts[category] / self.runs

    @property
    def solved(self) -> int:
        """Runs whose program or weights generalize: C or F."""
        return self.counts["C"] + self.counts["F"]


def summarize(records: Sequence[RunRecord]) -> list[CellSummary]:
    cells: dict[tuple[str, str, int], list[RunRecord]] = {}
    for r in records:
        cells.setdefault((r.task, r.variant, r.templates), []).append(r)
    out = []
    for (task, variant, templates), cell in sorted(cells.items()):
        counts = {cat: sum(r.outcome == cat for r in cell) for cat in CATEGORIES}
        out.append(CellSummary(task, variant, templates, len(cell), counts))
    return out


def significance(
    successes_a: int, total_a: int, successes_b: int, total_b: int
) -> float:
    """Two-sided two-proportion z-test; exact fallback on zero variance.

    Returns the p-value for the difference between two success rates.
    Degenerate cells (pooled rate 0 or 1) have zero pooled variance, so the
    comparison falls back to an exact count-based test.
    """
    if total_a < 1 or total_b < 1:
        raise ValueError("cells must be nonempty")
    if not (0 <= successes_a <= total_a and 0 <= successes_b <= total_b):
        raise ValueError("successes cannot exceed totals")
    pooled = (successes_a + successes_b) / (total_a + total_b)
    variance = pooled * (1.0 - pooled) * (1.0 / total_a + 1.0 / total_b)
    if variance == 0.0:
        table = [
            [successes_a, total_a - successes_a],
            [successes_b, total_b - successes_b],
        ]
        return float(fisher_exact(table)[1])
    z = (successes_a / total_a - successes_b / total_b) / math.sqrt(variance)
    return float(2.0 * norm.sf(abs(z)))


# ---------------------------------------------------------------------------
# report rendering
# ---------------------------------------------------------------------------


def write_results_csv(records: Sequence[RunRecord], path: Path) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([
                r.task, r.templates, r.seed, r.outcome,
                int(r.c), int(r.f), int(r.ct), int(r.ft),
                r.steps, repr(r.final_loss),
            ])


def render_table(summaries: Sequence[CellSummary]) -> str:
    """Success table, one row per cell: task, templates, runs, then
    percentage per category."""
    header = f"{'task':<18} {'templates':>9} {'runs':>5}" + "".join(
        f" {cat:>6}" for cat in CATEGORIES
    )
    lines = [header, "-" * len(header)]
    for s in summaries:
        name = s.task + (f" ({s.variant})" if s.variant else "")
        row = f"{name:<18} {s.templates:>9} {s.runs:>5}"
        row += "".join(f" {s.percent(cat):>5.0f}%" for cat in CATEGORIES)
        lines.append(row)
    return "\n".join(lines) + "\n"


def write_sweep_series(summaries: Sequence[CellSummary], path: Path) -> None:
    """Per-category percentages by template count, ready for plotting."""
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task", "templates"] + list(CATEGORIES))
        for s in summaries:
            writer.writerow(
                [s.task, s.templates] + [f"{s.percent(cat):.1f}" for cat in CATEGORIES]
            )


def write_report(records: Sequence[RunRecord], out_dir: str | Path) -> dict[str, Path]:
    """Render all report artifacts; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summaries = summarize(records)
    paths = {
        "csv": out_dir / "results.csv",
        "table": out_dir / "table.txt",
        "sweep": out_dir / "sweep.csv",
    }
    write_results_csv(records, paths["csv"])
    paths["table"].write_text(render_table(summaries))
    write_sweep_series(summaries, paths["sweep"])
    programs_dir = out_dir / "programs"
    seen_cells = set()
    for r in records:
        cell = (r.task, r.variant, r.templates)
        if r.outcome == "C" and cell not in seen_cells and r.program:
            seen_cells.add(cell)
            programs_dir.mkdir(exist_ok=True)
            dot_path = programs_dir / f"{r.run_id}.dot"
            dot_path.write_text(program_to_dot(r.to_program()))
            paths[f"dot:{r.run_id}"] = dot_path
    return paths
