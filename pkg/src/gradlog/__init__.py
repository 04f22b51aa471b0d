"""Differentiable inductive logic programming with invented predicates.

Templates over a small variable alphabet are compiled into grounded gather
indices; fuzzy forward chaining over clause-literal softmax weights makes
entailment differentiable, so programs are learned by gradient descent and
then read back out as symbolic clauses.  Submodules: ``logic`` (terms, atoms,
clauses, grounding), ``space`` (templates, candidate enumeration, inference
index), ``engine`` (differentiable inference and loss), ``train`` (training
loop), ``evaluate`` (program extraction, classical/fuzzy evaluation, outcome
taxonomy), ``tasks`` (benchmark task suite and file format), ``bench``
(sweeps, persistence, significance, reports), ``reference`` (slow independent
oracles), and ``cli``.
"""

from .bench import (
    CellSummary,
    ExperimentConfig,
    RunRecord,
    load_experiment_config,
    load_records,
    parse_experiment_config,
    render_table,
    run_cell,
    run_experiment,
    save_records,
    significance,
    summarize,
    write_report,
)
from .engine import ORIGINAL_STEP_TNORMS, TNormConfig
from .evaluate import (
    FUZZY_TRUE_THRESHOLD,
    Outcome,
    Program,
    classify_outcome,
    extract_program,
    format_clause,
    format_program,
    program_to_dot,
)
from .logic import Atom, Clause, Language, Predicate
from .space import DEFAULT_MAX_INDEX_BYTES, PruneConfig
from .tasks import (
    Task,
    TaskDomain,
    compile_task,
    language_for,
    make_task,
    parse_task,
    serialize_task,
)
from .train import (
    CompiledProblem,
    TrainConfig,
    TrainingDiverged,
    TrainResult,
    compile_problem,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "CellSummary",
    "Clause",
    "CompiledProblem",
    "DEFAULT_MAX_INDEX_BYTES",
    "ExperimentConfig",
    "FUZZY_TRUE_THRESHOLD",
    "Language",
    "ORIGINAL_STEP_TNORMS",
    "Outcome",
    "Predicate",
    "Program",
    "PruneConfig",
    "RunRecord",
    "Task",
    "TaskDomain",
    "TNormConfig",
    "TrainConfig",
    "TrainingDiverged",
    "TrainResult",
    "classify_outcome",
    "compile_problem",
    "compile_task",
    "extract_program",
    "format_clause",
    "format_program",
    "language_for",
    "load_experiment_config",
    "load_records",
    "make_task",
    "parse_experiment_config",
    "parse_task",
    "program_to_dot",
    "render_table",
    "run_cell",
    "run_experiment",
    "save_records",
    "serialize_task",
    "significance",
    "summarize",
    "train",
    "write_report",
]
