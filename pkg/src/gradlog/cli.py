"""Command-line interface.

Subcommands mirror the library workflow: ``compile`` reports the grounded
search space and index memory estimate for a task, ``train`` runs a single
seeded training run and prints the extracted program, ``sweep`` executes a
template/seed cross product from a JSON config, ``report`` renders the
artifacts for a results directory, and ``export-program`` re-renders one
stored run as source text or a DOT dependency graph.  Defaults echo the
standard training recipe.  Worker parallelism for sweeps comes from
``--workers`` or the GRADLOG_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .bench import (
    load_experiment_config,
    load_records,
    render_table,
    run_cell,
    run_experiment,
    save_records,
    summarize,
    write_report,
)
from .engine import TNormConfig
from .evaluate import format_program, program_to_dot
from .reference import EXHAUSTIVE_CAP, exhaustive_solve
from .space import DEFAULT_MAX_INDEX_BYTES
from .tasks import compile_task, language_for, make_task
from .train import TrainConfig

VISIBLE_COMMANDS = "{compile,train,sweep,report,export-program}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradlog",
        description="Differentiable inductive logic programming with invented "
        "predicates: compile template spaces, train clause weights, sweep "
        "experiments, and export learned programs.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar=VISIBLE_COMMANDS)

    c = sub.add_parser("compile", help="ground a task and report the search space")
    c.add_argument("task", help="task name, e.g. predecessor or mod3")
    c.add_argument("--templates", type=int, default=10,
                   help="invented predicate count (default 10)")
    c.add_argument("--domain", choices=("train", "test"), default="train")
    c.add_argument("--max-index-bytes", type=int, default=DEFAULT_MAX_INDEX_BYTES,
                   help="refuse to build an inference index above this estimate")

    t = sub.add_parser("train", help="train one run and print the learned program")
    t.add_argument("task")
    t.add_argument("--templates", type=int, default=10)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--weight-mode", choices=("per_literal", "per_clause", "per_template"),
                   default=None, help="weight parameterization (default per_literal)")
    t.add_argument("--tnorm-step", choices=("max", "product"), default=None,
                   help="fuzzy OR joining each step's conclusions with the "
                   "previous valuation (default max)")
    t.add_argument("--steps", type=int, default=None, help="gradient steps (default 2000)")
    t.add_argument("--learning-rate", type=float, default=None)
    t.add_argument("--init-sigma", type=float, default=None)
    t.add_argument("--optimizer", default=None)
    t.add_argument("--batch-probability", type=float, default=None)
    t.add_argument("--infer-steps", type=int, default=None)
    t.add_argument("--out", type=Path, default=None,
                   help="append the run record to OUT/runs.jsonl")

    s = sub.add_parser("sweep", help="run a template/seed cross product from a JSON config")
    s.add_argument("config", type=Path)
    s.add_argument("--out", type=Path, default=Path("results"))
    s.add_argument("--workers", type=int, default=None,
                   help="parallel cells (default $GRADLOG_WORKERS or 1)")

    r = sub.add_parser("report", help="render CSV, table, sweep series, and DOT files")
    r.add_argument("results_dir", type=Path)
    r.add_argument("--out", type=Path, default=None,
                   help="write artifacts here instead of into the results dir")

    e = sub.add_parser("export-program", help="print one stored run's program")
    e.add_argument("run_id")
    e.add_argument("--results", type=Path, default=Path("results"))
    e.add_argument("--dot", action="store_true",
                   help="emit the template dependency graph instead of clauses")
    e.add_argument("--out", type=Path, default=None, help="write to a file instead of stdout")

    o = sub.add_parser("oracle")  # intentionally undocumented: test support
    o.add_argument("task")
    o.add_argument("--templates", type=int, default=1)
    o.add_argument("--cap", type=int, default=EXHAUSTIVE_CAP)
    o.add_argument("--max-solutions", type=int, default=20)
    return parser


def _train_config(args: argparse.Namespace) -> TrainConfig:
    overrides = {
        "seed": args.seed,
        "weight_mode": args.weight_mode,
        "max_steps": args.steps,
        "learning_rate": args.learning_rate,
        "init_sigma": args.init_sigma,
        "optimizer": args.optimizer,
        "batch_probability": args.batch_probability,
        "infer_steps": args.infer_steps,
    }
    if args.tnorm_step is not None:
        overrides["tnorms"] = TNormConfig(or_step=args.tnorm_step)
    return replace(TrainConfig(), **{k: v for k, v in overrides.items() if v is not None})


def cmd_compile(args: argparse.Namespace) -> int:
    task = make_task(args.task)
    problem = compile_task(task, args.templates, args.domain,
                           args.max_index_bytes, verbose=True)
    language = problem.language
    print(f"task {args.task} ({args.domain} domain): "
          f"{language.n_constants} constants, {problem.ev0.size} ground atoms")
    n_templates = len(problem.index.templates)
    n_candidates = len(problem.index.candidates)
    print(f"templates: {n_templates} (target + {args.templates} invented), "
          f"literal candidates: {n_candidates}")
    print(f"clause-literal parameters: {4 * n_candidates * n_templates}")
    print(f"examples: {problem.pos.size} positive, {problem.neg.size} negative")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    task = make_task(args.task)
    config = _train_config(args)
    (record,) = run_cell(task, args.templates, (args.seed,), config)
    print(f"run: {record.run_id}")
    print(f"outcome: {record.outcome} (c={record.c:d} f={record.f:d} "
          f"ct={record.ct:d} ft={record.ft:d})")
    print(f"steps: {record.steps} ({record.stop_reason}), "
          f"final loss: {record.final_loss:.6f}, {record.seconds:.1f}s")
    print("program:")
    print(format_program(record.to_program()) or "(empty)")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        with (args.out / "runs.jsonl").open("a") as fh:
            fh.write(record.to_json() + "\n")
        print(f"appended record to {args.out / 'runs.jsonl'}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config)
    records = run_experiment(config, workers=args.workers, log=print)
    path = save_records(records, args.out)
    print(f"wrote {len(records)} records to {path}")
    print(render_table(summarize(records)), end="")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    records = load_records(args.results_dir)
    out_dir = args.out if args.out is not None else args.results_dir
    paths = write_report(records, out_dir)
    for name in ("csv", "table", "sweep"):
        print(f"wrote {paths[name]}")
    dots = [k for k in paths if k.startswith("dot:")]
    if dots:
        print(f"wrote {len(dots)} program graphs under {out_dir / 'programs'}")
    print(render_table(summarize(records)), end="")
    return 0


def cmd_export_program(args: argparse.Namespace) -> int:
    records = {r.run_id: r for r in load_records(args.results)}
    if args.run_id not in records:
        raise ValueError(f"no run {args.run_id!r} in {args.results / 'runs.jsonl'}")
    record = records[args.run_id]
    if not record.program:
        raise ValueError(f"run {args.run_id!r} stored no program (outcome "
                         f"{record.outcome})")
    program = record.to_program()
    text = program_to_dot(program) if args.dot else format_program(program) + "\n"
    if args.out is not None:
        args.out.write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    task = make_task(args.task)
    language = language_for(task, args.templates, "train")
    solutions = exhaustive_solve(
        language, task.train.facts, task.train.pos, task.train.neg,
        cap=args.cap, max_solutions=args.max_solutions,
    )
    for i, program in enumerate(solutions, start=1):
        print(f"solution {i}:")
        for clause in program:
            print(f"  {clause}")
    print(f"found {len(solutions)} programs")
    return 0


COMMANDS = {
    "compile": cmd_compile,
    "train": cmd_train,
    "sweep": cmd_sweep,
    "report": cmd_report,
    "export-program": cmd_export_program,
    "oracle": cmd_oracle,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
