"""Reading learned programs back out: source text and dependency graphs.

Every stored run keeps its extracted program as plain clause text, so a
results directory is self-contained: programs can be re-rendered without
retraining.  Programs print in a conventional surface syntax (variables
A, B, C) and export as DOT graphs whose edges are the "head template calls
body predicate" relation -- invented predicates show up as internal nodes.

Run:  python3 demos/05_exporting_programs.py    (under a minute)
"""

import tempfile
from pathlib import Path

from gradlog.bench import run_cell, save_records
from gradlog.evaluate import format_program, program_to_dot
from gradlog.tasks import make_task
from gradlog.train import TrainConfig

# Train one quick run and persist it the way sweeps do.
task = make_task("predecessor")
(record,) = run_cell(task, 1, (0,), TrainConfig(seed=0, infer_steps=10))
out_dir = Path(tempfile.mkdtemp(prefix="gradlog-export-"))
save_records([record], out_dir)
print(f"trained {record.run_id}: outcome {record.outcome} "
      f"in {record.steps} steps\n")

# The record stores clauses as text ...
print("stored clause text (runs.jsonl):")
for line in record.program:
    print(f"  {line}")

# ... which rebuilds into a Program for rendering.
program = record.to_program()
print("\nsurface syntax:")
print(format_program(program))
print("\ntemplate dependency graph:")
print(program_to_dot(program), end="")

dot_path = out_dir / f"{record.run_id}.dot"
dot_path.write_text(program_to_dot(program))
print(f"\nwrote {dot_path}")
print("render it with graphviz:  dot -Tpng -o program.png " + str(dot_path))
print(f"\nthe CLI equivalent:  gradlog export-program {record.run_id} "
      f"--results {out_dir} --dot")
