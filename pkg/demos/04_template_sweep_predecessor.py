"""Sweeping template counts with the experiment workbench.

A sweep crosses template counts with seeds for one task, classifies every
run into the outcome taxonomy (C, F, CT, FT, FAIL), and persists one JSON
record per run.  This small predecessor sweep finishes in a few minutes;
the same machinery drives the large mod-3 comparison in the acceptance
suite (see configs/mod3_sweep.json and tests/test_acceptance.py), where
raising the template count from 3 to 30 is what makes the task learnable.

Run:  python3 demos/04_template_sweep_predecessor.py    (a few minutes)
"""

import tempfile
from pathlib import Path

from gradlog.bench import (
    ExperimentConfig,
    render_table,
    run_experiment,
    save_records,
    significance,
    summarize,
    write_report,
)
from gradlog.train import TrainConfig

config = ExperimentConfig(
    task="predecessor",
    templates=(0, 10),
    seeds=(0, 1, 2),
    train=TrainConfig(infer_steps=10),
)
print(f"sweeping {config.task}: template counts {config.templates}, "
      f"{len(config.seeds)} seeds per cell\n")

records = run_experiment(config, workers=1, log=print)

print()
cells = summarize(records)
print(render_table(cells))

# Cells are compared with a two-proportion test; tiny cells rarely separate,
# which is exactly what the p-value reports.
a, b = cells
p = significance(a.solved, a.runs, b.solved, b.runs)
print(f"solved (C or F): {a.solved}/{a.runs} at {a.templates} templates vs "
      f"{b.solved}/{b.runs} at {b.templates}; p = {p:.3f}")

out_dir = Path(tempfile.mkdtemp(prefix="gradlog-sweep-"))
save_records(records, out_dir)
paths = write_report(records, out_dir)
print(f"\nartifacts written to {out_dir}:")
for name in sorted(p.name for p in out_dir.iterdir()):
    print(f"  {name}")
print("\nthe CLI equivalent: gradlog sweep <config.json> --out <dir>; "
      "then gradlog report <dir>.")
