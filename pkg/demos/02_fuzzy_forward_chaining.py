"""Fuzzy forward chaining and its classical limit.

Inference is repeated rule application: each step computes, for every ground
atom, how strongly the current clause mixture derives it, then joins that
with the previous valuation.  With one-hot clause weights the fuzzy engine
reproduces boolean forward chaining exactly; with soft weights every clause
candidate contributes in proportion to its softmax probability.

Run:  python3 demos/02_fuzzy_forward_chaining.py
"""

import numpy as np

from gradlog.engine import encode_program, make_kernel
from gradlog.logic import Atom, Clause, parse_atom
from gradlog.reference import boolean_chain
from gradlog.tasks import compile_task, make_task
from gradlog.train import init_weights

task = make_task("predecessor")
problem = compile_task(task, 1, "train")
kernel = make_kernel(problem.index, "per_literal")

# A correct program, written by hand: pred(x, y) holds when succ(y, x).
# Templates not mentioned (here the invented i1) are filled with an inert
# self-recursive clause by the encoder.
clause = Clause(parse_atom("pred(x,y)"), (parse_atom("succ(y,x)"),
                                          parse_atom("succ(y,x)")))
store = encode_program([clause], problem.index, "per_literal")
print("one-hot encoded program:")
print(f"  {clause}")

probes = [parse_atom("pred(1,0)"), parse_atom("pred(10,9)"),
          parse_atom("pred(0,1)"), parse_atom("pred(5,5)")]
val = kernel.infer(store, problem.ev0, n_steps=2)
print("\nvaluations after 2 steps (exactly 0/1 because weights are one-hot):")
for atom in probes:
    print(f"  {atom}: {val[problem.index.atom_index.position(atom)]:.1f}")

# The independent boolean oracle agrees on every atom.
truths = boolean_chain([clause], task.train.facts, problem.language, n_steps=2)
oracle_true = {a for a in truths if a.pred == "pred"}
fuzzy_true = {
    atom
    for atom in (Atom("pred", (a, b)) for a in task.train.constants
                 for b in task.train.constants)
    if val[problem.index.atom_index.position(atom)] == 1.0
}
print(f"\nboolean oracle derives {len(oracle_true)} pred atoms; "
      f"engine derives {len(fuzzy_true)}; equal: {fuzzy_true == oracle_true}")

# Soft weights blend candidates.  Random logits give every pred atom some
# intermediate degree of truth -- this is the surface gradient descent
# moves on.
soft = init_weights(kernel, np.random.default_rng(0))
val = kernel.infer(soft, problem.ev0, n_steps=2)
print("\nsame atoms under random soft weights (graded, differentiable):")
for atom in probes:
    print(f"  {atom}: {val[problem.index.atom_index.position(atom)]:.4f}")
