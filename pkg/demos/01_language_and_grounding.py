"""Languages, templates, and the grounded search space.

A learning problem starts from a language: a target predicate, background
predicates, invented predicate symbols i1..iN, and a constant universe.
Every clause the learner can express is an instance of one generic template
per predicate — head(x, y) with two body literals drawn from a shared
candidate pool over the variables {x, y, z}.  This script walks the even-4
numbers task through that pipeline and prints the counts at each stage.

Run:  python3 demos/01_language_and_grounding.py
"""

from gradlog.logic import build_atom_index
from gradlog.space import enumerate_literal_candidates, make_templates
from gradlog.tasks import compile_task, language_for, make_task

task = make_task("even")
print(f"task: {task.name!r}, target {task.target.name}/{task.target.arity}")
print(f"predicates: " + ", ".join(f"{p.name}/{p.arity} ({p.kind})"
                                  for p in task.predicates))
print(f"train constants: {task.train.constants}")
print(f"background facts: {len(task.train.facts)}, "
      f"positive examples: {len(task.train.pos)}, "
      f"negative examples: {len(task.train.neg)}")

# Adding invented predicates grows the language; this is the single knob the
# template-count sweeps turn.
for n_invented in (0, 2, 10):
    language = language_for(task, n_invented)
    candidates = enumerate_literal_candidates(language)
    templates = make_templates(language)
    print(f"\nwith {n_invented} invented predicates:")
    print(f"  ground atoms:          {len(build_atom_index(language))}")
    print(f"  literal candidates:    {len(candidates)} "
          f"(9 per dyadic predicate, 3 per unary)")
    tail = f", then i1..i{n_invented}" if n_invented else ""
    print(f"  learnable templates:   {len(templates)} (target first{tail})")

# The first few candidates show the variable patterns the body literals
# range over: for a dyadic predicate q, all nine ordered pairs over x, y, z.
language = language_for(task, 2)
candidates = enumerate_literal_candidates(language)
print("\nfirst 12 literal candidates:")
for cand in candidates[:12]:
    print(f"  [{cand.candidate_id:2d}] {cand.atom()}")

# Compiling fixes the candidate choices into gather tables: for every head
# grounding and every binding of the remaining variable, the flat position
# of each candidate's ground atom.  The estimate is printed before any
# allocation so oversized spaces fail fast.
print("\ncompiling the train domain with 2 invented predicates:")
problem = compile_task(task, 2, "train", verbose=True)
print(f"initial valuation: {problem.ev0.size} atoms, "
      f"{int(problem.ev0.sum())} true background facts")
print(f"example positions: {problem.pos.size} positive, {problem.neg.size} negative")
