"""Program extraction, classical/fuzzy evaluation, and outcome taxonomy.

A trained weight store is read back symbolically by taking, for every
learnable slot, the highest-weighted choice (ties break to the lowest
candidate id).  The extracted program is checked under classical semantics
(boolean least fixpoint, run to saturation) and the weights themselves are
checked under fuzzy semantics (inference with the training step count,
predictions thresholded at 0.5, values exactly 0.5 counting as true).

Outcomes: C / F are classical / fuzzy correctness on every test example,
CT / FT the same on training examples only.  The reported category is the
first flag set in the order C, F, CT, FT, else FAIL.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .engine import TNormConfig, WeightStore, make_kernel
from .logic import Atom, Clause, Language, build_atom_index
from .space import (
    InferenceIndex,
    PruneConfig,
    enumerate_clause_candidates,
    make_templates,
)
from .train import CompiledProblem

VAR_DISPLAY = {"x": "A", "y": "B", "z": "C"}
FUZZY_TRUE_THRESHOLD = 0.5


@dataclass(frozen=True)
class ProgramClause:
    """One extracted clause with its provenance (template symbol and slot)."""

    clause: Clause
    template: str
    slot: int


@dataclass(frozen=True)
class Program:
    """Extracted clauses, two per kept template, target template first."""

    clauses: tuple[ProgramClause, ...]
    target: str

    def clause_list(self) -> list[Clause]:
        return [pc.clause for pc in self.clauses]

    def templates_used(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for pc in self.clauses:
            seen.setdefault(pc.template, None)
        return tuple(seen)


@dataclass(frozen=True)
class Outcome:
    """Correctness flags and the precedence-resolved category."""

    c: bool
    f: bool
    ct: bool
    ft: bool

    @property
    def category(self) -> str:
        for flag, name in ((self.c, "C"), (self.f, "F"), (self.ct, "CT"), (self.ft, "FT")):
            if flag:
                return name
        return "FAIL"


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------


def extract_program(
    store: WeightStore,
    index: InferenceIndex,
    prune: PruneConfig = PruneConfig(),
    trim: bool = True,
) -> Program:
    """Select the argmax choice per slot and trim to reachable templates."""
    templates = index.templates
    target = templates[0].head
    clauses: list[ProgramClause] = []
    if store.mode == "per_literal":
        (logits,) = store.arrays
        for t_id, template in enumerate(templates):
            head = template.head_atom()
            for slot in range(2):
                lits = tuple(
                    index.candidates[int(np.argmax(logits[t_id, slot, j]))].atom()
                    for j in range(2)
                )
                clauses.append(ProgramClause(Clause(head, lits), template.head, slot))
    else:
        for t_id, template in enumerate(templates):
            cands = enumerate_clause_candidates(index.candidates, template, prune)
            w = store.arrays[t_id]
            if store.mode == "per_clause":
                picks = [int(np.argmax(w[0])), int(np.argmax(w[1]))]
            else:
                first, second = divmod(int(np.argmax(w.ravel())), w.shape[1])
                picks = [first, second]
            for slot, pick in enumerate(picks):
                clauses.append(
                    ProgramClause(cands[pick].clause, template.head, slot)
                )
    program = Program(tuple(clauses), target)
    return trim_program(program) if trim else program


def trim_program(program: Program) -> Program:
    """Drop templates not reachable from the target through clause bodies."""
    by_template: dict[str, list[ProgramClause]] = {}
    for pc in program.clauses:
        by_template.setdefault(pc.template, []).append(pc)
    reachable = {program.target}
    frontier = [program.target]
    while frontier:
        t = frontier.pop()
        for pc in by_template.get(t, []):
            for lit in pc.clause.body:
                if lit.pred in by_template and lit.pred not in reachable:
                    reachable.add(lit.pred)
                    frontier.append(lit.pred)
    kept = tuple(pc for pc in program.clauses if pc.template in reachable)
    return Program(kept, program.target)


# ---------------------------------------------------------------------------
# classical semantics (vectorized; saturates, no step cap)
# ---------------------------------------------------------------------------


def _lift_literal(grids: dict[str, np.ndarray], atom: Atom, n: int) -> np.ndarray:
    """Broadcast a literal's truth grid onto the (x, y, z) cube."""
    g = grids[atom.pred]
    axes = {"x": 0, "y": 1, "z": 2}
    if len(atom.args) == 1:
        (u,) = atom.args
        shape = [1, 1, 1]
        shape[axes[u]] = n
        return g.reshape(shape)
    u, v = atom.args
    if u == v:
        d = np.einsum("ii->i", g)
        shape = [1, 1, 1]
        shape[axes[u]] = n
        return d.reshape(shape)
    a, b = axes[u], axes[v]
    if a > b:
        g = g.T
        a, b = b, a
    missing = ({0, 1, 2} - {a, b}).pop()
    return np.expand_dims(g, axis=missing)


def classical_valuation(
    clauses: Sequence[Clause], facts_val: np.ndarray, language: Language
) -> np.ndarray:
    """Boolean least fixpoint of BK and clauses as a flat G-vector."""
    n = language.n_constants
    atom_index = build_atom_index(language)
    grids: dict[str, np.ndarray] = {}
    for p in language.predicates:
        lo, hi = atom_index.block(p.name)
        grids[p.name] = (
            facts_val[lo:hi].astype(bool).reshape((n,) * p.arity).copy()
        )
    changed = True
    while changed:
        changed = False
        for clause in clauses:
            body = _lift_literal(grids, clause.body[0], n) & _lift_literal(
                grids, clause.body[1], n
            )
            if len(clause.head.args) == 2:
                derived = body.any(axis=2)
            else:
                derived = body.any(axis=(1, 2))
            target = grids[clause.head.pred]
            new = target | derived
            if not np.array_equal(new, target):
                grids[clause.head.pred] = new
                changed = True
    out = np.zeros(len(atom_index), dtype=bool)
    for p in language.predicates:
        lo, hi = atom_index.block(p.name)
        out[lo:hi] = grids[p.name].reshape(-1)
    return out


def classical_eval(
    clauses: Sequence[Clause], facts: Iterable[Atom], language: Language
) -> set[Atom]:
    """All ground atoms true in the least fixpoint of BK plus the program."""
    atom_index = build_atom_index(language)
    facts_val = np.zeros(len(atom_index), dtype=float)
    for f in facts:
        facts_val[atom_index.position(f)] = 1.0
    out = classical_valuation(clauses, facts_val, language)
    return {atom_index.atoms[i] for i in np.flatnonzero(out)}


# ---------------------------------------------------------------------------
# fuzzy semantics and outcome classification
# ---------------------------------------------------------------------------


def fuzzy_valuation(
    store: WeightStore,
    problem: CompiledProblem,
    tnorms: TNormConfig = TNormConfig(),
    infer_steps: int = 25,
    prune: PruneConfig = PruneConfig(),
) -> np.ndarray:
    """Run weighted inference with the training parameters on a domain."""
    kernel = make_kernel(problem.index, store.mode, prune)
    return kernel.infer(store, problem.ev0, tnorms, infer_steps)


def fuzzy_correct(
    store: WeightStore,
    problem: CompiledProblem,
    tnorms: TNormConfig = TNormConfig(),
    infer_steps: int = 25,
    prune: PruneConfig = PruneConfig(),
) -> bool:
    """True iff thresholded predictions match every example label."""
    val = fuzzy_valuation(store, problem, tnorms, infer_steps, prune)
    pred_true = val >= FUZZY_TRUE_THRESHOLD
    return bool(pred_true[problem.pos].all() and (~pred_true[problem.neg]).all())


def classical_correct(clauses: Sequence[Clause], problem: CompiledProblem) -> bool:
    out = classical_valuation(clauses, problem.ev0, problem.language)
    return bool(out[problem.pos].all() and (~out[problem.neg]).all())


def classify_outcome(
    store: WeightStore,
    program: Program,
    train_problem: CompiledProblem,
    test_problem: CompiledProblem,
    tnorms: TNormConfig = TNormConfig(),
    infer_steps: int = 25,
    prune: PruneConfig = PruneConfig(),
) -> Outcome:
    """Compute the four correctness flags; all four are independent."""
    clauses = program.clause_list()
    return Outcome(
        c=classical_correct(clauses, test_problem),
        f=fuzzy_correct(store, test_problem, tnorms, infer_steps, prune),
        ct=classical_correct(clauses, train_problem),
        ft=fuzzy_correct(store, train_problem, tnorms, infer_steps, prune),
    )


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def format_clause(clause: Clause) -> str:
    def fmt(atom: Atom) -> str:
        args = ",".join(VAR_DISPLAY.get(a, a) for a in atom.args)
        return f"{atom.pred}({args})"

    return f"{fmt(clause.head)}:-{fmt(clause.body[0])},{fmt(clause.body[1])}"


def format_program(program: Program) -> str:
    return "\n".join(format_clause(pc.clause) for pc in program.clauses)


def program_to_dot(program: Program) -> str:
    """Template dependency graph: one edge per referenced predicate."""
    edges: dict[tuple[str, str], None] = {}
    for pc in program.clauses:
        for lit in pc.clause.body:
            edges.setdefault((pc.template, lit.pred), None)
    lines = ["digraph program {"]
    for head, body in edges:
        lines.append(f'    "{head}" -> "{body}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
