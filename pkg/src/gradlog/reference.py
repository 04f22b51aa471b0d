"""Slow reference implementations used as test oracles.

Everything here recomputes semantics from first principles with nested
Python loops: no gather tables, no vectorized kernels, no code shared with
the fast engine beyond the core logic types.  Intended for small languages
only; the interpreter refuses above a cost cap.
"""
from __future__ import annotations

import math
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .logic import VARIABLES, Atom, Clause, Language, Predicate, build_atom_index, ground_clause

NAIVE_COST_CAP = 50_000_000
EXHAUSTIVE_CAP = 1_000_000


def _softmax_row(row: Sequence[float]) -> list[float]:
    m = max(row)
    exps = [math.exp(v - m) for v in row]
    s = sum(exps)
    return [e / s for e in exps]


def _and2(kind: str, a: float, b: float) -> float:
    if kind == "product":
        return a * b
    if kind == "max":
        return min(a, b)
    return max(a + b - 1.0, 0.0)


def _or2(kind: str, a: float, b: float) -> float:
    if kind == "product":
        return a + b - a * b
    if kind == "max":
        return max(a, b)
    return min(a + b, 1.0)


def _or_many(kind: str, values: list[float]) -> float:
    if kind == "max":
        return max(values)
    if kind == "product":
        acc = 1.0
        for v in values:
            acc *= 1.0 - v
        return 1.0 - acc
    return min(sum(values), 1.0)


def naive_infer(
    ev0: Sequence[float],
    logits,
    templates,
    candidates,
    language: Language,
    n_steps: int,
    and_literal: str = "product",
    or_exists: str = "max",
    or_clausal: str = "max",
    or_step: str = "max",
    cost_cap: int = NAIVE_COST_CAP,
) -> np.ndarray:
    """Direct-interpretation fuzzy chaining with per-literal weights.

    logits has shape [template][clause 2][literal 2][candidate]; templates and
    candidates are the enumeration types from the hypothesis-space module,
    consumed as plain data.
    """
    index = build_atom_index(language)
    n = language.n_constants
    consts = language.constants
    cost = 0
    for t in templates:
        bindings = n ** (3 - t.head_arity)
        cost += (n ** t.head_arity) * bindings * 4 * len(candidates)
    cost *= n_steps
    if cost > cost_cap:
        raise ValueError(f"naive interpreter refused: cost {cost} exceeds cap {cost_cap}")

    sms = [
        [[_softmax_row(list(logits[ti][j][l])) for l in (0, 1)] for j in (0, 1)]
        for ti in range(len(templates))
    ]
    val = [float(v) for v in ev0]
    if len(val) != len(index):
        raise ValueError("valuation length does not match language")

    free_vars = {1: ("y", "z"), 2: ("z",)}
    for _ in range(n_steps):
        new_val = list(val)
        for ti, t in enumerate(templates):
            head_vars = ("x", "y")[: t.head_arity]
            evars = free_vars[t.head_arity]
            for hvals in product(consts, repeat=t.head_arity):
                theta = dict(zip(head_vars, hvals))
                head_atom = Atom(t.head, hvals)
                clause_vals = []
                for j in (0, 1):
                    per_binding = []
                    for bvals in product(consts, repeat=len(evars)):
                        theta.update(zip(evars, bvals))
                        lits = []
                        for l in (0, 1):
                            acc = 0.0
                            for c in candidates:
                                ga = c.atom().substitute(theta)
                                acc += sms[ti][j][l][c.candidate_id] * val[index.position(ga)]
                            lits.append(acc)
                        per_binding.append(_and2(and_literal, lits[0], lits[1]))
                    clause_vals.append(_or_many(or_exists, per_binding))
                head_val = _or2(or_clausal, clause_vals[0], clause_vals[1])
                pos = index.position(head_atom)
                new_val[pos] = _or2(or_step, val[pos], head_val)
        val = new_val
    return np.array(val, dtype=np.float64)


# ---------------------------------------------------------------------------
# boolean semantics


def _step_boolean(program: Iterable[Clause], true_set: frozenset[Atom], language: Language):
    derived = set(true_set)
    for clause in program:
        for head, pairs in ground_clause(clause, language):
            if head in derived:
                continue
            if any(a in true_set and b in true_set for a, b in pairs):
                derived.add(head)
    return frozenset(derived)


def boolean_chain(
    program: Iterable[Clause], facts: Iterable[Atom], language: Language, n_steps: int
) -> frozenset[Atom]:
    """n simultaneous steps of boolean immediate consequence."""
    program = list(program)
    cur = frozenset(facts)
    for _ in range(n_steps):
        nxt = _step_boolean(program, cur, language)
        if nxt == cur:
            break
        cur = nxt
    return cur


def classical_eval_ref(
    program: Iterable[Clause], facts: Iterable[Atom], language: Language
) -> frozenset[Atom]:
    """Least fixpoint (saturating) boolean evaluation."""
    program = list(program)
    cur = frozenset(facts)
    while True:
        nxt = _step_boolean(program, cur, language)
        if nxt == cur:
            return cur
        cur = nxt


# ---------------------------------------------------------------------------
# exhaustive program search


def enumerate_body_literals(language: Language) -> list[Atom]:
    """All body literals over {x, y, z}, predicate-major in declaration order."""
    pool: list[Atom] = []
    for p in language.predicates:
        if p.arity == 2:
            pool.extend(Atom(p.name, (u, v)) for u in VARIABLES for v in VARIABLES)
        else:
            pool.extend(Atom(p.name, (v,)) for v in VARIABLES)
    return pool


def _clause_pool(head: Predicate, literals: Sequence[Atom]) -> list[Clause]:
    head_atom = Atom(head.name, ("x", "y")[: head.arity])
    return [Clause(head_atom, (l1, l2)) for l1 in literals for l2 in literals]


def _saturate_grounded(
    groundings: Sequence[Sequence[tuple[Atom, list[tuple[Atom, Atom]]]]],
    base: frozenset[Atom],
) -> set[Atom]:
    cur = set(base)
    changed = True
    while changed:
        changed = False
        for grounding in groundings:
            for head, pairs in grounding:
                if head in cur:
                    continue
                if any(a in cur and b in cur for a, b in pairs):
                    cur.add(head)
                    changed = True
    return cur


def exhaustive_solve(
    language: Language,
    facts: Iterable[Atom],
    pos: Iterable[Atom],
    neg: Iterable[Atom],
    *,
    cap: int = EXHAUSTIVE_CAP,
    max_solutions: int = 20,
) -> list[tuple[Clause, ...]]:
    """Enumerate complete programs by brute force and keep the correct ones.

    Each template (the target predicate plus every invented predicate, in
    declaration order) is assigned an unordered pair of clauses drawn from all
    ``C**2`` two-literal bodies over the language.  A program is correct when
    its boolean least fixpoint over ``facts`` covers every positive example
    and no negative one.

    Refuses up front when the summed per-template pair count exceeds ``cap``,
    and likewise mid-search after evaluating ``cap`` programs without finding
    any solution.  Stops early once ``max_solutions`` programs are found; the
    target template's clauses vary fastest, so shallow definitions of the
    target surface first.  An empty result is a proof that no program in the
    space fits — it is returned only when enumeration ran to completion.

    Returns flat clause tuples, the target template's pair first.
    """
    heads = [language.target] + [p for p in language.predicates if p.kind == "invented"]
    literals = enumerate_body_literals(language)
    pools = [_clause_pool(h, literals) for h in heads]
    total = sum(len(p) * (len(p) + 1) // 2 for p in pools)
    if total > cap:
        raise ValueError(
            f"exhaustive search refused: {total} clause-pair combinations exceed cap {cap}"
        )

    base = frozenset(facts)
    pos = list(pos)
    neg = list(neg)
    grounded: dict[Clause, list[tuple[Atom, list[tuple[Atom, Atom]]]]] = {}

    def ground(clause: Clause):
        g = grounded.get(clause)
        if g is None:
            g = ground_clause(clause, language)
            grounded[clause] = g
        return g

    solutions: list[tuple[Clause, ...]] = []
    explored = 0
    chosen: list[tuple[Clause, Clause]] = [None] * len(pools)  # type: ignore[list-item]
    order = list(range(len(pools)))[::-1]

    def leaf() -> bool:
        nonlocal explored
        explored += 1
        groundings = [ground(c) for pair in chosen for c in pair]
        derived = _saturate_grounded(groundings, base)
        if all(a in derived for a in pos) and not any(a in derived for a in neg):
            solutions.append(tuple(c for pair in chosen for c in pair))
        return len(solutions) >= max_solutions or explored >= cap

    def descend(depth: int) -> bool:
        tid = order[depth]
        pool = pools[tid]
        last = depth == len(order) - 1
        for i, c1 in enumerate(pool):
            for c2 in pool[i:]:
                chosen[tid] = (c1, c2)
                stop = leaf() if last else descend(depth + 1)
                if stop:
                    return True
        return False

    stopped = descend(0)
    if stopped and not solutions:
        raise ValueError(
            f"exhaustive search refused: explored {explored} programs "
            f"without completing (cap {cap})"
        )
    return solutions
