"""Hypothesis-space enumeration and compiled gather indices.

A template is one learnable predicate definition: a pair of clause slots,
each slot holding two literal slots.  Literal candidates are every
predicate/variable-pattern combination over {x, y, z}; they are shared by all
literal slots.  The inference index maps (head grounding, existential
binding, candidate) to a flat ground-atom position so that chaining becomes
pure gather/reduce arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .logic import Atom, AtomIndex, Clause, Language, Predicate, VARIABLES, build_atom_index

# variable patterns in enumeration order
PATTERNS_1 = tuple((v,) for v in VARIABLES)
PATTERNS_2 = tuple((a, b) for a in VARIABLES for b in VARIABLES)

DEFAULT_MAX_INDEX_BYTES = 2 << 30


@dataclass(frozen=True)
class PruneConfig:
    """Clause-space pruning flags.

    head_safety: keep only clauses whose body covers every head variable.
    unordered_bodies: canonicalize body literal pairs (i <= j).
    """

    head_safety: bool = True
    unordered_bodies: bool = False


@dataclass(frozen=True)
class LiteralCandidate:
    pred: str
    args: tuple[str, ...]
    candidate_id: int

    def atom(self) -> Atom:
        return Atom(self.pred, self.args)

    def __str__(self) -> str:
        return str(self.atom())


@dataclass(frozen=True)
class ClauseCandidate:
    clause: Clause
    candidate_id: int
    literal_ids: tuple[int, int]


@dataclass(frozen=True)
class Template:
    """A learnable predicate definition slot: head symbol plus 2x2 body slots."""

    head: str
    head_arity: int

    def head_atom(self) -> Atom:
        return Atom(self.head, ("x", "y")[: self.head_arity])


def make_templates(language: Language) -> tuple[Template, ...]:
    """One template per intensional predicate, target first, declaration order."""
    intensional = [p for p in language.predicates if p.kind != "extensional"]
    ordered = sorted(intensional, key=lambda p: (p.kind != "target",))
    return tuple(Template(p.name, p.arity) for p in ordered)


def enumerate_literal_candidates(
    language: Language, head_arity: int = 2, prune: PruneConfig | None = None
) -> tuple[LiteralCandidate, ...]:
    """All predicate/pattern literals, predicate-major, pattern-minor.

    The candidate set does not depend on the head arity (the binding axis
    does); the argument is accepted for symmetry with the clause enumerator.
    """
    out = []
    for p in language.predicates:
        for pat in PATTERNS_1 if p.arity == 1 else PATTERNS_2:
            out.append(LiteralCandidate(p.name, pat, len(out)))
    return tuple(out)


def candidate_count(language: Language) -> int:
    """Closed form: 9 per dyadic predicate, 3 per unary predicate."""
    return sum(9 if p.arity == 2 else 3 for p in language.predicates)


def enumerate_clause_candidates(
    literal_candidates: Sequence[LiteralCandidate],
    head: Template,
    prune: PruneConfig = PruneConfig(),
) -> tuple[ClauseCandidate, ...]:
    """Ordered (or canonicalized) literal pairs forming candidate clauses."""
    head_atom = Atom(head.head, ("x", "y")[: head.head_arity])
    need = set(head_atom.args)
    out: list[ClauseCandidate] = []
    for c1 in literal_candidates:
        for c2 in literal_candidates:
            if prune.unordered_bodies and c2.candidate_id < c1.candidate_id:
                continue
            if prune.head_safety:
                covered = set(c1.args) | set(c2.args)
                if not need <= covered:
                    continue
            clause = Clause(head_atom, (c1.atom(), c2.atom()))
            out.append(
                ClauseCandidate(clause, len(out), (c1.candidate_id, c2.candidate_id))
            )
    return tuple(out)


class InferenceIndex:
    """Compiled gather tables for one language + candidate set.

    For a head of arity a, the table for that arity class has shape
    (H, B, C): H = |constants|^a head groundings (row-major over the constant
    list), B = bindings of the remaining variables (dyadic heads: z, so
    B = |constants|; unary heads: the (y, z) grid row-major, B = |constants|^2),
    C = number of literal candidates.  Entry [h, b, c] is the flat atom
    position of candidate c under that substitution; z-free (and for unary
    heads y-free) candidates repeat their atom across the broadcast axis.
    """

    def __init__(
        self,
        language: Language,
        templates: Sequence[Template],
        candidates: Sequence[LiteralCandidate],
        max_bytes: int = DEFAULT_MAX_INDEX_BYTES,
        verbose: bool = False,
    ):
        self.language = language
        self.templates = tuple(templates)
        self.candidates = tuple(candidates)
        self.atom_index = build_atom_index(language)
        self.max_bytes = max_bytes
        n = language.n_constants
        arities = sorted({t.head_arity for t in templates})
        self.estimate_bytes = sum(
            (n ** a) * (n ** (3 - a)) * len(candidates) * 4 for a in arities
        )
        if verbose:
            print(f"inference index estimate: {self.estimate_bytes} bytes")
        if self.estimate_bytes > max_bytes:
            raise MemoryError(
                f"index exceeds memory budget: {self.estimate_bytes} > {max_bytes} bytes"
            )
        self.tables = {a: self._build_table(a) for a in arities}
        self.head_blocks = {
            t.head: self.atom_index.block(t.head) for t in templates
        }

    def _coordinate_grids(self, head_arity: int) -> dict[str, np.ndarray]:
        """(H, B) coordinate grid per variable for the given head arity."""
        n = self.language.n_constants
        r = np.arange(n, dtype=np.int64)
        if head_arity == 2:
            # heads (x, y) row-major, bindings z
            shape = (n * n, n)
            x = np.broadcast_to(np.repeat(r, n)[:, None], shape)
            y = np.broadcast_to(np.tile(r, n)[:, None], shape)
            z = np.broadcast_to(r[None, :], shape)
        else:
            # heads (x,), bindings (y, z) row-major
            shape = (n, n * n)
            x = np.broadcast_to(r[:, None], shape)
            y = np.broadcast_to(np.repeat(r, n)[None, :], shape)
            z = np.broadcast_to(np.tile(r, n)[None, :], shape)
        return {"x": x, "y": y, "z": z}

    def _build_table(self, head_arity: int) -> np.ndarray:
        grids = self._coordinate_grids(head_arity)
        n = self.language.n_constants
        cols = []
        for cand in self.candidates:
            start, _ = self.atom_index.block(cand.pred)
            if len(cand.args) == 2:
                pos = start + grids[cand.args[0]] * n + grids[cand.args[1]]
            else:
                pos = start + grids[cand.args[0]]
            cols.append(pos)
        table = np.stack(cols, axis=-1).astype(np.int32)
        table.setflags(write=False)
        return table

    def table(self, head_arity: int) -> np.ndarray:
        return self.tables[head_arity]

    def head_block(self, template: Template) -> tuple[int, int]:
        return self.head_blocks[template.head]

    @property
    def n_candidates(self) -> int:
        return len(self.candidates)


def build_inference_index(
    templates: Sequence[Template],
    language: Language,
    literal_candidates: Sequence[LiteralCandidate],
    max_bytes: int = DEFAULT_MAX_INDEX_BYTES,
    verbose: bool = False,
) -> InferenceIndex:
    return InferenceIndex(language, templates, literal_candidates, max_bytes, verbose)


# ---------------------------------------------------------------------------
# closed-form parameter counting (used by tests and the CLI's size report)


def weight_counts(language: Language, prune: PruneConfig = PruneConfig()) -> dict[str, int]:
    """Parameter totals per weight-assignment mode for this language.

    Computed combinatorially from predicate arities, without enumerating the
    clause space: per-literal is 4C per template; per-clause sums 2*D(arity)
    and per-template D(arity)^2 over templates, where D counts (optionally
    canonicalized) head-safe literal pairs.
    """
    c = candidate_count(language)
    templates = make_templates(language)

    def missing(vs: set[str]) -> int:
        d = sum(1 for p in PATTERNS_2 if not (set(p) & vs))
        u = sum(1 for p in PATTERNS_1 if not (set(p) & vs))
        return sum(d if p.arity == 2 else u for p in language.predicates)

    def pairs(head_arity: int) -> int:
        if prune.head_safety:
            if head_arity == 2:
                total = c * c - missing({"x"}) ** 2 - missing({"y"}) ** 2 + missing({"x", "y"}) ** 2
            else:
                total = c * c - missing({"x"}) ** 2
        else:
            total = c * c
        if prune.unordered_bodies:
            # ordered count keeps both (i,j) and (j,i); the diagonal is fixed
            # under the swap, and safety is symmetric, so halve off-diagonal.
            diag = _safe_diagonal(language, head_arity, prune)
            total = (total - diag) // 2 + diag
        return total

    return {
        "per_literal": 4 * c * len(templates),
        "per_clause": sum(2 * pairs(t.head_arity) for t in templates),
        "per_template": sum(pairs(t.head_arity) ** 2 for t in templates),
    }


def _safe_diagonal(language: Language, head_arity: int, prune: PruneConfig) -> int:
    need = {"x", "y"} if head_arity == 2 else {"x"}
    diag = 0
    for p in language.predicates:
        for pat in PATTERNS_1 if p.arity == 1 else PATTERNS_2:
            if not prune.head_safety or need <= set(pat):
                diag += 1
    return diag
