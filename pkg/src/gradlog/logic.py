"""First-order scaffolding: predicates, atoms, clauses, languages, grounding.

Everything here is plain data plus deterministic enumeration.  The atom
ordering fixed by :func:`build_atom_index` is the coordinate system used by
every valuation vector in the rest of the package.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Iterable, Sequence

import numpy as np

VARIABLES = ("x", "y", "z")

PRED_KINDS = ("extensional", "invented", "target")


@dataclass(frozen=True)
class Predicate:
    name: str
    arity: int
    kind: str = "extensional"

    def __post_init__(self) -> None:
        if self.arity not in (1, 2):
            raise ValueError(f"arity must be 1 or 2, got {self.arity}")
        if self.kind not in PRED_KINDS:
            raise ValueError(f"unknown predicate kind {self.kind!r}")
        if not self.name or "(" in self.name or "," in self.name:
            raise ValueError(f"bad predicate name {self.name!r}")

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"


@dataclass(frozen=True)
class Atom:
    """A predicate applied to arguments.

    Arguments are plain strings: variable names (x, y, z) in clause literals,
    constant names in ground atoms.  The same type serves both roles.
    """

    pred: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.pred}({','.join(self.args)})"

    @property
    def is_ground(self) -> bool:
        return all(a not in VARIABLES for a in self.args)

    def substitute(self, theta: dict[str, str]) -> "Atom":
        return Atom(self.pred, tuple(theta.get(a, a) for a in self.args))


@dataclass(frozen=True)
class Clause:
    """A definite clause with exactly two body literals.

    Heads are canonical: ``p(x,y)`` for dyadic heads, ``p(x)`` for unary ones.
    Body literals draw their arguments freely from {x, y, z}.
    """

    head: Atom
    body: tuple[Atom, Atom]

    def __post_init__(self) -> None:
        if self.head.args not in (("x", "y"), ("x",)):
            raise ValueError(f"non-canonical head {self.head}")
        if len(self.body) != 2:
            raise ValueError("clause body must have exactly two literals")
        for lit in self.body:
            if any(a not in VARIABLES for a in lit.args):
                raise ValueError(f"body literal {lit} uses a non-variable")

    def __str__(self) -> str:
        return f"{self.head}:-{self.body[0]},{self.body[1]}"

    @property
    def head_vars(self) -> tuple[str, ...]:
        return self.head.args

    @property
    def existential_vars(self) -> tuple[str, ...]:
        """Body variables outside the head, in fixed (x, y, z) order."""
        used = {a for lit in self.body for a in lit.args}
        return tuple(v for v in VARIABLES if v in used and v not in self.head.args)


@dataclass(frozen=True)
class Language:
    """An ordered predicate vocabulary plus an ordered constant universe."""

    predicates: tuple[Predicate, ...]
    constants: tuple[str, ...]

    def __post_init__(self) -> None:
        names = [p.name for p in self.predicates]
        if len(set(names)) != len(names):
            raise ValueError("duplicate predicate names")
        if len(set(self.constants)) != len(self.constants):
            raise ValueError("duplicate constants")
        for c in self.constants:
            if c in VARIABLES:
                raise ValueError(f"constant {c!r} collides with a variable name")

    @cached_property
    def pred_map(self) -> dict[str, Predicate]:
        return {p.name: p for p in self.predicates}

    @cached_property
    def const_pos(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.constants)}

    @property
    def n_constants(self) -> int:
        return len(self.constants)

    def pred(self, name: str) -> Predicate:
        return self.pred_map[name]

    @cached_property
    def target(self) -> Predicate:
        targets = [p for p in self.predicates if p.kind == "target"]
        if len(targets) != 1:
            raise ValueError(f"expected exactly one target predicate, got {len(targets)}")
        return targets[0]

    def dyadic(self) -> tuple[Predicate, ...]:
        return tuple(p for p in self.predicates if p.arity == 2)

    def unary(self) -> tuple[Predicate, ...]:
        return tuple(p for p in self.predicates if p.arity == 1)


class AtomIndex:
    """Bijection between the ground atoms of a language and 0..G-1.

    Order: predicates in declaration order; within a predicate, argument
    tuples in row-major order over the language's constant list.  Each
    predicate therefore occupies one contiguous block.
    """

    def __init__(self, language: Language):
        if not language.constants:
            raise ValueError("empty domain")
        self.language = language
        atoms: list[Atom] = []
        blocks: dict[str, tuple[int, int]] = {}
        for p in language.predicates:
            start = len(atoms)
            for args in product(language.constants, repeat=p.arity):
                atoms.append(Atom(p.name, args))
            blocks[p.name] = (start, len(atoms))
        self.atoms: tuple[Atom, ...] = tuple(atoms)
        self.blocks = blocks
        self._pos = {a: i for i, a in enumerate(atoms)}

    def __len__(self) -> int:
        return len(self.atoms)

    def position(self, atom: Atom) -> int:
        try:
            return self._pos[atom]
        except KeyError:
            raise ValueError(f"fact outside language: {atom}") from None

    def block(self, pred: str) -> tuple[int, int]:
        return self.blocks[pred]

    def positions(self, atoms: Iterable[Atom]) -> np.ndarray:
        return np.array([self.position(a) for a in atoms], dtype=np.int64)


def build_atom_index(language: Language) -> AtomIndex:
    return AtomIndex(language)


def ground_clause(
    clause: Clause, language: Language
) -> list[tuple[Atom, list[tuple[Atom, Atom]]]]:
    """Enumerate all groundings of a clause.

    Returns one entry per head grounding (row-major over the constant list),
    each carrying the list of body-atom pairs for every binding of the
    clause's non-head variables (also row-major, variables in x,y,z order).
    A clause with no existential variables has exactly one binding per head.
    """
    consts = language.constants
    hvars = clause.head_vars
    evars = clause.existential_vars
    out = []
    for hvals in product(consts, repeat=len(hvars)):
        theta = dict(zip(hvars, hvals))
        head = clause.head.substitute(theta)
        pairs = []
        for bvals in product(consts, repeat=len(evars)):
            theta.update(zip(evars, bvals))
            pairs.append((clause.body[0].substitute(theta), clause.body[1].substitute(theta)))
        out.append((head, pairs))
    return out


def initial_valuation(facts: Iterable[Atom], index: AtomIndex) -> np.ndarray:
    """Valuation with 1.0 at the given facts and 0.0 elsewhere."""
    val = np.zeros(len(index), dtype=np.float64)
    for f in facts:
        val[index.position(f)] = 1.0
    return val


def parse_atom(text: str) -> Atom:
    """Parse ``pred(arg,...)`` with optional trailing period."""
    s = text.strip().rstrip(".")
    if not s.endswith(")") or "(" not in s:
        raise ValueError(f"cannot parse atom {text!r}")
    name, rest = s.split("(", 1)
    args = tuple(a.strip() for a in rest[:-1].split(","))
    if not name.strip() or any(not a for a in args):
        raise ValueError(f"cannot parse atom {text!r}")
    return Atom(name.strip(), args)
