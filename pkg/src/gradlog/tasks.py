"""Benchmark task suite: generators, registry, and the task file format.

Every task is generated deterministically (no RNG), so serialized task
files are byte-identical across runs and platforms.  Each task carries a
train domain and a test domain whose constants strictly extend the train
constants; example labels on train constants are preserved in the test
domain, so classical correctness on the test domain implies correctness
on the training domain.

Desk-scale defaults: numbers 0..10 train / 0..20 test; lists up to length
6 train / 10 test over four values; graphs of 8 nodes train / 12 test;
ancestor trees of depth 3 train / 4 test.  Test graphs extend train graphs
only with edges leaving new nodes, which keeps every train label intact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .logic import Atom, Language, Predicate, parse_atom
from .space import DEFAULT_MAX_INDEX_BYTES
from .train import CompiledProblem, compile_problem


@dataclass(frozen=True)
class TaskDomain:
    """One evaluation domain: constants, background facts, and examples."""

    constants: tuple[str, ...]
    facts: tuple[Atom, ...]
    pos: tuple[Atom, ...]
    neg: tuple[Atom, ...]


@dataclass(frozen=True)
class Task:
    """A named learning problem with train and test domains."""

    name: str
    predicates: tuple[Predicate, ...]
    train: TaskDomain
    test: TaskDomain
    variant: str = ""

    @property
    def target(self) -> Predicate:
        (t,) = [p for p in self.predicates if p.kind == "target"]
        return t


def language_for(task: Task, n_invented: int, domain: str = "train") -> Language:
    """Extend the task's predicates with dyadic invented symbols i1..iN."""
    if domain not in ("train", "test"):
        raise ValueError(f"unknown domain {domain!r}")
    invented = tuple(
        Predicate(f"i{k}", 2, "invented") for k in range(1, n_invented + 1)
    )
    constants = (task.train if domain == "train" else task.test).constants
    return Language(task.predicates + invented, constants)


def compile_task(
    task: Task,
    n_invented: int,
    domain: str = "train",
    max_index_bytes: int = DEFAULT_MAX_INDEX_BYTES,
    verbose: bool = False,
) -> CompiledProblem:
    """Lower one domain of a task to a trainable CompiledProblem."""
    language = language_for(task, n_invented, domain)
    d = task.train if domain == "train" else task.test
    return compile_problem(language, d.facts, d.pos, d.neg, max_index_bytes, verbose)


# ---------------------------------------------------------------------------
# shared generator helpers
# ---------------------------------------------------------------------------


def _numbers(hi: int) -> tuple[str, ...]:
    return tuple(str(i) for i in range(hi + 1))


def _succ_chain(hi: int) -> list[Atom]:
    return [Atom("zero", ("0",))] + [
        Atom("succ", (str(i), str(i + 1))) for i in range(hi)
    ]


def _split_pairs(
    name: str, constants: Sequence[str], true_pairs: Iterable[tuple[str, str]]
) -> tuple[tuple[Atom, ...], tuple[Atom, ...]]:
    """All target atoms over constant pairs, split into E+ and E-."""
    truth = set(true_pairs)
    pos, neg = [], []
    for a in constants:
        for b in constants:
            (pos if (a, b) in truth else neg).append(Atom(name, (a, b)))
    return tuple(pos), tuple(neg)


def _split_units(
    name: str, constants: Sequence[str], true_units: Iterable[str]
) -> tuple[tuple[Atom, ...], tuple[Atom, ...]]:
    truth = set(true_units)
    pos, neg = [], []
    for a in constants:
        (pos if a in truth else neg).append(Atom(name, (a,)))
    return tuple(pos), tuple(neg)


def _numeric_task(
    name: str,
    target: Predicate,
    label: Callable[[int, int], object],
    extra_facts: Callable[[int], list[Atom]] | None = None,
    extra_preds: tuple[Predicate, ...] = (),
    train_hi: int = 10,
    test_hi: int = 20,
    variant: str = "",
) -> Task:
    """Numeric task over 0..hi with zero/succ background knowledge.

    ``label`` maps (value(s), hi) to truth: for unary targets it receives
    (a, hi); for dyadic targets the helpers below close over both arguments.
    """

    def domain(hi: int) -> TaskDomain:
        consts = _numbers(hi)
        facts = _succ_chain(hi)
        if extra_facts is not None:
            facts += extra_facts(hi)
        if target.arity == 1:
            truth = [c for c in consts if label(int(c), hi)]
            pos, neg = _split_units(target.name, consts, truth)
        else:
            truth = [
                (a, b)
                for a in consts
                for b in consts
                if label((int(a), int(b)), hi)
            ]
            pos, neg = _split_pairs(target.name, consts, truth)
        return TaskDomain(consts, tuple(facts), pos, neg)

    preds = (
        Predicate("succ", 2, "extensional"),
        Predicate("zero", 1, "extensional"),
    ) + extra_preds + (target,)
    return Task(name, preds, domain(train_hi), domain(test_hi), variant)


# ---------------------------------------------------------------------------
# numeric tasks
# ---------------------------------------------------------------------------


def make_predecessor() -> Task:
    return _numeric_task(
        "predecessor",
        Predicate("pred", 2, "target"),
        lambda ab, hi: ab[0] == ab[1] + 1,
    )


def make_even() -> Task:
    return _numeric_task(
        "even", Predicate("even", 1, "target"), lambda a, hi: a % 2 == 0
    )


def make_even_dyadic() -> Task:
    """The all-dyadic encoding of even: unary facts and examples embed on
    the diagonal (zero(0) becomes zero(0,0), the label for k rides on
    even(k,k)), so every predicate in the language is dyadic.  Off-diagonal
    target atoms are unlabeled."""

    def domain(hi: int) -> TaskDomain:
        consts = _numbers(hi)
        facts = [Atom("succ", (str(i), str(i + 1))) for i in range(hi)] + [
            Atom("zero", ("0", "0"))
        ]
        pos = tuple(Atom("even", (c, c)) for c in consts if int(c) % 2 == 0)
        neg = tuple(Atom("even", (c, c)) for c in consts if int(c) % 2 == 1)
        return TaskDomain(consts, tuple(facts), pos, neg)

    preds = (
        Predicate("succ", 2, "extensional"),
        Predicate("zero", 2, "extensional"),
        Predicate("even", 2, "target"),
    )
    return Task("even_dyadic", preds, domain(10), domain(20))


def make_leq() -> Task:
    return _numeric_task(
        "leq", Predicate("leq", 2, "target"), lambda ab, hi: ab[0] <= ab[1]
    )


def _mod_task(name: str, modulus: int, **kwargs) -> Task:
    return _numeric_task(
        name,
        Predicate(name, 1, "target"),
        lambda a, hi: a % modulus == 0,
        **kwargs,
    )


def make_mod3() -> Task:
    return _mod_task("mod3", 3)


def make_mod6() -> Task:
    return _mod_task("mod6", 6)


def make_mod5_hard() -> Task:
    return _mod_task("mod5", 5, variant="hard")


def make_mod5_easy() -> Task:
    """The easy variant adds +2 and +3 helper relations to the BK."""

    def helpers(hi: int) -> list[Atom]:
        return [
            Atom("plus2", (str(i), str(i + 2))) for i in range(hi - 1)
        ] + [Atom("plus3", (str(i), str(i + 3))) for i in range(hi - 2)]

    return _mod_task(
        "mod5",
        5,
        extra_facts=helpers,
        extra_preds=(
            Predicate("plus2", 2, "extensional"),
            Predicate("plus3", 2, "extensional"),
        ),
        variant="easy",
    )


def make_plus2() -> Task:
    return _numeric_task(
        "plus2", Predicate("plus2", 2, "target"), lambda ab, hi: ab[1] == ab[0] + 2
    )


def make_plus4() -> Task:
    return _numeric_task(
        "plus4", Predicate("plus4", 2, "target"), lambda ab, hi: ab[1] == ab[0] + 4
    )


# ---------------------------------------------------------------------------
# list tasks (cons-cell encoding: one constant per distinct suffix)
# ---------------------------------------------------------------------------

LIST_VALUES = ("a", "b", "c", "d")


def _spine(length: int) -> tuple[str, ...]:
    return tuple(LIST_VALUES[i % len(LIST_VALUES)] for i in range(length))


def _list_name(items: tuple[str, ...]) -> str:
    return "l_" + "".join(items) if items else "nil"


def _list_universe(max_len: int) -> list[tuple[str, ...]]:
    """Cyclic spines of every length up to max_len, closed under suffix."""
    seen: dict[tuple[str, ...], None] = {}
    for length in range(max_len + 1):
        items = _spine(length)
        for k in range(len(items) + 1):
            seen.setdefault(items[k:], None)
    return sorted(seen, key=lambda s: (len(s), s))


def _list_facts(lists: Sequence[tuple[str, ...]]) -> list[Atom]:
    facts = [Atom("nil", ("nil",))]
    for items in lists:
        if items:
            facts.append(Atom("head", (_list_name(items), items[0])))
            facts.append(Atom("tail", (_list_name(items), _list_name(items[1:]))))
    return facts


def make_member() -> Task:
    def domain(max_len: int) -> TaskDomain:
        lists = _list_universe(max_len)
        consts = LIST_VALUES + tuple(_list_name(s) for s in lists)
        truth = [
            (v, _list_name(items)) for items in lists for v in set(items)
        ]
        pos, neg = _split_pairs("member", consts, truth)
        return TaskDomain(consts, tuple(_list_facts(lists)), pos, neg)

    preds = (
        Predicate("head", 2, "extensional"),
        Predicate("tail", 2, "extensional"),
        Predicate("nil", 1, "extensional"),
        Predicate("member", 2, "target"),
    )
    return Task("member", preds, domain(6), domain(10))


def make_length() -> Task:
    def domain(max_len: int) -> TaskDomain:
        lists = _list_universe(max_len)
        consts = (
            LIST_VALUES
            + tuple(_list_name(s) for s in lists)
            + _numbers(max_len)
        )
        facts = _list_facts(lists) + _succ_chain(max_len)
        truth = [(_list_name(items), str(len(items))) for items in lists]
        pos, neg = _split_pairs("length", consts, truth)
        return TaskDomain(consts, tuple(facts), pos, neg)

    preds = (
        Predicate("head", 2, "extensional"),
        Predicate("tail", 2, "extensional"),
        Predicate("nil", 1, "extensional"),
        Predicate("succ", 2, "extensional"),
        Predicate("zero", 1, "extensional"),
        Predicate("length", 2, "target"),
    )
    return Task("length", preds, domain(6), domain(10))


# ---------------------------------------------------------------------------
# tree task
# ---------------------------------------------------------------------------


def make_grandparent() -> Task:
    def domain(depth: int) -> TaskDomain:
        n_nodes = 2 ** (depth + 1) - 1
        consts = tuple(f"n{i}" for i in range(1, n_nodes + 1))
        parents = [
            (f"n{i}", f"n{c}")
            for i in range(1, n_nodes + 1)
            for c in (2 * i, 2 * i + 1)
            if c <= n_nodes
        ]
        facts = [Atom("parent", p) for p in parents]
        children: dict[str, list[str]] = {}
        for a, b in parents:
            children.setdefault(a, []).append(b)
        truth = [
            (a, c)
            for a, bs in children.items()
            for b in bs
            for c in children.get(b, [])
        ]
        pos, neg = _split_pairs("grandparent", consts, truth)
        return TaskDomain(consts, tuple(facts), pos, neg)

    preds = (
        Predicate("parent", 2, "extensional"),
        Predicate("grandparent", 2, "target"),
    )
    return Task("grandparent", preds, domain(3), domain(4))


# ---------------------------------------------------------------------------
# graph tasks (fixed graphs; the test graph adds nodes and only edges that
# leave new nodes, so train labels carry over unchanged)
# ---------------------------------------------------------------------------

TRAIN_NODES = ("a", "b", "c", "d", "e", "f", "g", "h")
TRAIN_EDGES = (
    ("a", "b"),
    ("b", "c"),
    ("c", "a"),
    ("c", "d"),
    ("d", "e"),
    ("a", "e"),
    ("f", "g"),
    ("f", "h"),
    ("h", "f"),
)
TEST_NODES = TRAIN_NODES + ("i", "j", "k", "l")
TEST_EDGES = TRAIN_EDGES + (
    ("i", "j"),
    ("j", "k"),
    ("k", "i"),
    ("i", "a"),
    ("j", "d"),
    ("l", "g"),
    ("l", "j"),
)
NODE_COLOURS = {
    "a": "red",
    "b": "green",
    "c": "blue",
    "d": "red",
    "e": "red",
    "f": "red",
    "g": "blue",
    "h": "green",
    "i": "red",
    "j": "green",
    "k": "red",
    "l": "blue",
}
COLOURS = ("red", "green", "blue")


def _reachable(nodes: Sequence[str], edges: Sequence[tuple[str, str]]):
    out: dict[str, set[str]] = {n: set() for n in nodes}
    for a, b in edges:
        out[a].add(b)
    reach = {n: set(out[n]) for n in nodes}
    changed = True
    while changed:
        changed = False
        for n in nodes:
            new = set().union(*(reach[m] for m in reach[n]), reach[n])
            if new != reach[n]:
                reach[n] = new
                changed = True
    return reach


def _graph_task(
    name: str,
    target: Predicate,
    label: Callable[[Sequence[str], Sequence[tuple[str, str]]], list],
    extra_preds: tuple[Predicate, ...] = (),
    extra_facts: Callable[[Sequence[str]], list[Atom]] | None = None,
    extra_consts: tuple[str, ...] = (),
) -> Task:
    def domain(nodes, edges) -> TaskDomain:
        consts = tuple(nodes) + extra_consts
        facts = [Atom("edge", e) for e in edges]
        if extra_facts is not None:
            facts += extra_facts(nodes)
        truth = label(nodes, edges)
        if target.arity == 1:
            pos, neg = _split_units(target.name, consts, truth)
        else:
            pos, neg = _split_pairs(target.name, consts, truth)
        return TaskDomain(consts, tuple(facts), pos, neg)

    preds = (Predicate("edge", 2, "extensional"),) + extra_preds + (target,)
    return Task(
        name, preds, domain(TRAIN_NODES, TRAIN_EDGES), domain(TEST_NODES, TEST_EDGES)
    )


def make_undirected_edge() -> Task:
    def label(nodes, edges):
        return [(a, b) for a, b in edges] + [(b, a) for a, b in edges]

    return _graph_task(
        "undirected_edge", Predicate("undirected", 2, "target"), label
    )


def make_adjacent_to_red() -> Task:
    def red_facts(nodes):
        return [Atom("red", (n,)) for n in nodes if NODE_COLOURS[n] == "red"]

    def label(nodes, edges):
        return [a for a, b in edges if NODE_COLOURS[b] == "red"]

    return _graph_task(
        "adjacent_to_red",
        Predicate("adjacent_to_red", 1, "target"),
        label,
        extra_preds=(Predicate("red", 1, "extensional"),),
        extra_facts=red_facts,
    )


def make_two_children() -> Task:
    def neq_facts(nodes):
        return [
            Atom("neq", (m, n)) for m in nodes for n in nodes if m != n
        ]

    def label(nodes, edges):
        degree: dict[str, int] = {}
        for a, _ in edges:
            degree[a] = degree.get(a, 0) + 1
        return [n for n in nodes if degree.get(n, 0) >= 2]

    return _graph_task(
        "two_children",
        Predicate("two_children", 1, "target"),
        label,
        extra_preds=(Predicate("neq", 2, "extensional"),),
        extra_facts=neq_facts,
    )


def make_graph_colouring() -> Task:
    def colour_facts(nodes):
        return [Atom("colour", (n, NODE_COLOURS[n])) for n in nodes]

    def label(nodes, edges):
        return [a for a, b in edges if NODE_COLOURS[a] == NODE_COLOURS[b]]

    return _graph_task(
        "graph_colouring",
        Predicate("miscoloured", 1, "target"),
        label,
        extra_preds=(Predicate("colour", 2, "extensional"),),
        extra_facts=colour_facts,
        extra_consts=COLOURS,
    )


def make_connectedness() -> Task:
    def label(nodes, edges):
        reach = _reachable(nodes, edges)
        return [(a, b) for a in nodes for b in reach[a]]

    return _graph_task(
        "connectedness", Predicate("connected", 2, "target"), label
    )


def make_cyclic() -> Task:
    def label(nodes, edges):
        reach = _reachable(nodes, edges)
        return [n for n in nodes if n in reach[n]]

    return _graph_task("cyclic", Predicate("cyclic", 1, "target"), label)


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

TASK_BUILDERS: dict[str, Callable[[], Task]] = {
    "predecessor": make_predecessor,
    "even": make_even,
    "even_dyadic": make_even_dyadic,
    "leq": make_leq,
    "mod3": make_mod3,
    "mod5_easy": make_mod5_easy,
    "mod5_hard": make_mod5_hard,
    "mod6": make_mod6,
    "plus2": make_plus2,
    "plus4": make_plus4,
    "member": make_member,
    "length": make_length,
    "grandparent": make_grandparent,
    "undirected_edge": make_undirected_edge,
    "adjacent_to_red": make_adjacent_to_red,
    "two_children": make_two_children,
    "graph_colouring": make_graph_colouring,
    "connectedness": make_connectedness,
    "cyclic": make_cyclic,
}


def task_names() -> tuple[str, ...]:
    return tuple(TASK_BUILDERS)


def make_task(name: str) -> Task:
    try:
        return TASK_BUILDERS[name]()
    except KeyError:
        raise ValueError(f"unknown task {name!r}") from None


# ---------------------------------------------------------------------------
# task file format
# ---------------------------------------------------------------------------


def serialize_task(task: Task) -> str:
    """Render a task in the line-based text format (deterministic)."""
    lines = [f"% task {task.name}" + (f" ({task.variant})" if task.variant else "")]
    for p in task.predicates:
        lines.append(f"pred {p.name}/{p.arity} {p.kind}")
    for header, domain in (("[train]", task.train), ("[test]", task.test)):
        lines.append("")
        lines.append(header)
        for c in domain.constants:
            lines.append(f"const {c}")
        for atom in domain.facts:
            lines.append(f"fact {atom}.")
        for atom in domain.pos:
            lines.append(f"pos {atom}.")
        for atom in domain.neg:
            lines.append(f"neg {atom}.")
    return "\n".join(lines) + "\n"


def parse_task(text: str, name: str = "task") -> Task:
    """Parse the line-based task format; inverse of serialize_task.

    The task name and variant ride in the leading "% task" comment written
    by serialize_task; other comments are ignored.
    """
    predicates: list[Predicate] = []
    domains = {"[train]": None, "[test]": None}
    section: dict | None = None
    variant = ""
    for raw in text.splitlines():
        comment = raw.strip()
        line = raw.split("%", 1)[0].strip()
        if not line:
            if comment.startswith("% task "):
                tail = comment[len("% task ") :]
                name = tail.split()[0]
                if "(" in tail and ")" in tail:
                    variant = tail[tail.index("(") + 1 : tail.rindex(")")]
            continue
        if line in domains:
            section = {"constants": [], "facts": [], "pos": [], "neg": []}
            domains[line] = section
            continue
        word, *rest = line.split()
        if word == "pred":
            sig, kind = rest
            pname, _, arity = sig.partition("/")
            predicates.append(Predicate(pname, int(arity), kind))
        elif word == "const":
            if section is None:
                raise ValueError("const line outside a domain section")
            (value,) = rest
            section["constants"].append(value)
        elif word in ("fact", "pos", "neg"):
            if section is None:
                raise ValueError(f"{word} line outside a domain section")
            atom = parse_atom("".join(rest))
            section[word if word != "fact" else "facts"].append(atom)
        else:
            raise ValueError(f"unrecognized task line: {raw!r}")
    if domains["[train]"] is None or domains["[test]"] is None:
        raise ValueError("task file must contain [train] and [test] sections")
    built = {
        key: TaskDomain(
            tuple(d["constants"]), tuple(d["facts"]), tuple(d["pos"]), tuple(d["neg"])
        )
        for key, d in domains.items()
    }
    return Task(name, tuple(predicates), built["[train]"], built["[test]"], variant)
