import pytest

from gradlog.logic import Atom, Clause, Language, Predicate, parse_atom
from gradlog.reference import (
    EXHAUSTIVE_CAP,
    classical_eval_ref,
    enumerate_body_literals,
    exhaustive_solve,
)


def clause(text):
    head, body = text.split(":-")
    b1, b2 = body.split("),")
    return Clause(parse_atom(head), (parse_atom(b1 + ")"), parse_atom(b2)))


def chain_language(hi, target, target_arity, n_invented):
    preds = [Predicate("succ", 2), Predicate("zero", 1), Predicate(target, target_arity, "target")]
    preds += [Predicate(f"i{k}", 2, "invented") for k in range(1, n_invented + 1)]
    return Language(tuple(preds), tuple(str(i) for i in range(hi + 1)))


def chain_facts(hi):
    return [Atom("zero", ("0",))] + [Atom("succ", (str(i), str(i + 1))) for i in range(hi)]


def predecessor_problem(hi=4):
    lang = chain_language(hi, "pred", 2, n_invented=1)
    pos = [Atom("pred", (str(i + 1), str(i))) for i in range(hi)]
    universe = [Atom("pred", (a, b)) for a in lang.constants for b in lang.constants]
    neg = [a for a in universe if a not in set(pos)]
    return lang, chain_facts(hi), pos, neg


# ---------------------------------------------------------------------------
# literal pool


def test_body_literal_pool_size_and_order():
    lang = chain_language(4, "pred", 2, n_invented=1)
    pool = enumerate_body_literals(lang)
    # nine variable patterns per dyadic predicate, three per unary one
    assert len(pool) == 9 * 3 + 3
    assert pool[0] == Atom("succ", ("x", "x"))
    assert pool[3] == Atom("succ", ("y", "x"))
    assert pool[9] == Atom("zero", ("x",))


# ---------------------------------------------------------------------------
# search results


def test_predecessor_solutions_found():
    lang, facts, pos, neg = predecessor_problem()
    sols = exhaustive_solve(lang, facts, pos, neg)
    assert len(sols) == 20
    canonical = clause("pred(x,y):-succ(y,x),succ(y,x)")
    assert any(canonical in sol for sol in sols)
    # the target template's pair comes first in each program
    for sol in sols:
        assert [c.head.pred for c in sol] == ["pred", "pred", "i1", "i1"]


def test_predecessor_solutions_are_classically_correct():
    lang, facts, pos, neg = predecessor_problem()
    for sol in exhaustive_solve(lang, facts, pos, neg, max_solutions=5):
        derived = classical_eval_ref(sol, facts, lang)
        assert {a for a in derived if a.pred == "pred"} == set(pos)


def test_max_solutions_truncates_deterministically():
    lang, facts, pos, neg = predecessor_problem()
    all20 = exhaustive_solve(lang, facts, pos, neg)
    first3 = exhaustive_solve(lang, facts, pos, neg, max_solutions=3)
    assert first3 == all20[:3]


def test_even_without_invention_is_unsolvable():
    # a complete enumeration, so the empty result is a proof
    lang = chain_language(5, "even", 1, n_invented=0)
    pos = [Atom("even", (str(i),)) for i in (0, 2, 4)]
    neg = [Atom("even", (str(i),)) for i in (1, 3, 5)]
    assert exhaustive_solve(lang, chain_facts(5), pos, neg) == []


# ---------------------------------------------------------------------------
# refusals


def test_refuses_up_front_when_pair_count_exceeds_cap():
    lang = chain_language(10, "mod6", 1, n_invented=3)
    n_clauses = (9 * 4 + 3 * 2) ** 2
    total = 4 * n_clauses * (n_clauses + 1) // 2
    assert total == 6_226_920 > EXHAUSTIVE_CAP
    with pytest.raises(ValueError, match=r"refused: 6226920 clause-pair"):
        exhaustive_solve(lang, [], [], [])


def test_refuses_mid_search_when_nothing_found():
    # pair sum 31320 passes the gate, but the assignment product is 3321**3
    # and t(b) alone is underivable from q(a), so the explorer runs dry.
    preds = [Predicate("q", 1), Predicate("t", 1, "target"),
             Predicate("i1", 1, "invented"), Predicate("i2", 1, "invented")]
    lang = Language(tuple(preds), ("a", "b"))
    with pytest.raises(ValueError, match=r"explored 31320 programs"):
        exhaustive_solve(lang, [Atom("q", ("a",))], [Atom("t", ("b",))],
                         [Atom("t", ("a",))], cap=31320)


def test_refused_cell_is_still_satisfiable_by_construction():
    # the cap refusal above says nothing about solvability: this hand-built
    # program solves multiples-of-six with three invented predicates.
    program = [
        clause("mod6(x):-zero(x),zero(x)"),
        clause("mod6(x):-mod6(z),i3(z,x)"),
        clause("i1(x,y):-succ(x,z),succ(z,y)"),
        clause("i2(x,y):-i1(x,z),succ(z,y)"),
        clause("i3(x,y):-i2(x,z),i2(z,y)"),
    ]
    for hi in (10, 20):
        lang = chain_language(hi, "mod6", 1, n_invented=3)
        derived = classical_eval_ref(program, chain_facts(hi), lang)
        got = {a for a in derived if a.pred == "mod6"}
        assert got == {Atom("mod6", (str(i),)) for i in range(0, hi + 1, 6)}
