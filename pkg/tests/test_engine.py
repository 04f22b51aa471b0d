import numpy as np
import pytest

from gradlog.engine import (
    LiteralKernel,
    ONE_HOT_GAP,
    TNormConfig,
    WeightStore,
    encode_program,
    forward_chain_step,
    infer,
    loss_and_seed,
    make_kernel,
    mixed_literal_valuation,
    or_reduce,
    softmax,
    t_and,
    t_or,
)
from gradlog.logic import Atom, Clause, Language, Predicate, initial_valuation
from gradlog.space import (
    PruneConfig,
    build_inference_index,
    enumerate_literal_candidates,
    make_templates,
)
from gradlog.reference import boolean_chain, naive_infer

ALL_KINDS = ("max", "product", "lukasiewicz")


def compiled(n_consts=3, n_invented=1, target_arity=2, bk=None):
    preds = [Predicate("succ", 2), Predicate("zero", 1)]
    preds.append(Predicate("p", target_arity, "target"))
    preds += [Predicate(f"i{k}", 2, "invented") for k in range(1, n_invented + 1)]
    lang = Language(tuple(preds), tuple(str(i) for i in range(n_consts)))
    cands = enumerate_literal_candidates(lang)
    idx = build_inference_index(make_templates(lang), lang, cands)
    if bk is None:
        bk = [Atom("zero", ("0",))] + [
            Atom("succ", (str(i), str(i + 1))) for i in range(n_consts - 1)
        ]
    ev0 = initial_valuation(bk, idx.atom_index)
    return lang, cands, idx, ev0


def clause(text):
    head, body = text.split(":-")
    from gradlog.logic import parse_atom

    b1, b2 = body.split("),")
    return Clause(parse_atom(head), (parse_atom(b1 + ")"), parse_atom(b2)))


# ---------------------------------------------------------------------------
# operator families


def test_tnorm_examples():
    assert t_and("product", 0.5, 0.4) == pytest.approx(0.2)
    assert t_or("product", 0.5, 0.4) == pytest.approx(0.7)
    assert t_and("lukasiewicz", 0.7, 0.2) == 0.0
    assert t_and("max", 0.3, 0.8) == 0.3
    assert t_or("max", 0.3, 0.8) == 0.8


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_tnorm_identity_laws(kind):
    xs = np.linspace(0, 1, 11)
    assert np.allclose(t_and(kind, xs, np.ones_like(xs)), xs)
    assert np.allclose(t_or(kind, xs, np.zeros_like(xs)), xs)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_tnorm_range(kind):
    rng = np.random.default_rng(0)
    a, b = rng.random(100), rng.random(100)
    for arr in (t_and(kind, a, b), t_or(kind, a, b), or_reduce(kind, rng.random((20, 7)))):
        assert (arr >= 0).all() and (arr <= 1).all()


def test_unknown_kind_rejected():
    with pytest.raises(ValueError, match="unknown operator kind"):
        TNormConfig(and_literal="nope")


# ---------------------------------------------------------------------------
# forward semantics


def test_one_hot_modus_ponens():
    lang, cands, idx, _ = compiled(n_consts=3, n_invented=0)
    store = encode_program([clause("p(x,y):-succ(x,y),succ(x,y)")], idx)
    ev0 = initial_valuation(
        [Atom("succ", ("0", "1")), Atom("succ", ("1", "2"))], idx.atom_index
    )
    out = forward_chain_step(ev0, store, idx)
    ai = idx.atom_index
    assert out[ai.position(Atom("p", ("0", "1")))] == 1.0
    assert out[ai.position(Atom("p", ("1", "2")))] == 1.0
    p_block = slice(*ai.block("p"))
    assert out[p_block].sum() == 2.0


def test_one_hot_existential_chaining():
    lang, cands, idx, _ = compiled(n_consts=3, n_invented=0)
    store = encode_program([clause("p(x,y):-succ(x,z),succ(z,y)")], idx)
    ev0 = initial_valuation(
        [Atom("succ", ("0", "1")), Atom("succ", ("1", "2"))], idx.atom_index
    )
    out = forward_chain_step(ev0, store, idx)
    assert out[idx.atom_index.position(Atom("p", ("0", "2")))] == 1.0


def test_fixpoint_of_nonrecursive_program():
    lang, cands, idx, ev0 = compiled(n_consts=3, n_invented=0)
    store = encode_program([clause("p(x,y):-succ(y,x),succ(y,x)")], idx)
    one = infer(ev0, store, idx, n_steps=1)
    two = infer(ev0, store, idx, n_steps=2)
    assert np.array_equal(one, two)


def test_extensional_entries_never_drop():
    lang, cands, idx, ev0 = compiled()
    rng = np.random.default_rng(3)
    store = WeightStore("per_literal", [rng.normal(size=(2, 2, 2, len(cands)))])
    out = infer(ev0, store, idx, n_steps=7)
    assert (out[ev0 == 1.0] == 1.0).all()


def test_monotone_in_steps_under_max_step():
    lang, cands, idx, ev0 = compiled(n_consts=4, n_invented=1)
    rng = np.random.default_rng(7)
    store = WeightStore("per_literal", [rng.normal(size=(2, 2, 2, len(cands)))])
    prev = ev0
    kernel = make_kernel(idx)
    for n in range(1, 6):
        cur = kernel.infer(store, ev0, TNormConfig(), n_steps=n)
        assert (cur >= prev - 1e-15).all()
        prev = cur


@pytest.mark.parametrize("seed", range(4))
def test_range_preservation_random_configs(seed):
    rng = np.random.default_rng(seed)
    lang, cands, idx, ev0 = compiled(n_consts=3, n_invented=1, target_arity=rng.choice([1, 2]))
    store = WeightStore("per_literal", [rng.normal(size=(2, 2, 2, len(cands)))])
    tn = TNormConfig(*(rng.choice(ALL_KINDS) for _ in range(4)))
    out = infer(ev0, store, idx, tn, n_steps=6)
    assert (out >= 0).all() and (out <= 1).all()


def test_mixed_literal_one_hot_and_uniform():
    lang, cands, idx, ev0 = compiled(n_consts=3, n_invented=0)
    table = idx.table(2)
    C = len(cands)
    sel = next(c.candidate_id for c in cands if str(c) == "succ(x,y)")
    logits = np.zeros(C)
    logits[sel] = 25.0
    got = mixed_literal_valuation(ev0, logits, table)
    want = ev0[table[:, :, sel]]
    assert np.abs(got - want).max() < 1e-6
    assert np.abs(got - got[:, :1]).max() < 1e-6  # z-independent candidate
    logits[sel] = ONE_HOT_GAP
    exact = mixed_literal_valuation(ev0, logits, table)
    assert (exact == want).all()
    two = [c.candidate_id for c in cands if str(c) in ("succ(x,y)", "zero(x)")]
    logits = np.full(C, -1e9)
    logits[two] = 0.0
    got = mixed_literal_valuation(ev0, logits, table)
    want = 0.5 * (ev0[table[:, :, two[0]]] + ev0[table[:, :, two[1]]])
    assert np.abs(got - want).max() < 1e-12


def test_softmax_shift_invariance():
    lang, cands, idx, ev0 = compiled()
    rng = np.random.default_rng(11)
    logits = rng.normal(size=(2, 2, 2, len(cands)))
    shifted = logits + rng.normal(size=(2, 2, 2, 1))
    a = infer(ev0, WeightStore("per_literal", [logits]), idx, n_steps=5)
    b = infer(ev0, WeightStore("per_literal", [shifted]), idx, n_steps=5)
    assert np.abs(a - b).max() < 1e-9


def test_factored_mixing_matches_gather_tables():
    for target_arity in (1, 2):
        lang, cands, idx, ev0 = compiled(n_consts=3, n_invented=1, target_arity=target_arity)
        rng = np.random.default_rng(13 + target_arity)
        val = rng.random(len(idx.atom_index))
        logits = rng.normal(size=(2, 2, 2, len(cands)))
        kernel = LiteralKernel(idx)
        s_flat = kernel.softmax_weights(WeightStore("per_literal", [logits]))
        s2, s1 = kernel._slot_mats(s_flat)
        mixed = kernel._mix(val, s2, s1)
        n = lang.n_constants
        for ti, t in enumerate(idx.templates):
            table = idx.table(t.head_arity)
            for j in (0, 1):
                for l in (0, 1):
                    s = ((ti * 2 + j) * 2) + l
                    want = mixed_literal_valuation(val, logits[ti, j, l], table)
                    got = mixed[s].reshape(want.shape) if t.head_arity == 2 else mixed[
                        s
                    ].reshape(n, n * n)
                    assert np.abs(got - want).max() < 1e-12


# ---------------------------------------------------------------------------
# oracle agreement and classical embedding


def random_store(rng, idx, cands):
    T = len(idx.templates)
    return WeightStore("per_literal", [rng.normal(size=(T, 2, 2, len(cands)))])


@pytest.mark.parametrize("seed", range(8))
def test_naive_agreement_random(seed):
    rng = np.random.default_rng(100 + seed)
    n_consts = int(rng.integers(2, 5))
    lang, cands, idx, _ = compiled(
        n_consts=n_consts,
        n_invented=int(rng.integers(0, 2)),
        target_arity=int(rng.choice([1, 2])),
    )
    bk_pool = [a for a in idx.atom_index.atoms if lang.pred(a.pred).kind == "extensional"]
    bk = [a for a in bk_pool if rng.random() < 0.3]
    ev0 = initial_valuation(bk, idx.atom_index)
    store = random_store(rng, idx, cands)
    kinds = {k: str(rng.choice(ALL_KINDS)) for k in
             ("and_literal", "or_exists", "or_clausal", "or_step")}
    n_steps = int(rng.integers(1, 5))
    fast = infer(ev0, store, idx, TNormConfig(**kinds), n_steps=n_steps)
    slow = naive_infer(
        ev0, store.arrays[0], idx.templates, cands, lang, n_steps, **kinds
    )
    assert np.abs(fast - slow).max() < 1e-9


def test_naive_cost_cap():
    lang, cands, idx, ev0 = compiled(n_consts=4)
    store = random_store(np.random.default_rng(0), idx, cands)
    with pytest.raises(ValueError, match="cost"):
        naive_infer(
            ev0, store.arrays[0], idx.templates, cands, lang, 10, cost_cap=10
        )


def random_program(rng, lang, cands, templates):
    out = []
    for t in templates:
        for _ in range(2):
            c1, c2 = rng.choice(len(cands), size=2)
            out.append(
                Clause(t.head_atom(), (cands[c1].atom(), cands[c2].atom()))
            )
    return out


@pytest.mark.parametrize("seed", range(10))
def test_classical_embedding_exact(seed):
    rng = np.random.default_rng(200 + seed)
    lang, cands, idx, _ = compiled(
        n_consts=int(rng.integers(2, 5)),
        n_invented=int(rng.integers(0, 3)),
        target_arity=int(rng.choice([1, 2])),
    )
    bk_pool = [a for a in idx.atom_index.atoms if lang.pred(a.pred).kind == "extensional"]
    bk = [a for a in bk_pool if rng.random() < 0.4]
    ev0 = initial_valuation(bk, idx.atom_index)
    program = random_program(rng, lang, cands, idx.templates)
    store = encode_program(program, idx)
    tn = TNormConfig(*(str(k) for k in rng.choice(ALL_KINDS, size=4)))
    out = infer(ev0, store, idx, tn, n_steps=10)
    want_set = boolean_chain(program, bk, lang, 10)
    want = np.array([1.0 if a in want_set else 0.0 for a in idx.atom_index.atoms])
    assert np.array_equal(out, want)


def test_scheme_independence_on_one_hot():
    lang, cands, idx, ev0 = compiled(n_consts=3, n_invented=1)
    program = [
        clause("p(x,y):-succ(y,x),succ(y,x)"),
        clause("i1(x,y):-succ(x,z),succ(z,y)"),
        clause("p(x,y):-i1(y,x),i1(y,x)"),
    ]
    outs = []
    for mode in ("per_literal", "per_clause", "per_template"):
        store = encode_program(program, idx, mode=mode)
        kernel = make_kernel(idx, mode)
        outs.append(kernel.infer(store, ev0, TNormConfig(), n_steps=8))
    assert np.array_equal(outs[0], outs[1])
    assert np.array_equal(outs[0], outs[2])


# ---------------------------------------------------------------------------
# loss and gradients


def test_loss_values():
    val = np.array([1.0 - 1e-7, 1e-7, 0.5])
    loss, _ = loss_and_seed(val, np.array([0]), np.array([1]))
    assert loss == pytest.approx(1e-7, abs=1e-9)
    loss, _ = loss_and_seed(val, np.array([2]), np.array([], dtype=int))
    assert loss == pytest.approx(0.5 * -np.log(0.5))
    loss, dval = loss_and_seed(val, np.array([], dtype=int), np.array([], dtype=int))
    assert loss == 0.0 and not dval.any()


def test_loss_clamps_extremes():
    val = np.array([0.0, 1.0])
    loss, dval = loss_and_seed(val, np.array([0]), np.array([1]))
    assert np.isfinite(loss)
    assert dval[0] == 0.0 and dval[1] == 0.0  # clamped endpoints carry no gradient


def finite_diff_at(kernel, store, ev0, pos, neg, tn, n_steps, picks, h=1e-4):
    """Central differences at selected flat components of each weight array."""
    out = []
    for arr, idxs in zip(store.arrays, picks):
        flat = arr.ravel()
        vals = np.zeros(len(idxs))
        for row, k in enumerate(idxs):
            orig = flat[k]
            flat[k] = orig + h
            lp, _, _ = kernel.loss_and_grad(store, ev0, pos, neg, tn, n_steps)
            flat[k] = orig - h
            lm, _, _ = kernel.loss_and_grad(store, ev0, pos, neg, tn, n_steps)
            flat[k] = orig
            vals[row] = (lp - lm) / (2 * h)
        out.append(vals)
    return out


def rel_err(analytic, fd):
    mask = np.abs(analytic) > 1e-6
    if not mask.any():
        return 0.0
    return (np.abs(analytic - fd)[mask] / np.abs(analytic)[mask]).max()


def check_gradients(kernel, store, ev0, pos, neg, tn, n_steps, rng, n_picks=120):
    loss, grads, _ = kernel.loss_and_grad(store, ev0, pos, neg, tn, n_steps)
    picks = [
        rng.choice(a.size, size=min(n_picks, a.size), replace=False)
        for a in store.arrays
    ]
    fd = finite_diff_at(kernel, store, ev0, pos, neg, tn, n_steps, picks)
    for g, idxs, f in zip(grads, picks, fd):
        assert rel_err(g.ravel()[idxs], f) < 1e-3


@pytest.mark.parametrize("tn", [
    TNormConfig(),
    TNormConfig("product", "product", "product", "product"),
    TNormConfig("lukasiewicz", "max", "lukasiewicz", "max"),
    TNormConfig("max", "lukasiewicz", "max", "product"),
])
def test_gradient_matches_finite_differences(tn):
    rng = np.random.default_rng(42)
    lang, cands, idx, ev0 = compiled(n_consts=3, n_invented=1)
    kernel = make_kernel(idx)
    ai = idx.atom_index
    pos = ai.positions([Atom("p", ("1", "0")), Atom("p", ("2", "1"))])
    neg = ai.positions([Atom("p", ("0", "0")), Atom("p", ("0", "2"))])
    store = WeightStore("per_literal", [0.6 * rng.normal(size=(2, 2, 2, len(cands)))])
    check_gradients(kernel, store, ev0, pos, neg, tn, 5, rng)


@pytest.mark.parametrize("mode", ["per_clause", "per_template"])
def test_clause_kernel_gradients(mode):
    rng = np.random.default_rng(5)
    lang, cands, idx, ev0 = compiled(n_consts=3, n_invented=0)
    kernel = make_kernel(idx, mode)
    ai = idx.atom_index
    pos = ai.positions([Atom("p", ("1", "0")), Atom("p", ("2", "1"))])
    neg = ai.positions([Atom("p", ("0", "0")), Atom("p", ("1", "2"))])
    store = WeightStore(mode, [0.5 * rng.normal(size=s) for s in kernel.weight_shapes])
    check_gradients(kernel, store, ev0, pos, neg, TNormConfig(), 4, rng)


def test_weight_store_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    store = WeightStore("per_literal", [rng.normal(size=(2, 2, 2, 21))])
    path = tmp_path / "w.npz"
    store.save(path)
    loaded = WeightStore.load(path)
    assert loaded.mode == "per_literal"
    assert all(np.array_equal(a, b) for a, b in zip(store.arrays, loaded.arrays))


def test_weight_counts_match_kernels():
    from gradlog.space import weight_counts

    lang, cands, idx, _ = compiled(n_consts=3, n_invented=2)
    counts = weight_counts(lang)
    assert sum(
        np.prod(s) for s in make_kernel(idx, "per_literal").weight_shapes
    ) == counts["per_literal"]
    assert sum(
        int(np.prod(s)) for s in make_kernel(idx, "per_clause").weight_shapes
    ) == counts["per_clause"]
    assert sum(
        int(np.prod(s)) for s in make_kernel(idx, "per_template").weight_shapes
    ) == counts["per_template"]
