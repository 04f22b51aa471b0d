import re

import numpy as np
import pytest

from gradlog.engine import make_kernel
from gradlog.evaluate import classical_correct, extract_program, fuzzy_correct
from gradlog.logic import Atom, Language, Predicate
from gradlog.train import (
    Adam,
    Sgd,
    TrainConfig,
    TrainingDiverged,
    TrainResult,
    compile_problem,
    init_weights,
    make_optimizer,
    sample_batch,
    train,
)


def chain_problem(hi=4, n_invented=1):
    preds = [Predicate("succ", 2), Predicate("zero", 1), Predicate("pred", 2, "target")]
    preds += [Predicate(f"i{k}", 2, "invented") for k in range(1, n_invented + 1)]
    lang = Language(tuple(preds), tuple(str(i) for i in range(hi + 1)))
    facts = [Atom("zero", ("0",))] + [Atom("succ", (str(i), str(i + 1))) for i in range(hi)]
    pos = [Atom("pred", (str(i + 1), str(i))) for i in range(hi)]
    universe = [Atom("pred", (a, b)) for a in lang.constants for b in lang.constants]
    neg = [a for a in universe if a not in set(pos)]
    return compile_problem(lang, facts, pos, neg)


# ---------------------------------------------------------------------------
# batching and initialization


def test_sample_batch_probability_one_keeps_everything():
    rng = np.random.default_rng(0)
    mask = sample_batch(list(range(50)), 1.0, rng)
    assert mask.all() and mask.shape == (50,)


def test_sample_batch_is_independent_per_example():
    rng = np.random.default_rng(0)
    hits = sum(sample_batch(range(10), 0.5, rng).sum() for _ in range(10_000))
    assert 0.48 < hits / 100_000 < 0.52


def test_sample_batch_reproducible_and_validated():
    m1 = sample_batch(range(20), 0.5, np.random.default_rng(3))
    m2 = sample_batch(range(20), 0.5, np.random.default_rng(3))
    assert (m1 == m2).all()
    with pytest.raises(ValueError, match=r"batch_probability"):
        sample_batch(range(3), 0.0, np.random.default_rng(0))


def test_init_weights_matches_kernel_shapes():
    problem = chain_problem()
    kernel = make_kernel(problem.index, "per_literal")
    store = init_weights(kernel, 0)
    assert store.mode == "per_literal"
    assert [a.shape for a in store.arrays] == list(kernel.weight_shapes)


def test_init_weights_seeding_and_scale():
    problem = chain_problem()
    kernel = make_kernel(problem.index, "per_clause")
    a = init_weights(kernel, 11)
    b = init_weights(kernel, 11)
    c = init_weights(kernel, 12)
    assert all((x == y).all() for x, y in zip(a.arrays, b.arrays))
    assert any((x != y).any() for x, y in zip(a.arrays, c.arrays))
    # scale multiplies the same underlying standard normal draws
    wide = init_weights(kernel, 11, sigma=3.0)
    assert all(np.allclose(3.0 * x, w) for x, w in zip(a.arrays, wide.arrays))


# ---------------------------------------------------------------------------
# optimizers


def test_adam_bias_corrected_first_steps():
    opt = Adam([(2,)], learning_rate=0.05)
    params = [np.array([1.0, -1.0])]
    grads = [np.array([0.5, 0.0])]
    opt.step(params, grads)
    # bias correction makes the first step lr-sized regardless of grad scale
    assert params[0] == pytest.approx([0.95, -1.0], rel=1e-6)
    opt.step(params, grads)
    assert params[0] == pytest.approx([0.90, -1.0], rel=1e-4)


def test_sgd_step_is_plain_descent():
    opt = Sgd([(2,)], learning_rate=0.1)
    params = [np.array([1.0, 2.0])]
    opt.step(params, [np.array([1.0, -2.0])])
    assert params[0] == pytest.approx([0.9, 2.2])


def test_make_optimizer_rejects_unknown_name():
    with pytest.raises(ValueError, match="unknown optimizer 'adamw'"):
        make_optimizer(TrainConfig(optimizer="adamw"), [(2,)])


# ---------------------------------------------------------------------------
# configuration validation


def test_config_validation():
    with pytest.raises(ValueError, match="max_steps"):
        TrainConfig(max_steps=-1)
    with pytest.raises(ValueError, match="batch_probability"):
        TrainConfig(batch_probability=0.0)
    with pytest.raises(ValueError, match="batch_probability"):
        TrainConfig(batch_probability=1.5)
    with pytest.raises(ValueError, match="infer_steps"):
        TrainConfig(infer_steps=0)
    with pytest.raises(ValueError, match="log_every"):
        TrainConfig(log_every=0)


# ---------------------------------------------------------------------------
# the training loop


def test_zero_steps_returns_initial_state():
    problem = chain_problem()
    config = TrainConfig(max_steps=0, seed=5, infer_steps=5)
    result = train(problem, config)
    assert result.steps_used == 0
    assert result.stop_reason == "max_steps"
    assert result.trajectory == []
    assert len(result.full_losses) == 1 and result.full_losses[0][0] == 0
    kernel = make_kernel(problem.index, "per_literal")
    fresh = init_weights(kernel, np.random.default_rng(5))
    assert all((a == b).all() for a, b in zip(result.weights.arrays, fresh.arrays))


def test_training_is_reproducible_across_runs():
    problem = chain_problem()
    config = TrainConfig(max_steps=30, seed=9, infer_steps=5)
    r1 = train(problem, config)
    r2 = train(problem, config)
    assert r1.trajectory == r2.trajectory
    assert all((a == b).all() for a, b in zip(r1.weights.arrays, r2.weights.arrays))
    r3 = train(problem, TrainConfig(max_steps=30, seed=10, infer_steps=5))
    assert r1.trajectory != r3.trajectory


def test_log_lines_and_full_loss_cadence():
    problem = chain_problem()
    lines: list[str] = []
    result = train(problem, TrainConfig(max_steps=25, seed=0, infer_steps=5), log=lines.append)
    assert [s for s, _ in result.full_losses] == [10, 20, 25]
    assert len(lines) == 3
    assert all(re.fullmatch(r"step \d+: batch loss \d+\.\d{6}, full loss \d+\.\d{6}", l)
               for l in lines)
    assert result.steps_used == 25
    assert len(result.trajectory) == 25
    assert result.final_full_loss == result.full_losses[-1][1]


def test_learns_predecessor_and_extraction_is_correct():
    problem = chain_problem()
    config = TrainConfig(seed=0, infer_steps=10)
    result = train(problem, config)
    assert result.stop_reason == "early_stop"
    assert result.final_full_loss <= config.early_stop_loss
    assert result.steps_used < config.max_steps
    assert len(result.trajectory) == result.steps_used
    assert result.full_losses[-1][0] == result.steps_used
    program = extract_program(result.weights, problem.index)
    assert classical_correct(program.clause_list(), problem)
    assert fuzzy_correct(result.weights, problem, infer_steps=10)


def test_divergence_raises_with_step_number():
    problem = chain_problem(hi=2, n_invented=0)
    config = TrainConfig(seed=0, optimizer="sgd", learning_rate=float("inf"), infer_steps=5)
    with np.errstate(invalid="ignore"):
        with pytest.raises(TrainingDiverged, match=r"diverged at step 1"):
            train(problem, config)


# ---------------------------------------------------------------------------
# problem compilation


def test_compile_problem_maps_examples_to_positions():
    problem = chain_problem(hi=2, n_invented=0)
    atoms = problem.index.atom_index
    assert problem.ev0.sum() == 3.0  # zero(0) plus two successor facts
    assert list(problem.pos) == [atoms.position(Atom("pred", ("1", "0"))),
                                 atoms.position(Atom("pred", ("2", "1")))]
    assert len(problem.neg) == 7
    assert problem.language.target.name == "pred"


def test_compile_problem_rejects_foreign_atoms():
    preds = (Predicate("succ", 2), Predicate("p", 2, "target"))
    lang = Language(preds, ("0", "1"))
    with pytest.raises(ValueError):
        compile_problem(lang, [Atom("edge", ("0", "1"))], [], [])
    with pytest.raises(ValueError):
        compile_problem(lang, [], [Atom("p", ("0", "7"))], [])
