"""Gradient-descent training loop with batch sampling and early stopping.

A training run owns its weight store and RNG; everything else (language,
inference index, initial valuation, example positions) is immutable and
shared.  Runs are fully determined by (problem, config) on one platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .engine import TNormConfig, WeightStore, loss_and_seed, make_kernel
from .logic import Atom, Language, initial_valuation
from .space import (
    DEFAULT_MAX_INDEX_BYTES,
    InferenceIndex,
    PruneConfig,
    build_inference_index,
    enumerate_literal_candidates,
    make_templates,
)


class TrainingDiverged(RuntimeError):
    """Raised when a run produces a non-finite loss or parameters."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run.

    Defaults follow the training recipe: 2000 gradient steps with early
    finish at loss 1e-3, 25 inference steps, batch probability 0.5, and
    normally distributed initial weights.  Optimizer choice, learning rate,
    and init scale are ours (Adam, 0.1, sigma 1.0) and stay configurable.
    """

    max_steps: int = 2000
    early_stop_loss: float = 1e-3
    infer_steps: int = 25
    batch_probability: float = 0.5
    optimizer: str = "adam"
    learning_rate: float = 0.1
    betas: tuple[float, float] = (0.9, 0.999)
    seed: int = 0
    weight_mode: str = "per_literal"
    init_sigma: float = 1.0
    log_every: int = 10
    tnorms: TNormConfig = field(default_factory=TNormConfig)
    prune: PruneConfig = field(default_factory=PruneConfig)

    def __post_init__(self) -> None:
        if self.max_steps < 0:
            raise ValueError("max_steps must be non-negative")
        if not 0.0 < self.batch_probability <= 1.0:
            raise ValueError("batch_probability must be in (0, 1]")
        if self.infer_steps < 1:
            raise ValueError("infer_steps must be positive")
        if self.log_every < 1:
            raise ValueError("log_every must be positive")


@dataclass(frozen=True)
class TrainResult:
    """Artifacts of one run: weights, per-step batch losses, and stop info.

    ``trajectory`` holds the sampled-batch loss of every optimizer step
    taken (length ``steps_used``); ``full_losses`` holds (step, loss) pairs
    for the periodically evaluated full-batch loss that gates early stopping.
    """

    weights: WeightStore
    trajectory: list[float]
    full_losses: list[tuple[int, float]]
    steps_used: int
    stop_reason: str

    @property
    def final_full_loss(self) -> float:
        return self.full_losses[-1][1]


@dataclass(frozen=True)
class CompiledProblem:
    """A task lowered to arrays: index, initial valuation, example positions."""

    index: InferenceIndex
    ev0: np.ndarray
    pos: np.ndarray
    neg: np.ndarray

    @property
    def language(self) -> Language:
        return self.index.language


def compile_problem(
    language: Language,
    facts: Sequence[Atom],
    pos_examples: Sequence[Atom],
    neg_examples: Sequence[Atom],
    max_index_bytes: int = DEFAULT_MAX_INDEX_BYTES,
    verbose: bool = False,
) -> CompiledProblem:
    """Build the inference index and example position arrays for a task."""
    templates = make_templates(language)
    candidates = enumerate_literal_candidates(language)
    index = build_inference_index(templates, language, candidates, max_index_bytes, verbose)
    ev0 = initial_valuation(facts, index.atom_index)
    return CompiledProblem(
        index=index,
        ev0=ev0,
        pos=index.atom_index.positions(pos_examples),
        neg=index.atom_index.positions(neg_examples),
    )


# ---------------------------------------------------------------------------
# sampling and initialization
# ---------------------------------------------------------------------------


def sample_batch(
    examples: Sequence, batch_probability: float, rng: np.random.Generator
) -> np.ndarray:
    """Include each example independently with the given probability."""
    if not 0.0 < batch_probability <= 1.0:
        raise ValueError("batch_probability must be in (0, 1]")
    return rng.random(len(examples)) < batch_probability


def init_weights(
    kernel, seed: int | np.random.Generator, sigma: float = 1.0
) -> WeightStore:
    """Draw i.i.d. normal(0, sigma^2) logits for every slot of the kernel."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    arrays = [rng.normal(0.0, sigma, size=shape) for shape in kernel.weight_shapes]
    return WeightStore(kernel.mode, arrays)


# ---------------------------------------------------------------------------
# optimizers
# ---------------------------------------------------------------------------


class Adam:
    """Adam with bias correction; adaptive steps suit sparse max subgradients."""

    def __init__(
        self,
        shapes: Sequence[tuple[int, ...]],
        learning_rate: float = 0.1,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.lr = learning_rate
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m += (1.0 - self.b1) * (g - m)
            v += (1.0 - self.b2) * (g * g - v)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class Sgd:
    """Plain gradient descent, kept for ablation against Adam."""

    def __init__(self, shapes: Sequence[tuple[int, ...]], learning_rate: float = 0.1):
        self.lr = learning_rate

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        for p, g in zip(params, grads):
            p -= self.lr * g


def make_optimizer(config: TrainConfig, shapes: Sequence[tuple[int, ...]]):
    if config.optimizer == "adam":
        return Adam(shapes, config.learning_rate, config.betas)
    if config.optimizer == "sgd":
        return Sgd(shapes, config.learning_rate)
    raise ValueError(f"unknown optimizer {config.optimizer!r}")


# ---------------------------------------------------------------------------
# the training loop
# ---------------------------------------------------------------------------


def train(
    problem: CompiledProblem,
    config: TrainConfig = TrainConfig(),
    log: Callable[[str], None] | None = None,
) -> TrainResult:
    """Run sample -> infer -> loss -> step until early stop or max_steps.

    The sampled-batch loss is recorded every step; the full-batch loss is
    evaluated every ``log_every`` steps (and at the last step) and gates
    early stopping.  A non-finite loss or parameter aborts the run with
    TrainingDiverged.
    """
    kernel = make_kernel(problem.index, config.weight_mode, config.prune)
    rng = np.random.default_rng(config.seed)
    store = init_weights(kernel, rng, config.init_sigma)
    optimizer = make_optimizer(config, kernel.weight_shapes)

    def full_loss() -> float:
        val = kernel.infer(store, problem.ev0, config.tnorms, config.infer_steps)
        return loss_and_seed(val, problem.pos, problem.neg)[0]

    trajectory: list[float] = []
    full_losses: list[tuple[int, float]] = []
    stop_reason = "max_steps"

    if config.max_steps == 0:
        full_losses.append((0, full_loss()))
        return TrainResult(store, trajectory, full_losses, 0, stop_reason)

    steps_used = 0
    for step in range(1, config.max_steps + 1):
        pos_sel = problem.pos[sample_batch(problem.pos, config.batch_probability, rng)]
        neg_sel = problem.neg[sample_batch(problem.neg, config.batch_probability, rng)]
        batch_loss, grads, _ = kernel.loss_and_grad(
            store, problem.ev0, pos_sel, neg_sel, config.tnorms, config.infer_steps
        )
        if not math.isfinite(batch_loss):
            raise TrainingDiverged(f"diverged at step {step}: non-finite loss")
        optimizer.step(store.arrays, grads)
        if not all(np.isfinite(a).all() for a in store.arrays):
            raise TrainingDiverged(f"diverged at step {step}: non-finite parameters")
        trajectory.append(batch_loss)
        steps_used = step

        if step % config.log_every == 0 or step == config.max_steps:
            current = full_loss()
            if not math.isfinite(current):
                raise TrainingDiverged(f"diverged at step {step}: non-finite loss")
            full_losses.append((step, current))
            if log is not None:
                log(f"step {step}: batch loss {batch_loss:.6f}, full loss {current:.6f}")
            if current <= config.early_stop_loss:
                stop_reason = "early_stop"
                break

    return TrainResult(store, trajectory, full_losses, steps_used, stop_reason)
