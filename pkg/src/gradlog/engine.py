"""Differentiable forward chaining over ground-atom valuations.

The chain step applies, in order: softmax-weighted literal mixing, fuzzy
conjunction inside each clause body, disjunction over existential bindings,
disjunction between a template's two clause slots, and disjunction with the
previous step's valuation.  Each of the four operator sites is independently
configurable with one of three operator families.

Gradients are computed by a hand-written reverse pass that recomputes step
internals from the stored per-step valuations.  Max-style operators route
their subgradient to the first attaining operand, deterministically.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .logic import Atom, Clause
from .space import (
    InferenceIndex,
    PATTERNS_1,
    PATTERNS_2,
    PruneConfig,
    Template,
    enumerate_clause_candidates,
)

OP_KINDS = ("max", "product", "lukasiewicz")

ONE_HOT_GAP = 1000.0  # exp(-1000) underflows to exactly 0.0, so softmax is exact
LOSS_EPS = 1e-7


@dataclass(frozen=True)
class TNormConfig:
    and_literal: str = "product"
    or_exists: str = "max"
    or_clausal: str = "max"
    or_step: str = "max"

    def __post_init__(self) -> None:
        for site in (self.and_literal, self.or_exists, self.or_clausal, self.or_step):
            if site not in OP_KINDS:
                raise ValueError(f"unknown operator kind {site!r}")


ORIGINAL_STEP_TNORMS = TNormConfig(or_step="product")


def t_and(kind: str, a, b):
    if kind == "product":
        return a * b
    if kind == "max":
        return np.minimum(a, b)
    return np.maximum(a + b - 1.0, 0.0)


def t_or(kind: str, a, b):
    if kind == "product":
        return a + b - a * b
    if kind == "max":
        return np.maximum(a, b)
    return np.minimum(a + b, 1.0)


def _and_bwd(kind: str, a, b, g):
    if kind == "product":
        return g * b, g * a
    if kind == "max":
        first = a <= b
        return g * first, g * ~first
    active = (a + b - 1.0) >= 0.0
    ga = g * active
    return ga, ga.copy()


def _or_bwd(kind: str, a, b, g):
    if kind == "product":
        return g * (1.0 - b), g * (1.0 - a)
    if kind == "max":
        first = a >= b
        return g * first, g * ~first
    active = (a + b) <= 1.0
    ga = g * active
    return ga, ga.copy()


def or_reduce(kind: str, v: np.ndarray) -> np.ndarray:
    """N-ary disjunction over the last axis (existential bindings)."""
    if kind == "max":
        return v.max(axis=-1)
    if kind == "product":
        return 1.0 - np.prod(1.0 - v, axis=-1)
    return np.minimum(v.sum(axis=-1), 1.0)


def _or_reduce_bwd(kind: str, v: np.ndarray, g: np.ndarray) -> np.ndarray:
    dv = np.zeros_like(v)
    if kind == "max":
        am = np.argmax(v, axis=-1)  # first maximum
        np.put_along_axis(dv, am[..., None], g[..., None], axis=-1)
        return dv
    if kind == "lukasiewicz":
        active = v.sum(axis=-1) <= 1.0
        dv[...] = (g * active)[..., None]
        return dv
    q = 1.0 - v
    zeros = (q == 0.0).sum(axis=-1)
    total = np.prod(np.where(q == 0.0, 1.0, q), axis=-1)  # product of nonzeros
    # no zero factor: d/dv_k = prod_{j != k} q_j = total / q_k
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q > 0.0, total[..., None] / q, 0.0)
    dv = np.where(zeros[..., None] == 0, ratio, 0.0)
    one_zero = zeros[..., None] == 1
    dv = np.where(one_zero & (q == 0.0), total[..., None], dv)
    return g[..., None] * dv


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    m = logits.max(axis=axis, keepdims=True)
    e = np.exp(logits - m)
    return e / e.sum(axis=axis, keepdims=True)


def _softmax_bwd(s: np.ndarray, ds: np.ndarray, axis: int = -1) -> np.ndarray:
    inner = (s * ds).sum(axis=axis, keepdims=True)
    return s * (ds - inner)


@dataclass
class WeightStore:
    """Raw (pre-softmax) parameters for one weight-assignment mode."""

    mode: str
    arrays: list[np.ndarray]

    @property
    def n_params(self) -> int:
        return sum(a.size for a in self.arrays)

    def copy(self) -> "WeightStore":
        return WeightStore(self.mode, [a.copy() for a in self.arrays])

    def save(self, path) -> None:
        payload = {f"arr{i}": a for i, a in enumerate(self.arrays)}
        np.savez(path, mode=np.array(self.mode), **payload)

    @classmethod
    def load(cls, path) -> "WeightStore":
        with np.load(path) as data:
            mode = str(data["mode"])
            arrays = [data[f"arr{i}"] for i in range(len(data) - 1)]
        return cls(mode, arrays)


# ---------------------------------------------------------------------------
# per-literal kernel


class LiteralKernel:
    """Per-literal weights: one softmax over all candidates per literal slot.

    The mixing step is computed in factored form: candidates are grouped by
    variable pattern, and each pattern's contribution is a weighted sum of
    per-predicate valuation blocks broadcast onto the (x, y, z) grid.  This
    is algebraically the gather-matmul over the inference index, reassociated.
    """

    mode = "per_literal"

    def __init__(self, index: InferenceIndex):
        lang = index.language
        self.index = index
        self.templates = index.templates
        self.n = n = lang.n_constants
        self.C = len(index.candidates)
        self.T = len(self.templates)
        self.Sn = 4 * self.T

        dyadic = [p.name for p in lang.predicates if p.arity == 2]
        unary = [p.name for p in lang.predicates if p.arity == 1]
        self.n2, self.n1 = len(dyadic), len(unary)
        ai = index.atom_index
        self.pos2 = np.concatenate(
            [np.arange(*ai.block(p)) for p in dyadic]
        ).reshape(self.n2, n * n) if dyadic else np.zeros((0, n * n), dtype=np.int64)
        self.pos1 = np.concatenate(
            [np.arange(*ai.block(p)) for p in unary]
        ).reshape(self.n1, n) if unary else np.zeros((0, n), dtype=np.int64)

        d_rank = {p: i for i, p in enumerate(dyadic)}
        u_rank = {p: i for i, p in enumerate(unary)}
        pat2 = {p: i for i, p in enumerate(PATTERNS_2)}
        pat1 = {p: i for i, p in enumerate(PATTERNS_1)}
        self.cols2 = np.zeros((9, self.n2), dtype=np.int64)
        self.cols1 = np.zeros((3, self.n1), dtype=np.int64)
        for c in index.candidates:
            if len(c.args) == 2:
                self.cols2[pat2[c.args], d_rank[c.pred]] = c.candidate_id
            else:
                self.cols1[pat1[c.args], u_rank[c.pred]] = c.candidate_id

        self.d_tids = np.array([i for i, t in enumerate(self.templates) if t.head_arity == 2])
        self.u_tids = np.array([i for i, t in enumerate(self.templates) if t.head_arity == 1])
        self.head_pos_d = (
            np.concatenate([np.arange(*index.head_block(self.templates[i])) for i in self.d_tids])
            if len(self.d_tids)
            else np.zeros(0, dtype=np.int64)
        )
        self.head_pos_u = (
            np.concatenate([np.arange(*index.head_block(self.templates[i])) for i in self.u_tids])
            if len(self.u_tids)
            else np.zeros(0, dtype=np.int64)
        )

    # -- weights ------------------------------------------------------------

    @property
    def weight_shapes(self) -> list[tuple[int, ...]]:
        return [(self.T, 2, 2, self.C)]

    def softmax_weights(self, store: WeightStore) -> np.ndarray:
        (logits,) = store.arrays
        if logits.shape != (self.T, 2, 2, self.C):
            raise ValueError(f"weight shape {logits.shape} does not match kernel")
        return softmax(logits, axis=-1).reshape(self.Sn, self.C)

    # -- forward ------------------------------------------------------------

    def _slot_mats(self, s_flat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s2 = s_flat[:, self.cols2].transpose(1, 0, 2).reshape(9 * self.Sn, self.n2)
        s1 = s_flat[:, self.cols1].transpose(1, 0, 2).reshape(3 * self.Sn, self.n1)
        return s2, s1

    def _mix(self, val: np.ndarray, s2: np.ndarray, s1: np.ndarray) -> np.ndarray:
        """Softmax mixture per slot on the full (x, y, z) grid."""
        n, Sn = self.n, self.Sn
        p2 = val[self.pos2]  # (n2, n*n)
        p1 = val[self.pos1]  # (n1, n)
        w2 = (s2 @ p2).reshape(9, Sn, n, n)
        w1 = (s1 @ p1).reshape(3, Sn, n)
        mixed = np.zeros((Sn, n, n, n))
        diag = np.arange(n)
        mixed += w2[0][:, diag, diag][:, :, None, None]          # q(x,x)
        mixed += w2[1][:, :, :, None]                            # q(x,y)
        mixed += w2[2][:, :, None, :]                            # q(x,z)
        mixed += w2[3].transpose(0, 2, 1)[:, :, :, None]         # q(y,x)
        mixed += w2[4][:, diag, diag][:, None, :, None]          # q(y,y)
        mixed += w2[5][:, None, :, :]                            # q(y,z)
        mixed += w2[6].transpose(0, 2, 1)[:, :, None, :]         # q(z,x)
        mixed += w2[7].transpose(0, 2, 1)[:, None, :, :]         # q(z,y)
        mixed += w2[8][:, diag, diag][:, None, None, :]          # q(z,z)
        mixed += w1[0][:, :, None, None]                         # q(x)
        mixed += w1[1][:, None, :, None]                         # q(y)
        mixed += w1[2][:, None, None, :]                         # q(z)
        return mixed

    def _step_forward(self, val, s2, s1, tn: TNormConfig):
        n, T = self.n, self.T
        mixed = self._mix(val, s2, s1)
        m = mixed.reshape(T, 2, 2, n, n, n)
        conj = t_and(tn.and_literal, m[:, :, 0], m[:, :, 1])  # (T, 2, n, n, n)
        cl_d = or_reduce(tn.or_exists, conj[self.d_tids]) if len(self.d_tids) else None
        cl_u = (
            or_reduce(tn.or_exists, conj[self.u_tids].reshape(len(self.u_tids), 2, n, n * n))
            if len(self.u_tids)
            else None
        )
        head_d = t_or(tn.or_clausal, cl_d[:, 0], cl_d[:, 1]) if cl_d is not None else None
        head_u = t_or(tn.or_clausal, cl_u[:, 0], cl_u[:, 1]) if cl_u is not None else None
        new_val = val.copy()
        if head_d is not None:
            new_val[self.head_pos_d] = t_or(tn.or_step, val[self.head_pos_d], head_d.ravel())
        if head_u is not None:
            new_val[self.head_pos_u] = t_or(tn.or_step, val[self.head_pos_u], head_u.ravel())
        return new_val, (mixed, conj, cl_d, cl_u, head_d, head_u)

    def infer(
        self,
        store: WeightStore,
        ev0: np.ndarray,
        tnorms: TNormConfig = TNormConfig(),
        n_steps: int = 25,
        record: bool = False,
    ):
        """Run n_steps of chaining; optionally keep every intermediate valuation.

        With or_step=max an exact fixpoint ends the loop early: remaining
        steps are identities whose step-disjunction ties route to the old
        value, so both values and gradients are unchanged by skipping.
        """
        s_flat = self.softmax_weights(store)
        s2, s1 = self._slot_mats(s_flat)
        val = ev0.astype(np.float64, copy=True)
        vals = [val]
        for _ in range(n_steps):
            new_val, _aux = self._step_forward(val, s2, s1, tnorms)
            if tnorms.or_step == "max" and np.array_equal(new_val, val):
                break
            vals.append(new_val)
            val = new_val
        if record:
            return val, vals
        return val

    # -- backward -----------------------------------------------------------

    def _step_backward(self, val_prev, dval, s2, s1, tn: TNormConfig):
        """Gradient of one chain step; recomputes the step's internals."""
        n, T, Sn = self.n, self.T, self.Sn
        _, (mixed, conj, cl_d, cl_u, head_d, head_u) = self._step_forward(
            val_prev, s2, s1, tn
        )
        dval_prev = dval.copy()
        dconj = np.zeros_like(conj)
        if head_d is not None:
            g = dval[self.head_pos_d]
            ga, gb = _or_bwd(tn.or_step, val_prev[self.head_pos_d], head_d.ravel(), g)
            dval_prev[self.head_pos_d] = ga
            dhead = gb.reshape(head_d.shape)
            g0, g1 = _or_bwd(tn.or_clausal, cl_d[:, 0], cl_d[:, 1], dhead)
            dcl = np.stack([g0, g1], axis=1)
            dconj[self.d_tids] = _or_reduce_bwd(tn.or_exists, conj[self.d_tids], dcl)
        if head_u is not None:
            g = dval[self.head_pos_u]
            ga, gb = _or_bwd(tn.or_step, val_prev[self.head_pos_u], head_u.ravel(), g)
            dval_prev[self.head_pos_u] = ga
            dhead = gb.reshape(head_u.shape)
            g0, g1 = _or_bwd(tn.or_clausal, cl_u[:, 0], cl_u[:, 1], dhead)
            dcl = np.stack([g0, g1], axis=1)
            nu = len(self.u_tids)
            flat = _or_reduce_bwd(
                tn.or_exists, conj[self.u_tids].reshape(nu, 2, n, n * n), dcl
            )
            dconj[self.u_tids] = flat.reshape(nu, 2, n, n, n)

        m = mixed.reshape(T, 2, 2, n, n, n)
        da, db = _and_bwd(tn.and_literal, m[:, :, 0], m[:, :, 1], dconj)
        dmixed = np.empty_like(m)
        dmixed[:, :, 0] = da
        dmixed[:, :, 1] = db
        dmixed = dmixed.reshape(Sn, n, n, n)

        # undo the pattern broadcasts: reduce over the axes each pattern ignored
        s_xy = dmixed.sum(axis=3)
        s_xz = dmixed.sum(axis=2)
        s_yz = dmixed.sum(axis=1)
        dw2 = np.zeros((9, Sn, n, n))
        diag = np.arange(n)
        dw2[0][:, diag, diag] = s_xy.sum(axis=2)
        dw2[1] = s_xy
        dw2[2] = s_xz
        dw2[3] = s_xy.transpose(0, 2, 1)
        dw2[4][:, diag, diag] = s_xy.sum(axis=1)
        dw2[5] = s_yz
        dw2[6] = s_xz.transpose(0, 2, 1)
        dw2[7] = s_yz.transpose(0, 2, 1)
        dw2[8][:, diag, diag] = s_yz.sum(axis=1)
        dw1 = np.stack(
            [s_xy.sum(axis=2), s_xy.sum(axis=1), s_yz.sum(axis=1)], axis=0
        )

        p2 = val_prev[self.pos2]
        p1 = val_prev[self.pos1]
        dw2_flat = dw2.reshape(9 * Sn, n * n)
        dw1_flat = dw1.reshape(3 * Sn, n)
        ds2 = dw2_flat @ p2.T
        ds1 = dw1_flat @ p1.T
        if self.n2:
            dval_prev[self.pos2.ravel()] += (s2.T @ dw2_flat).ravel()
        if self.n1:
            dval_prev[self.pos1.ravel()] += (s1.T @ dw1_flat).ravel()
        return dval_prev, ds2, ds1

    def loss_and_grad(
        self,
        store: WeightStore,
        ev0: np.ndarray,
        pos_sel: np.ndarray,
        neg_sel: np.ndarray,
        tnorms: TNormConfig = TNormConfig(),
        n_steps: int = 25,
    ):
        logits = store.arrays[0]
        s_flat = self.softmax_weights(store)
        s2, s1 = self._slot_mats(s_flat)
        val = ev0.astype(np.float64, copy=True)
        vals = [val]
        for _ in range(n_steps):
            new_val, _aux = self._step_forward(val, s2, s1, tnorms)
            if tnorms.or_step == "max" and np.array_equal(new_val, val):
                break
            vals.append(new_val)
            val = new_val

        loss, dval = loss_and_seed(val, pos_sel, neg_sel)
        ds2_total = np.zeros((9 * self.Sn, self.n2))
        ds1_total = np.zeros((3 * self.Sn, self.n1))
        for i in range(len(vals) - 1, 0, -1):
            dval, ds2, ds1 = self._step_backward(vals[i - 1], dval, s2, s1, tnorms)
            ds2_total += ds2
            ds1_total += ds1

        ds_flat = np.zeros((self.Sn, self.C))
        if self.n2:
            ds_flat[:, self.cols2.ravel()] = (
                ds2_total.reshape(9, self.Sn, self.n2).transpose(1, 0, 2).reshape(self.Sn, -1)
            )
        if self.n1:
            ds_flat[:, self.cols1.ravel()] = (
                ds1_total.reshape(3, self.Sn, self.n1).transpose(1, 0, 2).reshape(self.Sn, -1)
            )
        s = s_flat.reshape(logits.shape)
        dlogits = _softmax_bwd(s, ds_flat.reshape(logits.shape))
        return loss, [dlogits], val


def loss_and_seed(val: np.ndarray, pos_sel: np.ndarray, neg_sel: np.ndarray):
    """Balanced cross-entropy over selected examples plus its valuation gradient.

    Each half is averaged over its own selection and weighted 1/2; an empty
    selection contributes zero loss and zero gradient.  Values are clamped to
    [eps, 1-eps] inside the loss only.
    """
    loss = 0.0
    dval = np.zeros_like(val)
    if len(pos_sel):
        v = val[pos_sel]
        vc = np.clip(v, LOSS_EPS, 1.0 - LOSS_EPS)
        loss += 0.5 * float(np.mean(-np.log(vc)))
        inside = (v >= LOSS_EPS) & (v <= 1.0 - LOSS_EPS)
        np.add.at(dval, pos_sel, np.where(inside, -0.5 / (len(pos_sel) * vc), 0.0))
    if len(neg_sel):
        v = val[neg_sel]
        vc = np.clip(v, LOSS_EPS, 1.0 - LOSS_EPS)
        loss += 0.5 * float(np.mean(-np.log(1.0 - vc)))
        inside = (v >= LOSS_EPS) & (v <= 1.0 - LOSS_EPS)
        np.add.at(dval, neg_sel, np.where(inside, 0.5 / (len(neg_sel) * (1.0 - vc)), 0.0))
    return loss, dval


# ---------------------------------------------------------------------------
# clause-level kernels (per_clause, per_template)


class ClauseKernel:
    """Baseline weight assignments over whole clause candidates.

    per_clause: one softmax over clause candidates per clause slot.
    per_template: one softmax over ordered clause-candidate pairs per template.
    Computed via the materialized gather table; intended for small languages.
    """

    def __init__(self, index: InferenceIndex, mode: str, prune: PruneConfig = PruneConfig()):
        if mode not in ("per_clause", "per_template"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self.index = index
        self.templates = index.templates
        self.prune = prune
        self.n = index.language.n_constants
        self._by_arity: dict[int, tuple[np.ndarray, np.ndarray, tuple]] = {}
        for arity in sorted({t.head_arity for t in self.templates}):
            cands = enumerate_clause_candidates(
                index.candidates, Template("_head", arity), prune
            )
            c1 = np.array([c.literal_ids[0] for c in cands])
            c2 = np.array([c.literal_ids[1] for c in cands])
            self._by_arity[arity] = (c1, c2, cands)

    def clause_candidates(self, arity: int):
        return self._by_arity[arity][2]

    @property
    def weight_shapes(self) -> list[tuple[int, ...]]:
        shapes = []
        for t in self.templates:
            d = len(self._by_arity[t.head_arity][2])
            shapes.append((2, d) if self.mode == "per_clause" else (d, d))
        return shapes

    def _clause_values(self, val: np.ndarray, arity: int, tn: TNormConfig) -> np.ndarray:
        """Fuzzy value of every clause candidate at every head grounding."""
        c1, c2, _ = self._by_arity[arity]
        table = self.index.table(arity)
        gathered = val[table]  # (H, B, C)
        conj = t_and(tn.and_literal, gathered[:, :, c1], gathered[:, :, c2])
        return or_reduce(tn.or_exists, conj.transpose(0, 2, 1))  # (H, D)

    def _softmaxes(self, store: WeightStore) -> list[np.ndarray]:
        if self.mode == "per_clause":
            return [softmax(w, axis=-1) for w in store.arrays]
        return [softmax(w.ravel()).reshape(w.shape) for w in store.arrays]

    def infer(
        self,
        store: WeightStore,
        ev0: np.ndarray,
        tnorms: TNormConfig = TNormConfig(),
        n_steps: int = 25,
        record: bool = False,
    ):
        val = ev0.astype(np.float64, copy=True)
        vals = [val]
        sms = self._softmaxes(store)
        for _ in range(n_steps):
            new_val = self._step(val, sms, tnorms)
            if tnorms.or_step == "max" and np.array_equal(new_val, val):
                break
            vals.append(new_val)
            val = new_val
        if record:
            return val, vals
        return val

    def _pair_head(self, hv: np.ndarray, sm: np.ndarray, tn: TNormConfig) -> np.ndarray:
        """Weighted average over clause pairs, chunked over head groundings."""
        h, d = hv.shape
        head = np.empty(h)
        chunk = max(1, 2_000_000 // max(1, d * d))
        for lo in range(0, h, chunk):
            part = hv[lo : lo + chunk]
            pair = t_or(tn.or_clausal, part[:, :, None], part[:, None, :])
            head[lo : lo + chunk] = np.einsum("hij,ij->h", pair, sm)
        return head

    def _step(self, val, sms, tn: TNormConfig):
        cv = {a: self._clause_values(val, a, tn) for a in self._by_arity}
        new_val = val.copy()
        for t, sm in zip(self.templates, sms):
            hv = cv[t.head_arity]
            if self.mode == "per_clause":
                s0, s1 = hv @ sm[0], hv @ sm[1]
                head = t_or(tn.or_clausal, s0, s1)
            else:
                head = self._pair_head(hv, sm, tn)
            lo, hi = self.index.head_block(t)
            new_val[lo:hi] = t_or(tn.or_step, val[lo:hi], head)
        return new_val

    def loss_and_grad(
        self,
        store: WeightStore,
        ev0: np.ndarray,
        pos_sel: np.ndarray,
        neg_sel: np.ndarray,
        tnorms: TNormConfig = TNormConfig(),
        n_steps: int = 25,
    ):
        sms = self._softmaxes(store)
        val = ev0.astype(np.float64, copy=True)
        vals = [val]
        for _ in range(n_steps):
            new_val = self._step(val, sms, tnorms)
            if tnorms.or_step == "max" and np.array_equal(new_val, val):
                break
            vals.append(new_val)
            val = new_val
        loss, dval = loss_and_seed(val, pos_sel, neg_sel)
        dsm = [np.zeros_like(w) for w in store.arrays]
        for i in range(len(vals) - 1, 0, -1):
            dval = self._step_backward(vals[i - 1], dval, sms, dsm, tnorms)
        grads = []
        for w, sm, g in zip(store.arrays, sms, dsm):
            if self.mode == "per_clause":
                grads.append(_softmax_bwd(sm, g, axis=-1))
            else:
                flat = _softmax_bwd(sm.ravel(), g.ravel())
                grads.append(flat.reshape(w.shape))
        return loss, grads, val

    def _step_backward(self, val_prev, dval, sms, dsm, tn: TNormConfig):
        cv = {a: self._clause_values(val_prev, a, tn) for a in self._by_arity}
        dcv = {a: np.zeros_like(v) for a, v in cv.items()}
        dval_prev = dval.copy()
        for t, sm, g_out in zip(self.templates, sms, dsm):
            hv = cv[t.head_arity]
            lo, hi = self.index.head_block(t)
            if self.mode == "per_clause":
                s0, s1 = hv @ sm[0], hv @ sm[1]
                head = t_or(tn.or_clausal, s0, s1)
                ga, gb = _or_bwd(tn.or_step, val_prev[lo:hi], head, dval[lo:hi])
                dval_prev[lo:hi] = ga
                g0, g1 = _or_bwd(tn.or_clausal, s0, s1, gb)
                g_out[0] += g0 @ hv
                g_out[1] += g1 @ hv
                dcv[t.head_arity] += np.outer(g0, sm[0]) + np.outer(g1, sm[1])
            else:
                head = self._pair_head(hv, sm, tn)
                ga, gb = _or_bwd(tn.or_step, val_prev[lo:hi], head, dval[lo:hi])
                dval_prev[lo:hi] = ga
                h, d = hv.shape
                chunk = max(1, 2_000_000 // max(1, d * d))
                for c0 in range(0, h, chunk):
                    part = hv[c0 : c0 + chunk]
                    gpart = gb[c0 : c0 + chunk]
                    pair = t_or(tn.or_clausal, part[:, :, None], part[:, None, :])
                    g_out += np.einsum("hij,h->ij", pair, gpart)
                    dpair = gpart[:, None, None] * sm[None, :, :]
                    gi, gj = _or_bwd(tn.or_clausal, part[:, :, None], part[:, None, :], dpair)
                    dcv[t.head_arity][c0 : c0 + chunk] += gi.sum(axis=2) + gj.sum(axis=1)
        for arity, g_hv in dcv.items():
            c1, c2, _ = self._by_arity[arity]
            table = self.index.table(arity)
            gathered = val_prev[table]
            v1, v2 = gathered[:, :, c1], gathered[:, :, c2]
            conj = t_and(tn.and_literal, v1, v2).transpose(0, 2, 1)  # (H, D, B)
            dconj = _or_reduce_bwd(tn.or_exists, conj, g_hv).transpose(0, 2, 1)
            g1, g2 = _and_bwd(tn.and_literal, v1, v2, dconj)
            dgathered = np.zeros(gathered.shape)
            np.add.at(dgathered, (slice(None), slice(None), c1), g1)
            np.add.at(dgathered, (slice(None), slice(None), c2), g2)
            np.add.at(dval_prev, table.ravel(), dgathered.ravel())
        return dval_prev


def make_kernel(index: InferenceIndex, mode: str = "per_literal", prune: PruneConfig = PruneConfig()):
    if mode == "per_literal":
        return LiteralKernel(index)
    return ClauseKernel(index, mode, prune)


def infer(
    ev0: np.ndarray,
    store: WeightStore,
    index: InferenceIndex,
    tnorms: TNormConfig = TNormConfig(),
    n_steps: int = 25,
):
    return make_kernel(index, store.mode).infer(store, ev0, tnorms, n_steps)


def forward_chain_step(
    valuation: np.ndarray,
    store: WeightStore,
    index: InferenceIndex,
    tnorms: TNormConfig = TNormConfig(),
):
    kernel = make_kernel(index, store.mode)
    # a single step must not early-exit, so call the kernel loop with n=1
    return kernel.infer(store, valuation, tnorms, n_steps=1)


def mixed_literal_valuation(
    valuation: np.ndarray, logits: np.ndarray, table: np.ndarray
) -> np.ndarray:
    """Softmax-weighted literal mixture for one slot: (H, B) grid.

    Reference formulation straight off the gather table; the kernel's
    factored mixing must agree with this to float reassociation error.
    """
    return valuation[table] @ softmax(logits)


# ---------------------------------------------------------------------------
# program encoding


def encode_program(
    clauses: Sequence[Clause],
    index: InferenceIndex,
    mode: str = "per_literal",
    gap: float = ONE_HOT_GAP,
    prune: PruneConfig = PruneConfig(),
) -> WeightStore:
    """One-hot weights realizing a symbolic program.

    Templates with one clause get it in both slots; templates with no clause
    get a self-recursive filler (derives nothing from a zero base).  A logit
    gap of 1000 makes the softmax exactly one-hot in double precision.
    """
    cand_id = {(c.pred, c.args): c.candidate_id for c in index.candidates}
    by_head: dict[str, list[Clause]] = {t.head: [] for t in index.templates}
    for cl in clauses:
        if cl.head.pred not in by_head:
            raise ValueError(f"clause head {cl.head.pred} has no template")
        by_head[cl.head.pred].append(cl)

    def slot_clauses(t: Template) -> list[Clause]:
        got = by_head[t.head]
        if len(got) > 2:
            raise ValueError(f"template {t.head} given {len(got)} clauses")
        if not got:
            head = t.head_atom()
            selfloop = Atom(t.head, head.args)
            got = [Clause(head, (selfloop, selfloop))]
        return [got[0], got[-1]]

    if mode == "per_literal":
        T, C = len(index.templates), len(index.candidates)
        logits = np.zeros((T, 2, 2, C))
        for ti, t in enumerate(index.templates):
            for si, cl in enumerate(slot_clauses(t)):
                for li, lit in enumerate(cl.body):
                    logits[ti, si, li, cand_id[(lit.pred, lit.args)]] = gap
        return WeightStore("per_literal", [logits])

    kernel = ClauseKernel(index, mode, prune)
    arrays = []
    for t in index.templates:
        cands = kernel.clause_candidates(t.head_arity)
        lookup = {c.literal_ids: c.candidate_id for c in cands}
        ids = []
        for cl in slot_clauses(t):
            key = (
                cand_id[(cl.body[0].pred, cl.body[0].args)],
                cand_id[(cl.body[1].pred, cl.body[1].args)],
            )
            if key not in lookup and prune.unordered_bodies:
                key = (key[1], key[0])
            if key not in lookup:
                raise ValueError(f"clause {cl} pruned from candidate space")
            ids.append(lookup[key])
        d = len(cands)
        if mode == "per_clause":
            w = np.zeros((2, d))
            w[0, ids[0]] = gap
            w[1, ids[1]] = gap
        else:
            w = np.zeros((d, d))
            w[ids[0], ids[1]] = gap
        arrays.append(w)
    return WeightStore(mode, arrays)
