"""Cosine similarity and the temperature-scaled two-view contrastive loss.

For a batch of M nodes with embeddings h_{u,1} and h_{u,2} from two perturbed
views, the per-node, per-direction loss is

    l_{i,j}(u) = -log  exp(s(h_{u,i}, h_{u,j}) / t)
                       / ( sum_{v != u} exp(s(h_{u,i}, h_{v,i}) / t)
                         + sum_{v}      exp(s(h_{u,i}, h_{v,j}) / t) )

with s cosine similarity and t the temperature. The same-view sum excludes
v = u; the cross-view sum runs over all v, so the positive term itself appears
among the 2M - 1 denominator terms and the loss is nonnegative. The batch loss
averages l_{1,2}(u) + l_{2,1}(u) over the batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Node, Tape

__all__ = [
    "LossConfig",
    "BatchEmbeddings",
    "cosine_similarity",
    "pair_loss",
    "batch_loss",
    "loss_graph",
    "mi_lower_bound",
]


@dataclass(frozen=True)
class LossConfig:
    """Temperature for similarity scaling and the zero-norm guard."""

    temperature: float = 0.5
    epsilon: float = 1e-12

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class BatchEmbeddings:
    """Two aligned (M, P') view-embedding matrices; row i of both is the same node."""

    view1: np.ndarray
    view2: np.ndarray
    node_ids: np.ndarray

    def __post_init__(self):
        v1 = np.ascontiguousarray(self.view1, dtype=np.float64)
        v2 = np.ascontiguousarray(self.view2, dtype=np.float64)
        ids = np.ascontiguousarray(self.node_ids, dtype=np.int64)
        if v1.ndim != 2 or v1.shape != v2.shape:
            raise ValueError("views must be matrices of identical shape")
        if ids.shape != (v1.shape[0],):
            raise ValueError("node_ids must list one id per batch row")
        object.__setattr__(self, "view1", v1)
        object.__setattr__(self, "view2", v2)
        object.__setattr__(self, "node_ids", ids)

    @property
    def size(self) -> int:
        return self.view1.shape[0]

    def view(self, i: int) -> np.ndarray:
        if i == 1:
            return self.view1
        if i == 2:
            return self.view2
        raise ValueError("view index must be 1 or 2")


def _unit_rows(x: np.ndarray, eps: float) -> np.ndarray:
    norms = np.sqrt(np.sum(x * x, axis=1))
    return x / np.maximum(norms, eps)[:, None]


def cosine_similarity(a, b, eps: float = 1e-12) -> float:
    """a . b / (max(|a|, eps) * max(|b|, eps)); a zero vector has similarity 0."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    na = max(float(np.linalg.norm(a)), eps)
    nb = max(float(np.linalg.norm(b)), eps)
    return float(a @ b) / (na * nb)


def pair_loss(batch: BatchEmbeddings, u_index: int, i: int, j: int, cfg: LossConfig) -> float:
    """Single-direction loss l_{i,j}(u) for one batch row."""
    if i == j:
        raise ValueError("view indices must differ")
    m = batch.size
    if m < 2:
        raise ValueError("pair loss needs a batch of at least two nodes")
    if not 0 <= u_index < m:
        raise IndexError(f"batch row {u_index} out of range [0, {m})")
    zi = _unit_rows(batch.view(i), cfg.epsilon)
    zj = _unit_rows(batch.view(j), cfg.epsilon)
    inv_t = 1.0 / cfg.temperature
    same = (zi @ zi[u_index]) * inv_t
    cross = (zj @ zi[u_index]) * inv_t
    terms = np.concatenate([np.delete(same, u_index), cross])
    mx = terms.max()
    lse = mx + math.log(float(np.sum(np.exp(terms - mx))))
    return float(lse - cross[u_index])


def loss_graph(tape: Tape, h1: Node, h2: Node, cfg: LossConfig) -> Node:
    """Differentiable batch loss over two (M, P') embedding nodes on ``tape``."""
    if h1.value.shape != h2.value.shape or h1.value.ndim != 2:
        raise ValueError("view embeddings must be matrices of identical shape")
    if h1.value.shape[0] < 2:
        raise ValueError("batch loss needs at least two nodes")
    z1 = ad.row_normalize(h1, cfg.epsilon)
    z2 = ad.row_normalize(h2, cfg.epsilon)
    forward = _direction_losses(z1, z2, cfg.temperature)
    reverse = _direction_losses(z2, z1, cfg.temperature)
    return ad.mean_all(ad.add(forward, reverse))


def _direction_losses(zi: Node, zj: Node, temperature: float) -> Node:
    m = zi.value.shape[0]
    inv_t = 1.0 / temperature
    same = ad.scale(ad.matmul(zi, ad.transpose(zi)), inv_t)
    cross = ad.scale(ad.matmul(zi, ad.transpose(zj)), inv_t)
    mask = np.zeros((m, m))
    np.fill_diagonal(mask, -np.inf)
    logits = ad.concat_cols(ad.add_constant(same, mask), cross)
    return ad.sub(ad.logsumexp_rows(logits), ad.diag_part(cross))


def batch_loss(batch: BatchEmbeddings, cfg: LossConfig) -> float:
    """Mean over the batch of l_{1,2}(u) + l_{2,1}(u)."""
    tape = Tape()
    h1 = tape.constant(batch.view1)
    h2 = tape.constant(batch.view2)
    return float(loss_graph(tape, h1, h2, cfg).value)


def mi_lower_bound(loss_one_direction: float, k: int) -> float:
    """Reported diagnostic log(k) - loss for k negative samples per positive."""
    if k < 1:
        raise ValueError("negative-sample count must be at least 1")
    return math.log(k) - float(loss_one_direction)
