"""Mean-pooling GNN encoders: one-layer, two-layer, and three-layer residual.

All variants propagate with the self-loop-normalized adjacency, use ELU
between layers, carry no bias terms, and share one hidden width equal to the
embedding size.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Node, Tape
from .graph import FeatureMatrix, NormalizedAdjacency

__all__ = [
    "VARIANTS",
    "EncoderParams",
    "EmbeddingMatrix",
    "elu",
    "glorot_init",
    "init_params",
    "mean_pool_layer",
    "encode",
    "encode_on_tape",
]

VARIANTS = ("one_layer", "two_layer", "three_layer_residual")

_WEIGHT_NAMES = {
    "one_layer": ("w0",),
    "two_layer": ("w0", "w1"),
    "three_layer_residual": ("w0_agg", "w0_skip", "w1_agg", "w1_skip", "w2_agg", "w2_skip"),
}

_DEPTH = {"one_layer": 1, "two_layer": 2, "three_layer_residual": 3}


def variant_depth(variant: str) -> int:
    if variant not in _DEPTH:
        raise ValueError(f"unknown encoder variant {variant!r}")
    return _DEPTH[variant]


def weight_names(variant: str) -> tuple[str, ...]:
    if variant not in _WEIGHT_NAMES:
        raise ValueError(f"unknown encoder variant {variant!r}")
    return _WEIGHT_NAMES[variant]


@dataclass(frozen=True)
class EncoderParams:
    """Ordered weight matrices of one encoder variant.

    The first matrix (or aggregate/skip pair) maps input features to the
    embedding width; all later matrices are square in the embedding width.
    """

    variant: str
    weights: tuple[np.ndarray, ...]

    def __post_init__(self):
        names = weight_names(self.variant)
        weights = tuple(np.ascontiguousarray(w, dtype=np.float64) for w in self.weights)
        if len(weights) != len(names):
            raise ValueError(f"{self.variant} needs {len(names)} weight matrices, got {len(weights)}")
        if any(w.ndim != 2 for w in weights):
            raise ValueError("weights must be matrices")
        if any(not np.all(np.isfinite(w)) for w in weights):
            raise ValueError("weights must be finite")
        p_in, p_out = weights[0].shape
        for name, w in zip(names, weights):
            expect_rows = p_in if name.startswith("w0") else p_out
            if w.shape != (expect_rows, p_out):
                raise ValueError(f"{name} must have shape ({expect_rows}, {p_out}), got {w.shape}")
        for w in weights:
            w.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def embed_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def depth(self) -> int:
        return variant_depth(self.variant)

    @property
    def names(self) -> tuple[str, ...]:
        return weight_names(self.variant)

    def as_dict(self) -> dict[str, np.ndarray]:
        return dict(zip(self.names, self.weights))

    def with_weights(self, values: dict[str, np.ndarray]) -> "EncoderParams":
        return EncoderParams(self.variant, tuple(values[n] for n in self.names))


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Dense node-by-embedding output of an encoder."""

    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("embedding matrix must be 2-D")
        if not np.all(np.isfinite(values)):
            raise ValueError("embedding matrix must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def num_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def elu(x):
    """ELU with alpha = 1: x for x > 0, exp(x) - 1 otherwise."""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x > 0.0, x, np.expm1(np.minimum(x, 0.0)))
    return float(out) if out.ndim == 0 else out


def glorot_init(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform init on [-a, a] with a = sqrt(6 / (rows + cols))."""
    if rows <= 0 or cols <= 0:
        raise ValueError("matrix dimensions must be positive")
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))


def init_params(
    variant: str, input_dim: int, embed_dim: int, rng: np.random.Generator
) -> EncoderParams:
    """Glorot-initialized parameters, matrices drawn in declared order."""
    weights = []
    for name in weight_names(variant):
        rows = input_dim if name.startswith("w0") else embed_dim
        weights.append(glorot_init(rows, embed_dim, rng))
    return EncoderParams(variant, tuple(weights))


def mean_pool_layer(h: np.ndarray, a_hat: NormalizedAdjacency, w: np.ndarray) -> np.ndarray:
    """One propagation step: row u becomes the w-transformed mean of h over {u} ∪ N(u)."""
    h = np.asarray(h, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if h.ndim != 2 or w.ndim != 2 or h.shape[1] != w.shape[0]:
        raise ValueError(f"shape mismatch: h {h.shape} w {w.shape}")
    if a_hat.num_nodes != h.shape[0]:
        raise ValueError("adjacency and h disagree on node count")
    return a_hat.matrix @ (h @ w)


def encode_on_tape(
    tape: Tape,
    variant: str,
    weights: Sequence[Node],
    x: np.ndarray,
    a_hat: NormalizedAdjacency,
) -> Node:
    """Differentiable encoder forward pass; ``weights`` are tape nodes in declared order."""
    if len(weights) != len(weight_names(variant)):
        raise ValueError(f"{variant} needs {len(weight_names(variant))} weight nodes")
    s = a_hat.matrix
    xn = tape.constant(x)
    if variant == "one_layer":
        (w0,) = weights
        return ad.elu(ad.spmm(s, ad.matmul(xn, w0)))
    if variant == "two_layer":
        w0, w1 = weights
        hidden = ad.elu(ad.spmm(s, ad.matmul(xn, w0)))
        return ad.spmm(s, ad.matmul(hidden, w1))
    w0a, w0s, w1a, w1s, w2a, w2s = weights
    h1 = ad.elu(ad.add(ad.spmm(s, ad.matmul(xn, w0a)), ad.matmul(xn, w0s)))
    h2 = ad.elu(ad.add(ad.spmm(s, ad.matmul(h1, w1a)), ad.matmul(h1, w1s)))
    return ad.add(ad.spmm(s, ad.matmul(h2, w2a)), ad.matmul(h2, w2s))


def encode(params: EncoderParams, x: FeatureMatrix, a_hat: NormalizedAdjacency) -> EmbeddingMatrix:
    """Embed all nodes of a graph; output shape is (N, embed_dim)."""
    if x.dim != params.input_dim:
        raise ValueError(f"feature dim {x.dim} does not match encoder input dim {params.input_dim}")
    if a_hat.num_nodes != x.num_nodes:
        raise ValueError("adjacency and features disagree on node count")
    tape = Tape()
    nodes = [tape.constant(w) for w in params.weights]
    out = encode_on_tape(tape, params.variant, nodes, x.values, a_hat)
    return EmbeddingMatrix(out.value)
