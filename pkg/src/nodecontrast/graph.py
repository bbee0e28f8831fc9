"""Immutable undirected sparse graphs and self-loop mean normalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = ["Graph", "FeatureMatrix", "NormalizedAdjacency", "normalize_adjacency"]


@dataclass(frozen=True)
class Graph:
    """Undirected graph over nodes ``0..num_nodes-1`` in CSR adjacency form.

    Every undirected edge is stored in both directions. Neighbor lists are
    sorted ascending, duplicate-free, and never contain the node itself.
    """

    num_nodes: int
    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        n = self.num_nodes
        if n < 0:
            raise ValueError("num_nodes must be nonnegative")
        if indptr.shape != (n + 1,):
            raise ValueError("indptr must have length num_nodes + 1")
        if indptr[0] != 0 or indptr[-1] != indices.size or np.any(np.diff(indptr) < 0):
            raise ValueError("indptr must be nondecreasing offsets starting at 0")
        rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
        if indices.size:
            if indices.min() < 0 or indices.max() >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(rows == indices):
                raise ValueError("self-loops are not allowed")
        if indices.size > 1:
            same_row = rows[1:] == rows[:-1]
            if np.any(same_row & (np.diff(indices) <= 0)):
                raise ValueError("neighbor lists must be sorted and duplicate-free")
        forward = rows * n + indices
        reverse = indices * n + rows
        if not np.array_equal(np.sort(forward), np.sort(reverse)):
            raise ValueError("adjacency must be symmetric")
        indptr.setflags(write=False)
        indices.setflags(write=False)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)

    @classmethod
    def from_pairs(cls, num_nodes: int, pairs) -> "Graph":
        """Build a graph from an iterable of undirected (u, v) pairs.

        Pairs may appear in either orientation and more than once; they are
        canonicalized and deduplicated. Self-pairs are rejected.
        """
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if pairs.size == 0:
            return cls(num_nodes, np.zeros(num_nodes + 1, np.int64), np.zeros(0, np.int64))
        if pairs.min() < 0 or pairs.max() >= num_nodes:
            raise ValueError("edge endpoint out of range")
        if np.any(pairs[:, 0] == pairs[:, 1]):
            raise ValueError("self-loops are not allowed")
        lo = pairs.min(axis=1)
        hi = pairs.max(axis=1)
        und = np.unique(np.stack([lo, hi], axis=1), axis=0)
        src = np.concatenate([und[:, 0], und[:, 1]])
        dst = np.concatenate([und[:, 1], und[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(num_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=num_nodes), out=indptr[1:])
        return cls(num_nodes, indptr, dst)

    def neighbors(self, u: int) -> np.ndarray:
        """Sorted neighbor ids of ``u`` (excluding ``u`` itself)."""
        if not 0 <= u < self.num_nodes:
            raise IndexError(f"node id {u} out of range [0, {self.num_nodes})")
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def num_undirected_edges(self) -> int:
        return self.indices.size // 2

    def undirected_pairs(self) -> np.ndarray:
        """All undirected edges as a (E, 2) array with u < v, lexicographically sorted."""
        rows = np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.degrees)
        mask = rows < self.indices
        return np.stack([rows[mask], self.indices[mask]], axis=1)


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense node-by-feature matrix aligned with a graph's node ids."""

    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("feature matrix must be 2-D")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature matrix must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def num_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class NormalizedAdjacency:
    """Row-stochastic propagation matrix: adjacency plus self-loops, rows scaled by 1/(deg+1)."""

    matrix: sp.csr_matrix

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix)
        if m.shape[0] != m.shape[1]:
            raise ValueError("normalized adjacency must be square")
        if m.shape[0] > 0:
            row_sums = np.asarray(m.sum(axis=1)).ravel()
            if np.max(np.abs(row_sums - 1.0)) > 1e-12:
                raise ValueError("every row must sum to 1 within 1e-12")
            if m.nnz and m.data.min() < 0:
                raise ValueError("entries must be nonnegative")
        object.__setattr__(self, "matrix", m)

    @property
    def num_nodes(self) -> int:
        return self.matrix.shape[0]


def normalize_adjacency(g: Graph) -> NormalizedAdjacency:
    """Mean-normalized adjacency with self-loops: entry (u,v) = 1/(deg(u)+1) for v in {u} ∪ N(u)."""
    n = g.num_nodes
    deg = g.degrees
    inv = 1.0 / (deg + 1.0)
    node_ids = np.arange(n, dtype=np.int64)
    rows = np.concatenate([np.repeat(node_ids, deg), node_ids])
    cols = np.concatenate([g.indices, node_ids])
    vals = np.concatenate([np.repeat(inv, deg), inv])
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return NormalizedAdjacency(matrix)
