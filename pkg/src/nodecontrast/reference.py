"""Slow, independent reference implementations used for cross-checking.

Everything here works on plain Python lists/sets with scalar loops and is
deliberately kept free of the vectorized code paths it is used to verify.
"""

from __future__ import annotations

import math

__all__ = [
    "bfs_ball",
    "brute_cosine",
    "brute_pair_loss",
    "brute_batch_loss",
    "dense_normalized_adjacency",
    "dense_matmul",
    "per_node_mean_pool",
    "dense_encode",
]


def bfs_ball(num_nodes: int, pairs, center: int, hops: int) -> set[int]:
    """Node set within graph distance ``hops`` of ``center``; plain set BFS."""
    adj: dict[int, set[int]] = {u: set() for u in range(num_nodes)}
    for u, v in pairs:
        adj[int(u)].add(int(v))
        adj[int(v)].add(int(u))
    seen = {int(center)}
    frontier = {int(center)}
    for _ in range(hops):
        nxt = set()
        for w in frontier:
            nxt |= adj[w]
        frontier = nxt - seen
        seen |= frontier
    return seen


def brute_cosine(a, b, eps: float = 1e-12) -> float:
    dot = 0.0
    na = 0.0
    nb = 0.0
    for x, y in zip(a, b, strict=True):
        dot += float(x) * float(y)
        na += float(x) * float(x)
        nb += float(y) * float(y)
    return dot / (max(math.sqrt(na), eps) * max(math.sqrt(nb), eps))


def brute_pair_loss(view_i, view_j, u: int, temperature: float, eps: float = 1e-12) -> float:
    """Scalar-loop l_{i,j}(u): same-view terms skip v = u, cross-view terms keep all v."""
    m = len(view_i)
    numerator = math.exp(brute_cosine(view_i[u], view_j[u], eps) / temperature)
    denominator = 0.0
    for v in range(m):
        if v != u:
            denominator += math.exp(brute_cosine(view_i[u], view_i[v], eps) / temperature)
    for v in range(m):
        denominator += math.exp(brute_cosine(view_i[u], view_j[v], eps) / temperature)
    return -math.log(numerator / denominator)


def brute_batch_loss(view1, view2, temperature: float, eps: float = 1e-12) -> float:
    m = len(view1)
    total = 0.0
    for u in range(m):
        total += brute_pair_loss(view1, view2, u, temperature, eps)
        total += brute_pair_loss(view2, view1, u, temperature, eps)
    return total / m


def dense_normalized_adjacency(num_nodes: int, pairs) -> list[list[float]]:
    """Dense self-loop mean normalization built entry by entry."""
    a = [[0.0] * num_nodes for _ in range(num_nodes)]
    for u, v in pairs:
        a[int(u)][int(v)] = 1.0
        a[int(v)][int(u)] = 1.0
    for u in range(num_nodes):
        a[u][u] = 1.0
        row_sum = sum(a[u])
        for v in range(num_nodes):
            a[u][v] /= row_sum
    return a


def dense_matmul(a, b) -> list[list[float]]:
    rows, inner, cols = len(a), len(b), len(b[0])
    out = [[0.0] * cols for _ in range(rows)]
    for i in range(rows):
        for k in range(inner):
            aik = a[i][k]
            if aik == 0.0:
                continue
            for j in range(cols):
                out[i][j] += aik * b[k][j]
    return out


def per_node_mean_pool(h, num_nodes: int, pairs, w) -> list[list[float]]:
    """Literal per-node rule: average h over {u} ∪ N(u), then transform by w."""
    neighbors: dict[int, set[int]] = {u: set() for u in range(num_nodes)}
    for u, v in pairs:
        neighbors[int(u)].add(int(v))
        neighbors[int(v)].add(int(u))
    dim = len(h[0])
    out_dim = len(w[0])
    result = []
    for u in range(num_nodes):
        group = [u] + sorted(neighbors[u])
        mean = [sum(h[v][d] for v in group) / len(group) for d in range(dim)]
        result.append([sum(mean[d] * w[d][j] for d in range(dim)) for j in range(out_dim)])
    return result


def _elu_scalar(x: float) -> float:
    return x if x > 0.0 else math.exp(x) - 1.0


def _elu_matrix(m) -> list[list[float]]:
    return [[_elu_scalar(v) for v in row] for row in m]


def _add_matrices(a, b) -> list[list[float]]:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def dense_encode(variant: str, weights, x, num_nodes: int, pairs) -> list[list[float]]:
    """Loop-based composition of the encoder formulas for any variant."""
    a_hat = dense_normalized_adjacency(num_nodes, pairs)
    if variant == "one_layer":
        (w0,) = weights
        return _elu_matrix(dense_matmul(a_hat, dense_matmul(x, w0)))
    if variant == "two_layer":
        w0, w1 = weights
        hidden = _elu_matrix(dense_matmul(a_hat, dense_matmul(x, w0)))
        return dense_matmul(a_hat, dense_matmul(hidden, w1))
    if variant == "three_layer_residual":
        w0a, w0s, w1a, w1s, w2a, w2s = weights
        h1 = _elu_matrix(
            _add_matrices(dense_matmul(a_hat, dense_matmul(x, w0a)), dense_matmul(x, w0s))
        )
        h2 = _elu_matrix(
            _add_matrices(dense_matmul(a_hat, dense_matmul(h1, w1a)), dense_matmul(h1, w1s))
        )
        return _add_matrices(dense_matmul(a_hat, dense_matmul(h2, w2a)), dense_matmul(h2, w2s))
    raise ValueError(f"unknown encoder variant {variant!r}")
