"""Neighborhood subgraph extraction and minibatch iteration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import FeatureMatrix, Graph

__all__ = [
    "Subgraph",
    "FanoutConfig",
    "l_hop_subgraph",
    "sample_fanout_subgraph",
    "minibatches",
]


@dataclass(frozen=True)
class Subgraph:
    """Node-induced neighborhood of one center node, relabeled to local ids.

    ``id_map[local] = global``; local ids follow ascending global order.
    """

    center: int
    local_graph: Graph
    local_features: FeatureMatrix
    id_map: np.ndarray
    center_local: int

    def __post_init__(self):
        id_map = np.ascontiguousarray(self.id_map, dtype=np.int64)
        if id_map.ndim != 1 or id_map.size != self.local_graph.num_nodes:
            raise ValueError("id_map must list one global id per local node")
        if id_map.size > 1 and np.any(np.diff(id_map) <= 0):
            raise ValueError("id_map must be strictly increasing (injective)")
        if not 0 <= self.center_local < id_map.size:
            raise ValueError("center_local out of range")
        if id_map[self.center_local] != self.center:
            raise ValueError("id_map[center_local] must equal center")
        if self.local_features.num_nodes != self.local_graph.num_nodes:
            raise ValueError("local features must cover exactly the local nodes")
        id_map.setflags(write=False)
        object.__setattr__(self, "id_map", id_map)

    @property
    def num_nodes(self) -> int:
        return self.local_graph.num_nodes


@dataclass(frozen=True)
class FanoutConfig:
    """Per-level neighbor sample sizes; one entry per encoder layer."""

    fanouts: tuple[int, ...]

    def __post_init__(self):
        fanouts = tuple(int(f) for f in self.fanouts)
        if not fanouts or any(f < 1 for f in fanouts):
            raise ValueError("fanouts must be a nonempty list of counts >= 1")
        object.__setattr__(self, "fanouts", fanouts)

    @property
    def max_nodes(self) -> int:
        """Closed-form bound 1 + r1 + r1*r2 + ... on the sampled node count."""
        total, prod = 1, 1
        for r in self.fanouts:
            prod *= r
            total += prod
        return total


def _members_of_sorted(values: np.ndarray, universe: np.ndarray) -> np.ndarray:
    """Boolean mask of which ``values`` occur in the sorted array ``universe``."""
    mask = np.zeros(values.size, dtype=bool)
    if universe.size:
        pos = np.searchsorted(universe, values)
        inside = pos < universe.size
        mask[inside] = universe[pos[inside]] == values[inside]
    return mask


def _induced_subgraph(g: Graph, feats: FeatureMatrix, nodes: np.ndarray, center: int) -> Subgraph:
    """Subgraph over the sorted global id array ``nodes`` with all induced edges."""
    pairs = []
    for local, glob in enumerate(nodes):
        nb = g.neighbors(int(glob))
        nb = nb[nb > glob]
        if nb.size == 0:
            continue
        keep = _members_of_sorted(nb, nodes)
        for other in nb[keep]:
            pairs.append((local, int(np.searchsorted(nodes, other))))
    local_graph = Graph.from_pairs(nodes.size, np.asarray(pairs, dtype=np.int64).reshape(-1, 2))
    local_features = FeatureMatrix(feats.values[nodes])
    center_local = int(np.searchsorted(nodes, center))
    return Subgraph(int(center), local_graph, local_features, nodes, center_local)


def l_hop_subgraph(g: Graph, feats: FeatureMatrix, u: int, hops: int) -> Subgraph:
    """Exact BFS ball of radius ``hops`` around ``u`` with all induced edges."""
    if not 0 <= u < g.num_nodes:
        raise IndexError(f"node id {u} out of range [0, {g.num_nodes})")
    if hops < 0:
        raise ValueError("hops must be nonnegative")
    visited = np.zeros(g.num_nodes, dtype=bool)
    visited[u] = True
    frontier = np.array([u], dtype=np.int64)
    for _ in range(hops):
        if frontier.size == 0:
            break
        reached = np.unique(np.concatenate([g.neighbors(int(w)) for w in frontier]))
        frontier = reached[~visited[reached]]
        visited[frontier] = True
    nodes = np.flatnonzero(visited).astype(np.int64)
    return _induced_subgraph(g, feats, nodes, u)


def sample_fanout_subgraph(
    g: Graph,
    feats: FeatureMatrix,
    u: int,
    cfg: FanoutConfig,
    rng: np.random.Generator,
) -> Subgraph:
    """Level-by-level fixed-fanout expansion around ``u``.

    Each frontier node contributes min(degree, fanout) distinct neighbors drawn
    uniformly without replacement; all edges induced among the sampled nodes
    are kept. Node count never exceeds ``cfg.max_nodes``.
    """
    if not 0 <= u < g.num_nodes:
        raise IndexError(f"node id {u} out of range [0, {g.num_nodes})")
    sampled = {int(u)}
    frontier = [int(u)]
    for r in cfg.fanouts:
        level: set[int] = set()
        for w in frontier:
            nb = g.neighbors(w)
            if nb.size > r:
                nb = rng.choice(nb, size=r, replace=False)
            level.update(int(x) for x in nb)
        sampled.update(level)
        frontier = sorted(level)
    nodes = np.asarray(sorted(sampled), dtype=np.int64)
    return _induced_subgraph(g, feats, nodes, u)


def minibatches(nodes, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Shuffle ``nodes`` and split into consecutive batches of ``batch_size``.

    A trailing remainder of a single node is dropped (the pairwise loss is
    undefined for one node); a remainder of two or more is kept as a smaller
    final batch.
    """
    if batch_size < 2:
        raise ValueError("batch size must be at least 2")
    nodes = np.asarray(nodes, dtype=np.int64).ravel()
    perm = rng.permutation(nodes)
    batches = [perm[i : i + batch_size] for i in range(0, perm.size, batch_size)]
    if batches and batches[-1].size < 2:
        batches.pop()
    return batches
