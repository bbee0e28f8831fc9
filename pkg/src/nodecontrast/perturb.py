"""Stochastic view generation: random edge dropping and feature dropout."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import FeatureMatrix, Graph
from .sampling import Subgraph

__all__ = ["PerturbConfig", "drop_edges", "mask_features", "make_views"]


@dataclass(frozen=True)
class PerturbConfig:
    """Bernoulli drop probabilities for edges and feature coordinates.

    With ``scale_features`` set, surviving feature entries are rescaled by
    1/(1-p_feat) so expected magnitudes match the unperturbed input.
    """

    p_edge: float = 0.15
    p_feat: float = 0.6
    scale_features: bool = True

    def __post_init__(self):
        for name in ("p_edge", "p_feat"):
            p = float(getattr(self, name))
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
            object.__setattr__(self, name, p)
        if self.scale_features and self.p_feat >= 1.0:
            raise ValueError("scale_features requires p_feat < 1")


def drop_edges(g: Graph, p_edge: float, rng: np.random.Generator) -> Graph:
    """Remove each undirected edge independently with probability ``p_edge``.

    One coin per undirected edge; both directions go together, so the result
    is again a valid undirected graph over the same node set.
    """
    if not 0.0 <= p_edge <= 1.0:
        raise ValueError("p_edge must lie in [0, 1]")
    pairs = g.undirected_pairs()
    keep = rng.random(pairs.shape[0]) >= p_edge
    return Graph.from_pairs(g.num_nodes, pairs[keep])


def mask_features(
    x: FeatureMatrix, p_feat: float, scale: bool, rng: np.random.Generator
) -> FeatureMatrix:
    """Zero each (node, coordinate) entry independently with probability ``p_feat``."""
    if not 0.0 <= p_feat <= 1.0:
        raise ValueError("p_feat must lie in [0, 1]")
    if scale and p_feat >= 1.0:
        raise ValueError("rescaling by 1/(1-p_feat) is undefined for p_feat = 1")
    keep = rng.random(x.values.shape) >= p_feat
    out = x.values * keep
    if scale:
        out = out / (1.0 - p_feat)
    return FeatureMatrix(out)


def make_views(
    sub: Subgraph, cfg: PerturbConfig, rng: np.random.Generator
) -> tuple[Subgraph, Subgraph]:
    """Two independently perturbed copies of a subgraph (fresh coins per view).

    Centers and id maps are preserved; only edges and feature entries change.
    """
    views = []
    for _ in range(2):
        g = drop_edges(sub.local_graph, cfg.p_edge, rng)
        x = mask_features(sub.local_features, cfg.p_feat, cfg.scale_features, rng)
        views.append(Subgraph(sub.center, g, x, sub.id_map, sub.center_local))
    return views[0], views[1]
