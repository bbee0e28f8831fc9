"""Stochastic-block-model datasets with class-correlated Gaussian features.

Node features are the node's block mean plus isotropic noise, so a plain
linear probe on raw features does moderately well while neighborhood
averaging (blocks are densely connected inside) can do much better. This is
the desk-scale stand-in benchmark used by the acceptance checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import MULTICLASS, MULTILABEL, LabeledDataset, Split
from .graph import FeatureMatrix, Graph

__all__ = ["SbmSpec", "generate"]


@dataclass(frozen=True)
class SbmSpec:
    """Block sizes, edge probabilities, and the feature model.

    Block mean vectors are drawn as ``separation`` times standard normals;
    features add unit-scale noise times ``noise``. With ``multilabel`` set,
    each node carries its own block indicator and, with overlap probability
    0.3, the next block's as well.
    """

    block_sizes: tuple[int, ...] = (100, 100, 100)
    p_in: float = 0.10
    p_out: float = 0.01
    feature_dim: int = 16
    separation: float = 0.32
    noise: float = 1.0
    multilabel: bool = False
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError("need at least 2 blocks with at least 1 node each")
        if not 0.0 <= self.p_out <= self.p_in <= 1.0:
            raise ValueError("probabilities must satisfy 0 <= p_out <= p_in <= 1")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be positive")
        if self.separation < 0 or self.noise < 0:
            raise ValueError("separation and noise must be nonnegative")
        object.__setattr__(self, "block_sizes", sizes)

    @property
    def num_nodes(self) -> int:
        return sum(self.block_sizes)

    @property
    def num_blocks(self) -> int:
        return len(self.block_sizes)


_OVERLAP_PROB = 0.3


def generate(spec: SbmSpec) -> LabeledDataset:
    """Sample a dataset from the spec; fully determined by ``spec.seed``."""
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, 101)))
    n = spec.num_nodes
    block = np.repeat(np.arange(spec.num_blocks), spec.block_sizes)

    iu, ju = np.triu_indices(n, k=1)
    probs = np.where(block[iu] == block[ju], spec.p_in, spec.p_out)
    keep = rng.random(iu.size) < probs
    graph = Graph.from_pairs(n, np.stack([iu[keep], ju[keep]], axis=1))

    means = spec.separation * rng.standard_normal((spec.num_blocks, spec.feature_dim))
    features = FeatureMatrix(
        means[block] + spec.noise * rng.standard_normal((n, spec.feature_dim))
    )

    if spec.multilabel:
        k = spec.num_blocks
        labels = np.zeros((n, k), dtype=np.int64)
        labels[np.arange(n), block] = 1
        overlap = rng.random(n) < _OVERLAP_PROB
        labels[np.arange(n)[overlap], (block[overlap] + 1) % k] = 1
        kind = MULTILABEL
    else:
        labels = block.astype(np.int64)
        kind = MULTICLASS

    train_parts, val_parts, test_parts = [], [], []
    start = 0
    for size in spec.block_sizes:
        ids = rng.permutation(np.arange(start, start + size))
        n_train = int(round(0.1 * size))
        n_val = int(round(0.1 * size))
        train_parts.append(np.sort(ids[:n_train]))
        val_parts.append(np.sort(ids[n_train : n_train + n_val]))
        test_parts.append(np.sort(ids[n_train + n_val :]))
        start += size
    split = Split(
        np.concatenate(train_parts), np.concatenate(val_parts), np.concatenate(test_parts)
    )

    return LabeledDataset(graph, features, labels, kind, spec.num_blocks, split)
