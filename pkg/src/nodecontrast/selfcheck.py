"""Built-in verification: gradient checks per encoder variant and loss oracles."""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import reference
from .autodiff import Tape, fd_gradient_check
from .contrastive import BatchEmbeddings, LossConfig, batch_loss, pair_loss
from .encoder import init_params, variant_depth, weight_names
from .graph import FeatureMatrix, Graph
from .perturb import PerturbConfig
from .sampling import FanoutConfig
from .training import batch_loss_node, batch_view_pairs, seeded_rng

__all__ = ["CheckResult", "pipeline_gradient_error", "run_selfcheck"]


class CheckResult:
    def __init__(self, name: str, passed: bool, detail: str):
        self.name = name
        self.passed = passed
        self.detail = detail

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} ({self.detail})"


def random_connected_graph(n: int, extra_edge_prob: float, rng: np.random.Generator) -> Graph:
    """Random spanning tree plus independent extra edges; always connected."""
    pairs = [(int(rng.integers(0, v)), v) for v in range(1, n)]
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < extra_edge_prob:
                pairs.append((u, v))
    return Graph.from_pairs(n, pairs)


def pipeline_gradient_error(
    variant: str,
    seed: int,
    num_nodes: int = 12,
    feature_dim: int = 5,
    embed_dim: int = 7,
    batch_size: int = 4,
    fanout: int = 3,
    h: float = 1e-5,
) -> float:
    """Finite-difference error of the full perturb+encode+loss pipeline.

    Views are sampled once and frozen; only the encoder weights vary under
    the check, mirroring how masks enter training as constants.
    """
    rng = seeded_rng(seed, 900)
    graph = random_connected_graph(num_nodes, 0.25, rng)
    feats = FeatureMatrix(rng.standard_normal((num_nodes, feature_dim)))
    batch = rng.choice(num_nodes, size=batch_size, replace=False)
    fanouts = FanoutConfig((fanout,) * variant_depth(variant))
    view_pairs = batch_view_pairs(
        graph, feats, batch, fanouts, PerturbConfig(0.15, 0.4, True), seed, epoch=0
    )
    params = init_params(variant, feature_dim, embed_dim, rng)
    loss_cfg = LossConfig(temperature=0.5)

    def build(values: dict[str, np.ndarray]):
        tape = Tape()
        nodes = [tape.parameter(name, values[name]) for name in weight_names(variant)]
        return batch_loss_node(tape, variant, nodes, view_pairs, loss_cfg)

    return fd_gradient_check(build, params.as_dict(), h=h)


def _loss_oracle_errors(seed: int, batch_size: int, temperature: float) -> tuple[float, float]:
    rng = seeded_rng(seed, 901)
    v1 = rng.standard_normal((batch_size, 6))
    v2 = rng.standard_normal((batch_size, 6))
    batch = BatchEmbeddings(v1, v2, np.arange(batch_size))
    cfg = LossConfig(temperature=temperature)
    pair_err = 0.0
    for u in range(batch_size):
        fast = pair_loss(batch, u, 1, 2, cfg)
        slow = reference.brute_pair_loss(v1.tolist(), v2.tolist(), u, temperature)
        pair_err = max(pair_err, abs(fast - slow))
        fast = pair_loss(batch, u, 2, 1, cfg)
        slow = reference.brute_pair_loss(v2.tolist(), v1.tolist(), u, temperature)
        pair_err = max(pair_err, abs(fast - slow))
    batch_err = abs(
        batch_loss(batch, cfg) - reference.brute_batch_loss(v1.tolist(), v2.tolist(), temperature)
    )
    return pair_err, batch_err


def run_selfcheck(emit: Callable[[str], None] | None = None) -> list[CheckResult]:
    """Gradient check per encoder variant plus both loss-oracle comparisons."""
    results = []

    def record(name: str, passed: bool, detail: str):
        result = CheckResult(name, passed, detail)
        results.append(result)
        if emit is not None:
            emit(result.line())

    for variant in ("one_layer", "two_layer", "three_layer_residual"):
        worst = max(pipeline_gradient_error(variant, seed) for seed in (1, 2))
        record(f"gradient_check[{variant}]", worst < 1e-5, f"max rel err {worst:.3e}")

    pair_err = batch_err = 0.0
    for seed, m, temperature in ((3, 2, 0.5), (4, 3, 0.1), (5, 5, 1.0)):
        p, b = _loss_oracle_errors(seed, m, temperature)
        pair_err = max(pair_err, p)
        batch_err = max(batch_err, b)
    record("loss_oracle[pair_loss]", pair_err < 1e-12, f"max abs err {pair_err:.3e}")
    record("loss_oracle[batch_loss]", batch_err < 1e-12, f"max abs err {batch_err:.3e}")
    return results
