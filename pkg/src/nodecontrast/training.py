"""Contrastive training loops, inference embeddings, and checkpoint files.

One optimizer step processes a batch of nodes: perturb each node's
neighborhood twice, encode both views with the shared encoder, and minimize
the two-view batch loss. Transductively the "batch" is the whole graph and
both views are perturbations of the full graph; inductively each batch node
gets a fanout-sampled subgraph and contributes its center embedding.

All randomness derives from the config seed through fixed-purpose seed keys,
so a (dataset, config) pair fully determines the result, bit for bit.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Node, Tape
from .contrastive import LossConfig, loss_graph, mi_lower_bound
from .datasets import LabeledDataset
from .encoder import (
    VARIANTS,
    EmbeddingMatrix,
    EncoderParams,
    encode,
    encode_on_tape,
    init_params,
    variant_depth,
)
from .graph import FeatureMatrix, Graph, normalize_adjacency
from .optim import AdamState, adam_step
from .perturb import PerturbConfig, drop_edges, make_views, mask_features
from .sampling import FanoutConfig, Subgraph, minibatches, sample_fanout_subgraph

__all__ = [
    "TrainConfig",
    "EpochRecord",
    "TrainingDivergedError",
    "CheckpointFormatError",
    "VariantMismatchError",
    "train",
    "embed",
    "save_checkpoint",
    "load_checkpoint",
    "ensure_variant",
]

TRANSDUCTIVE = "transductive"
INDUCTIVE = "inductive"

# Fixed purpose tags so every random stream is keyed by (seed, tag, ...).
_SEED_INIT = 0
_SEED_FULL_VIEWS = 1
_SEED_SHUFFLE = 2
_SEED_SAMPLE = 3
_SEED_NODE_VIEWS = 4
_SEED_EMBED = 5


class TrainingDivergedError(RuntimeError):
    """Raised when a batch loss stops being finite."""


class CheckpointFormatError(ValueError):
    """Raised for unreadable or truncated checkpoint files."""


class VariantMismatchError(ValueError):
    """Checkpoint encoder variant does not match the requested one."""


def seeded_rng(*key: int) -> np.random.Generator:
    """Deterministic generator keyed by a tuple of nonnegative integers."""
    return np.random.default_rng(np.random.SeedSequence(key))


@dataclass(frozen=True)
class TrainConfig:
    """Everything one training run needs besides the dataset itself."""

    regime: str = TRANSDUCTIVE
    encoder: str = "two_layer"
    embed_dim: int = 512
    fanouts: tuple[int, ...] | None = None
    perturb: PerturbConfig = field(default_factory=PerturbConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    lr: float = 0.001
    weight_decay: float = 0.0
    epochs: int = 20
    batch_size: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.regime not in (TRANSDUCTIVE, INDUCTIVE):
            raise ValueError(f"unknown regime {self.regime!r}")
        depth = variant_depth(self.encoder)
        if self.embed_dim < 1:
            raise ValueError("embed_dim must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.regime == INDUCTIVE:
            if self.fanouts is None:
                raise ValueError("inductive training requires fanouts")
            object.__setattr__(self, "fanouts", tuple(int(f) for f in self.fanouts))
            if len(self.fanouts) != depth:
                raise ValueError(
                    f"fanouts must list one count per encoder layer ({depth}), got {len(self.fanouts)}"
                )
            if self.batch_size is None or self.batch_size < 2:
                raise ValueError("inductive training requires batch_size >= 2")

    @property
    def hops(self) -> int:
        """Neighborhood radius; equals the encoder depth."""
        return variant_depth(self.encoder)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    mi_bound: float
    seconds: float


def _log_epoch(stream: IO[str] | None, record: EpochRecord) -> None:
    if stream is not None:
        stream.write(
            f"{record.epoch}\t{record.loss:.6f}\t{record.mi_bound:.6f}\t{record.seconds:.6f}\n"
        )


def batch_view_pairs(
    graph: Graph,
    features: FeatureMatrix,
    batch_nodes: Sequence[int],
    fanouts: FanoutConfig,
    perturb_cfg: PerturbConfig,
    seed: int,
    epoch: int,
) -> list[tuple[Subgraph, Subgraph]]:
    """Sampled and twice-perturbed neighborhood per batch node.

    Per-node random streams are keyed by (seed, tag, epoch, node), so results
    do not depend on iteration order.
    """
    pairs = []
    for u in batch_nodes:
        u = int(u)
        sub = sample_fanout_subgraph(
            graph, features, u, fanouts, seeded_rng(seed, _SEED_SAMPLE, epoch, u)
        )
        pairs.append(make_views(sub, perturb_cfg, seeded_rng(seed, _SEED_NODE_VIEWS, epoch, u)))
    return pairs


def batch_loss_node(
    tape: Tape,
    variant: str,
    weight_nodes: Sequence[Node],
    view_pairs: Sequence[tuple[Subgraph, Subgraph]],
    loss_cfg: LossConfig,
) -> Node:
    """Differentiable batch loss over the center embeddings of paired views."""
    rows1: list[Node] = []
    rows2: list[Node] = []
    for v1, v2 in view_pairs:
        for view, rows in ((v1, rows1), (v2, rows2)):
            a_hat = normalize_adjacency(view.local_graph)
            h = encode_on_tape(tape, variant, weight_nodes, view.local_features.values, a_hat)
            rows.append(ad.select_row(h, view.center_local))
    return loss_graph(tape, ad.stack_rows(rows1), ad.stack_rows(rows2), loss_cfg)


def _check_finite(loss: float, where: str) -> None:
    if not np.isfinite(loss):
        raise TrainingDivergedError(f"non-finite batch loss at {where}")


def train(
    dataset: LabeledDataset,
    cfg: TrainConfig,
    log_stream: IO[str] | None = None,
) -> tuple[EncoderParams, list[EpochRecord]]:
    """Run the four-step loop for ``cfg.epochs`` epochs.

    Returns the final encoder parameters and one record per epoch. Labels are
    never read; training is purely self-supervised. ``log_stream`` receives
    one "epoch<TAB>loss<TAB>mi_bound<TAB>seconds" line per epoch when given.
    """
    graph, features = dataset.graph, dataset.features
    params = init_params(
        cfg.encoder, features.dim, cfg.embed_dim, seeded_rng(cfg.seed, _SEED_INIT)
    )
    state = AdamState.init(params.as_dict())
    records: list[EpochRecord] = []

    if cfg.regime == TRANSDUCTIVE:
        if graph.num_nodes < 2:
            raise ValueError("transductive training needs at least two nodes")
        batch_m = graph.num_nodes
        for epoch in range(cfg.epochs):
            started = time.perf_counter()
            rng = seeded_rng(cfg.seed, _SEED_FULL_VIEWS, epoch)
            views = []
            for _ in range(2):
                g_view = drop_edges(graph, cfg.perturb.p_edge, rng)
                x_view = mask_features(
                    features, cfg.perturb.p_feat, cfg.perturb.scale_features, rng
                )
                views.append((normalize_adjacency(g_view), x_view))
            tape = Tape()
            weight_nodes = [tape.parameter(n, w) for n, w in params.as_dict().items()]
            h1 = encode_on_tape(tape, cfg.encoder, weight_nodes, views[0][1].values, views[0][0])
            h2 = encode_on_tape(tape, cfg.encoder, weight_nodes, views[1][1].values, views[1][0])
            loss_node = loss_graph(tape, h1, h2, cfg.loss)
            loss = float(loss_node.value)
            _check_finite(loss, f"epoch {epoch}")
            grads = ad.backward(tape, loss_node)
            new_values, state = adam_step(params.as_dict(), grads, state, cfg.lr, cfg.weight_decay)
            params = params.with_weights(new_values)
            record = EpochRecord(
                epoch,
                loss,
                mi_lower_bound(loss / 2.0, 2 * batch_m - 2),
                time.perf_counter() - started,
            )
            records.append(record)
            _log_epoch(log_stream, record)
        return params, records

    fanouts = FanoutConfig(cfg.fanouts)
    all_nodes = np.arange(graph.num_nodes, dtype=np.int64)
    for epoch in range(cfg.epochs):
        started = time.perf_counter()
        shuffle_rng = seeded_rng(cfg.seed, _SEED_SHUFFLE, epoch)
        batch_losses = []
        for batch_index, batch in enumerate(minibatches(all_nodes, cfg.batch_size, shuffle_rng)):
            view_pairs = batch_view_pairs(
                graph, features, batch, fanouts, cfg.perturb, cfg.seed, epoch
            )
            tape = Tape()
            weight_nodes = [tape.parameter(n, w) for n, w in params.as_dict().items()]
            loss_node = batch_loss_node(tape, cfg.encoder, weight_nodes, view_pairs, cfg.loss)
            loss = float(loss_node.value)
            _check_finite(loss, f"epoch {epoch}, batch {batch_index}")
            grads = ad.backward(tape, loss_node)
            new_values, state = adam_step(params.as_dict(), grads, state, cfg.lr, cfg.weight_decay)
            params = params.with_weights(new_values)
            batch_losses.append(loss)
        mean_loss = float(np.mean(batch_losses)) if batch_losses else float("nan")
        record = EpochRecord(
            epoch,
            mean_loss,
            mi_lower_bound(mean_loss / 2.0, 2 * cfg.batch_size - 2),
            time.perf_counter() - started,
        )
        records.append(record)
        _log_epoch(log_stream, record)
    return params, records


def embed(dataset: LabeledDataset, params: EncoderParams, cfg: TrainConfig) -> EmbeddingMatrix:
    """Embeddings of all nodes on the unperturbed graph.

    Transductive: one full-graph forward pass, identical to ``encode``.
    Inductive: per-node fanout subgraph under a fixed inference seed.
    """
    if params.input_dim != dataset.features.dim:
        raise ValueError("encoder input dim does not match dataset features")
    if cfg.regime == TRANSDUCTIVE:
        a_hat = normalize_adjacency(dataset.graph)
        return encode(params, dataset.features, a_hat)
    fanouts = FanoutConfig(cfg.fanouts)
    rows = np.empty((dataset.num_nodes, params.embed_dim), dtype=np.float64)
    for u in range(dataset.num_nodes):
        sub = sample_fanout_subgraph(
            dataset.graph, dataset.features, u, fanouts, seeded_rng(cfg.seed, _SEED_EMBED, u)
        )
        a_hat = normalize_adjacency(sub.local_graph)
        local = encode(params, sub.local_features, a_hat)
        rows[u] = local.values[sub.center_local]
    return EmbeddingMatrix(rows)


_MAGIC = b"NCKPT001"


def save_checkpoint(params: EncoderParams, history: Sequence[EpochRecord], path) -> None:
    """Write parameters and the epoch history to one little-endian binary file.

    Wall-clock seconds are stored as zero so identical runs produce identical
    bytes; timing stays in the live history and the training log only.
    """
    buf = bytearray()
    buf += _MAGIC
    buf += struct.pack("<B", VARIANTS.index(params.variant))
    buf += struct.pack("<II", params.input_dim, params.embed_dim)
    buf += struct.pack("<I", len(params.weights))
    for w in params.weights:
        buf += struct.pack("<II", *w.shape)
    for w in params.weights:
        buf += np.ascontiguousarray(w, dtype="<f8").tobytes()
    buf += struct.pack("<I", len(history))
    for r in history:
        buf += struct.pack("<Iddd", r.epoch, r.loss, r.mi_bound, 0.0)
    Path(path).write_bytes(bytes(buf))


class _Reader:
    def __init__(self, blob: bytes, path):
        self.blob = blob
        self.path = path
        self.offset = 0

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.blob):
            raise CheckpointFormatError(f"{self.path}: truncated checkpoint")
        out = self.blob[self.offset : self.offset + n]
        self.offset += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path) -> tuple[EncoderParams, list[EpochRecord]]:
    """Read a checkpoint written by ``save_checkpoint``; strict about format."""
    reader = _Reader(Path(path).read_bytes(), path)
    if reader.take(len(_MAGIC)) != _MAGIC:
        raise CheckpointFormatError(f"{path}: not a checkpoint file (bad magic)")
    (tag,) = reader.unpack("<B")
    if tag >= len(VARIANTS):
        raise CheckpointFormatError(f"{path}: unknown encoder variant tag {tag}")
    variant = VARIANTS[tag]
    input_dim, embed_dim = reader.unpack("<II")
    (n_matrices,) = reader.unpack("<I")
    shapes = [reader.unpack("<II") for _ in range(n_matrices)]
    weights = []
    for rows, cols in shapes:
        raw = reader.take(rows * cols * 8)
        weights.append(np.frombuffer(raw, dtype="<f8").reshape(rows, cols).copy())
    try:
        params = EncoderParams(variant, tuple(weights))
    except ValueError as exc:
        raise CheckpointFormatError(f"{path}: inconsistent weights ({exc})") from None
    if params.input_dim != input_dim or params.embed_dim != embed_dim:
        raise CheckpointFormatError(f"{path}: header dimensions disagree with weights")
    (n_epochs,) = reader.unpack("<I")
    history = []
    for _ in range(n_epochs):
        epoch, loss, mi, seconds = reader.unpack("<Iddd")
        history.append(EpochRecord(epoch, loss, mi, seconds))
    if reader.offset != len(reader.blob):
        raise CheckpointFormatError(f"{path}: trailing bytes after checkpoint data")
    return params, history


def ensure_variant(params: EncoderParams, expected: str) -> None:
    if params.variant != expected:
        raise VariantMismatchError(
            f"checkpoint holds a {params.variant!r} encoder but the config asks for {expected!r}"
        )
