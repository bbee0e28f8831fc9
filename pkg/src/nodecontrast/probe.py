"""Linear-probe evaluation of frozen embeddings, plus embedding/metric files.

Multiclass datasets get one softmax regression trained on the train split and
scored by accuracy; multilabel datasets get an independent binary regression
per label scored by micro-averaged F1. The inner optimizer is full-batch
gradient descent with a backtracking line search: the problem is convex and
the run is bit-reproducible for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit, logsumexp

from .datasets import MULTICLASS, MULTILABEL, LabeledDataset
from .encoder import EmbeddingMatrix

__all__ = [
    "LinearProbe",
    "MetricReport",
    "fit_probe",
    "accuracy",
    "micro_f1",
    "micro_f1_from_counts",
    "probe_report",
    "format_metric_line",
    "write_embeddings",
    "read_embeddings",
]


@dataclass(frozen=True)
class LinearProbe:
    """(P'+1) x K weight matrix (bias row last) for K classes or K labels."""

    kind: str
    weights: np.ndarray
    reg: float

    def __post_init__(self):
        if self.kind not in (MULTICLASS, MULTILABEL):
            raise ValueError(f"unknown probe kind {self.kind!r}")
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or not np.all(np.isfinite(w)):
            raise ValueError("probe weights must be a finite matrix")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def embed_dim(self) -> int:
        return self.weights.shape[0] - 1

    @property
    def num_outputs(self) -> int:
        return self.weights.shape[1]


def _with_bias(values: np.ndarray) -> np.ndarray:
    return np.concatenate([values, np.ones((values.shape[0], 1))], axis=1)


def _descend(f_grad, w0: np.ndarray, tol: float, max_iter: int, loss_trace=None) -> np.ndarray:
    """Backtracking gradient descent; stops at gradient norm < tol."""
    w = w0
    loss, grad = f_grad(w)
    if loss_trace is not None:
        loss_trace.append(loss)
    step = 1.0
    for _ in range(max_iter):
        gnorm_sq = float(np.sum(grad * grad))
        if np.sqrt(gnorm_sq) < tol:
            break
        step = min(step * 2.0, 1e6)
        while True:
            candidate = w - step * grad
            cand_loss, cand_grad = f_grad(candidate)
            if cand_loss <= loss - 1e-4 * step * gnorm_sq:
                break
            step *= 0.5
            if step < 1e-18:
                return w
        w, loss, grad = candidate, cand_loss, cand_grad
        if loss_trace is not None:
            loss_trace.append(loss)
    return w


def _softmax_objective(x: np.ndarray, y: np.ndarray, k: int, reg: float):
    n = x.shape[0]
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y] = 1.0

    def f_grad(w):
        logits = x @ w
        lse = logsumexp(logits, axis=1)
        loss = float(np.mean(lse - logits[np.arange(n), y]))
        probs = np.exp(logits - lse[:, None])
        grad = x.T @ (probs - onehot) / n
        if reg:
            loss += 0.5 * reg * float(np.sum(w[:-1] ** 2))
            grad = grad.copy()
            grad[:-1] += reg * w[:-1]
        return loss, grad

    return f_grad


def _binary_objective(x: np.ndarray, y: np.ndarray, reg: float):
    n = x.shape[0]

    def f_grad(w):
        z = x @ w
        # mean softplus(z) - y z, computed stably
        loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
        grad = x.T @ (expit(z) - y) / n
        if reg:
            loss += 0.5 * reg * float(np.sum(w[:-1] ** 2))
            grad = grad.copy()
            grad[:-1] += reg * w[:-1]
        return loss, grad

    return f_grad


def fit_probe(
    embeddings: EmbeddingMatrix,
    dataset: LabeledDataset,
    reg: float = 1e-4,
    seed: int = 0,
    tol: float = 1e-6,
    max_iter: int = 10_000,
    loss_trace: list | None = None,
) -> LinearProbe:
    """Train the probe on the dataset's train split.

    ``loss_trace``, when a list, collects the per-iteration objective values
    (for the multilabel case, those of the first label's probe).
    """
    if not dataset.is_labeled or dataset.split is None:
        raise ValueError("probing requires labels and a split")
    train_ids = dataset.split.train
    if train_ids.size == 0:
        raise ValueError("train split is empty")
    if embeddings.num_nodes != dataset.num_nodes:
        raise ValueError("embeddings do not cover the dataset's nodes")
    x = _with_bias(embeddings.values[train_ids])
    rng = np.random.default_rng(np.random.SeedSequence((seed, 17)))
    k = dataset.num_classes
    if dataset.label_kind == MULTICLASS:
        y = dataset.labels[train_ids]
        w0 = 0.01 * rng.standard_normal((x.shape[1], k))
        w = _descend(_softmax_objective(x, y, k, reg), w0, tol, max_iter, loss_trace)
        return LinearProbe(MULTICLASS, w, reg)
    columns = []
    for label in range(k):
        y = dataset.labels[train_ids, label].astype(np.float64)
        w0 = 0.01 * rng.standard_normal(x.shape[1])
        trace = loss_trace if label == 0 else None
        columns.append(_descend(_binary_objective(x, y, reg), w0, tol, max_iter, trace))
    return LinearProbe(MULTILABEL, np.stack(columns, axis=1), reg)


def decision_scores(probe: LinearProbe, embeddings: EmbeddingMatrix) -> np.ndarray:
    if embeddings.dim != probe.embed_dim:
        raise ValueError("embedding dim does not match the probe")
    return _with_bias(embeddings.values) @ probe.weights


def _split_ids(dataset: LabeledDataset, split: str) -> np.ndarray:
    if dataset.split is None:
        raise ValueError("dataset has no split")
    if split not in ("train", "val", "test"):
        raise ValueError(f"unknown split {split!r}")
    return getattr(dataset.split, split)


def accuracy(
    probe: LinearProbe, embeddings: EmbeddingMatrix, dataset: LabeledDataset, split: str
) -> float:
    """Fraction of split nodes whose argmax class matches; ties go to the lowest id."""
    if probe.kind != MULTICLASS or dataset.label_kind != MULTICLASS:
        raise ValueError("accuracy applies to multiclass probes and datasets")
    ids = _split_ids(dataset, split)
    scores = decision_scores(probe, embeddings)[ids]
    predicted = np.argmax(scores, axis=1)
    return float(np.mean(predicted == dataset.labels[ids]))


def micro_f1_from_counts(tp: int, fp: int, fn: int) -> float:
    """2 TP / (2 TP + FP + FN), defined as 0 when the denominator is 0."""
    denom = 2 * tp + fp + fn
    return 2.0 * tp / denom if denom else 0.0


def micro_f1(
    probe: LinearProbe,
    embeddings: EmbeddingMatrix,
    dataset: LabeledDataset,
    split: str,
    threshold: float = 0.5,
) -> float:
    """Micro-averaged F1 with counts pooled over all (node, label) pairs."""
    if probe.kind != MULTILABEL or dataset.label_kind != MULTILABEL:
        raise ValueError("micro_f1 applies to multilabel probes and datasets")
    ids = _split_ids(dataset, split)
    predicted = expit(decision_scores(probe, embeddings)[ids]) >= threshold
    actual = dataset.labels[ids].astype(bool)
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    return micro_f1_from_counts(tp, fp, fn)


@dataclass(frozen=True)
class MetricReport:
    metric: str
    mean: float
    std: float
    runs: int


def probe_report(
    embeddings: EmbeddingMatrix,
    dataset: LabeledDataset,
    reg: float = 1e-4,
    runs: int = 10,
    base_seed: int = 0,
    threshold: float = 0.5,
    split: str = "test",
) -> MetricReport:
    """Mean and standard deviation of the probe metric over seeded refits."""
    if runs < 1:
        raise ValueError("need at least one probe run")
    scores = []
    for r in range(runs):
        probe = fit_probe(embeddings, dataset, reg=reg, seed=base_seed + r)
        if dataset.label_kind == MULTICLASS:
            scores.append(accuracy(probe, embeddings, dataset, split))
            name = "accuracy"
        else:
            scores.append(micro_f1(probe, embeddings, dataset, split, threshold))
            name = "micro_f1"
    return MetricReport(name, float(np.mean(scores)), float(np.std(scores)), runs)


def format_metric_line(report: MetricReport) -> str:
    return (
        f"metric={report.metric} mean={report.mean:.6f} "
        f"std={report.std:.6f} runs={report.runs}"
    )


def write_embeddings(embeddings: EmbeddingMatrix, path) -> None:
    """Text export: header "N P'", then node id plus 9-significant-digit reals."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{embeddings.num_nodes} {embeddings.dim}\n")
        for i, row in enumerate(embeddings.values):
            fh.write(f"{i} " + " ".join(f"{v:.9g}" for v in row) + "\n")


def read_embeddings(path) -> EmbeddingMatrix:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: embedding header must be \"N P'\"")
        n, p = int(header[0]), int(header[1])
        values = np.empty((n, p), dtype=np.float64)
        for expected in range(n):
            toks = fh.readline().split()
            if len(toks) != p + 1 or int(toks[0]) != expected:
                raise ValueError(f"{path}: malformed embedding line for node {expected}")
            values[expected] = [float(t) for t in toks[1:]]
    return EmbeddingMatrix(values)
