"""Plain-text dataset files (edges, features, labels, splits) and the dataset container.

File formats:
  edges    - one "src<TAB>dst" pair of node ids per line, '#' lines ignored
  features - header "N P", then line i holds node i's P space-separated reals
  labels   - header "multiclass K" or "multilabel K"; then "node<TAB>class" or
             "node<TAB>b_1 ... b_K" with bits in {0,1}
  split    - three lines "train:", "val:", "test:" followed by space-separated ids
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import FeatureMatrix, Graph

__all__ = [
    "DatasetFormatError",
    "Split",
    "LabeledDataset",
    "load_dataset",
    "save_dataset",
]

MULTICLASS = "multiclass"
MULTILABEL = "multilabel"


class DatasetFormatError(ValueError):
    """Malformed or inconsistent dataset file."""


@dataclass(frozen=True)
class Split:
    """Disjoint train/val/test node-id sets."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        for name in ("train", "val", "test"):
            ids = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            ids.setflags(write=False)
            object.__setattr__(self, name, ids)

    def validate(self, num_nodes: int) -> None:
        parts = {"train": self.train, "val": self.val, "test": self.test}
        for name, ids in parts.items():
            if ids.size and (ids.min() < 0 or ids.max() >= num_nodes):
                raise DatasetFormatError(f"{name} split contains node id out of range [0, {num_nodes})")
            if np.unique(ids).size != ids.size:
                raise DatasetFormatError(f"{name} split contains duplicate node ids")
        names = list(parts)
        for a in range(len(names)):
            for b in range(a + 1, len(names)):
                overlap = np.intersect1d(parts[names[a]], parts[names[b]])
                if overlap.size:
                    raise DatasetFormatError(
                        f"splits {names[a]} and {names[b]} overlap (e.g. node {int(overlap[0])})"
                    )


@dataclass(frozen=True)
class LabeledDataset:
    """Graph plus features, with optional labels and split.

    ``labels`` is an (N,) int array for multiclass data or an (N, K) 0/1 array
    for multilabel data; ``label_kind`` is None for unlabeled datasets, which
    can be embedded but not probed.
    """

    graph: Graph
    features: FeatureMatrix
    labels: np.ndarray | None = None
    label_kind: str | None = None
    num_classes: int | None = None
    split: Split | None = None

    def __post_init__(self):
        if self.features.num_nodes != self.graph.num_nodes:
            raise ValueError("feature row count must equal the graph's node count")
        if (self.labels is None) != (self.label_kind is None):
            raise ValueError("labels and label_kind must be given together")
        if self.labels is not None:
            labels = np.ascontiguousarray(self.labels)
            k = self.num_classes
            if k is None or k < 2:
                raise ValueError("labeled datasets need num_classes >= 2")
            if self.label_kind == MULTICLASS:
                if labels.shape != (self.graph.num_nodes,):
                    raise ValueError("multiclass labels must be one id per node")
                if labels.size and (labels.min() < 0 or labels.max() >= k):
                    raise ValueError(f"class ids must lie in [0, {k})")
            elif self.label_kind == MULTILABEL:
                if labels.shape != (self.graph.num_nodes, k):
                    raise ValueError("multilabel labels must be an (N, K) matrix")
                if labels.size and not np.isin(labels, (0, 1)).all():
                    raise ValueError("multilabel entries must be 0 or 1")
            else:
                raise ValueError(f"unknown label kind {self.label_kind!r}")
            labels = labels.astype(np.int64)
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)
        if self.split is not None:
            self.split.validate(self.graph.num_nodes)

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None


def _data_lines(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def _parse_int(tok: str, path: Path, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise DatasetFormatError(f"{path}:{lineno}: expected integer, got {tok!r}") from None


def _parse_float(tok: str, path: Path, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise DatasetFormatError(f"{path}:{lineno}: expected number, got {tok!r}") from None


def read_feature_file(path) -> FeatureMatrix:
    path = Path(path)
    lines = _data_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise DatasetFormatError(f"{path}: empty feature file") from None
    toks = header.split()
    if len(toks) != 2:
        raise DatasetFormatError(f"{path}:{lineno}: header must be 'N P'")
    n, p = (_parse_int(t, path, lineno) for t in toks)
    if n < 0 or p <= 0:
        raise DatasetFormatError(f"{path}:{lineno}: invalid dimensions in header")
    values = np.empty((n, p), dtype=np.float64)
    row = 0
    for lineno, line in lines:
        if row >= n:
            raise DatasetFormatError(f"{path}:{lineno}: more feature rows than the declared {n}")
        toks = line.split()
        if len(toks) != p:
            raise DatasetFormatError(f"{path}:{lineno}: expected {p} values, got {len(toks)}")
        values[row] = [_parse_float(t, path, lineno) for t in toks]
        row += 1
    if row != n:
        raise DatasetFormatError(f"{path}: expected {n} feature rows, got {row}")
    try:
        return FeatureMatrix(values)
    except ValueError as exc:
        raise DatasetFormatError(f"{path}: {exc}") from None


def read_edge_file(path, num_nodes: int) -> tuple[Graph, int, int]:
    """Parse an edge file; returns (graph, duplicate_count, self_loop_count).

    Duplicates count every line beyond the first naming the same undirected
    edge, in either orientation.
    """
    path = Path(path)
    pairs = []
    self_loops = 0
    for lineno, line in _data_lines(path):
        toks = line.split()
        if len(toks) != 2:
            raise DatasetFormatError(f"{path}:{lineno}: expected 'src dst', got {line!r}")
        u, v = (_parse_int(t, path, lineno) for t in toks)
        if not (0 <= u < num_nodes and 0 <= v < num_nodes):
            raise DatasetFormatError(f"{path}:{lineno}: node id out of range [0, {num_nodes})")
        if u == v:
            self_loops += 1
            continue
        pairs.append((min(u, v), max(u, v)))
    if pairs:
        arr = np.asarray(pairs, dtype=np.int64)
        unique = np.unique(arr, axis=0)
        duplicates = arr.shape[0] - unique.shape[0]
    else:
        unique = np.zeros((0, 2), dtype=np.int64)
        duplicates = 0
    return Graph.from_pairs(num_nodes, unique), duplicates, self_loops


def read_label_file(path, num_nodes: int) -> tuple[str, int, np.ndarray]:
    path = Path(path)
    lines = _data_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise DatasetFormatError(f"{path}: empty label file") from None
    toks = header.split()
    if len(toks) != 2 or toks[0] not in (MULTICLASS, MULTILABEL):
        raise DatasetFormatError(f"{path}:{lineno}: header must be 'multiclass K' or 'multilabel K'")
    kind = toks[0]
    k = _parse_int(toks[1], path, lineno)
    if k < 2:
        raise DatasetFormatError(f"{path}:{lineno}: need at least 2 classes")
    if kind == MULTICLASS:
        labels = np.full(num_nodes, -1, dtype=np.int64)
    else:
        labels = np.full((num_nodes, k), -1, dtype=np.int64)
    seen = np.zeros(num_nodes, dtype=bool)
    for lineno, line in lines:
        toks = line.split()
        expected = 2 if kind == MULTICLASS else 1 + k
        if len(toks) != expected:
            raise DatasetFormatError(f"{path}:{lineno}: expected {expected} fields, got {len(toks)}")
        u = _parse_int(toks[0], path, lineno)
        if not 0 <= u < num_nodes:
            raise DatasetFormatError(f"{path}:{lineno}: node id out of range [0, {num_nodes})")
        if seen[u]:
            raise DatasetFormatError(f"{path}:{lineno}: duplicate label line for node {u}")
        seen[u] = True
        if kind == MULTICLASS:
            c = _parse_int(toks[1], path, lineno)
            if not 0 <= c < k:
                raise DatasetFormatError(f"{path}:{lineno}: class id out of range [0, {k})")
            labels[u] = c
        else:
            bits = [_parse_int(t, path, lineno) for t in toks[1:]]
            if any(b not in (0, 1) for b in bits):
                raise DatasetFormatError(f"{path}:{lineno}: multilabel bits must be 0 or 1")
            labels[u] = bits
    if not seen.all():
        missing = int(np.flatnonzero(~seen)[0])
        raise DatasetFormatError(f"{path}: missing label line for node {missing}")
    return kind, k, labels


def read_split_file(path, num_nodes: int) -> Split:
    path = Path(path)
    parts: dict[str, np.ndarray] = {}
    for lineno, line in _data_lines(path):
        name, colon, rest = line.partition(":")
        name = name.strip()
        if not colon or name not in ("train", "val", "test"):
            raise DatasetFormatError(f"{path}:{lineno}: expected 'train:', 'val:' or 'test:' line")
        if name in parts:
            raise DatasetFormatError(f"{path}:{lineno}: duplicate '{name}:' line")
        ids = [_parse_int(t, path, lineno) for t in rest.split()]
        parts[name] = np.asarray(ids, dtype=np.int64)
    for name in ("train", "val", "test"):
        if name not in parts:
            raise DatasetFormatError(f"{path}: missing '{name}:' line")
    split = Split(parts["train"], parts["val"], parts["test"])
    split.validate(num_nodes)
    return split


def load_dataset(edges_path, features_path, labels_path=None, split_path=None) -> LabeledDataset:
    """Load and validate a dataset from its text files.

    Duplicate edge lines and self-loop lines are dropped with a warning. The
    features header fixes the node count; labels and split are optional.
    """
    features = read_feature_file(features_path)
    graph, duplicates, self_loops = read_edge_file(edges_path, features.num_nodes)
    if duplicates:
        warnings.warn(f"{edges_path}: dropped {duplicates} duplicate edge line(s)", stacklevel=2)
    if self_loops:
        warnings.warn(f"{edges_path}: dropped {self_loops} self-loop line(s)", stacklevel=2)
    labels = kind = k = None
    if labels_path is not None:
        kind, k, labels = read_label_file(labels_path, graph.num_nodes)
    split = None
    if split_path is not None:
        split = read_split_file(split_path, graph.num_nodes)
    return LabeledDataset(graph, features, labels, kind, k, split)


def _format_real(v: float) -> str:
    return repr(float(v))


def save_dataset(dataset: LabeledDataset, out_dir) -> dict[str, Path]:
    """Write a dataset back to its four text files under ``out_dir``.

    Serialization is deterministic, so save -> load -> save is byte-stable.
    Returns the written paths keyed by 'edges', 'features', 'labels', 'split'.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    edges = out_dir / "edges.txt"
    with open(edges, "w", encoding="utf-8") as fh:
        for u, v in dataset.graph.undirected_pairs():
            fh.write(f"{u}\t{v}\n")
    paths["edges"] = edges

    feats = out_dir / "features.txt"
    x = dataset.features.values
    with open(feats, "w", encoding="utf-8") as fh:
        fh.write(f"{x.shape[0]} {x.shape[1]}\n")
        for row in x:
            fh.write(" ".join(_format_real(v) for v in row) + "\n")
    paths["features"] = feats

    if dataset.is_labeled:
        labels = out_dir / "labels.txt"
        with open(labels, "w", encoding="utf-8") as fh:
            fh.write(f"{dataset.label_kind} {dataset.num_classes}\n")
            if dataset.label_kind == MULTICLASS:
                for u, c in enumerate(dataset.labels):
                    fh.write(f"{u}\t{c}\n")
            else:
                for u, bits in enumerate(dataset.labels):
                    fh.write(f"{u}\t" + " ".join(str(b) for b in bits) + "\n")
        paths["labels"] = labels

    if dataset.split is not None:
        split = out_dir / "split.txt"
        with open(split, "w", encoding="utf-8") as fh:
            for name in ("train", "val", "test"):
                ids = getattr(dataset.split, name)
                fh.write(f"{name}: " + " ".join(str(i) for i in ids) + "\n")
        paths["split"] = split

    return paths
