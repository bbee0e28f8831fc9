"""key = value run configuration: schema, file parsing, and validation."""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .contrastive import LossConfig
from .encoder import VARIANTS, variant_depth
from .perturb import PerturbConfig
from .synth import SbmSpec
from .training import INDUCTIVE, TRANSDUCTIVE, TrainConfig

__all__ = ["ConfigError", "RunConfig", "build_config", "parse_config_file", "config_reference"]

# Tuned ranges the perturbation probabilities were explored over; values
# outside them are legal but worth a warning when training.
EDGE_DROP_RANGE = (0.05, 0.75)
FEAT_DROP_RANGE = (0.2, 0.8)


class ConfigError(ValueError):
    """Invalid, unknown, or missing configuration."""


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_ints(text: str) -> tuple[int, ...]:
    toks = [t for t in text.replace(",", " ").split() if t]
    if not toks:
        raise ValueError("expected a comma-separated list of integers")
    return tuple(int(t) for t in toks)


@dataclass(frozen=True)
class _Option:
    key: str
    parse: Callable[[str], Any]
    default: Any
    help: str
    check: Callable[[Any], str | None] | None = None


def _positive(kind: str):
    return lambda v: None if v > 0 else f"must be positive, got {v}"


def _nonnegative(v) -> str | None:
    return None if v >= 0 else f"must be nonnegative, got {v}"


def _probability(v) -> str | None:
    return None if 0.0 <= v <= 1.0 else f"must lie in [0, 1], got {v}"


def _choice(*allowed: str):
    return lambda v: None if v in allowed else f"must be one of {', '.join(allowed)}"


_SCHEMA: tuple[_Option, ...] = (
    _Option("regime", str, TRANSDUCTIVE, "transductive or inductive", _choice(TRANSDUCTIVE, INDUCTIVE)),
    _Option("encoder", str, "two_layer", "encoder variant", _choice(*VARIANTS)),
    _Option("embed_dim", int, 512, "embedding width P'", _positive("int")),
    _Option("fanouts", _parse_ints, (10, 10, 10), "per-layer neighbor sample sizes (inductive)"),
    _Option("batch_size", int, 64, "minibatch size M (inductive)", lambda v: None if v >= 2 else "must be >= 2"),
    _Option("epochs", int, 20, "training epochs", _nonnegative),
    _Option("lr", float, 0.001, "Adam learning rate", _positive("float")),
    _Option("weight_decay", float, 0.0, "coupled L2 weight decay", _nonnegative),
    _Option("temperature", float, 0.5, "similarity temperature", _positive("float")),
    _Option("loss_epsilon", float, 1e-12, "zero-norm guard in cosine similarity", _positive("float")),
    _Option("p_edge", float, 0.15, "probability of dropping each undirected edge", _probability),
    _Option("p_feat", float, 0.6, "probability of dropping each feature entry", _probability),
    _Option("scale_features", _parse_bool, True, "rescale kept features by 1/(1-p_feat)"),
    _Option("seed", int, 0, "root random seed", _nonnegative),
    _Option("threads", int, os.cpu_count() or 1, "worker threads (current kernels are serial)", _positive("int")),
    _Option("edges_path", str, None, "edge list file"),
    _Option("features_path", str, None, "feature matrix file"),
    _Option("labels_path", str, None, "label file (optional for training)"),
    _Option("split_path", str, None, "train/val/test split file"),
    _Option("out_dir", str, None, "output directory for artifacts"),
    _Option("checkpoint_path", str, None, "checkpoint file (default: <out_dir>/checkpoint.bin)"),
    _Option("embeddings_path", str, None, "embedding export (default: <out_dir>/embeddings.txt)"),
    _Option("metrics_path", str, None, "metrics report (default: <out_dir>/metrics.txt)"),
    _Option("probe_input", str, "embeddings", "probe on 'embeddings' or raw 'features'", _choice("embeddings", "features")),
    _Option("probe_reg", float, 1e-4, "probe L2 strength", _nonnegative),
    _Option("probe_runs", int, 10, "seeded probe refits to average", _positive("int")),
    _Option("probe_threshold", float, 0.5, "multilabel decision threshold", lambda v: None if 0 < v < 1 else "must lie in (0, 1)"),
    _Option("synth_block_sizes", _parse_ints, (100, 100, 100), "SBM nodes per block"),
    _Option("synth_p_in", float, 0.10, "SBM within-block edge probability", _probability),
    _Option("synth_p_out", float, 0.01, "SBM cross-block edge probability", _probability),
    _Option("synth_feature_dim", int, 16, "SBM feature dimension", _positive("int")),
    _Option("synth_separation", float, 0.32, "SBM class-mean separation", _nonnegative),
    _Option("synth_noise", float, 1.0, "SBM feature noise scale", _nonnegative),
    _Option("synth_multilabel", _parse_bool, False, "generate overlapping multilabel targets"),
)

_BY_KEY = {opt.key: opt for opt in _SCHEMA}


@dataclass(frozen=True)
class RunConfig:
    """Validated, typed configuration for one command invocation."""

    values: dict[str, Any]

    def __getattr__(self, key: str):
        try:
            return self.values[key]
        except KeyError:
            raise AttributeError(key) from None

    def as_string_dict(self) -> dict[str, str]:
        out = {}
        for key in sorted(self.values):
            v = self.values[key]
            if v is None:
                continue
            if isinstance(v, tuple):
                out[key] = ",".join(str(x) for x in v)
            elif isinstance(v, bool):
                out[key] = "true" if v else "false"
            else:
                out[key] = str(v)
        return out

    def train_config(self) -> TrainConfig:
        perturb = PerturbConfig(self.p_edge, self.p_feat, self.scale_features)
        loss = LossConfig(self.temperature, self.loss_epsilon)
        if self.p_edge < EDGE_DROP_RANGE[0] or self.p_edge > EDGE_DROP_RANGE[1]:
            warnings.warn(
                f"p_edge={self.p_edge} is outside the tuned range {EDGE_DROP_RANGE}", stacklevel=2
            )
        if self.p_feat < FEAT_DROP_RANGE[0] or self.p_feat > FEAT_DROP_RANGE[1]:
            warnings.warn(
                f"p_feat={self.p_feat} is outside the tuned range {FEAT_DROP_RANGE}", stacklevel=2
            )
        try:
            return TrainConfig(
                regime=self.regime,
                encoder=self.encoder,
                embed_dim=self.embed_dim,
                fanouts=self.fanouts if self.regime == INDUCTIVE else None,
                perturb=perturb,
                loss=loss,
                lr=self.lr,
                weight_decay=self.weight_decay,
                epochs=self.epochs,
                batch_size=self.batch_size if self.regime == INDUCTIVE else None,
                seed=self.seed,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def sbm_spec(self) -> SbmSpec:
        try:
            return SbmSpec(
                block_sizes=self.synth_block_sizes,
                p_in=self.synth_p_in,
                p_out=self.synth_p_out,
                feature_dim=self.synth_feature_dim,
                separation=self.synth_separation,
                noise=self.synth_noise,
                multilabel=self.synth_multilabel,
                seed=self.seed,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def parse_config_file(path) -> dict[str, str]:
    """Read raw key = value lines; '#' starts a comment, later keys win."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            key, eq, value = text.partition("=")
            if not eq:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {text!r}")
            raw[key.strip()] = value.strip()
    return raw


def build_config(config_path=None, overrides: list[str] | None = None) -> RunConfig:
    """Merge file values and --set overrides over the defaults, then validate."""
    raw = parse_config_file(config_path) if config_path else {}
    for item in overrides or []:
        key, eq, value = item.partition("=")
        if not eq:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        raw[key.strip()] = value.strip()
    values: dict[str, Any] = {opt.key: opt.default for opt in _SCHEMA}
    for key, text in raw.items():
        opt = _BY_KEY.get(key)
        if opt is None:
            raise ConfigError(f"unknown config key '{key}'")
        try:
            value = opt.parse(text)
        except ValueError as exc:
            raise ConfigError(f"config key '{key}': {exc}") from None
        if opt.check is not None:
            problem = opt.check(value)
            if problem:
                raise ConfigError(f"config key '{key}': {problem}")
        values[key] = value
    cfg = RunConfig(values)
    if cfg.regime == INDUCTIVE and len(cfg.fanouts) != variant_depth(cfg.encoder):
        raise ConfigError(
            f"config key 'fanouts': need one entry per encoder layer "
            f"({variant_depth(cfg.encoder)} for {cfg.encoder}), got {len(cfg.fanouts)}"
        )
    return cfg


def config_reference() -> str:
    """Generated reference page for every config key."""
    width = max(len(opt.key) for opt in _SCHEMA)
    lines = ["Configuration keys (one 'key = value' per line; '#' comments):", ""]
    for opt in _SCHEMA:
        default = opt.default
        if isinstance(default, tuple):
            default = ",".join(str(x) for x in default)
        shown = "(required per command)" if default is None else f"default: {default}"
        lines.append(f"  {opt.key.ljust(width)}  {opt.help} [{shown}]")
    return "\n".join(lines) + "\n"
