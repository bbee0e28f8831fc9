"""Command-line entry point: gen-synth, train, embed, probe, selfcheck.

Invocation: nodecontrast <command> --config <path> [--set key=value ...]
Exit status: 0 on success, 2 for configuration problems, 1 for runtime
failures. Every artifact-producing run writes a JSON manifest (resolved
config plus input/output hashes) sufficient to reproduce it bit-exactly.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, build_config, config_reference
from .datasets import load_dataset, save_dataset
from .probe import (
    format_metric_line,
    probe_report,
    read_embeddings,
    write_embeddings,
)
from .selfcheck import run_selfcheck
from .synth import generate
from .training import (
    embed,
    ensure_variant,
    load_checkpoint,
    save_checkpoint,
    train,
)

__all__ = ["main", "entrypoint"]

COMMANDS = ("gen-synth", "train", "embed", "probe", "selfcheck")


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, cfg: RunConfig, inputs: dict, outputs: dict) -> Path:
    manifest = {
        "command": command,
        "config": cfg.as_string_dict(),
        "inputs": {name: {"path": str(p), "sha256": _sha256(Path(p))} for name, p in inputs.items()},
        "outputs": {name: {"path": str(p), "sha256": _sha256(Path(p))} for name, p in outputs.items()},
    }
    path = out_dir / f"{command}-manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _require(cfg: RunConfig, command: str, *keys: str) -> None:
    for key in keys:
        if cfg.values.get(key) is None:
            raise ConfigError(f"{command} requires config key '{key}'")


def _require_file(label: str, path_text: str) -> Path:
    path = Path(path_text)
    if not path.is_file():
        raise ConfigError(f"{label} file not found: {path}")
    return path


def _out_dir(cfg: RunConfig, command: str) -> Path:
    _require(cfg, command, "out_dir")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _dataset_inputs(cfg: RunConfig, command: str, need_labels: bool):
    _require(cfg, command, "edges_path", "features_path")
    edges = _require_file("edges", cfg.edges_path)
    features = _require_file("features", cfg.features_path)
    labels = split = None
    if cfg.values.get("labels_path") is not None:
        labels = _require_file("labels", cfg.labels_path)
    elif need_labels:
        raise ConfigError(f"{command} requires a labels file (config key 'labels_path' is unset)")
    if cfg.values.get("split_path") is not None:
        split = _require_file("split", cfg.split_path)
    elif need_labels:
        raise ConfigError(f"{command} requires a split file (config key 'split_path' is unset)")
    return edges, features, labels, split


def _cmd_gen_synth(cfg: RunConfig) -> int:
    out_dir = _out_dir(cfg, "gen-synth")
    dataset = generate(cfg.sbm_spec())
    paths = save_dataset(dataset, out_dir)
    _write_manifest(out_dir, "gen-synth", cfg, {}, paths)
    print(
        f"gen-synth: wrote {dataset.num_nodes} nodes, "
        f"{dataset.graph.num_undirected_edges} edges to {out_dir}"
    )
    return 0


def _cmd_train(cfg: RunConfig) -> int:
    out_dir = _out_dir(cfg, "train")
    edges, features, labels, split = _dataset_inputs(cfg, "train", need_labels=False)
    dataset = load_dataset(edges, features, labels, split)
    train_cfg = cfg.train_config()
    checkpoint = Path(cfg.values.get("checkpoint_path") or out_dir / "checkpoint.bin")
    log_path = out_dir / "train.log"
    with open(log_path, "w", encoding="utf-8") as log_file:

        class _Tee:
            def write(self, text: str):
                sys.stdout.write(text)
                log_file.write(text)

        params, history = train(dataset, train_cfg, log_stream=_Tee())
    save_checkpoint(params, history, checkpoint)
    inputs = {"edges": edges, "features": features}
    _write_manifest(out_dir, "train", cfg, inputs, {"checkpoint": checkpoint})
    print(f"train: {len(history)} epoch(s), checkpoint at {checkpoint}")
    return 0


def _cmd_embed(cfg: RunConfig) -> int:
    out_dir = _out_dir(cfg, "embed")
    edges, features, labels, split = _dataset_inputs(cfg, "embed", need_labels=False)
    dataset = load_dataset(edges, features, labels, split)
    checkpoint = _require_file(
        "checkpoint", str(cfg.values.get("checkpoint_path") or out_dir / "checkpoint.bin")
    )
    params, _history = load_checkpoint(checkpoint)
    ensure_variant(params, cfg.encoder)
    train_cfg = cfg.train_config()
    embeddings = embed(dataset, params, train_cfg)
    target = Path(cfg.values.get("embeddings_path") or out_dir / "embeddings.txt")
    write_embeddings(embeddings, target)
    inputs = {"edges": edges, "features": features, "checkpoint": checkpoint}
    _write_manifest(out_dir, "embed", cfg, inputs, {"embeddings": target})
    print(f"embed: wrote {embeddings.num_nodes} x {embeddings.dim} embeddings to {target}")
    return 0


def _cmd_probe(cfg: RunConfig) -> int:
    out_dir = _out_dir(cfg, "probe")
    edges, features, labels, split = _dataset_inputs(cfg, "probe", need_labels=True)
    dataset = load_dataset(edges, features, labels, split)
    if cfg.probe_input == "features":
        from .encoder import EmbeddingMatrix

        embeddings = EmbeddingMatrix(dataset.features.values)
        inputs = {"edges": edges, "features": features, "labels": labels, "split": split}
    else:
        emb_path = _require_file(
            "embeddings", str(cfg.values.get("embeddings_path") or out_dir / "embeddings.txt")
        )
        embeddings = read_embeddings(emb_path)
        inputs = {"embeddings": emb_path, "labels": labels, "split": split}
    report = probe_report(
        embeddings,
        dataset,
        reg=cfg.probe_reg,
        runs=cfg.probe_runs,
        base_seed=cfg.seed,
        threshold=cfg.probe_threshold,
    )
    line = format_metric_line(report)
    target = Path(cfg.values.get("metrics_path") or out_dir / "metrics.txt")
    with open(target, "w", encoding="utf-8") as fh:
        fh.write(line + "\n")
    _write_manifest(out_dir, "probe", cfg, inputs, {"metrics": target})
    print(line)
    return 0


def _cmd_selfcheck(_cfg: RunConfig) -> int:
    results = run_selfcheck(emit=print)
    failed = [r for r in results if not r.passed]
    print(f"selfcheck: {len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="nodecontrast",
        description="Self-supervised node embeddings from contrasted neighborhood views.",
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )
    parser.add_argument(
        "--help-config", action="store_true", help="print the generated config key reference"
    )
    args = parser.parse_args(argv)

    if args.help_config:
        print(config_reference(), end="")
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("error: a command is required", file=sys.stderr)
        return 2

    try:
        cfg = build_config(args.config, args.overrides)
        handler = {
            "gen-synth": _cmd_gen_synth,
            "train": _cmd_train,
            "embed": _cmd_embed,
            "probe": _cmd_probe,
            "selfcheck": _cmd_selfcheck,
        }[args.command]
        return handler(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - single line reason, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    raise SystemExit(main())
