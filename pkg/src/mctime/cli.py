"""Command-line interface.

Subcommands: generate, split, train, predict, weights, longtime,
oracle-check. Exit codes: 0 success, 1 usage/parameter error, 2 data or
format error, 3 numeric/analysis failure. The environment variable
MCT_SEED overrides the master seed from config files and flags.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from .config import ExperimentConfig, config_hash, load_config, save_config
from .errors import (AnalysisError, FormatError, NumericError, ParameterError,
                     ShapeError)
from .landscapes import load_dataset, save_dataset, split_dataset
from .manifest import RunManifest, write_manifest
from . import pipeline
from .seeds import derive_seed

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    # bad flags are a usage error (exit 1), not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_mesh(text: str):
    axes = []
    for part in text.split(","):
        pieces = part.split(":")
        if len(pieces) != 3:
            raise ParameterError(f"mesh axis {part!r} is not start:stop:count")
        axes.append((float(pieces[0]), float(pieces[1]), int(pieces[2])))
    return tuple(axes)


def _build_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) \
        else ExperimentConfig()
    overrides = {}
    mapping = [
        ("model", "model_id"), ("delta", "delta"), ("delta_a", "delta_a"),
        ("delta_b", "delta_b"), ("t_start", "t_start"), ("t_end", "t_end"),
        ("t_step", "t_step"), ("epochs", "epochs"),
        ("batch_size", "batch_size"), ("learning_rate", "learning_rate"),
        ("alpha", "l2_alpha"), ("k", "k_override"), ("k_min", "k_min"),
        ("k_max", "k_max"), ("threshold", "threshold"),
        ("trim", "trim_fraction"), ("seed", "master_seed"),
    ]
    for flag, field_name in mapping:
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field_name] = value
    if getattr(args, "mesh", None):
        overrides["mesh_axes"] = _parse_mesh(args.mesh)
    if getattr(args, "members", None):
        overrides["members"] = tuple(args.members.split(","))
    cfg = cfg.with_overrides(**overrides)
    if "MCT_SEED" in os.environ:
        cfg = cfg.with_overrides(master_seed=int(os.environ["MCT_SEED"]))
    return cfg


def _manifest(stage: str, cfg: ExperimentConfig) -> RunManifest:
    return RunManifest(stage, config_hash(cfg))


def _finish(manifest: RunManifest, out_dir, started: float) -> None:
    manifest.wall_seconds = time.monotonic() - started
    os.makedirs(out_dir, exist_ok=True)
    write_manifest(manifest, os.path.join(out_dir, f"manifest_{manifest.stage}.json"))


def _cmd_generate(args) -> int:
    cfg = _build_config(args)
    started = time.monotonic()
    dataset = pipeline.run_generate(cfg)
    save_dataset(dataset, args.out)
    manifest = _manifest("generate", cfg)
    manifest.seeds["master_seed"] = cfg.master_seed
    manifest.add_output(args.out)
    out_dir = os.path.dirname(os.path.abspath(args.out))
    save_config(cfg, os.path.join(out_dir, "config_generate.json"))
    manifest.add_output(os.path.join(out_dir, "config_generate.json"))
    _finish(manifest, out_dir, started)
    print(f"wrote {len(dataset)} landscapes "
          f"({dataset.mesh.pixel_count} pixels each) to {args.out}")
    return EXIT_OK


def _cmd_split(args) -> int:
    cfg = _build_config(args)
    started = time.monotonic()
    dataset = load_dataset(args.dataset)
    seed = derive_seed(cfg.master_seed, "split")
    split = split_dataset(len(dataset), seed)
    from .landscapes import save_split
    save_split(split, args.out)
    manifest = _manifest("split", cfg)
    manifest.seeds["split"] = seed
    manifest.add_input(args.dataset)
    manifest.add_output(args.out)
    _finish(manifest, os.path.dirname(os.path.abspath(args.out)), started)
    sizes = tuple(len(p) for p in split.parts())
    print(f"split sizes (ae_train, km_train, ae_val, perf) = {sizes}")
    return EXIT_OK


def _cmd_train(args) -> int:
    cfg = _build_config(args)
    started = time.monotonic()
    dataset = load_dataset(args.dataset)
    manifest = _manifest("train", cfg)
    manifest.add_input(args.dataset)
    result = pipeline.run_train(cfg, dataset, out_dir=args.outdir, log=print)
    for m in result.members:
        manifest.seeds[f"member_{m.plan.index:02d}_{m.label}"] = m.plan.seed
    for record in result.failed:
        manifest.notes.append(f"member {record['label']} diverged at epoch "
                              f"{record['epoch']}")
    for name in sorted(os.listdir(args.outdir)):
        if name.endswith((".mctn", ".csv", ".txt")):
            manifest.add_output(os.path.join(args.outdir, name))
    save_config(cfg, os.path.join(args.outdir, "config_train.json"))
    manifest.add_output(os.path.join(args.outdir, "config_train.json"))
    _finish(manifest, args.outdir, started)
    print(f"trained {len(result.members)} members "
          f"({len(result.failed)} diverged) into {args.outdir}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    cfg = _build_config(args)
    started = time.monotonic()
    dataset = load_dataset(args.dataset)
    ensemble = pipeline.load_ensemble(args.networks)
    manifest = _manifest("predict", cfg)
    manifest.add_input(args.dataset)
    if cfg.k_override is not None:
        manifest.notes.append(f"elbow skipped, k forced to {cfg.k_override}")
    outcome = pipeline.run_predict(cfg, dataset, ensemble,
                                   out_dir=args.outdir, log=print)
    for name in sorted(os.listdir(args.outdir)):
        if name.endswith((".csv", ".json")) and not name.startswith("manifest"):
            manifest.add_output(os.path.join(args.outdir, name))
    _finish(manifest, args.outdir, started)
    ref = outcome.reference
    ref_text = ", ".join(f"{k} = {v:.5f}" for k, v in ref.items())
    print(f"T' = {outcome.prediction.t_prime:.5f} ({ref_text})")
    return EXIT_OK


def _cmd_weights(args) -> int:
    cfg = _build_config(args)
    started = time.monotonic()
    dataset = load_dataset(args.dataset)
    ensemble = pipeline.load_ensemble(args.networks)
    manifest = _manifest("weights", cfg)
    manifest.add_input(args.dataset)
    outcome = pipeline.run_weights(
        cfg, ensemble, dataset, threshold=args.threshold,
        overlay_times=tuple(float(t) for t in args.overlay_t.split(",")),
        out_dir=args.outdir)
    for name in sorted(os.listdir(args.outdir)):
        if name.endswith(".csv"):
            manifest.add_output(os.path.join(args.outdir, name))
    _finish(manifest, args.outdir, started)
    print(f"selected {int(outcome.mask.sum())} of {outcome.mask.size} pixels "
          f"at threshold {outcome.threshold}")
    if outcome.rotation_overlap is not None:
        print(f"mask/180-rotation Jaccard overlap: {outcome.rotation_overlap:.3f}")
    return EXIT_OK


def _cmd_longtime(args) -> int:
    cfg = _build_config(args)
    started = time.monotonic()
    deltas = [float(d) for d in args.deltas.split(",")]
    manifest = _manifest("longtime", cfg)
    rows = pipeline.run_longtime(cfg, deltas, t_end_long=args.t_end_long,
                                 out_dir=args.outdir, log=print)
    for name in sorted(os.listdir(args.outdir)):
        if name.endswith(".csv"):
            manifest.add_output(os.path.join(args.outdir, name))
    _finish(manifest, args.outdir, started)
    for row in rows:
        print(f"delta={row.delta:g}: tau_accuracy={row.comparison.tau_accuracy:.4f}"
              f" 2*tau_fidelity={row.comparison.two_tau_fidelity:.4f}"
              f" ratio={row.comparison.ratio:.4f}")
    return EXIT_OK


def _cmd_oracle_check(args) -> int:
    checks = pipeline.run_oracle_check(seed=args.check_seed)
    all_ok = True
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        all_ok = all_ok and ok
    if not all_ok:
        raise NumericError("oracle check failed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mctime",
                     description="Unsupervised minimum-control-time estimation "
                                 "from control landscapes")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--model", choices=["LZ", "GENERALIZED_LZ3"])
        p.add_argument("--delta", type=float)
        p.add_argument("--delta-a", dest="delta_a", type=float)
        p.add_argument("--delta-b", dest="delta_b", type=float)
        p.add_argument("--mesh", help="per-axis start:stop:count, comma separated")
        p.add_argument("--t-start", dest="t_start", type=float)
        p.add_argument("--t-end", dest="t_end", type=float)
        p.add_argument("--t-step", dest="t_step", type=float)
        p.add_argument("--members", help="comma-separated labels like 190x40")
        p.add_argument("--epochs", type=int)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--learning-rate", dest="learning_rate", type=float)
        p.add_argument("--alpha", type=float, help="L2 regularization weight")
        p.add_argument("--k", type=int, help="force the cluster count")
        p.add_argument("--k-min", dest="k_min", type=int)
        p.add_argument("--k-max", dest="k_max", type=int)
        p.add_argument("--trim", type=float, help="window trim fraction")

    p = sub.add_parser("generate", help="build a landscape dataset file")
    common(p)
    p.add_argument("--out", required=True, help="output .mctl path")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("split", help="write a four-way split manifest")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("train", help="train the autoencoder ensemble")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="cluster, sweep, and locate T'")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--networks", required=True, help="directory of .mctn files")
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("weights", help="first-layer importance exports")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--networks", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--overlay-t", dest="overlay_t", default="4.0",
                   help="comma-separated landscape times to overlay")
    p.set_defaults(func=_cmd_weights)

    p = sub.add_parser("longtime", help="long-time oscillation study")
    common(p)
    p.add_argument("--deltas", default="1.0", help="comma-separated gap values")
    p.add_argument("--t-end-long", dest="t_end_long", type=float, default=49.9)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=_cmd_longtime)

    p = sub.add_parser("oracle-check", help="fast propagator self-checks")
    p.add_argument("--check-seed", dest="check_seed", type=int, default=0)
    p.set_defaults(func=_cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("run 'mctime <command> --help' for usage", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, ShapeError, FileNotFoundError, IsADirectoryError,
            PermissionError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, AnalysisError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
