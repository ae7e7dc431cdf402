"""Command-line interface for the benchmark suite."""

import argparse
import json
import os
import sys

import numpy as np
from importlib import resources
from pathlib import Path

from dataclasses import replace

from .config import ConfigError, parse_config
from .datasets import (
    DenseDataset,
    export_csv,
    load_libsvm,
    synth_classification,
    synth_glyphs,
    write_libsvm,
)
from .parallel_sgd import ASYNC_SCHEDULES, Mode, SgdConfig, run_sgd, \
    write_run_metadata, write_trace_csv
from .perf_energy import BUNDLED_DEVICES
from .runner import MANIFEST_NAME, RunFailure, run_experiment

_MODE_FLAGS = {
    "serial": Mode.SERIAL,
    "sync-shared": Mode.SYNC_SHARED,
    "async-shared": Mode.ASYNC_SHARED,
    "sync-distributed": Mode.SYNC_DISTRIBUTED,
    "async-distributed": Mode.ASYNC_DISTRIBUTED,
}


def _default_out() -> str:
    return os.environ.get("MLBENCH_OUT", "out")


def _bundled_tiny_path():
    return resources.as_file(resources.files("mlbench").joinpath("data/tiny.libsvm"))


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _cmd_run(args) -> int:
    path = Path(args.config)
    if not path.is_file():
        return _fail(f"config file not found: {path}")
    try:
        cfg = parse_config(path.read_text())
    except ConfigError as exc:
        return _fail(f"{path}: {exc}")
    try:
        out_dir, manifest = run_experiment(cfg)
    except RunFailure as exc:
        return _fail(str(exc))
    print(f"wrote {len(manifest['outputs'])} files to {out_dir}")
    print(out_dir / MANIFEST_NAME)
    return 0


def _cmd_sgd(args) -> int:
    try:
        config = SgdConfig(
            epochs=args.epochs,
            learning_rate=args.lr,
            batch_size=args.batch,
            workers=args.workers,
            mode=_MODE_FLAGS[args.mode],
            seed=args.seed,
            async_schedule=args.schedule,
        )
    except ValueError as exc:
        return _fail(str(exc))
    try:
        if args.data is None:
            with _bundled_tiny_path() as tiny:
                data = load_libsvm(tiny)
        else:
            data = load_libsvm(args.data)
        trace = run_sgd(data, config)
    except (OSError, ValueError, RuntimeError) as exc:
        return _fail(str(exc))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_path = out_dir / "trace.csv"
    write_trace_csv(trace, trace_path)
    write_run_metadata(trace, config, out_dir / "trace.meta.json")
    print(trace_path)
    print(f"final loss {trace.records[-1].loss!r}")
    return 0


def _cmd_genetic(args) -> int:
    path = Path(args.config)
    if not path.is_file():
        return _fail(f"config file not found: {path}")
    try:
        cfg = parse_config(path.read_text())
    except ConfigError as exc:
        return _fail(f"{path}: {exc}")
    if cfg.kind != "genetic":
        return _fail(f"{path}: expected a genetic experiment, got kind {cfg.kind!r}")
    if args.workers is not None:
        counts = (1,) if args.workers == 1 else (1, args.workers)
        cfg = replace(cfg, worker_counts=counts)
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    try:
        out_dir, manifest = run_experiment(cfg)
    except RunFailure as exc:
        return _fail(str(exc))
    print(f"wrote {len(manifest['outputs'])} files to {out_dir}")
    print(out_dir / MANIFEST_NAME)
    return 0


def _cmd_gen_data(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.kind == "synthetic":
        data = synth_classification(args.n, args.dims, args.margin, args.seed)
        libsvm_path = out_dir / "synthetic.libsvm"
        write_libsvm(data, libsvm_path)
        csv_path = out_dir / "synthetic.csv"
        export_csv(data, csv_path)
        print(libsvm_path)
        print(csv_path)
        return 0
    samples = synth_glyphs(args.n, args.size, args.noise, args.seed)
    pixels = np.stack([s.pixels for s in samples])
    flat = DenseDataset(pixels.reshape(len(samples), -1), [s.label for s in samples])
    csv_path = out_dir / "glyphs.csv"
    export_csv(flat, csv_path)
    print(csv_path)
    return 0


def _cmd_devices(_args) -> int:
    for name in sorted(BUNDLED_DEVICES):
        dev = BUNDLED_DEVICES[name]
        print(json.dumps({
            "name": dev.name,
            "tdp_watts": dev.tdp_watts,
            "physical_cores": dev.physical_cores,
        }))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlbench",
        description="Benchmark suite for parallel SGD and genetic training.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a JSON-configured experiment")
    p_run.add_argument("config", help="path to the experiment config JSON")
    p_run.set_defaults(func=_cmd_run)

    p_sgd = sub.add_parser("sgd", help="single SGD run with flag shorthand")
    p_sgd.add_argument("--mode", choices=sorted(_MODE_FLAGS), default="serial")
    p_sgd.add_argument("--workers", type=int, default=1)
    p_sgd.add_argument("--epochs", type=int, default=10)
    p_sgd.add_argument("--lr", type=float, default=0.5)
    p_sgd.add_argument("--batch", type=int, default=8)
    p_sgd.add_argument("--seed", type=int, default=0)
    p_sgd.add_argument("--schedule", choices=ASYNC_SCHEDULES, default="fair")
    p_sgd.add_argument("--data", default=None,
                       help="libsvm dataset path (default: bundled tiny set)")
    p_sgd.add_argument("--out", default=_default_out())
    p_sgd.set_defaults(func=_cmd_sgd)

    p_gen = sub.add_parser("genetic", help="run a genetic experiment config")
    p_gen.add_argument("--config", required=True)
    p_gen.add_argument("--workers", type=int, default=None,
                       help="evaluation workers, swept against the serial baseline")
    p_gen.add_argument("--out", default=None)
    p_gen.set_defaults(func=_cmd_genetic)

    p_data = sub.add_parser("gen-data", help="emit a synthetic dataset")
    p_data.add_argument("--kind", choices=("synthetic", "glyphs"), required=True)
    p_data.add_argument("--n", type=int, required=True,
                        help="rows for synthetic, images per class for glyphs")
    p_data.add_argument("--dims", type=int, default=10)
    p_data.add_argument("--margin", type=float, default=2.0)
    p_data.add_argument("--size", type=int, default=8)
    p_data.add_argument("--noise", type=float, default=0.0)
    p_data.add_argument("--seed", type=int, default=0)
    p_data.add_argument("--out", default=_default_out())
    p_data.set_defaults(func=_cmd_gen_data)

    p_dev = sub.add_parser("devices", help="list bundled device specs")
    p_dev.set_defaults(func=_cmd_devices)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
