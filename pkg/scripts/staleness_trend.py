#!/usr/bin/env python3
"""Staleness study: how async gradient delay degrades the final loss.

Two parts. First a 10-seed sweep over both async modes and W in
{1, 4, 16} on the scaled synthetic dataset, printing the mean final
loss table (the quantity the loss-vs-workers figure plots). Then one
full experiment run from configs/staleness_trend.json, which writes
the trace/bench CSVs and the manifest the report tool consumes.

Usage:
    python3 scripts/staleness_trend.py [--config configs/staleness_trend.json] [--seeds 10]
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from mlbench.config import parse_config
from mlbench.datasets import scale_features, synth_classification
from mlbench.parallel_sgd import Mode, SgdConfig, run_sgd
from mlbench.runner import run_experiment

WORKER_COUNTS = (1, 4, 16)


def mean_final_loss(data, mode, workers, seeds):
    finals = []
    for seed in range(seeds):
        cfg = SgdConfig(epochs=50, learning_rate=4.0, batch_size=64,
                        workers=workers, mode=mode, seed=seed)
        finals.append(run_sgd(data, cfg).records[-1].loss)
    return float(np.mean(finals))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default="configs/staleness_trend.json")
    parser.add_argument("--seeds", type=int, default=10)
    args = parser.parse_args()

    data = scale_features(synth_classification(2000, 100, margin=2.0, seed=7))
    print(f"mean final loss over {args.seeds} seeds (50 epochs, lr 4.0, b 64)")
    header = "mode".ljust(18) + "".join(f"W={w}".rjust(10) for w in WORKER_COUNTS)
    print(header)
    for mode in (Mode.SYNC_SHARED, Mode.ASYNC_SHARED, Mode.ASYNC_DISTRIBUTED):
        row = [mean_final_loss(data, mode, w, args.seeds) for w in WORKER_COUNTS]
        print(mode.value.ljust(18) + "".join(f"{v:10.4f}" for v in row))

    cfg = parse_config(Path(args.config).read_text())
    out_dir, manifest = run_experiment(cfg)
    print(f"\nexperiment outputs in {out_dir}")
    for entry in manifest["outputs"]:
        print(f"  {entry['path']}")
    if manifest["failure"]:
        print(f"run failed at {manifest['failure']['stage']}: "
              f"{manifest['failure']['error']}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
