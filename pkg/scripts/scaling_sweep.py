#!/usr/bin/env python3
"""Parallel efficiency versus training-set size for genetic evaluation.

Runs configs/scaling_sweep.json (a small CNN scored on 50, 200, and
1000 glyph images with 1 and 4 evaluation workers) and prints the
efficiency read from each per-count benchmark CSV. Larger image counts
amortize the pool overhead, so efficiency should rise down the table
on any host; wall-clock speedup above 1 additionally needs real cores.

Usage:
    python3 scripts/scaling_sweep.py [--config configs/scaling_sweep.json]
"""

import argparse
import csv
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from mlbench.config import parse_config
from mlbench.runner import run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default="configs/scaling_sweep.json")
    args = parser.parse_args()

    cfg = parse_config(Path(args.config).read_text())
    out_dir, manifest = run_experiment(cfg)
    if manifest["failure"]:
        print(f"run failed at {manifest['failure']['stage']}: "
              f"{manifest['failure']['error']}", file=sys.stderr)
        return 1

    print("images".rjust(8) + "workers".rjust(9) + "speedup".rjust(10)
          + "efficiency".rjust(12))
    for entry in manifest["outputs"]:
        if entry["kind"] != "bench-csv":
            continue
        with open(out_dir / entry["path"]) as fh:
            for row in csv.DictReader(fh):
                print(f"{entry['image_count']:8d}{int(row['workers']):9d}"
                      f"{float(row['speedup']):10.3f}{float(row['efficiency']):12.3f}")
    print(f"outputs in {out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
