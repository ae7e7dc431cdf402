#!/usr/bin/env python3
"""Evolve a glyph classifier and report the fitness curve endpoints.

Runs the experiment in configs/genetic_glyphs.json (200 generations of
a 64->10 network on 50 noiseless glyph images) and prints where the
average and best fitness ended up, plus the output file list.

Usage:
    python3 scripts/genetic_glyphs.py [--config configs/genetic_glyphs.json]
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
    parser.add_argument("--config", default="configs/genetic_glyphs.json")
    args = parser.parse_args()

    cfg = parse_config(Path(args.config).read_text())
    out_dir, manifest = run_experiment(cfg)
    if manifest["failure"]:
        print(f"run failed at {manifest['failure']['stage']}: "
              f"{manifest['failure']['error']}", file=sys.stderr)
        return 1

    with open(out_dir / "fitness.csv") as fh:
        rows = list(csv.DictReader(fh))
    first, last = rows[0], rows[-1]
    print(f"generation {first['generation']}: "
          f"avg {float(first['avg_fitness']):.3f}, best {float(first['best_fitness']):.3f}")
    print(f"generation {last['generation']}: "
          f"avg {float(last['avg_fitness']):.3f}, best {float(last['best_fitness']):.3f}")
    print(f"outputs in {out_dir}")
    for entry in manifest["outputs"]:
        print(f"  {entry['path']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
