"""Strict readers for the manifest and CSV formats mlbench writes.

Every reader validates the exact documented header before touching the
rows, so a renamed or reordered column fails loudly with the file name
and the header that was expected there.
"""

import csv
import json
from pathlib import Path


class ReportError(ValueError):
    """Input rejected; the message names the offending file."""


BENCH_HEADER = ["workers", "elapsed_s", "speedup", "efficiency", "energy_j", "energy_ratio"]
FITNESS_HEADER = ["generation", "avg_fitness", "best_fitness"]
TRACE_HEADER = ["epoch", "loss", "elapsed_s"]
TIMING_HEADER = ["generation", "elapsed_s"]


def read_manifest(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ReportError(f"{path}: manifest not found")
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ReportError(f"{path}: not valid JSON: {exc}") from None
    for key in ("kind", "outputs"):
        if key not in manifest:
            raise ReportError(f"{path}: manifest is missing the {key!r} field")
    if not isinstance(manifest["outputs"], list):
        raise ReportError(f"{path}: manifest 'outputs' must be a list")
    return manifest


def outputs_of_kind(manifest: dict, kind: str) -> list:
    return [e for e in manifest["outputs"] if e.get("kind") == kind]


def _read_rows(path: Path, header: list) -> list:
    if not path.is_file():
        raise ReportError(f"{path}: file listed in the manifest not found")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != header:
        got = rows[0] if rows else "nothing"
        raise ReportError(
            f"{path}: header {got} does not match the expected "
            f"{','.join(header)}"
        )
    if len(rows) == 1:
        raise ReportError(f"{path}: no data rows")
    try:
        return [[float(cell) for cell in row] for row in rows[1:]]
    except ValueError as exc:
        raise ReportError(f"{path}: non-numeric cell: {exc}") from None


def read_bench(path) -> list:
    """Rows of (workers, elapsed_s, speedup, efficiency, energy_j, energy_ratio)."""
    return _read_rows(Path(path), BENCH_HEADER)


def read_fitness(path) -> list:
    """Rows of (generation, avg_fitness, best_fitness)."""
    return _read_rows(Path(path), FITNESS_HEADER)


def read_trace(path) -> list:
    """Rows of (epoch, loss, elapsed_s)."""
    return _read_rows(Path(path), TRACE_HEADER)
