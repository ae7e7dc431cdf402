"""Report assembly: pick figures for a manifest, render one PDF.

Each requested figure becomes one PDF page. Figure availability is
driven by what the manifest lists: benchmark figures need a bench-csv
entry, the fitness curve needs a fitness-csv entry, and loss-vs-workers
needs per-worker trace-csv entries. Asking for a figure whose data the
manifest does not carry is an error, not a silent skip.
"""

from dataclasses import dataclass
from pathlib import Path

from matplotlib.backends.backend_pdf import PdfPages

from . import figures
from .readers import (
    ReportError,
    outputs_of_kind,
    read_bench,
    read_fitness,
    read_manifest,
    read_trace,
)

FIGURE_NAMES = (
    "fitness-curve",
    "speedup",
    "efficiency",
    "energy-ratio",
    "loss-vs-workers",
)

_BENCH_FIGURES = {
    "speedup": figures.speedup_figure,
    "efficiency": figures.efficiency_figure,
    "energy-ratio": figures.energy_ratio_figure,
}


@dataclass(frozen=True)
class ReportSpec:
    """figures=None renders whatever each manifest has data for."""

    manifests: tuple
    out_path: str
    figures: tuple | None = None

    def __post_init__(self):
        if not self.manifests:
            raise ReportError("at least one manifest is required")
        if self.figures is None:
            return
        if not self.figures:
            raise ReportError("figure list is empty; nothing to render")
        for name in self.figures:
            if name not in FIGURE_NAMES:
                raise ReportError(
                    f"{name!r} is not one of the known figures {list(FIGURE_NAMES)}"
                )


def available_figures(manifest: dict) -> tuple:
    """The subset of FIGURE_NAMES this manifest has data for."""
    names = []
    if outputs_of_kind(manifest, "fitness-csv"):
        names.append("fitness-curve")
    if outputs_of_kind(manifest, "bench-csv"):
        names.extend(_BENCH_FIGURES)
    if outputs_of_kind(manifest, "trace-csv"):
        names.append("loss-vs-workers")
    return tuple(names)


def _loss_points(manifest: dict, base: Path) -> list:
    points = []
    for entry in outputs_of_kind(manifest, "trace-csv"):
        if "workers" not in entry:
            raise ReportError(
                f"{base / entry['path']}: trace entry has no worker count"
            )
        rows = read_trace(base / entry["path"])
        points.append((entry["workers"], rows[-1][1]))
    return points


def _build_figure(name: str, manifest: dict, base: Path, manifest_path: Path):
    if name == "fitness-curve":
        entries = outputs_of_kind(manifest, "fitness-csv")
        if not entries:
            raise ReportError(
                f"{manifest_path}: no fitness-csv output for figure 'fitness-curve'"
            )
        return [figures.fitness_curve_figure(read_fitness(base / e["path"]))
                for e in entries]
    if name in _BENCH_FIGURES:
        entries = outputs_of_kind(manifest, "bench-csv")
        if not entries:
            raise ReportError(
                f"{manifest_path}: no bench-csv output for figure {name!r}"
            )
        return [_BENCH_FIGURES[name](read_bench(base / e["path"]))
                for e in entries]
    entries = outputs_of_kind(manifest, "trace-csv")
    if not entries:
        raise ReportError(
            f"{manifest_path}: no trace-csv outputs for figure 'loss-vs-workers'"
        )
    return [figures.loss_vs_workers_figure(_loss_points(manifest, base))]


def render_report(spec: ReportSpec) -> Path:
    """Write the PDF and return its path; one page per rendered figure."""
    pages = []
    for manifest_path in spec.manifests:
        manifest_path = Path(manifest_path)
        manifest = read_manifest(manifest_path)
        base = manifest_path.parent
        names = spec.figures
        if names is None:
            names = available_figures(manifest)
            if not names:
                raise ReportError(
                    f"{manifest_path}: no renderable outputs in this manifest"
                )
        for name in names:
            pages.extend(_build_figure(name, manifest, base, manifest_path))
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with PdfPages(out) as pdf:
        for page in pages:
            pdf.savefig(page)
    return out
