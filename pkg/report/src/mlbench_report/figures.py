"""One figure builder per report page.

Builders take parsed CSV rows and return a matplotlib Figure; nothing
here reads files or derives new quantities. Axis limits follow the
data with the standard 5% margin, so identical inputs render
identically.
"""

from matplotlib.figure import Figure


def _axes(title: str, xlabel: str, ylabel: str):
    fig = Figure(figsize=(7, 5), layout="constrained")
    ax = fig.add_subplot()
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.margins(0.05)
    ax.grid(True, alpha=0.3)
    return fig, ax


def fitness_curve_figure(rows) -> Figure:
    """Average and best fitness per generation, two series."""
    fig, ax = _axes("Fitness per generation", "generation", "fitness")
    generations = [r[0] for r in rows]
    ax.plot(generations, [r[1] for r in rows], label="average")
    ax.plot(generations, [r[2] for r in rows], label="best")
    ax.legend()
    return fig


def speedup_figure(rows) -> Figure:
    """Measured speedup over the worker counts, with the ideal line."""
    fig, ax = _axes("Parallel speedup", "workers", "speedup")
    workers = [r[0] for r in rows]
    ax.plot(workers, workers, linestyle="--", color="gray", label="ideal")
    ax.plot(workers, [r[2] for r in rows], marker="o", label="measured")
    ax.legend()
    return fig


def efficiency_figure(rows) -> Figure:
    fig, ax = _axes("Parallel efficiency", "workers", "efficiency")
    ax.plot([r[0] for r in rows], [r[3] for r in rows], marker="o")
    return fig


def energy_ratio_figure(rows) -> Figure:
    """Energy relative to the 1-worker run; the y=1 line is break-even."""
    fig, ax = _axes("Energy ratio vs serial", "workers", "energy ratio")
    ax.axhline(1.0, linestyle="--", color="gray", label="serial baseline")
    ax.plot([r[0] for r in rows], [r[5] for r in rows], marker="o", label="measured")
    ax.legend()
    return fig


def loss_vs_workers_figure(points) -> Figure:
    """Final loss against worker count; points are (workers, loss) pairs."""
    fig, ax = _axes("Final loss vs workers", "workers", "final loss")
    points = sorted(points)
    ax.plot([p[0] for p in points], [p[1] for p in points], marker="o")
    return fig
