"""Experiment orchestration: datasets in, CSVs and a manifest out.

Every experiment writes a manifest.json listing the produced files, a
deterministic flag per file, and the resolved config. A failing run
keeps whatever was already written and marks the failure in the
manifest instead of deleting evidence.
"""

import json
import os
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, DatasetSpec, config_dict
from .datasets import (
    DenseDataset,
    load_libsvm,
    scale_features,
    synth_classification,
    synth_glyphs,
)
from .genetic import GeneticConfig, TrainingSet, run_simulation, save_best_model, \
    write_fitness_csv, write_timing_csv
from .neuro_models import Model, model_from_descriptor
from .parallel_sgd import run_sgd, write_run_metadata, write_trace_csv
from .perf_energy import bench_records, measure, write_bench_csv

MANIFEST_NAME = "manifest.json"


class RunFailure(RuntimeError):
    """An experiment stage failed; the manifest records the details."""


def resolve_output_dir(cfg: ExperimentConfig) -> Path:
    if cfg.output_dir is not None:
        return Path(cfg.output_dir)
    env = os.environ.get("MLBENCH_OUT")
    return Path(env) if env else Path("out")


def build_dense(spec: DatasetSpec) -> DenseDataset:
    if spec.kind == "synthetic":
        data = synth_classification(spec.n, spec.dims, spec.margin, spec.seed)
    elif spec.kind == "libsvm":
        data = load_libsvm(spec.path)
    else:
        raise ValueError(f"dataset kind {spec.kind!r} is not a dense dataset")
    return scale_features(data) if spec.scale else data


def build_glyph_arrays(spec: DatasetSpec, n_per_class=None):
    count = n_per_class if n_per_class is not None else spec.n_per_class
    samples = synth_glyphs(count, spec.size, spec.noise, spec.seed)
    images = np.stack([s.pixels for s in samples])
    labels = [s.label for s in samples]
    return images, labels


def glyph_training_set(model: Model, images, labels) -> TrainingSet:
    """Stack glyph images for the model: flat rows for vector-input
    models, raw matrices otherwise, expected vectors one-hot over 10."""
    images = np.asarray(images, dtype=float)
    if model.input_rank == 1:
        inputs = images.reshape(images.shape[0], -1)
    else:
        inputs = images
    expected = np.eye(10)[np.asarray(labels, dtype=int)]
    return TrainingSet(inputs, expected)


class _ManifestWriter:
    def __init__(self, cfg: ExperimentConfig, out_dir: Path):
        self.out_dir = out_dir
        self.data = {
            "schema_version": 1,
            "kind": cfg.kind,
            "config": config_dict(cfg),
            "outputs": [],
            "failure": None,
        }

    def add(self, path: Path, kind: str, deterministic: bool, **extra):
        entry = {"path": path.name, "kind": kind, "deterministic": deterministic}
        entry.update(extra)
        self.data["outputs"].append(entry)

    def write(self):
        path = self.out_dir / MANIFEST_NAME
        with open(path, "w") as fh:
            json.dump(self.data, fh, indent=2)
            fh.write("\n")
        return path


def _run_sgd_experiment(cfg, out_dir, manifest, stage):
    data = build_dense(cfg.dataset)
    worker_times = []
    for n in cfg.worker_counts:
        stage["label"] = f"sgd workers={n}"
        run_cfg = replace(cfg.sgd, workers=n)
        holder = {}

        def work():
            holder["trace"] = run_sgd(data, run_cfg)

        elapsed = measure(work, cfg.repetitions)
        trace = holder["trace"]
        trace_path = out_dir / f"trace_w{n}.csv"
        write_trace_csv(trace, trace_path)
        manifest.add(trace_path, "trace-csv", deterministic=False, workers=n)
        meta_path = out_dir / f"trace_w{n}.meta.json"
        write_run_metadata(trace, run_cfg, meta_path)
        manifest.add(meta_path, "trace-meta", deterministic=False, workers=n)
        worker_times.append((n, elapsed))
    stage["label"] = "sgd bench summary"
    bench_path = out_dir / "bench.csv"
    write_bench_csv(bench_records(worker_times, cfg.device, cfg.energy_model),
                    bench_path)
    manifest.add(bench_path, "bench-csv", deterministic=False)


def _simulate(cfg, model, train, workers):
    holder = {}

    def work():
        holder["result"] = run_simulation(model, train, cfg.genetic,
                                          cfg.generations, workers=workers)

    elapsed = measure(work, cfg.repetitions)
    return holder["result"], elapsed


def _run_genetic_experiment(cfg, out_dir, manifest, stage):
    model = model_from_descriptor(cfg.model)
    images, labels = build_glyph_arrays(cfg.dataset)
    train = glyph_training_set(model, images, labels)
    worker_times = []
    for i, n in enumerate(cfg.worker_counts):
        stage["label"] = f"genetic workers={n}"
        result, elapsed = _simulate(cfg, model, train, n)
        timing_path = out_dir / f"timing_w{n}.csv"
        write_timing_csv(result, timing_path)
        manifest.add(timing_path, "timing-csv", deterministic=False, workers=n)
        if i == 0:
            # fitness and best model replay identically for any worker count
            fitness_path = out_dir / "fitness.csv"
            write_fitness_csv(result, fitness_path)
            manifest.add(fitness_path, "fitness-csv", deterministic=True)
            model_path = out_dir / "best_model.json"
            save_best_model(result, model_path)
            manifest.add(model_path, "model-json", deterministic=True)
        worker_times.append((n, elapsed))
    stage["label"] = "genetic bench summary"
    bench_path = out_dir / "bench.csv"
    write_bench_csv(bench_records(worker_times, cfg.device, cfg.energy_model),
                    bench_path)
    manifest.add(bench_path, "bench-csv", deterministic=False)


def _run_scaling_sweep(cfg, out_dir, manifest, stage):
    model = model_from_descriptor(cfg.model)
    for count in cfg.image_counts:
        images, labels = build_glyph_arrays(cfg.dataset, n_per_class=count // 10)
        train = glyph_training_set(model, images, labels)
        worker_times = []
        for n in cfg.worker_counts:
            stage["label"] = f"scaling-sweep images={count} workers={n}"
            _, elapsed = _simulate(cfg, model, train, n)
            worker_times.append((n, elapsed))
        bench_path = out_dir / f"bench_{count}imgs.csv"
        write_bench_csv(bench_records(worker_times, cfg.device, cfg.energy_model),
                        bench_path)
        manifest.add(bench_path, "bench-csv", deterministic=False,
                     image_count=count)


_RUNNERS = {
    "sgd": _run_sgd_experiment,
    "genetic": _run_genetic_experiment,
    "scaling-sweep": _run_scaling_sweep,
}


def run_experiment(cfg: ExperimentConfig):
    """Run the configured experiment; returns (output dir, manifest dict).

    On failure the manifest is still written with the failing stage and
    error recorded, partial outputs intact, then RunFailure is raised.
    """
    out_dir = resolve_output_dir(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = _ManifestWriter(cfg, out_dir)
    stage = {"label": "setup"}
    try:
        _RUNNERS[cfg.kind](cfg, out_dir, manifest, stage)
    except Exception as exc:
        manifest.data["failure"] = {"stage": stage["label"], "error": str(exc)}
        manifest.write()
        raise RunFailure(f"{stage['label']}: {exc}") from exc
    manifest.write()
    return out_dir, manifest.data
