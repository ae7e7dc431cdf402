"""Experiment configuration: strict JSON parsing and canonical output.

Configs are versioned, unknown fields are rejected with the offending
JSON path, and enum errors list the accepted values. serialize_config
emits a canonical form, so parse/serialize round-trips are stable.
"""

import json
from dataclasses import dataclass, field

from .genetic import CROSSOVER_KINDS, FITNESS_KINDS, GeneticConfig
from .neuro_models import model_from_descriptor
from .parallel_sgd import ASYNC_SCHEDULES, Mode, SgdConfig
from .perf_energy import BUNDLED_DEVICES, ENERGY_MODELS, DeviceSpec

SCHEMA_VERSION = 1
EXPERIMENT_KINDS = ("sgd", "genetic", "scaling-sweep")
DATASET_KINDS = ("synthetic", "libsvm", "glyphs")
MODE_VALUES = tuple(m.value for m in Mode)


class ConfigError(ValueError):
    """Configuration rejected; the message starts with the JSON path."""


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _check_fields(obj: dict, path: str, required, optional=()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    for key in required:
        if key not in obj:
            raise ConfigError(f"{_join(path, key)}: missing required field")
    allowed = set(required) | set(optional)
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{_join(path, key)}: unknown field")


def _enum(value, valid, path: str) -> str:
    if value not in valid:
        raise ConfigError(f"{path}: {value!r} is not one of {list(valid)}")
    return value


def _int(value, path: str, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: {value} is below the minimum {minimum}")
    return value


def _num(value, path: str, minimum=None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    value = float(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: {value} is below the minimum {minimum}")
    return value


def _bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true or false, got {value!r}")
    return value


def _str(value, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    return value


@dataclass(frozen=True)
class DatasetSpec:
    kind: str
    n: int = 0
    dims: int = 0
    margin: float = 0.0
    seed: int = 0
    scale: bool = False
    path: str = ""
    n_per_class: int = 0
    size: int = 8
    noise: float = 0.0

    def canonical(self) -> dict:
        if self.kind == "synthetic":
            return {"kind": "synthetic", "n": self.n, "dims": self.dims,
                    "margin": self.margin, "seed": self.seed, "scale": self.scale}
        if self.kind == "libsvm":
            return {"kind": "libsvm", "path": self.path, "scale": self.scale}
        out = {"kind": "glyphs", "size": self.size, "noise": self.noise,
               "seed": self.seed}
        if self.n_per_class:
            out["n_per_class"] = self.n_per_class
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    dataset: DatasetSpec
    worker_counts: tuple
    repetitions: int
    device: DeviceSpec
    energy_model: str
    output_dir: str | None
    sgd: SgdConfig | None = None
    genetic: GeneticConfig | None = None
    generations: int = 0
    model: dict | None = None
    image_counts: tuple = ()


def _parse_dataset(raw, path: str, kind: str) -> DatasetSpec:
    _check_fields(raw, path, required=("kind",), optional=(
        "n", "dims", "margin", "seed", "scale", "path", "n_per_class",
        "size", "noise",
    ))
    ds_kind = _enum(raw["kind"], DATASET_KINDS, _join(path, "kind"))
    if ds_kind == "synthetic":
        _check_fields(raw, path, required=("kind", "n", "dims", "margin", "seed"),
                      optional=("scale",))
        return DatasetSpec(
            kind="synthetic",
            n=_int(raw["n"], _join(path, "n"), minimum=2),
            dims=_int(raw["dims"], _join(path, "dims"), minimum=1),
            margin=_num(raw["margin"], _join(path, "margin"), minimum=0.0),
            seed=_int(raw["seed"], _join(path, "seed")),
            scale=_bool(raw.get("scale", False), _join(path, "scale")),
        )
    if ds_kind == "libsvm":
        _check_fields(raw, path, required=("kind", "path"), optional=("scale",))
        return DatasetSpec(
            kind="libsvm",
            path=_str(raw["path"], _join(path, "path")),
            scale=_bool(raw.get("scale", False), _join(path, "scale")),
        )
    # glyphs: scaling sweeps take the image count from image_counts instead
    required = ("kind", "seed") if kind == "scaling-sweep" else ("kind", "seed", "n_per_class")
    optional = ("size", "noise", "n_per_class") if kind == "scaling-sweep" else ("size", "noise")
    _check_fields(raw, path, required=required, optional=optional)
    if kind == "scaling-sweep" and "n_per_class" in raw:
        raise ConfigError(
            f"{_join(path, 'n_per_class')}: scaling-sweep derives counts "
            "from image_counts; remove this field"
        )
    return DatasetSpec(
        kind="glyphs",
        n_per_class=_int(raw.get("n_per_class", 0), _join(path, "n_per_class"),
                         minimum=0 if kind == "scaling-sweep" else 1),
        size=_int(raw.get("size", 8), _join(path, "size"), minimum=8),
        noise=_num(raw.get("noise", 0.0), _join(path, "noise"), minimum=0.0),
        seed=_int(raw["seed"], _join(path, "seed")),
    )


def _parse_sgd(raw, path: str) -> SgdConfig:
    _check_fields(raw, path, required=(
        "mode", "epochs", "learning_rate", "batch_size", "seed",
    ), optional=("async_schedule",))
    mode = _enum(raw["mode"], MODE_VALUES, _join(path, "mode"))
    schedule = raw.get("async_schedule", "fair")
    _enum(schedule, ASYNC_SCHEDULES, _join(path, "async_schedule"))
    try:
        return SgdConfig(
            epochs=_int(raw["epochs"], _join(path, "epochs"), minimum=1),
            learning_rate=_num(raw["learning_rate"], _join(path, "learning_rate"),
                               minimum=0.0),
            batch_size=_int(raw["batch_size"], _join(path, "batch_size"), minimum=1),
            workers=1,
            mode=Mode(mode),
            seed=_int(raw["seed"], _join(path, "seed")),
            async_schedule=schedule,
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _parse_genetic(raw, path: str) -> tuple:
    _check_fields(raw, path, required=(
        "mutation_rate", "mutation_size", "generation_size", "elitism",
        "offset_size", "crossover_kind", "fitness_kind", "seed", "generations",
    ))
    _enum(raw["crossover_kind"], CROSSOVER_KINDS, _join(path, "crossover_kind"))
    _enum(raw["fitness_kind"], FITNESS_KINDS, _join(path, "fitness_kind"))
    generations = _int(raw["generations"], _join(path, "generations"), minimum=0)
    try:
        cfg = GeneticConfig(
            mutation_rate=_num(raw["mutation_rate"], _join(path, "mutation_rate")),
            mutation_size=_num(raw["mutation_size"], _join(path, "mutation_size")),
            generation_size=_int(raw["generation_size"], _join(path, "generation_size")),
            elitism=_num(raw["elitism"], _join(path, "elitism")),
            offset_size=_num(raw["offset_size"], _join(path, "offset_size")),
            crossover_kind=raw["crossover_kind"],
            fitness_kind=raw["fitness_kind"],
            seed=_int(raw["seed"], _join(path, "seed")),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cfg, generations


def _parse_device(raw, path: str) -> DeviceSpec:
    if isinstance(raw, str):
        if raw not in BUNDLED_DEVICES:
            raise ConfigError(
                f"{path}: {raw!r} is not one of {sorted(BUNDLED_DEVICES)}"
            )
        return BUNDLED_DEVICES[raw]
    _check_fields(raw, path, required=("name", "tdp_watts", "physical_cores"))
    try:
        return DeviceSpec(
            name=_str(raw["name"], _join(path, "name")),
            tdp_watts=_num(raw["tdp_watts"], _join(path, "tdp_watts")),
            physical_cores=_int(raw["physical_cores"], _join(path, "physical_cores")),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _parse_worker_counts(raw, path: str) -> tuple:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{path}: expected a nonempty list of worker counts")
    counts = [_int(v, f"{path}[{i}]", minimum=1) for i, v in enumerate(raw)]
    if sorted(set(counts)) != counts:
        raise ConfigError(f"{path}: counts must be ascending and unique")
    if counts[0] != 1:
        raise ConfigError(f"{path}: sweeps need the 1-worker baseline first")
    return tuple(counts)


def _parse_model(raw, path: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a model descriptor object")
    try:
        model_from_descriptor(raw)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return raw


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None

    _check_fields(raw, "", required=("schema_version", "kind", "dataset",
                                     "worker_counts", "device"),
                  optional=("sgd", "genetic", "model", "repetitions",
                            "energy_model", "output_dir", "image_counts"))
    version = _int(raw["schema_version"], "schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version: {version} is not the supported version {SCHEMA_VERSION}"
        )
    kind = _enum(raw["kind"], EXPERIMENT_KINDS, "kind")

    needs = {"sgd": ("sgd",), "genetic": ("genetic", "model"),
             "scaling-sweep": ("genetic", "model", "image_counts")}[kind]
    forbids = {"sgd": ("genetic", "model", "image_counts"),
               "genetic": ("sgd", "image_counts"),
               "scaling-sweep": ("sgd",)}[kind]
    for key in needs:
        if key not in raw:
            raise ConfigError(f"{key}: missing required field for kind {kind!r}")
    for key in forbids:
        if key in raw:
            raise ConfigError(f"{key}: not allowed for kind {kind!r}")

    dataset = _parse_dataset(raw["dataset"], "dataset", kind)
    if kind == "sgd" and dataset.kind == "glyphs":
        raise ConfigError("dataset.kind: 'glyphs' is for genetic experiments")
    if kind != "sgd" and dataset.kind != "glyphs":
        raise ConfigError(f"dataset.kind: kind {kind!r} needs a 'glyphs' dataset")

    worker_counts = _parse_worker_counts(raw["worker_counts"], "worker_counts")
    repetitions = _int(raw.get("repetitions", 1), "repetitions", minimum=1)
    device = _parse_device(raw["device"], "device")
    energy_model = _enum(raw.get("energy_model", "per-core"), ENERGY_MODELS,
                         "energy_model")
    output_dir = raw.get("output_dir")
    if output_dir is not None:
        output_dir = _str(output_dir, "output_dir")

    sgd = genetic = model = None
    generations = 0
    image_counts = ()
    if kind == "sgd":
        sgd = _parse_sgd(raw["sgd"], "sgd")
        if sgd.mode is Mode.SERIAL and worker_counts != (1,):
            raise ConfigError(
                "worker_counts: Serial mode only supports the single count [1]"
            )
    else:
        genetic, generations = _parse_genetic(raw["genetic"], "genetic")
        model = _parse_model(raw["model"], "model")
    if kind == "scaling-sweep":
        counts = raw["image_counts"]
        if not isinstance(counts, list) or not counts:
            raise ConfigError("image_counts: expected a nonempty list")
        vals = [_int(v, f"image_counts[{i}]", minimum=10)
                for i, v in enumerate(counts)]
        if sorted(set(vals)) != vals:
            raise ConfigError("image_counts: counts must be ascending and unique")
        for i, v in enumerate(vals):
            if v % 10 != 0:
                raise ConfigError(
                    f"image_counts[{i}]: {v} must be divisible by the 10 classes"
                )
        image_counts = tuple(vals)

    return ExperimentConfig(
        kind=kind,
        dataset=dataset,
        worker_counts=worker_counts,
        repetitions=repetitions,
        device=device,
        energy_model=energy_model,
        output_dir=output_dir,
        sgd=sgd,
        genetic=genetic,
        generations=generations,
        model=model,
        image_counts=image_counts,
    )


def config_dict(cfg: ExperimentConfig) -> dict:
    """Canonical JSON-ready form of a parsed config."""
    out = {
        "schema_version": SCHEMA_VERSION,
        "kind": cfg.kind,
        "dataset": cfg.dataset.canonical(),
        "worker_counts": list(cfg.worker_counts),
        "repetitions": cfg.repetitions,
        "device": {
            "name": cfg.device.name,
            "tdp_watts": cfg.device.tdp_watts,
            "physical_cores": cfg.device.physical_cores,
        },
        "energy_model": cfg.energy_model,
    }
    if cfg.output_dir is not None:
        out["output_dir"] = cfg.output_dir
    if cfg.sgd is not None:
        out["sgd"] = {
            "mode": cfg.sgd.mode.value,
            "epochs": cfg.sgd.epochs,
            "learning_rate": cfg.sgd.learning_rate,
            "batch_size": cfg.sgd.batch_size,
            "seed": cfg.sgd.seed,
            "async_schedule": cfg.sgd.async_schedule,
        }
    if cfg.genetic is not None:
        g = cfg.genetic
        out["genetic"] = {
            "mutation_rate": g.mutation_rate,
            "mutation_size": g.mutation_size,
            "generation_size": g.generation_size,
            "elitism": g.elitism,
            "offset_size": g.offset_size,
            "crossover_kind": g.crossover_kind,
            "fitness_kind": g.fitness_kind,
            "seed": g.seed,
            "generations": cfg.generations,
        }
    if cfg.model is not None:
        out["model"] = cfg.model
    if cfg.image_counts:
        out["image_counts"] = list(cfg.image_counts)
    return out


def serialize_config(cfg: ExperimentConfig) -> str:
    return json.dumps(config_dict(cfg), indent=2, sort_keys=True) + "\n"
