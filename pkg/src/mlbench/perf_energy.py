"""Wall-clock measurement, speedup accounting, and TDP-based energy.

No power instrumentation happens here: energy is estimated from elapsed
time and a device's thermal design power, either for the whole device or
as a per-core share scaled by the workers in use.
"""

import json
import statistics
import time
from dataclasses import dataclass

ENERGY_MODELS = ("whole-device", "per-core")


@dataclass(frozen=True)
class DeviceSpec:
    name: str
    tdp_watts: float
    physical_cores: int

    def __post_init__(self):
        if self.tdp_watts <= 0:
            raise ValueError(f"tdp_watts {self.tdp_watts} must be positive")
        if self.physical_cores < 1:
            raise ValueError(f"physical_cores {self.physical_cores} must be >= 1")

    def to_json(self) -> str:
        return json.dumps({
            "name": self.name,
            "tdp_watts": self.tdp_watts,
            "physical_cores": self.physical_cores,
        })

    @classmethod
    def from_json(cls, text: str) -> "DeviceSpec":
        raw = json.loads(text)
        extra = set(raw) - {"name", "tdp_watts", "physical_cores"}
        if extra:
            raise ValueError(f"unknown device fields: {sorted(extra)}")
        return cls(str(raw["name"]), float(raw["tdp_watts"]), int(raw["physical_cores"]))


BUNDLED_DEVICES = {
    "xeon-gold-6126": DeviceSpec("xeon-gold-6126", 125.0, 12),
    "xeon-gold-6342": DeviceSpec("xeon-gold-6342", 230.0, 24),
    "a100": DeviceSpec("a100", 400.0, 108),
}


def measure(run, repetitions: int, clock=time.perf_counter) -> float:
    """Median wall-clock duration of `run` over `repetitions` timed calls.

    One untimed warm-up call precedes the measurements so caches and lazy
    imports do not land in the first sample.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions {repetitions} must be >= 1")
    run()
    durations = []
    for _ in range(repetitions):
        t0 = clock()
        run()
        durations.append(clock() - t0)
    return statistics.median(durations)


def speedup_efficiency(t1: float, tn: float, n: int):
    """(speedup, efficiency) of an n-worker time against the 1-worker time."""
    if t1 <= 0 or tn <= 0:
        raise ValueError(f"times must be positive, got t1={t1}, tn={tn}")
    if n < 1:
        raise ValueError(f"worker count {n} must be >= 1")
    speedup = t1 / tn
    return speedup, speedup / n


def device_energy(elapsed_s: float, device: DeviceSpec) -> float:
    """Whole-device energy estimate: seconds times TDP watts."""
    if elapsed_s < 0:
        raise ValueError(f"elapsed_s {elapsed_s} must be >= 0")
    return elapsed_s * device.tdp_watts


def per_core_energy(elapsed_s: float, device: DeviceSpec, workers: int) -> float:
    """Per-core TDP share: each worker draws tdp/physical_cores watts."""
    if elapsed_s < 0:
        raise ValueError(f"elapsed_s {elapsed_s} must be >= 0")
    if workers < 1:
        raise ValueError(f"workers {workers} must be >= 1")
    return elapsed_s * device.tdp_watts * workers / device.physical_cores


def per_core_energy_ratio(t1: float, tn: float, n: int) -> float:
    """Energy of n workers relative to serial under the per-core model:
    (n * tn) / t1, i.e. n / speedup."""
    if t1 <= 0 or tn <= 0:
        raise ValueError(f"times must be positive, got t1={t1}, tn={tn}")
    if n < 1:
        raise ValueError(f"worker count {n} must be >= 1")
    return n * tn / t1


@dataclass(frozen=True)
class BenchRecord:
    workers: int
    elapsed_s: float
    speedup: float
    efficiency: float
    energy_j: float
    energy_ratio: float


def bench_records(worker_times, device: DeviceSpec, energy_model: str = "per-core"):
    """Build one BenchRecord per (workers, elapsed) pair.

    The 1-worker entry of the sweep is the baseline for speedup and
    energy ratio; it must be present.
    """
    if energy_model not in ENERGY_MODELS:
        raise ValueError(f"energy_model {energy_model!r} not one of {ENERGY_MODELS}")
    times = dict(worker_times)
    if 1 not in times:
        raise ValueError("sweep needs a 1-worker baseline entry")
    t1 = times[1]

    def energy(n, tn):
        if energy_model == "per-core":
            return per_core_energy(tn, device, n)
        return device_energy(tn, device)

    base_energy = energy(1, t1)
    records = []
    for n, tn in worker_times:
        speedup, efficiency = speedup_efficiency(t1, tn, n)
        e = energy(n, tn)
        records.append(BenchRecord(
            workers=n,
            elapsed_s=tn,
            speedup=speedup,
            efficiency=efficiency,
            energy_j=e,
            energy_ratio=e / base_energy,
        ))
    return records


def write_bench_csv(records, path) -> None:
    with open(path, "w") as fh:
        fh.write("workers,elapsed_s,speedup,efficiency,energy_j,energy_ratio\n")
        for r in records:
            fh.write(
                f"{r.workers},{r.elapsed_s!r},{r.speedup!r},"
                f"{r.efficiency!r},{r.energy_j!r},{r.energy_ratio!r}\n"
            )
