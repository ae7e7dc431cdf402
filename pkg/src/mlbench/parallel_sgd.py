"""Mini-batch SGD under four parallel execution strategies.

Serial baseline plus: synchronous shared-memory (the batch linear algebra
is chunked across a thread pool with a fixed-order reduction, so the
update sequence is serial-identical), asynchronous shared-memory (workers
snapshot and update one shared model under a single lock), and the two
parameter-server modes simulated with in-process actors connected by
queues (synchronous lockstep aggregation and asynchronous apply-on-arrival
with staleness tracking).

Every mode applies exactly T * ceil(n/b) updates. Worker w draws batches
from its own stream seeded as (seed, w); the serial baseline uses worker
stream 0, which anchors the W=1 degenerate-equivalence of every mode.
"""

from __future__ import annotations

import enum
import json
import queue
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .datasets import DenseDataset, MiniBatch
from .logreg import (
    Gradient,
    LogisticModel,
    batch_gradient,
    batch_loss,
    full_batch,
    sigmoid,
)

__all__ = [
    "Mode",
    "SgdConfig",
    "GradientMessage",
    "ModelMessage",
    "TraceRecord",
    "MessageStats",
    "TrainTrace",
    "iterations_per_epoch",
    "full_loss",
    "run_sgd",
    "sgd_serial",
    "sgd_sync_shared",
    "sgd_async_shared",
    "sgd_sync_server",
    "sgd_async_server",
    "write_trace_csv",
    "write_run_metadata",
]


class Mode(enum.Enum):
    SERIAL = "Serial"
    SYNC_SHARED = "SyncShared"
    ASYNC_SHARED = "AsyncShared"
    SYNC_DISTRIBUTED = "SyncDistributed"
    ASYNC_DISTRIBUTED = "AsyncDistributed"


ASYNC_SCHEDULES = ("fair", "os")


@dataclass(frozen=True)
class SgdConfig:
    """Hyperparameters and execution strategy for one training run.

    async_schedule selects how the AsyncShared worker turns interleave:
    "fair" rotates snapshot/apply turns round-robin across workers (the
    steady-state interleaving of W truly concurrent workers, reproducible
    on any host), "os" lets the operating system schedule freely. Ignored
    by the other modes.
    """

    epochs: int
    learning_rate: float
    batch_size: int
    workers: int
    mode: Mode
    seed: int
    async_schedule: str = "fair"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not (np.isfinite(self.learning_rate) and self.learning_rate >= 0):
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.mode is Mode.SERIAL and self.workers != 1:
            raise ValueError("Serial mode requires workers == 1")
        if self.async_schedule not in ASYNC_SCHEDULES:
            raise ValueError(
                f"async_schedule must be one of {ASYNC_SCHEDULES}, got {self.async_schedule!r}"
            )


@dataclass(frozen=True)
class GradientMessage:
    worker_id: int
    gradient: Gradient
    model_version: int


@dataclass(frozen=True)
class ModelMessage:
    weights: np.ndarray
    bias: float
    model_version: int


@dataclass(frozen=True)
class _Shutdown:
    # carries the final model so sync workers observe the last version
    weights: np.ndarray
    bias: float
    model_version: int


@dataclass(frozen=True)
class _WorkerFailed:
    worker_id: int
    error: Exception


@dataclass(frozen=True)
class TraceRecord:
    epoch: int
    loss: float
    elapsed_s: float


@dataclass(frozen=True)
class MessageStats:
    """Conservation counters for the server modes."""

    gradients_sent: int
    gradients_consumed: int
    models_sent: int
    models_received: int


@dataclass(frozen=True)
class TrainTrace:
    records: list
    final_model: LogisticModel
    staleness: list = field(default_factory=list)
    message_stats: MessageStats | None = None
    update_count: int = 0
    observed_versions: dict | None = None


def iterations_per_epoch(n_rows: int, batch_size: int) -> int:
    return -(-n_rows // batch_size)


def full_loss(model: LogisticModel, data: DenseDataset) -> float:
    """Cross-entropy over the whole training set (trace evaluation)."""
    return batch_loss(model, data, full_batch(data))


def _start_model(data: DenseDataset, config: SgdConfig, model0: LogisticModel | None):
    if config.batch_size > data.n_rows:
        raise ValueError(
            f"batch_size {config.batch_size} exceeds the dataset "
            f"({data.n_rows} rows)"
        )
    if model0 is None:
        return np.zeros(data.n_dims), 0.0
    if model0.weights.shape[0] != data.n_dims:
        raise ValueError(
            f"model has {model0.weights.shape[0]} weights for {data.n_dims} features"
        )
    return model0.weights.copy(), model0.bias


def _finish_trace(data, snapshots, staleness=(), stats=None, updates=0, versions=None):
    """Score the per-epoch model snapshots; loss evaluation stays untimed."""
    records = [
        TraceRecord(epoch, full_loss(LogisticModel(w, b), data), elapsed)
        for epoch, w, b, elapsed in snapshots
    ]
    _, last_w, last_b, _ = snapshots[-1]
    return TrainTrace(
        records=records,
        final_model=LogisticModel(last_w, last_b),
        staleness=list(staleness),
        message_stats=stats,
        update_count=updates,
        observed_versions=versions,
    )


def run_sgd(data: DenseDataset, config: SgdConfig, model0: LogisticModel | None = None) -> TrainTrace:
    """Dispatch to the configured execution strategy."""
    runner = {
        Mode.SERIAL: sgd_serial,
        Mode.SYNC_SHARED: sgd_sync_shared,
        Mode.ASYNC_SHARED: sgd_async_shared,
        Mode.SYNC_DISTRIBUTED: sgd_sync_server,
        Mode.ASYNC_DISTRIBUTED: sgd_async_server,
    }[config.mode]
    return runner(data, config, model0)


def sgd_serial(data: DenseDataset, config: SgdConfig, model0: LogisticModel | None = None) -> TrainTrace:
    if config.mode is not Mode.SERIAL:
        raise ValueError(f"expected Serial mode, got {config.mode.value}")
    w, bias = _start_model(data, config, model0)
    rng = np.random.default_rng([config.seed, 0])
    ipe = iterations_per_epoch(data.n_rows, config.batch_size)
    lr = config.learning_rate
    snapshots = []
    updates = 0
    t0 = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        for _ in range(ipe):
            idx = rng.choice(data.n_rows, size=config.batch_size, replace=False)
            grad = batch_gradient(LogisticModel(w, bias), data, MiniBatch(idx))
            w = w - lr * grad.weights
            bias = bias - lr * grad.bias
            updates += 1
        snapshots.append((epoch, w.copy(), bias, time.perf_counter() - t0))
    return _finish_trace(data, snapshots, updates=updates)


def _chunk_ranges(batch_size: int, workers: int):
    bounds = np.linspace(0, batch_size, workers + 1).astype(int)
    return [(int(bounds[i]), int(bounds[i + 1])) for i in range(workers)]


def sgd_sync_shared(data: DenseDataset, config: SgdConfig, model0: LogisticModel | None = None) -> TrainTrace:
    """Serial update sequence; each batch's linear algebra fans out over W threads.

    Chunks are contiguous index ranges of the batch and partial results
    are combined in ascending chunk order, so any W produces the same
    update sequence up to float reassociation (bitwise for W=1).
    """
    if config.mode is not Mode.SYNC_SHARED:
        raise ValueError(f"expected SyncShared mode, got {config.mode.value}")
    w, bias = _start_model(data, config, model0)
    rng = np.random.default_rng([config.seed, 0])
    ipe = iterations_per_epoch(data.n_rows, config.batch_size)
    lr = config.learning_rate
    b = config.batch_size
    chunks = [c for c in _chunk_ranges(b, config.workers) if c[0] < c[1]]
    features, labels = data.features, data.labels
    snapshots = []
    updates = 0

    def partial_sums(rows, y, weights, bias_val):
        # per-chunk gradient numerator: X_c^T r_c and sum(r_c)
        residual = sigmoid(rows @ weights + bias_val) - y
        return rows.T @ residual, residual.sum()

    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        for epoch in range(1, config.epochs + 1):
            for _ in range(ipe):
                idx = rng.choice(data.n_rows, size=b, replace=False)
                rows = features[idx]
                y = labels[idx]
                parts = list(
                    pool.map(
                        partial_sums,
                        [rows[lo:hi] for lo, hi in chunks],
                        [y[lo:hi] for lo, hi in chunks],
                        [w] * len(chunks),
                        [bias] * len(chunks),
                    )
                )
                acc_w, acc_b = parts[0]
                for pw, pb in parts[1:]:
                    acc_w = acc_w + pw
                    acc_b = acc_b + pb
                w = w - lr * (acc_w / b)
                bias = bias - lr * (acc_b / b)
                updates += 1
            snapshots.append((epoch, w.copy(), bias, time.perf_counter() - t0))
    return _finish_trace(data, snapshots, updates=updates)


class _TurnRing:
    """Round-robin turn coordinator for the fair async-shared schedule."""

    def __init__(self, worker_ids):
        self.active = list(worker_ids)
        self.pos = 0
        self.cond = threading.Condition()

    def wait_turn(self, worker_id: int):
        with self.cond:
            while self.active and self.active[self.pos] != worker_id:
                self.cond.wait()

    def advance(self, worker_id: int, leave: bool = False):
        with self.cond:
            i = self.active.index(worker_id)
            if leave:
                self.active.pop(i)
                self.pos = i % len(self.active) if self.active else 0
            else:
                self.pos = (i + 1) % len(self.active)
            self.cond.notify_all()

    def abandon(self, worker_id: int):
        # drop a failed worker without blocking the ring
        with self.cond:
            if worker_id in self.active:
                i = self.active.index(worker_id)
                self.active.pop(i)
                if self.active:
                    if self.pos > i:
                        self.pos -= 1
                    self.pos %= len(self.active)
                else:
                    self.pos = 0
                self.cond.notify_all()


def sgd_async_shared(data: DenseDataset, config: SgdConfig, model0: LogisticModel | None = None) -> TrainTrace:
    """Hogwild-style asynchronous workers over one lock-protected model.

    Iterations are assigned round-robin to W workers. Each worker
    snapshots under the lock, computes a gradient from its own seeded
    batch stream, and applies the update under the same lock. Staleness
    (updates applied between snapshot and apply) is recorded per update.
    """
    if config.mode is not Mode.ASYNC_SHARED:
        raise ValueError(f"expected AsyncShared mode, got {config.mode.value}")
    w, bias = _start_model(data, config, model0)
    ipe = iterations_per_epoch(data.n_rows, config.batch_size)
    total = config.epochs * ipe
    lr = config.learning_rate
    W = config.workers
    counts = [len(range(wid, total, W)) for wid in range(W)]

    lock = threading.Lock()
    state = {"w": w, "bias": bias, "updates": 0}
    snapshots = []
    staleness = []
    errors = []
    t0 = time.perf_counter()

    def apply_update(grad, seen_version):
        # caller holds the lock
        state["w"] = state["w"] - lr * grad.weights
        state["bias"] = state["bias"] - lr * grad.bias
        staleness.append(state["updates"] - seen_version)
        state["updates"] += 1
        if state["updates"] % ipe == 0:
            epoch = state["updates"] // ipe
            snapshots.append(
                (epoch, state["w"].copy(), state["bias"], time.perf_counter() - t0)
            )

    def snapshot():
        # caller holds the lock
        return state["w"], state["bias"], state["updates"]

    def worker_os(wid: int):
        rng = np.random.default_rng([config.seed, wid])
        try:
            for _ in range(counts[wid]):
                with lock:
                    ws, bs, version = snapshot()
                idx = rng.choice(data.n_rows, size=config.batch_size, replace=False)
                grad = batch_gradient(LogisticModel(ws, bs), data, MiniBatch(idx))
                with lock:
                    apply_update(grad, version)
        except BaseException as exc:  # surface worker faults to the caller
            errors.append((wid, exc))

    ring = _TurnRing([wid for wid in range(W) if counts[wid] > 0])

    def worker_fair(wid: int):
        if counts[wid] == 0:
            return  # not a ring member, nothing to apply
        rng = np.random.default_rng([config.seed, wid])
        pending = None
        try:
            for _ in range(counts[wid]):
                ring.wait_turn(wid)
                with lock:
                    if pending is not None:
                        apply_update(*pending)
                    ws, bs, version = snapshot()
                ring.advance(wid)
                idx = rng.choice(data.n_rows, size=config.batch_size, replace=False)
                grad = batch_gradient(LogisticModel(ws, bs), data, MiniBatch(idx))
                pending = (grad, version)
            ring.wait_turn(wid)
            with lock:
                apply_update(*pending)
            ring.advance(wid, leave=True)
        except BaseException as exc:
            errors.append((wid, exc))
            ring.abandon(wid)

    body = worker_fair if config.async_schedule == "fair" else worker_os
    threads = [
        threading.Thread(target=body, args=(wid,), name=f"sgd-worker-{wid}")
        for wid in range(W)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        wid, exc = errors[0]
        raise RuntimeError(f"async worker {wid} failed: {exc}") from exc
    return _finish_trace(
        data, snapshots, staleness=staleness, updates=state["updates"]
    )


def _make_shards(n_rows: int, workers: int):
    return np.array_split(np.arange(n_rows), workers)


def _server_worker(wid, shard, inbox, server_q, data, per_draw, seed, observed):
    """Actor body shared by both server modes: reply with one gradient per model."""
    rng = np.random.default_rng([seed, wid])
    try:
        while True:
            msg = inbox.get()
            if isinstance(msg, _Shutdown):
                observed[wid].append(msg.model_version)
                return
            observed[wid].append(msg.model_version)
            if per_draw > shard.size:
                raise ValueError(
                    f"worker {wid}: batch share {per_draw} exceeds shard size {shard.size}"
                )
            idx = shard[rng.choice(shard.size, size=per_draw, replace=False)]
            grad = batch_gradient(
                LogisticModel(msg.weights, msg.bias), data, MiniBatch(idx)
            )
            server_q.put(GradientMessage(wid, grad, msg.model_version))
    except BaseException as exc:
        server_q.put(_WorkerFailed(wid, exc))


def _drain_and_raise(failure, inboxes, threads, w, bias):
    for inbox in inboxes:
        inbox.put(_Shutdown(w, bias, -1))
    for t in threads:
        t.join()
    raise RuntimeError(
        f"worker {failure.worker_id} failed: {failure.error}"
    ) from failure.error


def sgd_sync_server(data: DenseDataset, config: SgdConfig, model0: LogisticModel | None = None) -> TrainTrace:
    """Parameter-server lockstep: W shard-bound actors each contribute b/W samples.

    Per iteration the server waits for all W gradients, averages them in
    worker-id order, applies one update, and broadcasts the new model.
    Every worker observes the version sequence 0,1,...,total.
    """
    if config.mode is not Mode.SYNC_DISTRIBUTED:
        raise ValueError(f"expected SyncDistributed mode, got {config.mode.value}")
    W = config.workers
    if config.batch_size % W != 0:
        raise ValueError(
            f"batch_size {config.batch_size} not divisible by {W} workers"
        )
    per_draw = config.batch_size // W
    w, bias = _start_model(data, config, model0)
    ipe = iterations_per_epoch(data.n_rows, config.batch_size)
    total = config.epochs * ipe
    lr = config.learning_rate
    shards = _make_shards(data.n_rows, W)

    server_q = queue.Queue()
    inboxes = [queue.Queue() for _ in range(W)]
    observed = {wid: [] for wid in range(W)}
    threads = [
        threading.Thread(
            target=_server_worker,
            args=(wid, shards[wid], inboxes[wid], server_q, data, per_draw, config.seed, observed),
            name=f"sgd-node-{wid}",
        )
        for wid in range(W)
    ]
    for t in threads:
        t.start()

    models_sent = 0
    grads_consumed = 0
    snapshots = []
    t0 = time.perf_counter()
    for inbox in inboxes:
        inbox.put(ModelMessage(w.copy(), bias, 0))
        models_sent += 1
    for version in range(1, total + 1):
        replies = []
        for _ in range(W):
            msg = server_q.get()
            if isinstance(msg, _WorkerFailed):
                _drain_and_raise(msg, inboxes, threads, w, bias)
            replies.append(msg)
        replies.sort(key=lambda m: m.worker_id)
        grads_consumed += W
        acc_w = replies[0].gradient.weights.copy()
        acc_b = replies[0].gradient.bias
        for m in replies[1:]:
            acc_w += m.gradient.weights
            acc_b += m.gradient.bias
        w = w - lr * (acc_w / W)
        bias = bias - lr * (acc_b / W)
        if version % ipe == 0:
            snapshots.append(
                (version // ipe, w.copy(), bias, time.perf_counter() - t0)
            )
        if version < total:
            for inbox in inboxes:
                inbox.put(ModelMessage(w.copy(), bias, version))
                models_sent += 1
        else:
            for inbox in inboxes:
                inbox.put(_Shutdown(w.copy(), bias, version))
    for t in threads:
        t.join()
    stats = MessageStats(
        gradients_sent=grads_consumed,
        gradients_consumed=grads_consumed,
        models_sent=models_sent,
        models_received=sum(max(len(v) - 1, 0) for v in observed.values()),
    )
    return _finish_trace(
        data, snapshots, stats=stats, updates=total, versions=observed
    )


def sgd_async_server(data: DenseDataset, config: SgdConfig, model0: LogisticModel | None = None) -> TrainTrace:
    """Parameter-server apply-on-arrival: updates land as gradients arrive.

    The server replies only to the sender of each gradient and stops
    handing out models once applied+outstanding reaches the budget, so
    every sent gradient is applied (no drops) and each worker receives
    exactly one shutdown. Staleness per update is version-at-apply minus
    the version the worker computed against.
    """
    if config.mode is not Mode.ASYNC_DISTRIBUTED:
        raise ValueError(f"expected AsyncDistributed mode, got {config.mode.value}")
    W = config.workers
    w, bias = _start_model(data, config, model0)
    ipe = iterations_per_epoch(data.n_rows, config.batch_size)
    total = config.epochs * ipe
    lr = config.learning_rate
    shards = _make_shards(data.n_rows, W)
    if config.batch_size > min(s.size for s in shards):
        raise ValueError(
            f"batch_size {config.batch_size} exceeds the smallest shard "
            f"({min(s.size for s in shards)} rows) at {W} workers"
        )

    server_q = queue.Queue()
    inboxes = [queue.Queue() for _ in range(W)]
    observed = {wid: [] for wid in range(W)}
    threads = [
        threading.Thread(
            target=_server_worker,
            args=(wid, shards[wid], inboxes[wid], server_q, data, config.batch_size, config.seed, observed),
            name=f"sgd-node-{wid}",
        )
        for wid in range(W)
    ]
    for t in threads:
        t.start()

    staleness = []
    snapshots = []
    models_sent = 0
    grads_consumed = 0
    version = 0
    outstanding = 0
    t0 = time.perf_counter()
    for wid in range(W):
        if wid < total:
            inboxes[wid].put(ModelMessage(w.copy(), bias, 0))
            models_sent += 1
            outstanding += 1
        else:
            inboxes[wid].put(_Shutdown(w.copy(), bias, 0))
    updates = 0
    while updates < total:
        msg = server_q.get()
        if isinstance(msg, _WorkerFailed):
            _drain_and_raise(msg, inboxes, threads, w, bias)
        staleness.append(version - msg.model_version)
        w = w - lr * msg.gradient.weights
        bias = bias - lr * msg.gradient.bias
        updates += 1
        version = updates
        outstanding -= 1
        grads_consumed += 1
        if updates % ipe == 0:
            snapshots.append(
                (updates // ipe, w.copy(), bias, time.perf_counter() - t0)
            )
        if updates + outstanding < total:
            inboxes[msg.worker_id].put(ModelMessage(w.copy(), bias, version))
            models_sent += 1
            outstanding += 1
        else:
            inboxes[msg.worker_id].put(_Shutdown(w.copy(), bias, version))
    for t in threads:
        t.join()
    stats = MessageStats(
        gradients_sent=grads_consumed,
        gradients_consumed=grads_consumed,
        models_sent=models_sent,
        models_received=sum(max(len(v) - 1, 0) for v in observed.values()),
    )
    return _finish_trace(
        data, snapshots, staleness=staleness, stats=stats, updates=updates, versions=observed
    )


def write_trace_csv(trace: TrainTrace, path) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("epoch,loss,elapsed_s\n")
        for rec in trace.records:
            fh.write(f"{rec.epoch},{rec.loss!r},{rec.elapsed_s!r}\n")


def write_run_metadata(trace: TrainTrace, config: SgdConfig, path) -> None:
    meta = {
        "mode": config.mode.value,
        "workers": config.workers,
        "epochs": config.epochs,
        "lr": config.learning_rate,
        "batch": config.batch_size,
        "seed": config.seed,
        "final_loss": trace.records[-1].loss,
        "total_time_s": trace.records[-1].elapsed_s,
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
