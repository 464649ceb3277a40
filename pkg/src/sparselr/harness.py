"""Experiment orchestration: pruning cycles, early stopping, oracle search.

A run builds a network from a seed, trains it for one cycle, then repeats
L times: prune, freeze, (optionally rewind weights to init), rewind the LR
schedule, reset the optimizer, retrain. Each cycle yields one CycleRecord.
The greedy oracle replaces the schedule amplitude with each value of a grid
at every cycle, trains all candidates from the same pre-cycle checkpoint,
commits the best branch, and reports the band of amplitudes performing
within 0.5 points of the best validation accuracy.

All randomness flows from (seed, purpose tag, cycle index) so identical
configurations reproduce bit-identical record streams in single-threaded
mode; independent seeds may run concurrently.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .datasets import load_idx, synth_blobs
from .errors import ConfigError, ExhaustedLayerError, NumericFaultError
from .instrumentation import (
    HistogramReport,
    alive_gradient_sample,
    snapshot_distributions,
    symmetric_tails,
)
from .network import Network
from .optimizers import make_optimizer
from .pruning import PruneCriterion, imp_rewind, lambda_of, prune_step
from .schedules import (
    ScheduleSpec,
    SCyclical,
    Warmup,
    lr_at,
    on_cycle_start,
    peak_lr,
    scyc_max_lr,
    with_amplitude,
)

__all__ = [
    "DatasetSource",
    "ExperimentConfig",
    "SplitData",
    "CycleRecord",
    "OracleCycle",
    "FEASIBLE_BAND",
    "split_indices",
    "split_dataset",
    "load_dataset",
    "full_pass_gradients",
    "train_one_cycle",
    "run_iterative_pruning",
    "run_experiment",
    "aggregate_runs",
    "mean_std",
    "oracle_grid_search",
    "default_oracle_grid",
]

# candidates within 0.5 percentage points of the best validation accuracy
# count as feasible (accuracies are fractions, hence 0.005)
FEASIBLE_BAND = 0.005

# rng stream tags: keep split / init / per-cycle shuffles independent
_SPLIT, _INIT, _CYCLE = 0, 1, 2

# fixed held-out batch size for hidden-representation snapshots
_INSTRUMENT_BATCH = 1024


def _rng(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, path)]))


@dataclass(frozen=True)
class DatasetSource:
    """Where the experiment data comes from: IDX files or the generator."""

    kind: str  # 'idx' | 'synth'
    images: str | None = None
    labels: str | None = None
    n: int = 8000
    classes: int = 10
    seed: int = 0
    class_sep: float = 5.0
    clusters: int = 2

    def __post_init__(self):
        if self.kind not in ("idx", "synth"):
            raise ConfigError(f"dataset kind must be 'idx' or 'synth', got '{self.kind}'")
        if self.kind == "idx" and (not self.images or not self.labels):
            raise ConfigError("idx dataset needs 'images' and 'labels' paths")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; validated on construction."""

    hidden_layers: tuple[int, ...]
    schedule: ScheduleSpec
    criterion: PruneCriterion
    prune_rate: float
    cycles: int
    epochs: int
    batch_size: int
    seeds: tuple[int, ...]
    patience: int = 10
    optimizer: str = "sgd"
    momentum: float = 0.9
    weight_decay: float = 1e-4
    use_bn: bool = False
    dataset: DatasetSource = field(default_factory=lambda: DatasetSource("synth"))

    def __post_init__(self):
        if self.cycles < 1:
            raise ConfigError(f"cycles must be >= 1, got {self.cycles}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 <= self.prune_rate < 1.0:
            raise ConfigError(f"prune_rate must lie in [0, 1), got {self.prune_rate}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds must be non-negative")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if any(h < 1 for h in self.hidden_layers):
            raise ConfigError("hidden layer sizes must be >= 1")
        if isinstance(self.schedule, SCyclical) and \
                self.schedule.prune_rate != self.prune_rate:
            raise ConfigError(
                "s-cyclical schedule prune rate "
                f"{self.schedule.prune_rate} != experiment prune_rate {self.prune_rate}"
            )


@dataclass(frozen=True)
class SplitData:
    """A 60/20/20 split ready for training."""

    train_x: np.ndarray
    train_y: np.ndarray
    val_x: np.ndarray
    val_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    n_classes: int

    @property
    def n_features(self) -> int:
        return self.train_x.shape[1]


@dataclass(frozen=True)
class CycleRecord:
    """Result row for one pruning cycle."""

    m: int
    lam: float
    max_lr_used: float
    best_val_acc: float
    early_stop_test_acc: float
    epochs_run: int
    wallclock: float
    grad_hist: HistogramReport | None = None
    hidden_hist: HistogramReport | None = None


@dataclass(frozen=True)
class OracleCycle:
    """Greedy-oracle result for one cycle: best amplitude and feasible band."""

    m: int
    lam: float
    well_tuned_max_lr: float
    region_lo: float
    region_hi: float
    scyc_estimate: float
    grid: tuple[float, ...]
    grid_val_accs: tuple[float, ...]


def split_indices(n: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Disjoint, exhaustive 60/20/20 index split; remainder goes to train."""
    n_val = int(0.2 * n)
    n_test = int(0.2 * n)
    n_train = n - n_val - n_test
    perm = _rng(seed, _SPLIT).permutation(n)
    return (
        perm[:n_train],
        perm[n_train:n_train + n_val],
        perm[n_train + n_val:],
    )


def split_dataset(x: np.ndarray, y: np.ndarray, seed: int, n_classes: int) -> SplitData:
    tr, va, te = split_indices(len(x), seed)
    return SplitData(
        train_x=x[tr], train_y=y[tr],
        val_x=x[va], val_y=y[va],
        test_x=x[te], test_y=y[te],
        n_classes=n_classes,
    )


def load_dataset(source: DatasetSource) -> tuple[np.ndarray, np.ndarray, int]:
    """Dataset as (float32 features in [0,1], integer labels, class count)."""
    if source.kind == "idx":
        x, y = load_idx(source.images, source.labels)
        return x, y, int(y.max()) + 1
    images, labels = synth_blobs(
        n=source.n, classes=source.classes, seed=source.seed,
        class_sep=source.class_sep, clusters_per_class=source.clusters,
    )
    x = images.reshape(len(images), -1).astype(np.float32) / 255.0
    return x, labels, source.classes


def full_pass_gradients(net: Network, x: np.ndarray, y: np.ndarray,
                        batch_size: int) -> list[np.ndarray]:
    """Weight gradients of the mean loss over the whole set (eval mode).

    Eval mode keeps the average independent of the batch partitioning, so
    the result is a property of the network and the data alone.
    """
    total = [np.zeros(l.weights.shape, dtype=np.float64) for l in net.layers]
    n = len(x)
    for start in range(0, n, batch_size):
        xb, yb = x[start:start + batch_size], y[start:start + batch_size]
        trace = net.forward(xb, training=False)
        grads = net.backward(trace, yb)
        scale = len(xb) / n
        for acc, gw in zip(total, grads.weights):
            acc += gw.astype(np.float64) * scale
    return total


def train_one_cycle(
    net: Network,
    optimizer,
    schedule: ScheduleSpec,
    data: SplitData,
    m: int,
    *,
    epochs: int,
    batch_size: int,
    patience: int,
    seed: int,
    on_epoch_end=None,
) -> CycleRecord:
    """Train for one pruning cycle with early stopping on validation accuracy.

    The schedule is rewound to iteration 0, the optimizer reset. Training
    stops once validation accuracy fails to improve for ``patience``
    consecutive epochs; the network is left at the best-validation
    checkpoint, and the recorded test accuracy is measured there.
    """
    start = time.perf_counter()
    clock = on_cycle_start(schedule, m)
    optimizer.reset()
    rng = _rng(seed, _CYCLE, m)
    params = net.parameters()
    n = len(data.train_x)

    best_val = -math.inf
    best_state = None
    bad = 0
    epochs_run = 0
    for epoch in range(1, epochs + 1):
        perm = rng.permutation(n)
        for lo in range(0, n, batch_size):
            idx = perm[lo:lo + batch_size]
            lr = lr_at(schedule, clock)
            trace = net.forward(data.train_x[idx], training=True)
            grads = net.backward(trace, data.train_y[idx])
            if not math.isfinite(grads.loss):
                raise NumericFaultError(
                    f"non-finite training loss at cycle {m}, epoch {epoch}"
                )
            grads.zero_masked(net.masks)
            optimizer.step(params, net.flat_gradients(grads), lr)
            net.apply_mask()
            clock = clock.advance()
        epochs_run = epoch
        val_acc = net.accuracy(data.val_x, data.val_y)
        if val_acc > best_val:
            best_val = val_acc
            best_state = net.state()
            bad = 0
        else:
            bad += 1
        if on_epoch_end is not None:
            on_epoch_end(net, m, epoch, val_acc)
        if bad >= patience:
            break

    net.load_state(best_state)
    test_acc = net.accuracy(data.test_x, data.test_y)
    return CycleRecord(
        m=m,
        lam=lambda_of(net.masks),
        max_lr_used=peak_lr(schedule, m),
        best_val_acc=best_val,
        early_stop_test_acc=test_acc,
        epochs_run=epochs_run,
        wallclock=time.perf_counter() - start,
    )


def build_network(config: ExperimentConfig, data: SplitData, seed: int) -> Network:
    """Fresh network for a run, He-initialized from the run seed."""
    sizes = (data.n_features, *config.hidden_layers, data.n_classes)
    return Network.build(sizes, seed=_rng(seed, _INIT).integers(2**31),
                         use_bn=config.use_bn)


def run_iterative_pruning(config: ExperimentConfig, data: SplitData, seed: int,
                          on_epoch_end=None, net: Network | None = None
                          ) -> list[CycleRecord]:
    """One full run: cycle 0 trains the unpruned network, then L prune+retrain
    cycles. Returns one record per cycle, with distribution snapshots taken
    at the end-of-cycle checkpoint.

    Tail bands for the gradient/hidden histograms are frozen from the
    unpruned cycle (94th-percentile magnitude), so tail masses are
    comparable across cycles. An exhausted layer under structured pruning
    ends the run early with the records collected so far. ``net`` lets a
    caller keep hold of the trained network; by default a fresh one is built
    from the seed.
    """
    if net is None:
        net = build_network(config, data, seed)
    optimizer = make_optimizer(config.optimizer, config.momentum, config.weight_decay)
    instr_x = data.val_x[:_INSTRUMENT_BATCH]

    records: list[CycleRecord] = []
    avg_grads: list[np.ndarray] | None = None
    grad_tails = hidden_tails = None
    for m in range(config.cycles + 1):
        if m > 0:
            try:
                prune_step(net, config.criterion, config.prune_rate,
                           grads=avg_grads, m=m)
            except ExhaustedLayerError:
                break
            if config.criterion.imp_rewind:
                imp_rewind(net)
        record = train_one_cycle(
            net, optimizer, config.schedule, data, m,
            epochs=config.epochs, batch_size=config.batch_size,
            patience=config.patience, seed=seed, on_epoch_end=on_epoch_end,
        )
        avg_grads = full_pass_gradients(net, data.train_x, data.train_y,
                                        config.batch_size)
        if grad_tails is None:
            grad_tails = symmetric_tails(alive_gradient_sample(net, avg_grads))
        grad_hist, hidden_hist = snapshot_distributions(
            net, instr_x, grads=avg_grads,
            grad_tails=grad_tails, hidden_tails=hidden_tails,
        )
        if hidden_tails is None:
            hidden_tails = (hidden_hist.tail_lo, hidden_hist.tail_hi)
        records.append(replace(record, grad_hist=grad_hist, hidden_hist=hidden_hist))
    return records


def run_experiment(config: ExperimentConfig, threads: int = 1,
                   on_epoch_end=None) -> dict[int, list[CycleRecord]]:
    """All seeds of a config; results keyed by seed in config order."""
    x, y, n_classes = load_dataset(config.dataset)

    def one(seed: int) -> list[CycleRecord]:
        data = split_dataset(x, y, seed, n_classes)
        return run_iterative_pruning(config, data, seed, on_epoch_end=on_epoch_end)

    if threads > 1 and len(config.seeds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, config.seeds))
    else:
        results = [one(s) for s in config.seeds]
    return dict(zip(config.seeds, results))


def mean_std(values) -> tuple[float, float | None]:
    """Mean and sample standard deviation (n-1); std is None for one value."""
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    return mean, (float(arr.std(ddof=1)) if arr.size > 1 else None)


def aggregate_runs(runs: list[list[CycleRecord]], field_name: str = "early_stop_test_acc"
                   ) -> list[tuple[float, float | None]]:
    """Per-cycle mean +/- std of one record field across seeds.

    Runs truncated by structured pruning are aggregated up to the shortest
    common length.
    """
    if not runs:
        return []
    n_cycles = min(len(r) for r in runs)
    return [
        mean_std([getattr(run[i], field_name) for run in runs])
        for i in range(n_cycles)
    ]


def default_oracle_grid() -> tuple[float, ...]:
    """Ten logarithmically spaced amplitudes per decade over [1e-4, 1e-1]."""
    return tuple(float(g) for g in np.logspace(-4, -1, 31))


def oracle_grid_search(
    config: ExperimentConfig,
    data: SplitData,
    seed: int,
    grid=None,
    keep_checkpoints: bool = False,
):
    """Greedy per-cycle grid search over the warmup amplitude.

    At every cycle each grid value trains a candidate branch from the same
    pre-cycle checkpoint (identical data order); the branch with the best
    validation accuracy is committed. The feasible region spans the smallest
    and largest grid values within ``FEASIBLE_BAND`` of the best.

    With ``keep_checkpoints`` the pre-cycle network states are returned too,
    so every branch can be re-trained independently for verification.
    """
    grid = tuple(float(g) for g in (grid if grid is not None else default_oracle_grid()))
    if not grid:
        raise ValueError("oracle grid must be non-empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("oracle grid must be sorted strictly ascending")
    schedule = config.schedule
    if not isinstance(schedule, SCyclical):
        raise ConfigError(
            "the oracle compares against the s-cyclical estimate; "
            "config schedule must be scyc(...)"
        )

    net = build_network(config, data, seed)

    results: list[OracleCycle] = []
    checkpoints: list[dict] = []
    avg_grads = None
    for m in range(config.cycles + 1):
        if m > 0:
            try:
                prune_step(net, config.criterion, config.prune_rate,
                           grads=avg_grads, m=m)
            except ExhaustedLayerError:
                break
            if config.criterion.imp_rewind:
                imp_rewind(net)
        pre_state = net.state()
        if keep_checkpoints:
            checkpoints.append(pre_state)

        accs = []
        states = []
        for amp in grid:
            net.load_state(pre_state)
            optimizer = make_optimizer(config.optimizer, config.momentum,
                                       config.weight_decay)
            record = train_one_cycle(
                net, optimizer, with_amplitude(schedule, amp), data, m,
                epochs=config.epochs, batch_size=config.batch_size,
                patience=config.patience, seed=seed,
            )
            accs.append(record.best_val_acc)
            states.append(net.state())

        best_i = int(np.argmax(accs))
        feasible = [g for g, a in zip(grid, accs) if a >= accs[best_i] - FEASIBLE_BAND]
        net.load_state(states[best_i])
        results.append(OracleCycle(
            m=m,
            lam=lambda_of(net.masks),
            well_tuned_max_lr=grid[best_i],
            region_lo=min(feasible),
            region_hi=max(feasible),
            scyc_estimate=scyc_max_lr(schedule.epsilon, schedule.delta,
                                      schedule.prune_rate, schedule.q,
                                      schedule.beta, m),
            grid=grid,
            grid_val_accs=tuple(accs),
        ))
        if config.criterion.needs_gradients:
            avg_grads = full_pass_gradients(net, data.train_x, data.train_y,
                                            config.batch_size)
    if keep_checkpoints:
        return results, checkpoints
    return results
