"""sparselr: iterative pruning of dense ReLU networks with adaptive LR schedules.

The package trains small feed-forward ReLU classifiers, prunes them over
repeated cycles (magnitude, gradient, or structured criteria, with optional
rewind-to-init), and drives the retraining learning rate with rewound
schedules whose cap can grow with sparsity. Instrumentation records how the
weight-gradient and hidden-representation distributions narrow as weights
are removed, and a greedy oracle cross-checks the schedule's cap against a
per-cycle grid search.
"""

__version__ = "0.1.0"

from .estimator import IterativePruningClassifier
from .harness import (
    CycleRecord,
    DatasetSource,
    ExperimentConfig,
    OracleCycle,
    SplitData,
    aggregate_runs,
    oracle_grid_search,
    run_experiment,
    run_iterative_pruning,
    split_dataset,
    train_one_cycle,
)
from .instrumentation import (
    HistogramReport,
    build_histogram,
    snapshot_distributions,
    sturges_bin_count,
    variance_model,
)
from .network import Network, cross_entropy, he_init
from .optimizers import SGD, Adam, RMSProp, make_optimizer
from .pruning import (
    PruneCriterion,
    SparsityState,
    imp_rewind,
    lambda_of,
    prune_step,
    score,
    structured_prune_step,
)
from .schedules import (
    Constant,
    Cyclical,
    CycleClock,
    Decay,
    SCyclical,
    Warmup,
    lr_at,
    on_cycle_start,
    parse_schedule,
    scyc_max_lr,
)

__all__ = [
    "__version__",
    "IterativePruningClassifier",
    "CycleRecord",
    "DatasetSource",
    "ExperimentConfig",
    "OracleCycle",
    "SplitData",
    "aggregate_runs",
    "oracle_grid_search",
    "run_experiment",
    "run_iterative_pruning",
    "split_dataset",
    "train_one_cycle",
    "HistogramReport",
    "build_histogram",
    "snapshot_distributions",
    "sturges_bin_count",
    "variance_model",
    "Network",
    "cross_entropy",
    "he_init",
    "SGD",
    "Adam",
    "RMSProp",
    "make_optimizer",
    "PruneCriterion",
    "SparsityState",
    "imp_rewind",
    "lambda_of",
    "prune_step",
    "score",
    "structured_prune_step",
    "Constant",
    "Cyclical",
    "CycleClock",
    "Decay",
    "SCyclical",
    "Warmup",
    "lr_at",
    "on_cycle_start",
    "parse_schedule",
    "scyc_max_lr",
]
