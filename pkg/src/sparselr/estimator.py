"""Scikit-learn estimator wrapping the iterative-pruning harness.

``IterativePruningClassifier`` trains a dense ReLU network, then alternates
pruning and retraining under the configured learning-rate schedule. It
follows the sklearn contract (``get_params``/``set_params``/``fit``/
``predict``), so it composes with pipelines, ``clone`` and grid search.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .harness import ExperimentConfig, SplitData, build_network, run_iterative_pruning
from .network import _softmax
from .pruning import PruneCriterion, lambda_of
from .schedules import ScheduleSpec, parse_schedule

__all__ = ["IterativePruningClassifier"]


class IterativePruningClassifier(BaseEstimator, ClassifierMixin):
    """Dense ReLU classifier trained with iterative pruning.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int
        Hidden layer widths; the input and output sizes come from the data.
    schedule : str or ScheduleSpec
        Learning-rate schedule, either a spec object or the positional text
        form, e.g. ``"scyc(2e-2, 4e-2, 1, 4, 100, nil, nil, nil)"``.
    criterion : str
        Pruning rule: global_magnitude | layer_magnitude | global_gradient |
        layer_gradient | structured_l1.
    imp : bool
        Rewind surviving weights to their initial values after each prune.
    prune_rate : float
        Fraction of remaining weights removed per cycle.
    cycles : int
        Number of prune+retrain cycles after the initial training.
    epochs, batch_size, patience
        Per-cycle training budget and early-stopping patience (validation
        accuracy).
    optimizer, momentum, weight_decay, use_bn
        Training configuration.
    validation_fraction : float
        Share of the fit data held out for early stopping.
    random_state : int
        Seed for the split, the initialization and the batch order.

    Attributes
    ----------
    network_ : Network
        The trained, pruned network.
    records_ : list of CycleRecord
        One row per pruning cycle (sparsity, max_lr, accuracies, histograms).
    classes_ : ndarray
        Class labels seen during fit.
    """

    def __init__(
        self,
        hidden_layer_sizes=(256, 256, 256),
        schedule="scyc(2e-2, 4e-2, 1, 4, 100, nil, nil, nil)",
        criterion="global_magnitude",
        imp=False,
        prune_rate=0.2,
        cycles=5,
        epochs=20,
        batch_size=64,
        patience=10,
        optimizer="sgd",
        momentum=0.9,
        weight_decay=1e-4,
        use_bn=False,
        validation_fraction=0.2,
        random_state=0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.schedule = schedule
        self.criterion = criterion
        self.imp = imp
        self.prune_rate = prune_rate
        self.cycles = cycles
        self.epochs = epochs
        self.batch_size = batch_size
        self.patience = patience
        self.optimizer = optimizer
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.use_bn = use_bn
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def _schedule_spec(self) -> ScheduleSpec:
        if isinstance(self.schedule, str):
            return parse_schedule(self.schedule, prune_rate=self.prune_rate)
        return self.schedule

    def fit(self, X, y):
        """Run the full pruning experiment on (X, y)."""
        X, y = check_X_y(X, y, dtype=np.float32)
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes")
        self.n_features_in_ = X.shape[1]

        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError(
                f"validation_fraction must lie in (0, 1), got {self.validation_fraction}"
            )
        rng = np.random.default_rng(self.random_state)
        perm = rng.permutation(len(X))
        n_val = max(1, int(self.validation_fraction * len(X)))
        val_idx, train_idx = perm[:n_val], perm[n_val:]
        if train_idx.size == 0:
            raise ValueError("validation_fraction leaves no training data")
        # the held-out slice doubles as the test set: the estimator has no
        # separate test split, so early_stop_test_acc mirrors validation
        data = SplitData(
            train_x=X[train_idx], train_y=y_enc[train_idx],
            val_x=X[val_idx], val_y=y_enc[val_idx],
            test_x=X[val_idx], test_y=y_enc[val_idx],
            n_classes=len(self.classes_),
        )
        config = ExperimentConfig(
            hidden_layers=tuple(self.hidden_layer_sizes),
            schedule=self._schedule_spec(),
            criterion=PruneCriterion(self.criterion, imp_rewind=self.imp),
            prune_rate=self.prune_rate,
            cycles=self.cycles,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seeds=(self.random_state,),
            patience=self.patience,
            optimizer=self.optimizer,
            momentum=self.momentum,
            weight_decay=self.weight_decay,
            use_bn=self.use_bn,
        )
        net = build_network(config, data, self.random_state)
        self.records_ = run_iterative_pruning(config, data, self.random_state, net=net)
        self.network_ = net
        return self

    def predict(self, X):
        check_is_fitted(self, "network_")
        X = check_array(X, dtype=np.float32)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return self.classes_[self.network_.predict(X)]

    def predict_proba(self, X):
        check_is_fitted(self, "network_")
        X = check_array(X, dtype=np.float32)
        probs = []
        for start in range(0, len(X), 512):
            trace = self.network_.forward(X[start:start + 512], training=False)
            probs.append(_softmax(trace.logits))
        return np.vstack(probs)

    @property
    def weights_remaining_(self) -> float:
        """Percent of prunable weights still alive in the fitted network."""
        check_is_fitted(self, "network_")
        return lambda_of(self.network_.masks)
