"""Mask-based pruning: scoring, threshold selection, freezing, rewinding.

Unstructured criteria score individual weights (|w| or |w*g|) and remove the
lowest-scored alive weights, either network-wide ("global") or per layer
("layer"). The structured criterion removes whole hidden neurons by the L1
norm of their alive incoming weights. Rewinding restores surviving weights
to their initialization values. Only weight matrices are prunable; biases
and batch-norm parameters are not counted in sparsity accounting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ExhaustedLayerError, InvalidRateError, MissingInputError
from .network import Network

__all__ = [
    "CRITERION_NAMES",
    "PruneCriterion",
    "SparsityState",
    "score",
    "prune_step",
    "structured_prune_step",
    "imp_rewind",
    "lambda_of",
]

CRITERION_NAMES = (
    "global_magnitude",
    "layer_magnitude",
    "global_gradient",
    "layer_gradient",
    "structured_l1",
)


@dataclass(frozen=True)
class PruneCriterion:
    """One scoring rule plus the rewind-to-init flag."""

    rule: str
    imp_rewind: bool = False

    def __post_init__(self):
        if self.rule not in CRITERION_NAMES:
            raise ValueError(
                f"unknown criterion '{self.rule}'; expected one of {CRITERION_NAMES}"
            )

    @property
    def needs_gradients(self) -> bool:
        return self.rule in ("global_gradient", "layer_gradient")

    @property
    def structured(self) -> bool:
        return self.rule == "structured_l1"

    @property
    def global_scope(self) -> bool:
        return self.rule.startswith("global")


@dataclass(frozen=True)
class SparsityState:
    """Alive-weight accounting after a pruning step."""

    m: int
    alive_per_layer: tuple[int, ...]
    lam: float  # percent of weights remaining


def lambda_of(masks: list[np.ndarray]) -> float:
    """Percent of prunable weights still alive: 100 * alive / total."""
    alive = sum(int(m.sum()) for m in masks)
    total = sum(m.size for m in masks)
    return 100.0 * alive / total


def _sparsity(masks: list[np.ndarray], m: int) -> SparsityState:
    return SparsityState(
        m=m,
        alive_per_layer=tuple(int(mk.sum()) for mk in masks),
        lam=lambda_of(masks),
    )


def score(net: Network, criterion: PruneCriterion,
          grads: list[np.ndarray] | None = None) -> list[np.ndarray]:
    """Per-weight scores; pruned positions are +inf (never selected).

    Magnitude rules score |w|; gradient rules score |w * g| and require the
    end-of-cycle gradients averaged over a full pass of the training set.
    """
    if criterion.structured:
        raise ValueError("structured criterion scores neurons; use structured_prune_step")
    if criterion.needs_gradients:
        if grads is None:
            raise MissingInputError(
                f"criterion '{criterion.rule}' requires weight gradients"
            )
        raw = [np.abs(l.weights * g) for l, g in zip(net.layers, grads)]
    else:
        raw = [np.abs(l.weights) for l in net.layers]
    return [np.where(mask, s, np.inf) for s, mask in zip(raw, net.masks)]


def _lowest_alive(scores: np.ndarray, layer_ids: np.ndarray,
                  flat_ids: np.ndarray, k: int) -> np.ndarray:
    # ties broken by (layer index, flat index) ascending for determinism
    order = np.lexsort((flat_ids, layer_ids, scores))
    return order[:k]


def prune_step(net: Network, criterion: PruneCriterion, rate: float,
               grads: list[np.ndarray] | None = None, m: int = 0) -> SparsityState:
    """Remove the floor(rate * alive) lowest-scored alive weights.

    Global rules select network-wide; layer rules select floor(rate * alive)
    within each layer. Newly pruned weights are set to exactly 0.
    """
    if not 0.0 <= rate < 1.0:
        raise InvalidRateError(f"pruning rate must lie in [0, 1), got {rate}")
    if criterion.structured:
        return structured_prune_step(net, rate, m=m)
    layer_scores = score(net, criterion, grads)

    if criterion.global_scope:
        svals, lids, fids = [], [], []
        for li, (s, mask) in enumerate(zip(layer_scores, net.masks)):
            alive_flat = np.flatnonzero(mask)
            svals.append(s.ravel()[alive_flat])
            lids.append(np.full(alive_flat.size, li))
            fids.append(alive_flat)
        svals = np.concatenate(svals)
        lids = np.concatenate(lids)
        fids = np.concatenate(fids)
        k = int(rate * svals.size)
        picked = _lowest_alive(svals, lids, fids, k)
        for li in range(len(net.masks)):
            doomed = fids[picked[lids[picked] == li]]
            if doomed.size:
                net.masks[li].flat[doomed] = False
    else:
        for li, (s, mask) in enumerate(zip(layer_scores, net.masks)):
            alive_flat = np.flatnonzero(mask)
            k = int(rate * alive_flat.size)
            if k == 0:
                continue
            svals = s.ravel()[alive_flat]
            picked = _lowest_alive(svals, np.zeros(alive_flat.size), alive_flat, k)
            mask.flat[alive_flat[picked]] = False

    net.apply_mask()
    return _sparsity(net.masks, m)


def structured_prune_step(net: Network, rate: float, m: int = 0) -> SparsityState:
    """Remove whole hidden neurons with the smallest alive incoming L1 norm.

    Per hidden layer, floor(rate * alive_neurons) neurons go; removing a
    neuron zeroes its incoming row and its outgoing column in the next
    layer's mask. The output layer is exempt.
    """
    if not 0.0 <= rate < 1.0:
        raise InvalidRateError(f"pruning rate must lie in [0, 1), got {rate}")
    for li in range(len(net.layers) - 1):
        layer = net.layers[li]
        in_mask = net.masks[li]
        alive_neurons = np.flatnonzero(in_mask.any(axis=1))
        k = int(rate * alive_neurons.size)
        if k:
            norms = np.abs(layer.weights * in_mask)[alive_neurons].sum(axis=1)
            picked = _lowest_alive(norms, np.zeros(alive_neurons.size),
                                   alive_neurons, k)
            doomed = alive_neurons[picked]
            in_mask[doomed, :] = False
            net.masks[li + 1][:, doomed] = False
        if not in_mask.any(axis=1).any():
            raise ExhaustedLayerError(f"hidden layer {li} has no neurons left")
    net.apply_mask()
    return _sparsity(net.masks, m)


def imp_rewind(net: Network) -> Network:
    """Rewind alive weights (and biases, BN params) to their init values.

    Pruned weights stay 0; masks are unchanged.
    """
    snap = net.init_snapshot
    for i, layer in enumerate(net.layers):
        layer.weights = snap["weights"][i].copy()
        layer.bias = snap["biases"][i].copy()
        if layer.bn:
            layer.bn.gamma = snap["bn_gammas"][i].copy()
            layer.bn.beta = snap["bn_betas"][i].copy()
            layer.bn.running_mean = snap["bn_means"][i].copy()
            layer.bn.running_var = snap["bn_vars"][i].copy()
    net.apply_mask()
    return net
