"""Dense ReLU network with per-weight masks and exact analytic backprop.

The engine is deliberately small: dense layers, ReLU after every hidden
layer (after batch normalization when enabled), un-activated logits, mean
cross-entropy loss. Every weight matrix carries a binary mask; a masked
weight is stored as exactly 0 and the training loop keeps it there (the
"freeze" contract). Biases and batch-norm parameters are never masked.

Training runs in single precision by default; gradient-checking tests build
double-precision networks via the ``dtype`` argument.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateBatchError, InvalidLabelError, InvalidShapeError

__all__ = [
    "BatchNorm",
    "DenseLayer",
    "ForwardTrace",
    "Gradients",
    "Network",
    "he_init",
    "cross_entropy",
]

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def he_init(fan_out: int, fan_in: int, rng, dtype=np.float32) -> np.ndarray:
    """He-initialized weight matrix: N(0, 2/fan_in), shape [fan_out, fan_in].

    ``rng`` is a seed or an ``np.random.Generator``; the same seed and shape
    always produce the same matrix.
    """
    if fan_in < 1 or fan_out < 1:
        raise InvalidShapeError(f"fan_in and fan_out must be >= 1, got {fan_out}x{fan_in}")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    std = np.sqrt(2.0 / fan_in)
    return gen.normal(0.0, std, size=(fan_out, fan_in)).astype(dtype)


class BatchNorm:
    """Per-unit batch normalization applied to pre-activations.

    Training mode normalizes with batch statistics (population variance) and
    updates running statistics by exponential moving average; eval mode uses
    the running statistics.
    """

    def __init__(self, units: int, dtype=np.float32):
        self.gamma = np.ones(units, dtype=dtype)
        self.beta = np.zeros(units, dtype=dtype)
        self.running_mean = np.zeros(units, dtype=dtype)
        self.running_var = np.ones(units, dtype=dtype)

    def forward(self, z: np.ndarray, training: bool):
        """Normalize ``z`` [batch, units]; returns (output, backward cache)."""
        if training:
            if z.shape[0] < 2:
                raise DegenerateBatchError(
                    f"batch normalization needs a minibatch of >= 2 rows in "
                    f"training mode, got {z.shape[0]}"
                )
            mean = z.mean(axis=0)
            var = z.var(axis=0)
            self.running_mean = ((1.0 - BN_MOMENTUM) * self.running_mean
                                 + BN_MOMENTUM * mean).astype(z.dtype)
            self.running_var = ((1.0 - BN_MOMENTUM) * self.running_var
                                + BN_MOMENTUM * var).astype(z.dtype)
        else:
            mean = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        z_hat = (z - mean) * inv_std
        out = self.gamma * z_hat + self.beta
        return out, (z_hat, inv_std, training)

    def backward(self, d_out: np.ndarray, cache):
        """Gradient through the normalization; returns (d_z, d_gamma, d_beta).

        In training mode the batch statistics depend on z, which adds the
        usual coupling terms; in eval mode the running statistics are
        constants and the map is a plain affine rescale.
        """
        z_hat, inv_std, training = cache
        d_beta = d_out.sum(axis=0)
        d_gamma = (d_out * z_hat).sum(axis=0)
        d_hat = d_out * self.gamma
        if not training:
            return d_hat * inv_std, d_gamma, d_beta
        n = d_out.shape[0]
        d_z = (inv_std / n) * (
            n * d_hat - d_hat.sum(axis=0) - z_hat * (d_hat * z_hat).sum(axis=0)
        )
        return d_z, d_gamma, d_beta


class DenseLayer:
    """Weights [fan_out, fan_in], bias [fan_out], optional batch norm."""

    def __init__(self, fan_out: int, fan_in: int, rng, use_bn: bool = False,
                 dtype=np.float32):
        self.weights = he_init(fan_out, fan_in, rng, dtype)
        self.bias = np.zeros(fan_out, dtype=dtype)
        self.bn = BatchNorm(fan_out, dtype) if use_bn else None

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class ForwardTrace:
    """Everything the backward pass and the instrumentation need.

    ``pre_act`` holds the ReLU inputs of the hidden layers (post-BN when BN
    is on); ``post_act`` holds the hidden representations. Immutable after
    creation.
    """

    inputs: np.ndarray
    pre_bn: tuple[np.ndarray, ...]
    pre_act: tuple[np.ndarray, ...]
    post_act: tuple[np.ndarray, ...]
    logits: np.ndarray
    bn_caches: tuple = field(repr=False, default=())

    @property
    def batch_size(self) -> int:
        return self.inputs.shape[0]


@dataclass
class Gradients:
    """Raw loss gradients for every parameter tensor (pruned positions too)."""

    loss: float
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    bn_gammas: list[np.ndarray | None]
    bn_betas: list[np.ndarray | None]

    def zero_masked(self, masks: list[np.ndarray]) -> "Gradients":
        """Apply the freeze contract: gradients at pruned positions become 0."""
        for g, mask in zip(self.weights, masks):
            g[~mask] = 0.0
        return self


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy of softmax(logits) against integer labels."""
    labels = np.asarray(labels)
    n, n_classes = logits.shape
    if labels.shape != (n,):
        raise InvalidShapeError(
            f"labels shape {labels.shape} does not match batch size {n}"
        )
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise InvalidLabelError(
            f"labels must lie in [0, {n_classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    return float(np.mean(log_z - shifted[np.arange(n), labels]))


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class Network:
    """Masked dense ReLU network.

    Construction snapshots all parameters (weights, biases, batch-norm state)
    so that rewinding can restore them bit-exactly; the snapshot arrays are
    marked read-only. Instances are single-threaded.
    """

    def __init__(self, layers: list[DenseLayer], dtype=np.float32):
        self.layers = layers
        self.dtype = dtype
        self.masks = [np.ones(l.weights.shape, dtype=bool) for l in layers]
        self.init_snapshot = self._freeze(self.state())

    @classmethod
    def build(cls, layer_sizes: tuple[int, ...], seed: int, use_bn: bool = False,
              dtype=np.float32) -> "Network":
        """Network with the given unit counts, e.g. (784, 256, 256, 256, 10).

        BN (when enabled) is attached to hidden layers only; the output layer
        is always a plain affine map.
        """
        if len(layer_sizes) < 2:
            raise InvalidShapeError("need at least an input and an output size")
        rng = np.random.default_rng(seed)
        layers = []
        n_layers = len(layer_sizes) - 1
        for i, (fan_in, fan_out) in enumerate(zip(layer_sizes, layer_sizes[1:])):
            hidden = i < n_layers - 1
            layers.append(DenseLayer(fan_out, fan_in, rng, use_bn and hidden, dtype))
        return cls(layers, dtype)

    # -- state management ---------------------------------------------------

    @staticmethod
    def _freeze(state: dict) -> dict:
        for arrs in state.values():
            for a in arrs:
                if a is not None:
                    a.flags.writeable = False
        return state

    def state(self) -> dict:
        """Deep copy of all parameters, running stats and masks."""
        return {
            "weights": [l.weights.copy() for l in self.layers],
            "biases": [l.bias.copy() for l in self.layers],
            "bn_gammas": [l.bn.gamma.copy() if l.bn else None for l in self.layers],
            "bn_betas": [l.bn.beta.copy() if l.bn else None for l in self.layers],
            "bn_means": [l.bn.running_mean.copy() if l.bn else None for l in self.layers],
            "bn_vars": [l.bn.running_var.copy() if l.bn else None for l in self.layers],
            "masks": [m.copy() for m in self.masks],
        }

    def load_state(self, state: dict) -> None:
        for i, layer in enumerate(self.layers):
            layer.weights = state["weights"][i].copy()
            layer.bias = state["biases"][i].copy()
            if layer.bn:
                layer.bn.gamma = state["bn_gammas"][i].copy()
                layer.bn.beta = state["bn_betas"][i].copy()
                layer.bn.running_mean = state["bn_means"][i].copy()
                layer.bn.running_var = state["bn_vars"][i].copy()
        self.masks = [m.copy() for m in state["masks"]]
        self.apply_mask()

    def apply_mask(self) -> None:
        """Force every pruned weight to exactly 0."""
        for layer, mask in zip(self.layers, self.masks):
            layer.weights[~mask] = 0.0

    def parameters(self) -> list[np.ndarray]:
        """All trainable tensors, in a fixed order matching Gradients.flat()."""
        params = []
        for layer in self.layers:
            params.append(layer.weights)
            params.append(layer.bias)
            if layer.bn:
                params.append(layer.bn.gamma)
                params.append(layer.bn.beta)
        return params

    def flat_gradients(self, grads: Gradients) -> list[np.ndarray]:
        """Gradient tensors in the same order as :meth:`parameters`."""
        out = []
        for i, layer in enumerate(self.layers):
            out.append(grads.weights[i])
            out.append(grads.biases[i])
            if layer.bn:
                out.append(grads.bn_gammas[i])
                out.append(grads.bn_betas[i])
        return out

    # -- forward / backward --------------------------------------------------

    def forward(self, batch: np.ndarray, training: bool = False) -> ForwardTrace:
        """Run the network on ``batch`` [n, fan_in of first layer].

        Training mode uses batch statistics in BN layers (and updates their
        running averages); eval mode uses the running statistics.
        """
        x = np.ascontiguousarray(batch, dtype=self.dtype)
        if x.ndim != 2 or x.shape[1] != self.layers[0].fan_in:
            raise InvalidShapeError(
                f"batch shape {x.shape} does not match input width "
                f"{self.layers[0].fan_in}"
            )
        pre_bn, pre_act, post_act, bn_caches = [], [], [], []
        a = x
        for layer in self.layers[:-1]:
            z = a @ layer.weights.T + layer.bias
            pre_bn.append(z)
            if layer.bn:
                z, cache = layer.bn.forward(z, training)
            else:
                cache = None
            bn_caches.append(cache)
            pre_act.append(z)
            a = np.maximum(z, 0.0)
            post_act.append(a)
        out = self.layers[-1]
        logits = a @ out.weights.T + out.bias
        return ForwardTrace(
            inputs=x,
            pre_bn=tuple(pre_bn),
            pre_act=tuple(pre_act),
            post_act=tuple(post_act),
            logits=logits,
            bn_caches=tuple(bn_caches),
        )

    def backward(self, trace: ForwardTrace, labels: np.ndarray) -> Gradients:
        """Analytic gradients of the mean cross-entropy over the minibatch.

        Gradients are returned for every position, including pruned ones; the
        caller zeroes masked entries (see :meth:`Gradients.zero_masked`).
        """
        labels = np.asarray(labels)
        loss = cross_entropy(trace.logits, labels)
        n = trace.batch_size
        n_layers = len(self.layers)

        d_w = [None] * n_layers
        d_b = [None] * n_layers
        d_gamma: list[np.ndarray | None] = [None] * n_layers
        d_beta: list[np.ndarray | None] = [None] * n_layers

        delta = _softmax(trace.logits)
        delta[np.arange(n), labels] -= 1.0
        delta /= n

        for i in range(n_layers - 1, -1, -1):
            layer = self.layers[i]
            layer_in = trace.post_act[i - 1] if i > 0 else trace.inputs
            if i < n_layers - 1:
                # through ReLU, then BN when present
                delta = delta * (trace.pre_act[i] > 0)
                if layer.bn:
                    delta, d_gamma[i], d_beta[i] = layer.bn.backward(
                        delta, trace.bn_caches[i]
                    )
            d_w[i] = delta.T @ layer_in
            d_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = delta @ layer.weights
        return Gradients(loss=loss, weights=d_w, biases=d_b,
                         bn_gammas=d_gamma, bn_betas=d_beta)

    # -- convenience ----------------------------------------------------------

    def predict(self, x: np.ndarray, batch_size: int = 512) -> np.ndarray:
        """Class predictions in eval mode, batched to bound memory."""
        outputs = []
        for start in range(0, len(x), batch_size):
            trace = self.forward(x[start:start + batch_size], training=False)
            outputs.append(np.argmax(trace.logits, axis=1))
        return np.concatenate(outputs) if outputs else np.empty(0, dtype=int)

    def accuracy(self, x: np.ndarray, y: np.ndarray, batch_size: int = 512) -> float:
        return float(np.mean(self.predict(x, batch_size) == np.asarray(y)))
