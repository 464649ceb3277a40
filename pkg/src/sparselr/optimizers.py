"""Parameter-update rules: SGD with momentum, Adam, RMSProp.

Each optimizer consumes a per-iteration learning rate supplied by the
schedule module and updates parameter arrays in place. Weight decay is the
additive L2 convention (``g += wd * w``) for all three rules, so a masked
position (weight 0, gradient 0) accumulates nothing and never moves.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidShapeError, NumericFaultError

__all__ = ["SGD", "Adam", "RMSProp", "make_optimizer"]


class _Optimizer:
    """Shared buffer bookkeeping; subclasses implement `_update`."""

    def __init__(self, weight_decay: float = 0.0):
        if weight_decay < 0:
            raise ValueError(f"weight decay must be >= 0, got {weight_decay}")
        self.weight_decay = weight_decay
        self.step_count = 0
        self._buffers: list[dict] = []

    def reset(self) -> None:
        """Zero all accumulators and the step counter (idempotent)."""
        self.step_count = 0
        self._buffers = []

    def step(self, params: list[np.ndarray], grads: list[np.ndarray], lr: float) -> None:
        """Update ``params`` in place from matching ``grads`` at rate ``lr``."""
        if lr < 0:
            raise ValueError(f"learning rate must be >= 0, got {lr}")
        if len(params) != len(grads):
            raise InvalidShapeError(
                f"{len(params)} parameter tensors but {len(grads)} gradients"
            )
        if not self._buffers:
            self._buffers = [self._new_buffer(p) for p in params]
        if len(self._buffers) != len(params):
            raise InvalidShapeError("parameter list changed size between steps")
        self.step_count += 1
        for param, grad, buf in zip(params, grads, self._buffers):
            if param.shape != grad.shape:
                raise InvalidShapeError(
                    f"gradient shape {grad.shape} != parameter shape {param.shape}"
                )
            if not np.all(np.isfinite(grad)):
                raise NumericFaultError("non-finite gradient passed to optimizer")
            g = grad
            if self.weight_decay:
                g = g + self.weight_decay * param
            self._update(param, g, buf, lr)

    def _new_buffer(self, param: np.ndarray) -> dict:
        raise NotImplementedError

    def _update(self, param, g, buf, lr: float) -> None:
        raise NotImplementedError


class SGD(_Optimizer):
    """Stochastic gradient descent with classical momentum.

    v <- momentum * v + g;  w <- w - lr * v
    """

    def __init__(self, momentum: float = 0.0, weight_decay: float = 0.0):
        super().__init__(weight_decay)
        if not 0.0 <= momentum < 1.0:
            raise ValueError(f"momentum must lie in [0, 1), got {momentum}")
        self.momentum = momentum

    def _new_buffer(self, param):
        return {"v": np.zeros_like(param)}

    def _update(self, param, g, buf, lr):
        if self.momentum:
            buf["v"] *= self.momentum
            buf["v"] += g
            g = buf["v"]
        param -= (lr * g).astype(param.dtype, copy=False)


class Adam(_Optimizer):
    """Adam with bias correction. Defaults: betas (0.9, 0.999), eps 1e-8."""

    def __init__(self, betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0):
        super().__init__(weight_decay)
        self.betas = betas
        self.eps = eps

    def _new_buffer(self, param):
        return {"m": np.zeros_like(param), "v": np.zeros_like(param)}

    def _update(self, param, g, buf, lr):
        b1, b2 = self.betas
        buf["m"] *= b1
        buf["m"] += (1.0 - b1) * g
        buf["v"] *= b2
        buf["v"] += (1.0 - b2) * g * g
        m_hat = buf["m"] / (1.0 - b1 ** self.step_count)
        v_hat = buf["v"] / (1.0 - b2 ** self.step_count)
        param -= (lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(param.dtype, copy=False)


class RMSProp(_Optimizer):
    """RMSProp. Defaults: decay 0.99, eps 1e-8."""

    def __init__(self, decay: float = 0.99, eps: float = 1e-8,
                 weight_decay: float = 0.0):
        super().__init__(weight_decay)
        self.decay = decay
        self.eps = eps

    def _new_buffer(self, param):
        return {"v": np.zeros_like(param)}

    def _update(self, param, g, buf, lr):
        buf["v"] *= self.decay
        buf["v"] += (1.0 - self.decay) * g * g
        param -= (lr * g / (np.sqrt(buf["v"]) + self.eps)).astype(param.dtype, copy=False)


def make_optimizer(kind: str, momentum: float = 0.9,
                   weight_decay: float = 0.0) -> _Optimizer:
    """Optimizer by config name: 'sgd' | 'adam' | 'rmsprop'."""
    kind = kind.lower()
    if kind == "sgd":
        return SGD(momentum=momentum, weight_decay=weight_decay)
    if kind == "adam":
        return Adam(weight_decay=weight_decay)
    if kind == "rmsprop":
        return RMSProp(weight_decay=weight_decay)
    raise ValueError(f"unknown optimizer '{kind}'")
