"""Distribution instrumentation: gradient/hidden-representation histograms.

Histograms use equal-width bins over the observed [min, max] with the
Sturges bin count, sample standard deviation (n-1 denominator), and the
fraction of samples falling strictly outside a [tail_lo, tail_hi] band.
A small analytic model predicts how pruning narrows a neuron's
pre-activation variance: dropping k of n i.i.d. input terms scales the
variance from n*v to (n-k)*v.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySampleError
from .network import Network

__all__ = [
    "HistogramReport",
    "sturges_bin_count",
    "build_histogram",
    "variance_model",
    "snapshot_distributions",
    "alive_gradient_sample",
    "symmetric_tails",
]


@dataclass(frozen=True)
class HistogramReport:
    """Binned view of one sample plus spread and tail statistics."""

    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    n: int
    sample_std: float
    tail_lo: float
    tail_hi: float
    tail_mass: float


def sturges_bin_count(n: int) -> int:
    """ceil(log2(n)) + 1, computed exactly on integers."""
    if n < 1:
        raise EmptySampleError(f"sample count must be >= 1, got {n}")
    return (n - 1).bit_length() + 1


def build_histogram(values, tail_lo: float, tail_hi: float) -> HistogramReport:
    """Histogram of ``values`` with Sturges binning over [min, max].

    Bins are half-open except the last, which includes the maximum. A
    zero-spread sample yields a single degenerate bin holding everything.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise EmptySampleError("cannot build a histogram from an empty sample")
    if not tail_lo < tail_hi:
        raise ValueError(f"tail thresholds must satisfy lo < hi, got {tail_lo}, {tail_hi}")
    n = v.size
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        edges = np.array([lo, hi])
        counts = np.array([n])
    else:
        k = sturges_bin_count(n)
        edges = np.linspace(lo, hi, k + 1)
        idx = np.searchsorted(edges, v, side="right") - 1
        np.clip(idx, 0, k - 1, out=idx)
        counts = np.bincount(idx, minlength=k)
    std = float(v.std(ddof=1)) if n > 1 else 0.0
    tail = float(np.mean((v < tail_lo) | (v > tail_hi)))
    return HistogramReport(
        bin_edges=tuple(float(e) for e in edges),
        counts=tuple(int(c) for c in counts),
        n=n,
        sample_std=std,
        tail_lo=float(tail_lo),
        tail_hi=float(tail_hi),
        tail_mass=tail,
    )


def variance_model(n: int, k: int, v: float) -> tuple[float, float]:
    """Pre-activation variance before and after pruning k of n input terms.

    With i.i.d. terms of variance ``v``, the sum of n terms has variance
    n*v; removing k of them leaves (n-k)*v.
    """
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    if v < 0:
        raise ValueError(f"per-term variance must be >= 0, got {v}")
    return n * v, (n - k) * v


def symmetric_tails(values: np.ndarray, quantile: float = 94.0) -> tuple[float, float]:
    t = float(np.percentile(np.abs(values), quantile))
    if t <= 0.0:
        t = 1.0  # all-zero sample: any positive band gives tail mass 0
    return -t, t


def alive_gradient_sample(net: Network, grads: list[np.ndarray]) -> np.ndarray:
    """Flatten weight gradients at alive positions across all layers."""
    return np.concatenate(
        [g[mask].ravel() for g, mask in zip(grads, net.masks)]
    ).astype(np.float64)


def snapshot_distributions(
    net: Network,
    batch: np.ndarray,
    labels: np.ndarray | None = None,
    grads: list[np.ndarray] | None = None,
    grad_tails: tuple[float, float] | None = None,
    hidden_tails: tuple[float, float] | None = None,
) -> tuple[HistogramReport, HistogramReport]:
    """Histograms of alive-weight gradients and hidden representations.

    ``grads`` are the per-layer weight gradients to histogram (normally the
    end-of-cycle average over a full training pass); when absent they are
    computed from ``batch``/``labels``. Hidden representations are the
    post-activation outputs of all hidden layers on ``batch``. Tail bands
    default to the 94th-percentile magnitude of each sample.
    """
    if grads is None:
        if labels is None:
            raise ValueError("labels are required to derive gradients from the batch")
        trace = net.forward(batch, training=False)
        grads = net.backward(trace, labels).weights
        hidden = trace.post_act
    else:
        hidden = net.forward(batch, training=False).post_act

    grad_sample = alive_gradient_sample(net, grads)
    hidden_sample = np.concatenate([h.ravel() for h in hidden]).astype(np.float64)

    g_tails = grad_tails if grad_tails is not None else symmetric_tails(grad_sample)
    h_tails = hidden_tails if hidden_tails is not None else symmetric_tails(hidden_sample)
    return (
        build_histogram(grad_sample, *g_tails),
        build_histogram(hidden_sample, *h_tails),
    )
