"""Learning-rate schedules with per-pruning-cycle rewinding.

Five schedule families are supported. Four are fixed benchmarks (constant,
linear decay, triangular cyclical, warmup-with-drops); the fifth, the
s-cyclical schedule, reuses the warmup shape but grows its amplitude
(``max_lr``) across pruning cycles along a logistic curve in the fraction
of pruned weights. All schedules are evaluated per training iteration and
are rewound to iteration 0 at the start of every pruning cycle, so for the
benchmarks every cycle sees an identical trajectory; only the s-cyclical
amplitude depends on the cycle index.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

__all__ = [
    "Constant",
    "Decay",
    "Cyclical",
    "Warmup",
    "SCyclical",
    "ScheduleSpec",
    "CycleClock",
    "scyc_max_lr",
    "lr_at",
    "peak_lr",
    "on_cycle_start",
    "with_amplitude",
    "parse_schedule",
    "format_schedule",
]

# gamma is clamped away from {0, 1} before the power so very large cycle
# indices cannot overflow
_GAMMA_GUARD = 1e-12


def _check_drops(drops: tuple[int, ...]) -> None:
    for d in drops:
        if d < 0:
            raise ValueError(f"drop mark must be non-negative, got {d}")
    if any(b <= a for a, b in zip(drops, drops[1:])):
        raise ValueError(f"drop marks must be strictly increasing, got {drops}")


@dataclass(frozen=True)
class Constant:
    """Hold the learning rate at ``a`` forever."""

    a: float

    def __post_init__(self):
        if self.a < 0:
            raise ValueError(f"rate must be >= 0, got {self.a}")


@dataclass(frozen=True)
class Decay:
    """Decay linearly from ``a`` to 0 over ``b`` iterations, then stay at 0."""

    a: float
    b: int

    def __post_init__(self):
        if self.a < 0:
            raise ValueError(f"rate must be >= 0, got {self.a}")
        if self.b < 1:
            raise ValueError(f"decay horizon must be >= 1 iteration, got {self.b}")


@dataclass(frozen=True)
class Cyclical:
    """Triangular wave between ``a`` and ``b`` with step size ``c`` iterations.

    The rate is ``a`` at iteration 0, ``b`` at iteration ``c``, back to ``a``
    at ``2c``; the period is ``2c``.
    """

    a: float
    b: float
    c: int

    def __post_init__(self):
        if self.a < 0:
            raise ValueError(f"lower rate must be >= 0, got {self.a}")
        if self.b < self.a:
            raise ValueError(f"upper rate {self.b} must be >= lower rate {self.a}")
        if self.c < 1:
            raise ValueError(f"step size must be >= 1 iteration, got {self.c}")


@dataclass(frozen=True)
class Warmup:
    """Ramp linearly to ``a`` over ``b`` iterations, drop 10x at each mark.

    A drop mark applies from its iteration onward (``iter >= mark``), so when
    the first mark coincides with the ramp end the peak is attained only at
    that single iteration.
    """

    a: float
    b: int
    drops: tuple[int, ...] = ()

    def __post_init__(self):
        if self.a < 0:
            raise ValueError(f"peak rate must be >= 0, got {self.a}")
        if self.b < 1:
            raise ValueError(f"ramp length must be >= 1 iteration, got {self.b}")
        object.__setattr__(self, "drops", tuple(int(d) for d in self.drops))
        _check_drops(self.drops)


@dataclass(frozen=True)
class SCyclical:
    """Warmup whose amplitude grows across pruning cycles.

    For cycle ``m`` the amplitude is ``scyc_max_lr(epsilon, delta, prune_rate,
    q, beta, m)``; the within-cycle shape is ``Warmup(amplitude, b, drops)``.
    """

    epsilon: float
    delta: float
    q: int
    beta: float
    prune_rate: float
    b: int
    drops: tuple[int, ...] = ()

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"lower bound must be >= 0, got {self.epsilon}")
        if self.delta < 0:
            raise ValueError(f"range must be >= 0, got {self.delta}")
        if self.q < 0:
            raise ValueError(f"delay term must be >= 0, got {self.q}")
        if self.beta <= 0:
            raise ValueError(f"shape control term must be > 0, got {self.beta}")
        if not 0.0 < self.prune_rate < 1.0:
            raise ValueError(f"prune rate must lie in (0, 1), got {self.prune_rate}")
        if self.b < 1:
            raise ValueError(f"ramp length must be >= 1 iteration, got {self.b}")
        object.__setattr__(self, "drops", tuple(int(d) for d in self.drops))
        _check_drops(self.drops)


ScheduleSpec = Constant | Decay | Cyclical | Warmup | SCyclical


@dataclass(frozen=True)
class CycleClock:
    """Position inside a run: completed pruning cycles and iteration within."""

    cycle: int
    iteration: int = 0

    def __post_init__(self):
        if self.cycle < 0 or self.iteration < 0:
            raise ValueError("cycle and iteration must be non-negative")

    def advance(self) -> "CycleClock":
        return CycleClock(self.cycle, self.iteration + 1)


def scyc_max_lr(
    epsilon: float, delta: float, prune_rate: float, q: int, beta: float, m: int
) -> float:
    """Amplitude of the s-cyclical schedule at pruning cycle ``m``.

    Returns ``epsilon`` while ``m <= q``; afterwards a logistic in the
    cumulative pruned fraction ``gamma = 1 - (1 - prune_rate)**(m - q)``::

        max_lr = delta / (1 + (gamma / (1 - gamma))**(-beta)) + epsilon

    The value grows monotonically from ``epsilon`` toward ``epsilon + delta``.
    """
    if m <= q:
        return epsilon
    gamma = 1.0 - (1.0 - prune_rate) ** (m - q)
    gamma = min(max(gamma, _GAMMA_GUARD), 1.0 - _GAMMA_GUARD)
    odds = gamma / (1.0 - gamma)
    return delta / (1.0 + odds ** (-beta)) + epsilon


def _warmup_lr(a: float, b: int, drops: tuple[int, ...], iteration: int) -> float:
    ramp = min(iteration / b, 1.0)
    n_drops = sum(1 for d in drops if d <= iteration)
    return a * ramp * 10.0 ** (-n_drops)


def lr_at(spec: ScheduleSpec, clock: CycleClock) -> float:
    """Learning rate of ``spec`` at the given clock position."""
    it = clock.iteration
    if isinstance(spec, Constant):
        return spec.a
    if isinstance(spec, Decay):
        return spec.a * max(0.0, 1.0 - it / spec.b)
    if isinstance(spec, Cyclical):
        phase = it % (2 * spec.c)
        if phase <= spec.c:
            frac = phase / spec.c
        else:
            frac = (2 * spec.c - phase) / spec.c
        return spec.a + (spec.b - spec.a) * frac
    if isinstance(spec, Warmup):
        return _warmup_lr(spec.a, spec.b, spec.drops, it)
    if isinstance(spec, SCyclical):
        amp = scyc_max_lr(
            spec.epsilon, spec.delta, spec.prune_rate, spec.q, spec.beta, clock.cycle
        )
        return _warmup_lr(amp, spec.b, spec.drops, it)
    raise TypeError(f"unknown schedule spec: {spec!r}")


def peak_lr(spec: ScheduleSpec, m: int) -> float:
    """Largest learning rate the schedule can reach during cycle ``m``."""
    if isinstance(spec, (Constant, Decay, Warmup)):
        return spec.a
    if isinstance(spec, Cyclical):
        return spec.b
    if isinstance(spec, SCyclical):
        return scyc_max_lr(
            spec.epsilon, spec.delta, spec.prune_rate, spec.q, spec.beta, m
        )
    raise TypeError(f"unknown schedule spec: {spec!r}")


def on_cycle_start(spec: ScheduleSpec, m: int) -> CycleClock:
    """Rewind the schedule for pruning cycle ``m``: iteration restarts at 0."""
    if m < 0:
        raise ValueError(f"cycle index must be >= 0, got {m}")
    return CycleClock(cycle=m, iteration=0)


def with_amplitude(spec: Warmup | SCyclical, a: float) -> Warmup:
    """Warmup with the same shape as ``spec`` but a fixed amplitude ``a``.

    Used by the oracle grid search, which sweeps candidate amplitudes over
    one fixed within-cycle shape.
    """
    return Warmup(a=a, b=spec.b, drops=spec.drops)


# ---------------------------------------------------------------------------
# Positional text form, as used in experiment config files:
#   constant(a) | decay(a, b) | cyclical(a, b, c)
#   warmup(a, b, c, d, e) | scyc(epsilon, delta, q, beta, b, c, d, e)
# Iteration counts accept a k/K suffix (10K == 10000); absent drop marks are
# written "nil".
# ---------------------------------------------------------------------------

_SCHED_RE = re.compile(r"^\s*([a-z_]+)\s*\(([^)]*)\)\s*$", re.IGNORECASE)


def _split_args(body: str, name: str, count: int) -> list[str]:
    args = [a.strip() for a in body.split(",")] if body.strip() else []
    if len(args) != count:
        raise ValueError(
            f"schedule '{name}' takes {count} parameters, got {len(args)}"
        )
    return args


def _num(tok: str) -> float:
    if tok and tok[-1] in "kK":
        return float(tok[:-1]) * 1000.0
    return float(tok)


def _iters(tok: str) -> int:
    val = _num(tok)
    if val != int(val):
        raise ValueError(f"iteration count must be an integer, got {tok!r}")
    return int(val)


def _drop_marks(tokens: list[str]) -> tuple[int, ...]:
    return tuple(_iters(t) for t in tokens if t.lower() != "nil")


def parse_schedule(text: str, prune_rate: float = 0.2) -> ScheduleSpec:
    """Parse the positional schedule form used in config files.

    ``prune_rate`` feeds the s-cyclical amplitude law and is taken from the
    surrounding experiment config (the positional form does not carry it).
    """
    match = _SCHED_RE.match(text)
    if not match:
        raise ValueError(f"malformed schedule string: {text!r}")
    name = match.group(1).lower()
    body = match.group(2)
    if name == "constant":
        (a,) = _split_args(body, name, 1)
        return Constant(_num(a))
    if name == "decay":
        a, b = _split_args(body, name, 2)
        return Decay(_num(a), _iters(b))
    if name == "cyclical":
        a, b, c = _split_args(body, name, 3)
        return Cyclical(_num(a), _num(b), _iters(c))
    if name == "warmup":
        a, b, *marks = _split_args(body, name, 5)
        return Warmup(_num(a), _iters(b), _drop_marks(marks))
    if name == "scyc":
        eps, delta, q, beta, b, *marks = _split_args(body, name, 8)
        return SCyclical(
            epsilon=_num(eps),
            delta=_num(delta),
            q=_iters(q),
            beta=_num(beta),
            prune_rate=prune_rate,
            b=_iters(b),
            drops=_drop_marks(marks),
        )
    raise ValueError(f"unknown schedule '{name}'")


def _fmt_marks(drops: tuple[int, ...], slots: int) -> str:
    toks = [str(d) for d in drops] + ["nil"] * (slots - len(drops))
    return ", ".join(toks)


def format_schedule(spec: ScheduleSpec) -> str:
    """Inverse of :func:`parse_schedule` (drop marks padded with ``nil``)."""
    if isinstance(spec, Constant):
        return f"constant({spec.a!r})"
    if isinstance(spec, Decay):
        return f"decay({spec.a!r}, {spec.b})"
    if isinstance(spec, Cyclical):
        return f"cyclical({spec.a!r}, {spec.b!r}, {spec.c})"
    if isinstance(spec, Warmup):
        return f"warmup({spec.a!r}, {spec.b}, {_fmt_marks(spec.drops, 3)})"
    if isinstance(spec, SCyclical):
        return (
            f"scyc({spec.epsilon!r}, {spec.delta!r}, {spec.q}, {spec.beta!r}, "
            f"{spec.b}, {_fmt_marks(spec.drops, 3)})"
        )
    raise TypeError(f"unknown schedule spec: {spec!r}")
