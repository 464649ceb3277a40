"""Flat key-value experiment config files.

Format: one ``key = value`` per line, ``#`` comments, blank lines ignored.
Schedules use the positional text form (see ``schedules.parse_schedule``)
so parameter lists stay citable. Unknown keys are rejected; every invariant
violation is reported with the offending key and line.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError
from .harness import DatasetSource, ExperimentConfig
from .pruning import PruneCriterion
from .schedules import parse_schedule

__all__ = ["parse_config", "parse_config_text", "canonical_items"]

_KNOWN_KEYS = {
    "hidden", "use_bn", "optimizer", "momentum", "weight_decay",
    "schedule", "criterion", "imp", "prune_rate", "cycles", "epochs",
    "batch_size", "seeds", "patience",
    "dataset", "images", "labels",
    "synth_n", "synth_classes", "synth_seed", "synth_sep", "synth_clusters",
}

_DEFAULTS = {
    "hidden": "256, 256, 256",
    "use_bn": "false",
    "optimizer": "sgd",
    "momentum": "0.9",
    "weight_decay": "1e-4",
    "criterion": "global_magnitude",
    "imp": "false",
    "prune_rate": "0.2",
    "epochs": "60",
    "batch_size": "64",
    "patience": "10",
    "dataset": "synth",
    "synth_n": "8000",
    "synth_classes": "10",
    "synth_seed": "0",
    "synth_sep": "5.0",
    "synth_clusters": "2",
}

_REQUIRED = ("schedule", "cycles", "seeds")


def _parse_lines(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        if not val:
            raise ConfigError(f"line {lineno}: empty value for '{key}'")
        values[key] = val
    return values


def _bool(key: str, val: str) -> bool:
    low = val.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError(f"key '{key}': expected a boolean, got {val!r}")


def _int(key: str, val: str) -> int:
    try:
        return int(val)
    except ValueError:
        raise ConfigError(f"key '{key}': expected an integer, got {val!r}") from None


def _float(key: str, val: str) -> float:
    try:
        return float(val)
    except ValueError:
        raise ConfigError(f"key '{key}': expected a number, got {val!r}") from None


def _int_list(key: str, val: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok.strip()) for tok in val.split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"key '{key}': expected integers, got {val!r}") from None


def parse_config_text(text: str) -> tuple[ExperimentConfig, dict[str, str]]:
    """Parse config text; returns (config, resolved key/value map).

    The resolved map (defaults included) feeds the run-manifest hash.
    """
    values = _parse_lines(text)
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key '{key}'")
    resolved = dict(_DEFAULTS)
    resolved.update(values)

    prune_rate = _float("prune_rate", resolved["prune_rate"])
    try:
        schedule = parse_schedule(resolved["schedule"], prune_rate=prune_rate)
    except ValueError as exc:
        raise ConfigError(f"key 'schedule': {exc}") from None
    try:
        criterion = PruneCriterion(resolved["criterion"],
                                   imp_rewind=_bool("imp", resolved["imp"]))
    except ValueError as exc:
        raise ConfigError(f"key 'criterion': {exc}") from None

    kind = resolved["dataset"]
    if kind == "idx":
        dataset = DatasetSource(
            kind="idx",
            images=resolved.get("images"),
            labels=resolved.get("labels"),
        )
    elif kind == "synth":
        dataset = DatasetSource(
            kind="synth",
            n=_int("synth_n", resolved["synth_n"]),
            classes=_int("synth_classes", resolved["synth_classes"]),
            seed=_int("synth_seed", resolved["synth_seed"]),
            class_sep=_float("synth_sep", resolved["synth_sep"]),
            clusters=_int("synth_clusters", resolved["synth_clusters"]),
        )
    else:
        raise ConfigError(f"key 'dataset': expected 'idx' or 'synth', got {kind!r}")

    config = ExperimentConfig(
        hidden_layers=_int_list("hidden", resolved["hidden"]),
        schedule=schedule,
        criterion=criterion,
        prune_rate=prune_rate,
        cycles=_int("cycles", resolved["cycles"]),
        epochs=_int("epochs", resolved["epochs"]),
        batch_size=_int("batch_size", resolved["batch_size"]),
        seeds=_int_list("seeds", resolved["seeds"]),
        patience=_int("patience", resolved["patience"]),
        optimizer=resolved["optimizer"].lower(),
        momentum=_float("momentum", resolved["momentum"]),
        weight_decay=_float("weight_decay", resolved["weight_decay"]),
        use_bn=_bool("use_bn", resolved["use_bn"]),
        dataset=dataset,
    )
    if config.optimizer not in ("sgd", "adam", "rmsprop"):
        raise ConfigError(f"key 'optimizer': unknown optimizer '{config.optimizer}'")
    return config, resolved


def parse_config(path) -> ExperimentConfig:
    """Parse and validate an experiment config file."""
    text = Path(path).read_text()
    config, _ = parse_config_text(text)
    return config


def canonical_items(resolved: dict[str, str]) -> list[str]:
    """Sorted ``key=value`` lines; the manifest hashes these, so the hash is
    stable under key reordering in the source file."""
    return [f"{k}={v}" for k, v in sorted(resolved.items())]
