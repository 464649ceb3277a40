"""CSV emission/parsing for run artifacts, plus the run manifest.

Record CSV schema (fixed order):
    cycle,m,lambda,max_lr,best_val_acc,early_stop_test_acc,grad_std,grad_tail_mass,seed
Floats are serialized with repr so parse(emit(x)) == x exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from .harness import CycleRecord, OracleCycle
from .instrumentation import HistogramReport

__all__ = [
    "RECORD_COLUMNS",
    "RecordRow",
    "HistRow",
    "RunManifest",
    "record_rows",
    "write_records",
    "read_records",
    "hist_rows",
    "write_histograms",
    "read_histograms",
    "write_oracle",
    "config_hash",
]

RECORD_COLUMNS = (
    "cycle", "m", "lambda", "max_lr", "best_val_acc",
    "early_stop_test_acc", "grad_std", "grad_tail_mass", "seed",
)

ORACLE_COLUMNS = (
    "m", "lambda", "well_tuned_max_lr", "region_lo", "region_hi",
    "scyc_estimate", "seed",
)

HIST_COLUMNS = (
    "seed", "m", "kind", "bin_index", "bin_lo", "bin_hi", "count",
    "n", "sample_std", "tail_lo", "tail_hi", "tail_mass",
)


class RecordRow(NamedTuple):
    cycle: int
    m: int
    lam: float
    max_lr: float
    best_val_acc: float
    early_stop_test_acc: float
    grad_std: float
    grad_tail_mass: float
    seed: int


class HistRow(NamedTuple):
    seed: int
    m: int
    kind: str  # 'grad' | 'hidden'
    bin_index: int
    bin_lo: float
    bin_hi: float
    count: int
    n: int
    sample_std: float
    tail_lo: float
    tail_hi: float
    tail_mass: float


def record_rows(records_by_seed: dict[int, list[CycleRecord]]) -> list[RecordRow]:
    rows = []
    for seed, records in records_by_seed.items():
        for i, r in enumerate(records):
            rows.append(RecordRow(
                cycle=i, m=r.m, lam=r.lam, max_lr=r.max_lr_used,
                best_val_acc=r.best_val_acc,
                early_stop_test_acc=r.early_stop_test_acc,
                grad_std=r.grad_hist.sample_std if r.grad_hist else float("nan"),
                grad_tail_mass=r.grad_hist.tail_mass if r.grad_hist else float("nan"),
                seed=seed,
            ))
    return rows


def write_records(path, rows: list[RecordRow]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(RECORD_COLUMNS)
        for r in rows:
            writer.writerow([
                r.cycle, r.m, repr(r.lam), repr(r.max_lr),
                repr(r.best_val_acc), repr(r.early_stop_test_acc),
                repr(r.grad_std), repr(r.grad_tail_mass), r.seed,
            ])


def read_records(path) -> list[RecordRow]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = tuple(next(reader))
        if header != RECORD_COLUMNS:
            raise ValueError(f"unexpected record CSV header: {header}")
        return [
            RecordRow(int(c), int(m), float(lam), float(lr), float(va),
                      float(ta), float(gs), float(gt), int(seed))
            for c, m, lam, lr, va, ta, gs, gt, seed in reader
        ]


def hist_rows(records_by_seed: dict[int, list[CycleRecord]]) -> list[HistRow]:
    rows = []
    for seed, records in records_by_seed.items():
        for r in records:
            for kind, hist in (("grad", r.grad_hist), ("hidden", r.hidden_hist)):
                if hist is None:
                    continue
                rows.extend(_hist_to_rows(seed, r.m, kind, hist))
    return rows


def _hist_to_rows(seed: int, m: int, kind: str, hist: HistogramReport) -> list[HistRow]:
    return [
        HistRow(seed=seed, m=m, kind=kind, bin_index=i,
                bin_lo=hist.bin_edges[i], bin_hi=hist.bin_edges[i + 1],
                count=count, n=hist.n, sample_std=hist.sample_std,
                tail_lo=hist.tail_lo, tail_hi=hist.tail_hi,
                tail_mass=hist.tail_mass)
        for i, count in enumerate(hist.counts)
    ]


def write_histograms(path, rows: list[HistRow]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(HIST_COLUMNS)
        for r in rows:
            writer.writerow([
                r.seed, r.m, r.kind, r.bin_index, repr(r.bin_lo), repr(r.bin_hi),
                r.count, r.n, repr(r.sample_std), repr(r.tail_lo),
                repr(r.tail_hi), repr(r.tail_mass),
            ])


def read_histograms(path) -> list[HistRow]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = tuple(next(reader))
        if header != HIST_COLUMNS:
            raise ValueError(f"unexpected histogram CSV header: {header}")
        return [
            HistRow(int(s), int(m), kind, int(bi), float(lo), float(hi),
                    int(cnt), int(n), float(std), float(tl), float(th), float(tm))
            for s, m, kind, bi, lo, hi, cnt, n, std, tl, th, tm in reader
        ]


def write_oracle(path, results_by_seed: dict[int, list[OracleCycle]]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(ORACLE_COLUMNS)
        for seed, cycles in results_by_seed.items():
            for r in cycles:
                writer.writerow([
                    r.m, repr(r.lam), repr(r.well_tuned_max_lr),
                    repr(r.region_lo), repr(r.region_hi),
                    repr(r.scyc_estimate), seed,
                ])


def write_oracle_grid(path, results_by_seed: dict[int, list[OracleCycle]]) -> None:
    """Per-branch validation accuracies behind each oracle row."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(("m", "max_lr", "val_acc", "seed"))
        for seed, cycles in results_by_seed.items():
            for r in cycles:
                for g, a in zip(r.grid, r.grid_val_accs):
                    writer.writerow([r.m, repr(g), repr(a), seed])


def config_hash(canonical_lines: list[str]) -> str:
    digest = hashlib.sha256("\n".join(canonical_lines).encode()).hexdigest()
    return digest[:16]


@dataclass(frozen=True)
class RunManifest:
    """What a run produced and from which configuration."""

    config_hash: str
    seeds: tuple[int, ...]
    records_csv: str
    histograms_csv: str
    svg_dir: str
    tool_version: str

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        data = json.loads(Path(path).read_text())
        data["seeds"] = tuple(data["seeds"])
        return cls(**data)
