"""Timing harness for the parametric subtyping families."""

from __future__ import annotations

import csv
import gc
import io
import time
from dataclasses import dataclass
from typing import Iterable

from .checker import CheckerConfig, Verdict, VerdictKind, check_subtype
from .core import Fsm
from .corpus import (
    FAMILIES,
    family_visits,
    gen_kbuffering,
    gen_nested_choice,
    gen_ring,
    gen_streaming,
)
from .projection import local_to_fsm

CSV_HEADER = ("family", "parameter", "verdict", "mean_seconds", "runs")

# default parameter spacing per family, matching the usual plot grids
DEFAULT_STEP = {"ring": 2, "streaming": 10, "k_buffering": 5, "nested_choice": 1}


@dataclass(frozen=True)
class BenchRecord:
    family: str
    parameter: int
    verdict: str
    mean_seconds: float
    runs: int

    def row(self) -> list[str]:
        return [self.family, str(self.parameter), self.verdict, repr(self.mean_seconds), str(self.runs)]

    @classmethod
    def from_row(cls, row: dict) -> BenchRecord:
        return cls(
            row["family"],
            int(row["parameter"]),
            row["verdict"],
            float(row["mean_seconds"]),
            int(row["runs"]),
        )


def family_instances(family: str, n: int) -> list[tuple[Fsm, Fsm]]:
    """The FSM pairs checked for one family member (one per participant for rings)."""
    if family == "ring":
        return [(local_to_fsm(s, r), local_to_fsm(p, r)) for r, s, p in gen_ring(n)]
    gens = {"streaming": gen_streaming, "k_buffering": gen_kbuffering, "nested_choice": gen_nested_choice}
    if family not in gens:
        raise ValueError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    sub, sup = gens[family](n)
    return [(local_to_fsm(sub), local_to_fsm(sup))]


def check_family(family: str, n: int, record: bool = False) -> list[Verdict]:
    cfg = CheckerConfig(visits=family_visits(family, n), record=record)
    return [check_subtype(a, b, cfg) for a, b in family_instances(family, n)]


def bench_one(family: str, n: int, runs: int = 5) -> BenchRecord:
    if runs < 5:
        raise ValueError("at least 5 timed runs are required")
    pairs = family_instances(family, n)
    cfg = CheckerConfig(visits=family_visits(family, n), record=False)

    def once() -> VerdictKind:
        return min(check_subtype(a, b, cfg).kind for a, b in pairs)

    once()  # warm-up, discarded
    total = 0.0
    kind = VerdictKind.PROVEN
    # like timeit: collector pauses scale with whatever else is alive in the
    # process, not with the instance being timed
    gc.collect()
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(runs):
            started = time.perf_counter()
            kind = once()
            total += time.perf_counter() - started
    finally:
        if was_enabled:
            gc.enable()
    return BenchRecord(family, n, str(kind), total / runs, runs)


def run_bench(family: str, params: Iterable[int], runs: int = 5) -> list[BenchRecord]:
    return [bench_one(family, n, runs) for n in params]


def parse_range(text: str, family: str | None = None, step: int | None = None) -> list[int]:
    """``a..b`` (inclusive) or a single number; spacing from ``step`` or the family default."""
    if ".." in text:
        lo_text, hi_text = text.split("..", 1)
        lo, hi = int(lo_text), int(hi_text)
    else:
        lo = hi = int(text)
    if lo > hi:
        raise ValueError(f"empty parameter range {text!r}")
    if step is None:
        step = DEFAULT_STEP.get(family, 1)
    if step < 1:
        raise ValueError("step must be positive")
    return list(range(lo, hi + 1, step))


def write_csv(records: Iterable[BenchRecord], out=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow(r.row())
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def read_csv(text: str) -> list[BenchRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    return [BenchRecord.from_row(row) for row in reader]
