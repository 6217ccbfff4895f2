"""Benchmark harness: build on planted data, query, and record work per query."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Seed, as_seed, braun_blanquet, hamming_distance
from .datasets import gen_hamming, gen_sets
from .errors import VerificationError
from .index import (
    QueryStats,
    build_hamming_index,
    build_similarity_index,
    plan_hamming_params,
    query_hamming,
    query_similarity,
)

__all__ = ["BenchRecord", "COLUMNS", "bench_hamming", "bench_sets", "fit_exponent", "format_bench_csv", "parse_bench_csv", "write_bench_csv"]


@dataclass
class BenchRecord:
    kind: str
    n: int
    d: int
    params: str
    build_seconds: float
    query_us_mean: float
    query_us_median: float
    candidates: float  # distinct points checked before the answer, per query
    candidates_all: float  # distinct points in all probed buckets, per query
    recall: float
    exponent: float  # log(candidates_all) / log(n)


COLUMNS = [f.name for f in fields(BenchRecord)]


def _record(kind, n, d, summary, build_s, times, first, allc, hits, nq) -> BenchRecord:
    mean_all = float(np.mean(allc)) if allc else 0.0
    return BenchRecord(
        kind, n, d, summary, build_s,
        float(np.mean(times) * 1e6), float(np.median(times) * 1e6),
        float(np.mean(first)), mean_all, hits / nq,
        math.log(max(mean_all, 1.0)) / math.log(n),
    )


def bench_hamming(
    ns: Sequence[int], d: int, r: int, c: float, *, queries: int = 1000, seed: Seed | int | None = 0,
    mode: str = "theorem", reduction: str = "partition", strict: bool = False, check: bool = True,
) -> list[BenchRecord]:
    """One record per n.  Every query has a planted neighbor at distance exactly r.

    With ``check`` a miss raises :class:`VerificationError`, since a
    Las Vegas index must never miss.
    """
    seed = as_seed(seed)
    out = []
    for n in ns:
        ds = gen_hamming(n, d, r, seed.child(n, 0), planted=0, queries=queries)
        params = plan_hamming_params(n, d, r, c, mode, reduction=reduction, strict=strict)
        t0 = time.perf_counter()
        index = build_hamming_index(ds.points, params, seed.child(n, 1))
        build_s = time.perf_counter() - t0
        times, first, allc, hits = [], [], [], 0
        for q in ds.queries:
            st = QueryStats()
            t0 = time.perf_counter()
            ans = query_hamming(index, q, stats=st)
            times.append(time.perf_counter() - t0)
            first.append(st.candidates)
            full = QueryStats()
            query_hamming(index, q, exhaustive=True, stats=full)
            allc.append(full.candidates)
            if ans is not None and hamming_distance(ds.points[ans], q) <= c * r:
                hits += 1
            elif check:
                raise VerificationError(f"n={n}: planted query missed")
        summary = (
            f"{reduction} S={params.S} B={params.block} b={params.b} l={params.l} "
            f"r_b={params.r_b} t_b={params.t_b} {params.split}"
        )
        out.append(_record("hamming", n, d, summary, build_s, times, first, allc, hits, max(queries, 1)))
    return out


def bench_sets(
    ns: Sequence[int], d: int, w: int, b1: float, b2: float, *, queries: int = 1000,
    seed: Seed | int | None = 0, strict: bool = False, check: bool = True,
) -> list[BenchRecord]:
    seed = as_seed(seed)
    out = []
    for n in ns:
        ds = gen_sets(n, d, w, b1, seed.child(n, 0), planted=0, queries=queries)
        t0 = time.perf_counter()
        index = build_similarity_index(ds.points, b1, b2, seed.child(n, 1), strict=strict)
        build_s = time.perf_counter() - t0
        times, first, allc, hits = [], [], [], 0
        for q in ds.queries:
            st = QueryStats()
            t0 = time.perf_counter()
            ans = query_similarity(index, q, stats=st)
            times.append(time.perf_counter() - t0)
            first.append(st.candidates)
            full = QueryStats()
            query_similarity(index, q, exhaustive=True, stats=full)
            allc.append(full.candidates)
            if ans is not None and braun_blanquet(ds.points[ans], q) > b2:
                hits += 1
            elif check:
                raise VerificationError(f"n={n}: planted query missed")
        p = index.groups[0].params
        summary = f"{p.mode} k={p.k} r={p.r}" + (f" a={p.plan['a']} b={p.plan['b']}" if p.plan else "")
        out.append(_record("sets", n, d, summary, build_s, times, first, allc, hits, max(queries, 1)))
    return out


def fit_exponent(records: Sequence[BenchRecord], column: str = "candidates_all") -> float:
    """Least-squares slope of log(column) against log(n)."""
    x = np.log([rec.n for rec in records])
    y = np.log([max(getattr(rec, column), 1e-12) for rec in records])
    return float(np.polyfit(x, y, 1)[0])


def format_bench_csv(records: Sequence[BenchRecord]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in asdict(rec).items()})
    return buf.getvalue()


def parse_bench_csv(text: str) -> list[BenchRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != COLUMNS:
        raise ValueError(f"unexpected columns {reader.fieldnames}")
    out = []
    for row in reader:
        kw = {}
        for f in fields(BenchRecord):
            kw[f.name] = {"int": int, "float": float}.get(f.type, str)(row[f.name])
        out.append(BenchRecord(**kw))
    return out


def write_bench_csv(records: Sequence[BenchRecord], path: str | Path) -> None:
    Path(path).write_text(format_bench_csv(records))
