"""Exhaustive and Monte Carlo verification suites.

Each suite returns rows ``(suite, case, passed, values)``; the CLI writes
them as CSV and exits nonzero when any row fails.  ``limit`` bounds the
suite size (largest B, largest n, or number of random trials, depending on
the suite).  The Monte Carlo suites use linearity of the Hamming maps:
f(x) xor f(y) = f(x xor y), so a random pair at distance D is drawn as a
random weight-D difference vector.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Callable

from fractions import Fraction

import numpy as np
from scipy.stats import binomtest

from .core import Seed, SetPoint, as_seed
from .dimred import build_l1_embedding, build_partition_reduction, build_xor_reduction, embed_point, unary_code
from .hamming_filters import (
    build_inner_code,
    build_tensored_code,
    covered_radius,
    decode_many,
)
from .index import dispatch_weights, group_by_weight
from .oracle import (
    ball_intersection_bounds,
    ball_intersection_count,
    ball_intersection_enumerate,
    binom_ratio_bounds,
    chain_holds,
)
from .splitter import build_splitter
from .turan import (
    build_base_system,
    build_perfect_hash_family,
    build_turan,
    decode,
    hash_extend,
    materialize,
    partition_extend,
    splitter_scale,
    verify_system,
)

__all__ = ["VerifyRow", "SUITES", "run_suite", "format_rows", "parse_rows", "splitter_rows", "covering_rows",
           "turan_rows", "reduction_rows", "l1_rows", "bounds_rows", "dispatch_rows"]


@dataclass(frozen=True)
class VerifyRow:
    suite: str
    case: str
    passed: bool
    values: str

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.passed))


# --- splitters ---------------------------------------------------------------------


def splitter_rows(limit: int = 16, seed=None) -> list[VerifyRow]:
    """Every subset of [B] is split within floor/ceil by some member; parts have B/l coordinates."""
    rows = []
    for l in (2, 4):
        for B in range(l, limit + 1, l):
            fam = build_splitter(B, l)
            sizes_ok = all(np.all(np.bincount(h, minlength=l) == B // l) for h in fam.functions)
            masks = np.arange(1 << B, dtype=np.int64)
            size = np.bitwise_count(masks).astype(np.int64)
            lo, hi = size // l, -(-size // l)
            ok = np.zeros(1 << B, dtype=bool)
            for h in fam.functions:
                good = np.ones(1 << B, dtype=bool)
                for j in range(l):
                    pm = int(sum(1 << i for i in np.flatnonzero(h == j)))
                    cnt = np.bitwise_count(masks & pm)
                    good &= (cnt >= lo) & (cnt <= hi)
                ok |= good
            bad = int((~ok).sum())
            rows.append(VerifyRow("splitter", f"B={B} l={l}", sizes_ok and bad == 0,
                                  f"functions={len(fam)} unsplit={bad} balanced_parts={sizes_ok}"))
    return rows


# --- covering codes ----------------------------------------------------------------


def _ball(B: int, R: int) -> list[int]:
    return [sum(1 << i for i in c) for w in range(R + 1) for c in itertools.combinations(range(B), w)]


def covering_rows(limit: int = 10, seed=None) -> list[VerifyRow]:
    """All pairs within the covered radius share a filter id (exhaustive over {0,1}^B)."""
    seed = as_seed(seed)
    rows = []
    configs = [(2, 1, 1), (5, 1, 1), (5, 2, 2)]
    for b, r_b, t_b in configs:
        for l in range(1, limit // b + 1):
            B = b * l
            inner = build_inner_code(b, r_b, seed=seed.child(b, r_b, l), t_b=t_b, mode="greedy")
            code = build_tensored_code(inner, B)
            R = covered_radius(code)
            X = ((np.arange(1 << B)[:, None] >> np.arange(B)) & 1).astype(np.uint8)
            D = [set(a.tolist()) for a in decode_many(code, X)]
            misses = sum(1 for x in range(1 << B) for e in _ball(B, R) if D[x].isdisjoint(D[x ^ e]))
            rows.append(VerifyRow("covering", f"b={b} l={l} r_b={r_b} t_b={t_b}", misses == 0,
                                  f"B={B} radius={R} inner={len(inner)} splitter={len(code.splitter)} misses={misses}"))
    return rows


# --- Turán systems ------------------------------------------------------------------


def _decode_matches_oracle(sys, subsets) -> int:
    blocks = materialize(sys)
    bad = 0
    for S in subsets:
        Sset = set(S)
        want = sorted(R for R in blocks if Sset.issuperset(R))
        bad += decode(sys, S) != want
    return bad


def turan_rows(limit: int = 12, seed=None) -> list[VerifyRow]:
    seed = as_seed(seed)
    systems = {
        "(12,6,3) planned": build_turan(12, 6, 3, seed.child(1)),
        "base (6,4,2)": build_base_system(6, 4, 2, seed.child(2)),
        "splitter b=2 over base (4,3,2)": splitter_scale(build_base_system(4, 3, 2, seed.child(3)), 2),
        "hash [9]->[5] over base (5,3,2)": hash_extend(
            build_base_system(5, 3, 2, seed.child(4)), 9, build_perfect_hash_family(9, 3, seed.child(5), M=5), seed.child(6)
        ),
        "partition a=2 over base (6,4,2)": partition_extend(build_base_system(6, 4, 2, seed.child(7)), 2, seed.child(8)),
    }
    rows = []
    for name, sys in systems.items():
        if sys.n > limit:
            continue
        ok = verify_system(sys)
        subsets = [c for s in range(sys.n + 1) for c in itertools.combinations(range(sys.n), s)]
        bad = _decode_matches_oracle(sys, subsets)
        rows.append(VerifyRow("turan", name, ok and bad == 0,
                              f"n={sys.n} k={sys.k} r={sys.r} stages={'>'.join(s.stage for s in sys.stages())} "
                              f"size={sys.size} distinct={len(materialize(sys))} covering={ok} decode_mismatch={bad}"))
    return rows


# --- reductions ---------------------------------------------------------------------


def _diff_vectors(rng, trials: int, d: int, weight) -> list[np.ndarray]:
    if np.isscalar(weight):
        weight = np.full(trials, int(weight))
    return [rng.choice(d, size=int(w), replace=False) for w in weight]


def _ci_ok(fails: int, trials: int, bound: float) -> tuple[bool, float]:
    """Consistent with a failure rate <= bound at the 99% level (one-sided exact test)."""
    if trials == 0:
        return True, 1.0
    p = binomtest(fails, trials, bound, alternative="greater").pvalue
    return p >= 0.01, p


def reduction_rows(limit: int = 100_000, seed=None) -> list[VerifyRow]:
    seed = as_seed(seed)
    rng = seed.child(0).rng()
    rows = []

    # property 1 for xor: some block distance <= dist * B / m, for arbitrary distances
    xr = build_xor_reduction(256, 16, 2, 0.5, 1 / 192, seed.child(1), block=24)
    viol, contr = 0, 0
    for z in _diff_vectors(rng, limit, xr.d, rng.integers(0, 129, size=limit)):
        g = np.bincount(xr.h[z], minlength=xr.m) & 1
        contr += int(g.sum()) > len(z)
        blocks = g.reshape(xr.S, xr.B).sum(axis=1)
        viol += blocks.min() * xr.m > len(z) * xr.B
    rows.append(VerifyRow("reduction", "xor property 1", viol == 0 and contr == 0,
                          f"pairs={limit} S={xr.S} B={xr.B} m={xr.m} violations={viol} expansions={contr}"))

    # property 2 for xor, at parameters where the block formula holds
    eps, c, r = 0.5, 2, 16
    delta = 1 / math.ceil(3 * c * r / eps)  # the smallest m allowed by 1/delta >= m
    xr2 = build_xor_reduction(2048, r, c, eps, delta, seed.child(2))
    thr = (1 - xr2.eps) * c * r * xr2.B / xr2.m
    fails, total = 0, 0
    for z in _diff_vectors(rng, limit, xr2.d, c * r):
        g = np.bincount(xr2.h[z], minlength=xr2.m) & 1
        if xr2.kind == "replicate":
            g = np.tile(g, xr2.B // xr2.m)
        blocks = g.reshape(xr2.S, xr2.B).sum(axis=1)
        fails += int((blocks < thr).sum())
        total += xr2.S
    ok, p = _ci_ok(fails, total, delta)
    rows.append(VerifyRow("reduction", "xor property 2", ok,
                          f"blocks={total} threshold={thr:.2f} failures={fails} rate={fails / total:.3g} delta={delta:.4g} kind={xr2.kind} p={p:.3g}"))

    # partition: blocks sum to the distance, some block is at most dist/S, far blocks rarely short
    pr = build_partition_reduction(256, 16, 2, 0.5, 1 << 12, seed.child(3), block=15)
    pos = np.empty(pr.d_pad, dtype=np.int64)
    pos[pr.perm] = np.arange(pr.d_pad)
    viol = 0
    for z in _diff_vectors(rng, limit, pr.d, rng.integers(0, 129, size=limit)):
        blocks = np.bincount(pos[z] // pr.B, minlength=pr.S)
        viol += (blocks.sum() != len(z)) or blocks.min() * pr.S > len(z)
    rows.append(VerifyRow("reduction", "partition property 1", viol == 0,
                          f"pairs={limit} S={pr.S} B={pr.B} violations={viol}"))

    n, eps, c, r, d = 1024, 0.5, 2, 128, 4096
    pr2 = build_partition_reduction(d, r, c, eps, n, seed.child(4))
    pos2 = np.empty(pr2.d_pad, dtype=np.int64)
    pos2[pr2.perm] = np.arange(pr2.d_pad)
    thr = (1 - eps) * c * r * pr2.B / d
    fails, total = 0, 0
    for z in _diff_vectors(rng, limit, d, c * r):
        blocks = np.bincount(pos2[z] // pr2.B, minlength=pr2.S)
        fails += int((blocks < thr).sum())
        total += pr2.S
    ok, p = _ci_ok(fails, total, 1 / n)
    rows.append(VerifyRow("reduction", "partition property 2", ok,
                          f"blocks={total} S={pr2.S} B={pr2.B} threshold={thr:.2f} failures={fails} bound=1/{n} p={p:.3g}"))
    return rows


# --- l1 embedding ---------------------------------------------------------------------


def l1_rows(limit: int = 1000, seed=None) -> list[VerifyRow]:
    seed = as_seed(seed)
    rows = []
    bad = 0
    for M in (8, 64, 256):
        for R in (1, 4, 8, 32, M):
            codes = np.array([unary_code(v, R) for v in range(M)], dtype=np.int64)
            dist = (codes[:, None, :] != codes[None, :, :]).sum(axis=2)
            vals = np.arange(M)
            bad += int((dist != np.minimum(np.abs(vals[:, None] - vals[None, :]), R)).sum())
    rows.append(VerifyRow("l1", "unary isometry up to R", bad == 0, f"M<=256 mismatches={bad}"))

    rng = seed.child(0).rng()
    d, r, c, eps, n = 3, 1.0, 2.0, 0.5, 32
    X = rng.uniform(0, 20, size=(n, d))
    emb = build_l1_embedding(X, d, r, c, eps, seed.child(1))
    U = emb.unit
    near_bad = far_bad = 0
    worst_near = worst_far = 0.0
    for _ in range(limit):
        i = int(rng.integers(n))
        step = rng.laplace(size=d)
        near = X[i] + step / np.abs(step).sum() * r * rng.uniform(0, 1)
        far = X[i] + step / np.abs(step).sum() * c * r * rng.uniform(1, 3)
        ex = embed_point(emb, X[i])
        hn = (ex.bits ^ embed_point(emb, near).bits).bit_count()
        hf = (ex.bits ^ embed_point(emb, far).bits).bit_count()
        near_bad += hn > (1 + eps) * U
        far_bad += hf < (1 - eps) * c * U
        worst_near = max(worst_near, hn / U)
        worst_far = max(worst_far, c * U / max(hf, 1))
    rows.append(VerifyRow("l1", "near pairs within (1+eps) unit", near_bad == 0,
                          f"pairs={limit} violations={near_bad} worst_ratio={worst_near:.3f} bits={emb.out_dim}"))
    rows.append(VerifyRow("l1", "far pairs beyond (1-eps) c unit", far_bad == 0,
                          f"pairs={limit} violations={far_bad} worst_inverse_ratio={worst_far:.3f}"))
    return rows


# --- appendix bounds -------------------------------------------------------------------


def bounds_rows(limit: int = 60, seed=None) -> list[VerifyRow]:
    fails = checked = 0
    for n in range(limit + 1):
        for m in range(n + 1):
            for k in range(m + 1):
                checked += 1
                fails += not chain_holds(binom_ratio_bounds(n, m, k))
    rows = [VerifyRow("bounds", f"binomial ratio chain n<={limit}", fails == 0, f"cases={checked} violations={fails}")]

    fails = checked = 0
    for d in range(1, 17):
        smax = d**0.25 / 2
        if smax < 1:
            continue
        for r in range(0, (d + 1) // 2):
            if not r < d / 2:
                continue
            for s in np.linspace(1, smax, 5):
                rep = ball_intersection_bounds(d, r, float(s))
                checked += 1
                fails += not (rep.lower <= rep.exact <= rep.upper)
    rows.append(VerifyRow("bounds", "ball intersection bracket d<=16", fails == 0, f"cases={checked} violations={fails}"))

    fails = checked = 0
    for d in range(1, 13):
        for r in range(d + 1):
            for t in range(d + 1):
                checked += 1
                fails += ball_intersection_count(d, r, t) != ball_intersection_enumerate(d, r, t)
    rows.append(VerifyRow("bounds", "intersection sum equals enumeration d<=12", fails == 0, f"cases={checked} violations={fails}"))
    return rows


# --- weight dispatch ---------------------------------------------------------------------


def dispatch_rows(limit: int = 12, seed=None) -> list[VerifyRow]:
    """For every pair of weights and every overlap reaching similarity b1, the stored weight is dispatched."""
    rows = []
    for b1 in (0.3, 0.5, 2 / 3, 0.75, 1.0):
        bf = Fraction(b1).limit_denominator(10**9)
        weights = list(range(1, limit + 1))
        misses = extra = 0
        for wq in weights:
            sent = set(dispatch_weights(wq, weights, b1))
            for w in weights:
                reachable = any(Fraction(j, max(w, wq)) >= bf for j in range(min(w, wq) + 1))
                misses += reachable and w not in sent
                extra += (not reachable) and w in sent
        rows.append(VerifyRow("dispatch", f"b1={b1:.3g} weights<= {limit}", misses == 0,
                              f"missed_groups={misses} unneeded_groups={extra}"))
    pts = [SetPoint(tuple(range(w)), 8) for w in (3, 3, 5)]
    groups = group_by_weight(pts)
    rows.append(VerifyRow("dispatch", "weights {3,3,5}", groups == [(3, [0, 1]), (5, [2])], f"groups={groups}"))
    return rows


SUITES: dict[str, Callable[..., list[VerifyRow]]] = {
    "splitter": splitter_rows,
    "covering": covering_rows,
    "turan": turan_rows,
    "reduction": reduction_rows,
    "l1": l1_rows,
    "bounds": bounds_rows,
    "dispatch": dispatch_rows,
}


def run_suite(name: str, limit: int | None = None, seed: Seed | int | None = 0) -> list[VerifyRow]:
    fn = SUITES[name]
    return fn(seed=seed) if limit is None else fn(limit, seed=seed)


COLUMNS = ["suite", "case", "passed", "values"]


def format_rows(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow([row.suite, row.case, "pass" if row.passed else "fail", row.values])
    return buf.getvalue()


def parse_rows(text: str) -> list[VerifyRow]:
    reader = csv.reader(io.StringIO(text))
    if next(reader) != COLUMNS:
        raise ValueError("unexpected verify CSV header")
    return [VerifyRow(s, c, p == "pass", v) for s, c, p, v in reader]
