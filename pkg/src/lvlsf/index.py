"""Filter indexes: a map filter id -> bucket of point ids, queried by scanning buckets.

Two concrete structures share the layout: Hamming space (a reduction to S
short blocks, each handled by one tensored covering code) and Braun-Blanquet
similarity (one Turán system per exact-weight group).  Buckets are stored as
sorted key arrays with CSR offsets, so a query is a few binary searches
followed by a vectorized distance check of the candidates in scan order.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import BitVector, Seed, SetPoint, as_seed, bits_matrix, braun_blanquet, pack_bits
from .dimred import PartitionReduction, XorReduction, build_partition_reduction, build_xor_reduction
from .errors import DimensionError, ParameterError
from .hamming_filters import (
    MAX_VERIFY_B,
    TensoredCode,
    _ball_offsets,
    build_inner_code,
    build_tensored_code,
    covered_radius,
    decode_many,
    inner_radius,
    sampling_budget,
)
from .oracle import ball_intersection_count, ball_volume
from .splitter import build_splitter
from .turan import TuranPlan, TuranSystem, block_key, build_turan, complete_system, plan_turan, turan_plans

__all__ = [
    "HammingParams",
    "SimilarityParams",
    "QueryStats",
    "HammingIndex",
    "SimilarityIndex",
    "plan_hamming_params",
    "build_hamming_index",
    "query_hamming",
    "plan_similarity_params",
    "build_similarity_index",
    "query_similarity",
    "group_by_weight",
    "dispatch_weights",
]

ENTRY_CAP = 1 << 25  # planned bucket entries (n * S * E|C(x)|) per index
GREEDY_MAX_B = 10
SPLITTER_CAP = 10**4
COST_GUARD = 10**6


# --- shared bucket table ------------------------------------------------------


@dataclass(eq=False)
class BucketTable:
    keys: np.ndarray  # sorted distinct filter keys (int64, or object for wide ids)
    offsets: np.ndarray  # (len(keys) + 1,) int64
    ids: np.ndarray  # int64 point ids, grouped by key, ascending within a key

    @classmethod
    def from_lists(cls, per_point: Sequence[np.ndarray], point_ids: Sequence[int] | None = None) -> BucketTable:
        if point_ids is None:
            point_ids = range(len(per_point))
        wide = any(a.dtype == object for a in per_point)
        dtype = object if wide else np.int64
        lens = np.array([len(a) for a in per_point], dtype=np.int64)
        if lens.sum() == 0:
            return cls(np.zeros(0, dtype=dtype), np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64))
        keys = np.concatenate([np.asarray(a, dtype=dtype) for a in per_point])
        pids = np.repeat(np.asarray(list(point_ids), dtype=np.int64), lens)
        order = np.argsort(keys, kind="stable")  # point ids stay ascending within a key
        keys, pids = keys[order], pids[order]
        uniq, start = np.unique(keys, return_index=True)
        offsets = np.append(start, len(keys)).astype(np.int64)
        return cls(uniq.astype(dtype), offsets, pids)

    @property
    def entries(self) -> int:
        return len(self.ids)

    def lookup(self, keys: np.ndarray) -> list[np.ndarray]:
        if len(self.keys) == 0 or len(keys) == 0:
            return []
        pos = np.searchsorted(self.keys, keys)
        pos_c = np.minimum(pos, len(self.keys) - 1)
        hit = self.keys[pos_c] == keys
        return [self.ids[self.offsets[p] : self.offsets[p + 1]] for p in pos_c[hit]]


def _first_in_order(chunks: list[np.ndarray]) -> np.ndarray:
    """Concatenate and drop repeats, keeping first occurrences in scan order."""
    if not chunks:
        return np.zeros(0, dtype=np.int64)
    allids = np.concatenate(chunks)
    _, first = np.unique(allids, return_index=True)
    return allids[np.sort(first)]


@dataclass
class QueryStats:
    """Per-query work counters: buckets probed, bucket entries read, distinct candidates checked."""

    buckets: int = 0
    entries: int = 0
    candidates: int = 0


# --- Hamming parameters -------------------------------------------------------


@dataclass
class HammingParams:
    n: int
    d: int
    r: int
    c: float
    mode: str
    reduction: str
    strict: bool
    eps: float
    S: int
    block: int  # output length of each reduction function
    r_prime: int  # distance budget per block guaranteed by the reduction
    b: int
    l: int
    r_b: int
    t_b: int
    split: str  # "full" splitter family or "trivial" single partition
    inner_mode: str  # "sample" or "greedy"
    m: int | None = None  # xor bucket count
    delta: float | None = None
    far_fraction: float = 0.5
    formula: dict = field(default_factory=dict)
    predicted: dict = field(default_factory=dict)
    rho: float = 0.0
    trace: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> HammingParams:
        return cls(**data)


def _eps_for(mode: str, n: int) -> float:
    if mode == "theorem":
        return math.log(n) ** -0.25
    if mode == "corollary":
        return math.log(n) ** (-1 / 3)
    raise ParameterError(f"unknown mode {mode!r}")


def _formula_values(n: int, d: int, r: int, c: float, mode: str, reduction: str) -> dict:
    """The displayed parameter choices, before any rounding (reals throughout)."""
    ln = math.log(n)
    eps = _eps_for(mode, n)
    f = {"eps": eps, "ln_n": ln, "b": math.log(n, 4)}
    if reduction == "xor":
        f["m"] = 3 * c * r / eps
        f["B"] = 27 * eps**-3 * ln
        f["S"] = f["m"] / f["B"]
    else:
        f["B"] = 2 * eps**-2 * (d / (c * r)) * ln
        f["S"] = d / f["B"]
    if f["B"] >= d:
        f["B"], f["S"] = float(d), 1.0
        f["identity"] = True
    f["r_prime"] = r / f["S"]
    frac = c * f["r_prime"] / f["B"]
    f["far_fraction"] = frac
    f["s"] = math.sqrt(2 * (1 - frac) / frac * ln) if 0 < frac < 1 else float("nan")
    f["s2_limit"] = f["B"] / math.sqrt(f["b"])
    f["rho"] = 1 / c if mode == "theorem" else (1 - c * r / d) / (c * (1 - r / d))
    return f


@lru_cache(maxsize=None)
def _splitter_size(B: int, l: int) -> int:
    if l == 1:
        return 1
    return len(build_splitter(B, l))


@lru_cache(maxsize=None)
def _inner_stats(b: int, r_b: int, t_b: int, q: float) -> tuple[float, float, str]:
    """(estimated |A|, expected words shared with a far part, build mode)."""
    V = ball_volume(b, t_b)
    if t_b == 0:
        A, mode = float(1 << b), "sample"
    elif b <= GREEDY_MAX_B:
        Er = _ball_offsets(b, r_b)
        Et = _ball_offsets(b, t_b)
        per_word = sum(int((np.bitwise_count(Et ^ e) <= t_b).sum()) for e in Er)
        A, mode = min(float(1 << b), 1.5 * (1 << b) * len(Er) / per_word), "greedy"
    else:
        A, mode = float(min(1 << b, sampling_budget(b, r_b, t_b))), "sample"
    # a far part differs in each coordinate independently with probability q
    both = sum(
        math.comb(b, w) * q**w * (1 - q) ** (b - w) * ball_intersection_count(b, w, t_b, cost_guard=64)
        for w in range(b + 1)
    ) / 2.0**b
    return A, A * both, mode


def _code_costs(b: int, l: int, r_b: int, t_b: int, split: str, q: float) -> dict:
    A, shared, mode = _inner_stats(b, r_b, t_b, q)
    F = 1 if split == "trivial" else _splitter_size(b * l, l)
    near = A * ball_volume(b, t_b) / 2.0**b
    return {
        "A": A,
        "F": F,
        "decode": F * near**l,
        "collide": min(1.0, F * shared**l),
        "inner_mode": mode,
    }


MAX_PARTS = 4


def _reduction_options(n, d, r, c, reduction, eps):
    """(S, block, r_prime, m): the longest buildable block for each achievable per-block budget.

    Blocks longer than MAX_PARTS * MAX_VERIFY_B cannot be covered by any code
    the desk planner builds, so they are never kept.
    """
    best: dict[int, tuple] = {}
    longest = MAX_PARTS * MAX_VERIFY_B
    if reduction == "partition":
        for B in range(1, min(d, longest) + 1):
            S = -(-d // B)
            best[r // S] = (S, B, r // S, None)
    else:
        m = math.ceil(3 * c * r / eps)
        for B in range(1, min(m, longest) + 1):
            S = -(-m // B)
            best[r // S] = (S, B, r // S, B * S)
    return sorted(best.values())


def plan_hamming_params(
    n: int,
    d: int,
    r: int,
    c: float,
    mode: str = "theorem",
    *,
    reduction: str = "partition",
    strict: bool = False,
    far_fraction: float = 0.5,
    entry_cap: int = ENTRY_CAP,
) -> HammingParams:
    """Choose reduction, block length, inner code and radii for an (r, cr) index.

    ``strict=True`` realizes the displayed formulas (rounded) and raises
    :class:`ParameterError` when they are infeasible.  Otherwise the plan
    minimizes a cost model: per block, expected decode size plus n times the
    chance of sharing a filter with a far point whose coordinates differ
    independently with probability ``far_fraction`` (0.5 is uniform data).
    """
    if not (r > 0 and c > 1 and c * r <= d / 2):
        raise ParameterError(f"need r > 0, c > 1 and cr <= d/2, got r={r}, c={c}, d={d}")
    if n < 2:
        n_plan = 2
    else:
        n_plan = n
    if reduction not in ("xor", "partition"):
        raise ParameterError(f"unknown reduction {reduction!r}")
    eps = _eps_for(mode, n_plan)
    if mode == "corollary" and r / d < 0.25 * math.log(n_plan) ** (-1 / 6):
        raise ParameterError(
            f"corollary mode needs r/d >= (ln n)^(-1/6)/4 = {0.25 * math.log(n_plan) ** (-1 / 6):.3g}, got {r / d:.3g}"
        )
    formula = _formula_values(n_plan, d, r, c, mode, reduction)
    if strict:
        return _strict_plan(n, d, r, c, mode, reduction, eps, formula, far_fraction)
    return _desk_plan(n, n_plan, d, r, c, mode, reduction, eps, formula, far_fraction, entry_cap)


def _strict_plan(n, d, r, c, mode, reduction, eps, f, q) -> HammingParams:
    trace = []
    if f.get("identity"):
        S, B, m = 1, d, None
        trace.append(f"block formula {f['B']:.1f} >= d: identity reduction")
    elif reduction == "xor":
        B = math.ceil(f["B"])
        m = B * math.ceil(f["m"] / B)
        S = m // B
    else:
        B = math.ceil(f["B"])
        S, m = -(-d // B), None
    r_prime = math.floor(r * B / m) if m else r // S
    if not math.isfinite(f["s"]):
        raise ParameterError("far fraction cr'/B must lie in (0, 1)")
    s = f["s"]
    b = max(1, math.ceil(f["b"]))
    if s * s > B / math.sqrt(b):
        raise ParameterError(f"s^2 = {s * s:.1f} exceeds B/sqrt(b) = {B / math.sqrt(b):.1f}")
    l = -(-B // b)
    s_prime = s * math.sqrt(b / B)
    t_b = inner_radius(b, s_prime)
    r_b = -(-r_prime // l)
    if b > MAX_VERIFY_B:
        raise ParameterError(f"inner dimension b={b} beyond the verification guard")
    if t_b < -(-r_b // 2):
        raise ParameterError(f"inner radius t_b={t_b} cannot cover pairs at distance {r_b}")
    if (b * l) ** l > SPLITTER_CAP:
        raise ParameterError(f"splitter over {b * l} with {l} parts may need (B)^l = {(b * l) ** l} functions")
    costs = _code_costs(b, l, r_b, t_b, "full", q)
    return HammingParams(
        n, d, r, c, mode, reduction, True, eps, S, B, r_prime, b, l, r_b, t_b, "full",
        costs["inner_mode"], m, 1 / max(n, 2), q, f, costs, f["rho"], trace,
    )


def _desk_plan(n, n_plan, d, r, c, mode, reduction, eps, f, q, entry_cap) -> HammingParams:
    best = None
    for S, B, r_prime, m in _reduction_options(n_plan, d, r, c, reduction, eps):
        # a bucket parity differs when an odd number of its differing coordinates land in it
        q_eff = q if m is None else (1 - (1 - 2 * q / m) ** d) / 2
        for l in range(1, MAX_PARTS + 1):
            b = -(-B // l)
            if b > MAX_VERIFY_B or (l > 1 and b < 2):
                continue
            splits = ["trivial"] if l == 1 else ["trivial", "full"]
            for split in splits:
                r_b = r_prime if split == "trivial" else -(-r_prime // l)
                if r_b > 4 or r_b > b // 2:
                    continue
                for t_b in range(-(-r_b // 2), min(b, r_b + 3) + 1):
                    if r_b == 0 and t_b > 0:
                        break
                    # padded code coordinates (beyond the block, or beyond d) never differ
                    real = min(B, d / S) if m is None else B
                    costs = _code_costs(b, l, r_b, t_b, split, q_eff * real / (b * l))
                    if split == "full" and costs["F"] > SPLITTER_CAP:
                        continue
                    entries = n_plan * S * costs["decode"]
                    if entries > entry_cap:
                        continue
                    cost = S * (costs["decode"] + n_plan * costs["collide"])
                    key = (cost, S, l, t_b)
                    if best is None or key < best[0]:
                        best = (key, S, B, r_prime, m, b, l, r_b, t_b, split, costs)
    if best is None:
        raise ParameterError("no configuration fits the entry cap")
    (cost, *_), S, B, r_prime, m, b, l, r_b, t_b, split, costs = best
    pred = dict(costs)
    pred["cost"] = cost
    pred["candidates"] = S * n_plan * costs["collide"]
    pred["entries"] = n_plan * S * costs["decode"]
    rho = math.log(max(cost, 1.0)) / math.log(n_plan)
    trace = [
        f"desk plan: S={S} blocks of {B}, r'={r_prime}, inner b={b} x l={l} ({split} split), r_b={r_b}, t_b={t_b}",
        f"predicted cost {cost:.3g} per query (exponent {rho:.3f}), {pred['entries']:.3g} bucket entries",
    ]
    return HammingParams(
        n, d, r, c, mode, reduction, False, eps, S, B, r_prime, b, l, r_b, t_b, split,
        costs["inner_mode"], m, 1 / n_plan, q, f, pred, rho, trace,
    )


# --- Hamming index ------------------------------------------------------------


@dataclass(eq=False)
class HammingIndex:
    params: HammingParams
    reduction: XorReduction | PartitionReduction
    code: TensoredCode
    packed: np.ndarray  # (n, words) uint64 point store
    tables: list[BucketTable]
    seed: Seed

    @property
    def n(self) -> int:
        return len(self.packed)

    @property
    def entries(self) -> int:
        return sum(t.entries for t in self.tables)

    def blocks(self, X: np.ndarray) -> np.ndarray:
        return self.reduction.apply_matrix(X)


def _build_reduction(params: HammingParams, seed: Seed):
    p = params
    if p.reduction == "xor":
        if p.m is None:
            return build_xor_reduction(p.d, p.r, p.c, p.eps, 0.5, seed, block=p.d)
        return build_xor_reduction(p.d, p.r, p.c, p.eps, min(p.delta, 1 / p.m), seed, block=p.block)
    return build_partition_reduction(p.d, p.r, p.c, p.eps, max(p.n, 2), seed, block=p.block)


def _build_code(params: HammingParams, seed: Seed) -> TensoredCode:
    p = params
    inner = build_inner_code(p.b, p.r_b, seed=seed, t_b=p.t_b, mode=p.inner_mode)
    return build_tensored_code(inner, p.block, split=p.split)


def build_hamming_index(points: Sequence[BitVector], params: HammingParams, seed: Seed | int | None = None) -> HammingIndex:
    seed = as_seed(seed)
    for i, p in enumerate(points):
        if p.d != params.d:
            raise DimensionError(f"point {i} has length {p.d}, expected {params.d}")
    reduction = _build_reduction(params, seed.child(1))
    if reduction.scale * params.r >= params.r_prime + 1:
        raise ParameterError("reduction does not guarantee the planned per-block budget")
    code = _build_code(params, seed.child(2))
    if covered_radius(code) < params.r_prime:
        raise ParameterError("code does not cover the per-block budget")
    X = bits_matrix(points, params.d)
    Y = reduction.apply_matrix(X) if len(points) else np.zeros((0, reduction.S, reduction.out_dim), np.uint8)
    tables = [BucketTable.from_lists(decode_many(code, Y[:, s, :])) for s in range(Y.shape[1])]
    if not tables:
        tables = [BucketTable.from_lists([]) for _ in range(reduction.S)]
    return HammingIndex(params, reduction, code, pack_bits(points, params.d), tables, seed)


def _distances(packed: np.ndarray, ids: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.bitwise_count(packed[ids] ^ q).sum(axis=1)


def query_hamming(
    index: HammingIndex, q: BitVector, *, exhaustive: bool = False, stats: QueryStats | None = None
) -> int | None:
    """Id of the first candidate within c*r of ``q``, or None once every bucket is scanned.

    Buckets are scanned substructure by substructure in decode order; a
    point seen earlier is not checked again.  With ``exhaustive=True`` the
    scan continues past the first hit so ``stats`` counts every candidate.
    """
    p = index.params
    if q.d != p.d:
        raise DimensionError(f"query has length {q.d}, expected {p.d}")
    Y = index.blocks(bits_matrix([q], p.d))[0]
    ids_per_block = decode_many(index.code, Y)
    chunks = []
    for table, keys in zip(index.tables, ids_per_block):
        found = table.lookup(keys)
        chunks.extend(found)
        if stats is not None:
            stats.buckets += len(found)
            stats.entries += sum(len(c) for c in found)
    cand = _first_in_order(chunks)
    if len(cand) == 0:
        return None
    qp = pack_bits([q], p.d)[0]
    ok = np.flatnonzero(_distances(index.packed, cand, qp) <= p.c * p.r)
    if stats is not None:
        stats.candidates += len(cand) if (exhaustive or len(ok) == 0) else int(ok[0]) + 1
    return int(cand[ok[0]]) if len(ok) else None


# --- set similarity -----------------------------------------------------------


@dataclass
class SimilarityParams:
    n: int
    d: int
    w: int
    b1: float
    b2: float
    k: int
    r: int
    r_formula: int
    mode: str  # "turan", "all-subsets" or "self-concatenated"
    reps: int  # self-concatenation factor (1 otherwise)
    strict: bool
    plan: dict | None = None  # TuranPlan fields for "turan" / "self-concatenated"
    predicted: dict = field(default_factory=dict)
    rho: float = 0.0
    trace: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> SimilarityParams:
        return cls(**data)

    def turan_plan(self) -> TuranPlan | None:
        return None if self.plan is None else TuranPlan(**self.plan)


def _estimate_size(p: TuranPlan) -> float:
    n1, k1, r1 = p.n1, p.k1, p.r1
    full = math.comb(n1, r1)
    budget = math.comb(n1, r1) / math.comb(k1, r1) * (1 + math.log(math.comb(n1, k1)))
    T = float(min(full, budget))
    if p.b > 1:
        T = _splitter_size(p.b * n1, p.b) * T**p.b
    if p.hashed:
        kk = p.b * k1
        qmiss = 1 - math.prod((p.M - i) / p.M for i in range(kk))
        if p.M >= p.N or qmiss <= 0:
            H = 1
        elif qmiss >= 1:
            return math.inf
        else:
            H = math.ceil(math.log(math.comb(p.N, kk)) / -math.log(qmiss)) + 1
        T = H * T * (p.N / p.M) ** p.r
    return p.a * T


def _falling_ratio(s: int, n: int, r: int) -> float:
    """(s)_r / (n)_r: chance a fixed r-set lies inside a uniform s-subset of [n]."""
    if s < r:
        return 0.0
    return math.prod((s - i) / (n - i) for i in range(r))


def _turan_cost(p: TuranPlan, n_pts: int, universe: int, w: int) -> dict:
    T = _estimate_size(p)
    dec = T * _falling_ratio(w, universe, p.r)
    # a random other w-set meets x in a hypergeometric number of elements
    far = 0.0
    for j in range(p.r, w + 1):
        pj = math.comb(w, j) * math.comb(universe - w, w - j) / math.comb(universe, w)
        far += pj * min(1.0, T * _falling_ratio(j, universe, p.r))
    return {"size": T, "decode": dec, "collide": min(1.0, far), "cost": dec + n_pts * min(1.0, far)}


def _self_concat_reps(k: int, r: int) -> int:
    t = 1
    while t * k <= r**1.5:
        t += 1
    return t


def plan_similarity_params(
    n: int, d: int, w: int, b1: float, b2: float, *, strict: bool = False, entry_cap: int = ENTRY_CAP
) -> SimilarityParams:
    """k = floor(b1 w) and r = ceil(ln n / ln(1/b2)), then the case split on k vs r.

    k <= r uses every k-subset as a block; k < r^(3/2) concatenates each set
    with itself until the Turán construction applies; otherwise a Turán
    (d, k, r) system.  In desk mode (``strict=False``) r may be lowered and
    the stage sizes are picked by a cost model; correctness does not depend
    on either choice.
    """
    if not (0 < b2 < b1 <= 1):
        raise ParameterError(f"need 0 < b2 < b1 <= 1, got b1={b1}, b2={b2}")
    if not (0 < w <= d):
        raise ParameterError(f"need 0 < w <= d, got w={w}, d={d}")
    n_plan = max(n, 2)
    k = math.floor(b1 * w + 1e-12)
    if k < 1:
        raise ParameterError("b1 * w < 1: every pair qualifies, no filter can help")
    r_f = max(1, math.ceil(math.log(n_plan) / math.log(1 / b2) - 1e-12))
    trace = [f"k=floor({b1}*{w})={k}, r=ceil(ln {n_plan}/ln(1/{b2}))={r_f}"]
    rho = math.log(1 / b1) / math.log(1 / b2)
    if strict:
        r_choices = [r_f]
    else:
        r_choices = list(range(1, r_f + 1))
    best = None
    for r in r_choices:
        if k <= r:
            mode, reps = "all-subsets", 1
            plans = [None]
        elif k < r**1.5:
            mode, reps = "self-concatenated", _self_concat_reps(k, r)
            plans = _candidate_plans(d * reps, k * reps, r, strict)
        else:
            mode, reps = "turan", 1
            plans = _candidate_plans(d, k, r, strict)
        for plan in plans:
            if plan is None:
                dec = math.comb(w, k)
                size = math.comb(d, k)
                far = sum(
                    math.comb(w, j) * math.comb(d - w, w - j) / math.comb(d, w) * min(1.0, math.comb(j, k))
                    for j in range(k, w + 1)
                )
                costs = {"size": size, "decode": dec, "collide": far, "cost": dec + n_plan * far}
            else:
                costs = _turan_cost(plan, n_plan, d * reps, w * reps)
            if n_plan * costs["decode"] > entry_cap and not strict:
                continue
            key = (costs["cost"], -r)
            if best is None or key < best[0]:
                best = (key, r, mode, reps, plan, costs)
    if best is None:
        raise ParameterError("no Turán configuration fits the entry cap")
    _, r, mode, reps, plan, costs = best
    if r != r_f:
        trace.append(f"desk plan lowers r from {r_f} to {r} (cost {costs['cost']:.3g})")
    trace.append(f"mode {mode}" + (f", sets repeated {reps} times" if reps > 1 else ""))
    if plan is not None:
        trace.extend(plan.trace)
    return SimilarityParams(
        n, d, w, b1, b2, k, r, r_f, mode, reps, strict,
        None if plan is None else asdict(plan), costs, rho, trace,
    )


def _candidate_plans(n: int, k: int, r: int, strict: bool) -> list[TuranPlan]:
    if strict:
        return [plan_turan(n, k, r)]
    out = []
    for p in turan_plans(n, k, r):
        if p.b > 1 and (p.b * p.n1) ** p.b > 50 * SPLITTER_CAP:
            continue
        if p.hashed and math.comb(p.N, p.b * p.k1) > COST_GUARD:
            continue
        if p.b > 1 or not p.hashed:
            n1, k1, r1 = p.n1, p.k1, p.r1
            budget = math.comb(n1, r1) / math.comb(k1, r1) * (1 + math.log(math.comb(n1, k1)))
            if budget < math.comb(n1, r1) and math.comb(n1, k1) > COST_GUARD:
                continue
        out.append(p)
    return out


def group_by_weight(points: Sequence[SetPoint]) -> list[tuple[int, list[int]]]:
    """Exact-weight groups as (weight, ids), by increasing weight."""
    groups: dict[int, list[int]] = {}
    for i, p in enumerate(points):
        groups.setdefault(len(p), []).append(i)
    return sorted(groups.items())


def dispatch_weights(wq: int, weights: Sequence[int], b1: float) -> list[int]:
    """Weights w that can hold a set with similarity >= b1 to a weight-wq query.

    sim >= b1 needs |x & q| >= b1 max(w, wq) while |x & q| <= min(w, wq).
    """
    b = Fraction(b1).limit_denominator(10**9)
    return [w for w in weights if w > 0 and wq > 0 and b * max(w, wq) <= min(w, wq)]


@dataclass(eq=False)
class WeightGroup:
    weight: int
    params: SimilarityParams
    system: TuranSystem
    ids: np.ndarray  # global point ids in this group, ascending
    table: BucketTable

    def lift(self, S: Sequence[int]) -> tuple[int, ...]:
        """Apply the self-concatenation map x -> {e + i d : e in x, i < reps}."""
        reps, d = self.params.reps, self.params.d
        if reps == 1:
            return tuple(S)
        return tuple(sorted(e + i * d for i in range(reps) for e in S))

    def keys(self, S: Sequence[int]) -> np.ndarray:
        blocks = sorted(self.system._dec(self.lift(S)))
        n, r = self.system.n, self.system.r
        if n**r >= 2**63:
            return np.array([block_key(R, n) for R in blocks], dtype=object)
        if not blocks:
            return np.zeros(0, dtype=np.int64)
        powers = n ** np.arange(r - 1, -1, -1, dtype=np.int64)
        return np.asarray(blocks, dtype=np.int64).reshape(len(blocks), r) @ powers


@dataclass(eq=False)
class SimilarityIndex:
    d: int
    b1: float
    b2: float
    points: list[SetPoint]
    groups: list[WeightGroup]
    seed: Seed

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def entries(self) -> int:
        return sum(g.table.entries for g in self.groups)


def _build_system(params: SimilarityParams, seed: Seed) -> TuranSystem:
    if params.mode == "all-subsets":
        return complete_system(params.d, params.k, params.k)
    return build_turan(params.d * params.reps, params.k * params.reps, params.r, seed, plan=params.turan_plan())


def build_similarity_index(
    points: Sequence[SetPoint],
    b1: float,
    b2: float,
    seed: Seed | int | None = None,
    *,
    strict: bool = False,
    params: dict[int, SimilarityParams] | None = None,
    entry_cap: int = ENTRY_CAP,
) -> SimilarityIndex:
    """One Turán-filtered bucket table per exact weight (weight 0 is never indexed)."""
    seed = as_seed(seed)
    if not points:
        raise ParameterError("cannot index an empty collection")
    d = points[0].universe
    if any(p.universe != d for p in points):
        raise DimensionError("sets over different universes")
    groups = []
    n = len(points)
    for w, ids in group_by_weight(points):
        if w == 0:
            continue
        gp = params[w] if params and w in params else plan_similarity_params(n, d, w, b1, b2, strict=strict, entry_cap=entry_cap)
        system = _build_system(gp, seed.child(w))
        g = WeightGroup(w, gp, system, np.asarray(ids, dtype=np.int64), None)
        g.table = BucketTable.from_lists([g.keys(points[i].elements) for i in ids], ids)
        groups.append(g)
    return SimilarityIndex(d, b1, b2, list(points), groups, seed)


def query_similarity(
    index: SimilarityIndex, q: SetPoint, *, exhaustive: bool = False, stats: QueryStats | None = None
) -> int | None:
    """Id of the first candidate with similarity > b2 to ``q``, or None."""
    if q.universe != index.d:
        raise DimensionError(f"query universe {q.universe} != {index.d}")
    if len(q) == 0:
        return None
    weights = dispatch_weights(len(q), [g.weight for g in index.groups], index.b1)
    chunks = []
    for g in index.groups:
        if g.weight not in weights:
            continue
        found = g.table.lookup(g.keys(q.elements))
        chunks.extend(found)
        if stats is not None:
            stats.buckets += len(found)
            stats.entries += sum(len(c) for c in found)
    cand = _first_in_order(chunks)
    thr = Fraction(index.b2).limit_denominator(10**9)
    seen = 0
    for pid in cand.tolist():
        seen += 1
        if braun_blanquet(index.points[pid], q) > thr:
            if stats is not None:
                stats.candidates += len(cand) if exhaustive else seen
            return pid
    if stats is not None:
        stats.candidates += len(cand)
    return None
