"""Decodable Turán (n, k, r)-systems: r-subsets of [n] such that every k-subset contains one.

A system is a small tree of stages, each with its own ``decode(S)`` that
returns every block contained in ``S``:

``complete``
    all r-subsets of [n] (implicit).
``base``
    an explicit block list, sampled and then verified by brute force.
``splitter``
    (b n', b k', b r') from an (n', k', r') system and a balanced splitter
    with b parts: one block per splitter function and per tuple of inner
    blocks, one inner block in each part.
``hash``
    (N, k'', r) from an (M, k'', r) system, a perfect hash family
    [N] -> [M] and a random permutation sigma of [M]: blocks are pulled back
    element by element through ``sigma o h``.
``partition``
    (a N, a k'', r) from an (N, k'', r) system: a random permutation cuts
    [a N] into a parts and each part carries a copy of the inner system.

:func:`build_turan` composes these bottom-up following a :class:`TuranPlan`.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import Seed, SetPoint, as_seed
from .errors import ConstructionError, CostGuardError, FormatError, ParameterError
from .splitter import SplitterFamily, build_splitter

__all__ = [
    "TuranSystem",
    "PerfectHashFamily",
    "TuranPlan",
    "build_base_system",
    "complete_system",
    "verify_system",
    "splitter_scale",
    "build_perfect_hash_family",
    "hash_extend",
    "partition_extend",
    "plan_turan",
    "turan_plans",
    "build_turan",
    "decode",
    "materialize",
    "chi",
    "block_key",
    "dump_system",
    "parse_system",
]

COST_GUARD = 10**6
MAX_RETRIES = 64


@dataclass(eq=False)
class PerfectHashFamily:
    """Functions [N] -> [M]; every k-subset of [N] is mapped injectively by some member."""

    N: int
    M: int
    k: int
    functions: np.ndarray  # (F, N) int64
    check: str = "exhaustive"  # or "identity" / "probabilistic"

    def __len__(self) -> int:
        return len(self.functions)

    @property
    def budget(self) -> float:
        """(k)^4 ln N, the size of the cited explicit construction."""
        return self.k**4 * math.log(max(self.N, 2))


@dataclass(eq=False)
class TuranSystem:
    n: int
    k: int
    r: int
    stage: str
    blocks: np.ndarray | None = None  # base: (m, r) sorted rows
    inner: TuranSystem | None = None
    splitter: SplitterFamily | None = None
    phf: PerfectHashFamily | None = None
    sigma: np.ndarray | None = None  # hash: permutation of [M]
    perm: np.ndarray | None = None  # partition: slot -> element of [n]
    a: int = 1
    trace: list[str] = field(default_factory=list)
    rounds: int = 0

    def __post_init__(self):
        self._cache = {}

    # -- structure ------------------------------------------------------

    @property
    def size(self) -> int:
        """Number of blocks counted with multiplicity, from the stage sizes."""
        if self.stage == "complete":
            return math.comb(self.n, self.r)
        if self.stage == "base":
            return len(self.blocks)
        if self.stage == "splitter":
            return len(self.splitter) * self.inner.size**self.splitter.l
        if self.stage == "partition":
            return self.a * self.inner.size
        if self.stage == "hash":
            total = 0
            for h in self.phf.functions:
                counts = np.bincount(self.sigma[h], minlength=self.inner.n)
                if self.inner.stage == "complete":
                    total += _elementary_symmetric(counts.tolist(), self.r)
                else:
                    for R in materialize(self.inner):
                        total += math.prod(int(counts[v]) for v in R)
            return total
        raise AssertionError(self.stage)

    def stages(self) -> list[TuranSystem]:
        out, node = [], self
        while node is not None:
            out.append(node)
            node = node.inner
        return out

    # -- decoding ---------------------------------------------------------

    def _dec(self, S: tuple[int, ...]) -> set[tuple[int, ...]]:
        if len(S) < self.r:
            return set()
        if self.r == 0:
            return {()}
        st = self.stage
        if st == "complete":
            return set(itertools.combinations(S, self.r))
        if st == "base":
            mask = 0
            for e in S:
                mask |= 1 << e
            masks = self._block_masks()
            return {tuple(int(v) for v in self.blocks[i]) for i, bm in enumerate(masks) if bm & mask == bm}
        if st == "splitter":
            return self._dec_splitter(S)
        if st == "hash":
            return self._dec_hash(S)
        if st == "partition":
            return self._dec_partition(S)
        raise AssertionError(st)

    def _block_masks(self) -> list[int]:
        if "masks" not in self._cache:
            self._cache["masks"] = [sum(1 << int(e) for e in row) for row in self.blocks]
        return self._cache["masks"]

    def _split_tables(self):
        if "split" not in self._cache:
            fam = self.splitter
            parts = [fam.parts(f) for f in range(len(fam))]
            local = np.zeros((len(fam), fam.B), dtype=np.int64)
            for f, ps in enumerate(parts):
                for p in ps:
                    local[f, p] = np.arange(len(p))
            self._cache["split"] = (parts, local)
        return self._cache["split"]

    def _dec_splitter(self, S):
        fam = self.splitter
        parts, local = self._split_tables()
        Sarr = np.asarray(S, dtype=np.int64)
        out = set()
        for f in range(len(fam)):
            labels = fam.functions[f][Sarr]
            lists = []
            for j in range(fam.l):
                Sj = tuple(int(v) for v in np.sort(local[f, Sarr[labels == j]]))
                D = self.inner._dec(Sj)
                if not D:
                    break
                coords = parts[f][j]
                lists.append([tuple(int(coords[i]) for i in R) for R in D])
            else:
                for combo in itertools.product(*lists):
                    out.add(tuple(sorted(itertools.chain.from_iterable(combo))))
        return out

    def _dec_hash(self, S):
        out = set()
        Sarr = np.asarray(S, dtype=np.int64)
        for h in self.phf.functions:
            img = self.sigma[h[Sarr]]
            groups = defaultdict(list)
            for e, v in zip(S, img.tolist()):
                groups[v].append(e)
            for R in self.inner._dec(tuple(sorted(groups))):
                for combo in itertools.product(*(groups[v] for v in R)):
                    out.add(tuple(sorted(combo)))
        return out

    def _pos(self):
        if "pos" not in self._cache:
            pos = np.empty(len(self.perm), dtype=np.int64)
            pos[self.perm] = np.arange(len(self.perm))
            self._cache["pos"] = pos
        return self._cache["pos"]

    def _dec_partition(self, S):
        N = self.inner.n
        pos = self._pos()[np.asarray(S, dtype=np.int64)]
        part, loc = (pos // N).tolist(), (pos % N).tolist()
        groups = defaultdict(list)
        for p, i, e in zip(part, loc, S):
            groups[p].append((i, e))
        out = set()
        for members in groups.values():
            members.sort()
            if self.inner.stage == "complete":
                # the inner blocks are all r-subsets, so map first and enumerate after
                out.update(itertools.combinations(sorted(e for _, e in members), self.r))
                continue
            glob = dict(members)
            for R in self.inner._dec(tuple(i for i, _ in members)):
                out.add(tuple(sorted(glob[i] for i in R)))
        return out


def _elementary_symmetric(values: list[int], r: int) -> int:
    e = [1] + [0] * r
    for v in values:
        for j in range(r, 0, -1):
            e[j] += e[j - 1] * v
    return e[r]


def _as_tuple(S) -> tuple[int, ...]:
    if isinstance(S, SetPoint):
        return S.elements
    return tuple(sorted({int(e) for e in S}))


def decode(sys: TuranSystem, S) -> list[tuple[int, ...]]:
    """All distinct blocks R of the system with R a subset of S, sorted."""
    S = _as_tuple(S)
    if S and (S[0] < 0 or S[-1] >= sys.n):
        raise ParameterError(f"set is not inside the universe [0, {sys.n})")
    return sorted(sys._dec(S))


def materialize(sys: TuranSystem) -> list[tuple[int, ...]]:
    """Every distinct block (decode of the whole universe)."""
    if sys.stage == "complete" and math.comb(sys.n, sys.r) > COST_GUARD:
        raise CostGuardError("complete system too large to list")
    return decode(sys, range(sys.n))


def block_key(R: Iterable[int], n: int) -> int:
    """Injective integer key of a sorted block (base-n digits)."""
    key = 0
    for e in R:
        key = key * n + int(e)
    return key


def chi(sys: TuranSystem, n: int | None = None, k: int | None = None) -> float:
    """ln(|T| (k/n)^r): the overhead e^chi in E|T(S)| <= (|S|/k)^r e^chi for uniform S."""
    n = sys.n if n is None else n
    k = sys.k if k is None else k
    return math.log(sys.size) + sys.r * math.log(k / n)


# --- stage 1 -------------------------------------------------------------


def complete_system(n: int, r: int, k: int | None = None) -> TuranSystem:
    k = r if k is None else k
    if not n >= k >= r >= 0:
        raise ParameterError(f"need n >= k >= r >= 0, got {(n, k, r)}")
    return TuranSystem(n, k, r, "complete")


def _covers_all(blocks: np.ndarray, n: int, k: int) -> bool:
    """Exhaustive K-set check for explicit block lists (lexicographic, early exit)."""
    masks = [sum(1 << int(e) for e in row) for row in blocks]
    for K in itertools.combinations(range(n), k):
        km = 0
        for e in K:
            km |= 1 << e
        if not any(bm & km == bm for bm in masks):
            return False
    return True


def _base_budget(n: int, k: int, r: int) -> int:
    return math.ceil(math.comb(n, r) / math.comb(k, r) * (1 + math.log(math.comb(n, k))))


def build_base_system(
    n: int,
    k: int,
    r: int,
    seed: Seed | int | None = None,
    *,
    mode: str = "sample",
    cost_guard: int = COST_GUARD,
    max_retries: int = MAX_RETRIES,
) -> TuranSystem:
    """Brute-force stage: sample ceil(C(n,r)/C(k,r) (1 + ln C(n,k))) blocks and verify.

    When that budget reaches C(n, r) the complete system is returned instead.
    """
    if not n >= k >= r >= 1:
        raise ParameterError(f"need n >= k >= r >= 1, got {(n, k, r)}")
    budget = _base_budget(n, k, r)
    if budget >= math.comb(n, r):
        sys = complete_system(n, r, k)
        sys.trace.append(f"budget {budget} >= C({n},{r}): all r-subsets")
        return sys
    if math.comb(n, k) > cost_guard:
        raise CostGuardError(f"C({n},{k}) K-sets exceed the cost guard {cost_guard}")
    if mode == "greedy":
        return _greedy_base(n, k, r)
    if mode != "sample":
        raise ParameterError(f"unknown base mode {mode!r}")
    seed = as_seed(seed)
    for attempt in range(max_retries):
        rng = seed.child(attempt).rng()
        rows = np.sort(np.argsort(rng.random((budget, n)), axis=1)[:, :r], axis=1)
        rows = np.unique(rows, axis=0)
        if _covers_all(rows, n, k):
            sys = TuranSystem(n, k, r, "base", blocks=rows.astype(np.int64), rounds=attempt + 1)
            sys.trace.append(f"sampled {budget} blocks, {len(rows)} distinct, verified in round {attempt + 1}")
            return sys
    raise ConstructionError(f"no verified ({n},{k},{r}) base system in {max_retries} rounds")


def _greedy_base(n: int, k: int, r: int) -> TuranSystem:
    """Greedy set cover: repeatedly take the r-set contained in most uncovered K-sets."""
    ksets = list(itertools.combinations(range(n), k))
    uncovered = set(range(len(ksets)))
    rsets = list(itertools.combinations(range(n), r))
    contains = [[i for i, K in enumerate(ksets) if set(R) <= set(K)] for R in rsets]
    chosen = []
    while uncovered:
        best = max(range(len(rsets)), key=lambda j: sum(1 for i in contains[j] if i in uncovered))
        chosen.append(rsets[best])
        uncovered.difference_update(contains[best])
    sys = TuranSystem(n, k, r, "base", blocks=np.array(sorted(chosen), dtype=np.int64).reshape(-1, r))
    sys.trace.append(f"greedy cover with {len(chosen)} blocks")
    return sys


def verify_system(sys: TuranSystem, n: int | None = None, k: int | None = None, *, cost_guard: int = COST_GUARD) -> bool:
    """True iff every k-subset of [n] contains a block returned by decode."""
    n = sys.n if n is None else n
    k = sys.k if k is None else k
    if math.comb(n, k) > cost_guard:
        raise CostGuardError(f"C({n},{k}) exceeds the cost guard {cost_guard}")
    if k < sys.r:
        return False
    if sys.stage == "complete":
        return n <= sys.n
    if sys.stage == "base":
        return _covers_all(sys.blocks, n, k)
    return all(sys._dec(K) for K in itertools.combinations(range(n), k))


# --- stage 2 -------------------------------------------------------------


def splitter_scale(sys: TuranSystem, b: int) -> TuranSystem:
    """(b n', b k', b r') system: the product of inner blocks over the parts of each splitter function."""
    if b < 1:
        raise ParameterError("b must be positive")
    if b == 1:
        return sys
    fam = build_splitter(b * sys.n, b)
    out = TuranSystem(b * sys.n, b * sys.k, b * sys.r, "splitter", inner=sys, splitter=fam)
    out.trace.append(f"splitter over [{b * sys.n}] with {b} parts: {len(fam)} functions")
    return out


# --- stage 3 -------------------------------------------------------------


def _injective_rows(vals: np.ndarray) -> np.ndarray:
    s = np.sort(vals, axis=1)
    return (np.diff(s, axis=1) != 0).all(axis=1)


def build_perfect_hash_family(
    N: int,
    k: int,
    seed: Seed | int | None = None,
    *,
    M: int | None = None,
    cost_guard: int = COST_GUARD,
    max_functions: int = 4096,
    spot_checks: int = 10_000,
) -> PerfectHashFamily:
    """Random functions [N] -> [M] (default M = k^2) kept until every k-set is hit injectively.

    Exhaustive when C(N, k) <= ``cost_guard``.  Beyond that, the count is set
    so that a fixed k-set is missed with probability below 2^-40 / C(N, k),
    followed by random spot checks.
    """
    M = k * k if M is None else M
    if k < 0 or N < 1 or M < 1:
        raise ParameterError("need N, M >= 1 and k >= 0")
    if M >= N:
        return PerfectHashFamily(N, M, k, np.arange(N, dtype=np.int64).reshape(1, N), "identity")
    if k > M:
        raise ParameterError(f"range {M} is smaller than k={k}")
    rng = as_seed(seed).rng()
    if k <= 1:
        return PerfectHashFamily(N, M, k, rng.integers(0, M, size=(1, N)), "exhaustive")
    total = math.comb(N, k)
    if total <= cost_guard:
        pending = np.array(list(itertools.combinations(range(N), k)), dtype=np.int64)
        funcs = []
        for _ in range(max_functions):
            h = rng.integers(0, M, size=N)
            hit = _injective_rows(h[pending])
            if hit.any():
                funcs.append(h)
                pending = pending[~hit]
            if len(pending) == 0:
                return PerfectHashFamily(N, M, k, np.array(funcs, dtype=np.int64), "exhaustive")
        raise ConstructionError(f"perfect hash family for C({N},{k}) not complete after {max_functions} draws")
    q = 1 - math.prod((M - i) / M for i in range(k))
    F = math.ceil((math.log(total) + 40 * math.log(2)) / -math.log(q))
    if F > max_functions:
        raise ConstructionError(f"probabilistic family would need {F} > {max_functions} functions")
    funcs = rng.integers(0, M, size=(F, N))
    for _ in range(spot_checks):
        K = rng.choice(N, size=k, replace=False)
        if not _injective_rows(funcs[:, K]).any():  # pragma: no cover - probability < 2^-40
            raise ConstructionError("spot check found a k-set with no injective function")
    return PerfectHashFamily(N, M, k, funcs.astype(np.int64), "probabilistic")


def hash_extend(sys: TuranSystem, N: int, phf: PerfectHashFamily, seed: Seed | int | None = None) -> TuranSystem:
    """(N, k, r) system from an (M, k, r) system through a perfect hash family [N] -> [M]."""
    if phf.M != sys.n or phf.N != N:
        raise ParameterError(f"hash family maps [{phf.N}] -> [{phf.M}], system lives on [{sys.n}]")
    if phf.k < sys.k:
        raise ParameterError("hash family is injective on smaller sets than the system needs")
    sigma = as_seed(seed).rng().permutation(sys.n)
    out = TuranSystem(N, sys.k, sys.r, "hash", inner=sys, phf=phf, sigma=sigma)
    out.trace.append(f"{len(phf)} hash functions [{N}] -> [{phf.M}] ({phf.check})")
    return out


# --- stage 4 -------------------------------------------------------------


def partition_extend(sys: TuranSystem, a: int, seed: Seed | int | None = None) -> TuranSystem:
    """(a N, a k, r) system: a random permutation splits the universe into a parts of size N."""
    if a < 1:
        raise ParameterError("a must be positive")
    if a == 1:
        return sys
    perm = as_seed(seed).rng().permutation(a * sys.n)
    out = TuranSystem(a * sys.n, a * sys.k, sys.r, "partition", inner=sys, perm=perm, a=a)
    out.trace.append(f"{a} random parts of size {sys.n}")
    return out


# --- composition -----------------------------------------------------------


@dataclass
class TuranPlan:
    """Integral stage sizes for the four-stage construction.

    Bottom-up: base (n1, k1, r1) -> splitter b -> (b n1, b k1, r) -> hash
    [N] -> [b n1] (skipped when ``hashed`` is false and b n1 >= N) ->
    partition into a parts -> (a N, a b k1, r).
    """

    n: int
    k: int
    r: int
    b: int
    a: int
    k1: int
    n1: int
    N: int
    hashed: bool
    trace: list[str] = field(default_factory=list)

    @property
    def r1(self) -> int:
        return self.r // self.b

    @property
    def k_adj(self) -> int:
        return self.a * self.b * self.k1

    @property
    def n_pad(self) -> int:
        return self.a * self.N

    @property
    def M(self) -> int:
        return self.b * self.n1


def _largest_divisor_upto_sqrt(r: int) -> int:
    return max(d for d in range(1, math.isqrt(r) + 1) if r % d == 0)


def _make_plan(n: int, k: int, r: int, b: int, a: int, k1: int, hashed: bool, trace: list[str]) -> TuranPlan:
    N = -(-n // a)
    if hashed:
        n1 = b * k1 * k1  # range (b k1)^2 = b * n1
        if b * n1 >= N:
            hashed = False
            trace.append(f"hash range {b * n1} >= part size {N}: hash stage skipped")
    if not hashed:
        n1 = -(-N // b)
        N = b * n1
    if a * N != n:
        trace.append(f"n={n} padded to {a * N} (multiple of a={a})")
    if a * b * k1 != k:
        trace.append(f"k={k} lowered to {a * b * k1} = a*b*k1 (still valid for k)")
    return TuranPlan(n, k, r, b, a, k1, n1, N, hashed, trace)


def plan_turan(n: int, k: int, r: int) -> TuranPlan:
    """Stage sizes from a = k r^{-3/2} ln(r^{3/2}) and b = sqrt(r), made integral.

    b is the largest divisor of r not above sqrt(r) (r itself is never
    changed); k' = k/(a b) is rounded to an integer >= r/b, a to
    floor(k / (b k')), and k lowered to a b k'.
    """
    if not (n > k and r >= 1 and k > r**1.5):
        raise ParameterError(f"the construction needs n > k > r^(3/2), got n={n}, k={k}, r={r}")
    trace = []
    b = _largest_divisor_upto_sqrt(r)
    if b * b != r:
        trace.append(f"sqrt(r)={math.sqrt(r):.3g} not integral: b={b}, r'={r // b}")
    r1 = r // b
    a0 = k * r**-1.5 * math.log(r**1.5)
    if a0 <= 1:
        a, k1 = 1, k // b
        trace.append(f"a={a0:.3g} <= 1: no partition stage")
    else:
        k1 = max(r1, round(k / (a0 * b)))
        a = max(1, k // (b * k1))
        trace.append(f"a={a0:.4g} -> {a}, k'={k / (a0 * b):.4g} -> {k1}")
    return _make_plan(n, k, r, b, a, k1, True, trace)


def turan_plans(n: int, k: int, r: int) -> list[TuranPlan]:
    """Every integral plan (b | r with b <= sqrt(r), 1 <= a <= k/r, with or without hashing)."""
    out = []
    for b in range(1, math.isqrt(r) + 1):
        if r % b:
            continue
        for a in range(1, k // r + 1):
            k1 = k // (a * b)
            if k1 < r // b:
                continue
            for hashed in (False, True):
                p = _make_plan(n, k, r, b, a, k1, hashed, [f"candidate b={b}, a={a}, hashed={hashed}"])
                if hashed and not p.hashed:
                    continue
                out.append(p)
    return out


def build_turan(
    n: int,
    k: int,
    r: int,
    seed: Seed | int | None = None,
    *,
    plan: TuranPlan | None = None,
    base_mode: str = "sample",
    cost_guard: int = COST_GUARD,
) -> TuranSystem:
    plan = plan_turan(n, k, r) if plan is None else plan
    seed = as_seed(seed)
    b, k1 = plan.b, plan.k1
    sys = build_base_system(plan.n1, k1, plan.r1, seed.child(1), mode=base_mode, cost_guard=cost_guard)
    sys = splitter_scale(sys, b)
    if plan.hashed:
        phf = build_perfect_hash_family(plan.N, b * k1, seed.child(2), M=plan.M, cost_guard=cost_guard)
        sys = hash_extend(sys, plan.N, phf, seed.child(3))
    sys = partition_extend(sys, plan.a, seed.child(4))
    sys.trace = list(plan.trace) + sys.trace
    return sys


# --- dump format -------------------------------------------------------------


def dump_system(sys: TuranSystem, path: str | Path | None = None) -> str:
    lines = [f"turan n={sys.n} k={sys.k} r={sys.r}"]
    lines += [" ".join(str(e) for e in R) for R in materialize(sys)]
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def parse_system(text: str) -> TuranSystem:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    head = lines[0].split() if lines else []
    try:
        assert head[0] == "turan"
        fields = dict(t.split("=") for t in head[1:])
        n, k, r = int(fields["n"]), int(fields["k"]), int(fields["r"])
    except (AssertionError, IndexError, KeyError, ValueError):
        raise FormatError(f"bad turan header: {lines[0] if lines else ''!r}") from None
    rows = [tuple(int(t) for t in ln.split()) for ln in lines[1:]]
    if any(len(R) != r or list(R) != sorted(set(R)) or (R and R[-1] >= n) for R in rows):
        raise FormatError("block with the wrong size, order or range")
    return TuranSystem(n, k, r, "base", blocks=np.array(rows, dtype=np.int64).reshape(-1, r))
