"""Pair-covering codes on {0,1}^b and their splitter-tensored extension to {0,1}^B.

An inner code ``A`` covers a pair (x, y) when some word lies within ``t_b``
of both.  The tensored code has one implicit codeword for every splitter
function ``pi`` and tuple of inner words ``(j_1, ..., j_l)``: its restriction
to part ``k`` of ``pi`` is ``A[j_k]``.  Decoding x returns, for every ``pi``,
the full product of the inner words near each projected part.  If
dist(x, y) <= r, the splitter function that spreads their differences evenly
leaves at most ceil(r/l) differences per part, so the covering property of
``A`` hands both points the same codeword.

Filter ids pack ``(pi, j_1, ..., j_l)`` in mixed radix:
``pi + |Pi| * (j_1 + |A| * (j_2 + ...))``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import BitVector, Seed, as_seed, bits_matrix
from .errors import ConstructionError, CostGuardError, DimensionError, ParameterError
from .oracle import ball_intersection_count, ball_volume
from .splitter import SplitterFamily, build_splitter, padded_size, trivial_splitter

__all__ = [
    "InnerCode",
    "TensoredCode",
    "inner_radius",
    "pair_capture_probability",
    "sampling_budget",
    "build_inner_code",
    "verify_inner_code",
    "greedy_inner_code",
    "build_tensored_code",
    "covered_radius",
    "decode",
    "decode_many",
    "materialize",
]

MAX_VERIFY_B = 16
MAX_GREEDY_B = 12
MAX_RETRIES = 64


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a)


def _ball_offsets(b: int, t: int) -> np.ndarray:
    """All b-bit patterns of weight <= t, ordered by weight then value."""
    vals = np.arange(1 << b, dtype=np.int64)
    w = _popcount(vals)
    keep = vals[w <= t]
    return keep[np.argsort(w[w <= t], kind="stable")]


def inner_radius(b: int, s_prime: float) -> int:
    """ceil(b/2 - s' sqrt(b)/2), clipped at 0; rounding up only widens the filters."""
    return max(0, math.ceil(b / 2 - s_prime * math.sqrt(b) / 2 - 1e-9))


def pair_capture_probability(b: int, r_b: int, t_b: int) -> float:
    """Probability that a uniform word lies within ``t_b`` of both points of a pair at distance ``r_b``.

    Pairs at smaller distance are captured at least as often, so this is the
    per-word success probability for the worst pair.
    """
    return ball_intersection_count(b, r_b, t_b, cost_guard=64) / 2.0**b


def _pair_count(b: int, r_b: int) -> int:
    """Unordered pairs (x, y) in {0,1}^b with dist(x, y) <= r_b, counting x = y."""
    return (1 << b) * (1 + ball_volume(b, r_b)) // 2


def sampling_budget(b: int, r_b: int, t_b: int) -> int:
    """Words per sampling round: ceil((ln #pairs + 1) / p).

    With this many uniform words the expected number of uncovered pairs is at
    most 1/e, so a round verifies with probability >= 1 - 1/e.
    """
    p = pair_capture_probability(b, r_b, t_b)
    if p <= 0:
        raise ParameterError(f"t_b={t_b} cannot cover pairs at distance {r_b}")
    return math.ceil((math.log(_pair_count(b, r_b)) + 1) / p)


@dataclass(eq=False)
class InnerCode:
    b: int
    r_b: int
    t_b: int
    words: np.ndarray  # int64 values in [0, 2^b)
    mode: str = "sample"
    rounds: int = 1
    _table: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.words)

    def near_words(self, value: int) -> np.ndarray:
        """Indices of words within ``t_b`` of the b-bit integer ``value``."""
        offsets, flat = self.table()
        return flat[offsets[value] : offsets[value + 1]]

    def table(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR map value -> word indices within ``t_b`` (built once)."""
        if self._table is None:
            E = _ball_offsets(self.b, self.t_b)
            zs = (self.words[:, None] ^ E[None, :]).ravel()
            idx = np.repeat(np.arange(len(self.words), dtype=np.int64), len(E))
            order = np.lexsort((idx, zs))
            counts = np.bincount(zs, minlength=1 << self.b)
            offsets = np.zeros((1 << self.b) + 1, dtype=np.int64)
            np.cumsum(counts, out=offsets[1:])
            self._table = (offsets, idx[order])
        return self._table


def verify_inner_code(words, b: int, r_b: int, t_b: int) -> bool:
    """True iff every pair at distance <= r_b has a common word within t_b of both."""
    if b > MAX_VERIFY_B:
        raise CostGuardError(f"verification over 4^{b} pairs exceeds the b <= {MAX_VERIFY_B} guard")
    return _uncovered(np.asarray(words, dtype=np.int64), b, r_b, t_b) == 0


def _uncovered(words: np.ndarray, b: int, r_b: int, t_b: int) -> int:
    Et = _ball_offsets(b, t_b)
    Er = _ball_offsets(b, r_b)
    marks = np.zeros((1 << b, len(Er)), dtype=bool)
    if len(words):
        for k, e in enumerate(Er):
            # x = a ^ o with o in the t-ball; y = x ^ e is within t of a iff o ^ e is.
            good = Et[_popcount(Et ^ e) <= t_b]
            if len(good):
                marks[(words[:, None] ^ good[None, :]).ravel(), k] = True
    return int((~marks).sum())


def _check_inner_params(b: int, r_b: int, t_b: int) -> None:
    if b < 1:
        raise ParameterError("inner dimension must be positive")
    if r_b < 0 or r_b > b:
        raise ParameterError(f"pair budget r_b={r_b} outside [0, b]")
    if t_b < -(-r_b // 2):
        raise ParameterError(f"t_b={t_b} < ceil(r_b/2)={-(-r_b // 2)}: no word can cover a worst pair")


def greedy_inner_code(b: int, r_b: int, t_b: int) -> np.ndarray:
    """Deterministic greedy set cover over all 2^b candidate words."""
    if b > MAX_GREEDY_B:
        raise CostGuardError(f"greedy cover over 2^{b} candidates exceeds the b <= {MAX_GREEDY_B} guard")
    _check_inner_params(b, r_b, t_b)
    Et = _ball_offsets(b, t_b)
    Er = _ball_offsets(b, r_b)
    N = 1 << b
    # pair (x, k) is covered by word a when x ^ a in Et and x ^ Er[k] ^ a in Et
    cover_offsets = []
    for k, e in enumerate(Er):
        cover_offsets.append(Et[_popcount(Et ^ e) <= t_b])
    uncovered = np.ones((N, len(Er)), dtype=bool)
    chosen = []
    cand = np.arange(N, dtype=np.int64)
    while uncovered.any():
        gains = np.zeros(N, dtype=np.int64)
        for k, good in enumerate(cover_offsets):
            col = uncovered[:, k]
            # gain(a) = #{o in good : x = a ^ o uncovered}
            gains += col[cand[:, None] ^ good[None, :]].sum(axis=1)
        a = int(np.argmax(gains))
        if gains[a] == 0:  # pragma: no cover - impossible once t_b >= ceil(r_b/2)
            raise ConstructionError("greedy cover stalled")
        chosen.append(a)
        for k, good in enumerate(cover_offsets):
            uncovered[a ^ good, k] = False
    return np.array(sorted(chosen), dtype=np.int64)


def build_inner_code(
    b: int,
    r_b: int,
    s_prime: float | None = None,
    seed: Seed | int | None = None,
    *,
    t_b: int | None = None,
    mode: str = "sample",
    max_retries: int = MAX_RETRIES,
) -> InnerCode:
    """Sample-and-verify (or greedy) pair-covering code on {0,1}^b."""
    if t_b is None:
        if s_prime is None:
            raise ParameterError("give either s_prime or t_b")
        t_b = inner_radius(b, s_prime)
    _check_inner_params(b, r_b, t_b)
    if mode == "greedy":
        return InnerCode(b, r_b, t_b, greedy_inner_code(b, r_b, t_b), mode="greedy")
    if mode != "sample":
        raise ParameterError(f"unknown inner-code mode {mode!r}")
    if b > MAX_VERIFY_B:
        raise CostGuardError(f"inner dimension b={b} exceeds the verification guard {MAX_VERIFY_B}")
    seed = as_seed(seed)
    budget = sampling_budget(b, r_b, t_b)
    for attempt in range(max_retries):
        rng = seed.child(attempt).rng()
        if budget >= (1 << b):
            words = np.arange(1 << b, dtype=np.int64)
        else:
            words = np.unique(rng.integers(0, 1 << b, size=budget, dtype=np.int64))
        if _uncovered(words, b, r_b, t_b) == 0:
            return InnerCode(b, r_b, t_b, words, mode="sample", rounds=attempt + 1)
    raise ConstructionError(
        f"no covering code for b={b}, r_b={r_b}, t_b={t_b} within {max_retries} rounds"
    )


@dataclass(eq=False)
class TensoredCode:
    inner: InnerCode
    splitter: SplitterFamily
    B: int  # caller-visible dimension; coordinates B..B_pad-1 are zero padding

    def __post_init__(self):
        if self.splitter.B % self.inner.b or self.splitter.B // self.inner.b != self.splitter.l:
            raise ParameterError("splitter parts must have exactly b coordinates")
        if self.id_space >= 1 << 128:
            raise ParameterError("filter ids would exceed 128 bits")
        # (|Pi|, l, b) coordinate indices of each part, in increasing order
        F, l, b = len(self.splitter), self.splitter.l, self.inner.b
        idx = np.empty((F, l, b), dtype=np.int64)
        for f in range(F):
            for k, part in enumerate(self.splitter.parts(f)):
                idx[f, k] = part
        self._part_idx = idx

    @property
    def b(self) -> int:
        return self.inner.b

    @property
    def l(self) -> int:
        return self.splitter.l

    @property
    def B_pad(self) -> int:
        return self.splitter.B

    @property
    def t_B(self) -> int:
        """Decoding radius: every returned codeword is within l * t_b of x."""
        return self.l * self.inner.t_b

    @property
    def size(self) -> int:
        """|C| = |Pi| * |A|^(B/b), never materialized."""
        return len(self.splitter) * len(self.inner) ** self.l

    id_space = size

    def encode_id(self, pi: int, js) -> int:
        fid, mult = pi, len(self.splitter)
        for j in js:
            fid += mult * int(j)
            mult *= len(self.inner)
        return fid

    def decode_id(self, fid: int) -> tuple[int, tuple[int, ...]]:
        F, A = len(self.splitter), len(self.inner)
        pi, rest = fid % F, fid // F
        js = []
        for _ in range(self.l):
            js.append(rest % A)
            rest //= A
        return pi, tuple(js)

    def codeword(self, fid: int) -> BitVector:
        pi, js = self.decode_id(fid)
        value = 0
        for k, j in enumerate(js):
            w = int(self.inner.words[j])
            for pos, coord in enumerate(self._part_idx[pi, k]):
                value |= ((w >> pos) & 1) << int(coord)
        return BitVector(value, self.B_pad)

    def part_values(self, X: np.ndarray) -> np.ndarray:
        """(n, |Pi|, l) inner-space values of the projections of bit rows ``X``."""
        X = _pad_columns(X, self.B_pad)
        weights = (1 << np.arange(self.b, dtype=np.int64))
        return (X[:, self._part_idx].astype(np.int64) * weights).sum(axis=-1)


def _pad_columns(X: np.ndarray, width: int) -> np.ndarray:
    if X.shape[1] == width:
        return X
    if X.shape[1] > width:
        raise DimensionError(f"vectors of length {X.shape[1]} exceed code length {width}")
    out = np.zeros((X.shape[0], width), dtype=X.dtype)
    out[:, : X.shape[1]] = X
    return out


def build_tensored_code(inner: InnerCode, B: int, *, split: str = "full") -> TensoredCode:
    """Tensor ``inner`` over ``ceil(B/b)`` parts.

    ``split="trivial"`` uses one contiguous partition instead of a splitter
    family; it covers pairs at distance up to ``inner.r_b`` only (no
    splitting is needed when the whole budget fits in one part).
    """
    if B < inner.b:
        raise ParameterError(f"outer dimension B={B} smaller than inner b={inner.b}")
    B_pad = padded_size(B, inner.b)
    l = B_pad // inner.b
    if split == "full":
        fam = build_splitter(B_pad, l)
    elif split == "trivial":
        fam = trivial_splitter(B_pad, l)
    else:
        raise ParameterError(f"unknown split mode {split!r}")
    return TensoredCode(inner, fam, B)


def covered_radius(code: TensoredCode) -> int:
    """Largest r such that every pair at distance <= r shares a filter id."""
    if len(code.splitter) == 1 and code.l > 1:
        return code.inner.r_b
    return code.l * code.inner.r_b


def _ids_for_point(code: TensoredCode, vals: np.ndarray) -> np.ndarray:
    """Filter ids for one point given its (|Pi|, l) part values."""
    F, A = len(code.splitter), len(code.inner)
    dtype = np.int64 if code.size < 2**62 else object
    chunks = []
    for pi in range(F):
        acc = np.array([pi], dtype=dtype)
        mult = F
        for k in range(code.l):
            near = code.inner.near_words(int(vals[pi, k]))
            if len(near) == 0:
                acc = None
                break
            acc = (acc[:, None] + near.astype(dtype)[None, :] * mult).ravel()
            mult *= A
        if acc is not None:
            chunks.append(acc)
    if not chunks:
        return np.zeros(0, dtype=dtype)
    return np.concatenate(chunks)


def decode_many(code: TensoredCode, X: np.ndarray) -> list[np.ndarray]:
    """Filter ids for each row of the (n, B) bit matrix ``X``."""
    if X.ndim != 2 or X.shape[1] > code.B_pad:
        raise DimensionError(f"expected rows of length <= {code.B_pad}")
    vals = code.part_values(X)
    return [_ids_for_point(code, vals[i]) for i in range(len(vals))]


def decode(code: TensoredCode, x: BitVector) -> set[int]:
    if x.d != code.B:
        raise DimensionError(f"expected length {code.B}, got {x.d}")
    ids = decode_many(code, bits_matrix([x], code.B))[0]
    return {int(v) for v in ids}


def materialize(code: TensoredCode, max_size: int = 1 << 20) -> dict[int, BitVector]:
    """Every codeword keyed by filter id (tiny codes only)."""
    if code.size > max_size:
        raise CostGuardError(f"code of size {code.size} exceeds materialization guard {max_size}")
    out = {}
    for pi in range(len(code.splitter)):
        for js in itertools.product(range(len(code.inner)), repeat=code.l):
            fid = code.encode_id(pi, js)
            out[fid] = code.codeword(fid)
    return out
