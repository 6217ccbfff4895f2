"""One-sided dimensionality reductions for Hamming space and the l1 -> Hamming embedding.

Both Hamming reductions return a list of S short vectors per input.  Their
contraction side holds for every input pair with certainty: for the xor
reduction the parity map never increases distances and the blocks average
to at most dist/S; for the partition reduction the blocks sum exactly to the
distance.  Only the far-pair (expansion) side is probabilistic.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core import BitVector, Seed, as_seed, bits_matrix, matrix_to_ints
from .errors import ConstructionError, DimensionError, FormatError, ParameterError

__all__ = [
    "XorReduction",
    "PartitionReduction",
    "L1Embedding",
    "build_xor_reduction",
    "apply_xor",
    "build_partition_reduction",
    "apply_partition",
    "build_l1_embedding",
    "embed_point",
    "unary_code",
    "read_l1_points",
    "write_l1_points",
]


@dataclass(eq=False)
class XorReduction:
    """x -> g(x) split into S blocks of B bits, g(x)_j = parity of x over h^-1(j).

    ``kind`` is ``"identity"`` when the block is at least d, ``"replicate"``
    when the parity vector is shorter than a block (it is then repeated
    ``B // m`` times), and ``"blocks"`` otherwise.
    """

    d: int
    m: int
    B: int
    S: int
    h: np.ndarray  # (d,) bucket of each coordinate
    eps: float
    delta: float
    kind: str
    trace: list[str] = field(default_factory=list)

    @property
    def scale(self) -> Fraction:
        """min over blocks of dist(f(x), f(y)) <= dist(x, y) * scale, always."""
        return Fraction(self.B, self.m)

    @property
    def out_dim(self) -> int:
        return self.B

    def parity_matrix(self, X: np.ndarray) -> np.ndarray:
        """(n, m) parity vectors of the (n, d) bit rows ``X``."""
        if X.shape[1] != self.d:
            raise DimensionError(f"expected {self.d} columns, got {X.shape[1]}")
        if self.kind == "identity":
            return X.astype(np.uint8, copy=False)
        onehot = np.zeros((self.d, self.m), dtype=np.int32)
        onehot[np.arange(self.d), self.h] = 1
        return ((X.astype(np.int32) @ onehot) & 1).astype(np.uint8)

    def apply_matrix(self, X: np.ndarray) -> np.ndarray:
        """(n, S, B) output bits."""
        G = self.parity_matrix(X)
        if self.kind == "replicate":
            G = np.tile(G, (1, self.B // self.m))
            return G.reshape(len(X), 1, self.B)
        return G.reshape(len(X), self.S, self.B)


@dataclass(eq=False)
class PartitionReduction:
    """Random permutation of the (zero-padded) coordinates cut into S blocks of B."""

    d: int
    B: int
    S: int
    perm: np.ndarray  # (S*B,) source coordinate of each output slot; >= d means padding
    eps: float
    trace: list[str] = field(default_factory=list)

    @property
    def d_pad(self) -> int:
        return self.S * self.B

    @property
    def scale(self) -> Fraction:
        return Fraction(1, self.S)

    @property
    def out_dim(self) -> int:
        return self.B

    def apply_matrix(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] != self.d:
            raise DimensionError(f"expected {self.d} columns, got {X.shape[1]}")
        padded = np.zeros((len(X), self.d_pad), dtype=np.uint8)
        padded[:, : self.d] = X
        return padded[:, self.perm].reshape(len(X), self.S, self.B)


def _rows_to_vectors(Y: np.ndarray) -> list[BitVector]:
    B = Y.shape[1]
    return [BitVector(v, B) for v in matrix_to_ints(Y)]


def build_xor_reduction(
    d: int,
    r: int,
    c: float,
    eps: float,
    delta: float,
    seed: Seed | int | None = None,
    *,
    block: int | None = None,
) -> XorReduction:
    """Random bucketing h: [d] -> [m] with m = 3cr/eps and blocks of B = 27 eps^-3 ln(1/delta).

    ``block`` overrides the block length (the contraction guarantee does not
    depend on it).
    """
    if not (d >= c * r and c * r > r >= 1):
        raise ParameterError(f"need d >= cr > r >= 1, got d={d}, r={r}, c={c}")
    if not (0 < eps and 0 < delta < 1):
        raise ParameterError("need eps > 0 and 0 < delta < 1")
    trace = []
    m = math.ceil(3 * c * r / eps)
    if 1 / delta < m:
        raise ParameterError(f"need 1/delta >= m: 1/delta={1 / delta:.3g} < m={m}")
    B = math.ceil(27 * eps**-3 * math.log(1 / delta)) if block is None else int(block)
    if block is not None:
        trace.append(f"block length set to {B} by caller")
    rng = as_seed(seed).rng()
    if B >= d:
        trace.append(f"B={B} >= d={d}: identity map")
        return XorReduction(d, d, d, 1, np.arange(d), eps, delta, "identity", trace)
    if B >= m:
        rep = -(-B // m)
        trace.append(f"B={B} >= m={m}: parity vector repeated {rep} times (B -> {rep * m})")
        h = rng.integers(0, m, size=d)
        return XorReduction(d, m, rep * m, 1, h, eps, delta, "replicate", trace)
    m_adj = B * -(-m // B)
    if m_adj != m:
        eps_adj = 3 * c * r / m_adj
        trace.append(f"m {m} -> {m_adj} (multiple of B={B}); eps {eps:.4g} -> {eps_adj:.4g}")
        eps = eps_adj
    h = rng.integers(0, m_adj, size=d)
    return XorReduction(d, m_adj, B, m_adj // B, h, eps, delta, "blocks", trace)


def apply_xor(red: XorReduction, x: BitVector) -> list[BitVector]:
    if x.d != red.d:
        raise DimensionError(f"expected length {red.d}, got {x.d}")
    Y = red.apply_matrix(bits_matrix([x], red.d))[0]
    return _rows_to_vectors(Y)


def build_partition_reduction(
    d: int,
    r: int,
    c: float,
    eps: float,
    n: int,
    seed: Seed | int | None = None,
    *,
    block: int | None = None,
) -> PartitionReduction:
    """Blocks of B = 2 eps^-2 (d/(cr)) ln n coordinates under a random permutation."""
    if not (d >= r >= 1):
        raise ParameterError(f"need d >= r >= 1, got d={d}, r={r}")
    if eps <= 0 or n < 2:
        raise ParameterError("need eps > 0 and n >= 2")
    trace = []
    if block is None:
        B = math.ceil(2 * eps**-2 * d / (c * r) * math.log(n))
    else:
        B = int(block)
        trace.append(f"block length set to {B} by caller")
    if B > d:
        raise ParameterError(f"block length B={B} exceeds d={d}")
    if B < 1:
        raise ParameterError("block length must be positive")
    S = -(-d // B)
    if S * B != d:
        trace.append(f"d={d} padded to {S * B} with zero coordinates")
    perm = as_seed(seed).rng().permutation(S * B)
    return PartitionReduction(d, B, S, perm, eps, trace)


def apply_partition(red: PartitionReduction, x: BitVector) -> list[BitVector]:
    if x.d != red.d:
        raise DimensionError(f"expected length {red.d}, got {x.d}")
    Y = red.apply_matrix(bits_matrix([x], red.d))[0]
    return _rows_to_vectors(Y)


# --- l1 -> Hamming ---------------------------------------------------------


@dataclass(eq=False)
class L1Embedding:
    """Grid cells, rescaling, the saturating unary map and a verified random distance code.

    Inside one cell a point becomes ``d * R`` symbols from ``range(V)``
    (:func:`unary_code` per coordinate), each written with a ``k``-bit code
    word, so the output has ``d * R * k`` bits.  Points in different cells are
    more than ``r`` apart and are kept apart by :meth:`cell`; an index simply
    keeps one structure per cell.

    The accuracy budget ``eps`` is split: coordinates are rounded on a grid
    fine enough for ``eps/4`` (a pair can move by twice that) and the code
    distances stay within ``(1 +- eps/3) k/2``.  For ``||x - y||_1 <= r`` the
    output distance is at most ``(1 + eps) * unit`` and for ``>= c r`` at
    least ``(1 - eps) * c * unit``, where ``unit = (k/2) * scale * r``.
    """

    d: int
    r: float
    c: float
    eps: float
    n: int
    offsets: np.ndarray  # (d,) cell boundary phase per dimension
    side: float
    scale: float
    R: int
    M: int
    code: np.ndarray  # (V, k) uint8
    rounds: int = 1

    @property
    def eps_round(self) -> float:
        return self.eps / 4

    @property
    def eps_code(self) -> float:
        return self.eps / 3

    @property
    def k(self) -> int:
        return self.code.shape[1]

    @property
    def V(self) -> int:
        return self.code.shape[0]

    @property
    def out_dim(self) -> int:
        return self.d * self.R * self.k

    @property
    def unit(self) -> float:
        return self.k / 2 * self.scale * self.r

    def cell(self, x) -> tuple[int, ...]:
        x = np.asarray(x, dtype=float)
        return tuple(int(v) for v in np.floor((x - self.offsets) / self.side))

    def rounded(self, x) -> np.ndarray:
        """Integer coordinates in ``[0, M]`` relative to the point's own cell."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise DimensionError(f"expected {self.d} coordinates, got shape {x.shape}")
        rel = x - self.offsets - np.floor((x - self.offsets) / self.side) * self.side
        return np.clip(np.rint(rel * self.scale), 0, self.M).astype(np.int64)


def unary_code(value: int, R: int) -> list[int]:
    """<floor(value/R), floor((value+1)/R), ..., floor((value+R-1)/R)>."""
    return [(value + i) // R for i in range(R)]


def _grid_offsets(X: np.ndarray, side: float, r: float) -> np.ndarray:
    """Per dimension, put the cell boundary in the middle of the widest cyclic gap."""
    n, d = X.shape
    out = np.zeros(d)
    for i in range(d):
        v = np.sort(np.mod(X[:, i], side))
        gaps = np.diff(np.concatenate([v, [v[0] + side]]))
        j = int(np.argmax(gaps))
        if gaps[j] / 2 < r * (1 - 1e-12):  # pragma: no cover - n gaps sum to 2rn
            raise ConstructionError(f"no boundary with clearance {r} in dimension {i}")
        out[i] = np.mod(v[j] + gaps[j] / 2, side)
    return out


def _code_ok(code: np.ndarray, lo: float, hi: float) -> bool:
    packed = np.packbits(code, axis=1)
    for i in range(len(code) - 1):
        dist = np.bitwise_count(packed[i + 1 :] ^ packed[i]).sum(axis=1)
        if dist.size and (dist.min() < lo or dist.max() > hi):
            return False
    return True


def build_l1_embedding(
    points,
    d: int,
    r: float,
    c: float,
    eps: float,
    seed: Seed | int | None = None,
    *,
    max_retries: int = 64,
) -> L1Embedding:
    X = np.asarray(points, dtype=float).reshape(-1, d)
    n = len(X)
    if n < 1:
        raise ParameterError("need at least one point")
    if not (r > 0 and c >= 1 and 0 < eps <= 1):
        raise ParameterError("need r > 0, c >= 1 and 0 < eps <= 1")
    side = 2 * r * n
    offsets = _grid_offsets(X, side, r)
    eps_g, eps_c = eps / 4, eps / 3
    scale = d / (2 * eps_g * r)
    R = math.ceil(scale * c * r)
    M = math.ceil(side * scale)
    V = (M + R - 1) // R + 1
    k = math.ceil(4 * eps_c**-2 * math.log(4 * max(n, V)))
    lo, hi = (1 - eps_c) * k / 2, (1 + eps_c) * k / 2
    seed = as_seed(seed)
    for attempt in range(max_retries):
        code = seed.child(attempt).rng().integers(0, 2, size=(V, k), dtype=np.uint8)
        if _code_ok(code, lo, hi):
            return L1Embedding(d, r, c, eps, n, offsets, side, scale, R, M, code, attempt + 1)
    raise ConstructionError(f"no distance code with k={k} for {V} values in {max_retries} rounds")


def embed_point(emb: L1Embedding, x) -> BitVector:
    """Within-cell Hamming image of ``x`` (use :meth:`L1Embedding.cell` to separate cells)."""
    vals = emb.rounded(x)
    sym = (vals[:, None] + np.arange(emb.R)[None, :]) // emb.R  # (d, R)
    bits = emb.code[sym].reshape(1, -1)
    return BitVector(matrix_to_ints(bits)[0], emb.out_dim)


_L1_HEADER = re.compile(r"^l1\s+d=(\d+)\s+n=(\d+)\s*$")


def write_l1_points(path: str | Path, points) -> None:
    X = np.asarray(points, dtype=float)
    lines = [f"l1 d={X.shape[1]} n={X.shape[0]}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in X]
    Path(path).write_text("\n".join(lines) + "\n")


def read_l1_points(path: str | Path) -> np.ndarray:
    lines = Path(path).read_text().split("\n")
    m = _L1_HEADER.match(lines[0])
    if m is None:
        raise FormatError(f"bad l1 header: {lines[0]!r}")
    d, n = int(m.group(1)), int(m.group(2))
    rows = [line for line in lines[1:] if line.strip()]
    if len(rows) != n:
        raise FormatError(f"header promises {n} points, found {len(rows)}")
    out = np.array([[float(t) for t in row.split()] for row in rows]).reshape(n, d)
    if out.shape != (n, d) or any(len(row.split()) != d for row in rows):
        raise FormatError("row with the wrong number of coordinates")
    return out
