"""Point types, distance kernels, seeded randomness and the point file format.

Bit vectors are stored as Python integers: coordinate ``i`` is bit ``i``
(coordinate 0 is the least significant bit).  Hex serialization writes the
nibble holding coordinates 0..3 first, so the first hex digit's low bit is
coordinate 0.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, FormatError, UndefinedSimilarityError

__all__ = [
    "BitVector",
    "SetPoint",
    "Seed",
    "hamming_distance",
    "braun_blanquet",
    "project",
    "pack_bits",
    "bits_matrix",
    "read_points",
    "write_points",
    "format_points",
    "parse_points",
]


@dataclass(frozen=True)
class BitVector:
    bits: int
    d: int

    def __post_init__(self):
        if self.d < 0:
            raise DimensionError(f"negative dimension {self.d}")
        if self.bits < 0 or self.bits >> self.d:
            raise DimensionError(f"value does not fit in {self.d} bits")

    @classmethod
    def from_bits(cls, seq: Iterable[int]) -> BitVector:
        if isinstance(seq, np.ndarray):
            arr = seq.astype(np.int64).ravel()
            if arr.size and (arr.min() < 0 or arr.max() > 1):
                raise ValueError("coordinates must be 0 or 1")
            packed = np.packbits(arr.astype(np.uint8), bitorder="little")
            return cls(int.from_bytes(packed.tobytes(), "little"), arr.size)
        seq = list(seq)
        value = 0
        for i, b in enumerate(seq):
            if b not in (0, 1):
                raise ValueError(f"coordinate {i} is {b!r}, expected 0 or 1")
            value |= int(b) << i
        return cls(value, len(seq))

    @classmethod
    def from_string(cls, s: str) -> BitVector:
        """Parse ``'1010'`` with the leftmost character as coordinate 0."""
        return cls.from_bits(int(ch) for ch in s)

    @classmethod
    def zeros(cls, d: int) -> BitVector:
        return cls(0, d)

    @classmethod
    def from_hex(cls, text: str, d: int) -> BitVector:
        text = text.strip()
        if len(text) != (d + 3) // 4:
            raise FormatError(f"hex string of length {len(text)} for d={d}")
        value = int(text[::-1], 16) if text else 0
        if value >> d:
            raise FormatError("hex string sets bits beyond the dimension")
        return cls(value, d)

    def to_hex(self) -> str:
        ndig = (self.d + 3) // 4
        if ndig == 0:
            return ""
        return format(self.bits, f"0{ndig}x")[::-1]

    def to_list(self) -> list[int]:
        return [(self.bits >> i) & 1 for i in range(self.d)]

    def __str__(self) -> str:
        return "".join(str(b) for b in self.to_list())

    def __len__(self) -> int:
        return self.d

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.d:
            raise IndexError(i)
        return (self.bits >> i) & 1

    @property
    def weight(self) -> int:
        return self.bits.bit_count()

    def __xor__(self, other: BitVector) -> BitVector:
        _same_length(self, other)
        return BitVector(self.bits ^ other.bits, self.d)

    def concat(self, other: BitVector) -> BitVector:
        """``self`` followed by ``other`` (other's coordinate 0 lands at ``self.d``)."""
        return BitVector(self.bits | (other.bits << self.d), self.d + other.d)


@dataclass(frozen=True)
class SetPoint:
    elements: tuple[int, ...]
    universe: int
    mask: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        els = tuple(int(e) for e in self.elements)
        for a, b in zip(els, els[1:]):
            if a >= b:
                raise ValueError("elements must be strictly increasing")
        if els and (els[0] < 0 or els[-1] >= self.universe):
            raise DimensionError(f"element outside [0, {self.universe})")
        object.__setattr__(self, "elements", els)
        m = 0
        for e in els:
            m |= 1 << e
        object.__setattr__(self, "mask", m)

    @classmethod
    def of(cls, items: Iterable[int], universe: int) -> SetPoint:
        return cls(tuple(sorted(set(items))), universe)

    @property
    def weight(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, e: int) -> bool:
        return 0 <= e < self.universe and (self.mask >> e) & 1 == 1


@dataclass(frozen=True)
class Seed:
    """Root seed plus a derivation path; equal (value, path) give equal streams."""

    value: int
    path: tuple[int, ...] = ()

    def child(self, *steps: int) -> Seed:
        return Seed(self.value, self.path + tuple(int(s) for s in steps))

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.value & (2**64 - 1), spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(ss))


def as_seed(seed: Seed | int | None) -> Seed:
    if isinstance(seed, Seed):
        return seed
    return Seed(0 if seed is None else int(seed))


def _same_length(x: BitVector, y: BitVector) -> None:
    if x.d != y.d:
        raise DimensionError(f"length mismatch: {x.d} vs {y.d}")


def hamming_distance(x: BitVector, y: BitVector) -> int:
    _same_length(x, y)
    return (x.bits ^ y.bits).bit_count()


def braun_blanquet(x: SetPoint, y: SetPoint) -> Fraction:
    if x.universe != y.universe:
        raise DimensionError(f"universe mismatch: {x.universe} vs {y.universe}")
    denom = max(len(x), len(y))
    if denom == 0:
        raise UndefinedSimilarityError("similarity of two empty sets")
    return Fraction((x.mask & y.mask).bit_count(), denom)


def project(x: BitVector, S: Iterable[int]) -> BitVector:
    """Coordinates of ``x`` at the indices of ``S``, taken in increasing index order."""
    idx = sorted(set(S))
    if idx and (idx[0] < 0 or idx[-1] >= x.d):
        raise DimensionError(f"index outside [0, {x.d})")
    value = 0
    for j, i in enumerate(idx):
        value |= ((x.bits >> i) & 1) << j
    return BitVector(value, len(idx))


# --- batch helpers -----------------------------------------------------------


def bits_matrix(points: Sequence[BitVector], d: int | None = None) -> np.ndarray:
    """(n, d) uint8 matrix of coordinates."""
    if d is None:
        d = points[0].d if points else 0
    nbytes = (d + 7) // 8
    out = np.zeros((len(points), nbytes), dtype=np.uint8)
    for row, p in enumerate(points):
        if p.d != d:
            raise DimensionError(f"point {row} has length {p.d}, expected {d}")
        out[row] = np.frombuffer(p.bits.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(out, axis=1, count=d, bitorder="little")


def pack_bits(points: Sequence[BitVector], d: int | None = None) -> np.ndarray:
    """(n, ceil(d/64)) uint64 words, word 0 holding coordinates 0..63."""
    if d is None:
        d = points[0].d if points else 0
    words = max(1, (d + 63) // 64)
    out = np.zeros((len(points), words * 8), dtype=np.uint8)
    for row, p in enumerate(points):
        out[row] = np.frombuffer(p.bits.to_bytes(words * 8, "little"), dtype=np.uint8)
    return out.view("<u8")


def matrix_to_ints(mat: np.ndarray) -> list[int]:
    """Inverse of :func:`bits_matrix` returning raw integers per row."""
    packed = np.packbits(np.asarray(mat, dtype=np.uint8), axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


# --- point files -----------------------------------------------------------

_HEADER = re.compile(r"^(hamming|sets)\s+d=(\d+)\s+n=(\d+)\s*$")


def format_points(points: Sequence[BitVector] | Sequence[SetPoint], d: int, kind: str | None = None) -> str:
    if kind is None:
        kind = "sets" if points and isinstance(points[0], SetPoint) else "hamming"
    buf = io.StringIO()
    buf.write(f"{kind} d={d} n={len(points)}\n")
    for p in points:
        if kind == "hamming":
            if p.d != d:
                raise DimensionError(f"point of length {p.d} in a d={d} file")
            buf.write(p.to_hex())
        else:
            if p.universe != d:
                raise DimensionError(f"set over universe {p.universe} in a d={d} file")
            buf.write(" ".join(str(e) for e in p.elements))
        buf.write("\n")
    return buf.getvalue()


def parse_points(text: str) -> tuple[str, int, list]:
    lines = text.split("\n")
    m = _HEADER.match(lines[0]) if lines else None
    if m is None:
        raise FormatError(f"bad header: {lines[0]!r}" if lines else "empty file")
    kind, d, n = m.group(1), int(m.group(2)), int(m.group(3))
    body = lines[1 : 1 + n]
    if len(body) < n:
        raise FormatError(f"header promises {n} points, found {len(body)}")
    if any(line.strip() for line in lines[1 + n :]):
        raise FormatError("trailing data after the declared points")
    if kind == "hamming":
        pts = [BitVector.from_hex(line, d) for line in body]
    else:
        pts = [SetPoint(tuple(int(t) for t in line.split()), d) for line in body]
    return kind, d, pts


def write_points(path: str | Path, points, d: int, kind: str | None = None) -> None:
    Path(path).write_text(format_points(points, d, kind))


def read_points(path: str | Path) -> tuple[str, int, list]:
    return parse_points(Path(path).read_text())
