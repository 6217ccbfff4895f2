"""Balanced (B, l)-splitter families built from cyclic windows.

Every function in a family is a length-B array of part labels in ``range(l)``
with each part of size exactly B/l.  For every subset S of ``range(B)`` some
member puts between floor(|S|/l) and ceil(|S|/l) elements of S in each part.

Construction
------------
* ``l == 2``: the B/2 + 1 cyclic windows ``[t, t + B/2)`` for ``t = 0..B/2``
  form part 0.  The count ``|S & window|`` moves by at most one per shift and
  the windows at ``t = 0`` and ``t = B/2`` are complementary, so some shift
  hits ``floor(|S|/2)`` or ``ceil(|S|/2)``.
* ``l`` with a factor ``f > 2``: peel off one part at a time.  A cyclic window
  of width B/l slid over all positions of the remaining domain has average
  count ``|S|/l`` and moves by at most one per step, so some offset gets
  exactly ``floor(|S|/l)`` elements; recursing on the remaining ``l - 1``
  parts keeps every part within the floor/ceil band.
* composite ``l = f * g``: split into ``f`` parts, then split each part into
  ``g`` parts with an independent choice per part (mixed radix).  Nested
  floors and ceilings collapse, so the band is preserved.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParameterError

__all__ = [
    "SplitterFamily",
    "build_splitter",
    "trivial_splitter",
    "find_split",
    "padded_size",
    "splits_evenly",
]


@dataclass(frozen=True, eq=False)
class SplitterFamily:
    B: int
    l: int
    functions: np.ndarray  # (F, B) int16 part labels, canonical lexicographic order

    def __len__(self) -> int:
        return len(self.functions)

    def parts(self, index: int) -> list[np.ndarray]:
        """Coordinates of each part of function ``index`` in increasing order."""
        h = self.functions[index]
        return [np.flatnonzero(h == j) for j in range(self.l)]

    def part_masks(self) -> np.ndarray:
        """(F, l) object array of Python int bitmasks, one per part."""
        F = len(self.functions)
        out = np.empty((F, self.l), dtype=object)
        weights = [1 << i for i in range(self.B)]
        for f in range(F):
            h = self.functions[f]
            for j in range(self.l):
                out[f, j] = sum(weights[i] for i in np.flatnonzero(h == j))
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SplitterFamily)
            and self.B == other.B
            and self.l == other.l
            and np.array_equal(self.functions, other.functions)
        )

    __hash__ = None


def padded_size(B: int, l: int) -> int:
    """Smallest multiple of ``l`` that is at least ``B``; callers pad with zero coordinates."""
    if l < 1:
        raise ParameterError("l must be positive")
    return -(-B // l) * l


def _smallest_factor(l: int) -> int:
    for f in range(2, int(l**0.5) + 1):
        if l % f == 0:
            return f
    return l


def _halving(B: int) -> list[tuple[int, ...]]:
    half = B // 2
    out = []
    for t in range(half + 1):
        lab = [1] * B
        for i in range(t, t + half):
            lab[i % B] = 0
        out.append(tuple(lab))
    return out


def _peel(B: int, l: int) -> list[tuple[int, ...]]:
    """Part labels for a single level of ``l`` parts of width B/l each."""
    w = B // l
    results = []

    def rec(remaining: tuple[int, ...], part: int, lab: list[int]) -> None:
        if part == l - 1:
            for i in remaining:
                lab[i] = part
            results.append(tuple(lab))
            return
        m = len(remaining)
        for off in range(m):
            chosen = {remaining[(off + k) % m] for k in range(w)}
            for i in chosen:
                lab[i] = part
            rec(tuple(i for i in remaining if i not in chosen), part + 1, lab)

    rec(tuple(range(B)), 0, [0] * B)
    return results


@lru_cache(maxsize=None)
def _family(B: int, l: int) -> tuple[tuple[int, ...], ...]:
    if l == 1:
        return ((0,) * B,)
    f = _smallest_factor(l)
    top = _halving(B) if f == 2 else _peel(B, f)
    g = l // f
    if g == 1:
        return tuple(sorted(set(top)))
    sub = _family(B // f, g)
    out = set()
    for lab in top:
        groups = [[i for i in range(B) if lab[i] == j] for j in range(f)]
        for choice in itertools.product(sub, repeat=f):
            new = [0] * B
            for j, (coords, sublab) in enumerate(zip(groups, choice)):
                for pos, i in enumerate(coords):
                    new[i] = j * g + sublab[pos]
            out.add(tuple(new))
    return tuple(sorted(out))


def build_splitter(B: int, l: int) -> SplitterFamily:
    if l < 1 or B < 1:
        raise ParameterError(f"need B >= 1 and l >= 1, got B={B}, l={l}")
    if l > B:
        raise ParameterError(f"more parts than coordinates: l={l} > B={B}")
    if B % l:
        raise ParameterError(f"l={l} does not divide B={B}; pad with padded_size first")
    funcs = np.array(_family(B, l), dtype=np.int16).reshape(-1, B)
    return SplitterFamily(B, l, funcs)


def trivial_splitter(B: int, l: int) -> SplitterFamily:
    """The single function with contiguous parts.

    It is a valid choice whenever no splitting is needed, i.e. when every part
    may absorb the whole difference budget on its own.
    """
    if l < 1 or B < 1 or B % l:
        raise ParameterError(f"need l | B with both positive, got B={B}, l={l}")
    w = B // l
    return SplitterFamily(B, l, (np.arange(B, dtype=np.int16) // w).reshape(1, B))


def splits_evenly(h: np.ndarray, S, l: int) -> bool:
    S = list(S)
    if not S:
        return True
    counts = np.bincount(h[S], minlength=l)
    lo, hi = len(S) // l, -(-len(S) // l)
    return bool(counts.min() >= lo and counts.max() <= hi)


def find_split(fam: SplitterFamily, S) -> int:
    """Lowest index of a family member that splits ``S`` within the floor/ceil band."""
    S = sorted(set(S))
    if S and (S[0] < 0 or S[-1] >= fam.B):
        raise ParameterError(f"S is not a subset of range({fam.B})")
    if not S:
        return 0
    lo, hi = len(S) // fam.l, -(-len(S) // fam.l)
    sub = fam.functions[:, S]
    counts = np.stack([(sub == j).sum(axis=1) for j in range(fam.l)], axis=1)
    ok = (counts.min(axis=1) >= lo) & (counts.max(axis=1) <= hi)
    hits = np.flatnonzero(ok)
    if len(hits) == 0:  # pragma: no cover - excluded by construction
        raise AssertionError("splitter family failed to split a set")
    return int(hits[0])
