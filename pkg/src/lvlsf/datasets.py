"""Synthetic datasets with planted neighbors, plus the truth sidecar format.

A dataset is written as up to three files next to each other::

    out          points, in the core (hamming / sets) or l1 text format
    out.queries  query points in the same format (only when queries > 0)
    out.truth    one planted relation per line

The truth file starts with ``truth kind=<kind> n=<n> queries=<m>`` and then
has lines ``pair <i> <j> <value>`` (two stored points) or ``query <q> <i>
<value>`` (query q was planted next to stored point i).  The value is the
Hamming or l1 distance, or the Braun-Blanquet similarity as ``p/q``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core import BitVector, Seed, SetPoint, as_seed, braun_blanquet, read_points, write_points
from .dimred import read_l1_points, write_l1_points
from .errors import FormatError, ParameterError

__all__ = [
    "TruthLine",
    "Dataset",
    "gen_hamming",
    "gen_sets",
    "gen_l1",
    "generate",
    "write_dataset",
    "read_dataset",
    "format_truth",
    "parse_truth",
    "flip_bits",
    "plant_set",
]

KINDS = ("hamming", "sets", "l1")
_TRUTH_HEADER = re.compile(r"^truth kind=(\w+) n=(\d+) queries=(\d+)$")


@dataclass(frozen=True)
class TruthLine:
    role: str  # "pair" or "query"
    a: int
    b: int
    value: int | float | Fraction


@dataclass
class Dataset:
    kind: str
    d: int
    points: list
    queries: list = field(default_factory=list)
    truth: list[TruthLine] = field(default_factory=list)


def flip_bits(x: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Copy of the 0/1 row ``x`` with exactly ``count`` coordinates flipped."""
    y = x.copy()
    y[rng.choice(len(x), size=count, replace=False)] ^= 1
    return y


def plant_set(x: SetPoint, share: int, rng: np.random.Generator) -> SetPoint:
    """Same-weight set meeting ``x`` in exactly ``share`` elements."""
    w, d = len(x), x.universe
    if not 0 <= share <= w or d - w < w - share:
        raise ParameterError(f"cannot plant a weight-{w} set sharing {share} elements in [{d}]")
    keep = rng.choice(np.array(x.elements, dtype=np.int64), size=share, replace=False)
    outside = np.setdiff1d(np.arange(d), np.array(x.elements, dtype=np.int64))
    extra = rng.choice(outside, size=w - share, replace=False)
    return SetPoint(tuple(sorted(int(e) for e in np.concatenate([keep, extra]))), d)


def _plant_count(n: int, planted: int | None) -> int:
    m = max(1, n // 10) if planted is None else planted
    if not 0 <= m < n or (m and n < 2):
        raise ParameterError(f"planted count {m} must be below n={n}")
    return m


def gen_hamming(n: int, d: int, r: int, seed=None, *, planted: int | None = None, queries: int = 0) -> Dataset:
    """Uniform points; the last ``planted`` points sit at distance exactly r from earlier ones."""
    if not 0 <= r <= d:
        raise ParameterError(f"need 0 <= r <= d, got r={r}, d={d}")
    rng = as_seed(seed).rng()
    m = _plant_count(n, planted)
    X = rng.integers(0, 2, size=(n, d), dtype=np.uint8)
    truth = []
    for j in range(n - m, n):
        i = int(rng.integers(n - m))
        X[j] = flip_bits(X[i], r, rng)
        truth.append(TruthLine("pair", i, j, r))
    Q = []
    for q in range(queries):
        i = int(rng.integers(n))
        Q.append(BitVector.from_bits(flip_bits(X[i], r, rng)))
        truth.append(TruthLine("query", q, i, r))
    return Dataset("hamming", d, [BitVector.from_bits(x) for x in X], Q, truth)


def _random_set(d: int, w: int, rng) -> SetPoint:
    return SetPoint(tuple(sorted(int(e) for e in rng.choice(d, size=w, replace=False))), d)


def gen_sets(n: int, d: int, w: int, b1: float, seed=None, *, planted: int | None = None, queries: int = 0) -> Dataset:
    """Uniform weight-w sets; planted partners share ceil(b1 w) elements."""
    if not 0 < w <= d:
        raise ParameterError(f"need 0 < w <= d, got w={w}, d={d}")
    rng = as_seed(seed).rng()
    m = _plant_count(n, planted)
    share = math.ceil(Fraction(b1).limit_denominator(10**9) * w)
    pts = [_random_set(d, w, rng) for _ in range(n - m)]
    truth = []
    for j in range(n - m, n):
        i = int(rng.integers(n - m))
        pts.append(plant_set(pts[i], share, rng))
        truth.append(TruthLine("pair", i, j, braun_blanquet(pts[i], pts[j])))
    Q = []
    for q in range(queries):
        i = int(rng.integers(n))
        Q.append(plant_set(pts[i], share, rng))
        truth.append(TruthLine("query", q, i, braun_blanquet(pts[i], Q[-1])))
    return Dataset("sets", d, pts, Q, truth)


def _l1_step(d: int, r: float, rng) -> np.ndarray:
    """Random displacement with l1 norm in [r/2, r]."""
    direction = rng.laplace(size=d)
    direction /= np.abs(direction).sum()
    return direction * r * rng.uniform(0.5, 1.0)


def gen_l1(n: int, d: int, r: float, seed=None, *, planted: int | None = None, queries: int = 0, side: float = 100.0) -> Dataset:
    """Uniform points in [0, side)^d; planted partners within l1 distance r."""
    if r <= 0:
        raise ParameterError("r must be positive")
    rng = as_seed(seed).rng()
    m = _plant_count(n, planted)
    X = rng.uniform(0, side, size=(n, d))
    truth = []
    for j in range(n - m, n):
        i = int(rng.integers(n - m))
        X[j] = X[i] + _l1_step(d, r, rng)
        truth.append(TruthLine("pair", i, j, float(np.abs(X[i] - X[j]).sum())))
    Q = []
    for q in range(queries):
        i = int(rng.integers(n))
        Q.append(X[i] + _l1_step(d, r, rng))
        truth.append(TruthLine("query", q, i, float(np.abs(X[i] - Q[-1]).sum())))
    return Dataset("l1", d, list(X), Q, truth)


def generate(kind: str, n: int, d: int, *, r: float | None = None, w: int | None = None, b1: float | None = None,
             seed: Seed | int | None = None, planted: int | None = None, queries: int = 0) -> Dataset:
    if kind == "hamming":
        if r is None:
            raise ParameterError("hamming datasets need r")
        return gen_hamming(n, d, int(r), seed, planted=planted, queries=queries)
    if kind == "sets":
        if w is None or b1 is None:
            raise ParameterError("set datasets need w and b1")
        return gen_sets(n, d, w, b1, seed, planted=planted, queries=queries)
    if kind == "l1":
        if r is None:
            raise ParameterError("l1 datasets need r")
        return gen_l1(n, d, float(r), seed, planted=planted, queries=queries)
    raise ParameterError(f"unknown dataset kind {kind!r}; expected one of {KINDS}")


def _fmt_value(v) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(text: str):
    if "/" in text:
        return Fraction(text)
    try:
        return int(text)
    except ValueError:
        return float(text)


def format_truth(ds: Dataset) -> str:
    lines = [f"truth kind={ds.kind} n={len(ds.points)} queries={len(ds.queries)}"]
    lines += [f"{t.role} {t.a} {t.b} {_fmt_value(t.value)}" for t in ds.truth]
    return "\n".join(lines) + "\n"


def parse_truth(text: str) -> tuple[str, int, int, list[TruthLine]]:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    m = _TRUTH_HEADER.match(lines[0]) if lines else None
    if m is None:
        raise FormatError("bad truth header")
    out = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 4 or parts[0] not in ("pair", "query"):
            raise FormatError(f"bad truth line {ln!r}")
        out.append(TruthLine(parts[0], int(parts[1]), int(parts[2]), _parse_value(parts[3])))
    return m.group(1), int(m.group(2)), int(m.group(3)), out


def _write_pts(path: Path, kind: str, pts: list, d: int) -> None:
    if kind == "l1":
        write_l1_points(path, np.asarray(pts, dtype=float).reshape(len(pts), d))
    else:
        write_points(path, pts, d, kind)


def _read_pts(path: Path, kind: str) -> tuple[int, list]:
    if kind == "l1":
        X = read_l1_points(path)
        return X.shape[1], list(X)
    k, d, pts = read_points(path)
    if k != kind:
        raise FormatError(f"{path} holds {k} points, truth says {kind}")
    return d, pts


def write_dataset(ds: Dataset, out: str | Path) -> list[Path]:
    out = Path(out)
    paths = [out]
    _write_pts(out, ds.kind, ds.points, ds.d)
    if ds.queries:
        qpath = Path(str(out) + ".queries")
        _write_pts(qpath, ds.kind, ds.queries, ds.d)
        paths.append(qpath)
    tpath = Path(str(out) + ".truth")
    tpath.write_text(format_truth(ds))
    paths.append(tpath)
    return paths


def read_dataset(out: str | Path) -> Dataset:
    out = Path(out)
    kind, n, nq, truth = parse_truth(Path(str(out) + ".truth").read_text())
    d, pts = _read_pts(out, kind)
    queries = _read_pts(Path(str(out) + ".queries"), kind)[1] if nq else []
    if len(pts) != n or len(queries) != nq:
        raise FormatError("point counts disagree with the truth header")
    return Dataset(kind, d, pts, queries, truth)
