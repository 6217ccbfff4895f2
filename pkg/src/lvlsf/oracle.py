"""Ground-truth scans and exact/analytic counting bounds.

Everything here is deliberately simple: these functions are the independent
side of every check in the test-suite, so they avoid the fast paths used by
the index code.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .core import BitVector, SetPoint, braun_blanquet, hamming_distance
from .errors import CostGuardError, DimensionError, ParameterError

__all__ = [
    "BoundsReport",
    "linear_scan",
    "ball_volume",
    "ball_intersection_count",
    "ball_intersection_enumerate",
    "ball_intersection_bounds",
    "binom_ratio_bounds",
    "binary_entropy",
    "turan_volume_bound",
    "chain_holds",
    "minimal_turan_size",
]

_PREC = 60  # decimal digits for mpmath evaluations


@dataclass
class BoundsReport:
    quantity: str
    exact: float | None
    lower: float
    upper: float
    inputs: dict
    terms: dict = field(default_factory=dict)

    def holds(self, tol: float = 1e-12) -> bool:
        if self.exact is None:
            return self.lower <= self.upper * (1 + tol)
        return self.lower <= self.exact * (1 + tol) and self.exact <= self.upper * (1 + tol)


def linear_scan(points: Sequence, q, threshold, metric: str = "hamming") -> list[int]:
    """Ids of every point meeting ``threshold`` under ``metric``.

    ``hamming``: distance <= threshold.  ``braun_blanquet``: similarity >=
    threshold.  ``l1``: l1 distance <= threshold (points are float sequences).
    """
    out = []
    if metric == "hamming":
        for i, p in enumerate(points):
            if hamming_distance(p, q) <= threshold:
                out.append(i)
    elif metric == "braun_blanquet":
        thr = Fraction(threshold).limit_denominator(10**12) if isinstance(threshold, float) else threshold
        for i, p in enumerate(points):
            if len(p) == 0 and len(q) == 0:
                continue
            if braun_blanquet(p, q) >= thr:
                out.append(i)
    elif metric == "l1":
        for i, p in enumerate(points):
            if len(p) != len(q):
                raise DimensionError("l1 points of different dimension")
            if sum(abs(a - b) for a, b in zip(p, q)) <= threshold:
                out.append(i)
    else:
        raise ParameterError(f"unknown metric {metric!r}")
    return out


def ball_volume(d: int, t: int) -> int:
    if t < 0:
        return 0
    return sum(math.comb(d, j) for j in range(min(t, d) + 1))


def ball_intersection_count(d: int, r: int, t: int, cost_guard: int = 30) -> int:
    """Points within ``t`` of both ends of a fixed pair at distance ``r`` in {0,1}^d.

    With x = 0, y = 1 on the first r coordinates, a point z with i ones among
    those r and j ones among the other d - r has dist(x,z) = i + j and
    dist(y,z) = j + r - i.
    """
    if d > cost_guard:
        raise CostGuardError(f"d={d} exceeds cost guard {cost_guard}")
    if not 0 <= r <= d:
        raise ParameterError(f"need 0 <= r <= d, got r={r}, d={d}")
    total = 0
    for i in range(r + 1):
        for j in range(d - r + 1):
            if i + j <= t and j - i <= t - r:
                total += math.comb(r, i) * math.comb(d - r, j)
    return total


def ball_intersection_enumerate(d: int, r: int, t: int) -> int:
    """Brute-force count over all 2^d points (the oracle for the summation)."""
    if d > 20:
        raise CostGuardError(f"enumeration over 2^{d} points")
    x, y = 0, (1 << r) - 1
    return sum(
        1 for z in range(1 << d) if (z ^ x).bit_count() <= t and (z ^ y).bit_count() <= t
    )


def ball_intersection_bounds(d: int, r: int, s: float, cost_guard: int = 30) -> BoundsReport:
    """Bracket I * 2^-d for radius t = d/2 - s sqrt(d)/2 (points within real radius t)."""
    if not 0 <= r < d / 2:
        raise ParameterError(f"need 0 <= r < d/2, got r={r}, d={d}")
    if not 1 <= s <= d**0.25 / 2 + 1e-12:
        raise ParameterError(f"s={s} outside [1, d^(1/4)/2] for d={d}")
    t = d / 2 - s * math.sqrt(d) / 2
    t_int = math.floor(t + 1e-12)
    core = math.exp(-(s**2) / (2 * (1 - r / d)))
    exact = None
    if d <= cost_guard:
        exact = ball_intersection_count(d, r, t_int, cost_guard) / 2.0**d
    return BoundsReport(
        "ball_intersection",
        exact,
        7 / (8 * d) * core,
        core,
        {"d": d, "r": r, "s": s, "t": t, "t_int": t_int},
    )


def binary_entropy(x) -> mpmath.mpf:
    """H(x) in nats, with H(0) = H(1) = 0."""
    x = mpmath.mpf(x)
    if x <= 0 or x >= 1:
        return mpmath.mpf(0)
    return -x * mpmath.log(x) - (1 - x) * mpmath.log(1 - x)


def binom_ratio_bounds(n: int, m: int, k: int) -> BoundsReport:
    """The chain (n/m)^k <= ... <= C(n,k)/C(m,k) <= ... <= (n/m)^k e^{k^2/m}.

    Terms are compared in log space at 60 significant digits; the exact ratio
    is an exact big-integer quotient.
    """
    if not n >= m >= k >= 0:
        raise ParameterError(f"need n >= m >= k >= 0, got {(n, m, k)}")
    with mpmath.workdps(_PREC):
        if k == 0:
            logs = [mpmath.mpf(0)] * 5
        else:
            base = k * (mpmath.log(n) - mpmath.log(m))
            logs = [
                base,
                base + mpmath.mpf(n - m) / (n * m) * mpmath.mpf(k * (k - 1)) / 2,
                mpmath.log(math.comb(n, k)) - mpmath.log(math.comb(m, k)),
                n * binary_entropy(mpmath.mpf(k) / n) - m * binary_entropy(mpmath.mpf(k) / m),
                base + mpmath.mpf(k * k) / m,
            ]
        names = ["power", "power_corrected", "exact", "entropy", "power_exp"]
        terms = {nm: float(mpmath.exp(v)) for nm, v in zip(names, logs)}
        log_terms = {nm: v for nm, v in zip(names, logs)}
    rep = BoundsReport(
        "binom_ratio",
        float(Fraction(math.comb(n, k), math.comb(m, k))),
        terms["power_corrected"],
        terms["entropy"],
        {"n": n, "m": m, "k": k},
        terms,
    )
    rep.terms["_log"] = log_terms
    return rep


def chain_holds(rep: BoundsReport, tol: float = 1e-12) -> bool:
    """Whether all four inequalities of a binomial-ratio report hold (log space)."""
    logs = rep.terms["_log"]
    seq = [logs[k] for k in ("power", "power_corrected", "exact", "entropy", "power_exp")]
    return all(a <= b + tol * max(1, abs(b)) for a, b in zip(seq, seq[1:]))


def turan_volume_bound(n: int, k: int, r: int) -> int:
    """Minimum block count of any Turán (n, k, r)-system: ceil(C(n,r) / C(k,r))."""
    if not n >= k >= r >= 0:
        raise ParameterError(f"need n >= k >= r >= 0, got {(n, k, r)}")
    num, den = math.comb(n, r), math.comb(k, r)
    return -(-num // den)


def minimal_turan_size(n: int, k: int, r: int, limit: int = 6) -> int | None:
    """Smallest Turán (n,k,r) system by exhaustive search over block families (tiny sizes)."""
    blocks = [frozenset(c) for c in itertools.combinations(range(n), r)]
    ksets = [frozenset(c) for c in itertools.combinations(range(n), k)]
    for size in range(0, limit + 1):
        for fam in itertools.combinations(blocks, size):
            if all(any(b <= K for b in fam) for K in ksets):
                return size
    return None
