"""Planted near neighbors in Hamming space.

We generate uniform random bit strings, plant some pairs at distance r,
build an index that answers c*r-near queries, and then confirm against a
linear scan that no planted query is ever missed.  Run with:

    python3 demos/hamming_planted.py
"""

import time

from lvlsf import QueryStats, build_hamming_index, hamming_distance, plan_hamming_params, query_hamming
from lvlsf.datasets import gen_hamming

n, d, r, c = 4096, 256, 16, 2

# Every query has a stored point at distance exactly r.
data = gen_hamming(n, d, r, seed=1, queries=500)

for reduction in ("partition", "xor"):
    params = plan_hamming_params(n, d, r, c, reduction=reduction)
    print(f"\n[{reduction}] blocks of length {params.block}, code b={params.b} x l={params.l}, "
          f"{params.S} substructures")

    start = time.perf_counter()
    index = build_hamming_index(data.points, params, seed=2)
    print(f"  built in {time.perf_counter() - start:.2f}s with {index.entries} bucket entries")

    # A miss would mean a false negative; the index is built so that cannot happen.
    misses, worst, stats = 0, 0, QueryStats()
    for q in data.queries:
        hit = query_hamming(index, q, stats=stats)
        if hit is None:
            misses += 1
        else:
            worst = max(worst, hamming_distance(q, data.points[hit]))
    per_query = stats.candidates / len(data.queries)
    print(f"  misses: {misses}, farthest answer: {worst} (allowed {c * r}), "
          f"candidates per query: {per_query:.2f}")
