"""Braun-Blanquet set similarity search.

Each stored set has w elements.  Queries are built to overlap some stored
set in at least b1*w elements, and the index must return a set whose
similarity exceeds b2.  The filter keys are blocks of a Turán system, so a
query shares a key with every sufficiently similar set.

    python3 demos/set_similarity.py
"""

from lvlsf import braun_blanquet, build_similarity_index, query_similarity
from lvlsf.datasets import gen_sets

n, universe, w, b1, b2 = 2048, 1024, 64, 0.5, 0.25
data = gen_sets(n, universe, w, b1, seed=3, queries=300)

index = build_similarity_index(data.points, b1, b2, seed=4)
p = index.groups[0].params  # every stored set has weight w, so there is one group
print(f"filters: subsets of size {p.r} from a system over blocks of {p.k} (mode {p.mode})")
print(f"bucket entries: {index.entries}")

sims = []
for q in data.queries:
    hit = query_similarity(index, q)
    assert hit is not None, "a planted partner exists, so something must be returned"
    sims.append(braun_blanquet(q, data.points[hit]))

print(f"answered {len(sims)} queries; lowest returned similarity {min(sims)} (must exceed {b2})")
