"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line through the ``criterion`` fixture; the
lines are repeated in a summary section at the end of the pytest run.
"""

import math
import time

import pytest

from lvlsf import (
    braun_blanquet,
    build_hamming_index,
    build_similarity_index,
    hamming_distance,
    plan_hamming_params,
    query_hamming,
    query_similarity,
)
from lvlsf.bench import bench_hamming, bench_sets, fit_exponent
from lvlsf.datasets import gen_hamming, gen_sets
from lvlsf.persist import index_bytes, load_index, save_index
from lvlsf.verify import run_suite

pytestmark = pytest.mark.slow


def _suite_detail(rows) -> str:
    failed = [f"{r.case}: {r.values}" for r in rows if not r.passed]
    return f"{len(rows)} rows, {len(failed)} failed" + (f"; {failed}" if failed else "")


@pytest.mark.criterion(1)
def test_hamming_zero_false_negatives(criterion):
    n, d, r, c, nq = 1 << 12, 256, 16, 2, 10_000
    ds = gen_hamming(n, d, r, 11, planted=0, queries=nq)
    parts = []
    ok = True
    for reduction in ("partition", "xor"):
        t0 = time.perf_counter()
        params = plan_hamming_params(n, d, r, c, reduction=reduction)
        index = build_hamming_index(ds.points, params, 12)
        misses = 0
        for q in ds.queries:
            ans = query_hamming(index, q)
            misses += ans is None or hamming_distance(ds.points[ans], q) > c * r
        elapsed = time.perf_counter() - t0
        ok &= misses == 0 and elapsed < 600
        parts.append(f"{reduction}: recall {(nq - misses) / nq:.4f} in {elapsed:.0f}s")
    criterion.check(ok, "; ".join(parts))


@pytest.mark.criterion(2)
def test_set_similarity_zero_false_negatives(criterion):
    n, d, w, b1, b2, nq = 1 << 12, 1024, 64, 0.5, 0.25, 10_000
    ds = gen_sets(n, d, w, b1, 21, planted=0, queries=nq)
    t0 = time.perf_counter()
    index = build_similarity_index(ds.points, b1, b2, 22)
    misses = 0
    for q in ds.queries:
        ans = query_similarity(index, q)
        misses += ans is None or braun_blanquet(ds.points[ans], q) <= b2
    elapsed = time.perf_counter() - t0
    p = index.groups[0].params
    criterion.check(misses == 0 and elapsed < 600,
                    f"recall {(nq - misses) / nq:.4f} in {elapsed:.0f}s, {p.mode} k={p.k} r={p.r}")


@pytest.mark.criterion(3)
def test_covering_exhaustive(criterion):
    rows = run_suite("covering", 10)
    reached = {}
    for r in rows:
        reached.setdefault(r.case.split()[0], set()).add(int(r.values.split()[0].split("=")[1]))
    spans = reached.get("b=2") == {2, 4, 6, 8, 10} and reached.get("b=5") == {5, 10}
    criterion.check(all(r.passed for r in rows) and spans,
                    _suite_detail(rows) + f"; B values {({k: sorted(v) for k, v in reached.items()})}")


@pytest.mark.criterion(4)
def test_splitter_exhaustive(criterion):
    rows = run_suite("splitter", 16)
    criterion.check(all(r.passed for r in rows) and len(rows) == 8 + 4, _suite_detail(rows))


@pytest.mark.criterion(5)
def test_turan_exhaustive(criterion):
    rows = run_suite("turan", 12)
    criterion.check(all(r.passed for r in rows) and len(rows) == 5, _suite_detail(rows))


@pytest.mark.criterion(6)
def test_reduction_guarantees(criterion):
    rows = run_suite("reduction", 100_000)
    criterion.check(all(r.passed for r in rows) and len(rows) == 4, _suite_detail(rows))


@pytest.mark.criterion(7)
def test_l1_embedding(criterion):
    rows = run_suite("l1", 1000)
    near = next(r for r in rows if r.case.startswith("near"))
    unary = next(r for r in rows if r.case.startswith("unary"))
    far = next(r for r in rows if r.case.startswith("far"))
    criterion.check(near.passed and unary.passed,
                    f"{unary.values}; near {near.values}; far (reported) {far.values}")


@pytest.mark.criterion(8)
def test_appendix_bounds(criterion):
    t0 = time.perf_counter()
    rows = run_suite("bounds", 60)
    elapsed = time.perf_counter() - t0
    criterion.check(all(r.passed for r in rows) and elapsed < 60, _suite_detail(rows) + f" in {elapsed:.1f}s")


@pytest.mark.criterion(9)
def test_scaling_exponent(criterion):
    ns = [1 << e for e in range(10, 15)]
    ham = bench_hamming(ns, 256, 16, 2, queries=300, seed=91)
    e_ham = fit_exponent(ham)
    sets = bench_sets(ns, 1024, 64, 0.5, 0.25, queries=300, seed=92)
    e_sets = fit_exponent(sets)
    rho_sets = math.log(1 / 0.5) / math.log(1 / 0.25)
    recall_ok = all(rec.recall == 1.0 for rec in ham + sets)
    per_n = ", ".join(f"{rec.n}:{rec.candidates_all:.0f}" for rec in ham)
    criterion.check(
        e_ham < 0.85 and recall_ok,
        f"hamming exponent {e_ham:.3f} (candidates {per_n}); "
        f"sets exponent {e_sets:.3f} vs rho {rho_sets:.3f} (reported)",
    )


@pytest.mark.criterion(10)
def test_determinism_and_round_trip(criterion, tmp_path):
    hds = gen_hamming(1 << 10, 256, 16, 101, queries=20)
    params = plan_hamming_params(len(hds.points), 256, 16, 2)
    hidx = build_hamming_index(hds.points, params, 7)
    h1 = index_bytes(hidx)
    h2 = index_bytes(build_hamming_index(hds.points, params, 7))
    sds = gen_sets(1 << 10, 1024, 64, 0.5, 102, queries=20)
    sidx = build_similarity_index(sds.points, 0.5, 0.25, 7)
    s1 = index_bytes(sidx)
    s2 = index_bytes(build_similarity_index(sds.points, 0.5, 0.25, 7))

    same_seed = h1 == h2 and s1 == s2
    round_trip = True
    answers_match = True
    for name, data, ds, query, orig in (("h", h1, hds, query_hamming, hidx), ("s", s1, sds, query_similarity, sidx)):
        path = tmp_path / f"{name}.lvl"
        path.write_bytes(data)
        loaded = load_index(path)
        again = tmp_path / f"{name}2.lvl"
        save_index(loaded, again)
        round_trip &= again.read_bytes() == data
        answers_match &= all(query(loaded, q) == query(orig, q) is not None for q in ds.queries)
    criterion.check(same_seed and round_trip and answers_match,
                    f"same-seed bytes identical={same_seed} ({len(h1)} and {len(s1)} bytes); "
                    f"load/save identical={round_trip}; loaded answers equal originals={answers_match}")
