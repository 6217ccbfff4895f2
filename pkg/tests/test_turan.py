import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lvlsf.errors import FormatError, ParameterError
from lvlsf.oracle import turan_volume_bound
from lvlsf.turan import (
    TuranSystem,
    build_base_system,
    build_perfect_hash_family,
    build_turan,
    chi,
    complete_system,
    decode,
    dump_system,
    hash_extend,
    materialize,
    parse_system,
    partition_extend,
    plan_turan,
    splitter_scale,
    turan_plans,
    verify_system,
)


def _base(n, k, blocks, r=2):
    return TuranSystem(n, k, r, "base", blocks=np.array(blocks, dtype=np.int64).reshape(-1, r))


def _filter_oracle(sys, S):
    S = set(S)
    return sorted(R for R in materialize(sys) if S.issuperset(R))


def test_verify_examples():
    assert verify_system(_base(4, 3, [(0, 1), (2, 3)]))
    assert not verify_system(_base(4, 3, [(0, 1)]))
    assert not verify_system(_base(4, 4, []))
    assert verify_system(complete_system(4, 0, 4))


def test_base_4_3_2():
    sys = build_base_system(4, 3, 2, 1)
    assert verify_system(sys)
    assert len(materialize(sys)) >= 2 == turan_volume_bound(4, 3, 2)


def test_base_6_4_2_within_budget():
    sys = build_base_system(6, 4, 2, 2)
    budget = math.ceil(math.comb(6, 2) / math.comb(4, 2) * (1 + math.log(math.comb(6, 4))))
    assert sys.size <= budget
    assert verify_system(sys)


def test_greedy_base_is_valid():
    sys = build_base_system(7, 4, 2, mode="greedy")
    assert sys.stage == "base" and verify_system(sys)


def test_splitter_scale():
    inner = build_base_system(4, 3, 2, 3)
    assert splitter_scale(inner, 1) is inner
    big = splitter_scale(inner, 2)
    assert (big.n, big.k, big.r) == (8, 6, 4)
    assert verify_system(big)
    assert big.size == len(big.splitter) * inner.size**2


def test_perfect_hash_examples():
    one = build_perfect_hash_family(9, 1, 0, M=3)
    assert len(one) >= 1
    phf = build_perfect_hash_family(6, 2, 4, M=4)
    for K in itertools.combinations(range(6), 2):
        assert any(len(set(h[list(K)])) == 2 for h in phf.functions)
    assert len(phf) <= phf.budget


def test_hash_extend_decode():
    inner = build_base_system(5, 3, 2, 5)
    sys = hash_extend(inner, 9, build_perfect_hash_family(9, 3, 6, M=5), 7)
    assert decode(sys, [4]) == []
    for K in itertools.combinations(range(9), 3):
        assert decode(sys, K)
    for s in range(10):
        for S in itertools.combinations(range(9), s):
            assert decode(sys, S) == _filter_oracle(sys, S)


def test_hash_extend_checks_shapes():
    inner = build_base_system(5, 3, 2, 5)
    with pytest.raises(ParameterError):
        hash_extend(inner, 9, build_perfect_hash_family(9, 3, 6, M=6))


def test_partition_extend():
    inner = complete_system(4, 2, 2)
    assert partition_extend(inner, 1) is inner
    sys = partition_extend(inner, 2, 8)
    assert (sys.n, sys.k, sys.r) == (8, 4, 2)
    assert verify_system(sys)
    assert math.comb(8, 4) == 70


def test_partition_expected_decode_size():
    sys = partition_extend(build_base_system(6, 4, 2, 9), 3, 10)
    n, k, r, s = sys.n, sys.k, sys.r, 9
    rng = np.random.default_rng(11)
    sizes = [len(decode(sys, rng.choice(n, size=s, replace=False))) for _ in range(3000)]
    mean, se = np.mean(sizes), np.std(sizes, ddof=1) / np.sqrt(len(sizes))
    distinct = len(materialize(sys))
    # exact expectation for a uniform s-subset, and the chi bound above it
    exact = distinct * math.perm(s, r) / math.perm(n, r)
    assert abs(mean - exact) <= 3 * se
    assert exact <= (s / k) ** r * math.exp(chi(sys)) * (1 + 1e-12)


def test_build_12_6_2_and_volume_bound():
    sys = build_turan(12, 6, 2, 12)
    assert verify_system(sys)
    blocks = materialize(sys)
    assert len(blocks) >= turan_volume_bound(12, 6, 2)
    assert len(blocks) <= sys.size
    assert sys.size == pytest.approx((12 / 6) ** 2 * math.exp(chi(sys)))


def test_planned_12_6_3():
    sys = build_turan(12, 6, 3, 13)
    assert verify_system(sys)
    assert len(materialize(sys)) >= turan_volume_bound(12, 6, 3)


@settings(max_examples=60, deadline=None)
@given(st.sets(st.integers(0, 11)))
def test_decode_matches_filter(S):
    sys = build_turan(12, 6, 3, 13)
    assert decode(sys, S) == _filter_oracle(sys, S)


def test_decode_edges():
    sys = build_turan(12, 6, 3, 13)
    assert decode(sys, []) == []
    assert decode(sys, range(12)) == materialize(sys)
    with pytest.raises(ParameterError):
        decode(sys, [12])


def test_plan_rules():
    p = plan_turan(1024, 32, 4)
    assert p.b == 2 and p.r1 == 2 and p.k_adj <= 32
    assert plan_turan(1024, 32, 3).b == 1
    with pytest.raises(ParameterError):
        plan_turan(100, 8, 4)
    plans = turan_plans(1024, 32, 3)
    assert plans and all(p.k_adj <= 32 and p.n_pad >= 1024 for p in plans)


def test_dump_round_trip(tmp_path):
    sys = build_base_system(6, 4, 2, 2)
    text = dump_system(sys, tmp_path / "t.txt")
    back = parse_system((tmp_path / "t.txt").read_text())
    assert text.startswith("turan n=6 k=4 r=2")
    assert materialize(back) == materialize(sys) and verify_system(back)
    for bad in ("", "turan n=6 k=4\n", "turan n=4 k=3 r=2\n0 4\n", "turan n=4 k=3 r=2\n1 0\n"):
        with pytest.raises(FormatError):
            parse_system(bad)
