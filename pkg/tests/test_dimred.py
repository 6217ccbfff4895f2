import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lvlsf.core import BitVector, hamming_distance
from lvlsf.dimred import (
    apply_partition,
    apply_xor,
    build_l1_embedding,
    build_partition_reduction,
    build_xor_reduction,
    embed_point,
    read_l1_points,
    unary_code,
    write_l1_points,
)
from lvlsf.errors import DimensionError, FormatError, ParameterError

XR = build_xor_reduction(256, 16, 2, 0.5, 1 / 192, 1, block=24)
PR = build_partition_reduction(256, 16, 2, 0.5, 4096, 2, block=15)


def _rand(rng, d):
    return BitVector.from_bits(rng.integers(0, 2, size=d))


def test_xor_zero_input_and_identical_points():
    assert all(y.bits == 0 for y in apply_xor(XR, BitVector.zeros(256)))
    x = _rand(np.random.default_rng(0), 256)
    assert all(a == b for a, b in zip(apply_xor(XR, x), apply_xor(XR, x)))


def test_xor_single_coordinate_sets_one_output_bit():
    for j in (0, 17, 255):
        out = apply_xor(XR, BitVector(1 << j, 256))
        assert sum(y.weight for y in out) == 1
        bucket = int(XR.h[j])
        assert out[bucket // XR.B][bucket % XR.B] == 1


def test_xor_identity_when_block_covers_d():
    red = build_xor_reduction(64, 4, 2, 0.5, 0.01, 3)
    assert red.kind == "identity" and red.S == 1
    x = _rand(np.random.default_rng(1), 64)
    assert apply_xor(red, x) == [x]


def test_xor_contracts_and_keeps_a_short_block():
    rng = np.random.default_rng(2)
    for _ in range(500):
        x, y = _rand(rng, 256), _rand(rng, 256)
        fx, fy = apply_xor(XR, x), apply_xor(XR, y)
        dists = [hamming_distance(a, b) for a, b in zip(fx, fy)]
        assert sum(dists) <= hamming_distance(x, y)
        assert min(dists) * XR.m <= hamming_distance(x, y) * XR.B


def test_xor_far_pairs_rarely_short():
    eps, c, r = 0.5, 2, 16
    delta = 1 / 192
    red = build_xor_reduction(2048, r, c, eps, delta, 5)
    rng = np.random.default_rng(3)
    thr = (1 - red.eps) * c * r * red.B / red.m
    fails = total = 0
    for _ in range(10_000):
        z = rng.choice(2048, size=c * r, replace=False)
        g = np.bincount(red.h[z], minlength=red.m) & 1
        g = np.tile(g, red.B // red.m) if red.kind == "replicate" else g
        blocks = g.reshape(red.S, red.B).sum(axis=1)
        fails += int((blocks < thr).sum())
        total += red.S
    # normal approximation to the upper 99% limit
    assert fails / total <= delta + 2.33 * np.sqrt(delta * (1 - delta) / total)


def test_xor_parameter_errors():
    with pytest.raises(ParameterError):
        build_xor_reduction(256, 16, 2, 0.5, 0.5)
    with pytest.raises(ParameterError):
        build_xor_reduction(20, 16, 2, 0.5, 0.001)
    with pytest.raises(DimensionError):
        apply_xor(XR, BitVector.zeros(10))


def test_partition_identity_and_padding():
    x = _rand(np.random.default_rng(4), 256)
    assert all(b.weight == 0 for b in
               [a ^ c for a, c in zip(apply_partition(PR, x), apply_partition(PR, x))])
    assert PR.S == 18 and PR.d_pad == 270


@settings(max_examples=200)
@given(st.integers(0, 2**256 - 1), st.integers(0, 2**256 - 1))
def test_partition_blocks_sum_to_distance(a, b):
    x, y = BitVector(a, 256), BitVector(b, 256)
    dists = [hamming_distance(u, v) for u, v in zip(apply_partition(PR, x), apply_partition(PR, y))]
    D = hamming_distance(x, y)
    assert sum(dists) == D
    assert min(dists) * PR.S <= D


def test_partition_far_blocks_within_bound():
    n, eps, c, r, d = 1024, 0.5, 2, 128, 4096
    red = build_partition_reduction(d, r, c, eps, n, 6)
    pos = np.empty(red.d_pad, dtype=np.int64)
    pos[red.perm] = np.arange(red.d_pad)
    rng = np.random.default_rng(5)
    thr = (1 - eps) * c * r * red.B / d
    fails = total = 0
    for _ in range(5000):
        blocks = np.bincount(pos[rng.choice(d, size=c * r, replace=False)] // red.B, minlength=red.S)
        fails += int((blocks < thr).sum())
        total += red.S
    assert fails / total <= 1 / n + 2.33 * np.sqrt((1 / n) / total)


def test_partition_errors():
    with pytest.raises(ParameterError):
        build_partition_reduction(64, 4, 2, 0.5, 1024, block=65)
    with pytest.raises(ParameterError):
        build_partition_reduction(64, 4, 2, 0.5, 1)


def test_unary_examples():
    h1, h3 = unary_code(1, 4), unary_code(3, 4)
    assert h1 == [0, 0, 0, 1] and h3 == [0, 1, 1, 1]
    assert sum(a != b for a, b in zip(h1, h3)) == 2
    assert sum(a != b for a, b in zip(unary_code(100, 8), unary_code(105, 8))) == 5


@given(st.integers(0, 300), st.integers(0, 300), st.integers(1, 40))
def test_unary_distance_saturates(u, v, R):
    mism = sum(a != b for a, b in zip(unary_code(u, R), unary_code(v, R)))
    assert mism == min(abs(u - v), R)


def test_l1_embedding_separates_near_and_far():
    rng = np.random.default_rng(6)
    X = rng.uniform(0, 20, size=(16, 2))
    emb = build_l1_embedding(X, 2, 1.0, 2.0, 0.5, 7)
    assert embed_point(emb, X[0]) == embed_point(emb, X[0])
    U = emb.unit
    for _ in range(200):
        i = int(rng.integers(16))
        step = rng.laplace(size=2)
        step /= np.abs(step).sum()
        near, far = X[i] + step * rng.uniform(0, 1), X[i] + step * rng.uniform(2, 4)
        ex = embed_point(emb, X[i])
        if emb.cell(near) == emb.cell(X[i]):
            assert hamming_distance(ex, embed_point(emb, near)) <= (1 + emb.eps) * U
        if emb.cell(far) == emb.cell(X[i]):
            assert hamming_distance(ex, embed_point(emb, far)) >= (1 - emb.eps) * 2 * U


def test_l1_stored_points_sit_inside_cells_with_clearance():
    rng = np.random.default_rng(8)
    X = rng.uniform(0, 50, size=(10, 3))
    emb = build_l1_embedding(X, 3, 2.0, 2.0, 0.5, 9)
    for x in X:
        for j in range(3):
            for s in (-2.0, 2.0):
                y = x.copy()
                y[j] += s * 0.999
                assert emb.cell(y) == emb.cell(x)


def test_l1_file_round_trip(tmp_path):
    X = np.array([[0.1, 2.0], [1e-9, -3.5]])
    write_l1_points(tmp_path / "x", X)
    assert np.array_equal(read_l1_points(tmp_path / "x"), X)
    (tmp_path / "bad").write_text("l1 d=2 n=3\n1 2\n")
    with pytest.raises(FormatError):
        read_l1_points(tmp_path / "bad")
