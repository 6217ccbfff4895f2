from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lvlsf.core import (
    BitVector,
    Seed,
    SetPoint,
    bits_matrix,
    braun_blanquet,
    format_points,
    hamming_distance,
    matrix_to_ints,
    pack_bits,
    parse_points,
    project,
    read_points,
    write_points,
)
from lvlsf.errors import DimensionError, FormatError, UndefinedSimilarityError

bv = BitVector.from_string


@pytest.mark.parametrize("x, y, want", [("0000", "0000", 0), ("0000", "1111", 4), ("0000", "1100", 2)])
def test_hamming_examples(x, y, want):
    assert hamming_distance(bv(x), bv(y)) == want


def test_hamming_length_mismatch():
    with pytest.raises(DimensionError):
        hamming_distance(bv("01"), bv("011"))


@pytest.mark.parametrize(
    "x, y, want", [({1, 2}, {1, 2}, 1), ({1, 2}, {3, 4}, 0), ({1, 2}, {2, 3}, Fraction(1, 2))]
)
def test_braun_blanquet_examples(x, y, want):
    assert braun_blanquet(SetPoint.of(x, 8), SetPoint.of(y, 8)) == want


def test_braun_blanquet_uses_larger_set():
    assert braun_blanquet(SetPoint.of({1}, 8), SetPoint.of({1, 2, 3, 4}, 8)) == Fraction(1, 4)


def test_braun_blanquet_empty_pair_is_undefined():
    with pytest.raises(UndefinedSimilarityError):
        braun_blanquet(SetPoint.of((), 4), SetPoint.of((), 4))


@pytest.mark.parametrize("S, want", [({0, 1}, "10"), (set(), ""), ({1, 3}, "00")])
def test_project_examples(S, want):
    assert str(project(bv("1010"), S)) == want


def test_project_rejects_out_of_range():
    with pytest.raises(DimensionError):
        project(bv("1010"), {4})


def test_bitvector_validation():
    with pytest.raises(DimensionError):
        BitVector(4, 2)
    with pytest.raises(ValueError):
        BitVector.from_bits([0, 2])
    with pytest.raises(ValueError):
        BitVector.from_bits(np.array([0, 3]))


def test_from_bits_numpy_matches_list_path():
    arr = np.array([1, 0, 1, 1, 0, 0, 0, 0, 1], dtype=np.uint8)
    assert BitVector.from_bits(arr) == BitVector.from_bits(arr.tolist())


def test_setpoint_rejects_unsorted_and_out_of_range():
    with pytest.raises(ValueError):
        SetPoint((2, 1), 4)
    with pytest.raises(DimensionError):
        SetPoint((1, 4), 4)
    assert 3 in SetPoint.of({3, 1}, 4) and 2 not in SetPoint.of({3, 1}, 4)


def test_seed_children_are_reproducible_and_distinct():
    a = Seed(5).child(1, 2).rng().integers(0, 1 << 30, 4)
    b = Seed(5).child(1, 2).rng().integers(0, 1 << 30, 4)
    c = Seed(5).child(2, 1).rng().integers(0, 1 << 30, 4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


bit_lists = st.integers(0, 130).flatmap(lambda d: st.lists(st.integers(0, 1), min_size=d, max_size=d))


@given(bit_lists)
def test_hex_round_trip(bits):
    x = BitVector.from_bits(bits)
    assert BitVector.from_hex(x.to_hex(), x.d) == x
    assert x.to_list() == bits


@given(bit_lists, st.data())
def test_distance_is_a_metric_and_matches_coordinates(bits, data):
    d = len(bits)
    other = data.draw(st.lists(st.integers(0, 1), min_size=d, max_size=d))
    x, y = BitVector.from_bits(bits), BitVector.from_bits(other)
    assert hamming_distance(x, y) == sum(a != b for a, b in zip(bits, other))
    assert hamming_distance(x, y) == hamming_distance(y, x)
    assert (hamming_distance(x, y) == 0) == (x == y)


@given(st.lists(st.lists(st.integers(0, 1), min_size=70, max_size=70), min_size=1, max_size=6))
def test_matrix_helpers_agree(rows):
    pts = [BitVector.from_bits(r) for r in rows]
    M = bits_matrix(pts, 70)
    assert M.tolist() == rows
    assert matrix_to_ints(M) == [p.bits for p in pts]
    words = pack_bits(pts, 70)
    assert words.shape == (len(pts), 2)
    assert [int(w[0]) | (int(w[1]) << 64) for w in words] == [p.bits for p in pts]


@given(st.integers(1, 40).flatmap(
    lambda d: st.lists(st.frozensets(st.integers(0, d - 1)), max_size=5).map(lambda ss: (d, ss))))
def test_set_file_round_trip(arg):
    d, sets = arg
    pts = [SetPoint.of(s, d) for s in sets]
    kind, d2, back = parse_points(format_points(pts, d, "sets"))
    assert (kind, d2, back) == ("sets", d, pts)


def test_point_file_round_trip(tmp_path):
    pts = [bv("10110"), bv("00001"), bv("11111")]
    path = tmp_path / "p.txt"
    write_points(path, pts, 5)
    assert path.read_text().splitlines()[0] == "hamming d=5 n=3"
    assert read_points(path) == ("hamming", 5, pts)


@pytest.mark.parametrize(
    "text",
    ["", "vectors d=4 n=1\n0\n", "hamming d=4 n=2\n0\n", "hamming d=4 n=1\n0\n1\n", "hamming d=4 n=1\n00\n",
     "hamming d=3 n=1\nf\n"],
)
def test_bad_point_files(text):
    with pytest.raises(FormatError):
        parse_points(text)
