import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lvlsf.errors import ParameterError
from lvlsf.splitter import build_splitter, find_split, padded_size, splits_evenly, trivial_splitter


def _splits_all(fam) -> bool:
    return all(
        any(splits_evenly(h, S, fam.l) for h in fam.functions)
        for k in range(fam.B + 1)
        for S in itertools.combinations(range(fam.B), k)
    )


def test_two_singleton_parts():
    fam = build_splitter(2, 2)
    assert any(h[0] != h[1] for h in fam.functions)
    assert _splits_all(fam)


def test_b4_l2_exhaustive():
    fam = build_splitter(4, 2)
    assert _splits_all(fam)
    assert all(np.bincount(h, minlength=2).tolist() == [2, 2] for h in fam.functions)


def test_single_part_is_constant():
    fam = build_splitter(1, 1)
    assert fam.functions.tolist() == [[0]]


def test_find_split_examples():
    fam = build_splitter(4, 2)
    assert find_split(fam, []) == 0
    i = find_split(fam, {0, 2})
    assert fam.functions[i][0] != fam.functions[i][2]
    # the first (lowest index) valid member is returned
    assert all(not splits_evenly(fam.functions[j], [0, 2], 2) for j in range(i))
    assert find_split(fam, range(4)) == 0


def test_find_split_rejects_foreign_elements():
    with pytest.raises(ParameterError):
        find_split(build_splitter(4, 2), {5})


@pytest.mark.parametrize("B, l", [(0, 1), (3, 4), (5, 2)])
def test_bad_shapes(B, l):
    with pytest.raises(ParameterError):
        build_splitter(B, l)


def test_padding_and_trivial_family():
    assert padded_size(10, 4) == 12 and padded_size(8, 4) == 8
    t = trivial_splitter(6, 3)
    assert t.functions.tolist() == [[0, 0, 1, 1, 2, 2]]


def test_family_is_deterministic():
    assert build_splitter(8, 4) == build_splitter(8, 4)


@given(st.sampled_from([(6, 2), (8, 2), (8, 4), (12, 4), (12, 3)]), st.data())
def test_random_subsets_are_split(shape, data):
    B, l = shape
    fam = build_splitter(B, l)
    S = data.draw(st.sets(st.integers(0, B - 1)))
    h = fam.functions[find_split(fam, S)]
    counts = np.bincount(h[sorted(S)], minlength=l) if S else np.zeros(l, int)
    assert counts.min() >= len(S) // l and counts.max() <= -(-len(S) // l)
