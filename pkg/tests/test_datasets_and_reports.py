from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lvlsf.bench import BenchRecord, bench_hamming, bench_sets, fit_exponent, format_bench_csv, parse_bench_csv
from lvlsf.core import braun_blanquet, hamming_distance
from lvlsf.datasets import (
    Dataset,
    TruthLine,
    format_truth,
    gen_l1,
    generate,
    parse_truth,
    read_dataset,
    write_dataset,
)
from lvlsf.errors import FormatError, ParameterError
from lvlsf.verify import VerifyRow, format_rows, parse_rows, run_suite


def test_hamming_generator_contract():
    ds = generate("hamming", 100, 64, r=4, seed=1)
    assert len(ds.points) == 100 and len(ds.truth) == 10
    for t in ds.truth:
        assert t.role == "pair" and hamming_distance(ds.points[t.a], ds.points[t.b]) == t.value == 4


def test_set_generator_contract():
    ds = generate("sets", 60, 128, w=16, b1=0.5, seed=2, queries=5)
    for t in ds.truth:
        other = ds.points[t.b] if t.role == "pair" else ds.queries[t.a]
        base = ds.points[t.a] if t.role == "pair" else ds.points[t.b]
        assert len(set(base) & set(other)) >= 8
        assert braun_blanquet(base, other) == t.value
    assert all(len(p) == 16 for p in ds.points)


def test_l1_generator_contract():
    ds = gen_l1(40, 3, 2.0, 3, queries=4)
    for t in ds.truth:
        assert 1.0 <= t.value <= 2.0 + 1e-9


def test_generator_errors():
    with pytest.raises(ParameterError):
        generate("hamming", 10, 8)
    with pytest.raises(ParameterError):
        generate("graphs", 10, 8)
    with pytest.raises(ParameterError):
        generate("hamming", 10, 8, r=2, planted=10)


@pytest.mark.parametrize("kind, extra", [("hamming", {"r": 3}), ("sets", {"w": 6, "b1": 0.5}), ("l1", {"r": 1.5})])
def test_dataset_files_round_trip_and_determinism(kind, extra, tmp_path):
    a = generate(kind, 30, 16, seed=5, queries=3, **extra)
    b = generate(kind, 30, 16, seed=5, queries=3, **extra)
    pa = write_dataset(a, tmp_path / "a")
    pb = write_dataset(b, tmp_path / "b")
    assert [p.read_bytes() for p in pa] == [p.read_bytes() for p in pb]
    back = read_dataset(tmp_path / "a")
    assert back.truth == a.truth and back.kind == kind
    if kind != "l1":
        assert back.points == a.points and back.queries == a.queries


@given(st.lists(st.tuples(st.sampled_from(["pair", "query"]), st.integers(0, 99), st.integers(0, 99),
                          st.one_of(st.integers(0, 500), st.fractions(min_value=0, max_value=1),
                                    st.floats(0, 1e6, allow_nan=False)))))
def test_truth_round_trip(rows):
    ds = Dataset("hamming", 8, [None] * 100, [], [TruthLine(*r) for r in rows])
    kind, n, nq, lines = parse_truth(format_truth(ds))
    assert (kind, n, nq) == ("hamming", 100, 0)
    assert lines == ds.truth
    assert all(isinstance(g.value, Fraction) for g, w in zip(lines, ds.truth) if isinstance(w.value, Fraction))


@pytest.mark.parametrize("text", ["", "truth kind=x\n", "truth kind=sets n=2 queries=0\npair 0 1\n",
                                  "truth kind=sets n=2 queries=0\nedge 0 1 2\n"])
def test_bad_truth(text):
    with pytest.raises(FormatError):
        parse_truth(text)


def test_bench_records_and_csv():
    recs = bench_hamming([256, 512], 64, 4, 2, queries=20, seed=1)
    recs += bench_sets([256], 128, 8, 0.5, 0.25, queries=20, seed=2)
    assert all(r.recall == 1.0 for r in recs)
    assert all(r.candidates >= 1 for r in recs)
    back = parse_bench_csv(format_bench_csv(recs))
    assert back == recs
    assert isinstance(fit_exponent(recs[:2]), float)


def test_fit_exponent_recovers_slope():
    recs = [BenchRecord("x", n, 1, "", 0.0, 0.0, 0.0, 0.0, 3 * n**0.4, 1.0, 0.0) for n in (100, 1000, 10000)]
    assert fit_exponent(recs) == pytest.approx(0.4)


def test_bench_csv_header_is_checked():
    with pytest.raises(ValueError):
        parse_bench_csv("kind,n\nx,1\n")


def test_verify_rows_csv_round_trip():
    rows = run_suite("dispatch") + [VerifyRow("x", "quoted, \"case\"", False, "a=1, b=2")]
    assert parse_rows(format_rows(rows)) == rows
    assert all(isinstance(r.passed, bool) for r in rows)


def test_small_suites_pass():
    for name, limit in (("splitter", 8), ("turan", 12), ("dispatch", 8)):
        assert all(r.passed for r in run_suite(name, limit))
