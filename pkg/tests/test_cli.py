import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from lvlsf import cli
from lvlsf.cli import main
from lvlsf.errors import ConstructionError
from lvlsf.index import BucketTable
from lvlsf.persist import load_index, save_index


@pytest.fixture
def hamming_data(tmp_path):
    out = tmp_path / "h.txt"
    assert main(["gen", "hamming", "--n", "200", "--d", "64", "--r", "4", "--queries", "25", "--seed", "1",
                 "--out", str(out)]) == 0
    return out


def test_gen_build_query_hamming(hamming_data, tmp_path, capsys):
    idx = tmp_path / "h.lvl"
    assert main(["build", str(hamming_data), "--r", "4", "--c", "2", "--out", str(idx)]) == 0
    assert "desk plan" in capsys.readouterr().out
    report = tmp_path / "report.csv"
    assert main(["query", str(idx), f"{hamming_data}.queries", "--truth", f"{hamming_data}.truth",
                 "--out", str(report)]) == 0
    rows = list(csv.DictReader(io.StringIO(report.read_text())))
    assert len(rows) == 25 and all(r["correct"] == "yes" for r in rows)
    assert all(int(r["oracle_near"]) >= 1 for r in rows)


def test_build_is_deterministic(hamming_data, tmp_path):
    a, b = tmp_path / "a.lvl", tmp_path / "b.lvl"
    for p in (a, b):
        assert main(["build", str(hamming_data), "--r", "4", "--c", "2", "--seed", "9", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["gen", "sets", "--n", "50", "--d", "64", "--w", "16", "--b1", "0.5", "--seed", "3",
                     "--queries", "4", "--out", str(tmp_path / name)]) == 0
    for suffix in ("", ".queries", ".truth"):
        assert (tmp_path / f"a{suffix}").read_bytes() == (tmp_path / f"b{suffix}").read_bytes()


def test_sets_round_trip(tmp_path):
    data, idx = tmp_path / "s.txt", tmp_path / "s.lvl"
    assert main(["gen", "sets", "--n", "150", "--d", "128", "--w", "16", "--b1", "0.5", "--queries", "10",
                 "--out", str(data)]) == 0
    assert main(["build", str(data), "--b1", "0.5", "--b2", "0.25", "--out", str(idx)]) == 0
    assert main(["query", str(idx), f"{data}.queries", "--truth", f"{data}.truth"]) == 0


def test_parameter_errors_exit_2(hamming_data, tmp_path, capsys):
    assert main(["build", str(hamming_data), "--r", "40", "--c", "2", "--out", str(tmp_path / "x")]) == 2
    assert main(["build", str(hamming_data), "--out", str(tmp_path / "x")]) == 2
    assert main(["build", str(hamming_data), "--r", "4", "--c", "2", "--strict", "--out", str(tmp_path / "x")]) == 2
    assert main(["query", str(tmp_path / "missing.lvl"), str(hamming_data)]) == 2
    assert "error" in capsys.readouterr().err


def test_cost_guard_exit_2(hamming_data, tmp_path):
    assert main(["build", str(hamming_data), "--r", "4", "--c", "2", "--cost-guard", "1",
                 "--out", str(tmp_path / "x")]) == 2


def test_missed_planted_query_exits_4(hamming_data, tmp_path):
    idx = tmp_path / "h.lvl"
    assert main(["build", str(hamming_data), "--r", "4", "--c", "2", "--out", str(idx)]) == 0
    # sabotage the saved index so every probe misses; the oracle must notice
    broken = load_index(idx)
    broken.tables = [BucketTable.from_lists([np.zeros(0, np.int64)] * broken.n) for _ in broken.tables]
    save_index(broken, idx)
    report = tmp_path / "r.csv"
    assert main(["query", str(idx), f"{hamming_data}.queries", "--truth", f"{hamming_data}.truth",
                 "--out", str(report)]) == 4
    assert "no" in {r["correct"] for r in csv.DictReader(io.StringIO(report.read_text()))}


def test_construction_failure_exits_3(hamming_data, tmp_path, monkeypatch, capsys):
    def fail(*args, **kwargs):
        raise ConstructionError("no covering code within 64 rounds")

    monkeypatch.setattr(cli, "build_hamming_index", fail)
    assert main(["build", str(hamming_data), "--r", "4", "--c", "2", "--out", str(tmp_path / "x")]) == 3
    assert "construction failed" in capsys.readouterr().err


def test_verify_and_bench(tmp_path, capsys):
    out = tmp_path / "v.csv"
    assert main(["verify", "--suite", "splitter", "--max", "16", "--out", str(out)]) == 0
    assert out.read_text().startswith("suite,case,passed,values")
    bench = tmp_path / "b.csv"
    assert main(["bench", "hamming", "--ns", "128,256", "--d", "64", "--r", "4", "--queries", "10",
                 "--out", str(bench)]) == 0
    rows = list(csv.DictReader(io.StringIO(bench.read_text())))
    assert [r["recall"] for r in rows] == ["1.0", "1.0"]
    assert "exponent" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "lvlsf", "verify", "--suite", "dispatch", "--max", "6"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "dispatch" in res.stdout
