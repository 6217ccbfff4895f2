"""Command line front end: gen, build, query, bench, verify.

Exit codes: 0 success, 2 bad parameters or input, 3 construction failure,
4 verification failure (a failed suite row or a wrong query answer).
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from fractions import Fraction
from pathlib import Path

from .bench import bench_hamming, bench_sets, fit_exponent, format_bench_csv
from .core import BitVector, braun_blanquet, hamming_distance, read_points
from .datasets import generate, parse_truth, write_dataset
from .errors import ConstructionError, CostGuardError, LsfError, VerificationError
from .index import (
    ENTRY_CAP,
    HammingIndex,
    build_hamming_index,
    build_similarity_index,
    plan_hamming_params,
    query_hamming,
    query_similarity,
)
from .oracle import linear_scan
from .persist import load_index, save_index
from .verify import SUITES, format_rows, run_suite

EXIT_OK, EXIT_PARAM, EXIT_BUILD, EXIT_VERIFY = 0, 2, 3, 4


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    ds = generate(args.kind, args.n, args.d, r=args.r, w=args.w, b1=args.b1, seed=args.seed,
                  planted=args.planted, queries=args.queries)
    for p in write_dataset(ds, args.out):
        print(p)
    return EXIT_OK


def cmd_build(args) -> int:
    kind, d, points = read_points(args.data)
    if kind == "hamming":
        if args.r is None or args.c is None:
            raise LsfError("hamming build needs --r and --c")
        params = plan_hamming_params(len(points), d, int(args.r), args.c, args.mode, reduction=args.reduction,
                                     strict=args.strict, entry_cap=args.cost_guard)
        index = build_hamming_index(points, params, args.seed)
        trace = params.trace
    else:
        if args.b1 is None or args.b2 is None:
            raise LsfError("set build needs --b1 and --b2")
        index = build_similarity_index(points, args.b1, args.b2, args.seed, strict=args.strict,
                                       entry_cap=args.cost_guard)
        trace = [f"weight {g.weight}: " + "; ".join(g.params.trace) for g in index.groups]
    save_index(index, args.out)
    for line in trace:
        print(line)
    print(f"{args.out}: {index.n} points, {index.entries} bucket entries")
    return EXIT_OK


def _stored_points(index):
    if isinstance(index, HammingIndex):
        d = index.params.d
        return [BitVector(int.from_bytes(row.tobytes(), "little"), d) for row in index.packed]
    return index.points


def cmd_query(args) -> int:
    index = load_index(args.index)
    _, _, queries = read_points(args.queries)
    planted = {}
    if args.truth:
        _, _, _, lines = parse_truth(Path(args.truth).read_text())
        planted = {t.a: t.b for t in lines if t.role == "query"}
    points = _stored_points(index)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["query", "answer", "value", "planted", "oracle_near", "correct"])
    wrong = 0
    for qi, q in enumerate(queries):
        if isinstance(index, HammingIndex):
            p = index.params
            ans = query_hamming(index, q)
            value = None if ans is None else hamming_distance(points[ans], q)
            valid = ans is not None and value <= p.c * p.r
            near = linear_scan(points, q, p.r) if args.truth else []
        else:
            ans = query_similarity(index, q)
            value = None if ans is None else braun_blanquet(points[ans], q)
            valid = ans is not None and value > Fraction(index.b2).limit_denominator(10**9)
            near = linear_scan(points, q, index.b1, metric="braun_blanquet") if args.truth else []
        # a near point obliges an answer; without one, any answer must still pass the threshold
        correct = valid if (near or ans is not None) else True
        wrong += not correct
        w.writerow([qi, "" if ans is None else ans, "" if value is None else value,
                    planted.get(qi, ""), len(near), "yes" if correct else "no"])
    _emit(buf.getvalue(), args.out)
    return EXIT_VERIFY if wrong else EXIT_OK


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t]


def cmd_bench(args) -> int:
    ns = _ints(args.ns)
    if args.kind == "hamming":
        recs = bench_hamming(ns, args.d, int(args.r), args.c, queries=args.queries, seed=args.seed,
                             mode=args.mode, reduction=args.reduction, strict=args.strict)
    else:
        recs = bench_sets(ns, args.d, args.w, args.b1, args.b2, queries=args.queries, seed=args.seed,
                          strict=args.strict)
    _emit(format_bench_csv(recs), args.out)
    if len(recs) > 1:
        print(f"least-squares candidate exponent: {fit_exponent(recs):.3f}", file=sys.stderr)
    return EXIT_OK if all(r.recall == 1.0 for r in recs) else EXIT_VERIFY


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    rows = [row for name in names for row in run_suite(name, args.max, args.seed)]
    _emit(format_rows(rows), args.out)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--mode", choices=["theorem", "corollary"], default="theorem")
    common.add_argument("--reduction", choices=["xor", "partition"], default="partition")
    common.add_argument("--cost-guard", type=int, default=ENTRY_CAP, help="maximum planned bucket entries")
    common.add_argument("--strict", action="store_true", help="use the displayed formulas without the cost model")

    parser = argparse.ArgumentParser(prog="lvlsf", description="Las Vegas locality sensitive filters")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="synthetic dataset with planted neighbors")
    g.add_argument("kind", choices=["hamming", "sets", "l1"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--r", type=float)
    g.add_argument("--w", type=int)
    g.add_argument("--b1", type=float)
    g.add_argument("--planted", type=int, help="planted pairs among the points (default n/10)")
    g.add_argument("--queries", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("build", parents=[common], help="build and save an index")
    b.add_argument("data")
    b.add_argument("--r", type=float)
    b.add_argument("--c", type=float)
    b.add_argument("--b1", type=float)
    b.add_argument("--b2", type=float)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", parents=[common], help="answer queries from a saved index")
    q.add_argument("index")
    q.add_argument("queries")
    q.add_argument("--truth", help="truth sidecar; enables the linear-scan correctness check")
    q.add_argument("--out")
    q.set_defaults(func=cmd_query)

    be = sub.add_parser("bench", parents=[common], help="scaling benchmark on planted data")
    be.add_argument("kind", choices=["hamming", "sets"])
    be.add_argument("--ns", default="1024,2048,4096")
    be.add_argument("--d", type=int, required=True)
    be.add_argument("--r", type=float)
    be.add_argument("--c", type=float, default=2.0)
    be.add_argument("--w", type=int)
    be.add_argument("--b1", type=float)
    be.add_argument("--b2", type=float)
    be.add_argument("--queries", type=int, default=200)
    be.add_argument("--out")
    be.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", parents=[common], help="run verification suites, CSV rows out")
    v.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    v.add_argument("--max", type=int, help="suite size limit")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ConstructionError, CostGuardError) as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return EXIT_BUILD
    except (LsfError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
