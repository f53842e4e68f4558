"""Command-line interface.

Exit codes: 0 found / yes / pass, 1 not found / no / fail, 2 usage error,
3 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

from .documents import DocumentError, check_document, dumps, matrix_document, scalar_document
from .errors import (
    BalfactError,
    BudgetExceeded,
    DecisionNo,
    FieldSpecError,
    NotFound,
    SearchExhausted,
    UnsupportedField,
)
from .fields import make_field, prime_power
from .matrices import format_matrix, parse_matrix
from .scalar import (
    balanced_factor,
    decide_balanced,
    decide_nonpower,
    even_k_factor,
    four_factor,
    odd_k_factor,
    zero_rule,
)
from .search import commuting_factor, decide_matrix, find_factorization, reproduce_fact
from . import tables

EXIT_OK, EXIT_NO, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _rational_factor(ctx, a, k, nonpower):
    if a.is_zero() and k >= 3:
        return zero_rule(ctx, k)
    if k == 4 and not a.is_zero():
        return four_factor(ctx, a)
    if k >= 5 and not a.is_zero():
        return odd_k_factor(ctx, a, k) if k % 2 else even_k_factor(ctx, a, k)
    raise NotFound(f"no construction over Q for k={k} and target {a}", proven=False)


def cmd_factor(args) -> int:
    ctx = make_field(args.field)
    if args.k < 2:
        raise UsageError("--k must be at least 2")
    if args.matrix is not None:
        if ctx.kind != "galois":
            raise UsageError("matrix factorisation needs a finite field")
        A = parse_matrix(ctx, args.matrix, args.n)
        if args.commuting:
            cert = commuting_factor(A, args.k)
        else:
            cert = find_factorization(A, args.k)
        if args.json:
            sys.stdout.write(dumps(matrix_document(cert)))
        else:
            print(f"field {ctx.spec}, n={A.n}, k={cert.k}, target {format_matrix(A)}")
            print("factors: " + " | ".join(format_matrix(f) for f in cert.factors))
            print(f"provenance: {cert.provenance}; commuting: {'yes' if cert.commuting else 'no'}")
        return EXIT_OK
    if args.target is None:
        raise UsageError("give --target (scalar) or --matrix")
    a = ctx.parse(args.target)
    if ctx.kind == "rational":
        cert = _rational_factor(ctx, a, args.k, args.nonpower)
    else:
        cert = balanced_factor(ctx, a, args.k, require_nonpower=args.nonpower)
    if args.json:
        sys.stdout.write(dumps(scalar_document(cert)))
    else:
        print(f"field {ctx.spec}, k={cert.k}, target {cert.target}")
        print("factors: " + ", ".join(str(f) for f in cert.factors))
        print(f"provenance: {cert.provenance}; non-power: {'yes' if cert.nonpower else 'no'}")
    return EXIT_OK


def cmd_decide(args) -> int:
    if prime_power(args.q) is None:
        raise UsageError(f"{args.q} is not a prime power")
    if args.k < 2:
        raise UsageError("--k must be at least 2")
    if args.matrix:
        answer = decide_matrix(args.q, args.k)
    elif args.nonpower:
        answer = decide_nonpower(args.q, args.k)
    else:
        answer = decide_balanced(args.q, args.k)
    print("yes" if answer else "no")
    return EXIT_OK if answer else EXIT_NO


def cmd_verify_tables(args) -> int:
    cells = tables.scalar_sweep(args.max_q, args.max_k, args.max_k_small)
    if args.matrix:
        cells += tables.matrix_sweep(min(args.max_q, args.matrix_max_q), args.max_k, args.max_k_small)
    found = tables.discrepancies(cells)
    expected = tables.expected_within(tables.load_expected(args.expected), cells)
    unexpected, missing = tables.compare(found, expected)
    passed = not unexpected and not missing
    if args.json:
        report = {
            "cells": [asdict(c) for c in cells],
            "discrepancies": [r.to_dict() for r in found],
            "unexpected": [r.to_dict() for r in unexpected],
            "missing": [r.to_dict() for r in missing],
            "passed": passed,
        }
        sys.stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    else:
        for table in tables.TABLES:
            grid = tables.render_grid(cells, table)
            if grid:
                print(grid)
                print()
        print(f"discrepancies: {len(found)}")
        for r in found:
            print(f"  {r.table} q={r.q} k={r.k} witness={r.witness} "
                  f"criterion={'yes' if r.table_says else 'no'} oracle={'yes' if r.oracle_says else 'no'}")
        for label, recs in (("unexpected", unexpected), ("expected but not found", missing)):
            for r in recs:
                print(f"  {label}: {r.table} q={r.q} k={r.k} witness={r.witness}")
        print("PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_NO


def cmd_experiments(args) -> int:
    ids = range(1, 8) if args.fact == "all" else [int(args.fact)]
    reports = [reproduce_fact(i) for i in ids]
    if args.json:
        sys.stdout.write(json.dumps([asdict(r) for r in reports], sort_keys=True, indent=2) + "\n")
    else:
        for r in reports:
            print(f"fact {r.fact}: {'pass' if r.passed else 'FAIL'}  {r.summary}")
            exceptional = r.details.get("exceptional")
            if exceptional is not None:
                print("  exceptional: " + ("{" + ", ".join(exceptional) + "}" if exceptional else "none"))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_NO


def cmd_certify(args) -> int:
    try:
        with open(args.infile) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"malformed JSON: {exc}") from exc
    problem = check_document(doc)
    if problem:
        print(f"invalid: {problem}")
        return EXIT_NO
    print("valid")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="balfact", description=(
        "Balanced factorisations (products whose factors sum to zero) in finite fields, "
        "the rationals and matrix rings."))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("factor", help="construct a balanced factorisation")
    p.add_argument("--field", required=True, help="Q, p, p^m or p^m:c0,...,1")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--target", help="scalar target, e.g. 3, (1 1) or 2/3")
    p.add_argument("--nonpower", action="store_true", help="require factors not all equal")
    p.add_argument("--n", type=int, help="matrix size")
    p.add_argument("--matrix", help='matrix target, rows separated by ";", e.g. "1,1;1,0"')
    p.add_argument("--commuting", action="store_true", help="require commuting factors")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_factor)

    p = sub.add_parser("decide", help="evaluate a decision criterion")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--nonpower", action="store_true")
    g.add_argument("--matrix", action="store_true")
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("verify-tables", help="compare the criteria with exhaustive search")
    p.add_argument("--max-q", type=int, required=True)
    p.add_argument("--max-k", type=int, required=True)
    p.add_argument("--max-k-small", type=int, default=None,
                   help="larger k bound used for q <= 5")
    p.add_argument("--matrix", action="store_true", help="also sweep 2x2 Jordan cells")
    p.add_argument("--matrix-max-q", type=int, default=9)
    p.add_argument("--expected", help="expected-discrepancy file (default: the packaged one)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify_tables)

    p = sub.add_parser("experiments", help="reproduce the matrix experiments")
    p.add_argument("--fact", default="all", choices=[str(i) for i in range(1, 8)] + ["all"])
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_experiments)

    p = sub.add_parser("certify", help="re-verify a certificate document")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_certify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (NotFound, DecisionNo, SearchExhausted) as exc:
        if isinstance(exc, NotFound) and isinstance(exc.__cause__, BudgetExceeded):
            print(f"budget exceeded: {exc}", file=sys.stderr)
            return EXIT_BUDGET
        print(f"not found: {exc}", file=sys.stderr)
        return EXIT_NO
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, FieldSpecError, DocumentError, UnsupportedField, ValueError,
            ZeroDivisionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BalfactError as exc:  # pragma: no cover
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
