"""Command-line driver.

    linset verify --program P.spl --invariant I.inv [options]

Exit codes: 0 linearizable, 1 failed, 2 inconclusive or infrastructure error.
Environment variables prefixed LINSET_ override the corresponding flag
defaults (e.g. LINSET_SOLVER_CMD, LINSET_TIMEOUT).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .driver import ProofReport, verify_program
from .engine import Config
from .invariants import InvError, parse_inv
from .lang import DesugarError, ParseError, desugar, parse


def _env(name: str, default=None):
    return os.environ.get(f"LINSET_{name}", default)


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="linset")
    sub = ap.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="prove linearizability of a program")
    v.add_argument("--program", required=True, help="path to the .spl program")
    v.add_argument("--invariant", required=True, help="path to the .inv file")
    v.add_argument("--solver-cmd", default=_env("SOLVER_CMD"), help="external SMT solver command")
    v.add_argument("--encoding", default=_env("ENCODING", "uflia"), choices=["uflia", "all"])
    v.add_argument("--timeout", type=float, default=float(_env("TIMEOUT", 10.0)), help="per-query seconds")
    v.add_argument("--footprint-radius", type=int, default=int(_env("FOOTPRINT_RADIUS", 2)))
    v.add_argument("--loop-bound", type=int, default=int(_env("LOOP_BOUND", 10)))
    v.add_argument("--max-iterations", type=int, default=int(_env("MAX_ITERATIONS", 8)))
    v.add_argument("--jobs", type=int, default=1, help="parallel procedure proofs")
    v.add_argument("--json", action="store_true", help="emit the report as JSON")
    v.add_argument("--dump-proof", metavar="DIR", help="write per-procedure proof outlines")
    v.add_argument("--dump-queries", metavar="DIR", help="dump failed solver queries")
    v.add_argument("--dump-interferences", action="store_true")
    return ap


def run_verify(ns) -> int:
    try:
        text = open(ns.program).read()
    except OSError as exc:
        print(f"error: cannot read program: {exc}", file=sys.stderr)
        return 2
    try:
        inv_text = open(ns.invariant).read()
    except OSError as exc:
        print(f"error: cannot read invariant: {exc}", file=sys.stderr)
        return 2
    try:
        program = desugar(parse(text, ns.program))
        invariant = parse_inv(inv_text, ns.invariant)
    except (ParseError, DesugarError, InvError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    config = Config(
        footprint_radius=ns.footprint_radius,
        loop_bound=ns.loop_bound,
        max_iterations=ns.max_iterations,
        query_timeout=ns.timeout,
        solver_cmd=ns.solver_cmd,
        encoding_mode=ns.encoding,
        dump_proof=ns.dump_proof,
        dump_queries=ns.dump_queries,
        jobs=ns.jobs,
    )
    report = verify_program(program, invariant, config)
    name = os.path.basename(ns.program)
    if ns.json:
        print(json.dumps(report.to_json(), indent=2))
    else:
        print(report.table_row(name))
        if report.verdict == "failed":
            loc = f" at {report.location}" if report.location else ""
            print(f"failure: {report.reason}{loc}")
        if ns.dump_interferences:
            for line in report.interferences:
                print("interference:", line)
    return {"linearizable": 0, "failed": 1, "inconclusive": 2}[report.verdict]


def main(argv=None) -> int:
    ns = build_arg_parser().parse_args(argv)
    if ns.command == "verify":
        return run_verify(ns)
    return 2


if __name__ == "__main__":
    sys.exit(main())
