"""Command-line interface.

Subcommands:
  analyze    run the static race analysis on a source file
  interpret  exhaustively interpret a program for fixed parameters
  gen-count  emit a counting nest for a polynomial
  gen-race   emit race-test programs for a pair of polynomials

Exit codes: 0 race-free / success, 1 parse or validation error,
2 potential races, 3 undetermined, 4 interpreter state limit reached.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .generators import counting_nest, parse_poly, race_test, race_tests_all_orthants
from .interp import explore
from .parser import ParseError, parse_file, validate_clock_rules
from .races import DEFAULT_BOUND, analyze
from .report import build_report
from .syntax import print_program

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_POTENTIAL_RACES = 2
EXIT_UNKNOWN = 3
EXIT_INCOMPLETE = 4


def _load(path: str):
    try:
        program = parse_file(path)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return None, None
    except ParseError as e:
        print(f"{path}:{e.line}:{e.col}: error: {e.message}", file=sys.stderr)
        return None, None
    diagnostics = validate_clock_rules(program)
    return program, diagnostics


def _cmd_analyze(args) -> int:
    program, diagnostics = _load(args.file)
    if program is None:
        return EXIT_INPUT_ERROR
    if diagnostics:
        for d in diagnostics:
            print(f"{args.file}: error: {d}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    t0 = time.monotonic()
    analysis = analyze(program, solver_cmd=args.solver_cmd, bound=args.bound)
    timings = {"analysis": time.monotonic() - t0}
    report = build_report(args.file, program, analysis, [], timings)
    if args.emit_smt:
        outdir = Path(args.emit_smt)
        outdir.mkdir(parents=True, exist_ok=True)
        for k, script in enumerate(analysis.smt_scripts):
            (outdir / f"race_{k}.smt2").write_text(script)
    if args.json:
        Path(args.json).write_text(report.to_json())
    print(report.to_text(), end="")
    if analysis.verdict == "PotentialRaces":
        return EXIT_POTENTIAL_RACES
    if analysis.verdict == "Unknown":
        return EXIT_UNKNOWN
    return EXIT_OK


def _parse_params(pairs, program) -> dict[str, int]:
    out = {}
    for item in pairs or ():
        name, _, value = item.partition("=")
        if not _ or not name or not value.lstrip("-").isdigit():
            raise ValueError(f"bad --param {item!r}, expected NAME=INT")
        out[name] = int(value)
    for name, _ in program.params:
        if name not in out:
            raise ValueError(f"missing --param {name}=...")
    return out


def _cmd_interpret(args) -> int:
    program, diagnostics = _load(args.file)
    if program is None:
        return EXIT_INPUT_ERROR
    if diagnostics:
        for d in diagnostics:
            print(f"{args.file}: error: {d}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    try:
        params = _parse_params(args.param, program)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    res = explore(program, params, max_states=args.max_states)
    print(f"instances: {len(res.instances)}")
    print(f"states explored: {res.state_count}")
    print(f"traces: {res.trace_count}")
    print(f"terminated: {res.terminated}")
    print(f"dynamic races: {len(res.races)}")
    for u, v in res.races:
        lu = program.stmt_label(u[1])
        lv = program.stmt_label(v[1])
        eu = ",".join(f"{k}={x}" for k, x in u[2])
        ev = ",".join(f"{k}={x}" for k, x in v[2])
        print(f"  {lu}<{eu}> vs {lv}<{ev}>")
    if res.incomplete:
        print(f"incomplete: state limit {args.max_states} reached")
        return EXIT_INCOMPLETE
    return EXIT_OK


def _cmd_gen_count(args) -> int:
    try:
        spec = parse_poly(args.poly)
        program = counting_nest(spec)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    print(print_program(program), end="")
    return EXIT_OK


def _cmd_gen_race(args) -> int:
    try:
        p1 = parse_poly(args.p1)
        p2 = parse_poly(args.p2)
        if args.all_orthants:
            tests = race_tests_all_orthants(p1, p2)
        else:
            tests = [race_test(p1, p2)]
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    for i, t in enumerate(tests):
        signs = " ".join(f"{v}{'+' if s > 0 else '-'}" for v, s in t.signs)
        print(f"// orthant {i}: {signs or '(none)'}")
        print(print_program(t.program), end="")
        if i + 1 < len(tests):
            print()
    return EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="clockrace",
        description="Static data-race analysis for polyhedral clocked programs.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyze a source file for races")
    a.add_argument("file")
    a.add_argument("--json", metavar="PATH", help="write a JSON report")
    a.add_argument("--emit-smt", metavar="DIR", help="write race_<k>.smt2 files")
    a.add_argument("--solver-cmd", metavar="CMD",
                   help="external SMT solver command (reads SMT-LIB on stdin)")
    a.add_argument("--bound", type=int, default=DEFAULT_BOUND,
                   help="parameter bound for the search fallback (default %(default)s)")
    a.set_defaults(fn=_cmd_analyze)

    it = sub.add_parser("interpret", help="explore all schedules for fixed parameters")
    it.add_argument("file")
    it.add_argument("--param", action="append", metavar="NAME=INT")
    it.add_argument("--max-states", type=int, default=1_000_000)
    it.set_defaults(fn=_cmd_interpret)

    gc = sub.add_parser("gen-count", help="generate a counting nest")
    gc.add_argument("--poly", required=True, metavar="EXPR",
                    help='polynomial with nonnegative coefficients, e.g. "x^2+x*y+y^2"')
    gc.set_defaults(fn=_cmd_gen_count)

    gr = sub.add_parser("gen-race", help="generate polynomial race tests")
    gr.add_argument("--p1", required=True, metavar="EXPR")
    gr.add_argument("--p2", required=True, metavar="EXPR")
    gr.add_argument("--all-orthants", action="store_true",
                    help="emit one program per sign pattern of the variables")
    gr.set_defaults(fn=_cmd_gen_race)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
