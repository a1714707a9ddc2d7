"""Command-line front end speaking the PB-competition output protocol.

stdout carries ``c`` comments, an ``o <objective>`` line per global
improvement, then ``s SATISFIABLE`` with a ``v`` line (``x3 -x4`` style) or
``s UNKNOWN``. Exit code 10 means a solution was printed, 0 means none was
found, 1 means an error. Set PBOPOOL_LOG_LEVEL (e.g. DEBUG) for stderr logs.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .formula import CoefficientOverflow, OpbSyntaxError, PboInstance, emit_opb, read_opb
from .harness import brute_force_solve, score_report
from .pool import Solution
from .portfolio import PortfolioConfig, run_portfolio
from .presolve import assume_and_propagate, simplified_in_original_space
from .search import SearchConfig

EXIT_SAT = 10
EXIT_UNKNOWN = 0
EXIT_ERROR = 1


def format_v_line(inst: PboInstance, assignment) -> str:
    names = inst.variable_names
    return "v " + " ".join(n if val else "-" + n for n, val in zip(names, assignment))


def parse_v_line(inst: PboInstance, line: str) -> list[int]:
    index = inst.name_index()
    out = [0] * inst.num_vars
    for tok in line.split()[1:]:
        neg = tok.startswith("-") or tok.startswith("~")
        out[index[tok.lstrip("-~")]] = 0 if neg else 1
    return out


def _parse_literal(inst: PboInstance, text: str) -> tuple[int, int]:
    neg = text.startswith("-") or text.startswith("~")
    name = text.lstrip("-~")
    index = inst.name_index()
    if name not in index:
        raise ValueError(f"unknown variable {name!r}")
    return index[name], 0 if neg else 1


def build_parser() -> argparse.ArgumentParser:
    d = PortfolioConfig()
    s = SearchConfig()
    ap = argparse.ArgumentParser(
        prog="pbopool", description="Parallel local search for pseudo-Boolean optimization."
    )
    ap.add_argument("instance", nargs="?", help="OPB file")
    ap.add_argument("--threads", type=int, default=d.num_workers)
    ap.add_argument("--cutoff", type=float, default=d.cutoff_seconds, help="seconds")
    ap.add_argument("--seed", type=int, default=d.seed)
    ap.add_argument("--pool-size", type=int, default=d.pool_size)
    ap.add_argument("--p-star", type=float, default=d.p_star)
    ap.add_argument("--beta", type=float, default=d.beta)
    ap.add_argument("--epsilon", type=float, default=d.epsilon)
    ap.add_argument("--K", type=int, default=s.K, dest="K")
    ap.add_argument("--R", type=int, default=s.R, dest="R")
    ap.add_argument("--inc", type=float, default=s.inc)
    ap.add_argument("--max-steps", type=int, default=None, help="per-worker step budget")
    ap.add_argument("--oracle", action="store_true", help="exhaustive search (<= 24 vars)")
    ap.add_argument(
        "--dump-presolve",
        metavar="LIT",
        help="print the instance simplified under LIT (e.g. x3 or -x3) and exit",
    )
    ap.add_argument(
        "--score-report",
        nargs="+",
        metavar="CSV",
        help="aggregate result CSVs (instance,solver,cost,status) into sc*/#win",
    )
    return ap


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("PBOPOOL_LOG_LEVEL", "WARNING").upper(),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else 0
    out = sys.stdout

    if args.score_report:
        try:
            report = score_report(args.score_report)
        except (OSError, KeyError, ValueError) as exc:
            print(f"pbopool: cannot build score report: {exc}", file=sys.stderr)
            return EXIT_ERROR
        out.write(report.render())
        return 0

    if not args.instance:
        ap.print_usage(sys.stderr)
        print("pbopool: an instance file is required", file=sys.stderr)
        return EXIT_ERROR
    try:
        inst = read_opb(args.instance)
    except (OSError, OpbSyntaxError, CoefficientOverflow) as exc:
        print(f"pbopool: {args.instance}: {exc}", file=sys.stderr)
        return EXIT_ERROR

    if args.dump_presolve:
        try:
            lit = _parse_literal(inst, args.dump_presolve)
        except ValueError as exc:
            print(f"pbopool: {exc}", file=sys.stderr)
            return EXIT_ERROR
        r = assume_and_propagate(inst, lit)
        if r.conflict:
            out.write("c assumption leads to a conflict\n")
            return 0
        fixed = " ".join(
            (inst.variable_names[v] if val else "-" + inst.variable_names[v])
            for v, val in sorted(r.fixed.items())
        )
        out.write(f"* fixed: {fixed}\n* objective offset: {r.objective_offset}\n")
        out.write(emit_opb(simplified_in_original_space(r, inst)))
        return 0

    out.write(f"c {inst.num_vars} variables, {inst.num_constraints} constraints\n")
    if args.oracle:
        try:
            sol = brute_force_solve(inst)
        except ValueError as exc:
            print(f"pbopool: {exc}", file=sys.stderr)
            return EXIT_ERROR
        if sol is None:
            out.write("c oracle: no feasible assignment exists\n")
        return _finish(inst, sol, out, announce=True)

    try:
        cfg = PortfolioConfig(
            num_workers=args.threads,
            cutoff_seconds=args.cutoff,
            seed=args.seed,
            search=SearchConfig(K=args.K, R=args.R, inc=args.inc, seed=args.seed),
            pool_size=args.pool_size,
            p_star=args.p_star,
            beta=args.beta,
            epsilon=args.epsilon,
            max_steps=args.max_steps,
        )
    except ValueError as exc:
        print(f"pbopool: {exc}", file=sys.stderr)
        return EXIT_ERROR

    def improved(sol: Solution):
        out.write(f"o {sol.objective}\n")
        out.flush()

    result = run_portfolio(inst, cfg, on_improve=improved)
    for d in result.diagnostics:
        out.write(f"c {d}\n")
    steps = sum(w.steps for w in result.workers)
    out.write(f"c {steps} steps in {result.elapsed:.2f}s\n")
    return _finish(inst, result.best, out, announce=False)


def _finish(inst: PboInstance, sol: Solution | None, out, announce: bool) -> int:
    if sol is None:
        out.write("s UNKNOWN\n")
        return EXIT_UNKNOWN
    # independent re-check before anything is claimed
    if not inst.is_feasible(sol.assignment):
        print("pbopool: internal error, final solution is infeasible", file=sys.stderr)
        return EXIT_ERROR
    if announce:
        out.write(f"o {inst.objective_value(sol.assignment)}\n")
    out.write("s SATISFIABLE\n")
    out.write(format_v_line(inst, sol.assignment) + "\n")
    out.flush()
    return EXIT_SAT


if __name__ == "__main__":
    sys.exit(main())
