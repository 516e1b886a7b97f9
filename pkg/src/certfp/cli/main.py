"""``certfp`` command line: certify, solve, stability and inexact runs.

Exit codes: 0 success, 1 unreadable or invalid document, 2 certification
failure, 3 iteration budget exhausted.  Every command writes a JSON report
(and solve/inexact a CSV trace) to ``--out``, ``$CERTFP_REPORT_DIR`` or the
current directory, and prints a short human-readable summary.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from pathlib import Path
from typing import Optional

import numpy as np

from ..engine import (
    CSV_COLUMNS,
    IterationTrace,
    NoiseBudget,
    StopRule,
    error_floor,
    inexact_run,
    picard_run,
)
from ..funcspace import GridMismatch, sup_distance
from ..gauge import DomainError, NotCertifiable
from ..operators.maps import AffineScalarOperator
from ..operators.packet import ChecklistFailure, DataPacket, build_packet
from ..stability import StructuralError, two_sided_stability
from .problem import (
    ProblemDocument,
    ProblemError,
    build_budget,
    build_operator,
    build_stop,
    build_x0,
    load_problem,
)

__all__ = ["main", "EXIT_OK", "EXIT_PARSE", "EXIT_CERT", "EXIT_BUDGET", "REPORT_DIR_ENV"]

EXIT_OK, EXIT_PARSE, EXIT_CERT, EXIT_BUDGET = 0, 1, 2, 3
REPORT_DIR_ENV = "CERTFP_REPORT_DIR"
REFERENCE_EPS = 1e-13
STEADY_FRACTION = 0.25


class _Exit(Exception):
    def __init__(self, code: int, report: dict):
        self.code = code
        self.report = report


# ---------------------------------------------------------------- helpers

def _report_dir(out: Optional[str]) -> Path:
    d = Path(out or os.environ.get(REPORT_DIR_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load(path: str, command: str) -> ProblemDocument:
    try:
        doc = load_problem(path)
    except ProblemError as exc:
        raise _Exit(EXIT_PARSE, {"command": command, "problem": str(path),
                                 "error": {"kind": "parse", "message": exc.message,
                                           "line": exc.line, "column": exc.column,
                                           "field": exc.field}})
    return doc


def _operator(doc: ProblemDocument, path: str, command: str):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            T = build_operator(doc)
            x0 = build_x0(doc, T)
        except ProblemError as exc:
            raise _Exit(EXIT_PARSE, {"command": command, "problem": str(path),
                                     "error": {"kind": "parse", "message": exc.message,
                                               "field": exc.field}})
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return T, x0


def _certify(doc: ProblemDocument, path: str, command: str) -> DataPacket:
    T, x0 = _operator(doc, path, command)
    try:
        return build_packet(T, x0, seed=doc.seed)
    except ChecklistFailure as exc:
        raise _Exit(EXIT_CERT, {
            "command": command, "problem": str(path),
            "checklist": [c.to_dict() for c in exc.checklist],
            "error": {"kind": "certification", "item": exc.item.item, "message": str(exc)},
        })
    except (DomainError, NotCertifiable) as exc:
        raise _Exit(EXIT_CERT, {"command": command, "problem": str(path),
                                "error": {"kind": "certification", "message": str(exc)}})


def _packet_block(packet: DataPacket) -> dict:
    return {
        "checklist": [c.to_dict() for c in packet.checklist],
        "constants": dict(packet.constants),
    }


def _trace_block(trace: IterationTrace, csv_path: Optional[Path]) -> dict:
    return {
        "steps": trace.steps,
        "stop_reason": trace.stop_reason,
        "complete": trace.complete,
        "certified_error": trace.certified_error,
        "csv": None if csv_path is None else str(csv_path),
    }


def write_trace_csv(trace: IterationTrace, path: Path) -> None:
    # repr gives the shortest round-tripping decimal, so reruns are byte-identical
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in trace.rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row.csv_row()])


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def _emit(report: dict, path: Path, as_json: bool) -> None:
    text = json.dumps(_json_safe(report), indent=2, sort_keys=True)
    path.write_text(text + "\n")
    if as_json:
        print(text)
        return
    print(f"{report['command']}: exit {report['exit_code']}")
    err = report.get("error")
    if err:
        loc = ""
        if err.get("line") is not None:
            loc = f" (line {err['line']}, column {err['column']})"
        elif err.get("field"):
            loc = f" (at {err['field']})"
        print(f"  error{loc}: {err['message']}")
    for item in report.get("checklist", []):
        print(f"  {item['item']} {item['name']:<15} {item['verdict']:<4}  {item['note']}")
    consts = report.get("constants")
    if consts:
        print("  " + ", ".join(f"{k}={v:.12g}" for k, v in consts.items() if v is not None))
    trace = report.get("trace")
    if trace:
        print(f"  steps={trace['steps']} stop={trace['stop_reason']} "
              f"certified_error={trace['certified_error']:.6g}")
    for block in ("stability", "inexact"):
        if block in report:
            print("  " + ", ".join(f"{k}={v}" for k, v in report[block].items()))
    print(f"  report: {path}")


def _stem(path: str) -> str:
    return Path(path).stem


# ---------------------------------------------------------------- commands

def cmd_certify(args) -> tuple[int, dict]:
    doc = _load(args.problem, "certify")
    packet = _certify(doc, args.problem, "certify")
    return EXIT_OK, {"command": "certify", "problem": args.problem, "seed": doc.seed,
                     **_packet_block(packet)}


def cmd_solve(args) -> tuple[int, dict]:
    doc = _load(args.problem, "solve")
    packet = _certify(doc, args.problem, "solve")
    rule, max_iter = build_stop(doc)
    eps = args.eps if args.eps is not None else rule.eps
    kind = args.rule or rule.kind.value
    rule = StopRule(kind, eps=eps)
    max_iter = args.max_iter or max_iter
    budget = build_budget(doc)
    try:
        if budget is None:
            trace = picard_run(packet, rule, max_iter, keep_iterates=False)
        else:
            trace = inexact_run(packet, budget, rule, max_iter, keep_iterates=False)
    except (NotCertifiable, ValueError) as exc:
        raise _Exit(EXIT_CERT, {"command": "solve", "problem": args.problem,
                                **_packet_block(packet),
                                "error": {"kind": "certification", "message": str(exc)}})
    csv_path = _report_dir(args.out) / f"{_stem(args.problem)}.trace.csv"
    write_trace_csv(trace, csv_path)
    ok = trace.complete and trace.certified_error <= eps
    report = {"command": "solve", "problem": args.problem, "seed": doc.seed,
              "rule": kind, "eps": eps, "max_iter": max_iter,
              **_packet_block(packet), "trace": _trace_block(trace, csv_path)}
    if not ok:
        report["error"] = {"kind": "budget",
                           "message": f"certificate {trace.certified_error:.6g} > eps after "
                                      f"{trace.steps} steps"}
    return (EXIT_OK if ok else EXIT_BUDGET), report


def cmd_stability(args) -> tuple[int, dict]:
    doc_a = _load(args.problem_a, "stability")
    doc_b = _load(args.problem_b, "stability")
    pa = _certify(doc_a, args.problem_a, "stability")
    pb = _certify(doc_b, args.problem_b, "stability")
    base = {"command": "stability", "problem": [args.problem_a, args.problem_b],
            "seed": args.seed}
    try:
        rep = two_sided_stability(pa, pb, samples=args.samples, seed=args.seed)
    except (StructuralError, GridMismatch, DomainError, NotCertifiable) as exc:
        raise _Exit(EXIT_CERT, {**base, "error": {"kind": "certification", "message": str(exc)}})
    except RuntimeError as exc:
        raise _Exit(EXIT_BUDGET, {**base, "error": {"kind": "budget", "message": str(exc)}})
    return EXIT_OK, {**base, "constants": {"kappa": rep.kappa, "R": max(pa.radius, pb.radius)},
                     "stability": rep.to_dict()}


def _reference(packet: DataPacket):
    T = packet.operator
    if isinstance(T, AffineScalarOperator):
        return packet.x0.with_values([T.offset / (1.0 - T.slope)]), "closed_form"
    trace = picard_run(packet, StopRule.residual(REFERENCE_EPS * max(1.0, packet.radius)),
                       max_iter=100_000, keep_iterates=False)
    if not trace.complete:
        return None, None
    return trace.iterate, "discrete_fixed_point"


def cmd_inexact(args) -> tuple[int, dict]:
    doc = _load(args.problem, "inexact")
    packet = _certify(doc, args.problem, "inexact")
    seed = doc.seed if args.seed is None else args.seed
    if args.quadrature:
        budget = NoiseBudget.quadrature()
    elif args.eta_seq is not None:
        budget = NoiseBudget.sequence(args.eta_seq, seed=seed)
    else:
        budget = NoiseBudget.constant(args.eta_bar, seed=seed)
    try:
        trace = inexact_run(packet, budget, StopRule.fixed(args.steps), max_iter=args.steps)
    except ValueError as exc:
        raise _Exit(EXIT_CERT, {"command": "inexact", "problem": args.problem,
                                "error": {"kind": "certification", "message": str(exc)}})
    csv_path = _report_dir(args.out) / f"{_stem(args.problem)}.inexact.csv"
    write_trace_csv(trace, csv_path)

    etas = [row.eta for row in trace.rows]
    eta_bar = max(etas) if etas else 0.0
    block = {"budget": budget.kind if not args.quadrature else "quadrature",
             "eta_bar": eta_bar, "error_floor": error_floor(packet.kappa, eta_bar)}
    ref, ref_kind = _reference(packet)
    if ref is not None:
        tail = trace.iterates[-max(1, int(round(STEADY_FRACTION * len(trace.iterates)))):]
        block["reference"] = ref_kind
        block["steady_error"] = max(sup_distance(x, ref) for x in tail)
        block["steady_window"] = len(tail)
        block["within_floor"] = block["steady_error"] <= block["error_floor"] * (1 + 1e-12) + 1e-15
    report = {"command": "inexact", "problem": args.problem, "seed": seed,
              **_packet_block(packet), "trace": _trace_block(trace, csv_path), "inexact": block}
    return EXIT_OK, report


# ---------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    """Usage errors count as parse failures (exit 1), not certification ones."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _eta_list(text: str) -> list:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma separated numbers")
    if not vals or any(not v >= 0 for v in vals):
        raise argparse.ArgumentTypeError("budgets must be nonnegative numbers")
    return vals


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="certfp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--out", help=f"report directory (default ${REPORT_DIR_ENV} or .)")
        p.add_argument("--json", action="store_true", help="print the JSON report to stdout")

    p = sub.add_parser("certify", help="run the checklist and print the constants")
    p.add_argument("problem")
    common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("solve", help="Picard iteration to a certified tolerance")
    p.add_argument("problem")
    p.add_argument("--eps", type=_positive_float)
    p.add_argument("--rule", choices=("apriori", "gauge", "residual"))
    p.add_argument("--max-iter", type=_positive_int)
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("stability", help="compare the fixed points of two problems")
    p.add_argument("problem_a")
    p.add_argument("problem_b")
    p.add_argument("--samples", type=_positive_int, default=32)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("inexact", help="iteration with evaluation errors")
    p.add_argument("problem")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--eta-bar", type=_nonneg_float)
    g.add_argument("--eta-seq", type=_eta_list, help="comma separated per-step budgets")
    g.add_argument("--quadrature", action="store_true",
                   help="use the per-step Richardson estimate as the budget")
    p.add_argument("--steps", type=_positive_int, default=200)
    p.add_argument("--seed", type=int)
    common(p)
    p.set_defaults(func=cmd_inexact)
    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code, report = args.func(args)
    except _Exit as exc:
        code, report = exc.code, exc.report
    report["exit_code"] = code
    stem = _stem(args.problem if hasattr(args, "problem") else args.problem_a)
    _emit(report, _report_dir(args.out) / f"{stem}.{args.command}.json", args.json)
    return code


if __name__ == "__main__":
    sys.exit(main())
