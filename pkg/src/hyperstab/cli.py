"""Command-line interface: classify, simulate, audit, parseval, corpus.

Exit codes are part of the contract:

  0  success
  2  parse/schema error (bad coefficients, malformed files, missing columns)
  3  improper transfer function
  4  simulation diverged (artifacts are still written)
  5  Parseval tolerance breach
  6  corpus mismatches

``--tf`` strings use MATLAB-style descending powers ("1;1,0" is 1/s), while
all JSON files carry ascending-power coefficient arrays. The environment
variable ``HYPERSTAB_GRID_POINTS`` overrides the default sweep density.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .corpus import corpus_check, load_corpus
from .errors import (
    GridMismatch,
    HyperstabError,
    ImproperTransferFunction,
    SchemaError,
    ZeroDenominator,
)
from .harness import run_closed_loop, scenario_from_json_dict, write_run_artifacts
from .ratfun import RationalFunction
from .realness import FrequencyGrid, classify_pr
from .signals import (
    PARSEVAL_TOL,
    classify_taxonomy,
    frequency_energy,
    inner_product,
    power_balance_residual,
    read_trace_csv,
    signals_from_trace,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_IMPROPER = 3
EXIT_DIVERGED = 4
EXIT_PARSEVAL = 5
EXIT_MISMATCH = 6


def _parse_tf(text: str) -> RationalFunction:
    """Parse 'num;den' with comma-separated descending-power coefficients."""
    parts = text.split(";")
    if len(parts) != 2:
        raise SchemaError("expected exactly one ';' between numerator and denominator")
    try:
        num = [float(tok) for tok in parts[0].split(",") if tok.strip()]
        den = [float(tok) for tok in parts[1].split(",") if tok.strip()]
    except ValueError as exc:
        raise SchemaError(f"bad coefficient: {exc}") from None
    if not num or not den:
        raise SchemaError("empty coefficient list")
    return RationalFunction(num[::-1], den[::-1])


def _grid_from_args(args) -> FrequencyGrid:
    points = args.points
    env = os.environ.get("HYPERSTAB_GRID_POINTS")
    try:
        if points is None:
            points = int(env) if env else 4096
        return FrequencyGrid(
            omega_min=args.grid_min, omega_max=args.grid_max, points=points
        )
    except ValueError as exc:
        raise SchemaError(f"bad sweep grid: {exc}") from None


def _emit(data: dict, path: str | None) -> None:
    text = json.dumps(data, indent=2) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_classify(args) -> int:
    try:
        g = _parse_tf(args.tf)
    except (SchemaError, ZeroDenominator, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ImproperTransferFunction as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IMPROPER
    result = classify_pr(g, _grid_from_args(args))
    _emit(result.to_report(), args.json)
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        with open(args.scenario) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        print(f"error: scenario file not found: {args.scenario}", file=sys.stderr)
        return EXIT_PARSE
    except json.JSONDecodeError as exc:
        print(f"error: scenario is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        scenario = scenario_from_json_dict(data)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ImproperTransferFunction as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IMPROPER
    run = run_closed_loop(scenario)
    traces_path, report_path = write_run_artifacts(run, args.out_dir)
    print(f"wrote {traces_path} and {report_path}")
    print(f"verdict: {run.verdict.value}")
    return EXIT_DIVERGED if run.diverged_at is not None else EXIT_OK


def _load_trace_signals(path):
    try:
        columns = read_trace_csv(path)
        return signals_from_trace(columns)
    except FileNotFoundError:
        raise SchemaError(f"trace file not found: {path}") from None
    except (GridMismatch, ValueError) as exc:
        raise SchemaError(f"malformed trace file: {exc}") from None


def cmd_audit(args) -> int:
    try:
        signals = _load_trace_signals(args.traces)
        if "u" not in signals or "y" not in signals:
            raise SchemaError("trace file needs u and y columns")
        S = D = None
        if args.with_storage:
            if "S" not in signals or "D" not in signals:
                raise SchemaError("--with-storage needs S and D columns")
            S, D = signals["S"], signals["D"]
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    verdict = classify_taxonomy(signals["u"], signals["y"], S, D)
    residual_max = None
    if S is not None and D is not None:
        residual = power_balance_residual(signals["u"], signals["y"], S, D)
        residual_max = float(np.max(np.abs(residual.values)))
    _emit(verdict.to_report(residual_max=residual_max), None)
    return EXIT_OK


def cmd_parseval(args) -> int:
    try:
        signals = _load_trace_signals(args.traces)
        if "u" not in signals or "y" not in signals:
            raise SchemaError("trace file needs u and y columns")
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    u, y = signals["u"], signals["y"]
    time_energy = inner_product(u, y)
    freq_energy = frequency_energy(u, y)
    rel_error = abs(time_energy - freq_energy) / (1.0 + abs(time_energy))
    _emit(
        {
            "time_energy": time_energy,
            "freq_energy": freq_energy,
            "rel_error": rel_error,
        },
        None,
    )
    return EXIT_OK if rel_error <= PARSEVAL_TOL else EXIT_PARSEVAL


def cmd_corpus(args) -> int:
    try:
        entries = load_corpus(args.file)
    except FileNotFoundError:
        print(f"error: corpus file not found: {args.file}", file=sys.stderr)
        return EXIT_PARSE
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    report = corpus_check(entries)
    bad_ids = {m.entry_id for m in report.mismatches}
    print(f"{'entry':<16} {'expected':<8} status")
    for entry in entries:
        status = "MISMATCH" if entry.id in bad_ids else "ok"
        print(f"{entry.id:<16} {entry.expected_grade.value:<8} {status}")
    for m in report.mismatches:
        print(
            f"  {m.entry_id}: {m.field} expected {m.expected!r}, got {m.actual!r}"
        )
    print(f"{report.checked} entries, {len(report.mismatches)} mismatches")
    return EXIT_OK if report.ok else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperstab",
        description="Positive-realness grading, energy audits and "
        "closed-loop hyperstability checks for scalar LTI systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="grade a transfer function")
    p.add_argument("--tf", required=True,
                   help="'num;den', comma-separated descending coefficients")
    p.add_argument("--grid-min", type=float, default=1e-4)
    p.add_argument("--grid-max", type=float, default=1e6)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--json", default=None, help="write the report here instead of stdout")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("simulate", help="run a closed-loop scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("audit", help="energy-taxonomy audit of a trace file")
    p.add_argument("--traces", required=True)
    p.add_argument("--with-storage", action="store_true",
                   help="use S and D columns for the storage-based labels")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("parseval", help="time- vs frequency-domain energy check")
    p.add_argument("--traces", required=True)
    p.set_defaults(func=cmd_parseval)

    p = sub.add_parser("corpus", help="regression-check a corpus file")
    p.add_argument("--file", required=True)
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HyperstabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
