"""Command-line front end: plan | run | baseline | sweep | verify.

Exit codes: 0 success; 1 malformed input; 2 validation failure (or a run
refused/below certainty in unsafe mode); 3 numerical-integrity error;
4 verify property failure.

A JSON config file (--config) may supply any flag under the same name with
dashes replaced by underscores; explicit flags override the file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import driver, oracle
from .errors import (
    CapacityError,
    NumericsError,
    ParityError,
    PermutationError,
    ValidationError,
)
from .register import MarkedSet, format_item, make_layout, parse_item
from .statevector import dump_state

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICS = 3
EXIT_VERIFY = 4
EXIT_BELOW_CERTAINTY = 5

SWEEP_COLUMNS = ("n", "M", "n0", "stages", "queries", "success",
                 "baseline_queries", "baseline_success", "status", "seed")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-n", type=int, default=None, help="register size in qubits")
    common.add_argument("--marked", default=None,
                        help="comma list of marked items (MSB-left binary or decimal)")
    common.add_argument("--random-marked", type=int, default=None, metavar="M",
                        help="draw M random valid marked items (requires --seed)")
    common.add_argument("--seed", type=int, default=None, help="RNG seed")
    common.add_argument("--mode", choices=driver.MODES, default=None,
                        help="validation handling (default strict)")
    common.add_argument("--strict-parity", action="store_true", default=None,
                        help="reject layouts that need a one-qubit tail stage")
    common.add_argument("-o", "--output", choices=("json", "csv", "text"),
                        default=None, help="output format (default text)")
    common.add_argument("--config", default=None,
                        help="JSON config file; explicit flags override it")

    parser = argparse.ArgumentParser(
        prog="subgrover",
        description="Subgrouped multi-target quantum search simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common],
                       help="lay out stages, validate the marked set")
    p.add_argument("--emit-oracles", action="store_true", default=None,
                   help="also print the synthesized suboracles as JSON")

    p = sub.add_parser("run", parents=[common], help="run the staged search")
    p.add_argument("--dump-state", action="store_true", default=None,
                   help="print nonzero final amplitudes")
    p.add_argument("--project", action="store_true", default=None,
                   help="hard-zero off-support residue after each stage")

    sub.add_parser("baseline", parents=[common],
                   help="run standard Grover for comparison")

    p = sub.add_parser("sweep", parents=[common],
                       help="grid of (n, M) cells with baseline comparison")
    p.add_argument("--n-range", default=None,
                   help="register sizes, e.g. 4:12 or 6,8,10")
    p.add_argument("--m-range", default=None,
                   help="marked counts, e.g. 1:16 or 1,2,4")
    p.add_argument("--samples", type=int, default=None,
                   help="random marked sets per cell (default 20)")

    p = sub.add_parser("verify", parents=[common], help="run the property suite")
    p.add_argument("--max-n", type=int, default=None,
                   help="largest register in the suite (default 10)")
    p.add_argument("--inject-phase-error", type=float, default=None, metavar="RAD",
                   help="perturb the first-stage phase (expected to fail)")

    return parser


def _merge_config(args: argparse.Namespace) -> dict:
    """Config file values fill in whatever flags were left unset."""
    merged = {k: v for k, v in vars(args).items() if v is not None}
    if args.config:
        with open(args.config) as fh:
            for key, value in json.load(fh).items():
                merged.setdefault(key.replace("-", "_"), value)
    merged.setdefault("mode", "strict")
    merged.setdefault("output", "text")
    merged.setdefault("strict_parity", False)
    return merged


def _resolve_marked(cfg: dict) -> MarkedSet:
    n = cfg.get("n")
    if n is None:
        raise ValueError("register size -n is required")
    marked = cfg.get("marked")
    random_m = cfg.get("random_marked")
    if marked is not None and random_m is not None:
        raise ValueError("--marked and --random-marked are mutually exclusive")
    if marked is not None:
        if isinstance(marked, str):
            marked = [part for part in marked.split(",") if part]
        if not marked:
            raise ValueError("--marked is empty")
        return MarkedSet(n, tuple(parse_item(str(s), n) for s in marked))
    if random_m is not None:
        seed = cfg.get("seed")
        if seed is None:
            raise ValueError("--random-marked requires --seed")
        rng = np.random.default_rng([int(seed), n, random_m])
        return driver.random_marked_set(n, random_m, rng)
    raise ValueError("one of --marked or --random-marked is required")


def _plan_dict(plan_: driver.Plan) -> dict:
    layout = plan_.layout
    return {
        "n": layout.n,
        "M": plan_.marked.M,
        "n0": layout.n0,
        "eta": layout.eta,
        "tail_width": layout.tail_width,
        "stages": plan_.stage_count,
        "phi1": plan_.phi1,
        "predicted_queries": plan_.predicted_queries,
        "valid": plan_.validation.ok,
        "collisions": [list(pair) for pair in plan_.validation.collisions],
        "marked": [format_item(v, layout.n) for v in plan_.marked.items],
        "permutation": list(plan_.permutation) if plan_.permutation else None,
    }


def cmd_plan(cfg: dict) -> int:
    marked = _resolve_marked(cfg)
    try:
        plan_ = driver.plan(cfg["n"], marked, mode=cfg["mode"],
                            strict_parity=cfg["strict_parity"])
    except ValidationError as exc:
        print(f"validation failed: {exc}")
        if exc.report is not None:
            for pair in exc.report.collisions:
                print(f"collision: {pair}")
        return EXIT_VALIDATION
    info = _plan_dict(plan_)
    if cfg["output"] == "json":
        print(json.dumps(info, indent=2))
    else:
        print(f"n: {info['n']}  M: {info['M']}  n0: {info['n0']}  "
              f"eta: {info['eta']}  tail: {info['tail_width']}")
        print(f"stages: {info['stages']}  phi1: {info['phi1']:.6f}  "
              f"predicted_queries: {info['predicted_queries']}")
        print(f"marked: {','.join(info['marked'])}")
        if info["permutation"]:
            print(f"permutation: {info['permutation']}")
        print(f"valid: {str(info['valid']).lower()}")
        for pair in plan_.validation.collisions:
            print(f"collision: {pair}")
    if cfg.get("emit_oracles"):
        oracles = [
            oracle.synthesize(plan_.marked, plan_.layout, k, unsafe=plan_.unsafe)
            .to_json_dict()
            for k in range(1, plan_.stage_count + 1)
        ]
        print(json.dumps(oracles, indent=2))
    return EXIT_OK if plan_.validation.ok else EXIT_VALIDATION


def _run_report_dict(report: driver.RunReport) -> dict:
    return {
        "n": report.n,
        "M": report.M,
        "per_stage": [
            {
                "k": r.k,
                "fidelity_to_closed_form": r.fidelity_to_closed_form,
                "off_support": r.off_support,
                "queries_so_far": r.queries_so_far,
            }
            for r in report.per_stage
        ],
        "final_success": report.final_success,
        "queries_used": report.queries_used,
        "wall_time": report.wall_time,
    }


def cmd_run(cfg: dict) -> int:
    marked = _resolve_marked(cfg)
    try:
        plan_ = driver.plan(cfg["n"], marked, mode=cfg["mode"],
                            strict_parity=cfg["strict_parity"])
        report = driver.run(plan_, project_off_support=bool(cfg.get("project")))
    except ValidationError as exc:
        print(f"validation failed: {exc}")
        return EXIT_VALIDATION
    info = _run_report_dict(report)
    if cfg["output"] == "json":
        print(json.dumps(info, indent=2))
    elif cfg["output"] == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["k", "fidelity_to_closed_form", "off_support",
                         "queries_so_far", "final_success", "queries_used"])
        for r in report.per_stage:
            writer.writerow([r.k, _fmt(r.fidelity_to_closed_form),
                             _fmt(r.off_support), r.queries_so_far,
                             _fmt(report.final_success), report.queries_used])
        print(out.getvalue(), end="")
    else:
        for r in report.per_stage:
            print(f"stage {r.k}: fidelity {r.fidelity_to_closed_form:.12f}  "
                  f"off_support {r.off_support:.3e}  queries {r.queries_so_far}")
        print(f"final_success: {_fmt(report.final_success)}")
        print(f"queries_used: {report.queries_used}")
        print(f"wall_time: {report.wall_time:.6f}")
    if cfg.get("dump_state"):
        state = uniform_state(report.n)
        for k in range(1, plan_.stage_count + 1):
            from .grover import apply_stage, make_stage
            op = make_stage(plan_.marked, plan_.layout, k, unsafe=plan_.unsafe)
            state = apply_stage(state, op)
        print(dump_state(state))
    return (EXIT_OK if report.final_success >= 1.0 - driver.SUCCESS_TOL
            else EXIT_BELOW_CERTAINTY)


def _baseline_dict(report: driver.BaselineReport) -> dict:
    return {
        "N": report.N,
        "M": report.M,
        "theta": report.theta,
        "iterations": report.iterations,
        "success": report.success,
        "queries_used": report.queries_used,
    }


def cmd_baseline(cfg: dict) -> int:
    marked = _resolve_marked(cfg)
    report = driver.run_baseline(cfg["n"], marked)
    info = _baseline_dict(report)
    if cfg["output"] == "json":
        print(json.dumps(info, indent=2))
    elif cfg["output"] == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(list(info))
        writer.writerow([info["N"], info["M"], _fmt(info["theta"]),
                         info["iterations"], _fmt(info["success"]),
                         info["queries_used"]])
        print(out.getvalue(), end="")
    else:
        print(f"N: {info['N']}  M: {info['M']}  theta: {info['theta']:.6f}")
        print(f"iterations: {info['iterations']}  "
              f"success: {_fmt(info['success'])}")
    return EXIT_OK


def _parse_range(text: str) -> list[int]:
    """Parse 'a:b' (inclusive), 'a:b:step' or a comma list into values."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) == 2:
            lo, hi, step = parts[0], parts[1], 1
        elif len(parts) == 3:
            lo, hi, step = parts
        else:
            raise ValueError(f"bad range {text!r}")
        return list(range(lo, hi + 1, step))
    return [int(p) for p in text.split(",") if p]


def sweep_rows(n_values: list[int], m_values: list[int], samples: int,
               seed: int) -> list[dict]:
    """One row per feasible (n, M) cell, ordered by (n, M), fully seeded.

    The success column is the worst final success over the cell's sampled
    marked sets. Cells whose layout needs the one-qubit tail stage get status
    "tail"; cells where no valid random set was found within the rejection
    cap get status "needs-permutation" and empty metrics.
    """
    rows = []
    for n in sorted(set(n_values)):
        for M in sorted(set(m_values)):
            if 4 * M > (1 << n):
                continue
            layout = driver.make_layout(n, M)
            status = "tail" if layout.tail_width else "ok"
            rng = np.random.default_rng([seed, n, M])
            row = {"n": n, "M": M, "n0": layout.n0, "stages": layout.stage_count,
                   "seed": seed}
            try:
                sets = [driver.random_marked_set(n, M, rng) for _ in range(samples)]
            except ValidationError:
                rows.append({**row, "queries": None, "success": None,
                             "baseline_queries": None, "baseline_success": None,
                             "status": "needs-permutation"})
                continue
            worst = 1.0
            queries = None
            for marked in sets:
                report = driver.run(driver.plan(n, marked))
                worst = min(worst, report.final_success)
                queries = report.queries_used
            base = driver.run_baseline(n, sets[0])
            rows.append({**row, "queries": queries, "success": worst,
                         "baseline_queries": base.queries_used,
                         "baseline_success": base.success, "status": status})
    return rows


def render_sweep(rows: list[dict], output: str) -> str:
    def cell(value):
        if value is None:
            return ""
        if isinstance(value, float):
            return _fmt(value)
        return str(value)

    if output == "json":
        return json.dumps(rows, indent=2) + "\n"
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([cell(row[c]) for c in SWEEP_COLUMNS])
    text = out.getvalue()
    if output == "csv":
        return text
    return text.replace(",", "\t")  # text mode: same table, tab separated


def cmd_sweep(cfg: dict) -> int:
    n_values = _parse_range(str(cfg.get("n_range") or ""))
    m_values = _parse_range(str(cfg.get("m_range") or ""))
    if cfg.get("n") is not None and not n_values:
        n_values = [cfg["n"]]
    if not n_values or not m_values:
        print("sweep needs nonempty --n-range and --m-range", file=sys.stderr)
        return EXIT_USAGE
    seed = cfg.get("seed")
    if seed is None:
        raise ValueError("sweep requires --seed for reproducibility")
    samples = int(cfg.get("samples") or 20)
    if samples < 1:
        raise ValueError("--samples must be >= 1")
    rows = sweep_rows(n_values, m_values, samples, int(seed))
    sys.stdout.write(render_sweep(rows, cfg["output"]))
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    max_n = int(cfg.get("max_n") or 10)
    error = float(cfg.get("inject_phase_error") or 0.0)
    seed = int(cfg.get("seed") or 20240901)
    results = driver.run_property_suite(max_n=max_n, inject_phase_error=error,
                                        seed=seed)
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail}")
    failed = [res for res in results if not res.passed]
    if failed:
        print(f"first failing property: {failed[0].name}")
        return EXIT_VERIFY
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        if args.command == "plan":
            return cmd_plan(cfg)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "baseline":
            return cmd_baseline(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        raise ValueError(f"unknown command {args.command!r}")
    except NumericsError as exc:
        print(f"numerical integrity error: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except (ValidationError, PermutationError, ParityError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, CapacityError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
