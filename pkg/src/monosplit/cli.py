"""Command-line surface: solve, certify, bench.

``solve`` runs a configured method on a configured problem and writes a
JSON-lines trace (one step record per line) plus a JSON summary.
``certify`` replays a written trace against the acceptance inequality,
the step identity and the distance bookkeeping, independently of the
solver that produced it. ``bench`` runs a suite of configurations and
emits a CSV summary. Exit codes: 0 success/converged, 1 configuration
error, 2 iteration budget exhausted, 3 certificate rejected,
4 certification found a violation.

Floating-point values are serialized with the shortest round-trip
decimal representation (Python's default), so a replay sees bit-identical
numbers.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CertificateRejected, SolverError, ValidationError
from .fejer import p1_monitor
from .hpe import (
    Certificate,
    HpeConfig,
    SolveTrace,
    check_sigma_resolvent,
    exact_prox_oracle,
    hpe_solve,
    inequality_tol,
    make_error_schedule,
)
from .problems import Problem, get_problem
from .splittings import SplitProblem, default_sigma, make_oracle

TRACE_SCHEMA = "monosplit-trace"
TRACE_VERSION = 1
RECORD_KEYS = {
    "k", "lambda", "y", "v", "eps", "x_prev", "x_next", "r", "lhs", "rhs", "satisfied",
}
EPS_FLOOR = 1e-12
STEP_IDENTITY_TOL = 1e-12
DISTANCE_SLACK_TOL = 1e-9
OUT_DIR_ENV = "MONOSPLIT_OUT"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MAX_ITERS = 2
EXIT_REJECTED = 3
EXIT_VIOLATION = 4

_CONFIG_KEYS = {
    "problem", "method", "lambda", "sigma", "max_iters", "stop_tol",
    "error_schedule", "policy", "x0",
}
_METHODS = ("hpe_exact", "fb", "tseng", "korpelevich")


@dataclass
class RunConfig:
    """One solver run, as deserialized from a single JSON document."""

    problem: dict
    method: str
    lambdas: list[float]
    max_iters: int
    stop_tol: float
    sigma: float | None = None
    error_schedule: dict | None = None
    policy: str = "strict"
    x0: list[float] | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ValidationError("run config must be a JSON object")
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        missing = {"problem", "method", "lambda", "max_iters", "stop_tol"} - set(raw)
        if missing:
            raise ValidationError(f"config misses fields: {sorted(missing)}")
        method = raw["method"]
        if method not in _METHODS:
            raise ValidationError(f"unknown method '{method}'")
        lam = raw["lambda"]
        lambdas = [float(l) for l in lam] if isinstance(lam, list) else [float(lam)]
        schedule = raw.get("error_schedule")
        if schedule is not None:
            if set(schedule) != {"c", "p", "seed"}:
                raise ValidationError("error_schedule needs exactly the fields c, p, seed")
        return cls(
            problem=raw["problem"],
            method=method,
            lambdas=lambdas,
            max_iters=int(raw["max_iters"]),
            stop_tol=float(raw["stop_tol"]),
            sigma=None if raw.get("sigma") is None else float(raw["sigma"]),
            error_schedule=schedule,
            policy=raw.get("policy", "strict"),
            x0=raw.get("x0"),
        )


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return RunConfig.from_dict(json.load(fh))


def build_run(config: RunConfig):
    """Instantiate problem, oracle, sigma and solver config; re-validates
    every method precondition after deserialization."""
    problem = get_problem(config.problem)
    if config.method == "hpe_exact":
        if problem.exact_resolvent is None:
            raise ValidationError(
                f"problem '{problem.name}' has no exact resolvent for hpe_exact"
            )
        res = problem.exact_resolvent

        def oracle(x, lam):
            y = res(lam, x)
            return Certificate(y=y, v=(x - y) / lam, eps=0.0)

        sigma = 0.0 if config.sigma is None else config.sigma
    else:
        if config.method not in problem.methods:
            raise ValidationError(
                f"problem '{problem.name}' does not satisfy the preconditions "
                f"of method '{config.method}'"
            )
        split = SplitProblem(
            A=problem.A,
            B=problem.B,
            method=config.method,
            lam_lo=min(config.lambdas),
            lam_hi=max(config.lambdas),
            alpha=problem.alpha,
            L=problem.L,
        )
        sigma = default_sigma(split) if config.sigma is None else config.sigma
        oracle = make_oracle(split)
    schedule = (
        make_error_schedule(**config.error_schedule)
        if config.error_schedule is not None
        else None
    )
    hpe_cfg = HpeConfig(
        sigma=sigma,
        lambdas=config.lambdas,
        max_iters=config.max_iters,
        stop_tol=config.stop_tol,
        error_schedule=schedule,
        policy=config.policy,
    )
    x0 = problem.x0_default if config.x0 is None else np.asarray(config.x0, dtype=float)
    return problem, oracle, hpe_cfg, x0


def _record_line(rec) -> dict:
    return {
        "k": rec.k,
        "lambda": float(rec.lam),
        "y": rec.cert.y.tolist(),
        "v": rec.cert.v.tolist(),
        "eps": float(rec.cert.eps),
        "x_prev": rec.x_prev.tolist(),
        "x_next": rec.x_next.tolist(),
        "r": rec.injected_error.tolist(),
        "lhs": float(rec.sigma_report.lhs),
        "rhs": float(rec.sigma_report.rhs),
        "satisfied": bool(rec.sigma_report.satisfied),
    }


def write_trace(path, problem: Problem, method: str, sigma: float, trace: SolveTrace):
    header = {
        "schema": TRACE_SCHEMA,
        "version": TRACE_VERSION,
        "problem": problem.name,
        "method": method,
        "sigma": float(sigma),
        "dim": problem.dim,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for rec in trace.records:
            fh.write(json.dumps(_record_line(rec)) + "\n")


def read_trace(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines:
        raise ValidationError("trace file is empty")
    header, records = lines[0], lines[1:]
    if header.get("schema") != TRACE_SCHEMA:
        raise ValidationError("not a trace file (bad schema header)")
    if header.get("version") != TRACE_VERSION:
        raise ValidationError(f"unsupported trace version {header.get('version')}")
    return header, records


def _summarize(problem: Problem, trace: SolveTrace, reason: str) -> dict:
    summary = {
        "termination": reason,
        "iterations": trace.iterations,
        "final_residual": None if not trace.records else float(trace.final_residual),
        "distance_to_reference": None,
        "fejer_verdict": None,
    }
    if problem.x_star is not None and trace.x_final is not None:
        summary["distance_to_reference"] = float(
            np.linalg.norm(trace.x_final - problem.x_star)
        )
        report = p1_monitor(trace, problem.x_star)
        summary["fejer_verdict"] = report.verdict
        summary["min_slack"] = float(report.min_slack)
        summary["rho_partial_sum"] = float(report.rho_partial_sum)
    return summary


def cmd_solve(config_path, out_dir=None) -> int:
    try:
        config = load_config(config_path)
        problem, oracle, hpe_cfg, x0 = build_run(config)
    except (SolverError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"solve: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(out_dir or os.environ.get(OUT_DIR_ENV, "."))
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / "trace.jsonl"
    summary_path = out / "summary.json"
    try:
        trace = hpe_solve(oracle, x0, hpe_cfg)
        reason = trace.reason
        code = EXIT_OK if reason == "converged" else EXIT_MAX_ITERS
    except CertificateRejected as exc:
        trace = SolveTrace(records=exc.records, reason="rejected")
        trace.x_final = exc.records[-1].x_next if exc.records else x0
        reason = "rejected"
        code = EXIT_REJECTED
        print(f"solve: {exc}", file=sys.stderr)
    write_trace(trace_path, problem, config.method, hpe_cfg.sigma, trace)
    summary = _summarize(problem, trace, reason)
    summary["trace_path"] = str(trace_path)
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(
        f"{problem.name}/{config.method}: {reason} after {trace.iterations} steps, "
        f"residual={summary['final_residual']}"
    )
    return code


def _certify_records(header, records, sigma, problem: Problem):
    """Check every trace line; returns (ok, first_violation, n_checked)."""
    dim = header["dim"]
    x_star = problem.x_star if problem is not None else None
    d_prev = None
    for i, raw in enumerate(records, start=1):
        if set(raw) != RECORD_KEYS:
            return False, {"line": i, "reason": "unexpected record fields"}, i
        lam = float(raw["lambda"])
        y = np.asarray(raw["y"], dtype=float)
        v = np.asarray(raw["v"], dtype=float)
        x_prev = np.asarray(raw["x_prev"], dtype=float)
        x_next = np.asarray(raw["x_next"], dtype=float)
        r = np.asarray(raw["r"], dtype=float)
        eps = float(raw["eps"])
        arrays = (y, v, x_prev, x_next, r)
        if any(a.shape != (dim,) for a in arrays) or not all(
            np.all(np.isfinite(a)) for a in arrays
        ):
            return False, {"line": i, "reason": "malformed or non-finite vectors"}, i
        if raw["k"] != i:
            return False, {"line": i, "reason": f"iteration index {raw['k']} != {i}"}, i
        if eps < -EPS_FLOOR:
            return False, {"line": i, "reason": f"eps = {eps} < 0"}, i

        step = y - x_prev
        step_norm = float(np.linalg.norm(step))
        lhs = float(np.linalg.norm(lam * v + step) ** 2 + 2.0 * lam * eps)
        rhs = float(sigma**2 * step_norm**2)
        tol = inequality_tol(step_norm)
        if abs(lhs - raw["lhs"]) > tol or abs(rhs - raw["rhs"]) > tol:
            return False, {"line": i, "reason": "stored lhs/rhs do not replay"}, i
        if not (lhs <= rhs + tol):
            return False, {
                "line": i,
                "reason": f"acceptance inequality violated (lhs={lhs}, rhs={rhs})",
            }, i
        if raw["satisfied"] is not True:
            return False, {"line": i, "reason": "step recorded as not satisfied"}, i

        identity_gap = float(np.linalg.norm(x_next - (x_prev - lam * v + r)))
        if identity_gap > STEP_IDENTITY_TOL * (1.0 + float(np.linalg.norm(x_next))):
            return False, {
                "line": i,
                "reason": f"step identity violated (gap={identity_gap})",
            }, i

        if x_star is not None:
            if d_prev is None:
                d_prev = float(np.linalg.norm(x_star - x_prev))
            d_next = float(np.linalg.norm(x_star - x_next))
            rho = float(np.linalg.norm(r))
            if d_next > d_prev + rho + DISTANCE_SLACK_TOL:
                return False, {
                    "line": i,
                    "reason": f"distance bookkeeping violated (d={d_next} > "
                    f"{d_prev} + {rho})",
                }, i
            d_prev = d_next
    return True, None, len(records)


def cmd_certify(trace_path, config_path) -> int:
    try:
        config = load_config(config_path)
        problem, _, hpe_cfg, _ = build_run(config)
        header, records = read_trace(trace_path)
    except (SolverError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"certify: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sigma = hpe_cfg.sigma
    consistent = (
        header.get("problem") == problem.name
        and header.get("method") == config.method
        and header.get("dim") == problem.dim
        and float(header.get("sigma")) == sigma
    )
    if not consistent:
        print("certify: trace header inconsistent with config", file=sys.stderr)
        return EXIT_CONFIG
    ok, violation, checked = _certify_records(header, records, sigma, problem)
    report = {
        "trace": str(trace_path),
        "passed": ok,
        "checked_records": checked,
        "sigma": sigma,
        "first_violation": violation,
    }
    report_path = Path(str(trace_path) + ".certification.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    if ok:
        print(f"certify: {checked} records verified")
        return EXIT_OK
    print(
        f"certify: violation at line {violation['line']}: {violation['reason']}",
        file=sys.stderr,
    )
    return EXIT_VIOLATION


DEFAULT_SUITE = {
    "runs": [
        {
            "problem": {"name": "quadratic_l1", "b": [3.0, -0.2, 5.0], "w": 1.0},
            "method": "fb", "lambda": 1.0, "max_iters": 5000, "stop_tol": 1e-10,
        },
        {
            "problem": {"name": "quadratic_l1", "b": [3.0, -0.2, 5.0], "w": 1.0},
            "method": "tseng", "lambda": 0.9, "max_iters": 5000, "stop_tol": 1e-10,
        },
        {
            "problem": {"name": "quadratic_l1", "b": [3.0, -0.2, 5.0], "w": 1.0},
            "method": "hpe_exact", "lambda": 10.0, "max_iters": 5000, "stop_tol": 1e-10,
        },
        {
            "problem": "rotation_vi",
            "method": "tseng", "lambda": 0.9, "max_iters": 5000, "stop_tol": 1e-10,
        },
        {
            "problem": "rotation_vi",
            "method": "korpelevich", "lambda": 0.9, "max_iters": 5000, "stop_tol": 1e-10,
        },
        {
            "problem": {
                "name": "affine_box_vi",
                "M": [[1.0, 0.5], [-0.5, 1.0]], "q": [-3.0, 1.0],
                "lo": [0.0, 0.0], "hi": [1.0, 1.0],
            },
            "method": "korpelevich", "lambda": 0.7, "max_iters": 5000, "stop_tol": 1e-10,
        },
        {
            "problem": {
                "name": "affine_box_vi",
                "M": [[1.0, 0.5], [-0.5, 1.0]], "q": [-3.0, 1.0],
                "lo": [0.0, 0.0], "hi": [1.0, 1.0],
            },
            "method": "tseng", "lambda": 0.7, "max_iters": 5000, "stop_tol": 1e-10,
        },
        {
            "problem": {"name": "quadratic_l1", "b": [3.0, -0.2, 5.0], "w": 1.0},
            "method": "fb", "lambda": 1.0, "max_iters": 2000, "stop_tol": 1e-12,
            "error_schedule": {"c": 0.1, "p": 2.0, "seed": 7},
        },
    ]
}

BENCH_COLUMNS = (
    "problem", "method", "sigma", "iterations", "final_residual",
    "final_distance", "fejer_verdict", "wall_time_s",
)


def cmd_bench(suite_path, out_csv) -> int:
    try:
        if str(suite_path) == "default":
            suite = DEFAULT_SUITE
        else:
            with open(suite_path, "r", encoding="utf-8") as fh:
                suite = json.load(fh)
        runs = suite["runs"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"bench: suite error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    any_failed = False
    with open(out_csv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(BENCH_COLUMNS)
        for raw in runs:
            started = time.perf_counter()
            try:
                config = RunConfig.from_dict(raw)
                problem, oracle, hpe_cfg, x0 = build_run(config)
                trace = hpe_solve(oracle, x0, hpe_cfg)
                summary = _summarize(problem, trace, trace.reason)
                writer.writerow([
                    problem.name,
                    config.method,
                    repr(float(hpe_cfg.sigma)),
                    trace.iterations,
                    repr(summary["final_residual"]),
                    repr(summary["distance_to_reference"]),
                    summary["fejer_verdict"],
                    f"{time.perf_counter() - started:.6f}",
                ])
            except (SolverError, TypeError) as exc:
                any_failed = True
                name = raw.get("problem") if isinstance(raw, dict) else "?"
                if isinstance(name, dict):
                    name = name.get("name", "?")
                print(f"bench: run {name}/{raw.get('method', '?')} failed: {exc}",
                      file=sys.stderr)
    print(f"bench: wrote {out_csv}")
    return EXIT_CONFIG if any_failed else EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="monosplit",
        description="Certificate-checked splitting solvers for monotone inclusions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run a configured solver")
    p_solve.add_argument("--config", required=True, help="JSON run configuration")
    p_solve.add_argument(
        "--out",
        default=None,
        help=f"output directory (default: ${OUT_DIR_ENV} or '.')",
    )

    p_cert = sub.add_parser("certify", help="re-verify a recorded trace")
    p_cert.add_argument("--trace", required=True, help="JSON-lines trace file")
    p_cert.add_argument("--config", required=True, help="config the trace was run with")

    p_bench = sub.add_parser("bench", help="run a suite and emit a CSV summary")
    p_bench.add_argument("--suite", required=True, help="suite JSON, or 'default'")
    p_bench.add_argument("--out", required=True, help="output CSV path")

    args = parser.parse_args(argv)
    if args.command == "solve":
        return cmd_solve(args.config, args.out)
    if args.command == "certify":
        return cmd_certify(args.trace, args.config)
    return cmd_bench(args.suite, args.out)


def console_main():  # pragma: no cover - thin wrapper
    sys.exit(main())
