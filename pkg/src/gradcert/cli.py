"""Command-line front end.

Subcommands:

* ``gen``        write a synthetic quadratic problem file
* ``run``        run a solver on a problem file, write a certified trace CSV
* ``certify``    re-verify the certificate chain of an existing trace CSV
* ``identities`` run CG on a problem and check the exact-arithmetic identities
* ``perturb``    sweep noise magnitudes and report where certification breaks

Exit status: 0 on success (for ``certify``/``identities``, success includes
"no violations"), 1 on runtime or input errors and on detected violations,
2 on usage errors.  Identical invocations write byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .errors import GradcertError
from .generate import LAYOUTS, SpectrumSpec
from .perturb import sweep
from .potential import (
    certify,
    contraction_constant,
    default_cert_tolerance,
    hs_identity_battery,
    rho_optimality_check,
)
from .problems import ProblemSpec, load_problem, make_quadratic_problem
from .serialize import render_json
from .solvers import run
from .traces import read_trace_csv, write_trace_csv

METHOD_NAMES = {
    "ag": "ag",
    "cg": "cg_classic",
    "ag-unified": "ag_unified",
    "cg-unified": "cg_unified",
}

# Tolerance for re-deriving row 0 of a trace CSV from the problem file.
ROW0_TOL = 1e-9

# Cross-row gap telescoping in a CG trace CSV: f_gap_k - f_gap_{k+1} must
# equal alpha_{k+1} grad_norm_k^2 / 2. The CSV stores recurred-residual
# quantities, so the comparison is floored well above their allowed drift
# and the tolerance stays far below the gross errors it exists to catch.
TELESCOPE_TOL = 1e-3
TELESCOPE_FLOOR = 1e-6


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not math.isfinite(value) or value <= 0.0:
        raise argparse.ArgumentTypeError(f"must be a positive finite number, got {text}")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradcert",
        description="Certified first-order solvers for strongly convex problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a quadratic problem file")
    p_gen.add_argument("--dim", type=_positive_int, required=True)
    p_gen.add_argument("--ell", type=_positive_float, required=True, help="smallest eigenvalue")
    p_gen.add_argument("--lip", type=_positive_float, required=True, help="largest eigenvalue")
    p_gen.add_argument("--layout", choices=LAYOUTS, default="log_uniform")
    p_gen.add_argument("--seed", type=_nonneg_int, default=0)
    p_gen.add_argument("--out", default="problem.json")

    p_run = sub.add_parser("run", help="run a solver and write a certified trace")
    p_run.add_argument("--problem", required=True)
    p_run.add_argument("--method", choices=sorted(METHOD_NAMES), required=True)
    p_run.add_argument("--iters", type=_positive_int, default=1000)
    p_run.add_argument(
        "--stop-gap",
        type=_positive_float,
        default=None,
        help="absolute f-gap stop threshold (default: 1e-12 of the initial gap, "
        "which stays above double-precision stagnation)",
    )
    p_run.add_argument("--tol-cert", type=_positive_float, default=None)
    p_run.add_argument("--out", default="trace.csv")

    p_cert = sub.add_parser("certify", help="re-verify the chain in a trace CSV")
    p_cert.add_argument("trace", help="trace CSV written by `run`")
    p_cert.add_argument("--problem", required=True)
    p_cert.add_argument("--method", choices=sorted(METHOD_NAMES), default=None)
    p_cert.add_argument("--tol-cert", type=_positive_float, default=None)
    p_cert.add_argument("--out", default=None, help="optional JSON report path")

    p_id = sub.add_parser("identities", help="check CG conservation identities")
    p_id.add_argument("--problem", required=True)
    p_id.add_argument("--method", choices=["cg", "cg-unified"], default="cg")
    p_id.add_argument(
        "--iters", type=_positive_int, default=None, help="default: problem dimension"
    )
    p_id.add_argument("--tol-id", type=_positive_float, default=1e-8)
    p_id.add_argument("--out", default=None, help="optional JSON report path")

    p_pb = sub.add_parser("perturb", help="noise sweep: where does the chain break")
    p_pb.add_argument("--problem", required=True)
    p_pb.add_argument("--eta", required=True, help="comma-separated noise magnitudes")
    p_pb.add_argument("--iters", type=_positive_int, default=600)
    p_pb.add_argument("--seed", type=_nonneg_int, default=0)
    p_pb.add_argument("--tol-cert", type=_positive_float, default=None)
    p_pb.add_argument("--out", default="perturb.json")

    return parser


def _load_with_truth(path) -> tuple:
    spec = load_problem(path)
    obj = spec.objective()
    if obj.minimizer is None:
        raise GradcertError(
            f"{path} stores no x_star; certification needs the minimizer"
        )
    return spec, obj


def cmd_gen(args) -> int:
    spectrum = SpectrumSpec(
        dim=args.dim, ell=args.ell, lip=args.lip, layout=args.layout, seed=args.seed
    )
    problem = make_quadratic_problem(spectrum)
    problem.save(args.out)
    print(
        f"wrote {args.out}: quadratic dim={args.dim} kappa={args.lip / args.ell:g} "
        f"layout={args.layout} seed={args.seed}"
    )
    return 0


def cmd_run(args) -> int:
    spec, obj = _load_with_truth(args.problem)
    method = METHOD_NAMES[args.method]
    if method in ("ag", "ag_unified") and obj.lip == obj.ell:
        print(
            "warning: L == ell, momentum degenerates; running plain gradient "
            "descent and certifying at the common constant",
            file=sys.stderr,
        )
    if args.stop_gap is None:
        # Past ~1e-12 of the initial gap the iterates stagnate in double
        # precision and contraction checks report that, not a method bug.
        stop_gap = 1e-12 * obj.f_gap(spec.x0)
    else:
        stop_gap = args.stop_gap
    trace = run(obj, method, spec.x0, args.iters, stop_gap)
    report = certify(trace, obj, tol_cert=args.tol_cert)
    write_trace_csv(args.out, trace, obj, report)
    n = len(trace)
    print(
        f"wrote {args.out}: {args.method} ran {n - 1} iterations "
        f"(stop: {trace.stop_reason}), final f_gap {report.f_gaps[-1]:.3e}"
    )
    if report.first_violation is not None:
        print(
            f"warning: certificate chain fails at step {report.first_violation}",
            file=sys.stderr,
        )
    return 0


def _column_floats(columns, name) -> np.ndarray:
    cells = columns[name]
    if any(c is None or isinstance(c, bool) for c in cells):
        raise GradcertError(f"trace column {name!r} has missing cells")
    return np.asarray(cells, dtype=float)


def cmd_certify(args) -> int:
    spec, obj = _load_with_truth(args.problem)
    columns = read_trace_csv(args.trace)
    n = len(columns["k"])
    if n == 0:
        raise GradcertError(f"{args.trace} has no data rows")
    psis = _column_floats(columns, "psi")
    f_gaps = _column_floats(columns, "f_gap")

    # Row 0 is re-derivable from the problem file alone; a mismatch means
    # the trace and the problem do not belong together.
    d0 = spec.x0 - obj.minimizer
    f_gap0 = obj.f_gap(spec.x0)
    psi0 = float(d0 @ d0) + 2.0 / obj.ell * f_gap0
    if abs(psis[0] - psi0) > ROW0_TOL * max(1.0, abs(psi0)) or abs(
        f_gaps[0] - f_gap0
    ) > ROW0_TOL * max(1.0, abs(f_gap0)):
        raise GradcertError(
            f"row 0 of {args.trace} disagrees with {args.problem} "
            f"(psi {psis[0]:.17g} vs {psi0:.17g})"
        )

    if args.method is not None:
        family = "ag" if args.method.startswith("ag") else "cg"
    else:
        family = "cg" if any(c is not None for c in columns["alpha"]) else "ag"
    degenerate = family == "ag" and obj.lip == obj.ell
    c_common = contraction_constant("cg", obj.ell, obj.lip)
    c_value = c_common if degenerate else contraction_constant(family, obj.ell, obj.lip)
    tol = default_cert_tolerance(obj) if args.tol_cert is None else args.tol_cert

    slack = 1.0 + tol
    ok0 = n < 2 or psis[1] <= psis[0] * slack
    tail = psis[2:] * c_value <= psis[1:-1] * slack
    first_violation = None
    if not ok0:
        first_violation = 0
    else:
        bad = np.flatnonzero(~tail)
        if bad.size:
            first_violation = int(bad[0]) + 1

    # CG rows carry enough to re-check the per-step gap identity; a row
    # whose scalars were not produced by the recurrence breaks it against
    # both neighbors even where the psi chain has slack.
    first_telescope = None
    if family == "cg" and n >= 2:
        alphas = np.array(
            [np.nan if c is None else c for c in columns["alpha"]], dtype=float
        )
        grad_norms = _column_floats(columns, "grad_norm")
        lhs = f_gaps[:-1] - f_gaps[1:]
        rhs = 0.5 * alphas[1:] * grad_norms[:-1] ** 2
        scale = np.maximum(
            np.maximum(np.abs(lhs), np.abs(rhs)), TELESCOPE_FLOOR * max(f_gaps[0], 1e-300)
        )
        bad = np.flatnonzero(np.abs(lhs - rhs) / scale > TELESCOPE_TOL)
        if bad.size:
            first_telescope = int(bad[0])
    if first_telescope is not None and (
        first_violation is None or first_telescope < first_violation
    ):
        first_violation = first_telescope

    ks = np.arange(n, dtype=float)
    c0 = 0.5 * obj.ell * float(d0 @ d0) + f_gap0
    theorem1_ok = bool(np.all(f_gaps <= c0 * c_common ** (-(ks - 1.0)) * (1.0 + 1e-9)))
    daniel_ok = None
    if family == "cg" and obj.lip > obj.ell:
        q = (1.0 - math.sqrt(obj.ell / obj.lip)) / (1.0 + math.sqrt(obj.ell / obj.lip))
        daniel_ok = bool(np.all(f_gaps <= 4.0 * f_gap0 * q ** (2.0 * ks) * (1.0 + 1e-9)))

    doc = {
        "trace": args.trace,
        "problem": args.problem,
        "method": family,
        "iterates": n,
        "C": c_value,
        "tol_cert": tol,
        "first_violation": first_violation,
        "first_telescope_violation": first_telescope,
        "theorem1_ok": theorem1_ok,
        "daniel_ok": daniel_ok,
    }
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(render_json(doc) + "\n")
    if first_violation is None:
        print(f"certificate chain holds over {n - 1} steps (C={c_value:.12g})")
        return 0
    print(f"certificate chain violated at step {first_violation}")
    return 1


def cmd_identities(args) -> int:
    spec, obj = _load_with_truth(args.problem)
    if spec.kind != "quadratic":
        raise GradcertError("identity checks apply to quadratic problems only")
    method = METHOD_NAMES[args.method]
    iters = spec.dim if args.iters is None else args.iters
    trace = run(obj, method, spec.x0, iters, -math.inf)
    battery = hs_identity_battery(trace, obj, tol_id=args.tol_id)
    rho_misalignment, rho_ok = rho_optimality_check(trace, obj)
    ok = battery.ok and rho_ok
    doc = battery.summary()
    doc["rho_alignment"] = rho_misalignment
    doc["rho_ok"] = rho_ok
    doc["ok"] = ok
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(render_json(doc) + "\n")
    worst = max(battery.max_violations.values())
    print(
        f"{len(trace) - 1} CG steps: worst identity residual {worst:.3e} "
        f"(tol {args.tol_id:g}), rho alignment {rho_misalignment:.3e}"
    )
    print("identities hold" if ok else "identity violation detected")
    return 0 if ok else 1


def _parse_etas(text: str) -> list:
    try:
        etas = [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise GradcertError(f"bad --eta list {text!r}") from None
    if not etas or any(e < 0 for e in etas):
        raise GradcertError("--eta needs a comma-separated list of magnitudes >= 0")
    return etas


def cmd_perturb(args) -> int:
    spec, obj = _load_with_truth(args.problem)
    if spec.kind != "quadratic":
        raise GradcertError("noise injection applies to quadratic problems only")
    etas = _parse_etas(args.eta)
    truth = spec.ground_truth()
    reports = sweep(
        obj,
        truth,
        etas,
        [args.seed],
        args.iters,
        x0=spec.x0,
        tol_cert=args.tol_cert,
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(render_json([r.to_dict() for r in reports]) + "\n")
    for r in reports:
        where = "none" if r.first_violation is None else str(r.first_violation)
        print(
            f"eta={r.eta:g} seed={r.seed}: first_violation={where} "
            f"({r.iterations_run} iterations, stop: {r.stop_reason})"
        )
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "gen": cmd_gen,
    "run": cmd_run,
    "certify": cmd_certify,
    "identities": cmd_identities,
    "perturb": cmd_perturb,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (GradcertError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
