"""Per-step decrease certificates and exactness identities.

The certified quantity is

    psi_k = ||w_k||^2 + (2/l) (f(x_k) - f*),   w_k = x_k + rho_k s_k - x*

with rho_0 = 0. For the accelerated schedule rho_k = sqrt(L/l) - 1 for all
k >= 1; for conjugate gradient rho_k is assembled from the run's own
scalars, rho_k = 2 (f(x_k) - f*) / (alpha_k ||r_{k-1}||^2), and is exactly
the weight minimizing ||w_k|| over rho (so w_k is orthogonal to the step,
which rho_optimality_check verifies).

certify() checks the chain

    psi_1 <= psi_0,    C psi_{k+1} <= psi_k   for k >= 1

at the method's contraction constant C (no contraction is claimed for the
very first step), plus two closed-form envelopes on f(x_k) - f*. The
identity battery replays the sharper per-step equalities that hold for CG
on a quadratic; those fail loudly under inexact arithmetic or a perturbed
operator, which is what makes them usable as a self-test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRatioError, EigenEstimateError, MissingGroundTruthError
from .objective import QuadraticObjective
from .serialize import fmt_float, render_json

# Multiplicative slack on the closed-form envelope checks; the certificate
# chain takes its tolerance from default_cert_tolerance instead.
ENVELOPE_SLACK = 1e-9

# p'r orthogonality threshold, relative to ||p_k|| ||r_0||.
ORTH_TOL = 1e-10

# Rayleigh-quotient containment slack for 1/alpha_k.
RQ_SLACK = 1e-9

# One-sided absolute slack on the weighted-norm inequality (e).
WEIGHTED_BOUND_SLACK = 1e-10

_METHOD_FAMILY = {"ag": "ag", "ag_unified": "ag", "cg_classic": "cg", "cg_unified": "cg"}

REPORT_CSV_HEADER = "k,psi,ratio,C,pass,f_gap,theorem1_bound,daniel_bound,dist_to_opt,w_norm_sq,rho"


def default_cert_tolerance(obj) -> float:
    """Chain tolerance scaled for conditioning and dimension.

    1e-9 covers the test grid comfortably; the kappa * eps * dim term keeps
    the default meaningful when someone certifies a run at conditioning far
    beyond it.
    """
    kappa = obj.lip / obj.ell
    return 1e-9 * (1.0 + kappa * 2.0**-52 * obj.dim)


def rho_ag(ell: float, lip: float, k: int) -> float:
    """Constant potential weight of the accelerated schedule.

    0 at k = 0, sqrt(L/l) - 1 after. lip == ell gives 0 (the schedule has
    collapsed to gradient descent; callers that need to know get the
    degenerate flag from the schedule itself).
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if k == 0 or lip <= ell:
        return 0.0
    return math.sqrt(lip / ell) - 1.0


def rho_cg(f_gap_doubled: float, alpha: float, res_prev_sq: float, k: int) -> float:
    """CG potential weight at step k from the run's own scalars.

    rho_k = F_k / (alpha_k ||r_{k-1}||^2) with F_k = 2 (f(x_k) - f*);
    0 at k = 0 and at exact convergence (F_k = 0, where any weight works).
    A vanishing denominator with F_k > 0 means the scalars do not belong
    to a live CG step.
    """
    if k == 0 or f_gap_doubled == 0.0:
        return 0.0
    denom = alpha * res_prev_sq
    if denom <= 0.0:
        raise DegenerateRatioError(
            f"weight denominator alpha * ||r||^2 = {denom!r} with F = {f_gap_doubled!r} at k={k}"
        )
    return f_gap_doubled / denom


def contraction_constant(method: str, ell: float, lip: float) -> float:
    """Certified per-step contraction: cg -> 1 + sqrt(l/L), ag -> 1 + 1/(sqrt(L/l) - 1)."""
    family = _METHOD_FAMILY.get(method, method)
    if family == "cg":
        return 1.0 + math.sqrt(ell / lip)
    if family == "ag":
        if lip <= ell:
            raise DegenerateRatioError(
                "accelerated contraction constant is unbounded at lip == ell"
            )
        return 1.0 + 1.0 / (math.sqrt(lip / ell) - 1.0)
    raise ValueError(f"unknown method {method!r}")


@dataclass
class PotentialPoint:
    k: int
    rho: float
    w: np.ndarray
    w_norm_sq: float
    f_gap: float
    psi: float

    @property
    def f_gap_doubled(self) -> float:
        return 2.0 * self.f_gap


def potential_point(obj, x, s, rho: float, k: int = 0) -> PotentialPoint:
    """psi at a single iterate. s may be None at k = 0 (rho is forced to 0)."""
    if obj.minimizer is None or obj.min_value is None:
        raise MissingGroundTruthError("potential evaluation needs minimizer and min_value")
    x = obj._check_vector(x, "x")
    if s is None or k == 0:
        rho = 0.0
        w = x - obj.minimizer
    else:
        w = x + rho * s - obj.minimizer
    w_norm_sq = float(w @ w)
    gap = obj.f_gap(x)
    return PotentialPoint(
        k=k,
        rho=rho,
        w=w,
        w_norm_sq=w_norm_sq,
        f_gap=gap,
        psi=w_norm_sq + 2.0 * gap / obj.ell,
    )


@dataclass
class CertificateReport:
    """Vectorized certificate record for a whole trace.

    Arrays are indexed by iterate. step_passes[k] is the forward check at
    step k (psi_1 <= psi_0 at k = 0, C psi_{k+1} <= psi_k after), one entry
    fewer than the iterates; ratios[k] = psi_k / psi_{k+1} (inf at exact
    termination). first_violation is the smallest failing step index or
    None. Accelerated runs are re-checked at the weaker common constant
    1 + sqrt(l/L); common_first_violation reports that chain (equal to the
    main one on CG runs).
    """

    method: str
    variant: str
    c_value: float
    c_common: float
    tol_cert: float
    ell: float
    lip: float
    psis: np.ndarray
    f_gaps: np.ndarray
    w_norm_sqs: np.ndarray
    dist_sqs: np.ndarray
    rhos: np.ndarray
    ratios: np.ndarray
    step_passes: np.ndarray
    first_violation: int | None
    common_first_violation: int | None
    theorem1_bounds: np.ndarray
    theorem1_ok: bool
    daniel_bounds: np.ndarray | None
    daniel_ok: bool | None
    degenerate: bool = False
    flags: list = field(default_factory=list)

    @property
    def chain_ok(self) -> bool:
        return self.first_violation is None

    @property
    def all_ok(self) -> bool:
        out = self.chain_ok and self.theorem1_ok
        if self.daniel_ok is not None:
            out = out and self.daniel_ok
        return out

    def __len__(self):
        return self.psis.shape[0]

    @property
    def steps(self) -> list:
        """Per-iterate dict rows, keyed like the report CSV columns."""
        n = len(self)
        rows = []
        for k in range(n):
            last = k == n - 1
            rows.append(
                {
                    "k": k,
                    "psi": float(self.psis[k]),
                    "ratio": None if last else float(self.ratios[k]),
                    "C": self.c_value,
                    "pass": None if last else bool(self.step_passes[k]),
                    "f_gap": float(self.f_gaps[k]),
                    "theorem1_bound": float(self.theorem1_bounds[k]),
                    "daniel_bound": None if self.daniel_bounds is None else float(self.daniel_bounds[k]),
                    "dist_to_opt": math.sqrt(float(self.dist_sqs[k])),
                    "w_norm_sq": float(self.w_norm_sqs[k]),
                    "rho": float(self.rhos[k]),
                }
            )
        return rows

    def summary(self) -> dict:
        return {
            "method": self.method,
            "variant": self.variant,
            "iterates": len(self),
            "C": self.c_value,
            "C_common": self.c_common,
            "tol_cert": self.tol_cert,
            "chain_ok": self.chain_ok,
            "first_violation": self.first_violation,
            "common_first_violation": self.common_first_violation,
            "theorem1_ok": self.theorem1_ok,
            "daniel_ok": self.daniel_ok,
            "degenerate": self.degenerate,
            "flags": list(self.flags),
            "final_f_gap": float(self.f_gaps[-1]),
            "final_psi": float(self.psis[-1]),
        }

    def to_json(self) -> str:
        return render_json({"summary": self.summary(), "steps": self.steps})

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")

    def write_csv(self, path) -> None:
        names = REPORT_CSV_HEADER.split(",")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(REPORT_CSV_HEADER + "\n")
            for row in self.steps:
                cells = []
                for name in names:
                    v = row[name]
                    if v is None or (isinstance(v, float) and math.isnan(v)):
                        cells.append("")
                    elif isinstance(v, bool):
                        cells.append("true" if v else "false")
                    elif isinstance(v, int):
                        cells.append(str(v))
                    else:
                        cells.append(fmt_float(v))
                fh.write(",".join(cells) + "\n")


def _with_truth(obj, truth):
    """Objective carrying ground truth, attaching it from `truth` if needed."""
    if obj.minimizer is not None and obj.min_value is not None:
        return obj
    if truth is not None:
        return obj.with_minimizer(truth.x_star, truth.f_star)
    raise MissingGroundTruthError("needs minimizer and min_value (attach them or pass truth)")


def _exact_gaps(obj, xs, d):
    if isinstance(obj, QuadraticObjective):
        return 0.5 * np.einsum("ij,ij->i", d, d @ obj.matrix)
    return obj.f_gap_many(xs)


def certify(
    trace,
    obj,
    method: str | None = None,
    *,
    truth=None,
    tol_cert: float | None = None,
    recompute_gaps: bool = False,
    check_tightness: bool = False,
) -> CertificateReport:
    """Certificate chain plus envelope bounds for a finished run.

    method defaults to the trace's own; passing "ag" or "cg" asserts the
    family instead. Gaps recorded by the run are reused unless
    recompute_gaps is set; pass it when the trace came from a perturbed
    operator, where the recurred residual no longer measures the true
    objective. check_tightness compares declared ell/lip against power
    iteration estimates and flags disagreement beyond 1% (the certificate
    itself stays valid for loose declared constants; the flag explains why
    observed ratios may be far from C).
    """
    obj = _with_truth(obj, truth)
    family = _METHOD_FAMILY.get(trace.method)
    if family is None:
        raise ValueError(f"trace method {trace.method!r} is not certifiable")
    if method is not None and _METHOD_FAMILY.get(method, method) != family:
        raise ValueError(f"method {method!r} does not match trace method {trace.method!r}")

    xs = trace.xs
    ss = trace.ss
    n = xs.shape[0]
    if n < 1:
        raise ValueError("empty trace")
    d = xs - obj.minimizer[None, :]
    dist_sqs = np.einsum("ij,ij->i", d, d)

    flags = []
    if recompute_gaps or trace.f_gaps is None or not np.all(np.isfinite(trace.f_gaps)):
        f_gaps = _exact_gaps(obj, xs, d)
    else:
        f_gaps = trace.f_gaps
    neg = f_gaps < 0.0
    if np.any(neg):
        # Roundoff at the gap's noise floor; clamping keeps psi >= 0
        # instead of poisoning the chain with sign noise.
        flags.append(f"clamped {int(np.count_nonzero(neg))} negative gap value(s) to 0")
        f_gaps = np.maximum(f_gaps, 0.0)

    degenerate = obj.lip <= obj.ell
    if family == "ag":
        rhos = np.full(n, rho_ag(obj.ell, obj.lip, 1))
        rhos[0] = 0.0
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = 2.0 * f_gaps / (trace.alphas * trace.prev_res_sqs)
        rhos = np.where(np.isfinite(raw) & (f_gaps > 0.0), raw, 0.0)
        rhos[0] = 0.0

    w = d + rhos[:, None] * ss
    w_norm_sqs = np.einsum("ij,ij->i", w, w)
    psis = w_norm_sqs + (2.0 / obj.ell) * f_gaps

    c_common = 1.0 + math.sqrt(obj.ell / obj.lip)
    if family == "ag" and degenerate:
        c_value = c_common
        flags.append("lip == ell: gradient-descent fallback certified at the common constant")
    else:
        c_value = contraction_constant(family, obj.ell, obj.lip)

    tol = default_cert_tolerance(obj) if tol_cert is None else tol_cert
    slack = 1.0 + tol

    if n >= 2:
        # Step k compares C psi_{k+1} against psi_k; step 0 claims descent only.
        lhs = psis[1:].copy()
        lhs[1:] *= c_value
        step_passes = lhs <= psis[:-1] * slack
        common_lhs = psis[1:].copy()
        common_lhs[1:] *= c_common
        common_passes = common_lhs <= psis[:-1] * slack
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = psis[:-1] / psis[1:]
    else:
        step_passes = np.zeros(0, dtype=bool)
        common_passes = step_passes
        ratios = np.zeros(0)

    def first_fail(passes):
        bad = np.flatnonzero(~passes)
        return int(bad[0]) if bad.size else None

    c0 = 0.5 * obj.ell * dist_sqs[0] + f_gaps[0]
    ks = np.arange(n)
    theorem1_bounds = c0 * c_common ** (-(ks - 1.0))
    theorem1_ok = bool(np.all(f_gaps <= theorem1_bounds * (1.0 + ENVELOPE_SLACK)))

    daniel_bounds = None
    daniel_ok = None
    if family == "cg" and not degenerate:
        root = math.sqrt(obj.ell / obj.lip)
        q = (1.0 - root) / (1.0 + root)
        daniel_bounds = 4.0 * f_gaps[0] * q ** (2.0 * ks)
        daniel_ok = bool(np.all(f_gaps <= daniel_bounds * (1.0 + ENVELOPE_SLACK)))

    if check_tightness and isinstance(obj, QuadraticObjective):
        from .generate import extreme_eigenvalues

        try:
            lo, hi = extreme_eigenvalues(obj)
        except EigenEstimateError as exc:
            flags.append(f"tightness check inconclusive: {exc}")
        else:
            if abs(lo - obj.ell) > 0.01 * obj.ell or abs(hi - obj.lip) > 0.01 * obj.lip:
                flags.append(
                    f"declared ell/lip loose: spectrum spans [{lo:.6g}, {hi:.6g}], "
                    f"declared [{obj.ell:.6g}, {obj.lip:.6g}]"
                )

    return CertificateReport(
        method=family,
        variant=trace.method,
        c_value=c_value,
        c_common=c_common,
        tol_cert=tol,
        ell=obj.ell,
        lip=obj.lip,
        psis=psis,
        f_gaps=np.asarray(f_gaps, dtype=float),
        w_norm_sqs=w_norm_sqs,
        dist_sqs=dist_sqs,
        rhos=rhos,
        ratios=ratios,
        step_passes=step_passes,
        first_violation=first_fail(step_passes),
        common_first_violation=first_fail(common_passes),
        theorem1_bounds=theorem1_bounds,
        theorem1_ok=theorem1_ok,
        daniel_bounds=daniel_bounds,
        daniel_ok=daniel_ok,
        degenerate=degenerate,
        flags=flags,
    )


@dataclass
class IdentityReport:
    """Result of the CG exactness battery.

    max_violations maps check name to its worst normalized residual;
    first_failures to the first step index exceeding that check's
    tolerance (None when it never fails). min_weighted_bound_slack is the
    signed minimum of 2 f_gap / l - ||w||^2, nonnegative for exact CG.
    """

    tol_id: float
    n: int
    max_violations: dict
    first_failures: dict
    min_weighted_bound_slack: float
    ok: bool

    def summary(self) -> dict:
        return {
            "iterates": self.n,
            "tol_id": self.tol_id,
            "ok": self.ok,
            "max_violations": {k: float(v) for k, v in self.max_violations.items()},
            "first_failures": dict(self.first_failures),
            "min_weighted_bound_slack": self.min_weighted_bound_slack,
        }

    def to_json(self) -> str:
        return render_json(self.summary())

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")


def hs_identity_battery(trace, obj, truth=None, *, tol_id: float = 1e-8) -> IdentityReport:
    """Exact-arithmetic CG identities, checked in floating point.

    Per step (F_k = 2 (f(x_k) - f*); scalars from the trace itself):

      gap_drop        F_k - F_{k+1} = alpha_{k+1} ||r_k||^2
      dist_drop       ||x_k - x*||^2 - ||x_{k+1} - x*||^2
                        = (F_k + F_{k+1}) ||p_{k+1}||^2 / (p_{k+1}' A p_{k+1})
      dist_split      ||x_k - x*||^2 - ||w_k||^2 = F_k^2 ||p_k||^2 / ||r_{k-1}||^4   (k >= 1)
      potential_drop  ||w_{k+1}||^2 - ||w_k||^2 = -F_k^2 / ||r_k||^2                 (k >= 1)
      weighted_bound  ||w_k||^2 <= F_k / l
      orth            p_k' r_k = 0
      step_rayleigh   l <= 1/alpha_k <= L

    p' A p is taken as ||r_k||^2 / alpha_{k+1}, the recurrence's own value.
    Differences of squares are evaluated as (u - v).(u + v) so comparisons
    are not dominated by cancellation; equality residuals are normalized by
    max(|lhs|, |rhs|, roundoff floor) and compared against tol_id. orth and
    step_rayleigh use the fixed module thresholds, weighted_bound the
    one-sided absolute slack.

    States past k = dim are out of scope: exact CG has terminated by then
    (r_dim = 0), every identity above degenerates to 0/0, and the
    floating-point continuation that does reach those states carries no
    digits for an equality check. The report's n is the states examined.
    """
    if _METHOD_FAMILY.get(trace.method) != "cg":
        raise ValueError(f"identity battery applies to CG traces, got {trace.method!r}")
    obj = _with_truth(obj, truth)

    # Exact gaps here: the equalities are tight enough that the recurred
    # residual's drift would register as spurious violations.
    report = certify(trace, obj, recompute_gaps=True)
    n = min(len(report), obj.dim + 1)
    f2 = 2.0 * report.f_gaps[:n]
    alphas = trace.alphas[:n]
    prev_sqs = trace.prev_res_sqs[:n]
    ss = trace.ss[:n]
    d = trace.xs[:n] - obj.minimizer[None, :]
    w = d + report.rhos[:n, None] * ss
    p_clean = np.nan_to_num(trace.ps[:n])
    p_sqs = np.einsum("ij,ij->i", p_clean, p_clean)

    eps = 2.0**-52 * obj.dim
    floor_f = eps * max(f2[0], 1e-300)
    floor_d = eps * max(report.dist_sqs[0], 1e-300)

    max_violations = {}
    first_failures = {}

    def record(name, lhs, rhs, floor, offset):
        lhs = np.asarray(lhs, dtype=float)
        rhs = np.asarray(rhs, dtype=float)
        scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), floor)
        v = np.abs(lhs - rhs) / scale
        max_violations[name] = float(v.max()) if v.size else 0.0
        bad = np.flatnonzero(v > tol_id)
        first_failures[name] = int(bad[0]) + offset if bad.size else None

    if n >= 2:
        a_next = alphas[1:]
        res_sq = prev_sqs[1:]
        record("gap_drop", f2[:-1] - f2[1:], a_next * res_sq, floor_f, 0)
        lhs_dist = -np.einsum("ij,ij->i", ss[1:], d[:-1] + d[1:])
        record("dist_drop", lhs_dist, (f2[:-1] + f2[1:]) * p_sqs[1:] * a_next / res_sq, floor_d, 0)

        dk = d[1:]
        wk = w[1:]
        lhs_split = np.einsum("ij,ij->i", dk - wk, dk + wk)
        record("dist_split", lhs_split, f2[1:] ** 2 * p_sqs[1:] / prev_sqs[1:] ** 2, floor_d, 1)
    else:
        for name in ("gap_drop", "dist_drop", "dist_split"):
            max_violations[name] = 0.0
            first_failures[name] = None

    if n >= 3:
        wk = w[1:-1]
        wn = w[2:]
        lhs_drop = np.einsum("ij,ij->i", wn - wk, wn + wk)
        record("potential_drop", lhs_drop, -(f2[1:-1] ** 2) / prev_sqs[2:], floor_d, 1)
    else:
        max_violations["potential_drop"] = 0.0
        first_failures["potential_drop"] = None

    w_sqs = np.einsum("ij,ij->i", w, w)
    slack = f2 / obj.ell - w_sqs
    min_slack = float(slack.min()) if slack.size else 0.0
    max_violations["weighted_bound"] = max(0.0, -min_slack)
    bad = np.flatnonzero(slack < -WEIGHTED_BOUND_SLACK)
    first_failures["weighted_bound"] = int(bad[0]) if bad.size else None

    if n >= 2 and trace.rs is not None:
        pr = np.abs(np.einsum("ij,ij->i", p_clean[1:], trace.rs[1:n]))
        limit = np.sqrt(p_sqs[1:]) * trace.r0_norm
        v = pr / np.maximum(limit, 1e-300)
        max_violations["orth"] = float(v.max()) if v.size else 0.0
        bad = np.flatnonzero(v > ORTH_TOL)
        first_failures["orth"] = int(bad[0]) + 1 if bad.size else None
    else:
        max_violations["orth"] = 0.0
        first_failures["orth"] = None

    if n >= 2:
        inv_alpha = 1.0 / alphas[1:]
        out_low = np.maximum(0.0, (obj.ell * (1.0 - RQ_SLACK) - inv_alpha) / obj.ell)
        out_high = np.maximum(0.0, (inv_alpha - obj.lip * (1.0 + RQ_SLACK)) / obj.lip)
        v = np.maximum(out_low, out_high)
        max_violations["step_rayleigh"] = float(v.max()) if v.size else 0.0
        bad = np.flatnonzero(v > 0.0)
        first_failures["step_rayleigh"] = int(bad[0]) + 1 if bad.size else None
    else:
        max_violations["step_rayleigh"] = 0.0
        first_failures["step_rayleigh"] = None

    tolerated = {
        "gap_drop": tol_id,
        "dist_drop": tol_id,
        "dist_split": tol_id,
        "potential_drop": tol_id,
        "weighted_bound": WEIGHTED_BOUND_SLACK,
        "orth": ORTH_TOL,
        "step_rayleigh": 0.0,
    }
    ok = all(max_violations[name] <= tolerated[name] for name in tolerated)
    return IdentityReport(
        tol_id=tol_id,
        n=n,
        max_violations=max_violations,
        first_failures=first_failures,
        min_weighted_bound_slack=min_slack,
        ok=ok,
    )


def rho_optimality_check(trace, obj, *, tol: float = 1e-8):
    """Max normalized |w_k . s_k| over k >= 1; the CG weight should zero it.

    Returns (max_violation, ok). Normalization is ||s_k|| ||x_0 - x*||, so
    a stagnant step (s_k = 0) holds vacuously.
    """
    report = certify(trace, obj, recompute_gaps=True)
    if len(report) < 2:
        return 0.0, True
    ss = trace.ss
    d = trace.xs - obj.minimizer[None, :]
    w = d + report.rhos[:, None] * ss
    dots = np.abs(np.einsum("ij,ij->i", w[1:], ss[1:]))
    s_norms = np.sqrt(np.einsum("ij,ij->i", ss[1:], ss[1:]))
    dist0 = math.sqrt(float(report.dist_sqs[0]))
    v = dots / np.maximum(s_norms * dist0, 1e-300)
    worst = float(v.max())
    return worst, worst <= tol
