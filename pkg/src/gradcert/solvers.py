"""First-order iterations for smooth strongly convex minimization.

Three interchangeable iterations over a shared per-step state:

* accelerated gradient with the constant momentum coefficient
  (sqrt(L) - sqrt(l)) / (sqrt(L) + sqrt(l)) (Nesterov's method for known
  conditioning),
* linear conjugate gradient in the classic Hestenes-Stiefel form (one
  matrix-vector product per step),
* a two-parameter scheme

      y_{k+1} = x_k + theta_k s_k
      x_{k+1} = x_k + nu_k s_k - pi_k grad f(y_{k+1})
      s_{k+1} = x_{k+1} - x_k

  that reproduces either of the above under the matching parameter
  schedule: theta = nu = momentum coefficient and pi = 1/L for accelerated
  gradient; theta = 0, nu_k = alpha_{k+1} beta_{k+1} / alpha_k and
  pi_k = alpha_{k+1} for CG. At k = 0 there is no displacement yet, so
  theta_0 = nu_0 = 0 and y_1 = x_0.

Runs record every iterate together with the scalars the algorithm itself
computed (CG step sizes, residual norms), which is what the certificate and
identity machinery downstream consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotPositiveDefiniteError, ScheduleContractError
from .objective import QuadraticObjective

METHODS = ("ag", "cg_classic", "cg_unified", "ag_unified")

# Residual floor, relative to ||r_0||, below which CG reports convergence
# instead of dividing by a vanishing curvature estimate.
CG_CONVERGED_REL = 1e-15


@dataclass
class SolverState:
    """One iterate with everything the step that produced it computed.

    Index-k conventions: s = x_k - x_{k-1} (None at k=0); y and grad_y are
    the extrapolation point that produced x_k and its gradient (None at k=0
    and on CG paths, where y_k = x_{k-1}); r, p, alpha, beta, prev_res_sq
    are the CG residual, direction, and scalars (prev_res_sq = ||r_{k-1}||^2),
    None where not applicable. r0_norm is carried along for the convergence
    threshold.
    """

    k: int
    x: np.ndarray
    s: np.ndarray | None = None
    y: np.ndarray | None = None
    grad_y: np.ndarray | None = None
    r: np.ndarray | None = None
    p: np.ndarray | None = None
    alpha: float | None = None
    beta: float | None = None
    prev_res_sq: float | None = None
    r0_norm: float | None = None


def initial_state(obj, x0, *, cg: bool = False) -> SolverState:
    """State at k = 0. CG paths compute r_0 = b - A x_0 here."""
    x0 = obj._check_vector(x0, "x0")
    if cg:
        r0 = obj.residual(x0)
        return SolverState(k=0, x=x0.copy(), r=r0, r0_norm=float(np.linalg.norm(r0)))
    return SolverState(k=0, x=x0.copy())


@dataclass
class ScheduleParams:
    """Per-step parameters of the two-parameter scheme.

    rho_next is the potential weight rho_{k+1} when the schedule knows it
    (the accelerated schedule does; the CG weight depends on run quantities
    and is left to the potential engine). degenerate marks the sanctioned
    gradient-descent fallback for lip == ell.
    """

    theta: float
    nu: float
    pi: float
    rho_next: float | None = None
    degenerate: bool = False

    def validate(self, k: int) -> None:
        ok = self.nu >= self.theta >= 0.0 and self.pi > 0.0
        if ok and k >= 1 and not self.degenerate:
            ok = self.nu > 0.0
        if not ok:
            raise ScheduleContractError(
                f"step {k}: schedule (theta={self.theta}, nu={self.nu}, pi={self.pi}) "
                "violates nu >= theta >= 0, pi > 0 (nu > 0 for k >= 1)"
            )


def momentum_coefficient(ell: float, lip: float) -> float:
    return (math.sqrt(lip) - math.sqrt(ell)) / (math.sqrt(lip) + math.sqrt(ell))


def ag_schedule(obj, k: int) -> ScheduleParams:
    """Accelerated-gradient schedule at step k.

    theta = nu = (sqrt(L) - sqrt(l)) / (sqrt(L) + sqrt(l)) from step 1 on
    (zero at step 0), pi = 1/L always. lip == ell collapses to gradient
    descent with unit-over-L steps, flagged degenerate.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if obj.lip == obj.ell:
        return ScheduleParams(theta=0.0, nu=0.0, pi=1.0 / obj.lip, rho_next=0.0, degenerate=True)
    coeff = 0.0 if k == 0 else momentum_coefficient(obj.ell, obj.lip)
    rho_next = math.sqrt(obj.lip / obj.ell) - 1.0
    return ScheduleParams(theta=coeff, nu=coeff, pi=1.0 / obj.lip, rho_next=rho_next)


def _cg_advance(obj, state: SolverState):
    """CG scalars and direction for the step leaving `state`.

    Returns (beta_next, p_next, ap, pap, alpha_next), or None when the
    residual is already at the convergence floor. One matvec.
    """
    r = state.r
    res_sq = float(r @ r)
    threshold = (CG_CONVERGED_REL * state.r0_norm) ** 2
    if res_sq <= threshold:
        return None
    if state.k == 0:
        beta_next = 0.0
        p_next = r.copy()
    else:
        if state.prev_res_sq is None or state.p is None:
            raise ValueError(f"state at k={state.k} lacks CG bookkeeping (p, prev_res_sq)")
        beta_next = res_sq / state.prev_res_sq
        p_next = beta_next * state.p + r
    ap = obj.matrix @ p_next
    pap = float(p_next @ ap)
    if pap <= 0.0:
        raise NotPositiveDefiniteError(
            f"direction curvature p'Ap = {pap:g} is not positive at step {state.k}"
        )
    alpha_next = res_sq / pap
    return beta_next, p_next, ap, pap, alpha_next


def cg_step(obj, state: SolverState) -> SolverState | None:
    """One Hestenes-Stiefel CG step; None signals convergence (no step).

    beta_{k+1} = ||r_k||^2 / ||r_{k-1}||^2 (beta_1 = 0),
    p_{k+1} = beta_{k+1} p_k + r_k,
    alpha_{k+1} = ||r_k||^2 / p_{k+1}' A p_{k+1},
    x_{k+1} = x_k + alpha_{k+1} p_{k+1},
    r_{k+1} = r_k - alpha_{k+1} A p_{k+1}.
    """
    if not isinstance(obj, QuadraticObjective):
        raise TypeError("cg_step applies to quadratic objectives only")
    if state.r is None:
        raise ValueError("state has no residual; was it created with initial_state(..., cg=True)?")
    adv = _cg_advance(obj, state)
    if adv is None:
        return None
    beta_next, p_next, ap, _, alpha_next = adv
    res_sq = float(state.r @ state.r)
    x_next = state.x + alpha_next * p_next
    s_next = x_next - state.x
    r_next = state.r - alpha_next * ap
    return SolverState(
        k=state.k + 1,
        x=x_next,
        s=s_next,
        r=r_next,
        p=p_next,
        alpha=alpha_next,
        beta=beta_next,
        prev_res_sq=res_sq,
        r0_norm=state.r0_norm,
    )


def cg_schedule(obj, state: SolverState) -> ScheduleParams:
    """CG expressed in the two-parameter scheme, at the step leaving `state`.

    theta_k = 0, pi_k = alpha_{k+1}, nu_k = alpha_{k+1} beta_{k+1} / alpha_k
    (nu_0 = 0). rho_next is left to the potential engine. Costs the step's
    matvec; returns None at the convergence floor.
    """
    adv = _cg_advance(obj, state)
    if adv is None:
        return None
    beta_next, _, _, _, alpha_next = adv
    nu = 0.0 if state.k == 0 else alpha_next * beta_next / state.alpha
    return ScheduleParams(theta=0.0, nu=nu, pi=alpha_next)


def ag_step(obj, state: SolverState) -> SolverState:
    """One accelerated-gradient step in its direct form.

    y_{k+1} = x_k + theta_k s_k (y_1 = x_0), then a 1/L gradient step from
    y_{k+1}.
    """
    params = ag_schedule(obj, state.k)
    if state.k == 0 or state.s is None:
        y = state.x.copy()
    else:
        y = state.x + params.theta * state.s
    g = obj.grad(y)
    x_next = y - g / obj.lip
    s_next = x_next - state.x
    return SolverState(k=state.k + 1, x=x_next, s=s_next, y=y, grad_y=g)


def unified_step(obj, state: SolverState, params: ScheduleParams, grad_y=None) -> SolverState:
    """One step of the two-parameter scheme under explicit parameters.

    Enforces the sign constraints (nu >= theta >= 0, pi > 0, nu > 0 past
    step 0) before moving. grad_y overrides the gradient at the
    extrapolation point; CG passes its recurred -r_k here so the update is
    the algorithm's own quantity rather than a fresh evaluation.
    """
    params.validate(state.k)
    if state.k == 0 or state.s is None:
        if params.theta != 0.0 or params.nu != 0.0:
            raise ScheduleContractError("step 0 requires theta = nu = 0 (no displacement yet)")
        y = state.x.copy()
        g = obj.grad(y) if grad_y is None else grad_y
        x_next = state.x - params.pi * g
    else:
        y = state.x + params.theta * state.s
        g = obj.grad(y) if grad_y is None else grad_y
        x_next = state.x + params.nu * state.s - params.pi * g
    s_next = x_next - state.x
    return SolverState(k=state.k + 1, x=x_next, s=s_next, y=y, grad_y=g)


@dataclass
class Trace:
    """Column-stacked record of a run.

    xs[k], ss[k] are x_k and s_k (ss[0] is a zero row standing in for the
    undefined s_0). CG columns (alphas, betas, prev_res_sqs, rs, ps) and
    transient columns (ys, grad_ys) are None on paths that do not produce
    them; per-row gaps inside a present column are nan. f_gaps holds the
    stop check's f(x_k) - f* (nan without ground truth; on CG paths it is
    computed from the recurred residual, see drift_checks for how far that
    residual strayed from the true one). state(k) rebuilds the SolverState
    view of row k.
    """

    method: str
    xs: np.ndarray
    ss: np.ndarray
    alphas: np.ndarray | None = None
    betas: np.ndarray | None = None
    prev_res_sqs: np.ndarray | None = None
    rs: np.ndarray | None = None
    ps: np.ndarray | None = None
    ys: np.ndarray | None = None
    grad_ys: np.ndarray | None = None
    f_gaps: np.ndarray | None = None
    r0_norm: float | None = None
    stop_reason: str = "max_iters"
    drift_checks: list = field(default_factory=list)

    def __len__(self):
        return self.xs.shape[0]

    def _row(self, col, k, vector=False):
        if col is None:
            return None
        v = col[k]
        if vector:
            return None if np.all(np.isnan(v)) else v
        return None if np.isnan(v) else float(v)

    def state(self, k: int) -> SolverState:
        n = len(self)
        if not -n <= k < n:
            raise IndexError(f"state index {k} out of range for trace of length {n}")
        k = k % n
        return SolverState(
            k=k,
            x=self.xs[k],
            s=None if k == 0 else self.ss[k],
            y=self._row(self.ys, k, vector=True),
            grad_y=self._row(self.grad_ys, k, vector=True),
            r=self._row(self.rs, k, vector=True),
            p=self._row(self.ps, k, vector=True),
            alpha=self._row(self.alphas, k),
            beta=self._row(self.betas, k),
            prev_res_sq=self._row(self.prev_res_sqs, k),
            r0_norm=self.r0_norm,
        )

    def __iter__(self):
        return (self.state(k) for k in range(len(self)))


def conjugacy_drift(trace: Trace, obj) -> float:
    """Worst loss of A-orthogonality between consecutive CG directions.

    Returns max over k of |p_k' A p_{k+1}| normalized by the A-norms of the
    two directions; 0 for traces with fewer than two directions. Exact CG
    keeps this at roundoff level, so growth flags a drifting recurrence.
    """
    if trace.ps is None:
        raise ValueError("trace has no search directions")
    n = len(trace)
    if n < 3:
        return 0.0
    p = np.nan_to_num(trace.ps[1:])
    ap = p @ obj.matrix
    a_norm_sq = np.einsum("ij,ij->i", p, ap)
    cross = np.einsum("ij,ij->i", p[:-1], ap[1:])
    denom = np.sqrt(np.maximum(a_norm_sq[:-1] * a_norm_sq[1:], 1e-300))
    return float(np.max(np.abs(cross) / denom))


def run(obj, method: str, x0, max_iters: int, stop_gap: float, *, record_transients: bool = True) -> Trace:
    """Run a solver and record the full per-iterate trace.

    Stops at the first of: max_iters steps taken; f(x_k) - f* <= stop_gap
    (when ground truth is attached; otherwise ||grad f(x_k)|| <=
    stop_gap * ||grad f(x_0)||); the CG convergence floor. Breakdown inside
    a step truncates the trace and is recorded in stop_reason rather than
    raised. record_transients=False drops the ys/grad_ys columns of
    accelerated runs (long runs, memory).
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    x0 = obj._check_vector(x0, "x0")
    is_cg = method in ("cg_classic", "cg_unified")
    if is_cg and not isinstance(obj, QuadraticObjective):
        raise TypeError(f"{method} applies to quadratic objectives only")

    # The stop check returns (done, gap). gap is recorded in the trace so
    # certification can reuse it instead of re-evaluating the objective on
    # every stored iterate; it is nan when no ground truth is attached and
    # stopping falls back to the relative gradient norm.
    have_truth = obj.min_value is not None and obj.minimizer is not None
    if have_truth:
        x_star = obj.minimizer
        if isinstance(obj, QuadraticObjective):
            a_mat = obj.matrix

            def stopped(x, r=None):
                d = x - x_star
                # With the recurred residual, A(x - x*) = -r up to drift,
                # so the gap -d'r/2 costs no extra matvec.
                gap = -0.5 * float(d @ r) if r is not None else 0.5 * float(d @ (a_mat @ d))
                return gap <= stop_gap, gap
        else:

            def stopped(x, r=None):
                gap = obj.f_gap(x)
                return gap <= stop_gap, gap
    else:
        g0_norm = float(np.linalg.norm(obj.grad(x0)))

        def stopped(x, r=None):
            g = -r if r is not None else obj.grad(x)
            return float(np.linalg.norm(g)) <= stop_gap * g0_norm, math.nan

    if is_cg:
        return _run_cg(obj, method, x0, max_iters, stopped)
    return _run_ag(obj, method, x0, max_iters, stopped, record_transients)


def _run_ag(obj, method, x0, max_iters, stopped, record_transients):
    theta_params = ag_schedule(obj, 1)
    theta = theta_params.theta
    nu = theta_params.nu
    pi = theta_params.pi
    inv_lip = 1.0 / obj.lip
    unified = method == "ag_unified"

    x = x0.copy()
    s = None
    xs = [x]
    ss = [np.zeros_like(x)]
    ys = [None]
    gys = [None]
    stop_reason = "max_iters"
    done, gap = stopped(x)
    gaps = [gap]
    if done:
        stop_reason = "gap"
    else:
        for _ in range(max_iters):
            y = x.copy() if s is None else x + theta * s
            g = obj.grad(y)
            if unified:
                x_next = x - pi * g if s is None else x + nu * s - pi * g
            else:
                x_next = y - g * inv_lip
            s = x_next - x
            x = x_next
            xs.append(x)
            ss.append(s)
            if record_transients:
                ys.append(y)
                gys.append(g)
            done, gap = stopped(x)
            gaps.append(gap)
            if done:
                stop_reason = "gap"
                break

    n = len(xs)
    dim = x0.shape[0]
    trace = Trace(
        method=method,
        xs=np.vstack(xs),
        ss=np.vstack(ss),
        f_gaps=np.array(gaps),
        stop_reason=stop_reason,
    )
    if record_transients:
        y_col = np.full((n, dim), np.nan)
        g_col = np.full((n, dim), np.nan)
        for k in range(1, n):
            y_col[k] = ys[k]
            g_col[k] = gys[k]
        trace.ys = y_col
        trace.grad_ys = g_col
    return trace


def _run_cg(obj, method, x0, max_iters, stopped, matvec=None):
    a_mat = obj.matrix
    if matvec is None:
        matvec = lambda v: a_mat @ v  # noqa: E731
    unified = method == "cg_unified"

    x = x0.copy()
    # The initial residual is always exact; an injected matvec (noise
    # studies) replaces only the one product inside each step.
    r = obj.rhs - a_mat @ x0
    r0_norm = float(np.linalg.norm(r))
    threshold = (CG_CONVERGED_REL * r0_norm) ** 2
    res_sq = float(r @ r)

    xs = [x]
    ss = [np.zeros_like(x)]
    rs = [r]
    ps = [None]
    alphas = [np.nan]
    betas = [np.nan]
    prev_sqs = [np.nan]
    drift_checks = []
    stop_reason = "max_iters"
    p = None
    alpha = None
    s = None

    done, gap = stopped(x, r)
    gaps = [gap]
    if done:
        stop_reason = "gap"
    else:
        for k in range(max_iters):
            if res_sq <= threshold:
                stop_reason = "converged"
                break
            if k == 0:
                beta_next = 0.0
                p = r.copy()
            else:
                beta_next = res_sq / prev_sqs_last
                p = beta_next * p + r
            ap = matvec(p)
            pap = float(p @ ap)
            if pap <= 0.0:
                stop_reason = "not_positive_definite"
                break
            alpha_next = res_sq / pap
            if unified:
                nu = 0.0 if k == 0 else alpha_next * beta_next / alpha
                if s is None:
                    x_next = x + alpha_next * r
                else:
                    x_next = x + nu * s + alpha_next * r
            else:
                x_next = x + alpha_next * p
            s = x_next - x
            r = r - alpha_next * ap
            prev_sqs_last = res_sq
            res_sq = float(r @ r)
            alpha = alpha_next
            x = x_next

            xs.append(x)
            ss.append(s)
            rs.append(r)
            ps.append(p)
            alphas.append(alpha_next)
            betas.append(beta_next)
            prev_sqs.append(prev_sqs_last)
            if (k + 1) % 10 == 0:
                true_r = obj.rhs - obj.matrix @ x
                drift_checks.append((k + 1, float(np.linalg.norm(r - true_r))))
            done, gap = stopped(x, r)
            gaps.append(gap)
            if done:
                stop_reason = "gap"
                break

    n = len(xs)
    dim = x0.shape[0]
    p_col = np.full((n, dim), np.nan)
    for k in range(1, n):
        p_col[k] = ps[k]
    return Trace(
        method=method,
        xs=np.vstack(xs),
        ss=np.vstack(ss),
        rs=np.vstack(rs),
        ps=p_col,
        alphas=np.array(alphas),
        betas=np.array(betas),
        prev_res_sqs=np.array(prev_sqs),
        f_gaps=np.array(gaps[: n]),
        r0_norm=r0_norm,
        stop_reason=stop_reason,
        drift_checks=drift_checks,
    )
