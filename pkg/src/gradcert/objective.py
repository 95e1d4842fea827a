"""Smooth strongly convex objectives and their analytic sanity checks.

Two concrete families: convex quadratics f(x) = x'Ax/2 - b'x with symmetric
positive definite A, and l2-regularized logistic loss. Both expose curvature
bounds (ell, lip) such that

    ell/2 ||x - y||^2  <=  f(y) - f(x) - grad f(x)'(y - x)  <=  lip/2 ||x - y||^2

for all x, y, which is everything the solvers and certificates assume.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import MissingGroundTruthError, NotPositiveDefiniteError
from .linalg import spectral_norm_sq


class Objective:
    """Base class: curvature bounds plus optional ground truth.

    minimizer / min_value are None until attached; with_minimizer returns a
    copy carrying them. Instances are treated as immutable after construction.
    """

    def __init__(self, dim, ell, lip, minimizer=None, min_value=None):
        if int(dim) < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        if not (0.0 < ell <= lip):
            raise ValueError(f"need 0 < ell <= lip, got ell={ell}, lip={lip}")
        self.dim = int(dim)
        self.ell = float(ell)
        self.lip = float(lip)
        if minimizer is not None:
            minimizer = self._check_vector(minimizer, "minimizer")
            minimizer = minimizer.copy()
            minimizer.setflags(write=False)
        self.minimizer = minimizer
        self.min_value = None if min_value is None else float(min_value)

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def f_gap(self, x):
        """f(x) - f(x*); requires ground truth."""
        if self.min_value is None:
            raise MissingGroundTruthError("objective has no min_value attached")
        return float(self.value(x) - self.min_value)

    def f_gap_many(self, xs):
        """f_gap row-wise over an (n, dim) array of points."""
        if self.min_value is None:
            raise MissingGroundTruthError("objective has no min_value attached")
        xs = np.asarray(xs, dtype=float)
        return np.array([self.value(x) for x in xs]) - self.min_value

    def descent_amount(self, y):
        """f(y) - f(y - grad f(y)/lip), the progress of one gradient step."""
        g = self.grad(y)
        return float(self.value(y) - self.value(y - g / self.lip))

    def with_minimizer(self, x_star, f_star):
        raise NotImplementedError

    def _check_vector(self, x, name="x"):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"{name} has shape {x.shape}, expected ({self.dim},)")
        return x


class QuadraticObjective(Objective):
    """f(x) = x'Ax/2 - b'x with A symmetric positive definite.

    The constructor symmetrizes A after checking the asymmetry is at roundoff
    level, and rejects matrices that fail a Cholesky factorization. ell and
    lip are declared curvature bounds (for generated problems, the exact
    extreme eigenvalues).
    """

    def __init__(self, matrix, rhs, ell, lip, minimizer=None, min_value=None):
        a = np.array(matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"matrix must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix has non-finite entries")
        scale = float(np.max(np.abs(a))) if a.size else 0.0
        asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
        if asym > 1e-12 * max(scale, 1e-300):
            raise ValueError(
                f"matrix is not symmetric: max|A - A'| = {asym:g} exceeds 1e-12 * max|A| = {1e-12 * scale:g}"
            )
        a = (a + a.T) / 2.0
        try:
            np.linalg.cholesky(a)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError("matrix is not positive definite") from exc
        super().__init__(a.shape[0], ell, lip, minimizer, min_value)
        b = self._check_vector(rhs, "rhs").copy()
        a.setflags(write=False)
        b.setflags(write=False)
        self.matrix = a
        self.rhs = b

    def value(self, x):
        x = self._check_vector(x)
        return float(0.5 * x @ (self.matrix @ x) - self.rhs @ x)

    def grad(self, x):
        x = self._check_vector(x)
        return self.matrix @ x - self.rhs

    def residual(self, x):
        """r = b - Ax = -grad f(x)."""
        x = self._check_vector(x)
        return self.rhs - self.matrix @ x

    def hessian(self, x=None):
        return self.matrix

    def f_gap(self, x):
        # With the minimizer in hand, 0.5 d'Ad (d = x - x*) equals f(x) - f*
        # up to the reference solve's residual and does not cancel
        # catastrophically near x*.
        if self.minimizer is None:
            return super().f_gap(x)
        d = self._check_vector(x) - self.minimizer
        return float(0.5 * d @ (self.matrix @ d))

    def f_gap_many(self, xs):
        if self.minimizer is None:
            return super().f_gap_many(xs)
        d = np.asarray(xs, dtype=float) - self.minimizer
        return 0.5 * np.einsum("ij,ij->i", d, d @ self.matrix)

    def descent_amount(self, y):
        # Exact quadratic expansion; no cancellation for small gradients.
        g = self.grad(y)
        return float((g @ g) / self.lip - (g @ (self.matrix @ g)) / (2.0 * self.lip**2))

    def with_minimizer(self, x_star, f_star):
        return QuadraticObjective(self.matrix, self.rhs, self.ell, self.lip, x_star, f_star)


class LogisticRidgeObjective(Objective):
    """f(x) = ridge/2 ||x||^2 + sum_i log(1 + exp(a_i'x)).

    Curvature bounds: ell = ridge exactly; lip = ridge + ||A||_2^2 / 4 with
    the squared spectral norm from power iteration (200 iterations or 1e-12
    relative change), inflated by 1e-9 relative so the estimate cannot
    undershoot the true Lipschitz constant.
    """

    def __init__(self, data_matrix, ridge, minimizer=None, min_value=None):
        data = np.array(data_matrix, dtype=float)
        if data.ndim != 2:
            raise ValueError(f"data_matrix must be 2-d, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("data_matrix has non-finite entries")
        ridge = float(ridge)
        if ridge <= 0.0:
            raise ValueError(f"ridge must be positive, got {ridge}")
        lip = ridge + spectral_norm_sq(data) * (1.0 + 1e-9) / 4.0
        super().__init__(data.shape[1], ridge, lip, minimizer, min_value)
        data.setflags(write=False)
        self.data_matrix = data
        self.ridge = ridge
        if self.minimizer is not None:
            self._t_star = data @ self.minimizer
            self._sig_star = expit(self._t_star)

    def value(self, x):
        x = self._check_vector(x)
        t = self.data_matrix @ x
        return float(0.5 * self.ridge * x @ x + np.sum(np.logaddexp(0.0, t)))

    def grad(self, x):
        x = self._check_vector(x)
        t = self.data_matrix @ x
        return self.ridge * x + self.data_matrix.T @ expit(t)

    def hessian(self, x):
        x = self._check_vector(x)
        sig = expit(self.data_matrix @ x)
        weights = sig * (1.0 - sig)
        return self.ridge * np.eye(self.dim) + (self.data_matrix.T * weights) @ self.data_matrix

    def _gap_rows(self, xs):
        # Gap as a sum of per-sample softplus differences against x*,
        # driven by d = data (x - x*): sp(v+d) - sp(v) = log1p(sig(v)
        # expm1(d)). Every term scales with d, so the result keeps relative
        # accuracy near x* where value(x) - min_value loses all its digits.
        diff = xs - self.minimizer
        d = diff @ self.data_matrix.T
        sig = np.broadcast_to(self._sig_star, d.shape)
        t_star = np.broadcast_to(self._t_star, d.shape)
        terms = np.empty_like(d)
        small = np.abs(d) <= 30.0
        terms[small] = np.log1p(sig[small] * np.expm1(d[small]))
        big = ~small
        if np.any(big):
            # far from x* there is nothing to cancel; direct difference
            terms[big] = np.logaddexp(0.0, t_star[big] + d[big]) - np.logaddexp(
                0.0, t_star[big]
            )
        ridge_part = 0.5 * self.ridge * np.einsum("ij,ij->i", diff, xs + self.minimizer)
        return np.sum(terms, axis=1) + ridge_part

    def f_gap(self, x):
        if self.minimizer is None:
            return super().f_gap(x)
        x = self._check_vector(x)
        return float(self._gap_rows(x[None, :])[0])

    def f_gap_many(self, xs):
        xs = np.asarray(xs, dtype=float)
        if self.minimizer is not None:
            return self._gap_rows(xs)
        if self.min_value is None:
            raise MissingGroundTruthError("objective has no min_value attached")
        t = xs @ self.data_matrix.T
        values = 0.5 * self.ridge * np.einsum("ij,ij->i", xs, xs) + np.sum(np.logaddexp(0.0, t), axis=1)
        return values - self.min_value

    def with_minimizer(self, x_star, f_star):
        obj = LogisticRidgeObjective(self.data_matrix, self.ridge, x_star, f_star)
        # keep the already-computed lip rather than re-running power iteration
        obj.lip = self.lip
        return obj


@dataclass
class SandwichCheck:
    lower: float
    middle: float
    upper: float
    passed: bool


def validate_sandwich(obj, x, y, *, slack=1e-9):
    """Check the two-sided curvature inequality between a pair of points.

    lower = ell/2 ||x-y||^2, middle = f(y) - f(x) - grad f(x)'(y-x),
    upper = lip/2 ||x-y||^2; passes when lower <= middle <= upper up to
    `slack` relative to the largest of the three magnitudes.
    """
    x = obj._check_vector(x, "x")
    y = obj._check_vector(y, "y")
    diff = y - x
    dist_sq = float(diff @ diff)
    lower = 0.5 * obj.ell * dist_sq
    upper = 0.5 * obj.lip * dist_sq
    middle = float(obj.value(y) - obj.value(x) - obj.grad(x) @ diff)
    scale = max(abs(lower), abs(middle), abs(upper), 1e-300)
    passed = (lower - middle) <= slack * scale and (middle - upper) <= slack * scale
    return SandwichCheck(lower=lower, middle=middle, upper=upper, passed=passed)


@dataclass
class DescentCheck:
    decrease: float
    bound: float
    passed: bool


def check_descent_lemma(obj, y, *, slack=1e-9):
    """Verify f(y) - f(y - grad f(y)/lip) >= ||grad f(y)||^2 / (2 lip)."""
    y = obj._check_vector(y, "y")
    g = obj.grad(y)
    bound = float(g @ g) / (2.0 * obj.lip)
    decrease = obj.descent_amount(y)
    passed = (bound - decrease) <= slack * max(bound, abs(decrease), 1e-300)
    return DescentCheck(decrease=decrease, bound=bound, passed=passed)


def finite_difference_gradient(func, x, h=1e-6):
    """Central-difference gradient of a scalar function at x."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (func(x + e) - func(x - e)) / (2.0 * h)
    return g


def newton_reference_minimizer(obj, x0=None, *, tol_rel=1e-13, max_iters=100):
    """High-accuracy minimizer by damped Newton with dense solves.

    Runs until ||grad f(x)|| <= tol_rel * max(1, ||grad f(x0)||). Requires
    obj.hessian. Used as the reference run that defines ground truth for the
    non-quadratic family.
    """
    x = np.zeros(obj.dim) if x0 is None else obj._check_vector(x0, "x0").copy()
    g = obj.grad(x)
    target = tol_rel * max(1.0, float(np.linalg.norm(g)))
    fx = obj.value(x)
    for _ in range(max_iters):
        if float(np.linalg.norm(g)) <= target:
            break
        h = obj.hessian(x)
        step = np.linalg.solve(h, g)
        predicted = float(g @ step)
        if predicted <= 1e-13 * max(1.0, abs(fx)):
            # Decrease below value roundoff: backtracking would stall on
            # noise, while the full step is safe this close to x*.
            x_new = x - step
            f_new = obj.value(x_new)
        else:
            t = 1.0
            # Armijo backtracking; plain Newton can overshoot far from x*
            while True:
                x_new = x - t * step
                f_new = obj.value(x_new)
                if f_new <= fx - 1e-4 * t * predicted or t < 1e-12:
                    break
                t *= 0.5
        x, fx = x_new, f_new
        g = obj.grad(x)
    if float(np.linalg.norm(g)) > target:
        raise RuntimeError("Newton reference run did not reach its gradient tolerance")
    return x
