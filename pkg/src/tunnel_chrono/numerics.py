"""Numerical kernels shared by the physics modules.

Differentiation, quadrature, bracketed root finding and a damped
least-squares (Levenberg-Marquardt) fitter. Everything here is a pure
function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from tunnel_chrono.errors import (
    BracketError,
    DegenerateFitError,
    EvaluationError,
    NonConvergenceError,
    ToleranceError,
    ValidationError,
)

_EPS = np.finfo(float).eps


def _finite(value, where):
    if not np.all(np.isfinite(value)):
        raise EvaluationError(f"non-finite function value at {where}")
    return value


def default_step(x: float) -> float:
    return 1e-4 * max(abs(x), 1.0)


def derivative(f: Callable[[float], float], x: float, scale: float | None = None) -> float:
    """Central difference with one Richardson extrapolation level.

    Combines the stencils of width ``scale`` and ``scale / 2`` so the
    leading h**2 error cancels; exact for cubics up to rounding.

    Args:
        f: scalar function, evaluable on ``[x - scale, x + scale]``.
        x: evaluation point.
        scale: outer half-step; defaults to ``1e-4 * max(|x|, 1)``.
    """
    h = default_step(x) if scale is None else float(scale)
    if not h > 0:
        raise ValidationError("derivative step must be positive")
    fp, fm = _finite(f(x + h), x + h), _finite(f(x - h), x - h)
    fp2, fm2 = _finite(f(x + h / 2), x + h / 2), _finite(f(x - h / 2), x - h / 2)
    coarse = (fp - fm) / (2 * h)
    fine = (fp2 - fm2) / h
    return (4.0 * fine - coarse) / 3.0


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    rel_tol: float = 0.0,
    max_depth: int = 50,
) -> float:
    """Adaptive composite Simpson quadrature of ``f`` over ``[a, b]``.

    The error target is ``tol + rel_tol * |I|``, split between subintervals
    as they are bisected. Raises :class:`ToleranceError` (carrying the best
    estimate) if some subinterval still fails at ``max_depth``.
    """
    if not a < b:
        raise ValidationError(f"integrate needs a < b, got a={a}, b={b}")
    if not tol > 0:
        raise ValidationError("tol must be positive")

    def ev(x):
        return float(_finite(f(x), x))

    fa, fm, fb = ev(a), ev(0.5 * (a + b)), ev(b)
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    budget = tol + rel_tol * abs(whole)
    total = 0.0
    failed = False
    # (a, b, fa, fm, fb, simpson estimate, error budget, depth)
    stack = [(a, b, fa, fm, fb, whole, budget, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        flm, frm = ev(0.5 * (lo + mid)), ev(0.5 * (mid + hi))
        left = (mid - lo) / 6.0 * (flo + 4 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4 * frm + fhi)
        delta = left + right - est
        if abs(delta) <= 15.0 * eps or depth >= max_depth:
            if abs(delta) > 15.0 * eps:
                failed = True
            total += left + right + delta / 15.0
        else:
            stack.append((lo, mid, flo, flm, fmid, left, eps / 2, depth + 1))
            stack.append((mid, hi, fmid, frm, fhi, right, eps / 2, depth + 1))
    if failed:
        raise ToleranceError(f"integrate: tolerance {tol} not reached at depth {max_depth}", total)
    return total


def find_root(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Root of ``f`` inside a sign-changing bracket ``[lo, hi]``.

    Brent's method (bisection safeguarded inverse interpolation); the result
    never leaves the bracket.
    """
    flo, fhi = float(_finite(f(lo), lo)), float(_finite(f(hi), hi))
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo:.3g}, {fhi:.3g}")
    root = brentq(f, lo, hi, xtol=tol * 1e-3, rtol=max(tol, 4 * _EPS), maxiter=500)
    return min(max(root, min(lo, hi)), max(lo, hi))


@dataclass
class FitResult:
    """Outcome of :func:`fit_curve`.

    ``condition`` is the condition number of the column-scaled normal
    matrix at the solution; :attr:`near_singular` flags parameters the data
    cannot identify.
    """

    params: np.ndarray
    residual_norm: float
    covariance: np.ndarray
    converged: bool
    iterations: int
    condition: float = field(default=1.0)

    @property
    def near_singular(self) -> bool:
        return not self.condition < 1e12

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def _jacobian(residuals, p, r0):
    jac = np.empty((r0.size, p.size))
    for i in range(p.size):
        h = 1e-6 * max(abs(p[i]), 1e-6)
        up, dn = p.copy(), p.copy()
        up[i] += h
        dn[i] -= h
        jac[:, i] = (residuals(up) - residuals(dn)) / (2 * h)
    return jac


def fit_curve(
    model: Callable[[np.ndarray, np.ndarray], np.ndarray],
    initial: Sequence[float],
    data: Sequence[tuple[float, float, float]],
    max_iter: int = 200,
    xtol: float = 1e-10,
    ftol: float = 1e-10,
) -> FitResult:
    """Levenberg-Marquardt minimisation of weighted squared residuals.

    Args:
        model: ``model(params, inputs) -> predictions``, vectorised over an
            array of inputs.
        initial: starting parameter vector.
        data: ``(input, target, weight)`` triples; the residual of a point is
            ``weight * (model - target)``.
        max_iter: iteration cap; exceeding it raises
            :class:`NonConvergenceError` carrying the best result.
        xtol, ftol: convergence requires both the relative step and the
            relative change of the squared residual below these.

    Returns:
        FitResult with covariance ``s^2 (J^T J)^-1`` where ``s^2`` is the
        residual variance per degree of freedom.
    """
    p = np.asarray(initial, dtype=float).copy()
    if not np.all(np.isfinite(p)):
        raise ValidationError("initial parameters must be finite")
    rows = np.asarray(data, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != 3:
        raise ValidationError("data must be a sequence of (input, target, weight) triples")
    if rows.shape[0] < p.size:
        raise ValidationError(f"{rows.shape[0]} data points cannot determine {p.size} parameters")
    xs, ys, ws = rows[:, 0], rows[:, 1], rows[:, 2]

    def residuals(params):
        pred = np.asarray(model(params, xs), dtype=float)
        return _finite(ws * (pred - ys), f"params={params}")

    r = residuals(p)
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    jac = None
    it = 0
    for it in range(1, max_iter + 1):
        jac = _jacobian(residuals, p, r)
        normal = jac.T @ jac
        grad = jac.T @ r
        scale = np.diag(normal).copy()
        if np.any(scale <= 0.0):
            if it == 1:
                raise DegenerateFitError("parameter with no influence on the residuals (zero Jacobian column)")
            # a parameter that lost its influence mid-fit stays put; near_singular reports it
            scale[scale <= 0.0] = max(scale.max(), 1.0) * _EPS
        if cost == 0.0 or not np.any(grad):
            converged = True
            break
        while True:
            try:
                step = np.linalg.solve(normal + lam * np.diag(scale), -grad)
            except np.linalg.LinAlgError as exc:
                raise DegenerateFitError("singular normal equations") from exc
            trial = p + step
            try:
                r_trial = residuals(trial)
            except EvaluationError:
                r_trial = None
            if r_trial is not None:
                with np.errstate(over="ignore"):
                    cost_trial = float(r_trial @ r_trial)  # inf rejects the step
            if r_trial is not None and cost_trial <= cost:
                lam = max(lam / 10.0, 1e-12)
                break
            lam *= 10.0
            if lam > 1e20:
                # no downhill step left at working precision
                converged = True
                break
        if converged:
            break
        rel_step = np.linalg.norm(step) / (np.linalg.norm(p) + _EPS)
        rel_cost = abs(cost - cost_trial) / max(cost, np.finfo(float).tiny)
        p, r, cost = trial, r_trial, cost_trial
        if (rel_step < xtol and rel_cost < ftol) or cost == 0.0:
            converged = True
            break

    jac = _jacobian(residuals, p, r)
    normal = jac.T @ jac
    col = np.sqrt(np.diag(normal))
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = normal / np.outer(col, col)
        condition = float(np.linalg.cond(scaled)) if np.all(col > 0) else math.inf
    dof = rows.shape[0] - p.size
    s2 = cost / dof if dof > 0 else 0.0
    covariance = s2 * np.linalg.pinv(normal)
    covariance = 0.5 * (covariance + covariance.T)
    result = FitResult(p, math.sqrt(cost), covariance, converged, it, condition)
    if not converged:
        raise NonConvergenceError(f"no convergence within {max_iter} iterations", result)
    return result
