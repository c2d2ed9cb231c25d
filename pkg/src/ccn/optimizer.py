"""BFGS minimizer with a strong-Wolfe line search.

The objective is a callable mapping a flat parameter vector to a
``(value, gradient)`` pair.  Each iteration computes the quasi-Newton
direction d = -H g, finds a step satisfying both strong Wolfe conditions
via bracketing and cubic-interpolation zoom, and updates the inverse
Hessian approximation with the standard BFGS formula (H starts at the
identity).  Iteration stops when the relative decrease

    f_prev / f_curr - 1 <= eps_c

is reached (falling back to |f_prev - f_curr| <= eps_c if f_curr <= 0),
or when the iteration or line-search budgets run out.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import LinesearchError, OptimizerError, ValidationError

__all__ = ["OptimizerConfig", "MinimizeResult", "LinesearchResult",
           "minimize", "wolfe_linesearch"]

CONVERGED = "converged"
MAX_ITERS = "max_iters"
LINESEARCH_STALLED = "linesearch-stalled"


@dataclass
class OptimizerConfig:
    c1: float = 1e-6
    c2: float = 0.9
    eps_c: float = 1e-6
    max_iters: int = 2000
    max_linesearch: int = 50

    def __post_init__(self):
        if not (0.0 < self.c1 < self.c2 < 1.0):
            raise ValidationError("need 0 < c1 < c2 < 1")
        if self.eps_c <= 0.0:
            raise ValidationError("eps_c must be positive")
        if self.max_iters < 1 or self.max_linesearch < 1:
            raise ValidationError("iteration budgets must be >= 1")


@dataclass
class MinimizeResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    iterations: int
    status: str
    H: np.ndarray = None

    @property
    def converged(self):
        return self.status == CONVERGED


@dataclass
class LinesearchResult:
    step: float
    f: float
    g: np.ndarray
    evals: int


class _NonFinite(Exception):
    pass


def _eval(objective, x):
    f, g = objective(x)
    g = np.asarray(g, dtype=float)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise _NonFinite
    return float(f), g


def _cubic_step(a, fa, da, b, fb, db):
    # minimizer of the cubic interpolant through (a, fa, da), (b, fb, db);
    # nan-safe, caller clamps into the bracket
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0.0:
        return np.nan
    d2 = np.sqrt(disc)
    if b < a:
        d2 = -d2
    denom = db - da + 2.0 * d2
    if denom == 0.0:
        return np.nan
    return b - (b - a) * (db + d2 - d1) / denom


def wolfe_linesearch(objective, x, d, f0, g0, config):
    """Find a step s along d satisfying both strong Wolfe conditions.

    Requires a descent direction (g0 . d < 0).  Returns a LinesearchResult
    whose step satisfies

        f(x + s d) <= f0 + c1 s (g0 . d)
        |g(x + s d) . d| <= c2 |g0 . d|

    Raises LinesearchError when the evaluation budget is exhausted without
    such a step.
    """
    d = np.asarray(d, dtype=float)
    dg0 = float(g0 @ d)
    if not dg0 < 0.0:
        raise ValidationError("line search requires a descent direction (g0 . d < 0)")

    c1, c2 = config.c1, config.c2
    budget = config.max_linesearch
    evals = 0

    def phi(s):
        nonlocal evals
        evals += 1
        try:
            f, g = _eval(objective, x + s * d)
        except _NonFinite:
            raise OptimizerError(
                "non-finite objective or gradient during line search"
            ) from None
        return f, g, float(g @ d)

    def zoom(lo, flo, dlo, hi, fhi, dhi):
        nonlocal evals
        while evals < budget:
            s = _cubic_step(lo, flo, dlo, hi, fhi, dhi)
            width = hi - lo
            # safeguard: keep the trial strictly interior
            if not np.isfinite(s) or s <= min(lo, hi) + 0.05 * abs(width) \
                    or s >= max(lo, hi) - 0.05 * abs(width):
                s = lo + 0.5 * width
            fs, gs, dgs = phi(s)
            if fs > f0 + c1 * s * dg0 or fs >= flo:
                hi, fhi, dhi = s, fs, dgs
            else:
                if abs(dgs) <= -c2 * dg0:
                    return LinesearchResult(step=s, f=fs, g=gs, evals=evals)
                if dgs * (hi - lo) >= 0.0:
                    hi, fhi, dhi = lo, flo, dlo
                lo, flo, dlo = s, fs, dgs
            if abs(hi - lo) <= 1e-18 * max(1.0, abs(lo)):
                break
        raise LinesearchError(
            f"no Wolfe step within {budget} evaluations (bracket [{lo:.3e}, {hi:.3e}])"
        )

    s_prev, f_prev, dg_prev = 0.0, f0, dg0
    s = 1.0
    first = True
    while evals < budget:
        fs, gs, dgs = phi(s)
        if fs > f0 + c1 * s * dg0 or (not first and fs >= f_prev):
            return zoom(s_prev, f_prev, dg_prev, s, fs, dgs)
        if abs(dgs) <= -c2 * dg0:
            return LinesearchResult(step=s, f=fs, g=gs, evals=evals)
        if dgs >= 0.0:
            return zoom(s, fs, dgs, s_prev, f_prev, dg_prev)
        s_prev, f_prev, dg_prev = s, fs, dgs
        s *= 2.0
        first = False
    raise LinesearchError(f"no Wolfe step within {budget} evaluations (expansion)")


def minimize(objective, x0, config=None):
    """Minimize ``objective`` from ``x0`` with BFGS.

    Returns a MinimizeResult whose status is "converged", "max_iters", or
    "linesearch-stalled" (best point so far in the latter two cases).
    Raises OptimizerError, carrying the last good iterate, if the objective
    or gradient turns non-finite during the search.
    """
    if config is None:
        config = OptimizerConfig()
    kernel_args = getattr(objective, "kernel_args", None)
    if kernel_args is not None:
        return _minimize_compiled(kernel_args, x0, config)
    x = np.asarray(x0, dtype=float).copy()
    try:
        f, g = _eval(objective, x)
    except _NonFinite:
        raise ValidationError("objective must be finite at the starting point")

    n = x.shape[0]
    H = np.eye(n)
    iterations = 0
    status = MAX_ITERS

    for _ in range(config.max_iters):
        d = -(H @ g)
        dg = float(g @ d)
        if dg >= 0.0:
            # H is positive definite by construction, so a non-descent
            # direction means the gradient has vanished
            status = CONVERGED
            break
        try:
            ls = wolfe_linesearch(objective, x, d, f, g, config)
        except LinesearchError:
            status = LINESEARCH_STALLED
            break
        except OptimizerError as err:
            raise OptimizerError(
                str(err), x=x, f=f, g=g, iterations=iterations
            ) from None

        s_vec = ls.step * d
        y_vec = ls.g - g
        x = x + s_vec
        f_prev, f = f, ls.f
        g = ls.g
        iterations += 1

        ys = float(y_vec @ s_vec)
        # curvature guard: skip the update when y.s is numerically flat
        if ys > 1e-10 * np.linalg.norm(y_vec) * np.linalg.norm(s_vec):
            rho = 1.0 / ys
            Hy = H @ y_vec
            H -= rho * (np.outer(s_vec, Hy) + np.outer(Hy, s_vec))
            H += (rho * rho * float(y_vec @ Hy) + rho) * np.outer(s_vec, s_vec)
            H = 0.5 * (H + H.T)

        if f > 0.0:
            done = f_prev / f - 1.0 <= config.eps_c
        else:
            done = abs(f_prev - f) <= config.eps_c
        if done:
            status = CONVERGED
            break

    return MinimizeResult(x=x, f=f, g=g, iterations=iterations, status=status,
                          H=H)


_STATUS_NAMES = {
    _kernels.STATUS_CONVERGED: CONVERGED,
    _kernels.STATUS_MAX_ITERS: MAX_ITERS,
    _kernels.STATUS_LINESEARCH_STALLED: LINESEARCH_STALLED,
}


def _minimize_compiled(kernel_args, x0, config):
    x, f, g, iterations, status, H = _kernels.bfgs_minimize(
        np.asarray(x0, dtype=float).copy(), *kernel_args,
        config.c1, config.c2, config.eps_c,
        config.max_iters, config.max_linesearch,
    )
    if status == _kernels.STATUS_BAD_START:
        raise ValidationError("objective must be finite at the starting point")
    if status == _kernels.STATUS_NON_FINITE:
        raise OptimizerError(
            "non-finite objective or gradient during line search",
            x=x, f=f, g=g, iterations=iterations,
        )
    return MinimizeResult(x=x, f=f, g=g, iterations=iterations,
                          status=_STATUS_NAMES[status], H=H)
