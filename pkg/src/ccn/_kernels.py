"""Compiled inner loops for loss and gradient evaluation.

The objective is evaluated observation by observation: forward pass through
the chain, per-label losses, lq aggregation, then a backward recursion that
turns per-label loss derivatives into parameter gradients in a single sweep.
Parameters travel as one flat vector laid out as

    [ b (L) | W row-major (L*m) | C strictly-lower rows, row-major (L(L-1)/2) ]

with the C block absent when ``with_c`` is false (frozen-dependency fits and
single-label stages).  Scale factors are explicit so the same kernel serves
the joint network objective and standalone penalized per-label fits.
"""

import numpy as np
from numba import njit

# loss family codes
LOSS_PROBABILISTIC = 0
LOSS_HUBER_HINGE = 1

# activation codes
ACT_SIGMOID = 0
ACT_IDENTITY = 1

CLIP_EPS = 1e-12


@njit(cache=True, inline="always")
def _pow(h, e):
    # exponents from the tuning grids hit the fast branches
    if e == 1.0:
        return h
    if e == 0.0:
        return 1.0
    if e == 2.0:
        return h * h
    if e == 0.5:
        return np.sqrt(h)
    if e == 1.5:
        return h * np.sqrt(h)
    if e == 3.0:
        return h * h * h
    if e == 4.0:
        h2 = h * h
        return h2 * h2
    if e == 5.0:
        h2 = h * h
        return h2 * h2 * h
    return h**e


@njit(cache=True, inline="always")
def _sigmoid(t):
    if t >= 0.0:
        return 1.0 / (1.0 + np.exp(-t))
    e = np.exp(t)
    return e / (1.0 + e)


@njit(cache=True)
def value_grad(x, X, Y, L, q, loss_scale, ridge, kind, xi_pos, xi_neg, kappa, act, with_c):
    """Objective value and gradient at the flat parameter vector ``x``.

    Returns ``(f, g)`` where

        f = loss_scale * sum_i (sum_l h_il^q)^(1/q)
            + ridge * (|W|^2 + |C|^2)

    and ``g`` is the gradient with the same flat layout as ``x``.
    """
    n, m = X.shape
    base_w = L
    base_c = L + L * m

    g = np.zeros_like(x)
    theta = np.zeros(L)
    p = np.zeros(L)
    h = np.zeros(L)
    dh = np.zeros(L)
    beta = np.zeros(L)

    inv_q = 1.0 / q
    qm1 = q - 1.0
    f_loss = 0.0

    for i in range(n):
        # forward pass in chain order
        for l in range(L):
            t = x[l]
            wl = base_w + l * m
            for j in range(m):
                t += X[i, j] * x[wl + j]
            if with_c:
                cl = base_c + (l * (l - 1)) // 2
                for k in range(l):
                    t += x[cl + k] * p[k]
            theta[l] = t
            if act == ACT_SIGMOID:
                p[l] = _sigmoid(t)
            else:
                p[l] = t

        # per-label losses and their derivatives in p
        s = 0.0
        for l in range(L):
            y = Y[i, l]
            if kind == LOSS_PROBABILISTIC:
                pc = p[l]
                if pc < CLIP_EPS:
                    pc = CLIP_EPS
                elif pc > 1.0 - CLIP_EPS:
                    pc = 1.0 - CLIP_EPS
                if y == 1.0:
                    nlog = -np.log(pc)
                    if xi_pos == 0.0:
                        h[l] = nlog
                        dh[l] = -1.0 / pc
                    else:
                        om = 1.0 - pc
                        oma = _pow(om, xi_pos)
                        h[l] = oma * nlog
                        dh[l] = -xi_pos * (oma / om) * nlog - oma / pc
                else:
                    nlog = -np.log1p(-pc)
                    if xi_neg == 0.0:
                        h[l] = nlog
                        dh[l] = 1.0 / (1.0 - pc)
                    else:
                        pb = _pow(pc, xi_neg)
                        h[l] = pb * nlog
                        dh[l] = xi_neg * (pb / pc) * nlog + pb / (1.0 - pc)
            else:
                # Huber hinge on the margin u = (2y - 1) p
                a = 2.0 * y - 1.0
                u = a * p[l]
                if u <= -kappa:
                    h[l] = 1.0 - u - 0.5 * (kappa + 1.0)
                    dh[l] = -a
                else:
                    z = 1.0 - u
                    if z < 0.0:
                        z = 0.0
                    h[l] = z * z / (2.0 * (kappa + 1.0))
                    dh[l] = -a * z / (kappa + 1.0)
            s += _pow(h[l], q)

        agg = _pow(s, inv_q) if q != 1.0 else s
        f_loss += agg

        # backward sweep: beta[l] is dL_i / dtheta_il including downstream effects
        for l in range(L - 1, -1, -1):
            if q == 1.0:
                w = 1.0
            elif agg > 0.0:
                w = _pow(h[l] / agg, qm1)
            else:
                w = 0.0
            acc = w * dh[l]
            if with_c:
                for k in range(l + 1, L):
                    ck = base_c + (k * (k - 1)) // 2
                    acc += x[ck + l] * beta[k]
            if act == ACT_SIGMOID:
                acc *= p[l] * (1.0 - p[l])
            beta[l] = acc

        for l in range(L):
            g[l] += beta[l]
            wl = base_w + l * m
            for j in range(m):
                g[wl + j] += beta[l] * X[i, j]
            if with_c:
                cl = base_c + (l * (l - 1)) // 2
                for k in range(l):
                    g[cl + k] += beta[l] * p[k]

    f = loss_scale * f_loss
    for idx in range(x.shape[0]):
        g[idx] *= loss_scale
    for idx in range(base_w, x.shape[0]):
        f += ridge * x[idx] * x[idx]
        g[idx] += 2.0 * ridge * x[idx]
    return f, g


# status codes returned by bfgs_minimize
STATUS_CONVERGED = 0
STATUS_MAX_ITERS = 1
STATUS_LINESEARCH_STALLED = 2
STATUS_NON_FINITE = 3
STATUS_BAD_START = 4


@njit(cache=True, inline="always")
def _cubic_step(a, fa, da, b, fb, db):
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


@njit(cache=True, inline="always")
def _finite(f, g):
    if not np.isfinite(f):
        return False
    for i in range(g.shape[0]):
        if not np.isfinite(g[i]):
            return False
    return True


@njit(cache=True)
def bfgs_minimize(x0, X, Y, L, q, loss_scale, ridge, kind, xi_pos, xi_neg,
                  kappa, act, with_c, c1, c2, eps_c, max_iters, max_ls):
    """Compiled twin of optimizer.minimize for kernel-backed objectives.

    Same algorithm, constants, and stopping rules as the generic engine;
    exists so that fits pay no Python overhead per iteration.  Returns
    ``(x, f, g, iterations, status)`` with the STATUS_* codes above.
    """
    x = x0.copy()
    f, g = value_grad(x, X, Y, L, q, loss_scale, ridge, kind,
                      xi_pos, xi_neg, kappa, act, with_c)
    if not _finite(f, g):
        return x, f, g, 0, STATUS_BAD_START, np.eye(x.shape[0])

    dim = x.shape[0]
    H = np.eye(dim)
    d = np.zeros(dim)
    status = STATUS_MAX_ITERS
    iters = 0

    for _ in range(max_iters):
        for a in range(dim):
            acc = 0.0
            for bb in range(dim):
                acc += H[a, bb] * g[bb]
            d[a] = -acc
        dg0 = 0.0
        for a in range(dim):
            dg0 += g[a] * d[a]
        if dg0 >= 0.0:
            status = STATUS_CONVERGED
            break

        # strong Wolfe line search: bracketing then zoom, cubic interpolation
        evals = 0
        found = False
        failed = 0  # 0 none, 2 stalled, 3 non-finite
        s_prev = 0.0
        f_prev = f
        dg_prev = dg0
        s = 1.0
        first = True
        zooming = False
        lo = 0.0
        flo = f
        dlo = dg0
        hi = 0.0
        fhi = 0.0
        dhi = 0.0
        s_acc = 0.0
        f_acc = f
        g_acc = g

        while evals < max_ls:
            if zooming:
                st = _cubic_step(lo, flo, dlo, hi, fhi, dhi)
                width = hi - lo
                limit_a = min(lo, hi) + 0.05 * abs(width)
                limit_b = max(lo, hi) - 0.05 * abs(width)
                if not np.isfinite(st) or st <= limit_a or st >= limit_b:
                    st = lo + 0.5 * width
            else:
                st = s
            ft, gt = value_grad(x + st * d, X, Y, L, q, loss_scale, ridge,
                                kind, xi_pos, xi_neg, kappa, act, with_c)
            evals += 1
            if not _finite(ft, gt):
                failed = 3
                break
            dgt = 0.0
            for a in range(dim):
                dgt += gt[a] * d[a]

            if zooming:
                if ft > f + c1 * st * dg0 or ft >= flo:
                    hi, fhi, dhi = st, ft, dgt
                else:
                    if abs(dgt) <= -c2 * dg0:
                        found = True
                        s_acc, f_acc, g_acc = st, ft, gt
                        break
                    if dgt * (hi - lo) >= 0.0:
                        hi, fhi, dhi = lo, flo, dlo
                    lo, flo, dlo = st, ft, dgt
                if abs(hi - lo) <= 1e-18 * max(1.0, abs(lo)):
                    break
            else:
                if ft > f + c1 * st * dg0 or (not first and ft >= f_prev):
                    lo, flo, dlo = s_prev, f_prev, dg_prev
                    hi, fhi, dhi = st, ft, dgt
                    zooming = True
                    continue
                if abs(dgt) <= -c2 * dg0:
                    found = True
                    s_acc, f_acc, g_acc = st, ft, gt
                    break
                if dgt >= 0.0:
                    lo, flo, dlo = st, ft, dgt
                    hi, fhi, dhi = s_prev, f_prev, dg_prev
                    zooming = True
                    continue
                s_prev, f_prev, dg_prev = st, ft, dgt
                s = 2.0 * st
                first = False

        if failed == 3:
            status = STATUS_NON_FINITE
            break
        if not found:
            status = STATUS_LINESEARCH_STALLED
            break

        iters += 1
        f_old = f
        ys = 0.0
        ss = 0.0
        yy = 0.0
        for a in range(dim):
            sv = s_acc * d[a]
            yv = g_acc[a] - g[a]
            x[a] += sv
            ys += yv * sv
            ss += sv * sv
            yy += yv * yv
        # curvature guard: skip the update when y.s is numerically flat
        if ys > 1e-10 * np.sqrt(yy) * np.sqrt(ss):
            rho = 1.0 / ys
            Hy = np.zeros(dim)
            yHy = 0.0
            for a in range(dim):
                acc = 0.0
                for bb in range(dim):
                    acc += H[a, bb] * (g_acc[bb] - g[bb])
                Hy[a] = acc
                yHy += (g_acc[a] - g[a]) * acc
            coef = rho * rho * yHy + rho
            for a in range(dim):
                sa = s_acc * d[a]
                for bb in range(dim):
                    sb = s_acc * d[bb]
                    H[a, bb] += -rho * (sa * Hy[bb] + Hy[a] * sb) + coef * sa * sb
            for a in range(dim):
                for bb in range(a + 1, dim):
                    v = 0.5 * (H[a, bb] + H[bb, a])
                    H[a, bb] = v
                    H[bb, a] = v
        f = f_acc
        g = g_acc

        if f > 0.0:
            done = f_old / f - 1.0 <= eps_c
        else:
            done = abs(f_old - f) <= eps_c
        if done:
            status = STATUS_CONVERGED
            break

    return x, f, g, iters, status, H
