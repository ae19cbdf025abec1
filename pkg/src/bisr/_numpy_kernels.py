"""Vectorized numpy kernels.

These are the reference implementations. The numba module mirrors them with
explicit loops; both must agree to rounding.

Family codes: 0 rational, 1 log, 2 atan.
"""

import numpy as np

RATIONAL, LOG, ATAN = 0, 1, 2
_SQRT3 = np.sqrt(3.0)


# --------------------------------------------------------------------------
# univariate smoothed penalty s(t; a) = phi(t; a) - |t|
# --------------------------------------------------------------------------

def _zero(a):
    # fast path only; the general formulas also reduce to |t| at a = 0, so
    # parameter arrays containing some zeros are handled elementwise
    return np.ndim(a) == 0 and a == 0.0


def phi(t, a, fam):
    u = np.abs(np.asarray(t, dtype=float))
    if _zero(a):
        return u.copy()
    # phi = u G(a u) with G(0) = 1, which never divides by a
    au = a * u
    if fam == RATIONAL:
        return u / (1.0 + 0.5 * au)
    safe = np.where(au == 0.0, 1.0, au)
    if fam == LOG:
        return u * np.where(au == 0.0, 1.0, np.log1p(safe) / safe)
    # atan(x) - atan(y) folded into one atan to avoid cancellation near 0
    w = _SQRT3 * safe / (2.0 + safe)
    return u * (2.0 / (2.0 + au)) * np.where(au == 0.0, 1.0, np.arctan(w) / w)


def s(t, a, fam):
    u = np.abs(np.asarray(t, dtype=float))
    if _zero(a):
        return np.zeros_like(u)
    if fam == RATIONAL:
        return -a * u * u / (2.0 + a * u)
    return phi(u, a, fam) - u


def s1(t, a, fam):
    t = np.asarray(t, dtype=float)
    if _zero(a):
        return np.zeros_like(t)
    au = a * np.abs(t)
    if fam == RATIONAL:
        d = 1.0 + 0.5 * au
        v = -(au + 0.25 * au * au) / (d * d)
    elif fam == LOG:
        v = -au / (1.0 + au)
    else:
        v = -(au + au * au) / (1.0 + au + au * au)
    return np.sign(t) * v


def s2(t, a, fam):
    t = np.asarray(t, dtype=float)
    if _zero(a):
        return np.zeros_like(t)
    au = a * np.abs(t)
    if fam == RATIONAL:
        d = 1.0 + 0.5 * au
        return -a / (d * d * d)
    if fam == LOG:
        d = 1.0 + au
        return -a / (d * d)
    d = 1.0 + au + au * au
    return -a * (1.0 + 2.0 * au) / (d * d)


# --------------------------------------------------------------------------
# bivariate concave function S
# --------------------------------------------------------------------------

def regions(x1, x2):
    """Region index 0..3 (A1..A4), first match wins."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return np.select(
        [x2 * (x1 - x2) >= 0.0, x1 * (x1 - x2) <= 0.0, x1 * (x1 + x2) <= 0.0],
        [0, 1, 2],
        default=3,
    )


def _split(x1, x2, a1, a2, reg=None):
    """Shared pieces of the four region formulas.

    Returns (reg, alpha, r, main_arg, use_u, sec_t, c_sec) where the main term
    is s(main_arg; alpha), the secondary term is c_sec * s(sec_t; a1 or a2),
    and use_u marks regions A1/A4 (main argument x1 + r x2). ``reg`` forces
    a region formula instead of classifying.
    """
    tot = a1 + a2
    den = np.where(tot == 0.0, 1.0, tot)  # a = (0, 0): r = 0 and both terms vanish
    alpha = 0.5 * tot
    r = (a1 - a2) / den
    if reg is None:
        reg = regions(x1, x2)
    else:
        reg = np.broadcast_to(np.asarray(reg), x1.shape)
    use_u = (reg == 0) | (reg == 3)
    main_arg = np.where(use_u, x1 + r * x2, r * x1 + x2)
    sec_t = np.where(use_u, x2, x1)
    # 1 - r and 1 + r, written to avoid cancellation when r is near +-1
    c_sec = np.where(reg <= 1, 2.0 * a2 / den, 2.0 * a1 / den)
    return reg, alpha, r, main_arg, use_u, sec_t, c_sec


def S(x1, x2, a1, a2, fam, reg=None):
    x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    if _zero(a1 + a2):
        return np.zeros(x1.shape)
    reg, alpha, r, m, use_u, t, c = _split(x1, x2, a1, a2, reg)
    sec = np.where(reg <= 1, s(t, a1, fam), s(t, a2, fam))
    return s(m, alpha, fam) + c * sec


def S_grad(x1, x2, a1, a2, fam, reg=None):
    x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    if _zero(a1 + a2):
        return np.zeros(x1.shape), np.zeros(x1.shape)
    reg, alpha, r, m, use_u, t, c = _split(x1, x2, a1, a2, reg)
    dm = s1(m, alpha, fam)
    sec = c * np.where(reg <= 1, s1(t, a1, fam), s1(t, a2, fam))
    g1 = np.where(use_u, dm, r * dm + sec)
    g2 = np.where(use_u, r * dm + sec, dm)
    return g1, g2


def S_hess(x1, x2, a1, a2, fam, reg=None):
    """Hessian entries (h11, h12, h22)."""
    x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    if _zero(a1 + a2):
        z = np.zeros(x1.shape)
        return z, z.copy(), z.copy()
    reg, alpha, r, m, use_u, t, c = _split(x1, x2, a1, a2, reg)
    dm = s2(m, alpha, fam)
    sec = c * np.where(reg <= 1, s2(t, a1, fam), s2(t, a2, fam))
    h12 = r * dm
    h11 = np.where(use_u, dm, r * r * dm + sec)
    h22 = np.where(use_u, r * r * dm + sec, dm)
    return h11, h12, h22


# --------------------------------------------------------------------------
# N-variate smooth part Theta(x) = 1/2 sum_n S((x_{n-1}, x_n))
# --------------------------------------------------------------------------

def _pairs(x):
    xp = np.concatenate(([0.0], x, [0.0]))
    return xp[:-1], xp[1:]


def theta(x, a1, a2, fam):
    if _zero(a1 + a2):
        return 0.0
    p, q = _pairs(x)
    return 0.5 * float(np.sum(S(p, q, a1, a2, fam)))


def theta_grad(x, a1, a2, fam):
    if _zero(a1 + a2):
        return np.zeros(len(x))
    p, q = _pairs(x)
    g1, g2 = S_grad(p, q, a1, a2, fam)
    # x_n is the second entry of pair n-1 and the first entry of pair n
    return 0.5 * (g1[1:] + g2[:-1])


# --------------------------------------------------------------------------
# convolution
# --------------------------------------------------------------------------

def conv(h, x):
    return np.convolve(h, x)


def conv_adjoint(h, y):
    return np.correlate(y, h, mode="valid")


def soft(z, T):
    return np.sign(z) * np.maximum(np.abs(z) - T, 0.0)


def objective(h, y, x, lam, a1, a2, fam):
    r = y - conv(h, x)
    return 0.5 * float(r @ r) + lam * theta(x, a1, a2, fam) + lam * float(np.sum(np.abs(x)))


# --------------------------------------------------------------------------
# solver loops
# --------------------------------------------------------------------------

def _stop(x_new, x_old, tol):
    m = np.max(np.abs(x_old))
    d = np.max(np.abs(x_new - x_old))
    if m == 0.0:
        return np.max(np.abs(x_new)) <= 1e-12
    return d <= tol * m


def fbs(h, y, lam, a1, a2, fam, mu, tol, max_iter, slack):
    """Forward-backward iterations from x = 0.

    Returns (x, trace, iterations, status); status 0 converged, 1 iteration
    cap, 2 objective increase.
    """
    n = len(y) - len(h) + 1
    x = np.zeros(n)
    hx = np.zeros(len(y))
    f = 0.5 * float(y @ y)
    trace = [f]
    for k in range(1, max_iter + 1):
        grad = conv_adjoint(h, y - hx) - lam * theta_grad(x, a1, a2, fam)
        x_new = soft(x + mu * grad, mu * lam)
        hx = conv(h, x_new)
        r = y - hx
        f_new = (0.5 * float(r @ r) + lam * theta(x_new, a1, a2, fam)
                 + lam * float(np.sum(np.abs(x_new))))
        trace.append(f_new)
        if f_new > f + slack:
            return x_new, np.array(trace), k, 2
        done = _stop(x_new, x, tol)
        x, f = x_new, f_new
        if done:
            return x, np.array(trace), k, 0
    return x, np.array(trace), max_iter, 1


def mm(h, y, lam, a1, a2, fam, mu, tol, max_iter, inner_iter, inner_tol, slack):
    """Majorization-minimization with inexact proximal-gradient inner solves.

    Same return convention as :func:`fbs`; the trace holds outer iterates.
    """
    n = len(y) - len(h) + 1
    x = np.zeros(n)
    f = 0.5 * float(y @ y)
    trace = [f]
    hty = conv_adjoint(h, y)
    for k in range(1, max_iter + 1):
        lin = lam * theta_grad(x, a1, a2, fam)
        v = x
        for _ in range(inner_iter):
            grad = hty - conv_adjoint(h, conv(h, v)) - lin
            v_new = soft(v + mu * grad, mu * lam)
            done = _stop(v_new, v, inner_tol)
            v = v_new
            if done:
                break
        f_new = objective(h, y, v, lam, a1, a2, fam)
        trace.append(f_new)
        if f_new > f + slack:
            return v, np.array(trace), k, 2
        done = _stop(v, x, tol)
        x, f = v, f_new
        if done:
            return x, np.array(trace), k, 0
    return x, np.array(trace), max_iter, 1
