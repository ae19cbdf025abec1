"""Loop kernels compiled with numba.

Mirrors :mod:`bisr._numpy_kernels` entry by entry. Only imported when the
numba backend is active.
"""

import math

import numpy as np
from numba import njit

_SQRT3 = math.sqrt(3.0)
_opts = dict(cache=True, nogil=True)


@njit(**_opts)
def _s(t, a, fam):
    u = abs(t)
    if a == 0.0:
        return 0.0
    au = a * u
    if fam == 0:
        return -a * u * u / (2.0 + au)
    if au == 0.0:
        return 0.0
    if fam == 1:
        return u * (math.log1p(au) / au) - u
    w = _SQRT3 * au / (2.0 + au)
    return u * (2.0 / (2.0 + au)) * (math.atan(w) / w) - u


@njit(**_opts)
def _s1(t, a, fam):
    if a == 0.0 or t == 0.0:
        return 0.0
    au = a * abs(t)
    if fam == 0:
        d = 1.0 + 0.5 * au
        v = -(au + 0.25 * au * au) / (d * d)
    elif fam == 1:
        v = -au / (1.0 + au)
    else:
        v = -(au + au * au) / (1.0 + au + au * au)
    return v if t > 0.0 else -v


@njit(**_opts)
def _s2(t, a, fam):
    if a == 0.0:
        return 0.0
    au = a * abs(t)
    if fam == 0:
        d = 1.0 + 0.5 * au
        return -a / (d * d * d)
    if fam == 1:
        d = 1.0 + au
        return -a / (d * d)
    d = 1.0 + au + au * au
    return -a * (1.0 + 2.0 * au) / (d * d)


@njit(**_opts)
def _region(x1, x2):
    if x2 * (x1 - x2) >= 0.0:
        return 0
    if x1 * (x1 - x2) <= 0.0:
        return 1
    if x1 * (x1 + x2) <= 0.0:
        return 2
    return 3


@njit(**_opts)
def _S(x1, x2, a1, a2, fam):
    if a1 + a2 == 0.0:
        return 0.0
    alpha = 0.5 * (a1 + a2)
    r = (a1 - a2) / (a1 + a2)
    # 1 - r and 1 + r without cancellation
    cm = 2.0 * a2 / (a1 + a2)
    cp = 2.0 * a1 / (a1 + a2)
    reg = _region(x1, x2)
    if reg == 0:
        return _s(x1 + r * x2, alpha, fam) + cm * _s(x2, a1, fam)
    if reg == 1:
        return _s(r * x1 + x2, alpha, fam) + cm * _s(x1, a1, fam)
    if reg == 2:
        return _s(r * x1 + x2, alpha, fam) + cp * _s(x1, a2, fam)
    return _s(x1 + r * x2, alpha, fam) + cp * _s(x2, a2, fam)


@njit(**_opts)
def _S_grad(x1, x2, a1, a2, fam):
    if a1 + a2 == 0.0:
        return 0.0, 0.0
    alpha = 0.5 * (a1 + a2)
    r = (a1 - a2) / (a1 + a2)
    # 1 - r and 1 + r without cancellation
    cm = 2.0 * a2 / (a1 + a2)
    cp = 2.0 * a1 / (a1 + a2)
    reg = _region(x1, x2)
    if reg == 0:
        d = _s1(x1 + r * x2, alpha, fam)
        return d, r * d + cm * _s1(x2, a1, fam)
    if reg == 1:
        d = _s1(r * x1 + x2, alpha, fam)
        return r * d + cm * _s1(x1, a1, fam), d
    if reg == 2:
        d = _s1(r * x1 + x2, alpha, fam)
        return r * d + cp * _s1(x1, a2, fam), d
    d = _s1(x1 + r * x2, alpha, fam)
    return d, r * d + cp * _s1(x2, a2, fam)


@njit(**_opts)
def S(x1, x2, a1, a2, fam):
    out = np.empty(x1.shape[0])
    for i in range(x1.shape[0]):
        out[i] = _S(x1[i], x2[i], a1, a2, fam)
    return out


@njit(**_opts)
def S_grad(x1, x2, a1, a2, fam):
    g1 = np.empty(x1.shape[0])
    g2 = np.empty(x1.shape[0])
    for i in range(x1.shape[0]):
        g1[i], g2[i] = _S_grad(x1[i], x2[i], a1, a2, fam)
    return g1, g2


@njit(**_opts)
def theta(x, a1, a2, fam):
    if a1 + a2 == 0.0:
        return 0.0
    n = x.shape[0]
    acc = _S(0.0, x[0], a1, a2, fam) + _S(x[n - 1], 0.0, a1, a2, fam)
    for i in range(n - 1):
        acc += _S(x[i], x[i + 1], a1, a2, fam)
    return 0.5 * acc


@njit(**_opts)
def theta_grad(x, a1, a2, fam):
    n = x.shape[0]
    g = np.zeros(n)
    if a1 + a2 == 0.0:
        return g
    prev = 0.0
    for j in range(n + 1):
        p = prev
        q = x[j] if j < n else 0.0
        g1, g2 = _S_grad(p, q, a1, a2, fam)
        if j > 0:
            g[j - 1] += 0.5 * g1
        if j < n:
            g[j] += 0.5 * g2
        prev = q
    return g


@njit(**_opts)
def conv(h, x):
    L = h.shape[0]
    n = x.shape[0]
    y = np.zeros(n + L - 1)
    for k in range(n):
        xk = x[k]
        if xk != 0.0:
            for j in range(L):
                y[k + j] += h[j] * xk
    return y


@njit(**_opts)
def conv_adjoint(h, y):
    L = h.shape[0]
    n = y.shape[0] - L + 1
    x = np.empty(n)
    for k in range(n):
        acc = 0.0
        for j in range(L):
            acc += h[j] * y[k + j]
        x[k] = acc
    return x


@njit(**_opts)
def soft(z, T):
    out = np.empty(z.shape[0])
    for i in range(z.shape[0]):
        v = z[i]
        if v >= T:
            out[i] = v - T
        elif v <= -T:
            out[i] = v + T
        else:
            out[i] = 0.0
    return out


@njit(**_opts)
def _l1(x):
    acc = 0.0
    for i in range(x.shape[0]):
        acc += abs(x[i])
    return acc


@njit(**_opts)
def _half_sq_residual(y, hx):
    acc = 0.0
    for i in range(y.shape[0]):
        d = y[i] - hx[i]
        acc += d * d
    return 0.5 * acc


@njit(**_opts)
def objective(h, y, x, lam, a1, a2, fam):
    return (_half_sq_residual(y, conv(h, x)) + lam * theta(x, a1, a2, fam)
            + lam * _l1(x))


@njit(**_opts)
def _stop(x_new, x_old, tol):
    m = 0.0
    d = 0.0
    mn = 0.0
    for i in range(x_old.shape[0]):
        m = max(m, abs(x_old[i]))
        d = max(d, abs(x_new[i] - x_old[i]))
        mn = max(mn, abs(x_new[i]))
    if m == 0.0:
        return mn <= 1e-12
    return d <= tol * m


@njit(**_opts)
def fbs(h, y, lam, a1, a2, fam, mu, tol, max_iter, slack):
    n = y.shape[0] - h.shape[0] + 1
    x = np.zeros(n)
    hx = np.zeros(y.shape[0])
    f = 0.5 * np.dot(y, y)
    trace = np.empty(max_iter + 1)
    trace[0] = f
    for k in range(1, max_iter + 1):
        grad = conv_adjoint(h, y - hx) - lam * theta_grad(x, a1, a2, fam)
        x_new = soft(x + mu * grad, mu * lam)
        hx = conv(h, x_new)
        f_new = (_half_sq_residual(y, hx) + lam * theta(x_new, a1, a2, fam)
                 + lam * _l1(x_new))
        trace[k] = f_new
        if f_new > f + slack:
            return x_new, trace[: k + 1], k, 2
        done = _stop(x_new, x, tol)
        x = x_new
        f = f_new
        if done:
            return x, trace[: k + 1], k, 0
    return x, trace, max_iter, 1


@njit(**_opts)
def mm(h, y, lam, a1, a2, fam, mu, tol, max_iter, inner_iter, inner_tol, slack):
    n = y.shape[0] - h.shape[0] + 1
    x = np.zeros(n)
    f = 0.5 * np.dot(y, y)
    trace = np.empty(max_iter + 1)
    trace[0] = f
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
        trace[k] = f_new
        if f_new > f + slack:
            return v, trace[: k + 1], k, 2
        done = _stop(v, x, tol)
        x = v
        f = f_new
        if done:
            return x, trace[: k + 1], k, 0
    return x, trace, max_iter, 1
