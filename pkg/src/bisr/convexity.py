"""Convexity certificates for the bivariate penalty.

For a 2x2 quadratic ``1/2 x^T K(gamma) x`` the objective stays convex when
``a_i <= gamma_i / lam``. For deconvolution the same bound is applied to a
tridiagonal lower bound ``P(w) = p0 + 2 p1 cos w`` of ``|H(w)|^2``, giving
``a1 <= P(0)/lam`` and ``a2 <= P(pi)/lam``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _numpy_kernels as _k
from .bivariate import BivariateParams, BivariatePenalty, K_matrix, eig2
from .errors import ConvexityError, DomainError
from .linop import as_filter, freq_response_sq

Q = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)

_SHRINK = 1.0 - 1e-9


def _check_lam(lam) -> float:
    lam = float(lam)
    if not (lam > 0.0 and math.isfinite(lam)):
        raise DomainError(f"lambda must be positive and finite, got {lam}")
    return lam


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalues of ``K(gamma) = Q diag(gamma1, gamma2) Q^T``."""

    gamma1: float
    gamma2: float

    def __post_init__(self):
        for g in (self.gamma1, self.gamma2):
            if not (g >= 0.0 and math.isfinite(g)):
                raise DomainError(f"eigenvalues must be finite and >= 0, got {g}")

    @classmethod
    def from_matrix(cls, K) -> "EigenPair":
        """From a symmetric 2x2 Toeplitz matrix ``[[k0, k1], [k1, k0]]``."""
        K = np.asarray(K, dtype=float)
        if K.shape != (2, 2) or K[0, 1] != K[1, 0] or K[0, 0] != K[1, 1]:
            raise DomainError("expected a symmetric Toeplitz 2x2 matrix")
        return cls(float(K[0, 0] + K[0, 1]), float(K[0, 0] - K[0, 1]))

    def K(self) -> np.ndarray:
        return K_matrix(self.gamma1, self.gamma2)

    @property
    def Gamma(self) -> np.ndarray:
        return np.diag([self.gamma1, self.gamma2])


@dataclass(frozen=True)
class TridiagBound:
    """``P(w) = p0 + 2 p1 cos w`` with ``0 <= P(w) <= |H(w)|^2``.

    ``degenerate`` marks filters for which only ``P = 0`` is feasible, so the
    penalty falls back to the l1 norm.
    """

    p0: float
    p1: float
    degenerate: bool = False

    def __call__(self, omega):
        return _eval_P(self.p0, self.p1, omega)

    @property
    def at_zero(self) -> float:
        return self.p0 + 2.0 * self.p1

    @property
    def at_pi(self) -> float:
        return self.p0 - 2.0 * self.p1


@dataclass(frozen=True)
class Witness:
    """A point where ``1/2 x^T K x + lam S(x)`` has negative curvature."""

    x: tuple
    direction: tuple
    curvature: float


def max_params_bivariate(eig: EigenPair, lam) -> BivariateParams:
    lam = _check_lam(lam)
    return BivariateParams(eig.gamma1 / lam, eig.gamma2 / lam)


def separable_limit(eig: EigenPair, lam) -> float:
    """Largest common ``a1 = a2`` keeping the 2x2 objective convex."""
    lam = _check_lam(lam)
    return min(eig.gamma1, eig.gamma2) / lam


def params_from_tridiag(p: TridiagBound, lam) -> BivariateParams:
    lam = _check_lam(lam)
    if p.p0 < 2.0 * abs(p.p1):
        raise ConvexityError(
            f"P(w) = {p.p0} + 2*{p.p1} cos w is negative somewhere (p0 < 2|p1|)")
    return BivariateParams((p.p0 + 2.0 * p.p1) / lam, (p.p0 - 2.0 * p.p1) / lam)


# --------------------------------------------------------------------------
# tridiagonal lower bound
# --------------------------------------------------------------------------

def _eval_P(p0, p1, omega):
    """``p0 + 2 p1 cos w`` written as ``(p0 - 2|p1|) + 4|p1| cos^2`` or
    ``sin^2`` of ``w/2``; exact near a zero of P at 0 or pi."""
    half = 0.5 * np.asarray(omega, dtype=float)
    trig = np.cos(half) if p1 >= 0.0 else np.sin(half)
    return (p0 - 2.0 * abs(p1)) + 4.0 * abs(p1) * trig * trig

def _p0_star(p1, mag, cosw):
    """Largest ``p0`` with ``p0 + 2 p1 cos w_k <= mag_k`` for every k."""
    p1 = np.atleast_1d(np.asarray(p1, dtype=float))
    out = np.empty(p1.shape)
    step = max(1, 2 ** 22 // max(len(mag), 1))
    for i in range(0, len(p1), step):
        blk = p1[i:i + step]
        out[i:i + step] = np.min(mag[None, :] - 2.0 * blk[:, None] * cosw[None, :], axis=1)
    return out


def fit_tridiag_bound(h, grid_size: int = 2048, n_candidates: int = 2048) -> TridiagBound:
    """Fit ``P(w)`` under ``|H(w)|^2`` maximizing ``p0``.

    ``p1`` is scanned over ``[-max|H|^2/2, max|H|^2/2]``; for each candidate
    the largest feasible ``p0`` is a minimum over the frequency grid
    ``w_k = pi k / grid_size``. The scan result is polished by bisecting the
    ends of the feasible ``p1`` interval and ternary-searching the concave
    ``p0`` inside it, then checked on a 10x finer grid and scaled down if that
    grid finds any overshoot.
    """
    if grid_size < 256:
        raise DomainError("grid_size must be at least 256")
    f = as_filter(h)
    return _fit_cached(f.taps, int(grid_size), int(n_candidates))


@lru_cache(maxsize=64)
def _fit_cached(taps, grid_size, n_candidates):
    w = np.pi * np.arange(grid_size + 1) / grid_size
    mag = freq_response_sq(taps, w)
    cosw = np.cos(w)
    top = float(mag.max())
    floor = 1e-12 * top

    cand = np.linspace(-0.5 * top, 0.5 * top, n_candidates)
    p0s = _p0_star(cand, mag, cosw)
    ok = (p0s >= 2.0 * np.abs(cand)) & (p0s > floor)
    if not np.any(ok):
        return TridiagBound(0.0, 0.0, degenerate=True)
    idx = np.flatnonzero(ok)
    # max p0, ties toward larger |p1|
    j = idx[np.lexsort((np.abs(cand[idx]), p0s[idx]))[-1]]
    p1 = float(cand[j])
    p0 = float(p0s[j])

    # polish: the feasible p1 form an interval on which p0* is concave
    def p0_at(v):
        return float(_p0_star(v, mag, cosw)[0])

    def feasible(v):
        return p0_at(v) - 2.0 * abs(v) >= -1e-15 * top

    def edge(inside, outside):
        for _ in range(100):
            mid = 0.5 * (inside + outside)
            if mid in (inside, outside):
                break
            if feasible(mid):
                inside = mid
            else:
                outside = mid
        return inside

    first, last = int(idx[0]), int(idx[-1])
    lo = float(cand[first]) if first == 0 else edge(float(cand[first]), float(cand[first - 1]))
    hi = (float(cand[last]) if last == n_candidates - 1
          else edge(float(cand[last]), float(cand[last + 1])))
    for _ in range(200):
        if hi - lo <= 1e-15 * top:
            break
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if p0_at(m1) < p0_at(m2):
            lo = m1
        else:
            hi = m2
    q1 = 0.5 * (lo + hi)
    q0 = p0_at(q1)
    if q0 >= p0 and feasible(q1):
        # On a grid p0* is flat near its peak when |H|^2 touches P with
        # second-order contact; take the centre of that plateau.
        def on_top(v):
            return p0_at(v) >= q0 - 1e-15 * top and feasible(v)

        def plateau_end(inside, outside):
            for _ in range(100):
                mid = 0.5 * (inside + outside)
                if mid in (inside, outside):
                    break
                if on_top(mid):
                    inside = mid
                else:
                    outside = mid
            return inside

        left = plateau_end(q1, -0.5 * top)
        right = plateau_end(q1, 0.5 * top)
        mid = 0.5 * (left + right)
        p1 = mid if on_top(mid) else q1
        p0 = p0_at(p1)

    if p0 - 2.0 * abs(p1) <= 1e-12 * p0:
        # P touches zero at 0 or pi; pin it exactly so a2 (or a1) is exactly 0
        p1 = math.copysign(0.5 * p0, p1)

    fine = np.pi * np.arange(10 * grid_size + 1) / (10 * grid_size)
    fmag = freq_response_sq(taps, fine)
    pv = _eval_P(p0, p1, fine)
    pos = pv > 0.0
    scale = min(1.0, float(np.min(fmag[pos] / pv[pos]))) if np.any(pos) else 1.0
    scale *= _SHRINK
    p0 *= scale
    p1 *= scale
    if p0 <= floor:
        return TridiagBound(0.0, 0.0, degenerate=True)
    return TridiagBound(p0, p1)


def bound_feasible(h, p: TridiagBound, grid_size: int = 20480) -> bool:
    """Check ``0 <= P(w) <= |H(w)|^2`` on a uniform grid over ``[0, pi]``."""
    w = np.pi * np.arange(grid_size + 1) / grid_size
    pv = p(w)
    return bool(np.all(pv >= 0.0) and np.all(pv <= freq_response_sq(h, w)))


def certified_params(h, lam, grid_size: int = 2048) -> BivariateParams:
    """Maximal certified ``(a1, a2)`` for convolution with ``h``."""
    return params_from_tridiag(fit_tridiag_bound(h, grid_size), lam)


def is_certified(h, lam, params: BivariateParams, bound: Optional[TridiagBound] = None,
                 rtol: float = 1e-12) -> bool:
    """Whether ``params`` lie inside the certified box for ``(h, lam)``."""
    lam = _check_lam(lam)
    if params.is_zero:
        return True
    if bound is None:
        bound = fit_tridiag_bound(h)
    top = params_from_tridiag(bound, lam)
    return (params.a1 <= top.a1 * (1.0 + rtol)
            and params.a2 <= top.a2 * (1.0 + rtol))


# --------------------------------------------------------------------------
# numerical probe for negative curvature
# --------------------------------------------------------------------------

def verify_nonconvexity(bp: BivariatePenalty, eig: EigenPair, lam, samples: int = 100_000,
                        seed: int = 0) -> Optional[Witness]:
    """Search for negative curvature of ``g(x) = 1/2 x^T K(gamma) x + lam S(x; a)``.

    Probes the origin (where ``S`` is most concave), then ``samples`` random
    points spread over several orders of magnitude around ``1/alpha``. Returns
    the most negative curvature found, or ``None``.
    """
    lam = _check_lam(lam)
    if bp.params.is_zero:
        return None
    K = eig.K()
    scale = max(eig.gamma1, eig.gamma2, lam * bp.params.alpha)
    tol = 1e-10 * scale
    rng = np.random.default_rng(seed)

    n_rand = max(int(samples) - 1, 0)
    mag = 10.0 ** rng.uniform(-4.0, 3.0, n_rand) / bp.params.alpha
    ang = rng.uniform(0.0, 2.0 * np.pi, n_rand)
    x1 = np.concatenate(([0.0], mag * np.cos(ang)))
    x2 = np.concatenate(([0.0], mag * np.sin(ang)))

    h11, h12, h22 = _k.S_hess(x1, x2, bp.a1, bp.a2, bp.code)
    g11 = K[0, 0] + lam * h11
    g12 = K[0, 1] + lam * h12
    g22 = K[1, 1] + lam * h22
    lo, _ = eig2(g11, g12, g22)
    i = int(np.argmin(lo))
    if lo[i] >= -tol:
        return None
    # eigenvector for the smaller eigenvalue
    v = np.array([g12[i], lo[i] - g11[i]])
    if np.hypot(*v) < 1e-300:
        v = np.array([lo[i] - g22[i], g12[i]])
    if np.hypot(*v) < 1e-300:
        v = np.array([1.0, 0.0])
    v /= np.hypot(*v)
    return Witness((float(x1[i]), float(x2[i])), (float(v[0]), float(v[1])), float(lo[i]))
