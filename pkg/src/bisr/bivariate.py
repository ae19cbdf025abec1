"""Non-separable bivariate penalty.

The concave function ``S(x; a)`` is assembled from the univariate ``s`` of
:mod:`bisr.penalties` on four wedge-shaped regions of the plane::

    A1: x2 (x1 - x2) >= 0    S = s(x1 + r x2; alpha) + (1 - r) s(x2; a1)
    A2: x1 (x1 - x2) <= 0    S = s(r x1 + x2; alpha) + (1 - r) s(x1; a1)
    A3: x1 (x1 + x2) <= 0    S = s(r x1 + x2; alpha) + (1 + r) s(x1; a2)
    A4: x2 (x1 + x2) <= 0    S = s(x1 + r x2; alpha) + (1 + r) s(x2; a2)

with ``alpha = (a1 + a2)/2`` and ``r = (a1 - a2)/(a1 + a2)``. ``S`` is twice
continuously differentiable and satisfies ``-K(a) <= Hess S <= 0`` where
``K(a) = 1/2 [[a1 + a2, a1 - a2], [a1 - a2, a1 + a2]]``. The penalty is
``psi(x; a) = S(x; a) + |x1| + |x2|``.

Points are passed as two coordinates ``x1, x2`` (scalars or arrays of the
same shape). Hessians are returned as the three entries ``(h11, h12, h22)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _numpy_kernels as _k
from .errors import DomainError
from .penalties import PenaltyFamily, check_param, phi


class Region(enum.IntEnum):
    A1 = 0
    A2 = 1
    A3 = 2
    A4 = 3


@dataclass(frozen=True)
class BivariateParams:
    a1: float
    a2: float

    def __post_init__(self):
        object.__setattr__(self, "a1", check_param(self.a1))
        object.__setattr__(self, "a2", check_param(self.a2))

    @property
    def alpha(self) -> float:
        return 0.5 * (self.a1 + self.a2)

    @property
    def r(self) -> float:
        total = self.a1 + self.a2
        return 0.0 if total == 0.0 else (self.a1 - self.a2) / total

    @property
    def is_zero(self) -> bool:
        return self.a1 + self.a2 == 0.0

    def K(self) -> np.ndarray:
        """Hessian of ``-S`` at the origin, ``K(a)``."""
        return K_matrix(self.a1, self.a2)

    def scaled(self, factor: float) -> "BivariateParams":
        return BivariateParams(self.a1 * factor, self.a2 * factor)


def K_matrix(g1, g2) -> np.ndarray:
    """Symmetric Toeplitz ``1/2 [[g1 + g2, g1 - g2], [g1 - g2, g1 + g2]]``."""
    return 0.5 * np.array([[g1 + g2, g1 - g2], [g1 - g2, g1 + g2]], dtype=float)


@dataclass(frozen=True)
class BivariatePenalty:
    family: PenaltyFamily
    params: BivariateParams

    def __post_init__(self):
        object.__setattr__(self, "family", PenaltyFamily.parse(self.family))
        if not isinstance(self.params, BivariateParams):
            object.__setattr__(self, "params", BivariateParams(*self.params))

    @classmethod
    def make(cls, family, a1, a2) -> "BivariatePenalty":
        return cls(PenaltyFamily.parse(family), BivariateParams(a1, a2))

    @property
    def a1(self) -> float:
        return self.params.a1

    @property
    def a2(self) -> float:
        return self.params.a2

    @property
    def code(self) -> int:
        return self.family.code


def _point(x1, x2):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if not (np.all(np.isfinite(x1)) and np.all(np.isfinite(x2))):
        raise DomainError("bivariate argument must be finite")
    return x1, x2


def _out(v, like):
    return float(v) if np.ndim(like) == 0 else v


def classify_region(x1, x2):
    """Region of ``(x1, x2)``; the first match in order A1..A4 wins.

    Returns a :class:`Region` for scalar input, an int array otherwise.
    """
    a, b = _point(x1, x2)
    reg = _k.regions(a, b)
    if np.ndim(reg) == 0:
        return Region(int(reg))
    return reg


def S_value(bp: BivariatePenalty, x1, x2, region=None):
    """``S(x; a)``. ``region`` forces one branch formula (for testing)."""
    a, b = _point(x1, x2)
    v = _k.S(a, b, bp.a1, bp.a2, bp.code, region)
    return _out(v, a + b)


def S_grad(bp: BivariatePenalty, x1, x2, region=None):
    a, b = _point(x1, x2)
    g1, g2 = _k.S_grad(a, b, bp.a1, bp.a2, bp.code, region)
    if np.ndim(a + b) == 0:
        return float(g1), float(g2)
    return g1, g2


def S_hessian(bp: BivariatePenalty, x1, x2, region=None):
    """Hessian entries ``(h11, h12, h22)`` of ``S``."""
    a, b = _point(x1, x2)
    h = _k.S_hess(a, b, bp.a1, bp.a2, bp.code, region)
    if np.ndim(a + b) == 0:
        return tuple(float(v) for v in h)
    return h


def psi_value(bp: BivariatePenalty, x1, x2):
    a, b = _point(x1, x2)
    v = _k.S(a, b, bp.a1, bp.a2, bp.code) + np.abs(a) + np.abs(b)
    return _out(v, a + b)


def separable_bounds(bp: BivariatePenalty, x1, x2):
    """The separable penalties that sandwich ``psi``.

    Returns ``(lower, upper)`` built from ``max(a1, a2)`` and ``min(a1, a2)``.
    """
    lo, hi = sorted((bp.a1, bp.a2))
    lower = phi(bp.family, x1, hi) + phi(bp.family, x2, hi)
    upper = phi(bp.family, x1, lo) + phi(bp.family, x2, lo)
    return lower, upper


def eig2(h11, h12, h22):
    """Eigenvalues (smaller, larger) of symmetric 2x2 matrices, closed form."""
    h11 = np.asarray(h11, dtype=float)
    h12 = np.asarray(h12, dtype=float)
    h22 = np.asarray(h22, dtype=float)
    mean = 0.5 * (h11 + h22)
    rad = np.hypot(0.5 * (h11 - h22), h12)
    return mean - rad, mean + rad
