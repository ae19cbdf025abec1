"""Finite convolution operator ``H`` and its adjoint.

``H`` maps a length-``N`` signal to the full convolution of length
``N + L - 1``; ``H^T`` is correlation with the taps. ``H^T H`` is a principal
block of the doubly infinite Toeplitz operator with symbol ``|H(w)|^2``, so the
maximum of ``|H(w)|^2`` bounds its largest eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError


@dataclass(frozen=True)
class ConvolutionFilter:
    taps: tuple

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float).ravel()
        if taps.size == 0 or not np.all(np.isfinite(taps)):
            raise DomainError("filter taps must be a non-empty finite sequence")
        if not np.any(taps != 0.0):
            raise DomainError("filter must have at least one nonzero tap")
        object.__setattr__(self, "taps", tuple(float(v) for v in taps))

    @property
    def h(self) -> np.ndarray:
        return np.array(self.taps)

    def __len__(self):
        return len(self.taps)

    @property
    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.taps))

    def shape(self, n_in: int) -> "OperatorShape":
        return OperatorShape(n_in, n_in + len(self.taps) - 1)


@dataclass(frozen=True)
class OperatorShape:
    n_in: int
    n_out: int


def as_filter(h) -> ConvolutionFilter:
    return h if isinstance(h, ConvolutionFilter) else ConvolutionFilter(tuple(np.ravel(h)))


def _signal(x, name="signal"):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-D array")
    return x


def apply(h, x) -> np.ndarray:
    """``Hx``: full linear convolution, length ``N + L - 1``."""
    f = as_filter(h)
    return np.convolve(f.h, _signal(x))


def apply_adjoint(h, y) -> np.ndarray:
    """``H^T y`` for ``y`` of length ``N + L - 1``; returns length ``N``."""
    f = as_filter(h)
    y = _signal(y)
    if y.size < len(f):
        raise DomainError(
            f"adjoint input has length {y.size}, shorter than the filter ({len(f)})")
    return np.correlate(y, f.h, mode="valid")


def matrix(h, n: int) -> np.ndarray:
    """Dense ``(N + L - 1) x N`` Toeplitz matrix of ``H``."""
    f = as_filter(h)
    taps = f.h
    L = len(taps)
    out = np.zeros((n + L - 1, n))
    for k in range(n):
        out[k:k + L, k] = taps
    return out


def freq_response_sq(h, omega):
    """``|H(w)|^2`` with ``H(w) = sum_n h_n exp(-j w n)``."""
    f = as_filter(h)
    w = np.asarray(omega, dtype=float)
    n = np.arange(len(f))
    ang = np.multiply.outer(w, n)
    re = np.cos(ang) @ f.h
    im = np.sin(ang) @ f.h
    v = re * re + im * im
    return float(v) if np.ndim(omega) == 0 else v


def max_eig_upper_bound(h, grid_size: int = 4096) -> float:
    """Upper bound on the largest eigenvalue of ``H^T H`` for any length.

    The grid maximum of ``|H(w)|^2`` on ``[0, pi]`` is polished by a bounded
    scalar search and inflated by ``1 + 1e-6``.
    """
    if grid_size < 1024:
        raise DomainError("grid_size must be at least 1024")
    f = as_filter(h)
    return _max_eig_cached(f.taps, int(grid_size))


@lru_cache(maxsize=64)
def _max_eig_cached(taps, grid_size):
    w = np.linspace(0.0, np.pi, grid_size + 1)
    mag = freq_response_sq(taps, w)
    k = int(np.argmax(mag))
    best = float(mag[k])
    lo = w[max(k - 1, 0)]
    hi = w[min(k + 1, grid_size)]
    if hi > lo:
        res = minimize_scalar(lambda t: -freq_response_sq(taps, t),
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return best * (1.0 + 1e-6)
