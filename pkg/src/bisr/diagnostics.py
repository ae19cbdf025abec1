"""Optimality certificate, objective evaluation and error metrics.

For a convex objective ``x`` is a minimizer iff, for every ``n``,

    v_n = (1/lam) [H^T (y - Hx)]_n - [grad Theta(x)]_n  lies in  sign(x_n)

where ``sign(0)`` is the interval ``[-1, 1]``. The distance of ``v_n`` to that
set is the per-index violation.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _numpy_kernels as _k
from .errors import CertificateWarning, DomainError


@dataclass
class OptimalityReport:
    x: np.ndarray
    v: np.ndarray
    violation: np.ndarray
    tol: float
    certified_convex: bool

    @property
    def max_violation(self) -> float:
        return float(self.violation.max()) if self.violation.size else 0.0

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol

    @property
    def warning(self) -> bool:
        """True when the objective is not certified convex, in which case
        passing is necessary but not sufficient for a global minimum."""
        return not self.certified_convex

    def pairs(self):
        return list(zip(self.x.tolist(), self.v.tolist()))

    def to_csv(self, fh=None) -> str:
        """Scatter data with columns ``index, x_n, v_n``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "x_n", "v_n"])
        for i, (a, b) in enumerate(zip(self.x, self.v)):
            w.writerow([i, f"{a:.17g}", f"{b:.17g}"])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def _vec(obj, x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != obj.N:
        raise DomainError(f"expected a signal of length {obj.N}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("signal must be finite")
    return x


def sign_violation(x, v) -> np.ndarray:
    """Distance from ``v_n`` to the set-valued ``sign(x_n)``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.where(x != 0.0, np.abs(v - np.sign(x)), np.maximum(np.abs(v) - 1.0, 0.0))


def optimality_map(obj, x) -> np.ndarray:
    x = _vec(obj, x)
    p = obj.penalty
    h = obj.h.h
    resid = obj.y - _k.conv(h, x)
    return _k.conv_adjoint(h, resid) / obj.lam - _k.theta_grad(x, p.a1, p.a2, p.code)


def optimality_report(obj, x, tol: float = 1e-3) -> OptimalityReport:
    if not tol > 0.0:
        raise DomainError("tol must be positive")
    x = _vec(obj, x)
    v = optimality_map(obj, x)
    rep = OptimalityReport(x.copy(), v, sign_violation(x, v), float(tol), bool(obj.certified))
    if rep.warning:
        warnings.warn("objective is not certified convex; the sign condition is only "
                      "necessary for optimality", CertificateWarning, stacklevel=2)
    return rep


def objective_value(obj, x) -> float:
    """``1/2 ||y - Hx||^2 + lam Theta(x) + lam ||x||_1``."""
    x = _vec(obj, x)
    p = obj.penalty
    return float(_k.objective(obj.h.h, obj.y, x, obj.lam, p.a1, p.a2, p.code))


def objective_value_pairwise(obj, x) -> float:
    """Same objective written as ``1/2 ||y - Hx||^2 + lam/2 sum_n psi((x_{n-1}, x_n))``."""
    x = _vec(obj, x)
    p = obj.penalty
    xp = np.concatenate(([0.0], x, [0.0]))
    a, b = xp[:-1], xp[1:]
    psi = _k.S(a, b, p.a1, p.a2, p.code) + np.abs(a) + np.abs(b)
    r = obj.y - _k.conv(obj.h.h, x)
    return 0.5 * float(r @ r) + 0.5 * obj.lam * float(np.sum(psi))


def rmse(x_hat, x_true) -> float:
    a = np.asarray(x_hat, dtype=float)
    b = np.asarray(x_true, dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise DomainError("rmse of empty signals")
    d = a - b
    return math.sqrt(float(d @ d) / d.size)
