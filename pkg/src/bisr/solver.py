"""Solvers for bivariate sparse regularization.

The objective over ``x`` of length ``N`` is::

    F(x) = 1/2 ||y - Hx||^2 + lam/2 sum_n psi((x_{n-1}, x_n); a)
         = 1/2 ||y - Hx||^2 + lam Theta(x; a) + lam ||x||_1

with ``x_0 = x_{N+1} = 0`` and ``Theta(x) = 1/2 sum_n S((x_{n-1}, x_n))``,
a smooth concave function. Two solvers are provided:

* forward-backward splitting: a gradient step on the smooth convex part
  ``1/2||y - Hx||^2 + lam Theta`` followed by soft thresholding;
* majorization-minimization: ``Theta`` is replaced by its tangent plane, which
  leaves an l1-regularized least-squares problem per outer iteration.

Both start from ``x = 0`` and stop when
``||x_{k+1} - x_k||_inf <= tol * ||x_k||_inf``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _backend, _numpy_kernels as _nk
from .bivariate import BivariatePenalty
from .convexity import TridiagBound, fit_tridiag_bound, is_certified
from .errors import ConvexityError, DomainError, SolverFailure
from .linop import ConvolutionFilter, as_filter, max_eig_upper_bound


class Algorithm(enum.Enum):
    FBS = "fbs"
    MM = "mm"

    @classmethod
    def parse(cls, name) -> "Algorithm":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise DomainError(f"unknown algorithm {name!r}") from None


@dataclass
class Objective:
    """A deconvolution problem with a bivariate penalty.

    Construction checks the penalty against the convexity certificate of the
    filter unless ``unsafe=True``. A precomputed ``bound`` may be supplied.
    """

    h: ConvolutionFilter
    y: np.ndarray
    lam: float
    penalty: BivariatePenalty
    unsafe: bool = False
    bound: Optional[TridiagBound] = None
    certified: bool = field(init=False, default=False)

    def __post_init__(self):
        self.h = as_filter(self.h)
        self.y = np.ascontiguousarray(self.y, dtype=float)
        if self.y.ndim != 1 or not np.all(np.isfinite(self.y)):
            raise DomainError("observation must be a finite 1-D array")
        if self.y.size < len(self.h):
            raise DomainError(
                f"observation length {self.y.size} is shorter than the filter ({len(self.h)})")
        self.lam = float(self.lam)
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise DomainError(f"lambda must be positive, got {self.lam}")
        if not isinstance(self.penalty, BivariatePenalty):
            raise DomainError("penalty must be a BivariatePenalty")
        if self.penalty.params.is_zero:
            self.certified = True
        else:
            if self.bound is None:
                self.bound = fit_tridiag_bound(self.h)
            self.certified = is_certified(self.h, self.lam, self.penalty.params, self.bound)
        if not self.certified and not self.unsafe:
            raise ConvexityError(
                f"a = ({self.penalty.a1}, {self.penalty.a2}) exceeds the certified bounds "
                f"(P(0)/lam, P(pi)/lam) = ({self.bound.at_zero / self.lam}, "
                f"{self.bound.at_pi / self.lam}); pass unsafe=True to solve anyway")

    @property
    def N(self) -> int:
        return self.y.size - len(self.h) + 1

    def _x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.N,):
            raise DomainError(f"expected a signal of length {self.N}, got shape {x.shape}")
        return x

    def with_penalty(self, penalty: BivariatePenalty, unsafe: bool = False) -> "Objective":
        return Objective(self.h, self.y, self.lam, penalty, unsafe=unsafe, bound=self.bound)


@dataclass(frozen=True)
class SolverConfig:
    algorithm: Algorithm = Algorithm.FBS
    mu_factor: float = 1.9
    stop_rel_tol: float = 1e-4
    max_iter: int = 20000
    inner_iter: int = 200
    inner_rel_tol: Optional[float] = None
    slack: float = 1e-10
    backend: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm.parse(self.algorithm))
        if not (0.0 < self.mu_factor < 2.0):
            raise DomainError(f"mu_factor must lie in (0, 2), got {self.mu_factor}")
        if not self.stop_rel_tol > 0.0:
            raise DomainError("stop_rel_tol must be positive")
        if self.max_iter < 1 or self.inner_iter < 1:
            raise DomainError("iteration limits must be at least 1")


@dataclass
class SolveResult:
    x_hat: np.ndarray
    objective_trace: np.ndarray
    iterations: int
    converged: bool
    optimality_max_violation: float
    algorithm: Algorithm

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1])


def theta_value(obj: Objective, x) -> float:
    """``Theta(x; a) = 1/2 sum_n S((x_{n-1}, x_n); a)`` with zero padding."""
    p = obj.penalty
    return float(_nk.theta(obj._x(x), p.a1, p.a2, p.code))


def theta_grad(obj: Objective, x) -> np.ndarray:
    p = obj.penalty
    return _nk.theta_grad(obj._x(x), p.a1, p.a2, p.code)


def soft_threshold(t, T):
    """``sign(t) * max(|t| - T, 0)``, elementwise."""
    if np.any(np.asarray(T) < 0):
        raise DomainError("threshold must be non-negative")
    out = _nk.soft(np.asarray(t, dtype=float), T)
    return float(out) if np.ndim(out) == 0 else out


def majorizer_value(obj: Objective, x, v) -> float:
    """MM majorizer of the objective at ``v``, evaluated at ``x``.

    ``Theta`` is concave, so its tangent plane at ``v`` lies above it and the
    majorizer touches the objective at ``x = v``.
    """
    x = obj._x(x)
    v = obj._x(v)
    p = obj.penalty
    lin = (_nk.theta(v, p.a1, p.a2, p.code)
           + float(_nk.theta_grad(v, p.a1, p.a2, p.code) @ (x - v)))
    r = obj.y - _nk.conv(obj.h.h, x)
    return 0.5 * float(r @ r) + obj.lam * lin + obj.lam * float(np.sum(np.abs(x)))


def step_size(obj: Objective, mu_factor: float = 1.9) -> float:
    return mu_factor / max_eig_upper_bound(obj.h)


def _finish(obj, cfg, x, trace, iters, status, name):
    if status == 2:
        raise SolverFailure(
            f"{name}: objective increased at iteration {iters} "
            f"({trace[-2]!r} -> {trace[-1]!r})", trace=np.asarray(trace))
    from .diagnostics import optimality_report

    x = np.asarray(x, dtype=float)
    viol = optimality_report(obj, x).max_violation
    return SolveResult(x, np.asarray(trace, dtype=float), int(iters), status == 0,
                       float(viol), cfg.algorithm)


def solve_fbs(obj: Objective, cfg: Optional[SolverConfig] = None) -> SolveResult:
    """Forward-backward splitting with step ``mu_factor / rho``."""
    cfg = cfg or SolverConfig()
    k = _backend.get(cfg.backend)
    p = obj.penalty
    x, trace, iters, status = k.fbs(
        np.ascontiguousarray(obj.h.h), obj.y, obj.lam, p.a1, p.a2, p.code,
        step_size(obj, cfg.mu_factor), cfg.stop_rel_tol, int(cfg.max_iter), cfg.slack)
    return _finish(obj, cfg, x, trace, iters, status, "FBS")


def solve_mm(obj: Objective, cfg: Optional[SolverConfig] = None) -> SolveResult:
    """Majorization-minimization; each l1 subproblem gets ``inner_iter``
    warm-started proximal-gradient steps."""
    cfg = cfg or SolverConfig(algorithm=Algorithm.MM)
    k = _backend.get(cfg.backend)
    p = obj.penalty
    inner_tol = cfg.inner_rel_tol if cfg.inner_rel_tol is not None else 0.1 * cfg.stop_rel_tol
    x, trace, iters, status = k.mm(
        np.ascontiguousarray(obj.h.h), obj.y, obj.lam, p.a1, p.a2, p.code,
        step_size(obj, cfg.mu_factor), cfg.stop_rel_tol, int(cfg.max_iter),
        int(cfg.inner_iter), inner_tol, cfg.slack)
    return _finish(obj, cfg, x, trace, iters, status, "MM")


def solve(obj: Objective, cfg: Optional[SolverConfig] = None) -> SolveResult:
    cfg = cfg or SolverConfig()
    if cfg.algorithm is Algorithm.MM:
        return solve_mm(obj, cfg)
    return solve_fbs(obj, cfg)
