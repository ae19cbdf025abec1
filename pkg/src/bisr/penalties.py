"""Parameterized univariate sparsity penalties.

Three families are provided, each with a non-negative concavity parameter
``a``::

    rational  phi(t; a) = |t| / (1 + a|t|/2)
    log       phi(t; a) = log(1 + a|t|) / a
    atan      phi(t; a) = 2/(a sqrt(3)) * (atan((1 + 2a|t|)/sqrt(3)) - pi/6)

with ``phi(t; 0) = |t|`` for every family. The smooth concave remainder
``s(t; a) = phi(t; a) - |t|`` is twice continuously differentiable with
``s'(0) = 0`` and ``s''(0) = -a``.

All functions accept scalars or arrays for ``t`` and return a float for
scalar input.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _numpy_kernels as _k
from .errors import DomainError


class PenaltyFamily(enum.Enum):
    RATIONAL = "rational"
    LOG = "log"
    ATAN = "atan"

    @property
    def code(self) -> int:
        return _CODES[self]

    @classmethod
    def parse(cls, name) -> "PenaltyFamily":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise DomainError(
                f"unknown penalty family {name!r}; expected one of "
                f"{[f.value for f in cls]}") from None


_CODES = {PenaltyFamily.RATIONAL: _k.RATIONAL,
          PenaltyFamily.LOG: _k.LOG,
          PenaltyFamily.ATAN: _k.ATAN}


def check_param(a) -> float:
    a = float(a)
    if not math.isfinite(a) or a < 0.0:
        raise DomainError(f"penalty parameter must be finite and >= 0, got {a}")
    return a


def _check_t(t):
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("penalty argument must be finite")
    return arr


def _out(v, like):
    return float(v) if np.ndim(like) == 0 else v


@dataclass(frozen=True)
class SmoothedPenalty:
    """The concave part ``s(t; a) = phi(t; a) - |t|`` of a penalty."""

    family: PenaltyFamily
    a: float

    def __post_init__(self):
        object.__setattr__(self, "family", PenaltyFamily.parse(self.family))
        object.__setattr__(self, "a", check_param(self.a))

    def value(self, t):
        return s_value(self, t)

    def deriv1(self, t):
        return s_deriv1(self, t)

    def deriv2(self, t):
        return s_deriv2(self, t)


def phi(family, t, a):
    """Penalty value ``phi(t; a)``."""
    family = PenaltyFamily.parse(family)
    arr = _check_t(t)
    return _out(_k.phi(arr, check_param(a), family.code), t)


def phi_deriv1(family, t, a):
    """``phi'(t; a)`` for ``t != 0``; odd in ``t``. At ``t = 0`` returns 0."""
    family = PenaltyFamily.parse(family)
    arr = _check_t(t)
    a = check_param(a)
    return _out(np.sign(arr) + _k.s1(arr, a, family.code), t)


def phi_deriv2(family, t, a):
    """``phi''(t; a)`` for ``t != 0`` (equals ``s''``); even in ``t``."""
    family = PenaltyFamily.parse(family)
    arr = _check_t(t)
    return _out(_k.s2(arr, check_param(a), family.code), t)


def s_value(sp: SmoothedPenalty, t):
    arr = _check_t(t)
    return _out(_k.s(arr, sp.a, sp.family.code), t)


def s_deriv1(sp: SmoothedPenalty, t):
    arr = _check_t(t)
    return _out(_k.s1(arr, sp.a, sp.family.code), t)


def s_deriv2(sp: SmoothedPenalty, t):
    arr = _check_t(t)
    return _out(_k.s2(arr, sp.a, sp.family.code), t)
