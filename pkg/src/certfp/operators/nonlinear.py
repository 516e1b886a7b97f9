"""Nonlinearities ``f(s, u)`` with declared, sample-verified constants."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..expr import Expr
from ..funcspace import Interval

__all__ = ["Nonlinearity", "NonlinearityCheck"]

LATTICE_S = 64
LATTICE_U = 64
RTOL = 1e-9


@dataclass(frozen=True)
class NonlinearityCheck:
    max_quotient: float
    max_zero: float
    lip_ok: bool
    zero_ok: bool


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """``f(s, u)`` vectorised over numpy arrays.

    ``lip`` and ``zero_bound`` are declared constants (L_f and
    ``sup_s |f(s, 0)|``); ``verify`` samples them but never derives them.
    ``key`` identifies the rule for equality tests between operators.
    """

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    lip: float
    zero_bound: float
    key: tuple = field(default=())

    def __post_init__(self):
        if self.lip < 0 or self.zero_bound < 0:
            raise ValueError("declared constants must be nonnegative")

    def __call__(self, s, u):
        return np.broadcast_to(np.asarray(self.func(s, u), dtype=float), np.shape(u))

    def __eq__(self, other):
        if not isinstance(other, Nonlinearity):
            return NotImplemented
        if self.key and other.key:
            return (self.key, self.lip, self.zero_bound) == (other.key, other.lip, other.zero_bound)
        return self.func is other.func and self.lip == other.lip

    __hash__ = None

    @classmethod
    def linear(cls, lam: float, lip: Optional[float] = None) -> "Nonlinearity":
        return cls(lambda s, u: lam * u, abs(lam) if lip is None else lip, 0.0, ("linear", lam))

    @classmethod
    def scaled_sin(cls, lam: float, lip: Optional[float] = None) -> "Nonlinearity":
        return cls(lambda s, u: lam * np.sin(u), abs(lam) if lip is None else lip, 0.0,
                   ("sin", lam))

    @classmethod
    def scaled_atan(cls, lam: float, lip: Optional[float] = None) -> "Nonlinearity":
        return cls(lambda s, u: lam * np.arctan(u), abs(lam) if lip is None else lip, 0.0,
                   ("atan", lam))

    @classmethod
    def affine(cls, lam: float, offset, zero_bound: float, lip: Optional[float] = None
               ) -> "Nonlinearity":
        """``f(s, u) = lam u + h(s)``; ``offset`` is an Expr in ``s`` or a callable."""
        h = offset if not isinstance(offset, Expr) else (lambda s, e=offset: e(s=s))
        return cls(lambda s, u: lam * u + h(s), abs(lam) if lip is None else lip, zero_bound,
                   ("affine", lam, getattr(offset, "text", id(offset))))

    @classmethod
    def expression(cls, text: str, lip: float, zero_bound: float) -> "Nonlinearity":
        e = Expr(text, ("s", "u", "t"))
        # accept t as an alias of the integration variable
        fn = lambda s, u: e(s=s, u=u, t=s)
        return cls(fn, lip, zero_bound, ("expr", text))

    def verify(self, interval: Interval, radius: float) -> NonlinearityCheck:
        """Sample difference quotients on 64 s-nodes x 64 u-values in [-R-1, R+1]."""
        s = np.linspace(interval.a, interval.b, LATTICE_S)
        u = np.linspace(-radius - 1.0, radius + 1.0, LATTICE_U)
        S, U = np.meshgrid(s, u, indexing="ij")
        F = self(S, U)
        du = u[None, :] - u[:, None]
        iu = np.triu_indices(LATTICE_U, k=1)
        dF = np.abs(F[:, :, None] - F[:, None, :])[:, iu[0], iu[1]]
        quot = float(np.max(dF / np.abs(du[iu])))
        zero = float(np.max(np.abs(self(s, np.zeros_like(s)))))
        return NonlinearityCheck(
            max_quotient=quot,
            max_zero=zero,
            lip_ok=quot <= self.lip * (1.0 + RTOL),
            zero_ok=zero <= self.zero_bound * (1.0 + RTOL),
        )

    def is_nondecreasing(self, interval: Interval, lo: float, hi: float, tol: float = 1e-12
                         ) -> bool:
        s = np.linspace(interval.a, interval.b, LATTICE_S)
        u = np.linspace(lo, hi, LATTICE_U) if hi > lo else np.array([lo])
        S, U = np.meshgrid(s, u, indexing="ij")
        F = self(S, U)
        scale = max(1.0, float(np.max(np.abs(F))))
        return bool(np.all(np.diff(F, axis=1) >= -tol * scale))
