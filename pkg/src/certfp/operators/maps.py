"""Fixed-point maps: Hammerstein, Volterra, Green (Dirichlet) and affine scalar."""

from __future__ import annotations

from typing import Callable, Union

import numpy as np

from ..expr import Expr
from ..funcspace import (
    DEFAULT_GRID_SIZE,
    GridFunction,
    GridMismatch,
    Interval,
    grid_nodes,
    prefix_weights,
    trapezoid_weights,
)
from .kernels import DirichletGreen, Kernel, weighted_bound_H, weighted_bound_V
from .nonlinear import Nonlinearity

__all__ = [
    "FixedPointOperator",
    "IntegralOperator",
    "HammersteinOperator",
    "VolterraOperator",
    "GreenOperator",
    "AffineScalarOperator",
    "linear_interpolant",
    "apply",
]

Forcing = Union[GridFunction, Expr, Callable[[np.ndarray], np.ndarray]]


class FixedPointOperator:
    """Common surface of every map ``T`` handled by the engine."""

    kind = "abstract"
    interval: Interval
    m: int

    def __call__(self, x: GridFunction) -> GridFunction:
        raise NotImplementedError

    def zero(self) -> GridFunction:
        return GridFunction.zeros(self.interval, self.m)

    def check_grid(self, x: GridFunction) -> None:
        if x.interval != self.interval or x.m != self.m:
            raise GridMismatch(
                f"{self.kind} operator lives on {self.interval}/{self.m}, "
                f"argument on {x.interval}/{x.m}"
            )


def _tabulate(forcing: Forcing, interval: Interval, m: int) -> GridFunction:
    if isinstance(forcing, GridFunction):
        if forcing.interval != interval or forcing.m != m:
            raise GridMismatch("tabulated forcing does not match the operator grid")
        return forcing
    if isinstance(forcing, Expr):
        return GridFunction.from_callable(interval, m, lambda t: forcing(t=t))
    return GridFunction.from_callable(interval, m, forcing)


class IntegralOperator(FixedPointOperator):
    """``(Tx)(t) = g(t) + int K(t, s) f(s, x(s)) ds`` on a uniform grid.

    The quadrature-weighted kernel matrix is assembled once, so ``apply``
    is one matrix-vector product plus the nonlinearity.
    """

    kind = "integral"

    def __init__(self, interval: Interval, m: int, forcing: Forcing, kernel: Kernel,
                 nonlinearity: Nonlinearity):
        if m < 2:
            raise ValueError("integral operators need at least two grid nodes")
        self.interval = interval
        self.m = int(m)
        self._forcing_src = forcing
        self.forcing = _tabulate(forcing, interval, self.m)
        self.kernel = kernel
        self.nonlinearity = nonlinearity
        self.kernel_matrix = kernel.matrix(interval, self.m)
        if not np.all(np.isfinite(self.kernel_matrix)):
            raise ValueError("kernel is not finite on the grid")
        self.weighted = self.kernel_matrix * self._weights()
        self.weighted.setflags(write=False)
        self._s = grid_nodes(interval, self.m)

    def _weights(self) -> np.ndarray:
        return trapezoid_weights(self.interval, self.m)[None, :]

    def kernel_bound(self) -> float:
        """M_K as the operator integrates it (H or V form)."""
        return weighted_bound_H(self.kernel_matrix, self.interval)

    def __call__(self, x: GridFunction) -> GridFunction:
        self.check_grid(x)
        fx = self.nonlinearity(self._s, x.values)
        return self.forcing.with_values(self.forcing.values + self.weighted @ fx)

    @property
    def refinable(self) -> bool:
        return self.kernel.refinable and not isinstance(self._forcing_src, GridFunction)

    def with_grid(self, m: int) -> "IntegralOperator":
        """The same continuous operator discretised on ``m`` nodes."""
        if m == self.m:
            return self
        if not self.refinable:
            raise ValueError("operator built from tabulated data cannot be regridded")
        return self._rebuild(m)

    def _rebuild(self, m: int) -> "IntegralOperator":
        return type(self)(self.interval, m, self._forcing_src, self.kernel, self.nonlinearity)

    def with_forcing(self, forcing: Forcing) -> "IntegralOperator":
        op = object.__new__(type(self))
        op.__dict__.update(self.__dict__)
        op._forcing_src = forcing
        op.forcing = _tabulate(forcing, self.interval, self.m)
        return op


class HammersteinOperator(IntegralOperator):
    kind = "hammerstein"


class VolterraOperator(IntegralOperator):
    """Prefix integral ``int_a^t``; row ``i`` uses trapezoid weights on [a, t_i]."""

    kind = "volterra"

    def _weights(self) -> np.ndarray:
        return prefix_weights(self.interval, self.m)

    def kernel_bound(self) -> float:
        return weighted_bound_V(self.kernel_matrix, self.interval)


class GreenOperator(HammersteinOperator):
    """Green reformulation of ``x'' = F(t, x)``, ``x(a) = alpha``, ``x(b) = beta``."""

    kind = "green"

    def __init__(self, interval: Interval, m: int, alpha: float, beta: float,
                 nonlinearity: Nonlinearity):
        self.alpha = float(alpha)
        self.beta = float(beta)
        super().__init__(
            interval, m, interpolant_fn(self.alpha, self.beta, interval),
            DirichletGreen(interval), nonlinearity,
        )

    def _rebuild(self, m):
        return GreenOperator(self.interval, m, self.alpha, self.beta, self.nonlinearity)

    def with_forcing(self, forcing):
        raise TypeError("Green operators take their forcing from the boundary values")


class AffineScalarOperator(FixedPointOperator):
    """``T(x) = slope * x + offset`` on the real line (single-node grid)."""

    kind = "affine"

    def __init__(self, slope: float, offset: float):
        self.slope = float(slope)
        self.offset = float(offset)
        self.interval = GridFunction.scalar(0.0).interval
        self.m = 1

    def __call__(self, x: GridFunction) -> GridFunction:
        self.check_grid(x)
        return x.with_values(self.slope * x.values + self.offset)

    def __repr__(self):
        return f"AffineScalarOperator(slope={self.slope}, offset={self.offset})"


def interpolant_fn(alpha: float, beta: float, interval: Interval
                   ) -> Callable[[np.ndarray], np.ndarray]:
    a, b = interval.a, interval.b

    def ell(t):
        return alpha + (np.asarray(t) - a) / (b - a) * (beta - alpha)

    return ell


def linear_interpolant(alpha: float, beta: float, interval: Interval,
                       m: int = DEFAULT_GRID_SIZE) -> GridFunction:
    """Affine function equal to ``alpha`` at ``a`` and ``beta`` at ``b``."""
    return GridFunction.from_callable(interval, m, interpolant_fn(alpha, beta, interval))


def apply(T: FixedPointOperator, x: GridFunction) -> GridFunction:
    return T(x)
