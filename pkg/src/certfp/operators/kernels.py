"""Integral kernels tabulated on the uniform grid, and their sup-integral bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..expr import Expr
from ..funcspace import Interval, grid_nodes, prefix_weights, trapezoid_weights

__all__ = [
    "Kernel",
    "SeparableKernel",
    "ExpressionKernel",
    "TabulatedKernel",
    "DirichletGreen",
    "dirichlet_green",
    "kernel_bound_H",
    "kernel_bound_V",
    "weighted_bound_H",
    "weighted_bound_V",
]


def _on(fn, shape, **env) -> np.ndarray:
    if isinstance(fn, Expr):
        val = fn(**env)
    else:
        val = fn(*env.values())
    return np.broadcast_to(np.asarray(val, dtype=float), shape)


class Kernel:
    """A kernel ``K(t, s)``; ``matrix`` returns ``K(t_i, s_j)`` on the grid."""

    refinable = True

    def matrix(self, interval: Interval, m: int) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class SeparableKernel(Kernel):
    """``K(t, s) = sum_i phi_i(t) psi_i(s)``."""

    terms: tuple

    def matrix(self, interval, m):
        t = grid_nodes(interval, m)
        out = np.zeros((m, m))
        for phi, psi in self.terms:
            out += np.outer(_on(phi, t.shape, t=t), _on(psi, t.shape, s=t))
        return out


@dataclass(frozen=True)
class ExpressionKernel(Kernel):
    """``K(t, s)`` given by an expression or a vectorised callable."""

    fn: object

    def matrix(self, interval, m):
        t = grid_nodes(interval, m)
        T, S = np.meshgrid(t, t, indexing="ij")
        return np.array(_on(self.fn, T.shape, t=T, s=S), dtype=float)


class TabulatedKernel(Kernel):
    """Kernel values given directly on the nodes; not refinable."""

    refinable = False

    def __init__(self, table):
        arr = np.array(table, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("kernel table must be square")
        if not np.all(np.isfinite(arr)):
            raise ValueError("kernel table must be finite")
        arr.setflags(write=False)
        self.table = arr

    def matrix(self, interval, m):
        if m != self.table.shape[0]:
            raise ValueError(
                f"tabulated kernel has {self.table.shape[0]} nodes, grid has {m}"
            )
        return np.array(self.table)

    def __eq__(self, other):
        return isinstance(other, TabulatedKernel) and np.array_equal(self.table, other.table)

    __hash__ = None


@dataclass(frozen=True)
class DirichletGreen(Kernel):
    """Green kernel of ``x'' = F`` with homogeneous Dirichlet conditions.

    ``G(t, s) = -(b - t)(s - a)/(b - a)`` for ``s <= t`` and
    ``-(t - a)(b - s)/(b - a)`` for ``s >= t``, so that
    ``x = l + int G F ds`` solves the boundary value problem.
    """

    interval: Interval

    def matrix(self, interval, m):
        if interval != self.interval:
            raise ValueError("Green kernel evaluated on a foreign interval")
        a, b = interval.a, interval.b
        t = grid_nodes(interval, m)
        T, S = np.meshgrid(t, t, indexing="ij")
        return np.where(S <= T, -(b - T) * (S - a), -(T - a) * (b - S)) / (b - a)


def dirichlet_green(interval: Interval) -> DirichletGreen:
    return DirichletGreen(interval)


def weighted_bound_H(matrix: np.ndarray, interval: Interval) -> float:
    """``max_i sum_j w_j |K_ij|`` for a tabulated kernel matrix."""
    w = trapezoid_weights(interval, matrix.shape[0])
    return float(np.max(np.abs(matrix) @ w))


def weighted_bound_V(matrix: np.ndarray, interval: Interval) -> float:
    """``max_i sum_{j<=i} w^(i)_j |K_ij|`` with prefix trapezoid weights."""
    W = prefix_weights(interval, matrix.shape[0])
    return float(np.max(np.sum(W * np.abs(matrix), axis=1)))


def kernel_bound_H(K: Kernel, interval: Interval, m: int) -> float:
    """Discrete ``sup_t int_a^b |K(t, s)| ds``."""
    return weighted_bound_H(K.matrix(interval, m), interval)


def kernel_bound_V(K: Kernel, interval: Interval, m: int) -> float:
    """Discrete ``sup_t int_a^t |K(t, s)| ds``."""
    return weighted_bound_V(K.matrix(interval, m), interval)
