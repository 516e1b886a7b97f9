"""Uniform-grid model of C([a, b]) with the sup-norm metric.

Single-node functions model the real line with ``|x - y|``; they support the
metric but not quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

__all__ = [
    "GridMismatch",
    "Interval",
    "GridFunction",
    "BallRegion",
    "SCALAR_INTERVAL",
    "grid_nodes",
    "trapezoid_weights",
    "prefix_weights",
    "sup_distance",
    "integrate",
    "integrate_prefix",
    "sample_ball",
]

DEFAULT_GRID_SIZE = 401


class GridMismatch(ValueError):
    """Two grid functions live on different grids."""


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a < self.b):
            raise ValueError(f"interval needs finite a < b, got [{self.a}, {self.b}]")

    @property
    def length(self) -> float:
        return self.b - self.a


SCALAR_INTERVAL = Interval(0.0, 1.0)


@lru_cache(maxsize=32)
def _nodes(a: float, b: float, m: int) -> np.ndarray:
    if m == 1:
        out = np.array([a])
    else:
        out = a + (b - a) * np.arange(m) / (m - 1)
        out[-1] = b
    out.setflags(write=False)
    return out


def grid_nodes(interval: Interval, m: int) -> np.ndarray:
    return _nodes(interval.a, interval.b, m)


@lru_cache(maxsize=32)
def _weights(a: float, b: float, m: int) -> np.ndarray:
    h = (b - a) / (m - 1)
    w = np.full(m, h)
    w[0] = w[-1] = 0.5 * h
    w.setflags(write=False)
    return w


def trapezoid_weights(interval: Interval, m: int) -> np.ndarray:
    """Composite trapezoid weights on the uniform ``m``-node grid."""
    if m < 2:
        raise ValueError("quadrature needs at least two nodes")
    return _weights(interval.a, interval.b, m)


@lru_cache(maxsize=8)
def _prefix(a: float, b: float, m: int) -> np.ndarray:
    h = (b - a) / (m - 1)
    W = np.tril(np.full((m, m), h))
    W[:, 0] = 0.5 * h
    W[np.arange(m), np.arange(m)] = 0.5 * h
    W[0, 0] = 0.0
    W.setflags(write=False)
    return W


def prefix_weights(interval: Interval, m: int) -> np.ndarray:
    """Row ``k`` holds the trapezoid weights of the integral over [a, t_k]."""
    if m < 2:
        raise ValueError("quadrature needs at least two nodes")
    return _prefix(interval.a, interval.b, m)


class GridFunction:
    """Samples of a continuous function at the uniform nodes of an interval.

    Instances are immutable; arithmetic returns new objects and requires the
    operands to share interval and node count exactly.
    """

    __slots__ = ("interval", "values")

    def __init__(self, interval: Interval, values):
        vals = np.array(values, dtype=float)
        if vals.ndim != 1 or vals.size < 1:
            raise ValueError("grid function values must be a nonempty 1-d array")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "interval", interval)
        object.__setattr__(self, "values", vals)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    @classmethod
    def from_callable(
        cls, interval: Interval, m: int, fn: Callable[[np.ndarray], np.ndarray]
    ) -> "GridFunction":
        t = grid_nodes(interval, m)
        vals = np.broadcast_to(np.asarray(fn(t), dtype=float), t.shape)
        return cls(interval, vals)

    @classmethod
    def constant(cls, interval: Interval, m: int, c: float) -> "GridFunction":
        return cls(interval, np.full(m, float(c)))

    @classmethod
    def zeros(cls, interval: Interval, m: int) -> "GridFunction":
        return cls(interval, np.zeros(m))

    @classmethod
    def scalar(cls, value: float) -> "GridFunction":
        return cls(SCALAR_INTERVAL, [value])

    @property
    def m(self) -> int:
        return self.values.size

    @property
    def nodes(self) -> np.ndarray:
        return grid_nodes(self.interval, self.m)

    def same_grid(self, other: "GridFunction") -> bool:
        return self.interval == other.interval and self.m == other.m

    def _check(self, other: "GridFunction") -> None:
        if not isinstance(other, GridFunction):
            raise TypeError(f"expected GridFunction, got {type(other).__name__}")
        if not self.same_grid(other):
            raise GridMismatch(
                f"grid mismatch: {self.interval}/{self.m} vs {other.interval}/{other.m}"
            )

    def norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.interval, values)

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - float(other))

    def __neg__(self):
        return self.with_values(-self.values)

    def __mul__(self, c):
        if isinstance(c, GridFunction):
            self._check(c)
            return self.with_values(self.values * c.values)
        return self.with_values(self.values * float(c))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, GridFunction):
            return NotImplemented
        return self.same_grid(other) and bool(np.array_equal(self.values, other.values))

    __hash__ = None

    def __repr__(self):
        return (
            f"GridFunction([{self.interval.a}, {self.interval.b}], m={self.m}, "
            f"norm={self.norm():.6g})"
        )


@dataclass(frozen=True, eq=False)
class BallRegion:
    """Closed sup-norm ball ``B(center, radius)``."""

    center: GridFunction
    radius: float

    def __post_init__(self):
        if not (self.radius >= 0 and np.isfinite(self.radius)):
            raise ValueError(f"ball radius must be finite and nonnegative, got {self.radius}")

    def contains(self, x: GridFunction, rtol: float = 1e-9) -> bool:
        return sup_distance(self.center, x) <= self.radius * (1.0 + rtol)


def sup_distance(x: GridFunction, y: GridFunction) -> float:
    x._check(y)
    return float(np.max(np.abs(x.values - y.values)))


def integrate(x: GridFunction) -> float:
    """Composite trapezoid approximation of the integral over [a, b]."""
    w = trapezoid_weights(x.interval, x.m)
    return float(w @ x.values)


def integrate_prefix(x: GridFunction, k: int) -> float:
    """Trapezoid approximation of the integral over [a, t_k]."""
    if not 0 <= k < x.m:
        raise IndexError(f"node index {k} out of range for m={x.m}")
    if k == x.m - 1:
        return integrate(x)
    W = prefix_weights(x.interval, x.m)
    return float(W[k] @ x.values)


def _sawtooth(m: int, teeth: int = 4) -> np.ndarray:
    if m == 1:
        return np.ones(1)
    u = np.linspace(0.0, teeth, m)
    saw = 1.0 - 4.0 * np.abs(u - np.floor(u) - 0.5)
    return saw / np.max(np.abs(saw))


def sample_ball(region: BallRegion, count: int, seed: int) -> list[GridFunction]:
    """Deterministic sample of ``count`` points of the ball.

    The structured extremes come first: the center, constant offsets
    ``+-radius`` and ``+-radius * sawtooth``.  The rest are random
    piecewise-linear perturbations, half of them at full amplitude, clipped
    to the ball.
    """
    if count < 1:
        raise ValueError("sample count must be at least 1")
    c = region.center
    r = float(region.radius)
    m = c.m
    ones = np.ones(m)
    saw = _sawtooth(m)
    offsets = [np.zeros(m), r * ones, -r * ones, r * saw, -r * saw]
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 1.0, m)
    while len(offsets) < count:
        knots = int(rng.integers(2, 10))
        kx = np.linspace(0.0, 1.0, knots)
        ky = rng.uniform(-1.0, 1.0, knots)
        p = np.interp(grid, kx, ky)
        peak = np.max(np.abs(p))
        if len(offsets) % 2 == 0 and peak > 0:
            p = p / peak
        else:
            p = p * rng.uniform(0.0, 1.0)
        offsets.append(np.clip(r * p, -r, r))
    return [c.with_values(_inside(c.values, off, r)) for off in offsets[:count]]


def _inside(center: np.ndarray, offset: np.ndarray, r: float) -> np.ndarray:
    # center + offset can round one ulp past the sphere
    s = center + offset
    bad = np.abs(s - center) > r
    while np.any(bad):
        s[bad] = np.nextafter(s[bad], center[bad])
        bad = np.abs(s - center) > r
    return s
