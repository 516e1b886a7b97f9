"""Sampled diagnostics: gauge dominance and order-interval invariance."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..funcspace import BallRegion, GridFunction, sample_ball, sup_distance
from ..gauge import Gauge, eval_gauge
from .maps import FixedPointOperator, VolterraOperator

__all__ = [
    "ControlMode",
    "DominanceReport",
    "OrderIntervalVerdict",
    "proinov_control",
    "gauge_dominance_check",
    "order_interval_check",
]

RTOL = 1e-9


class ControlMode(str, enum.Enum):
    TWO_POINT = "two_point"
    PROINOV = "proinov"


def proinov_control(T: FixedPointOperator, x: GridFunction, y: GridFunction) -> float:
    """``max{d(x,y), d(x,Tx), d(y,Ty), (d(x,Ty) + d(y,Tx))/2}``."""
    Tx, Ty = T(x), T(y)
    return _proinov(x, y, Tx, Ty)


def _proinov(x, y, Tx, Ty) -> float:
    return max(
        sup_distance(x, y),
        sup_distance(x, Tx),
        sup_distance(y, Ty),
        0.5 * (sup_distance(x, Ty) + sup_distance(y, Tx)),
    )


@dataclass(frozen=True, eq=False)
class DominanceReport:
    mode: ControlMode
    max_ratio: float
    consistent: bool
    pairs_checked: int
    pairs_skipped: int
    witness: Optional[tuple] = None
    witness_control: float = 0.0
    witness_image_distance: float = 0.0

    @property
    def verdict(self) -> str:
        return "consistent" if self.consistent else "violated"

    @property
    def witness_lipschitz_ratio(self) -> float:
        """``d(Tx, Ty) / control`` at the witness pair."""
        if self.witness_control == 0:
            return 0.0
        return self.witness_image_distance / self.witness_control


def gauge_dominance_check(T: FixedPointOperator, g: Gauge, region: BallRegion,
                          mode: ControlMode = ControlMode.TWO_POINT, samples: int = 24,
                          seed: int = 0) -> DominanceReport:
    """Largest ``d(Tx, Ty) / omega(control)`` over all pairs of sampled points.

    Pairs with zero control are skipped.  The verdict is ``consistent`` when
    the ratio stays below ``1 + 1e-9``; otherwise the maximising pair is the
    witness.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    mode = ControlMode(mode)
    pts = sample_ball(region, samples, seed)
    imgs = [T(x) for x in pts]
    best = (-np.inf, None, 0.0, 0.0)
    checked = skipped = 0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            x, y, Tx, Ty = pts[i], pts[j], imgs[i], imgs[j]
            if mode is ControlMode.TWO_POINT:
                control = sup_distance(x, y)
            else:
                control = _proinov(x, y, Tx, Ty)
            if control == 0.0:
                skipped += 1
                continue
            checked += 1
            image = sup_distance(Tx, Ty)
            bound = eval_gauge(g, control)
            ratio = np.inf if bound == 0.0 and image > 0 else (image / bound if bound else 0.0)
            if ratio > best[0]:
                best = (ratio, (x, y), control, image)
    max_ratio = float(best[0]) if checked else 0.0
    consistent = max_ratio <= 1.0 + RTOL
    return DominanceReport(
        mode=mode,
        max_ratio=max_ratio,
        consistent=consistent,
        pairs_checked=checked,
        pairs_skipped=skipped,
        witness=None if consistent else best[1],
        witness_control=best[2],
        witness_image_distance=best[3],
    )


@dataclass(frozen=True)
class OrderIntervalVerdict:
    ok: bool
    failure: Optional[str]
    worst_margin: float
    violations: int
    samples: int

    def __bool__(self):
        return self.ok


def _order_samples(lower: np.ndarray, upper: np.ndarray, count: int, seed: int):
    rng = np.random.default_rng(seed)
    m = lower.size
    grid = np.linspace(0.0, 1.0, m)
    out = [lower.copy(), upper.copy(), 0.5 * (lower + upper)]
    while len(out) < count:
        knots = int(rng.integers(2, 10))
        theta = np.interp(grid, np.linspace(0.0, 1.0, knots), rng.uniform(0.0, 1.0, knots))
        out.append(lower + theta * (upper - lower))
    return out[:count]


def order_interval_check(T: VolterraOperator, lower: GridFunction, upper: GridFunction,
                         samples: int = 100, seed: int = 0, tol: float = RTOL
                         ) -> OrderIntervalVerdict:
    """Check ``lower <= Tx <= upper`` for sampled ``x`` in ``[lower, upper]``.

    Preconditions are verified first and reported as distinct failures:
    ``kernel_negative``, ``nonlinearity_not_monotone``, ``empty_interval``,
    ``lower_end_condition`` (lower <= T lower) and ``upper_end_condition``
    (T upper <= upper).  The margin is ``min(Tx - lower, upper - Tx)``; a
    violation is a margin below ``-tol * scale``.
    """
    T.check_grid(lower)
    T.check_grid(upper)
    lo, hi = lower.values, upper.values
    scale = max(1.0, float(np.max(np.abs(lo))), float(np.max(np.abs(hi))))
    slack = tol * scale

    def verdict(failure, margin=float("nan"), violations=0, n=0):
        return OrderIntervalVerdict(failure is None, failure, margin, violations, n)

    tri = np.tril(np.ones((T.m, T.m), dtype=bool))
    if np.any(T.kernel_matrix[tri] < 0):
        return verdict("kernel_negative", float(np.min(T.kernel_matrix[tri])))
    if np.any(hi < lo):
        return verdict("empty_interval", float(np.min(hi - lo)))
    if not T.nonlinearity.is_nondecreasing(T.interval, float(np.min(lo)), float(np.max(hi))):
        return verdict("nonlinearity_not_monotone")
    end_lo = float(np.min(T(lower).values - lo))
    if end_lo < -slack:
        return verdict("lower_end_condition", end_lo)
    end_hi = float(np.min(hi - T(upper).values))
    if end_hi < -slack:
        return verdict("upper_end_condition", end_hi)

    worst = np.inf
    violations = 0
    draws = _order_samples(lo, hi, samples, seed)
    for vals in draws:
        Tx = T(lower.with_values(vals)).values
        margin = float(min(np.min(Tx - lo), np.min(hi - Tx)))
        worst = min(worst, margin)
        if margin < -slack:
            violations += 1
    failure = None if violations == 0 else "invariance_violated"
    return verdict(failure, worst, violations, len(draws))
