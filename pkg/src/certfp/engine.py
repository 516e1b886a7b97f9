"""Exact and inexact Picard iteration with per-step certificates."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .funcspace import GridFunction, sup_distance
from .gauge import DomainError, GaugeTail, n_gauge, n_geo, phi_geo
from .operators.maps import FixedPointOperator, IntegralOperator
from .operators.packet import DataPacket

__all__ = [
    "StopKind",
    "StopRule",
    "NoiseSource",
    "NoiseBudget",
    "TraceRow",
    "IterationTrace",
    "picard_run",
    "inexact_run",
    "residual_to_error",
    "inexact_apriori_bound",
    "error_floor",
    "quadrature_estimate",
    "grid_slack",
]


class StopKind(str, enum.Enum):
    APRIORI_GEO = "apriori"
    APRIORI_GAUGE = "gauge"
    RESIDUAL = "residual"
    FIXED_COUNT = "count"


@dataclass(frozen=True)
class StopRule:
    kind: StopKind
    eps: Optional[float] = None
    count: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", StopKind(self.kind))
        if self.kind is StopKind.FIXED_COUNT:
            if self.count is None or self.count < 0:
                raise ValueError("fixed-count rule needs count >= 0")
        elif self.eps is None or not self.eps > 0:
            raise ValueError(f"{self.kind.value} rule needs eps > 0")

    @classmethod
    def apriori(cls, eps: float) -> "StopRule":
        return cls(StopKind.APRIORI_GEO, eps=eps)

    @classmethod
    def gauge(cls, eps: float) -> "StopRule":
        return cls(StopKind.APRIORI_GAUGE, eps=eps)

    @classmethod
    def residual(cls, eps: float) -> "StopRule":
        return cls(StopKind.RESIDUAL, eps=eps)

    @classmethod
    def fixed(cls, count: int) -> "StopRule":
        return cls(StopKind.FIXED_COUNT, count=count)


class NoiseSource(str, enum.Enum):
    INJECTED = "injected"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class NoiseBudget:
    """Per-step evaluation error budget ``eta_n``.

    ``kind`` is one of ``none``, ``constant`` (``eta_bar``), ``sequence``
    (``values``; zero past the end) or ``summable`` (``eta0 * rho**n``).
    With ``source=quadrature`` the budget is replaced by a per-step Richardson
    estimate and no perturbation is injected.
    """

    kind: str = "none"
    eta_bar: float = 0.0
    values: tuple = ()
    eta0: float = 0.0
    rho: float = 0.0
    source: NoiseSource = NoiseSource.INJECTED
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "constant", "sequence", "summable"):
            raise ValueError(f"unknown noise budget kind {self.kind!r}")
        object.__setattr__(self, "source", NoiseSource(self.source))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.eta_bar < 0 or self.eta0 < 0 or any(v < 0 for v in self.values):
            raise ValueError("noise budgets must be nonnegative")
        if self.kind == "summable" and not 0 <= self.rho < 1:
            raise ValueError("summable budget needs 0 <= rho < 1")

    @classmethod
    def none(cls) -> "NoiseBudget":
        return cls("none")

    @classmethod
    def constant(cls, eta_bar: float, seed: int = 0) -> "NoiseBudget":
        return cls("constant", eta_bar=eta_bar, seed=seed)

    @classmethod
    def sequence(cls, values: Sequence[float], seed: int = 0) -> "NoiseBudget":
        return cls("sequence", values=tuple(values), seed=seed)

    @classmethod
    def summable(cls, eta0: float, rho: float, seed: int = 0) -> "NoiseBudget":
        return cls("summable", eta0=eta0, rho=rho, seed=seed)

    @classmethod
    def quadrature(cls) -> "NoiseBudget":
        return cls("none", source=NoiseSource.QUADRATURE)

    def eta(self, n: int) -> float:
        if self.kind == "constant":
            return self.eta_bar
        if self.kind == "sequence":
            return self.values[n] if n < len(self.values) else 0.0
        if self.kind == "summable":
            return self.eta0 * self.rho**n
        return 0.0

    def sup(self) -> float:
        if self.kind == "constant":
            return self.eta_bar
        if self.kind == "sequence":
            return max(self.values, default=0.0)
        if self.kind == "summable":
            return self.eta0
        return 0.0


@dataclass(frozen=True)
class TraceRow:
    n: int
    residual: float
    phi_geo: float
    phi_gauge: float
    residual_bound: float
    eta: float
    recursion_bound: Optional[float] = None

    def csv_row(self) -> list:
        return [self.n, self.residual, self.phi_geo, self.phi_gauge, self.residual_bound, self.eta]


CSV_COLUMNS = ("n", "r_n", "phi_geo", "phi_gauge", "residual_bound", "eta_n")


@dataclass(eq=False)
class IterationTrace:
    rows: list
    iterate: GridFunction
    certified_error: float
    stop_reason: str
    steps: int
    complete: bool
    kappa: float
    delta0: float
    iterates: list = field(default_factory=list)

    @property
    def residuals(self) -> list:
        return [row.residual for row in self.rows]


def residual_to_error(r: float, kappa: float) -> float:
    """``d(x, x*) <= d(x, Tx) / (1 - kappa)``."""
    if not 0.0 <= kappa < 1.0:
        raise DomainError(f"kappa must lie in [0, 1), got {kappa}")
    return r / (1.0 - kappa)


def error_floor(kappa: float, eta_bar: float) -> float:
    """Limit superior of the error of an orbit with evaluation errors ``<= eta_bar``."""
    if not 0.0 <= kappa < 1.0:
        raise DomainError(f"kappa must lie in [0, 1), got {kappa}")
    return eta_bar / (1.0 - kappa)


def _noise_sums(kappa: float, etas: Sequence[float]) -> list:
    """``S_n = sum_{j<n} kappa**(n-1-j) eta_j`` for n = 0..len(etas)."""
    out = [0.0]
    for eta in etas:
        out.append(kappa * out[-1] + eta)
    return out


def inexact_apriori_bound(n: int, kappa: float, d0: float, budget: NoiseBudget) -> float:
    """``kappa**n d0 + sum_{j<n} kappa**(n-1-j) eta_j``."""
    if not 0.0 <= kappa < 1.0:
        raise DomainError(f"kappa must lie in [0, 1), got {kappa}")
    if n < 0 or d0 < 0:
        raise DomainError("n and d0 must be nonnegative")
    return kappa**n * d0 + _noise_sums(kappa, [budget.eta(j) for j in range(n)])[n]


def quadrature_estimate(T: FixedPointOperator, x: GridFunction,
                        fine: Optional[IntegralOperator] = None) -> float:
    """Richardson estimate ``||T_m x - T_{2m-1} x||`` on the coarse nodes.

    ``x`` is carried to the refined grid by linear interpolation; the refined
    grid contains every coarse node.
    """
    if not isinstance(T, IntegralOperator):
        return 0.0
    fine = fine or T.with_grid(2 * T.m - 1)
    xf = GridFunction.from_callable(
        T.interval, fine.m, lambda t: np.interp(t, x.nodes, x.values)
    )
    return float(np.max(np.abs(T(x).values - fine(xf).values[::2])))


def grid_slack(T: FixedPointOperator, x: GridFunction) -> float:
    """Additive tolerance for soundness checks: ten Richardson estimates."""
    return 10.0 * quadrature_estimate(T, x)


def _planned_index(packet: DataPacket, rule: StopRule) -> Optional[int]:
    if rule.kind is StopKind.APRIORI_GEO:
        return n_geo(rule.eps, packet.kappa, packet.delta0)
    if rule.kind is StopKind.APRIORI_GAUGE:
        return n_gauge(packet.gauge, rule.eps, packet.delta0, packet.modulus)
    if rule.kind is StopKind.FIXED_COUNT:
        return rule.count
    return None


def _perturbation(rng: np.random.Generator, m: int, eta: float) -> np.ndarray:
    """Random-sign piecewise-linear field with sup norm exactly ``eta``."""
    if eta == 0.0:
        return np.zeros(m)
    if m == 1:
        return np.array([eta if rng.random() < 0.5 else -eta])
    knots = int(rng.integers(2, 10))
    p = np.interp(np.linspace(0.0, 1.0, m), np.linspace(0.0, 1.0, knots),
                  rng.uniform(-1.0, 1.0, knots))
    k = int(np.argmax(np.abs(p)))
    p = p / abs(p[k])
    p[k] = np.sign(p[k])
    return eta * p


def _run(packet: DataPacket, rule: StopRule, max_iter: int, budget: Optional[NoiseBudget],
         keep_iterates: bool) -> IterationTrace:
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    T = packet.operator
    kappa, delta0 = packet.kappa, packet.delta0
    planned = _planned_index(packet, rule)
    inexact = budget is not None
    quadrature = inexact and budget.source is NoiseSource.QUADRATURE
    rng = np.random.default_rng(budget.seed if inexact else 0)
    fine = None
    if quadrature and isinstance(T, IntegralOperator):
        fine = T.with_grid(2 * T.m - 1)

    gauge_tail = GaugeTail(packet.gauge, delta0, packet.modulus)

    x = packet.x0
    rows, iterates = [], [x] if keep_iterates else []
    noise = [0.0]  # noise[n] = sum_{j<n} kappa**(n-1-j) eta_j
    prev_eta = prev_res = None
    stop_reason = "max_iter"
    complete = False
    for n in range(max_iter + 1):
        Tx = T(x)
        if quadrature:
            eta = quadrature_estimate(T, x, fine)
            x_next = Tx
        elif inexact:
            eta = budget.eta(n)
            x_next = Tx.with_values(Tx.values + _perturbation(rng, T.m, eta))
        else:
            eta = 0.0
            x_next = Tx
        r = sup_distance(x_next, x)
        geo = phi_geo(n, kappa, delta0) + noise[n]
        gauge = gauge_tail(n) + noise[n]
        res_bound = residual_to_error(r + eta, kappa)
        recursion = None
        if inexact and prev_res is not None:
            recursion = kappa * prev_res + eta + prev_eta
        rows.append(TraceRow(n, r, geo, gauge, res_bound, eta, recursion))
        noise.append(kappa * noise[n] + eta)

        if planned is not None and n >= planned:
            fired = True
        elif rule.kind is StopKind.RESIDUAL:
            fired = r + eta <= (1.0 - kappa) * rule.eps
        else:
            fired = False
        if fired:
            stop_reason = rule.kind.value
            complete = True
            break
        if n == max_iter:
            break
        x = x_next
        if keep_iterates:
            iterates.append(x)
        prev_eta, prev_res = eta, r

    last = rows[-1]
    certified = min(last.phi_geo, last.phi_gauge, last.residual_bound)
    return IterationTrace(rows, x, certified, stop_reason, last.n, complete, kappa, delta0,
                          iterates)


def picard_run(packet: DataPacket, rule: StopRule, max_iter: int = 10_000,
               keep_iterates: bool = True) -> IterationTrace:
    """Iterate ``x_{n+1} = T x_n`` from the packet's ``x0`` until ``rule`` fires.

    Row ``n`` stores ``r_n = d(x_n, x_{n+1})``, ``phi_geo(n)``, the gauge tail
    bound and ``r_n / (1 - kappa)``.  The trace is flagged incomplete when
    ``max_iter`` is reached first; ``trace.iterate`` is the last ``x_n``.
    """
    return _run(packet, rule, max_iter, None, keep_iterates)


def inexact_run(packet: DataPacket, budget: NoiseBudget, rule: StopRule,
                max_iter: int = 10_000, keep_iterates: bool = True) -> IterationTrace:
    """Iterate with evaluation errors of size ``eta_n``.

    A priori columns are shifted by ``sum_{j<n} kappa**(n-1-j) eta_j`` and the
    residual certificate is ``(r_n + eta_n) / (1 - kappa)``.
    """
    return _run(packet, rule, max_iter, budget, keep_iterates)
