"""Contractive gauges, certified local moduli and a priori bound functions.

A gauge ``omega`` bounds ``d(Tx, Ty)`` by ``omega(d(x, y))``.  On a working
radius ``R`` the ratio ``omega(r)/r`` is bounded by a certified constant
``kappa < 1`` which turns every gauge into a geometric rate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

__all__ = [
    "DomainError",
    "NotCertifiable",
    "Gauge",
    "Geometric",
    "LinearDefect",
    "CustomGauge",
    "power_defect",
    "ModulusMethod",
    "CertifiedModulus",
    "eval_gauge",
    "certify_modulus",
    "gauge_orbit",
    "phi_geo",
    "phi_gauge",
    "phi_gauge_series",
    "GaugeTail",
    "n_geo",
    "n_gauge",
]

# relative inflation applied to sampled moduli
SAFETY_MARGIN = 1e-12
# phi_gauge stops summing once a term drops below this share of the partial tail
TAIL_TRIGGER = 1e-3
N_GAUGE_CAP = 10**7


class DomainError(ValueError):
    """Argument outside the domain where a formula is defined."""


class NotCertifiable(Exception):
    """Raised when no modulus ``kappa < 1`` can be certified."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class Gauge:
    """Base class; subclasses implement ``__call__`` and ``modulus``."""

    def __call__(self, r: float) -> float:
        raise NotImplementedError

    def modulus(self, radius: float) -> "CertifiedModulus":
        raise NotImplementedError


@dataclass(frozen=True)
class Geometric(Gauge):
    """``omega(r) = q r``; the Banach regime."""

    q: float

    def __post_init__(self):
        # q = 0 is admitted for the zero map (empty kernel)
        if not 0.0 <= self.q < 1.0:
            raise DomainError(f"geometric ratio must lie in [0, 1), got {self.q}")

    @property
    def theta(self) -> tuple:
        return (self.q,)

    def __call__(self, r: float) -> float:
        return self.q * r

    def modulus(self, radius: float) -> "CertifiedModulus":
        return CertifiedModulus(self.q, radius, ModulusMethod.ANALYTIC)


@dataclass(frozen=True)
class LinearDefect(Gauge):
    """``omega(r) = r - c r`` with defect rate ``c`` in (0, 1]."""

    c: float

    def __post_init__(self):
        if not 0.0 < self.c <= 1.0:
            raise DomainError(f"defect rate must lie in (0, 1], got {self.c}")

    @property
    def theta(self) -> tuple:
        return (self.c,)

    def __call__(self, r: float) -> float:
        return (1.0 - self.c) * r

    def modulus(self, radius: float) -> "CertifiedModulus":
        return CertifiedModulus(1.0 - self.c, radius, ModulusMethod.ANALYTIC)


@dataclass(frozen=True)
class CustomGauge(Gauge):
    """User supplied gauge.

    ``ratio`` declares the monotonicity of ``r -> omega(r)/r`` on (0, R]:
    ``"nondecreasing"`` (sup attained at R), ``"nonincreasing"`` (sup is the
    limit at 0) or ``None``.  A ``modulus_fn`` returning an analytic upper
    bound for the sup ratio takes precedence over the declaration.
    """

    func: Callable[[float], float]
    ratio: Optional[str] = None
    modulus_fn: Optional[Callable[[float], float]] = None
    theta: tuple = ()
    name: str = "custom"

    def __post_init__(self):
        if self.ratio not in (None, "nondecreasing", "nonincreasing"):
            raise ValueError(f"unknown ratio declaration {self.ratio!r}")

    def __call__(self, r: float) -> float:
        return float(self.func(r))

    def modulus(self, radius: float) -> "CertifiedModulus":
        if self.modulus_fn is not None:
            kappa = float(self.modulus_fn(radius))
            method = ModulusMethod.ANALYTIC
        elif self.ratio == "nondecreasing":
            kappa = self(radius) / radius * (1.0 + SAFETY_MARGIN)
            method = ModulusMethod.GRID_SUP_MONOTONE_RATIO
        elif self.ratio == "nonincreasing":
            # sup is the limit at 0+; a finite probe can only refute
            probe = [self(radius * 10.0**-k) / (radius * 10.0**-k) for k in range(1, 13)]
            if max(probe) >= 1.0 - 1e-9:
                raise NotCertifiable("sup ratio reaches 1")
            raise NotCertifiable("ratio limit at 0 needs an analytic modulus routine")
        else:
            raise NotCertifiable("ratio monotonicity undeclared")
        if not kappa < 1.0:
            raise NotCertifiable("sup ratio reaches 1")
        return CertifiedModulus(kappa, radius, method)


def power_defect(c: float, p: float = 2.0) -> CustomGauge:
    """``omega(r) = r - c r**p``; its ratio ``1 - c r**(p-1)`` tends to 1 at 0."""
    return CustomGauge(
        func=lambda r: r - c * r**p,
        ratio="nonincreasing",
        theta=(c, p),
        name="power_defect",
    )


class ModulusMethod(str, enum.Enum):
    ANALYTIC = "analytic"
    GRID_SUP_MONOTONE_RATIO = "grid_sup_monotone_ratio"


@dataclass(frozen=True)
class CertifiedModulus:
    kappa: float
    radius: float
    method: ModulusMethod = ModulusMethod.ANALYTIC

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError(f"radius must be positive, got {self.radius}")
        if not 0.0 <= self.kappa < 1.0:
            raise NotCertifiable(f"sup ratio reaches 1 (kappa={self.kappa})")


def eval_gauge(g: Gauge, r: float) -> float:
    if r < 0:
        raise DomainError(f"gauge argument must be nonnegative, got {r}")
    if r == 0:
        return 0.0
    return g(r)


def certify_modulus(g: Gauge, radius: float) -> CertifiedModulus:
    """Certify ``kappa = sup_{0<r<=R} omega(r)/r < 1`` or raise NotCertifiable."""
    if not radius > 0:
        raise DomainError(f"radius must be positive, got {radius}")
    return g.modulus(radius)


def gauge_orbit(g: Gauge, r0: float, n: int) -> list[float]:
    """Return ``[r0, omega(r0), ..., omega^n(r0)]``."""
    if r0 < 0 or n < 0:
        raise DomainError("gauge_orbit needs r0 >= 0 and n >= 0")
    out = [float(r0)]
    for _ in range(n):
        out.append(eval_gauge(g, out[-1]))
    return out


def _check_kappa(kappa: float) -> None:
    if not 0.0 <= kappa < 1.0:
        raise DomainError(f"kappa must lie in [0, 1), got {kappa}")


def phi_geo(n: int, kappa: float, delta0: float) -> float:
    """Geometric a priori bound ``kappa**n * delta0 / (1 - kappa)``."""
    _check_kappa(kappa)
    if delta0 < 0 or n < 0:
        raise DomainError("phi_geo needs n >= 0 and delta0 >= 0")
    return kappa**n / (1.0 - kappa) * delta0


class _Orbit:
    """Lazily extended gauge orbit shared between tail evaluations.

    Each step is clamped to ``kappa * r``, which the certified modulus
    guarantees anyway; this keeps rounding from stalling the orbit.
    """

    def __init__(self, g: Gauge, r0: float, kappa: float):
        self.g = g
        self.kappa = kappa
        self.terms = [float(r0)]

    def __getitem__(self, j: int) -> float:
        terms = self.terms
        while len(terms) <= j:
            r = terms[-1]
            terms.append(min(eval_gauge(self.g, r), self.kappa * r))
        return terms[j]


def _tail(orbit: _Orbit, n: int, kappa: float) -> float:
    partial = 0.0
    j = n
    while True:
        term = orbit[j]
        partial += term
        if term <= TAIL_TRIGGER * partial:
            return partial + term * kappa / (1.0 - kappa)
        j += 1


class GaugeTail:
    """Callable ``n -> phi_gauge(n)`` for fixed gauge data, caching the orbit."""

    def __init__(self, g: Gauge, delta0: float, modulus: CertifiedModulus):
        _check_gauge_data(delta0, modulus)
        self._orbit = _Orbit(g, delta0, modulus.kappa)
        self.kappa = modulus.kappa
        self.delta0 = delta0

    def __call__(self, n: int) -> float:
        if n < 0:
            raise DomainError("n must be nonnegative")
        # both are upper bounds; the cap matters only at subnormal scales
        return min(_tail(self._orbit, n, self.kappa), phi_geo(n, self.kappa, self.delta0))


def _check_gauge_data(delta0: float, modulus: CertifiedModulus) -> None:
    if delta0 < 0:
        raise DomainError(f"delta0 must be nonnegative, got {delta0}")
    if delta0 > modulus.radius:
        raise DomainError(
            f"delta0={delta0} exceeds the certified radius {modulus.radius}"
        )


def phi_gauge(g: Gauge, n: int, delta0: float, modulus: CertifiedModulus) -> float:
    """Upper bound on ``sum_{j>=n} omega^j(delta0)``.

    Terms are summed explicitly until one falls below ``1e-3`` of the
    running partial sum; the remainder is closed with the certified
    geometric tail ``term * kappa / (1 - kappa)``.
    """
    return GaugeTail(g, delta0, modulus)(n)


def phi_gauge_series(
    g: Gauge, delta0: float, modulus: CertifiedModulus, n_max: int
) -> list[float]:
    """``[phi_gauge(n) for n in 0..n_max]`` sharing one orbit."""
    tail = GaugeTail(g, delta0, modulus)
    return [tail(n) for n in range(n_max + 1)]


def n_geo(eps: float, kappa: float, delta0: float) -> int:
    """Smallest ``n`` with ``phi_geo(n) <= eps``, from the closed form.

    The ceiling of a ratio of logarithms can land one index off in floating
    point, so the candidate is repaired against ``phi_geo`` directly.
    """
    _check_kappa(kappa)
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if delta0 <= (1.0 - kappa) * eps:
        return 0
    if kappa == 0.0:
        return 1
    n = max(0, math.ceil(math.log((1.0 - kappa) * eps / delta0) / math.log(kappa)))
    while phi_geo(n, kappa, delta0) > eps:
        n += 1
    while n > 0 and phi_geo(n - 1, kappa, delta0) <= eps:
        n -= 1
    return n


def n_gauge(g: Gauge, eps: float, delta0: float, modulus: CertifiedModulus) -> int:
    """Smallest ``n`` with ``phi_gauge(n) <= eps`` by incremental scan."""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    tail = GaugeTail(g, delta0, modulus)
    for n in range(N_GAUGE_CAP + 1):
        if tail(n) <= eps:
            return n
    raise NotCertifiable(f"stopping index scan exceeded {N_GAUGE_CAP} iterations")
