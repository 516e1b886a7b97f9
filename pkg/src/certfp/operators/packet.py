"""Admissible data packets and the six-item diagnostic checklist."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..funcspace import BallRegion, GridFunction, sample_ball, sup_distance
from ..gauge import CertifiedModulus, DomainError, Gauge, Geometric, certify_modulus
from .maps import AffineScalarOperator, FixedPointOperator, IntegralOperator

__all__ = [
    "ChecklistItem",
    "ChecklistFailure",
    "DataPacket",
    "invariant_radius",
    "build_packet",
    "verify_invariance",
]

RTOL = 1e-9
INVARIANCE_SAMPLES = 32

CHECK_NAMES = {
    "C1": "space",
    "C2": "region",
    "C3": "gauge",
    "C4": "local modulus",
    "C5": "perturbations",
    "C6": "initialization",
}


@dataclass(frozen=True)
class ChecklistItem:
    item: str
    passed: bool
    evidence: dict = field(default_factory=dict)
    note: str = ""

    @property
    def name(self) -> str:
        return CHECK_NAMES[self.item]

    def to_dict(self) -> dict:
        return {
            "item": self.item,
            "name": self.name,
            "verdict": "pass" if self.passed else "fail",
            "evidence": self.evidence,
            "note": self.note,
        }


class ChecklistFailure(Exception):
    """The first failing checklist item together with everything checked so far."""

    def __init__(self, item: ChecklistItem, checklist: tuple):
        self.item = item
        self.checklist = checklist
        super().__init__(f"{item.item}: {item.note}")


@dataclass(frozen=True, eq=False)
class DataPacket:
    operator: FixedPointOperator
    region: BallRegion
    gauge: Gauge
    modulus: CertifiedModulus
    x0: GridFunction
    delta0: float
    checklist: tuple
    constants: dict

    @property
    def kappa(self) -> float:
        return self.modulus.kappa

    @property
    def radius(self) -> float:
        return self.region.radius


def invariant_radius(forcing_norm: float, M: float, Mf0: float, L: float) -> float:
    """``(||g|| + M * M_f0) / (1 - L)``: the smallest ball the bound keeps invariant."""
    if not L < 1.0:
        raise DomainError(f"Lipschitz modulus must be < 1, got {L}")
    if forcing_norm < 0 or M < 0 or Mf0 < 0:
        raise DomainError("norms and bounds must be nonnegative")
    return (forcing_norm + M * Mf0) / (1.0 - L)


def verify_invariance(T: FixedPointOperator, region: BallRegion, samples: int = INVARIANCE_SAMPLES,
                      seed: int = 0) -> float:
    """Largest ``d(center, Tx) / R`` over sampled ``x`` in the ball."""
    worst = 0.0
    for x in sample_ball(region, samples, seed):
        worst = max(worst, sup_distance(region.center, T(x)))
    return worst / region.radius


class _Checklist:
    def __init__(self):
        self.items: list[ChecklistItem] = []

    def record(self, item: str, passed: bool, note: str = "", **evidence) -> None:
        entry = ChecklistItem(item, bool(passed), _plain(evidence), note)
        self.items.append(entry)
        if not passed:
            raise ChecklistFailure(entry, self.ordered())

    def ordered(self) -> tuple:
        return tuple(sorted(self.items, key=lambda c: c.item))


def _plain(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        elif isinstance(v, np.bool_):
            v = bool(v)
        out[k] = v
    return out


def build_packet(T: FixedPointOperator, x0: GridFunction, radius: Optional[float] = None,
                 samples: int = INVARIANCE_SAMPLES, seed: int = 0) -> DataPacket:
    """Run checklist C1-C6 and return a certified packet.

    The invariant ball is centred at the zero function.  ``radius`` may
    enlarge the analytic radius (any larger ball stays invariant), e.g. to
    share one region between two operators.  Raises ChecklistFailure naming
    the first failed item.
    """
    T.check_grid(x0)
    if isinstance(T, AffineScalarOperator):
        return _scalar_packet(T, x0, radius)
    if not isinstance(T, IntegralOperator):
        raise TypeError(f"no checklist for operator kind {T.kind!r}")

    checks = _Checklist()
    nl = T.nonlinearity
    finite = bool(np.all(np.isfinite(T.weighted)) and np.all(np.isfinite(T.forcing.values)))
    checks.record(
        "C1", finite, "" if finite else "non-finite data on the grid",
        space="C([a,b]) with sup norm (complete)", a=T.interval.a, b=T.interval.b, m=T.m,
    )

    M = T.kernel_bound()
    L = nl.lip * M
    g_norm = T.forcing.norm()

    # C3 needs R for the verification lattice; a failing C4 is reported before C2
    R_lattice = invariant_radius(g_norm, M, nl.zero_bound, L) if L < 1 else g_norm + 1.0
    lattice = nl.verify(T.interval, R_lattice)
    c3_ok = lattice.lip_ok and lattice.zero_ok
    if not lattice.lip_ok:
        note = f"declared L_f={nl.lip} below sampled quotient {lattice.max_quotient:.12g}"
    elif not lattice.zero_ok:
        note = f"declared M_f0={nl.zero_bound} below sampled {lattice.max_zero:.12g}"
    else:
        note = "geometric gauge omega(r)=L r, two-point form"
    checks.record(
        "C3", c3_ok, note, L_f=nl.lip, M=M, L=L, sampled_lip=lattice.max_quotient,
        M_f0=nl.zero_bound, sampled_M_f0=lattice.max_zero,
    )

    if not L < 1.0:
        checks.record("C4", False, f"kappa={L:.12g} >= 1", kappa=L, M=M, L_f=nl.lip)

    R = invariant_radius(g_norm, M, nl.zero_bound, L)
    degenerate = R == 0.0
    if degenerate:
        R = 1.0
    if radius is not None:
        if radius < R * (1.0 - RTOL):
            raise DomainError(f"requested radius {radius} is below the invariant radius {R}")
        R = max(R, float(radius))

    gauge = Geometric(L)
    # certified on 2R: iterate distances inside B(0, R) are bounded by the diameter
    modulus = certify_modulus(gauge, 2.0 * R)
    checks.record("C4", True, f"kappa={modulus.kappa:.12g} < 1", kappa=modulus.kappa,
                  radius=modulus.radius, method=modulus.method.value)

    region = BallRegion(T.zero(), R)
    x0_norm = x0.norm()
    if not region.contains(x0, RTOL):
        checks.record("C2", False, f"x0 outside C: ||x0||={x0_norm:.12g} > R={R:.12g}",
                      R=R, x0_norm=x0_norm)
    ratio = verify_invariance(T, region, samples, seed)
    checks.record(
        "C2", ratio <= 1.0 + RTOL,
        f"C=B(0,R), max ||Tx||/R = {ratio:.12g}" + (" (radius inflated from 0)" if degenerate else ""),
        R=R, x0_norm=x0_norm, max_image_ratio=ratio, samples=samples,
    )
    checks.record("C5", True, "evaluated per perturbed pair (stability)")

    Tx0 = T(x0)
    delta0 = sup_distance(Tx0, x0)
    checks.record("C6", True, f"delta0={delta0:.12g}", delta0=delta0)

    constants = {"L_f": nl.lip, "M": M, "L": L, "kappa": modulus.kappa, "R": R,
                 "delta0": delta0, "M_f0": nl.zero_bound, "forcing_norm": g_norm}
    return DataPacket(T, region, gauge, modulus, x0, delta0, checks.ordered(), constants)


def _scalar_packet(T: AffineScalarOperator, x0: GridFunction, radius: Optional[float]
                   ) -> DataPacket:
    checks = _Checklist()
    checks.record("C1", True, space="R with |x-y| (complete)")
    L = abs(T.slope)
    checks.record("C3", True, "geometric gauge omega(r)=|slope| r", L=L)
    if not L < 1.0:
        checks.record("C4", False, f"kappa={L:.12g} >= 1", kappa=L)
    # every ball B(0, R') with R' >= |offset|/(1-L) is invariant; grow it to hold x0
    R = max(invariant_radius(abs(T.offset), 0.0, 0.0, L), x0.norm())
    if radius is not None:
        R = max(R, float(radius))
    if R == 0.0:
        R = 1.0
    gauge = Geometric(L)
    modulus = certify_modulus(gauge, 2.0 * R)
    checks.record("C4", True, f"kappa={modulus.kappa:.12g} < 1", kappa=modulus.kappa,
                  radius=modulus.radius, method=modulus.method.value)
    region = BallRegion(T.zero(), R)
    image = abs(T.slope) * R + abs(T.offset)
    checks.record("C2", image <= R * (1.0 + RTOL), f"C=B(0,R), max |Tx|/R = {image / R:.12g}",
                  R=R, max_image_ratio=image / R)
    checks.record("C5", True, "evaluated per perturbed pair (stability)")
    delta0 = sup_distance(T(x0), x0)
    checks.record("C6", True, f"delta0={delta0:.12g}", delta0=delta0)
    constants = {"L_f": None, "M": None, "L": L, "kappa": modulus.kappa, "R": R,
                 "delta0": delta0, "M_f0": None, "forcing_norm": abs(T.offset)}
    return DataPacket(T, region, gauge, modulus, x0, delta0, checks.ordered(), constants)
