"""Dependence of fixed points on the operator.

A uniform perturbation ``eps = sup_{x in C} d(Tx, Sx)`` moves the fixed point
by at most ``eps / (1 - kappa)``.  The sampled sup is only a lower estimate;
certified claims use the model-level bounds whenever the pair allows one.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

from .engine import StopRule, picard_run
from .funcspace import BallRegion, GridFunction, GridMismatch, sample_ball, sup_distance
from .gauge import DomainError
from .operators.kernels import weighted_bound_H, weighted_bound_V
from .operators.maps import (
    AffineScalarOperator,
    FixedPointOperator,
    GreenOperator,
    IntegralOperator,
    VolterraOperator,
)
from .operators.packet import DataPacket, build_packet

__all__ = [
    "StructuralError",
    "PerturbationReport",
    "epsilon_sup",
    "stability_bound",
    "sharpness_demo",
    "hammerstein_perturbation_bound",
    "bvp_perturbation_bound",
    "model_perturbation_bound",
    "two_sided_stability",
]

SOLVE_EPS = 1e-10
SHARPNESS_EPS = 1e-13
EPS_SAMPLES = 32


class StructuralError(ValueError):
    """Two packets that cannot be compared (different grids or regions)."""


@dataclass(frozen=True)
class PerturbationReport:
    eps_estimate: float
    eps_analytic: Optional[float]
    kappa: float
    stab_bound: float
    observed_gap: Optional[float] = None
    slack: float = 0.0
    # "analytic" when stab_bound rests on a model-level bound, "estimate" otherwise
    bound_basis: str = "estimate"

    @property
    def consistent(self) -> bool:
        if self.observed_gap is not None and self.observed_gap > self.stab_bound + self.slack:
            return False
        if self.eps_analytic is not None and self.eps_estimate > self.eps_analytic + 1e-9:
            return False
        return True

    def to_dict(self) -> dict:
        out = asdict(self)
        out["eps_estimate_label"] = "sampled lower estimate of sup_C d(Tx, Sx)"
        out["consistent"] = self.consistent
        return out


def epsilon_sup(T: FixedPointOperator, S: FixedPointOperator, region: BallRegion,
                samples: int = EPS_SAMPLES, seed: int = 0) -> float:
    """Largest ``d(Tx, Sx)`` over ``sample_ball`` draws; a lower estimate of the sup."""
    if T.m != S.m or T.interval != S.interval:
        raise GridMismatch("operators live on different grids")
    return max(sup_distance(T(x), S(x)) for x in sample_ball(region, samples, seed))


def stability_bound(kappa: float, eps: float) -> float:
    if not 0.0 <= kappa < 1.0:
        raise DomainError(f"kappa must lie in [0, 1), got {kappa}")
    if eps < 0:
        raise DomainError(f"eps must be nonnegative, got {eps}")
    return eps / (1.0 - kappa)


def hammerstein_perturbation_bound(dg: float, dK: float, Mf0: float, Lf: float, R: float
                                   ) -> float:
    """``||g - g~|| + (sup_t int |K - K~| ds) (M_f0 + L_f R)``."""
    return dg + dK * (Mf0 + Lf * R)


def bvp_perturbation_bound(dl: float, dG: float, MF0: float, LF: float, R: float) -> float:
    """Same shape as the Hammerstein bound with the interpolant and Green kernel."""
    return dl + dG * (MF0 + LF * R)


def model_perturbation_bound(T: FixedPointOperator, S: FixedPointOperator, R: float
                             ) -> Optional[float]:
    """Exact sup bound over ``B(0, R)`` for the discrete pair, or None.

    Available when both maps share kind and grid and, for integral maps,
    the nonlinearity; the kernel difference is measured with the quadrature
    the operators use.
    """
    if type(T) is not type(S) or T.m != S.m or T.interval != S.interval:
        return None
    if isinstance(T, AffineScalarOperator):
        return abs(T.slope - S.slope) * R + abs(T.offset - S.offset)
    if not isinstance(T, IntegralOperator) or T.nonlinearity != S.nonlinearity:
        return None
    nl = T.nonlinearity
    dg = sup_distance(T.forcing, S.forcing)
    diff = T.kernel_matrix - S.kernel_matrix
    bound_fn = weighted_bound_V if isinstance(T, VolterraOperator) else weighted_bound_H
    dK = bound_fn(diff, T.interval)
    combine = bvp_perturbation_bound if isinstance(T, GreenOperator) else \
        hammerstein_perturbation_bound
    return combine(dg, dK, nl.zero_bound, nl.lip, R)


def _solve(packet: DataPacket, eps: float):
    trace = picard_run(packet, StopRule.residual(eps), max_iter=100_000, keep_iterates=False)
    if not trace.complete:
        raise RuntimeError("Picard iteration did not reach the requested certificate")
    return trace


def sharpness_demo(kappa: float, eps: float) -> dict:
    """Fixed points of ``T x = kappa x`` and ``S x = kappa x + eps``.

    Their distance ``eps / (1 - kappa)`` equals the stability bound.
    """
    if not 0.0 <= kappa < 1.0:
        raise DomainError(f"kappa must lie in [0, 1), got {kappa}")
    if eps < 0:
        raise DomainError(f"eps must be nonnegative, got {eps}")
    bound = stability_bound(kappa, eps)
    # relative to the bound so that gap/bound is resolved to ~1e-13 at any scale
    tol = SHARPNESS_EPS * bound or SHARPNESS_EPS
    x0 = GridFunction.scalar(0.0)
    x_star = _solve(build_packet(AffineScalarOperator(kappa, 0.0), x0), tol).iterate.values[0]
    y_star = _solve(build_packet(AffineScalarOperator(kappa, eps), x0), tol).iterate.values[0]
    return {"x_star": float(x_star), "y_star": float(y_star),
            "gap": abs(float(y_star) - float(x_star)), "bound": bound}


def two_sided_stability(packetT: DataPacket, packetS: DataPacket, samples: int = EPS_SAMPLES,
                        seed: int = 0) -> PerturbationReport:
    """Compare the fixed points of two certified maps on a shared ball.

    Both packets are rebuilt on the larger of the two radii (a larger ball
    stays invariant) and solved to ``1e-10`` residual certificates.
    """
    T, S = packetT.operator, packetS.operator
    if T.m != S.m or T.interval != S.interval:
        raise StructuralError("packets live on different grids")
    if sup_distance(packetT.region.center, packetS.region.center) != 0.0:
        raise StructuralError("packets use balls with different centers")
    R = max(packetT.radius, packetS.radius)
    pT = build_packet(T, packetT.x0, radius=R)
    pS = build_packet(S, packetS.x0, radius=R)

    kappa = max(pT.kappa, pS.kappa)
    eps_est = epsilon_sup(T, S, pT.region, samples, seed)
    eps_an = model_perturbation_bound(T, S, R)
    basis = "analytic" if eps_an is not None else "estimate"
    bound = stability_bound(kappa, eps_an if eps_an is not None else eps_est)

    tT, tS = _solve(pT, SOLVE_EPS), _solve(pS, SOLVE_EPS)
    gap = sup_distance(tT.iterate, tS.iterate)
    # both maps are compared as discretised, so only the solve certificates enter
    slack = tT.certified_error + tS.certified_error
    return PerturbationReport(
        eps_estimate=float(eps_est),
        eps_analytic=None if eps_an is None else float(eps_an),
        kappa=float(kappa),
        stab_bound=float(bound),
        observed_gap=float(gap),
        slack=float(slack),
        bound_basis=basis,
    )
