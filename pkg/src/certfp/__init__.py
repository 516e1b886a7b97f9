"""Certified Picard iteration for contractive fixed-point problems.

Every iterate comes with a computable error bound: a priori bounds from the
certified modulus, residual certificates and, for inexact evaluation, an
error floor.
"""

from .engine import NoiseBudget, StopRule, inexact_run, picard_run
from .funcspace import BallRegion, GridFunction, Interval, sup_distance
from .gauge import (
    CertifiedModulus,
    CustomGauge,
    DomainError,
    Geometric,
    LinearDefect,
    NotCertifiable,
    certify_modulus,
    n_gauge,
    n_geo,
    phi_gauge,
    phi_geo,
    power_defect,
)
from .operators import (
    AffineScalarOperator,
    ChecklistFailure,
    DataPacket,
    GreenOperator,
    HammersteinOperator,
    Nonlinearity,
    VolterraOperator,
    build_packet,
)
from .stability import sharpness_demo, stability_bound, two_sided_stability

__version__ = "0.1.0"

__all__ = [
    "AffineScalarOperator",
    "BallRegion",
    "CertifiedModulus",
    "ChecklistFailure",
    "CustomGauge",
    "DataPacket",
    "DomainError",
    "Geometric",
    "GreenOperator",
    "GridFunction",
    "HammersteinOperator",
    "Interval",
    "LinearDefect",
    "NoiseBudget",
    "Nonlinearity",
    "NotCertifiable",
    "StopRule",
    "VolterraOperator",
    "build_packet",
    "certify_modulus",
    "inexact_run",
    "n_gauge",
    "n_geo",
    "phi_gauge",
    "phi_geo",
    "picard_run",
    "power_defect",
    "sharpness_demo",
    "stability_bound",
    "sup_distance",
    "two_sided_stability",
]
