"""Concrete fixed-point maps, their verifiable constants and certification."""

from .diagnostics import (
    ControlMode,
    DominanceReport,
    OrderIntervalVerdict,
    gauge_dominance_check,
    order_interval_check,
    proinov_control,
)
from .kernels import (
    DirichletGreen,
    ExpressionKernel,
    Kernel,
    SeparableKernel,
    TabulatedKernel,
    dirichlet_green,
    kernel_bound_H,
    kernel_bound_V,
)
from .maps import (
    AffineScalarOperator,
    FixedPointOperator,
    GreenOperator,
    HammersteinOperator,
    IntegralOperator,
    VolterraOperator,
    apply,
    linear_interpolant,
)
from .nonlinear import Nonlinearity, NonlinearityCheck
from .packet import (
    ChecklistFailure,
    ChecklistItem,
    DataPacket,
    build_packet,
    invariant_radius,
    verify_invariance,
)

__all__ = [
    "AffineScalarOperator",
    "ChecklistFailure",
    "ChecklistItem",
    "ControlMode",
    "DataPacket",
    "DirichletGreen",
    "DominanceReport",
    "ExpressionKernel",
    "FixedPointOperator",
    "GreenOperator",
    "HammersteinOperator",
    "IntegralOperator",
    "Kernel",
    "Nonlinearity",
    "NonlinearityCheck",
    "OrderIntervalVerdict",
    "SeparableKernel",
    "TabulatedKernel",
    "VolterraOperator",
    "apply",
    "build_packet",
    "dirichlet_green",
    "gauge_dominance_check",
    "invariant_radius",
    "kernel_bound_H",
    "kernel_bound_V",
    "linear_interpolant",
    "order_interval_check",
    "proinov_control",
    "verify_invariance",
]
