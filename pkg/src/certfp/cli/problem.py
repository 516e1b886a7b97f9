"""JSON problem documents: schema, loading and translation into operators."""

from __future__ import annotations

import json
import warnings
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import (
    AfterValidator,
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    model_validator,
)

from ..engine import NoiseBudget, StopRule
from ..expr import Expr, ExprEvalError, parse_constant, vanishing_divisors
from ..funcspace import DEFAULT_GRID_SIZE, GridFunction, Interval, grid_nodes
from ..operators.kernels import (
    ExpressionKernel,
    Kernel,
    SeparableKernel,
    TabulatedKernel,
)
from ..operators.maps import (
    AffineScalarOperator,
    FixedPointOperator,
    GreenOperator,
    HammersteinOperator,
    VolterraOperator,
)
from ..operators.nonlinear import Nonlinearity

__all__ = [
    "SCHEMA_VERSION",
    "ProblemError",
    "ProblemDocument",
    "load_problem",
    "parse_problem",
    "dump_problem",
    "build_operator",
    "build_x0",
    "build_budget",
    "build_stop",
]

SCHEMA_VERSION = 1


class ProblemError(Exception):
    """Unreadable or invalid problem document, with a location when known."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None,
                 field: Optional[str] = None):
        self.message = message
        self.line = line
        self.column = column
        self.field = field
        super().__init__(self.describe())

    def describe(self) -> str:
        where = []
        if self.line is not None:
            where.append(f"line {self.line}, column {self.column}")
        if self.field:
            where.append(f"at {self.field}")
        return f"{', '.join(where)}: {self.message}" if where else self.message


def _constant(v):
    parse_constant(v)
    return v


def _expression(v):
    Expr(v, ("t", "s", "u"))
    return v


# numbers may be written as constant expressions such as "1/3" so they stay exact
Number = Annotated[Union[float, str], AfterValidator(_constant)]
ExprText = Annotated[str, AfterValidator(_expression)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class IntervalSpec(_Strict):
    a: Number
    b: Number

    @model_validator(mode="after")
    def _ordered(self):
        if not parse_constant(self.a) < parse_constant(self.b):
            raise ValueError("interval needs a < b")
        return self


class KernelSpec(_Strict):
    expr: Optional[ExprText] = None
    separable: Optional[list[tuple[ExprText, ExprText]]] = None
    table: Optional[list[list[float]]] = None

    @model_validator(mode="after")
    def _exactly_one(self):
        given = [k for k in ("expr", "separable", "table") if getattr(self, k) is not None]
        if len(given) != 1:
            raise ValueError("kernel needs exactly one of expr, separable, table")
        return self


class NonlinearitySpec(_Strict):
    rule: Literal["linear", "sin", "atan", "affine", "expr"]
    lam: Optional[Number] = Field(default=None, alias="lambda")
    expr: Optional[ExprText] = None
    offset: Optional[ExprText] = None
    lip: Optional[Number] = None
    zero_bound: Optional[Number] = None

    @model_validator(mode="after")
    def _fields_for_rule(self):
        if self.rule in ("linear", "sin", "atan", "affine") and self.lam is None:
            raise ValueError(f"rule {self.rule!r} needs lambda")
        if self.rule == "affine" and (self.offset is None or self.zero_bound is None):
            raise ValueError("rule 'affine' needs offset and zero_bound")
        if self.rule == "expr" and (self.expr is None or self.lip is None
                                    or self.zero_bound is None):
            raise ValueError("rule 'expr' needs expr, lip and zero_bound")
        return self


class BoundarySpec(_Strict):
    alpha: Number
    beta: Number


class OperatorSpec(_Strict):
    kind: Literal["hammerstein", "volterra", "green", "affine"]
    forcing: Optional[Union[ExprText, list[float]]] = None
    kernel: Optional[Union[KernelSpec, Literal["dirichlet_green"]]] = None
    nonlinearity: Optional[NonlinearitySpec] = None
    boundary: Optional[BoundarySpec] = None
    slope: Optional[Number] = None
    offset: Optional[Number] = None

    @model_validator(mode="after")
    def _fields_for_kind(self):
        if self.kind == "affine":
            if self.slope is None or self.offset is None:
                raise ValueError("affine operators need slope and offset")
            return self
        if self.nonlinearity is None:
            raise ValueError(f"{self.kind} operators need a nonlinearity")
        if self.kind == "green":
            if self.boundary is None:
                raise ValueError("green operators need boundary values")
            if self.kernel not in (None, "dirichlet_green") or self.forcing is not None:
                raise ValueError("green operators take kernel and forcing from the boundary data")
            return self
        if self.forcing is None or self.kernel is None:
            raise ValueError(f"{self.kind} operators need forcing and kernel")
        if self.kernel == "dirichlet_green":
            raise ValueError("dirichlet_green is reserved for kind 'green'")
        return self


class NoiseSpec(_Strict):
    kind: Literal["constant", "sequence", "summable", "quadrature"]
    eta_bar: Optional[Number] = None
    values: Optional[list[float]] = None
    eta0: Optional[Number] = None
    rho: Optional[Number] = None

    @model_validator(mode="after")
    def _fields_for_kind(self):
        need = {"constant": ("eta_bar",), "sequence": ("values",),
                "summable": ("eta0", "rho"), "quadrature": ()}[self.kind]
        missing = [k for k in need if getattr(self, k) is None]
        if missing:
            raise ValueError(f"noise kind {self.kind!r} needs {', '.join(missing)}")
        return self


class StopSpec(_Strict):
    rule: Literal["apriori", "gauge", "residual"] = "residual"
    eps: Number = 1e-6
    max_iter: int = Field(default=10_000, ge=1)


class ProblemDocument(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    interval: IntervalSpec = IntervalSpec(a=0.0, b=1.0)
    grid_size: int = Field(default=DEFAULT_GRID_SIZE, ge=2)
    operator: OperatorSpec
    x0: Union[Literal["zero"], ExprText, list[float]] = "zero"
    noise: Optional[NoiseSpec] = None
    stop: Optional[StopSpec] = None
    seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _tables_fit_grid(self):
        m = 1 if self.operator.kind == "affine" else self.grid_size
        op = self.operator
        if isinstance(op.forcing, list) and len(op.forcing) != m:
            raise ValueError(f"forcing table has {len(op.forcing)} entries, grid has {m}")
        if isinstance(op.kernel, KernelSpec) and op.kernel.table is not None:
            rows = op.kernel.table
            if len(rows) != m or any(len(r) != m for r in rows):
                raise ValueError(f"kernel table must be {m} x {m}")
        if isinstance(self.x0, list) and len(self.x0) != m:
            raise ValueError(f"x0 table has {len(self.x0)} entries, grid has {m}")
        return self


def _field_path(loc: tuple) -> str:
    return ".".join(str(p) for p in loc if not str(p).startswith(("function-", "tagged-")))


def parse_problem(text: str) -> ProblemDocument:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(exc.msg, exc.lineno, exc.colno) from exc
    try:
        return ProblemDocument.model_validate(raw)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ProblemError(err["msg"], field=_field_path(err["loc"])) from exc


def load_problem(path) -> ProblemDocument:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ProblemError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_problem(text)


def dump_problem(doc: ProblemDocument) -> str:
    return json.dumps(doc.model_dump(mode="json", by_alias=True, exclude_none=True), indent=2)


def _num(v) -> float:
    return parse_constant(v)


def interval_of(doc: ProblemDocument) -> Interval:
    return Interval(_num(doc.interval.a), _num(doc.interval.b))


def _warn_divisions(text: str, **env) -> None:
    bad = vanishing_divisors(Expr(text, ("t", "s", "u")), **env)
    if bad:
        warnings.warn(f"divisor {bad[0]!r} in {text!r} vanishes on the grid", stacklevel=3)


def _kernel(spec: KernelSpec, interval: Interval, m: int) -> Kernel:
    if spec.table is not None:
        return TabulatedKernel(np.array(spec.table, dtype=float))
    t = grid_nodes(interval, m)
    if spec.expr is not None:
        T, S = np.meshgrid(t, t, indexing="ij")
        _warn_divisions(spec.expr, t=T, s=S)
        return ExpressionKernel(Expr(spec.expr))
    for phi, psi in spec.separable:
        _warn_divisions(phi, t=t)
        _warn_divisions(psi, s=t)
    return SeparableKernel(tuple((Expr(phi), Expr(psi)) for phi, psi in spec.separable))


def _nonlinearity(spec: NonlinearitySpec) -> Nonlinearity:
    lip = None if spec.lip is None else _num(spec.lip)
    if spec.rule == "expr":
        return Nonlinearity.expression(spec.expr, lip, _num(spec.zero_bound))
    lam = _num(spec.lam)
    if spec.rule == "linear":
        return Nonlinearity.linear(lam, lip)
    if spec.rule == "sin":
        return Nonlinearity.scaled_sin(lam, lip)
    if spec.rule == "atan":
        return Nonlinearity.scaled_atan(lam, lip)
    return Nonlinearity.affine(lam, Expr(spec.offset), _num(spec.zero_bound), lip)


def build_operator(doc: ProblemDocument) -> FixedPointOperator:
    """Translate the operator section; expression errors surface as ProblemError."""
    op = doc.operator
    try:
        if op.kind == "affine":
            return AffineScalarOperator(_num(op.slope), _num(op.offset))
        interval, m = interval_of(doc), doc.grid_size
        nl = _nonlinearity(op.nonlinearity)
        if op.kind == "green":
            return GreenOperator(interval, m, _num(op.boundary.alpha), _num(op.boundary.beta), nl)
        if isinstance(op.forcing, list):
            forcing = GridFunction(interval, op.forcing)
        else:
            _warn_divisions(op.forcing, t=grid_nodes(interval, m))
            forcing = Expr(op.forcing)
        cls = HammersteinOperator if op.kind == "hammerstein" else VolterraOperator
        return cls(interval, m, forcing, _kernel(op.kernel, interval, m), nl)
    except (ExprEvalError, ValueError) as exc:
        raise ProblemError(str(exc), field="operator") from exc


def build_x0(doc: ProblemDocument, T: FixedPointOperator) -> GridFunction:
    if doc.x0 == "zero":
        return T.zero()
    if isinstance(doc.x0, list):
        return GridFunction(T.interval, doc.x0)
    try:
        if T.m == 1:
            return GridFunction.scalar(float(Expr(doc.x0, ())()))
        return GridFunction.from_callable(T.interval, T.m, lambda t: Expr(doc.x0)(t=t))
    except (ExprEvalError, ValueError) as exc:
        raise ProblemError(str(exc), field="x0") from exc


def build_budget(doc: ProblemDocument) -> Optional[NoiseBudget]:
    spec = doc.noise
    if spec is None:
        return None
    if spec.kind == "constant":
        return NoiseBudget.constant(_num(spec.eta_bar), seed=doc.seed)
    if spec.kind == "sequence":
        return NoiseBudget.sequence(spec.values, seed=doc.seed)
    if spec.kind == "summable":
        return NoiseBudget.summable(_num(spec.eta0), _num(spec.rho), seed=doc.seed)
    return NoiseBudget.quadrature()


def build_stop(doc: ProblemDocument) -> tuple[StopRule, int]:
    spec = doc.stop or StopSpec()
    eps = _num(spec.eps)
    rule = {"apriori": StopRule.apriori, "gauge": StopRule.gauge,
            "residual": StopRule.residual}[spec.rule](eps)
    return rule, spec.max_iter
