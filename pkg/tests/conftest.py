"""Shared fixtures and the acceptance summary printed after the run."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from certfp.expr import Expr
from certfp.funcspace import Interval
from certfp.operators import ExpressionKernel, HammersteinOperator, Nonlinearity, build_packet

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"
UNIT = Interval(0.0, 1.0)


def reference_moments():
    """Exact solution of x(t) = t + (1/3) int_0^1 (t + s) x(s) ds.

    With A = int x and B = int s x the ansatz x = t + (A t + B)/3 closes into
    a 2x2 rational system; returns (slope, intercept) of x.
    """
    F = Fraction
    # A = 1/2 + (A/2 + B)/3 ;  B = 1/3 + (A/3 + B/2)/3
    a11, a12, r1 = 1 - F(1, 6), -F(1, 3), F(1, 2)
    a21, a22, r2 = -F(1, 9), 1 - F(1, 6), F(1, 3)
    det = a11 * a22 - a12 * a21
    A = (r1 * a22 - a12 * r2) / det
    B = (a11 * r2 - a21 * r1) / det
    return 1 + A / 3, B / 3


def hammerstein(m: int = 401, forcing: str = "t") -> HammersteinOperator:
    return HammersteinOperator(UNIT, m, Expr(forcing), ExpressionKernel(Expr("t + s")),
                               Nonlinearity.linear(1 / 3))


@pytest.fixture(scope="session")
def ham_op():
    return hammerstein()


@pytest.fixture(scope="session")
def ham_packet(ham_op):
    return build_packet(ham_op, ham_op.zero())


@pytest.fixture(scope="session")
def exact_solution():
    slope, intercept = reference_moments()
    return lambda t: float(slope) * np.asarray(t) + float(intercept)


@pytest.fixture
def problems_dir():
    return PROBLEMS


# ------------------------------------------------------------ acceptance summary

_acceptance: dict = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    ident, title = marker.args
    entry = _acceptance.setdefault(ident, {"title": title, "ok": True, "ran": False})
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        entry["ran"] = True
        if call.excinfo is not None:
            entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for ident in sorted(_acceptance, key=lambda k: int(k.lstrip("AC"))):
        e = _acceptance[ident]
        verdict = "PASS" if e["ok"] and e["ran"] else "FAIL"
        terminalreporter.write_line(f"{ident:<5} {verdict}  {e['title']}")
