"""Command-line interface and problem documents."""

from .main import main
from .problem import ProblemDocument, ProblemError, load_problem, parse_problem

__all__ = ["main", "ProblemDocument", "ProblemError", "load_problem", "parse_problem"]
