"""Dominating-simplex piecewise affine policies for two-stage adjustable
robust covering LPs, with an affine-policy baseline and a desk-scale
benchmark harness."""

__version__ = "0.1.0"

from .lpcore import (  # noqa: F401
    EQ,
    GE,
    LE,
    LinearProgramSpec,
    LpSolution,
    LpStatus,
    SimplexSolver,
    resolve_with_rows,
    solve_lp,
)
