"""Independent checks: trajectory audits, optimality gaps and LP machinery."""

from .audits import (
    Err3Result,
    StarAudit,
    audit_line,
    err3_details,
    err3_gap,
    fejer_audit,
    grid_solution_check,
    sample_feasible,
    star_definition_audit,
)
from .lp import (
    FractionalProgram,
    LinearProgram,
    LPResult,
    LPStatus,
    charnes_cooper,
    simplex_solve,
    solve_fractional,
)

__all__ = [
    "Err3Result",
    "FractionalProgram",
    "LPResult",
    "LPStatus",
    "LinearProgram",
    "StarAudit",
    "audit_line",
    "charnes_cooper",
    "err3_details",
    "err3_gap",
    "fejer_audit",
    "grid_solution_check",
    "sample_feasible",
    "simplex_solve",
    "solve_fractional",
    "star_definition_audit",
]
