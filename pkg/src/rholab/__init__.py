"""Pollard rho discrete-log walk and the spectral geometry of its graph."""

from rholab.errors import (
    BudgetExhausted,
    ConvergenceError,
    CriterionFailed,
    DegenerateCollision,
    ModulusMismatch,
    RholabError,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExhausted",
    "ConvergenceError",
    "CriterionFailed",
    "DegenerateCollision",
    "ModulusMismatch",
    "RholabError",
    "__version__",
]
