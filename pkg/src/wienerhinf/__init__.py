"""H-infinity state-feedback synthesis for spatially invariant plants.

Constant-coefficient Riccati solves, Laurent matrix symbols with Wiener-norm
bookkeeping, a pointwise-over-the-circle solver with verification, and
finite-ring simulation of the resulting closed loop.
"""
from ._backend import BACKEND
from .config import DEFAULT, Tolerances
from .errors import HinfError
from .pipeline import (
    AreSolutionSymbol,
    GammaSearchResult,
    HinfPlantSymbol,
    SolveOptions,
    VerificationReport,
    gamma_bisect,
    solve_over_circle,
    verify_solution,
)
from .riccati import AreSolutionConst, HinfPlantConst, hinf_norm, solve_hinf_are
from .symbol import LaurentMatrixSymbol, SampleGrid, invert, star

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DEFAULT",
    "Tolerances",
    "HinfError",
    "HinfPlantConst",
    "AreSolutionConst",
    "solve_hinf_are",
    "hinf_norm",
    "LaurentMatrixSymbol",
    "SampleGrid",
    "invert",
    "star",
    "HinfPlantSymbol",
    "SolveOptions",
    "AreSolutionSymbol",
    "VerificationReport",
    "GammaSearchResult",
    "solve_over_circle",
    "verify_solution",
    "gamma_bisect",
    "__version__",
]
