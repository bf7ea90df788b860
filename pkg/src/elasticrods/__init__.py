"""Closed and quasiperiodic elastic rod centerlines from elliptic and theta functions."""

__version__ = "0.1.0"

from .exceptions import (ConvergenceError, DivergenceError, DomainError, NoSolutionError,  # noqa: E402
                         PrecisionWarning, RodError, StripError, UndefinedLimitError)
from .paramspace import DiskPoint, LocusKind, derive_constants, find_p_max  # noqa: E402
from .rodsynth import synthesize, verify_first_integrals  # noqa: E402
from .closure import KnotSpec, solve_constant_torsion_knot, solve_knot  # noqa: E402
from .homotopy import trace_level  # noqa: E402
from .stability import circle_stability, figure_eight_stability  # noqa: E402
from .verify import run_suite, verify_all  # noqa: E402

__all__ = [
    "__version__", "ConvergenceError", "DivergenceError", "DomainError", "NoSolutionError",
    "PrecisionWarning", "RodError", "StripError", "UndefinedLimitError", "DiskPoint", "LocusKind",
    "derive_constants", "find_p_max", "synthesize", "verify_first_integrals", "KnotSpec",
    "solve_constant_torsion_knot", "solve_knot", "trace_level", "circle_stability",
    "figure_eight_stability", "run_suite", "verify_all",
]
