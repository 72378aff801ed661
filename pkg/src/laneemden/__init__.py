"""Fast-decaying singular solutions of -Delta u = V u^p in R^N minus the origin."""

from .exponents import (ExponentSet, ProblemParams, RegimeError, derive_exponents,
                        select_working_exponents, validate_regime)
from .potentials import Potential, build_potential, check_hypotheses
from .profile import Profile, Regime, shoot_profile
from .radial import RadialFunction, RadialGrid, make_log_grid, newton_potential
from .solver import SolveOptions, SolveReport, solve, solve_fast_decay, solve_mixed

__version__ = "0.1.0"

__all__ = [
    "ExponentSet", "ProblemParams", "RegimeError", "derive_exponents",
    "select_working_exponents", "validate_regime", "Potential", "build_potential",
    "check_hypotheses", "Profile", "Regime", "shoot_profile", "RadialFunction",
    "RadialGrid", "make_log_grid", "newton_potential", "SolveOptions", "SolveReport",
    "solve", "solve_fast_decay", "solve_mixed",
]
