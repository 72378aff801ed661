"""Exponent fits, the mass identity, the Kelvin transform, PDE residuals and the slow-decay probe."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .exponents import ProblemParams, RegimeError
from .potentials import Potential, SignClass, check_hypotheses
from .radial import RadialFunction, RadialGrid, integrate_ball, integrate_full_space, radial_laplacian


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    stderr: float
    window: tuple[float, float]
    r_squared: float

    @property
    def accepted(self) -> bool:
        return self.r_squared >= 0.99

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        d["accepted"] = self.accepted
        return d


def named_window(grid: RadialGrid, name: str) -> tuple[float, float]:
    """Fitting windows: ``origin`` and ``infinity`` are the outer decades, ``mid`` is [10, r_max/100]."""
    if name == "origin":
        return grid.r_min, 10 * grid.r_min
    if name == "infinity":
        return grid.r_max / 10, grid.r_max
    if name == "mid":
        return 10.0, grid.r_max / 100
    raise ValueError(f"unknown window '{name}', expected origin, infinity or mid")


def fit_decay_exponent(u: RadialFunction, window) -> ExponentFit:
    """Least-squares slope of log u against log r on the window."""
    g = u.grid
    lo, hi = named_window(g, window) if isinstance(window, str) else window
    rel = 1e-9
    if not (g.r_min * (1 - rel) <= lo < hi <= g.r_max * (1 + rel)):
        raise ValueError(f"window ({lo:g}, {hi:g}) not inside the grid")
    if math.log10(hi / lo) < 1 - 1e-9:
        raise ValueError("window must span at least one decade")
    mask = (g.nodes >= lo * (1 - rel)) & (g.nodes <= hi * (1 + rel))
    v = u.values[mask]
    if mask.sum() < 3 or np.any(v <= 0):
        raise ValueError("degenerate window: need at least 3 positive samples")
    fit = stats.linregress(np.log(g.nodes[mask]), np.log(v))
    return ExponentFit(float(fit.slope), float(fit.stderr), (float(lo), float(hi)),
                       float(min(max(fit.rvalue**2, 0.0), 1.0)))


def _on_grid(V, grid: RadialGrid) -> RadialFunction:
    return V if isinstance(V, RadialFunction) else V.on_grid(grid)


def mass_identity(u: RadialFunction, V, params: ProblemParams) -> float:
    """c_N times the integral of V u^p over R^N."""
    if not np.any(u.values):
        return 0.0
    f = _on_grid(V, u.grid).times(u.power(params.p))
    return integrate_full_space(f, params.N, weight_cN=True)


def local_mass(u: RadialFunction, V, params: ProblemParams, R: float = 10.0) -> float:
    """Integral of V u^p over the ball of radius R."""
    f = _on_grid(V, u.grid).times(u.power(params.p))
    return integrate_ball(f, params.N, R)


def farfield_coefficient(u: RadialFunction, N: int, r: float | None = None) -> float:
    """u(r) r^{N-2}, by default at r = r_max/10."""
    r = u.grid.r_max / 10 if r is None else r
    return float(u.evaluate(r) * r ** (N - 2))


def pde_residual(u: RadialFunction, V, params: ProblemParams, fraction: float = 0.5) -> dict:
    """Pointwise Delta u + V u^p and its sup relative to V u^p on the middle of the grid."""
    lap = radial_laplacian(u, params.N)
    rhs = _on_grid(V, u.grid).times(u.power(params.p))
    field = lap.with_values(lap.values + rhs.values)
    mid = u.grid.middle(fraction)
    scale = rhs.values[mid]
    if np.any(scale <= 0):
        norm = math.inf
    else:
        norm = float(np.max(np.abs(field.values[mid]) / scale))
    return {"field": field, "norm": norm}


@dataclass(frozen=True)
class KelvinPair:
    u_sharp: RadialFunction
    V_sharp: RadialFunction
    rho: float


def kelvin_rho(params: ProblemParams, alpha: float) -> float:
    return -alpha - 4 + (params.p - 1) * (params.N - 2)


def kelvin_transform(u: RadialFunction, V, params: ProblemParams, alpha: float) -> KelvinPair:
    """u#(r) = r^{2-N} u(1/r), V#(r) = r^{-2-N+p(N-2)} V(1/r) on the reflected grid."""
    g = u.grid
    if not g.is_symmetric():
        raise ValueError("Kelvin transform needs a grid symmetric about r = 1 in log r")
    N, p = params.N, params.p
    r = g.nodes
    Vg = _on_grid(V, g)
    e = -2.0 - N + p * (N - 2)
    u_sharp = RadialFunction(g, r ** (2 - N) * u.values[::-1],
                             2 - N - u.outer_tail, 2 - N - u.inner_tail)
    V_sharp = RadialFunction(g, r**e * Vg.values[::-1], e - Vg.outer_tail, e - Vg.inner_tail)
    return KelvinPair(u_sharp, V_sharp, kelvin_rho(params, alpha))


@dataclass
class SlowDecayResult:
    ks: list[float]
    mid_slopes: list[ExponentFit | None]
    errors: list[str | None]
    target: float
    fast: float
    monotone: bool
    crossover_reached: bool
    note: str

    def to_dict(self) -> dict:
        return {
            "ks": self.ks,
            "mid_slopes": [f.to_dict() if f else None for f in self.mid_slopes],
            "errors": self.errors,
            "target": self.target,
            "fast": self.fast,
            "monotone": self.monotone,
            "crossover_reached": self.crossover_reached,
            "note": self.note,
        }


def slow_decay_probe(params: ProblemParams, V: Potential, k_list, opts=None,
                     alpha: float | None = None, rel_tol: float = 0.10) -> SlowDecayResult:
    """Mid-range decay slope of the solution for each k in an increasing sweep."""
    from .solver import SolveOptions, solve_fast_decay

    opts = SolveOptions() if opts is None else opts
    rep = check_hypotheses(V, params)
    if rep.sign_class == SignClass.ONE:
        raise RegimeError("V = 1 has no slow-decay regime; slopes stay at -(N-2)")
    if rep.sign_class != SignClass.LE1:
        raise RegimeError("slow-decay probe needs V <= 1")
    vinf = rep["Vinf"]
    if not vinf.passed:
        raise RegimeError(f"(Vinf) fails: {vinf.detail}")
    alpha = vinf.constants["alpha"] if alpha is None else alpha
    target = -(2 + alpha) / (params.p - 1)
    fast = -(params.N - 2.0)
    ks = list(k_list)
    fits, errors = [], []
    for k in ks:
        try:
            sol = solve_fast_decay(params, V, k, opts)
            if not sol.converged:
                raise RuntimeError("not converged")
            fits.append(fit_decay_exponent(sol.solution, "mid"))
            errors.append(None)
        except (RegimeError, RuntimeError, ValueError) as exc:
            fits.append(None)
            errors.append(str(exc))
    slopes = [f.slope for f in fits if f is not None]
    # slopes should move from the fast exponent toward the target as k grows
    sign = 1.0 if target > fast else -1.0
    monotone = all(sign * (b - a) >= -1e-6 for a, b in zip(slopes, slopes[1:]))
    reached = bool(slopes) and abs(slopes[-1] - target) <= rel_tol * abs(target)
    if reached:
        note = f"largest-k mid slope {slopes[-1]:.4f} within {rel_tol:.0%} of {target:.4f}"
    elif slopes:
        note = (f"crossover not reached: mid slope went from {slopes[0]:.4f} to {slopes[-1]:.4f} "
                f"(fast {fast:.4f}, target {target:.4f})")
    else:
        note = "crossover not reached: no converged solutions"
    return SlowDecayResult(ks, fits, errors, target, fast, monotone, reached, note)
