"""Fast-decaying solutions of -Delta u = V u^p by monotone Picard iteration.

The iteration v_n = Gamma * (V v_{n-1}^p), v_0 = w_k, is run in the equivalent
split form u_n = w_k + z_n with

    z_n = Gamma * (V (w_k + z_{n-1})_+^p - w_k^p),   z_0 = 0,

which uses Gamma * w_k^p = w_k. Only the correction z is passed through the
quadrature, so the c_p r^{-2/(p-1)} head of w_k is never re-integrated and its
discretization error cannot be amplified by the factor p at each step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exponents import (ProblemParams, RegimeError, derive_exponents,
                        select_working_exponents, validate_regime)
from .potentials import (Potential, SignClass, build_potential, fit_tau0,
                         require_existence_regime)
from .profile import Regime, emergence_time, evaluate_profile, settle_time, shoot_profile
from .radial import (RadialFunction, RadialGrid, integrate_full_space, make_log_grid,
                     newton_potential)


class Direction(str, Enum):
    INCREASING = "Increasing"
    DECREASING = "Decreasing"
    TWO_STAGE = "TwoStage"


class MonotonicityError(RuntimeError):
    """Successive iterates moved against the expected direction beyond tolerance."""


@dataclass(frozen=True)
class SolveOptions:
    """Iteration controls and grid.

    With ``r_min=None`` the grid is chosen from k by :func:`auto_grid`; with
    ``nodes=None`` the resolution is ``per_decade`` nodes per decade.
    """

    tol: float = 1e-8
    max_iter: int = 200
    mono_tol: float = 1e-9
    r_min: float | None = None
    r_max: float | None = None
    nodes: int | None = None
    per_decade: int = 100

    def grid(self, params: ProblemParams | None = None, k: float | None = None) -> RadialGrid:
        if self.r_min is None:
            if params is None or k is None:
                return make_log_grid(1e-6, 1e6, 12 * self.per_decade + 1)
            return auto_grid(params, k, self.per_decade)
        r_max = 1.0 / self.r_min if self.r_max is None else self.r_max
        nodes = self.nodes
        if nodes is None:
            nodes = int(round(math.log10(r_max / self.r_min) * self.per_decade)) + 1
        return make_log_grid(self.r_min, r_max, nodes)


def auto_grid(params: ProblemParams, k: float, per_decade: int = 100,
              gap: float = 1e-3) -> RadialGrid:
    """Symmetric grid [10^-d, 10^d], d >= 6, resolving both asymptotic regimes of w_k.

    d is chosen so that r^{2/(p-1)} w_k is within ``gap`` of c_p at 10 r_min and
    r^{N-2} w_k is within ``gap`` of k at r_max / 10.
    """
    ex = derive_exponents(params)
    profile = shoot_profile(params)
    shift = math.log(k) / ex.b_p  # t = -ln r + shift
    ln10 = math.log(10.0)
    log10_head = (shift - settle_time(profile, gap)) / ln10
    log10_tail = (shift - emergence_time(profile, gap)) / ln10
    dec = max(6, math.ceil(1 - log10_head), math.ceil(log10_tail + 1))
    return make_log_grid(10.0**-dec, 10.0**dec, 2 * dec * per_decade + 1)


@dataclass
class SolveReport:
    solution: RadialFunction
    nu: float
    k: float
    iterations: int
    direction: Direction
    sup_change_trace: list[float]
    barrier_eps: float
    residual_norm: float
    converged: bool = True
    nu_direct: float = float("nan")
    nu_farfield: float = float("nan")
    theta0: float = float("nan")
    stages: list[int] = field(default_factory=list)

    @property
    def status(self) -> str:
        return "converged" if self.converged else "not_converged"

    def summary(self) -> dict:
        return {
            "k": self.k,
            "nu": self.nu,
            "nu_direct": self.nu_direct,
            "nu_farfield": self.nu_farfield,
            "iterations": self.iterations,
            "direction": self.direction.value,
            "barrier_eps": self.barrier_eps,
            "theta0": self.theta0,
            "residual_norm": self.residual_norm,
            "status": self.status,
            "sup_change_trace": list(self.sup_change_trace),
        }


# --- seed solution --------------------------------------------------------


def build_wk(params: ProblemParams, profile, k: float, grid: RadialGrid) -> RadialFunction:
    """w_k(r) = r^{-2/(p-1)} wbar(-ln r + ln(k)/b_p) on the grid."""
    if profile.regime != Regime.MONOTONE:
        raise RegimeError("w_k is only built from a Monotone profile (p < p_c)")
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    ex = derive_exponents(params)
    r = grid.nodes
    t = -np.log(r) + math.log(k) / ex.b_p
    values = r ** (-ex.sing_exp) * evaluate_profile(profile, t)
    # wbar - c_p decays like e^{mu1 t}, i.e. like r^{-Re mu1} near the origin
    return RadialFunction(grid, values, -ex.sing_exp, 2.0 - params.N, -ex.mu1.real)


def picard_step(V: Potential, v: RadialFunction, p: float, N: int) -> RadialFunction:
    """Gamma * (V v^p)."""
    Vg = V.on_grid(v.grid)
    return newton_potential(Vg.times(v.power(p)), N)


def barrier_weight(grid: RadialGrid, N: int, theta0: float) -> np.ndarray:
    r = grid.nodes
    return r ** (-theta0) * (1.0 + r) ** (2.0 - N + theta0)


def _norm_weight(grid: RadialGrid, params: ProblemParams) -> np.ndarray:
    r = grid.nodes
    s = 2.0 / (params.p - 1)
    return r**s * (1.0 + r) ** (params.N - 2 - s)


def _weighted_change(step, scale, weight, head) -> float:
    """Weighted sup of the step relative to the weighted sup of u, taken
    separately on r <= 1 and r > 1 so that the c_p head and the k tail count equally."""
    out = 0.0
    for part in (head, ~head):
        if np.any(part):
            out = max(out, np.max(np.abs(step[part]) * weight[part])
                      / np.max(scale[part] * weight[part]))
    return float(out)


def _declared_tau0(V: Potential) -> float:
    tau0 = V.meta.get("tau0", "fit")
    if tau0 == "fit":
        tau0, _, r2 = fit_tau0(V)
        if tau0 is not None and (not np.isfinite(tau0) or r2 < 0.99):
            raise RegimeError(f"could not determine tau0 for {V.spec}")
    return math.inf if tau0 is None else float(tau0)


def _source_tails(params, V, Vg, u, w, values):
    """Tail exponents of V u^p - w^p, fitted where sign-definite, else a priori."""
    from .radial import fit_tail_exponent

    N, p = params.N, params.p
    head = -2.0 * p / (p - 1)
    inner = fit_tail_exponent(u.grid, values, "inner", decades=0.5)
    if inner is None:
        inner = head + min(_declared_tau0(V), 2.0)
    # the source is never more singular than V w^p
    inner = max(inner, head + Vg.inner_tail)
    outer = fit_tail_exponent(u.grid, values, "outer", decades=0.5)
    if outer is None:
        outer = Vg.outer_tail + p * (2.0 - N)
    outer = min(outer, Vg.outer_tail + p * (2.0 - N))
    return inner, outer


def _iterate(params, V, w, z0, opts, direction, trace, warm=False):
    """Run the split iteration from z0; returns (z, iterations, converged).

    A warm start (z0 from an earlier converged stage) is itself only accurate
    to about tol, so moves of that size either way are not counted as
    monotonicity violations.
    """
    N, p = params.N, params.p
    grid = w.grid
    Vg = V.on_grid(grid)
    wp = w.power(p).values
    weight = _norm_weight(grid, params)
    head = grid.nodes <= 1.0
    mono_tol = max(opts.mono_tol, 10 * opts.tol) if warm else opts.mono_tol
    z = z0
    for n in range(1, opts.max_iter + 1):
        u = w + z
        src = Vg.values * np.maximum(u.values, 0.0) ** p - wp
        if np.any(src):
            inner, outer = _source_tails(params, V, Vg, u, w, src)
            z_new = newton_potential(RadialFunction(grid, src, inner, outer), N)
        else:
            z_new = RadialFunction(grid, np.zeros(grid.size), 0.0, 2.0 - N)
        step = z_new.values - z.values
        scale = np.abs(w.values + z_new.values)
        if direction == Direction.INCREASING:
            worst = np.min(step / scale)
        else:
            worst = -np.max(step / scale)
        if worst < -mono_tol:
            raise MonotonicityError(
                f"{direction.value} iteration moved the wrong way at step {n}: "
                f"relative change {worst:.3e} exceeds {mono_tol:.1e}")
        change = _weighted_change(step, scale, weight, head)
        trace.append(float(change))
        z = z_new
        if change < opts.tol:
            return z, n, True
    return z, opts.max_iter, False


def _finish(params, V, w, z, k, its, direction, trace, converged, theta0, stages):
    from .asymptotics import farfield_coefficient, pde_residual

    N, p = params.N, params.p
    grid = w.grid
    u_split = w + z
    Vg = V.on_grid(grid)
    src = Vg.values * np.maximum(u_split.values, 0.0) ** p - w.power(p).values
    if np.any(src):
        inner, outer = _source_tails(params, V, Vg, u_split, w, src)
        # c_N int w_k^p = k exactly, so only the correction goes through quadrature
        nu = k + integrate_full_space(RadialFunction(grid, src, inner, outer), N, weight_cN=True)
    else:
        nu = k
    # One direct step u = Gamma * (V u^p) at the fixed point. In the split form
    # the far field of u is w_k plus a correction whose source nearly cancels
    # w_k^p when V decays, so its error is set by w_k^p rather than by V u^p.
    # Near the origin the split form is the more accurate one (the c_p head is
    # never re-integrated), so the two are joined by a smooth step in ln r.
    if converged:
        polished = picard_step(V, u_split, p, N)
        chi = 0.5 * (1.0 - np.tanh(grid.x / math.log(10.0)))
        u = u_split.with_values(chi * u_split.values + (1.0 - chi) * polished.values)
    else:
        u = u_split
    nu_direct = integrate_full_space(Vg.times(u.power(p)), N, weight_cN=True)
    nu_far = farfield_coefficient(u, N)
    eps = float(np.max(np.abs(z.values) / barrier_weight(grid, N, theta0)))
    res = pde_residual(u, V, params)["norm"]
    return SolveReport(u, float(nu), k, its, direction, trace, eps, float(res), converged,
                       float(nu_direct), float(nu_far), theta0, stages)


def _prepare(params, V, k, opts):
    V = build_potential(V)
    report = validate_regime(params, beta=V.meta.get("beta", 0.0) or 0.0)
    if not report.passed:
        raise RegimeError("; ".join(c.detail for c in report.failures()))
    require_existence_regime(V, params)
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    tau0 = _declared_tau0(V)
    theta0 = select_working_exponents(params, tau0).theta0
    profile = shoot_profile(params)
    w = build_wk(params, profile, k, opts.grid(params, k))
    return V, w, theta0


def solve_fast_decay(params: ProblemParams, V, k: float,
                     opts: SolveOptions = SolveOptions()) -> SolveReport:
    """Monotone iteration from w_k for V >= 1 (increasing) or V <= 1 (decreasing)."""
    V, w, theta0 = _prepare(params, V, k, opts)
    cls = V.sign_class()
    if cls == SignClass.MIXED:
        raise RegimeError("V crosses 1; use solve_mixed")
    direction = Direction.DECREASING if cls == SignClass.LE1 else Direction.INCREASING
    trace: list[float] = []
    zero = RadialFunction(w.grid, np.zeros(w.grid.size), 0.0, 2.0 - params.N)
    z, its, ok = _iterate(params, V, w, zero, opts, direction, trace)
    return _finish(params, V, w, z, k, its, direction, trace, ok, theta0, [its])


def solve_mixed(params: ProblemParams, V, k: float,
                opts: SolveOptions = SolveOptions()) -> SolveReport:
    """Two stages: decreasing iteration with V1 = min(V, 1), then increasing with V."""
    V, w, theta0 = _prepare(params, V, k, opts)
    V1, _ = V.split()
    trace: list[float] = []
    zero = RadialFunction(w.grid, np.zeros(w.grid.size), 0.0, 2.0 - params.N)
    z1, its1, ok1 = _iterate(params, V1, w, zero, opts, Direction.DECREASING, trace)
    if not ok1:
        return _finish(params, V, w, z1, k, its1, Direction.TWO_STAGE, trace, False,
                       theta0, [its1])
    z2, its2, ok2 = _iterate(params, V, w, z1, opts, Direction.INCREASING, trace,
                             warm=True)
    return _finish(params, V, w, z2, k, its1 + its2, Direction.TWO_STAGE, trace, ok2,
                   theta0, [its1, its2])


def solve(params: ProblemParams, V, k: float, opts: SolveOptions = SolveOptions()) -> SolveReport:
    """Dispatch on the sign class of V."""
    V = build_potential(V)
    if V.sign_class() == SignClass.MIXED:
        return solve_mixed(params, V, k, opts)
    return solve_fast_decay(params, V, k, opts)


@dataclass
class NuPoint:
    k: float
    nu: float | None
    error: str | None = None
    report: SolveReport | None = field(default=None, repr=False)


def nu_of_k(params: ProblemParams, V, k_list, opts: SolveOptions = SolveOptions()) -> list[NuPoint]:
    """Solve for each k; failures are recorded and the sweep continues."""
    ks = list(k_list)
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k_list must be strictly increasing")
    out = []
    for k in ks:
        try:
            rep = solve(params, V, k, opts)
        except (RegimeError, MonotonicityError, ValueError, RuntimeError) as exc:
            out.append(NuPoint(k, None, str(exc)))
            continue
        if not rep.converged:
            out.append(NuPoint(k, None, "not converged", rep))
        else:
            out.append(NuPoint(k, rep.nu, None, rep))
    return out


def lipschitz_check(points: list[NuPoint], sign_class: SignClass, slack: float = 0.02) -> bool:
    """One-sided bounds on nu(k2) - nu(k1) against k2 - k1 for consecutive converged points."""
    good = [q for q in points if q.nu is not None]
    for a, b in zip(good, good[1:]):
        dk, dnu = b.k - a.k, b.nu - a.nu
        if sign_class in (SignClass.GE1, SignClass.ONE) and dnu < dk * (1 - slack):
            return False
        if sign_class in (SignClass.LE1, SignClass.ONE) and not (0 <= dnu <= dk * (1 + slack)):
            return False
        if sign_class == SignClass.MIXED and dnu < 0:
            return False
    return True


def fit_bracket_constant(points: list[NuPoint], p: float) -> float:
    """Smallest C with |nu - k| <= C k^p over the converged points."""
    vals = [abs(q.nu - q.k) / q.k**p for q in points if q.nu is not None]
    return max(vals) if vals else math.nan


# --- elementary inequalities ----------------------------------------------


def positive_part_power_bound(a, b, p: float):
    """Upper bound for (a+b)_+^p with a > 0, in the two ranges 1 < p <= 2 and p > 2."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = np.abs(b)
    if p <= 2:
        return a**p + p * a ** (p - 1) * ab + ab**p
    return (a**p + p * a ** (p - 1) * ab + 2**p * p * (p - 1) * a ** (p - 2) * b**2
            + 2**p * ab**p)


def positive_part_power(a, b, p: float):
    return np.maximum(np.asarray(a) + np.asarray(b), 0.0) ** p
