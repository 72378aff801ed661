"""Heteroclinic profile of the Emden-Fowler system.

With t = -ln|x| and u = |x|^{-2/(p-1)} w(t) the radial equation becomes

    w'' + a w' - c_p^{p-1} w + w^p = 0,

and the fast-decaying solutions correspond to the orbit leaving (0, 0) along
the unstable eigendirection and landing on (c_p, 0). The orbit is integrated in
the variables s = ln w, q = w'/w, which keeps the exponentially small start
point well scaled:

    s' = q,    q' = -a q + c_p^{p-1} - e^{(p-1)s} - q^2.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import BPoly

from .exponents import ExponentSet, ProblemParams, RegimeError, derive_exponents


class ProfileError(RuntimeError):
    pass


class Regime(str, enum.Enum):
    MONOTONE = "Monotone"
    OSCILLATORY = "Oscillatory"


@dataclass(frozen=True)
class ShootOptions:
    start_ratio: float = 1e-16  # (w/c_p)^{p-1} at the start of integration
    tol: float = 1e-9  # final distance to (c_p, 0), relative
    rtol: float = 1e-11
    dt: float = 0.01  # sampling step of the stored profile
    max_crossings: int = 8
    linear_entry: float = 1e-3  # relative gap to c_p where the approach phase ends


@dataclass(frozen=True, eq=False)
class Profile:
    """Sampled profile w(t), normalized so that w(t) e^{-b_p t} -> 1 as t -> -inf."""

    params: ProblemParams
    t_grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    shift: float
    sup_value: float
    regime: Regime
    crossings: int
    max_log_derivative: float
    _log_spline: BPoly

    def __post_init__(self):
        for arr in (self.t_grid, self.values, self.derivative):
            arr.setflags(write=False)

    @property
    def exponents(self) -> ExponentSet:
        return derive_exponents(self.params)

    def __call__(self, t):
        return evaluate_profile(self, t)


def _rhs(a: float, c: float, pm1: float):
    def rhs(t, y):
        s, q = y
        return [q, -a * q + c - math.exp(pm1 * s) - q * q]

    return rhs


def _quintic_hermite(t, y, dy, ddy) -> BPoly:
    """Piecewise quintic matching value, first and second derivative at every node."""
    d = np.diff(t)
    c = np.empty((6, len(d)))
    c[0] = y[:-1]
    c[1] = y[:-1] + d * dy[:-1] / 5
    c[2] = y[:-1] + 2 * d * dy[:-1] / 5 + d * d * ddy[:-1] / 20
    c[3] = y[1:] - 2 * d * dy[1:] / 5 + d * d * ddy[1:] / 20
    c[4] = y[1:] - d * dy[1:] / 5
    c[5] = y[1:]
    return BPoly(c, t)


@functools.lru_cache(maxsize=64)
def shoot_profile(params: ProblemParams, opts: ShootOptions = ShootOptions()) -> Profile:
    """Integrate the heteroclinic orbit from the origin's unstable manifold to (c_p, 0)."""
    N, p = params.N, params.p
    if not params.serrin < p < params.sobolev:
        raise RegimeError(f"profile needs N/(N-2) < p < (N+2)/(N-2), got N={N}, p={p}")
    ex = derive_exponents(params)
    a, c, b = ex.a, ex.c_p_pow, ex.b_p
    pm1 = p - 1.0
    log_cp = math.log(ex.c_p)

    # Unstable manifold: q = b + kappa e^{(p-1)s} + O(e^{2(p-1)s}).
    s0 = log_cp + math.log(opts.start_ratio) / pm1
    kappa = -1.0 / ((p + 1) * b + a)
    q0 = b + kappa * math.exp(pm1 * s0)
    # Time origin chosen so that s - b t -> 0 as t -> -inf (d0 = 1).
    t0 = (s0 - kappa * math.exp(pm1 * s0) / (pm1 * b)) / b

    rhs = _rhs(a, c, pm1)
    slow = min(abs(ex.mu1.real), abs(ex.mu2.real))
    horizon = (log_cp - s0) / b + 200.0 / slow + 100.0

    # Approach phase in deviations from the linear growth, s~ = s - b t and
    # q~ = q - b, which vanish as t -> -inf; the tolerances then act on the
    # small corrections rather than on |s| ~ |b t|. Uses c = b (a + b).
    lin = a + 2.0 * b

    def rhs_dev(t, y):
        sd, qd = y
        return [qd, -lin * qd - qd * qd - math.exp(pm1 * (sd + b * t))]

    def reach(t, y):
        return y[0] + b * t - (log_cp + math.log1p(-opts.linear_entry))

    reach.terminal = True
    reach.direction = 1

    def blowup(t, y):
        return y[0] + b * t - (log_cp + 10.0)

    blowup.terminal = True

    sol_a = solve_ivp(rhs_dev, (t0, t0 + horizon), [s0 - b * t0, q0 - b], method="DOP853",
                      rtol=opts.rtol, atol=1e-15, dense_output=True, events=[reach, blowup])
    if sol_a.status != 1 or len(sol_a.t_events[0]) == 0:
        raise ProfileError(
            f"trajectory did not approach c_p (status {sol_a.status}: {sol_a.message}); "
            "the connection exists analytically, so this is an integrator failure"
        )

    sigma = math.sqrt(abs(ex.mu1 * ex.mu2))

    def converged(t, y):
        return (y[0] - log_cp) ** 2 + (y[1] / sigma) ** 2 - opts.tol**2

    converged.terminal = True
    converged.direction = -1

    def crossing(t, y):
        return y[0] - log_cp

    crossing.terminal = opts.max_crossings

    t1 = sol_a.t[-1]
    y1 = sol_a.y[:, -1] + np.array([b * t1, b])
    sol_b = solve_ivp(rhs, (t1, t1 + horizon), y1, method="DOP853",
                      rtol=opts.rtol, atol=1e-14, dense_output=True,
                      events=[converged, crossing])
    if sol_b.status == -1:
        raise ProfileError(f"integration failed near the equilibrium: {sol_b.message}")
    t_end = sol_b.t[-1]
    n_cross = len(sol_b.t_events[1])

    n_a = max(int(math.ceil((t1 - t0) / opts.dt)), 2)
    n_b = max(int(math.ceil((t_end - t1) / opts.dt)), 2)
    ta = np.linspace(t0, t1, n_a + 1)
    tb = np.linspace(t1, t_end, n_b + 1)[1:]
    ya = sol_a.sol(ta) + np.vstack([b * ta, np.full_like(ta, b)])
    yb = sol_b.sol(tb)
    t_grid = np.concatenate([ta, tb])
    s = np.concatenate([ya[0], yb[0]])
    q = np.concatenate([ya[1], yb[1]])

    if not np.all(np.isfinite(s)) or s.max() > log_cp + 5.0:
        raise ProfileError("trajectory diverged")

    values = np.exp(s)
    if n_cross > 0:
        regime = Regime.OSCILLATORY
    else:
        # no resolvable overshoot: decide from the linearization at the end point
        x_end = values[-1]
        disc = a * a - 4.0 * (p * x_end**pm1 - c)
        scale = max(a * a, 1.0)
        regime = Regime.OSCILLATORY if disc < -1e-9 * scale else Regime.MONOTONE

    # quintic Hermite interpolant of ln w from (s, s', s'') at every sample
    dq = -a * q + c - np.exp(pm1 * s) - q * q
    spline = _quintic_hermite(t_grid, s, q, dq)
    return Profile(
        params=params,
        t_grid=t_grid,
        values=values,
        derivative=q * values,
        shift=t0,
        sup_value=float(values.max()),
        regime=regime,
        crossings=n_cross,
        max_log_derivative=float(q.max()),
        _log_spline=spline,
    )


def evaluate_profile(profile: Profile, t):
    """w(t) with asymptotic extension outside the sampled range.

    Below the grid the normalized start e^{b_p t} is used, above it the
    equilibrium value c_p.
    """
    t = np.asarray(t, dtype=float)
    ex = profile.exponents
    lo, hi = profile.t_grid[0], profile.t_grid[-1]
    out = np.empty_like(t)
    inside = (t >= lo) & (t <= hi)
    out[inside] = np.exp(profile._log_spline(t[inside]))
    below = t < lo
    out[below] = profile.values[0] * np.exp(ex.b_p * (t[below] - lo))
    out[t > hi] = ex.c_p
    return out if out.ndim else float(out)


def evaluate_profile_log_derivative(profile: Profile, t):
    """w'(t)/w(t), with the same extension convention as :func:`evaluate_profile`."""
    t = np.asarray(t, dtype=float)
    ex = profile.exponents
    lo, hi = profile.t_grid[0], profile.t_grid[-1]
    out = np.zeros_like(t)
    inside = (t >= lo) & (t <= hi)
    out[inside] = profile._log_spline(t[inside], 1)
    out[t < lo] = ex.b_p
    return out if out.ndim else float(out)


def settle_time(profile: Profile, gap: float = 1e-3) -> float:
    """First t after which |w(t)/c_p - 1| stays below ``gap``."""
    dev = np.abs(profile.values / profile.exponents.c_p - 1.0)
    outside = np.nonzero(dev >= gap)[0]
    if len(outside) == 0:
        return float(profile.t_grid[0])
    i = outside[-1] + 1
    return float(profile.t_grid[min(i, len(profile.t_grid) - 1)])


def emergence_time(profile: Profile, gap: float = 1e-3) -> float:
    """Last t before which |w(t) e^{-b_p t} - 1| stays below ``gap``."""
    b = profile.exponents.b_p
    dev = np.abs(profile.values * np.exp(-b * profile.t_grid) - 1.0)
    outside = np.nonzero(dev >= gap)[0]
    if len(outside) == 0:
        return float(profile.t_grid[-1])
    return float(profile.t_grid[max(outside[0] - 1, 0)])


@dataclass(frozen=True)
class ProfileRates:
    rate_minus_inf: float
    rate_plus_inf: float
    d0_residual: float
    window_minus: tuple[float, float]
    window_plus: tuple[float, float]


def _slope(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0]), float(coef[1])


def profile_asymptotics(profile: Profile, params: ProblemParams | None = None,
                        left_level: float = 1e-6, gap_window=(1e-7, 1e-3)) -> ProfileRates:
    """Fit the exponential rates of the profile at both ends of the orbit.

    The left rate is the log-slope of w where (w/c_p)^{p-1} < ``left_level``,
    i.e. where the nonlinear correction is negligible. The right
    rate is the log-slope of |c_p - w| on the window where the relative gap lies
    in ``gap_window`` (Monotone), or the decay rate of successive extrema of
    |w - c_p| (Oscillatory).
    """
    params = params or profile.params
    ex = derive_exponents(params)
    t, w = profile.t_grid, profile.values
    left = (w / ex.c_p) ** (params.p - 1) < left_level
    if left.sum() < 10:
        raise ProfileError("left window too short for a stable fit")
    slope_l, icpt = _slope(t[left], np.log(w[left]))
    d0_res = float(np.max(np.abs(np.log(w[left]) - ex.b_p * t[left])))

    gap = np.abs(ex.c_p - w) / ex.c_p
    if profile.regime is Regime.MONOTONE:
        start = np.argmax(w > (1 - gap_window[1]) * ex.c_p)
        sel = np.zeros_like(left)
        sel[start:] = True
        sel &= (gap > gap_window[0]) & (gap < gap_window[1])
        if sel.sum() < 10:
            raise ProfileError("right window too short for a stable fit")
        slope_r, _ = _slope(t[sel], np.log(gap[sel]))
        window_plus = (float(t[sel][0]), float(t[sel][-1]))
    else:
        if profile.crossings < 2:
            raise ProfileError("oscillation below resolution; envelope rate not measurable")
        dev = w - ex.c_p
        idx = [i for i in range(1, len(dev) - 1)
               if abs(dev[i]) >= abs(dev[i - 1]) and abs(dev[i]) >= abs(dev[i + 1])
               and dev[i] * dev[i - 1] > 0 and t[i] > t[np.argmax(w >= ex.c_p)]]
        if len(idx) < 3:
            raise ProfileError("too few oscillation extrema to fit the envelope")
        # the first overshoot is still nonlinear
        idx = idx[1:]
        slope_r, _ = _slope(t[idx], np.log(np.abs(dev[idx])))
        window_plus = (float(t[idx[0]]), float(t[idx[-1]]))
    return ProfileRates(
        rate_minus_inf=slope_l,
        rate_plus_inf=-slope_r,
        d0_residual=d0_res,
        window_minus=(float(t[left][0]), float(t[left][-1])),
        window_plus=window_plus,
    )


@dataclass(frozen=True)
class HamiltonianOrbit:
    t: np.ndarray
    values: np.ndarray
    energy: np.ndarray
    sup_value: float


def hamiltonian_orbit(params: ProblemParams, start_ratio: float = 1e-16,
                      rtol: float = 1e-11) -> HamiltonianOrbit:
    """Homoclinic orbit of v'' - c_p^{p-1} v + v^p = 0 (the undamped comparison system).

    Returns the sampled orbit up to its turning point together with the energy
    E = v'^2/2 - c_p^{p-1} v^2/2 + v^{p+1}/(p+1) divided by v^2, which is
    conserved (and zero) along the exact orbit.
    """
    ex = derive_exponents(params)
    c, p = ex.c_p_pow, params.p
    pm1 = p - 1.0
    root = math.sqrt(c)
    s0 = math.log(ex.c_p) + math.log(start_ratio) / pm1
    # same manifold expansion with a = 0 and eigenvalue sqrt(c)
    q0 = root - math.exp(pm1 * s0) / ((p + 1) * root)
    rhs = _rhs(0.0, c, pm1)

    def turn(t, y):
        return y[1]

    turn.terminal = True
    turn.direction = -1
    span = (math.log(ex.c_p) - s0) / root + 50.0
    sol = solve_ivp(rhs, (0.0, span), [s0, q0], method="DOP853", rtol=rtol,
                    atol=1e-14, dense_output=True, events=turn)
    t = np.linspace(0.0, sol.t[-1], 4001)
    s, q = sol.sol(t)
    v = np.exp(s)
    energy = 0.5 * q**2 - 0.5 * c + v**pm1 / (p + 1)
    return HamiltonianOrbit(t=t, values=v, energy=energy, sup_value=float(v.max()))
