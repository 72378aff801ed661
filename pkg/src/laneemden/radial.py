"""Radial functions on a geometric grid, the Newton potential and the radial Laplacian.

Functions are sampled at r_i = r_min * rho^i and extended beyond the grid by
pure power laws, f(r) = f(r_min) (r/r_min)^sigma_in below r_min and likewise
above r_max. All integrals are taken in x = ln r, where every power law becomes
an exponential and the grid is uniform.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .exponents import fundamental_constant, sphere_area


class QuadratureError(ValueError):
    """A tail exponent makes the requested integral divergent."""


@dataclass(frozen=True, eq=False)
class RadialGrid:
    r_min: float
    r_max: float
    nodes: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.nodes.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def x(self) -> np.ndarray:
        return np.log(self.nodes)

    @property
    def h(self) -> float:
        """Uniform spacing in ln r."""
        return float(np.log(self.r_max / self.r_min) / (self.size - 1))

    @property
    def per_decade(self) -> float:
        return np.log(10.0) / self.h

    def middle(self, fraction: float = 0.5) -> np.ndarray:
        """Boolean mask of the central ``fraction`` of the grid in ln r."""
        x = self.x
        lo, hi = x[0], x[-1]
        pad = 0.5 * (1 - fraction) * (hi - lo)
        return (x >= lo + pad - 1e-12) & (x <= hi - pad + 1e-12)

    def is_symmetric(self, rtol: float = 1e-12) -> bool:
        return bool(np.allclose(self.nodes * self.nodes[::-1], 1.0, rtol=rtol, atol=0))

    def __eq__(self, other):
        if not isinstance(other, RadialGrid):
            return NotImplemented
        return self.size == other.size and np.array_equal(self.nodes, other.nodes)

    __hash__ = None


def make_log_grid(r_min: float = 1e-6, r_max: float = 1e6, M: int = 1201) -> RadialGrid:
    if not (0 < r_min < 1 < r_max):
        raise ValueError(f"need 0 < r_min < 1 < r_max, got r_min={r_min}, r_max={r_max}")
    if M < 16:
        raise ValueError(f"need at least 16 nodes, got {M}")
    nodes = np.exp(np.linspace(np.log(r_min), np.log(r_max), M))
    # pin the endpoints exactly
    nodes[0], nodes[-1] = r_min, r_max
    return RadialGrid(float(r_min), float(r_max), nodes)


def default_grid() -> RadialGrid:
    return make_log_grid(1e-6, 1e6, 1201)


def _fit_slope(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0])


def fit_tail_exponent(grid: RadialGrid, values: np.ndarray, side: str,
                      decades: float = 1.0) -> float | None:
    """Log-log slope over the first (``side="inner"``) or last decade of the grid.

    Returns None when the values vanish or change sign there.
    """
    n = max(int(round(decades * grid.per_decade)) + 1, 3)
    n = min(n, grid.size)
    sl = slice(0, n) if side == "inner" else slice(grid.size - n, grid.size)
    v = values[sl]
    if np.any(v == 0) or not (np.all(v > 0) or np.all(v < 0)):
        return None
    return _fit_slope(grid.x[sl], np.log(np.abs(v)))


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Grid values plus power-law tails beyond both ends of the grid.

    When ``inner_correction`` m is set, the inner tail is the two-term model
    r^sigma_in (C0 + C1 r^m), with C0 and C1 matched to the grid near r_min.
    This matters for functions such as w_k that approach their singular
    power law only slowly.
    """

    grid: RadialGrid
    values: np.ndarray
    inner_tail: float = 0.0
    outer_tail: float = 0.0
    inner_correction: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise ValueError("values must match the grid")
        if not (np.isfinite(self.inner_tail) and np.isfinite(self.outer_tail)):
            raise ValueError("tail exponents must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, grid: RadialGrid, values, inner_tail: float | None = None,
                    outer_tail: float | None = None) -> "RadialFunction":
        """Build a function, fitting whichever tail exponent is not supplied."""
        values = np.asarray(values, dtype=float)
        if inner_tail is None:
            inner_tail = fit_tail_exponent(grid, values, "inner")
            inner_tail = 0.0 if inner_tail is None else inner_tail
        if outer_tail is None:
            outer_tail = fit_tail_exponent(grid, values, "outer")
            outer_tail = 0.0 if outer_tail is None else outer_tail
        return cls(grid, values, float(inner_tail), float(outer_tail))

    @classmethod
    def from_callable(cls, grid: RadialGrid, func, inner_tail: float | None = None,
                      outer_tail: float | None = None) -> "RadialFunction":
        return cls.from_values(grid, func(grid.nodes), inner_tail, outer_tail)

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def with_values(self, values, inner_tail=None, outer_tail=None,
                    inner_correction="keep") -> "RadialFunction":
        return replace(
            self,
            values=np.asarray(values, dtype=float),
            inner_tail=self.inner_tail if inner_tail is None else float(inner_tail),
            outer_tail=self.outer_tail if outer_tail is None else float(outer_tail),
            inner_correction=(self.inner_correction if inner_correction == "keep"
                              else inner_correction),
        )

    def __add__(self, other: "RadialFunction") -> "RadialFunction":
        # a zero summand carries no tail information
        if not np.any(other.values):
            return self.with_values(self.values + other.values)
        if not np.any(self.values):
            return other.with_values(self.values + other.values)
        # the slower-decaying / more singular tail dominates the sum
        lo, hi = sorted((self, other), key=lambda f: f.inner_tail)
        gap = hi.inner_tail - lo.inner_tail
        corr = _min_corr(lo.inner_correction, hi.inner_correction)
        if gap > 0 and np.any(hi.values):
            corr = _min_corr(corr, gap)
        return self.with_values(self.values + other.values, lo.inner_tail,
                                max(self.outer_tail, other.outer_tail), corr)

    def __sub__(self, other: "RadialFunction") -> "RadialFunction":
        return self + other.scaled(-1.0)

    def scaled(self, c: float) -> "RadialFunction":
        return self.with_values(c * self.values)

    def power(self, p: float) -> "RadialFunction":
        """Positive part raised to the power p."""
        return self.with_values(np.maximum(self.values, 0.0) ** p,
                                p * self.inner_tail, p * self.outer_tail)

    def times(self, other: "RadialFunction") -> "RadialFunction":
        return self.with_values(self.values * other.values,
                                self.inner_tail + other.inner_tail,
                                self.outer_tail + other.outer_tail,
                                _min_corr(self.inner_correction, other.inner_correction))

    def __call__(self, r):
        return self.evaluate(r)

    def evaluate(self, r):
        """Evaluate anywhere in (0, inf): cubic spline in ln r inside, tails outside."""
        r = np.asarray(r, dtype=float)
        x = np.log(r)
        g = self.grid
        v = self.values
        out = np.empty_like(x)
        inside = (r >= g.r_min) & (r <= g.r_max)
        if np.all(v > 0):
            spline = CubicSpline(g.x, np.log(v))
            out[inside] = np.exp(spline(x[inside]))
        else:
            out[inside] = CubicSpline(g.x, v)(x[inside])
        lo, hi = r < g.r_min, r > g.r_max
        out[lo] = _inner_model(self, r[lo] / g.r_min)
        out[hi] = v[-1] * (r[hi] / g.r_max) ** self.outer_tail
        return out if out.ndim else float(out)


def _min_corr(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def zero_function(grid: RadialGrid) -> RadialFunction:
    return RadialFunction(grid, np.zeros(grid.size), 0.0, 0.0)


# --- quadrature -----------------------------------------------------------


def _interval_integrals(g: np.ndarray, h: float) -> np.ndarray:
    """Integrals of g over each grid interval, sixth order (quintic through 6 nodes).

    Interior intervals use the centered stencil; the two intervals at each end
    use one-sided quintics through the six nearest nodes.
    """
    n = len(g)
    if n < 6:
        raise ValueError("need at least 6 nodes")
    c = h / 1440.0
    out = np.empty(n - 1)
    out[2:-2] = c * (11.0 * (g[:-5] + g[5:]) - 93.0 * (g[1:-4] + g[4:-1])
                     + 802.0 * (g[2:-3] + g[3:-2]))
    e0 = np.array([475.0, 1427.0, -798.0, 482.0, -173.0, 27.0])
    e1 = np.array([-27.0, 637.0, 1022.0, -258.0, 77.0, -11.0])
    out[0] = c * (e0 @ g[:6])
    out[1] = c * (e1 @ g[:6])
    out[-1] = c * (e0 @ g[-1:-7:-1])
    out[-2] = c * (e1 @ g[-1:-7:-1])
    return out


def cumulative_log_integral(g: np.ndarray, h: float) -> np.ndarray:
    """C_i = integral of g(x) dx from x_0 to x_i on a uniform grid."""
    out = np.zeros(len(g))
    np.cumsum(_interval_integrals(g, h), out=out[1:])
    return out


def reverse_cumulative_log_integral(g: np.ndarray, h: float) -> np.ndarray:
    """R_i = integral of g(x) dx from x_i to x_{M-1}, summed from the outer end."""
    out = np.zeros(len(g))
    np.cumsum(_interval_integrals(g, h)[::-1], out=out[-2::-1])
    return out


def inner_tail_coefficients(f: RadialFunction) -> tuple[float, float]:
    """(C0, C1) of the inner model f = (r/r_min)^sigma (C0 + C1 (r/r_min)^m)."""
    v0 = f.values[0]
    m = f.inner_correction
    # a vanishing m makes the correction indistinguishable from C0
    if m is None or m <= 1e-8:
        return v0, 0.0
    g = f.grid
    j = min(g.size - 1, max(2, int(round(0.5 * g.per_decade))))
    rho = g.nodes[j] / g.r_min
    vj = f.values[j] * rho ** (-f.inner_tail)
    c1 = (vj - v0) / (rho**m - 1.0)
    return v0 - c1, c1


def _inner_model(f: RadialFunction, rho):
    """Inner tail model at r = rho r_min, rho < 1."""
    c0, c1 = inner_tail_coefficients(f)
    out = c0 * rho**f.inner_tail
    if c1:
        out = out + c1 * rho ** (f.inner_tail + f.inner_correction)
    return out


def _inner_moment(f: RadialFunction, m: float) -> float:
    """Integral of f(s) s^{m-1} ds over (0, r_min) under the inner tail model."""
    v0 = f.values[0]
    if v0 == 0.0:
        return 0.0
    if f.inner_tail + m <= 0:
        raise QuadratureError(
            f"inner tail exponent {f.inner_tail:.4g} not integrable against s^{m - 1:g}")
    c0, c1 = inner_tail_coefficients(f)
    out = c0 / (f.inner_tail + m)
    if c1:
        out += c1 / (f.inner_tail + m + f.inner_correction)
    return out * f.grid.r_min**m


def _outer_moment(f: RadialFunction, m: float) -> float:
    """Integral of f(s) s^{m-1} ds over (r_max, inf) under the outer power law."""
    v1 = f.values[-1]
    if v1 == 0.0:
        return 0.0
    if f.outer_tail + m >= 0:
        raise QuadratureError(
            f"outer tail exponent {f.outer_tail:.4g} not integrable against s^{m - 1:g}")
    return -v1 * f.grid.r_max**m / (f.outer_tail + m)


def _moment_or_none(fn, f, m):
    try:
        return fn(f, m)
    except QuadratureError:
        return None


def _two_sided(vals: np.ndarray, h: float, head, tail):
    """Left integrals head + int_{x_0}^{x_i} and right integrals int_{x_i}^{x_end} + tail.

    When both end pieces are finite, each integral is taken from the nearer end
    of the total (left part below the median of |vals|, right part above), so
    that neither loses relative precision to the rounding of the full sum.
    ``head``/``tail`` may be None when the corresponding moment diverges; only
    the convergent side is then returned.
    """
    fwd = cumulative_log_integral(vals, h)
    rev = reverse_cumulative_log_integral(vals, h)
    left = None if head is None else head + fwd
    right = None if tail is None else rev + tail
    if left is not None and right is not None:
        total = head + fwd[-1] + tail
        mass = cumulative_log_integral(np.abs(vals), h)
        upper = mass > 0.5 * mass[-1]
        left = np.where(upper, total - right, left)
        right = np.where(upper, right, total - left)
    return left, right


def newton_potential(f: RadialFunction, N: int) -> RadialFunction:
    """Gamma * f for radial f:

        u(r) = [ r^{2-N} int_0^r f s^{N-1} ds + int_r^inf f s ds ] / (N - 2).
    """
    g = f.grid
    r = g.nodes
    h = g.h
    if not np.any(f.values):
        return zero_function(g)
    A, _ = _two_sided(f.values * r**N, h, _inner_moment(f, N),
                      _moment_or_none(_outer_moment, f, N))
    _, B = _two_sided(f.values * r**2, h, _moment_or_none(_inner_moment, f, 2),
                      _outer_moment(f, 2))
    u = (r ** (2 - N) * A + B) / (N - 2)
    if f.inner_tail + 2 < 0:
        # the regular part u(0) enters as a correction r^{-(sigma_in+2)}
        inner, corr = f.inner_tail + 2, _min_corr(f.inner_correction, -(f.inner_tail + 2))
    else:
        inner, corr = 0.0, None
    outer = 2.0 - N if f.outer_tail < -N else f.outer_tail + 2
    return RadialFunction(g, u, inner, outer, corr)


def integrate_full_space(f: RadialFunction, N: int, weight_cN: bool = False) -> float:
    """Integral of f over R^N (times c_N when ``weight_cN``)."""
    g = f.grid
    if not np.any(f.values):
        return 0.0
    body = _interval_integrals(f.values * g.nodes**N, g.h).sum()
    total = sphere_area(N) * (_inner_moment(f, N) + body + _outer_moment(f, N))
    return total * fundamental_constant(N) if weight_cN else total


def integrate_ball(f: RadialFunction, N: int, R: float) -> float:
    """Integral of f over the ball of radius R (R inside the grid)."""
    g = f.grid
    if not g.r_min <= R <= g.r_max:
        raise ValueError("R must lie inside the grid")
    if not np.any(f.values):
        return 0.0
    cum = cumulative_log_integral(f.values * g.nodes**N, g.h)
    inner = _inner_moment(f, N)
    # cumulative integral is smooth in x; interpolate it at ln R
    return sphere_area(N) * (inner + float(CubicSpline(g.x, cum)(np.log(R))))


# --- differentiation ------------------------------------------------------

_D1 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_D2 = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0


def _ghost_extend(u: RadialFunction, k: int = 3) -> np.ndarray:
    g = u.grid
    j = np.arange(k, 0, -1)
    left = _inner_model(u, np.exp(-j * g.h))
    right = u.values[-1] * np.exp(u.outer_tail * np.arange(1, k + 1) * g.h)
    return np.concatenate([left, u.values, right])


def log_derivatives(u: RadialFunction) -> tuple[np.ndarray, np.ndarray]:
    """du/dx and d2u/dx2 in x = ln r, sixth-order central differences.

    Three ghost nodes on each side come from the tail power laws.
    """
    h = u.grid.h
    ext = _ghost_extend(u)
    d1 = np.convolve(ext, _D1[::-1], mode="valid") / h
    d2 = np.convolve(ext, _D2[::-1], mode="valid") / h**2
    return d1, d2


def radial_laplacian(u: RadialFunction, N: int) -> RadialFunction:
    """Delta u for radial u.

    Two equivalent forms are evaluated: r^{-2} (u_xx + (N-2) u_x) and
    r^{-N} (g_xx - (N-2) g_x) with g = r^{N-2} u. Finite differences of a local
    power law r^s are most accurate when |s| is small, so each node takes the
    first form where the log-slope of u exceeds -(N-2)/2 and the second
    otherwise. Constants and r^{2-N} are then both differentiated exactly.
    """
    if u.grid.size < 3:
        raise ValueError("need at least 3 nodes")
    r = u.grid.nodes
    d1, d2 = log_derivatives(u)
    plain = (d2 + (N - 2) * d1) / r**2
    g = RadialFunction(u.grid, u.values * r ** (N - 2),
                       u.inner_tail + N - 2, u.outer_tail + N - 2)
    e1, e2 = log_derivatives(g)
    shifted = (e2 - (N - 2) * e1) / r**N
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = d1 / u.values
    use_shifted = np.isfinite(slope) & (slope < -(N - 2) / 2)
    lap = np.where(use_shifted, shifted, plain)
    return RadialFunction(u.grid, lap, u.inner_tail - 2, u.outer_tail - 2)
