import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from laneemden.asymptotics import fit_decay_exponent
from laneemden.exponents import fundamental_constant, sphere_area
from laneemden.radial import (RadialFunction, default_grid, integrate_ball, integrate_full_space,
                              make_log_grid, newton_potential, radial_laplacian)


def _power(g, s):
    return RadialFunction(g, g.nodes**s, s, s)


def _bubble(g, N):
    """U = (1+r^2)^{-(N-2)/2} with -Delta U = N(N-2) U^{(N+2)/(N-2)}."""
    r = g.nodes
    U = RadialFunction(g, (1 + r**2) ** (-(N - 2) / 2), 0.0, 2.0 - N)
    f = RadialFunction(g, N * (N - 2) * (1 + r**2) ** (-(N + 2) / 2), 0.0, -(N + 2.0))
    return U, f


def test_grid_validation():
    with pytest.raises(ValueError):
        make_log_grid(1.0, 10.0, 100)
    with pytest.raises(ValueError):
        make_log_grid(1e-3, 1e3, 10)
    g = default_grid()
    assert g.size == 1201 and g.per_decade == pytest.approx(100)
    assert g.is_symmetric()
    ratio = g.nodes[1:] / g.nodes[:-1]
    assert np.allclose(ratio, ratio[0], rtol=1e-12)
    assert g.middle(0.5).sum() == 601


def test_values_shape_checked():
    with pytest.raises(ValueError):
        RadialFunction(default_grid(), np.ones(5))


@pytest.mark.parametrize("N,theta", [(10, 5.0), (5, 1.5), (3, 0.5), (7, 4.0)])
def test_newton_potential_of_pure_power(N, theta):
    # Gamma * r^{-theta-2} = r^{-theta} / (theta (N-2-theta))
    g = default_grid()
    u = newton_potential(_power(g, -theta - 2), N)
    exact = g.nodes**-theta / (theta * (N - 2 - theta))
    assert np.max(np.abs(u.values / exact - 1)) < 1e-8
    assert u.outer_tail == pytest.approx(-theta)


@pytest.mark.parametrize("N", [3, 5, 10])
def test_newton_potential_bubble(N):
    g = default_grid()
    U, f = _bubble(g, N)
    u = newton_potential(f, N)
    assert np.max(np.abs(u.values / U.values - 1)) < 1e-7


@pytest.mark.parametrize("N", [3, 5, 10])
def test_full_space_mass_of_bubble(N):
    # c_N int f = lim U r^{N-2} = 1
    g = default_grid()
    _, f = _bubble(g, N)
    assert integrate_full_space(f, N, weight_cN=True) == pytest.approx(1.0, rel=1e-9)


def test_full_space_integral_against_beta_function():
    # int_{R^N} (1+r^2)^{-s} = omega/2 B(N/2, s - N/2)
    N, s = 6, 5.0
    g = default_grid()
    f = RadialFunction(g, (1 + g.nodes**2) ** -s, 0.0, -2 * s)
    exact = sphere_area(N) / 2 * special.beta(N / 2, s - N / 2)
    assert integrate_full_space(f, N) == pytest.approx(exact, rel=1e-10)


def test_ball_integral():
    N = 10
    g = default_grid()
    f = _power(g, -7.0)
    for R in (1e-3, 1.0, 10.0, 123.4):
        exact = sphere_area(N) * R**3 / 3
        assert integrate_ball(f, N, R) == pytest.approx(exact, rel=1e-7)
    with pytest.raises(ValueError):
        integrate_ball(f, N, 1e7)


@pytest.mark.parametrize("N", [3, 5, 10])
def test_laplacian_of_bubble(N):
    g = default_grid()
    U, f = _bubble(g, N)
    lap = radial_laplacian(U, N)
    mid = g.middle(0.5)
    assert np.max(np.abs(-lap.values[mid] / f.values[mid] - 1)) < 1e-6


def test_laplacian_of_fundamental_solution_vanishes():
    N = 10
    g = default_grid()
    u = _power(g, 2.0 - N)
    lap = radial_laplacian(u, N)
    # relative to the size of a single term u/r^2
    assert np.max(np.abs(lap.values) / (u.values / g.nodes**2)) < 1e-8


def test_evaluate_inside_and_tails():
    g = make_log_grid(1e-3, 1e3, 601)
    u = _power(g, -3.0)
    r = np.array([1e-5, 2e-3, 0.7, 5.0, 900.0, 1e5])
    assert np.allclose(u.evaluate(r), r**-3.0, rtol=1e-9)
    assert fit_decay_exponent(u, (1e-2, 10.0)).slope == pytest.approx(-3.0, abs=1e-12)


def test_arithmetic_tails():
    g = default_grid()
    a, b = _power(g, -2.0), _power(g, -5.0)
    s = a + b
    assert s.inner_tail == -5.0 and s.outer_tail == -2.0
    t = a.times(b)
    assert t.inner_tail == -7.0 and t.outer_tail == -7.0
    assert np.allclose((a - a).values, 0.0)
    q = (a.scaled(-1.0)).power(1.5)
    assert np.all(q.values == 0.0)


_profiles = st.tuples(st.floats(0.0, 4.0), st.floats(3.5, 14.0), st.floats(0.1, 10.0))


def _sample(g, spec):
    s, total, scale = spec
    r = g.nodes
    return RadialFunction(g, r**-s * (1 + r / scale) ** (s - total), -s, -total)


@settings(max_examples=40, deadline=None)
@given(f1=_profiles, scale2=st.floats(0.1, 10.0), c1=st.floats(-3, 3), c2=st.floats(-3, 3))
def test_newton_potential_linear(f1, scale2, c1, c2):
    # same tail exponents, different transition scales
    N = 8
    g = make_log_grid(1e-4, 1e4, 801)
    a, b = _sample(g, f1), _sample(g, (f1[0], f1[1], scale2))
    lhs = newton_potential(a.scaled(c1) + b.scaled(c2), N)
    ua, ub = newton_potential(a, N), newton_potential(b, N)
    rhs = c1 * ua.values + c2 * ub.values
    scale = abs(c1) * ua.values + abs(c2) * ub.values + 1e-300
    assert np.max(np.abs(lhs.values - rhs) / scale) < 1e-9


@settings(max_examples=40, deadline=None)
@given(f=_profiles)
def test_newton_potential_positive_and_superharmonic(f):
    N = 8
    g = make_log_grid(1e-4, 1e4, 801)
    u = newton_potential(_sample(g, f), N)
    assert np.all(u.values > 0)
    # the far field carries the total mass: u r^{N-2} -> c_N int f, with an
    # O(r^{N-total}) approach
    if f[1] > N + 3:
        mass = integrate_full_space(_sample(g, f), N, weight_cN=True)
        assert u.values[-1] * g.r_max ** (N - 2) == pytest.approx(mass, rel=1e-3)


def test_constants_consistent():
    for N in range(3, 13):
        omega = 2 * math.pi ** (N / 2) / math.gamma(N / 2)
        assert sphere_area(N) == pytest.approx(omega, rel=1e-14)
        assert fundamental_constant(N) == pytest.approx(1 / ((N - 2) * omega), rel=1e-14)
