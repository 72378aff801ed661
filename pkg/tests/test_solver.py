import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laneemden.exponents import (ProblemParams, RegimeError, derive_exponents,
                                 select_working_exponents)
from laneemden.potentials import build_potential
from laneemden.profile import shoot_profile
from laneemden.solver import (Direction, NuPoint, SolveOptions, auto_grid, barrier_weight,
                              build_wk, lipschitz_check, nu_of_k, picard_step,
                              positive_part_power, positive_part_power_bound, solve,
                              solve_fast_decay, solve_mixed)


@pytest.fixture(scope="module")
def wk(params10):
    prof = shoot_profile(params10)
    k = 1e-3
    return build_wk(params10, prof, k, auto_grid(params10, k))


def test_wk_asymptotics(params10, wk):
    ex = derive_exponents(params10)
    g = wk.grid
    r0, r1 = 10 * g.r_min, g.r_max / 10
    assert wk.evaluate(r0) * r0 ** ex.sing_exp == pytest.approx(ex.c_p, rel=1e-3)
    assert wk.evaluate(r1) * r1 ** (params10.N - 2) == pytest.approx(1e-3, rel=1e-2)


def test_wk_ordered_in_k(params10):
    prof = shoot_profile(params10)
    g = auto_grid(params10, 1e-4)
    w1, w2 = build_wk(params10, prof, 1e-4, g), build_wk(params10, prof, 1e-3, g)
    ex = derive_exponents(params10)
    assert np.all(w1.values < w2.values)
    assert np.all(w2.values < ex.c_p * g.nodes ** -ex.sing_exp)


def test_wk_rejects_oscillatory_profile():
    params = ProblemParams(10, 1.4)
    with pytest.raises(RegimeError):
        build_wk(params, shoot_profile(params), 1e-3, auto_grid(ProblemParams(10, 1.3), 1e-3))


def test_picard_step_zero_and_order(params10, wk):
    zero = wk.scaled(0.0)
    assert np.all(picard_step(build_potential("const1"), zero, 1.3, 10).values == 0)
    # a direct step re-integrates the singular head, good to a few 1e-9
    up = picard_step(build_potential("bump"), wk, 1.3, 10)
    assert np.all(up.values >= wk.values * (1 - 1e-8))
    down = picard_step(build_potential("bridge:alpha0=0,beta=-1"), wk, 1.3, 10)
    assert np.all(down.values <= wk.values * (1 + 1e-8))


def test_const1_trivial(params10):
    rep = solve(params10, "const1", 1e-3)
    assert rep.converged and rep.iterations <= 3
    assert rep.nu == pytest.approx(1e-3, rel=1e-8)
    assert rep.nu_farfield == pytest.approx(1e-3, rel=1e-3)
    assert rep.barrier_eps == 0.0


def test_bump_bracketing(params10):
    k = 1e-3
    rep = solve(params10, "bump", k)
    assert rep.direction is Direction.INCREASING
    prof = shoot_profile(params10)
    w = build_wk(params10, prof, k, rep.solution.grid)
    u = rep.solution.values
    theta0 = select_working_exponents(params10, 2.0).theta0
    assert rep.theta0 == pytest.approx(theta0)
    bound = w.values + rep.barrier_eps * barrier_weight(w.grid, 10, theta0)
    assert np.all(u >= w.values * (1 - 1e-9))
    assert np.all(u <= bound * (1 + 1e-6))
    # two measurements of nu agree
    assert rep.nu_direct == pytest.approx(rep.nu, rel=1e-6)
    assert rep.nu_farfield == pytest.approx(rep.nu, rel=1e-3)
    trace = rep.sup_change_trace
    assert all(b < a for a, b in zip(trace[1:], trace[2:]))


def test_bridge_decreasing(params10):
    k = 1e-3
    rep = solve(params10, "bridge:alpha0=0,beta=-1", k)
    assert rep.converged and rep.direction is Direction.DECREASING
    w = build_wk(params10, shoot_profile(params10), k, rep.solution.grid)
    assert np.all(rep.solution.values <= w.values * (1 + 1e-9))
    assert 0 < rep.nu < k


def test_mixed_requires_two_stage(params10):
    with pytest.raises(RegimeError):
        solve_fast_decay(params10, "wave", 1e-3)
    reps = [solve(params10, "wave", k) for k in (1e-4, 1e-3, 1e-2)]
    assert all(r.converged and r.direction is Direction.TWO_STAGE for r in reps)
    ratios = [abs(r.nu / r.k - 1) for r in reps]
    assert ratios[0] < ratios[1] < ratios[2]
    assert ratios[0] < 0.01


def test_mixed_reduces_to_fast_decay_for_le1(params10):
    a = solve_mixed(params10, "bridge:alpha0=0,beta=-1", 1e-3)
    b = solve_fast_decay(params10, "bridge:alpha0=0,beta=-1", 1e-3)
    assert a.stages[1] <= 1
    assert a.nu == pytest.approx(b.nu, rel=1e-6)
    mid = a.solution.grid.middle(0.5)
    assert np.allclose(a.solution.values[mid], b.solution.values[mid], rtol=1e-6)
    c = solve_mixed(params10, "const1", 1e-3)
    assert c.nu == pytest.approx(1e-3, rel=1e-2)


def test_non_convergence_reported(params10):
    rep = solve(params10, "bridge:alpha0=0,beta=-1", 1e-3, SolveOptions(max_iter=2))
    assert not rep.converged and rep.status == "not_converged"
    assert rep.iterations == 2


def test_regime_refusals(params10):
    with pytest.raises(RegimeError):
        solve(ProblemParams(10, 1.25), "const1", 1e-3)
    with pytest.raises(RegimeError):
        solve(params10, "bridge:alpha0=0,beta=1", 1e-3)
    with pytest.raises(ValueError):
        solve(params10, "const1", -1.0)


def test_nu_of_k_const1(params10):
    ks = [1e-4, 1e-3, 1e-2]
    pts = nu_of_k(params10, "const1", ks)
    assert [p.nu for p in pts] == pytest.approx(ks, rel=1e-8)
    with pytest.raises(ValueError):
        nu_of_k(params10, "const1", [1e-2, 1e-3])


def test_lipschitz_check_detects_violation():
    from laneemden.potentials import SignClass
    good = [NuPoint(1.0, 1.0), NuPoint(2.0, 2.5)]
    assert lipschitz_check(good, SignClass.GE1)
    assert not lipschitz_check(good, SignClass.LE1)


def test_barrier_follows_derived_exponent(params10):
    # near the origin the correction is k-independent, so the minimal barrier
    # constant scales like R_k^{tau0 - tau1} with R_k ~ k^{1/b_p}
    ex = derive_exponents(params10)
    ks = [1e-2 / 2**i for i in range(4, -1, -1)]
    for spec, tau0 in (("bump", 2.0), ("bridge:alpha0=0,beta=-1", 1.0)):
        eps = [solve(params10, spec, k).barrier_eps for k in ks]
        slope = np.polyfit(np.log(ks), np.log(eps), 1)[0]
        w = select_working_exponents(params10, tau0)
        assert slope == pytest.approx(w.tau2 / ex.b_p, rel=0.05), spec


@settings(max_examples=200, deadline=None)
@given(p=st.floats(1.01, 6.0), a=st.floats(1e-6, 1e3), b=st.floats(-1e3, 1e3))
def test_positive_part_power_bound(p, a, b):
    lhs = positive_part_power(a, b, p)
    rhs = positive_part_power_bound(a, b, p)
    assert lhs <= rhs * (1 + 1e-12) + 1e-300
