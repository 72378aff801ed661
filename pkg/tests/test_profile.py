import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from laneemden.exponents import ProblemParams, RegimeError, derive_exponents
from laneemden.profile import (Regime, emergence_time, evaluate_profile, hamiltonian_orbit,
                               profile_asymptotics, settle_time, shoot_profile)


def _radau_profile(params, t_eval):
    """w'' = -a w' + c w - w^p from the unstable manifold, normalised so w ~ e^{b t}."""
    ex = derive_exponents(params)
    a, c, b, p = ex.a, ex.c_p_pow, ex.b_p, params.p
    K = -1.0 / ((p * b - b) * (p * b + b + a))
    t0 = math.log(1e-30 * ex.c_p) / b
    w0 = math.exp(b * t0) + K * math.exp(p * b * t0)
    dw0 = b * math.exp(b * t0) + K * p * b * math.exp(p * b * t0)

    def rhs(t, y):
        w = max(y[0], 0.0)
        return [y[1], -a * y[1] + c * y[0] - w**p]

    sol = solve_ivp(rhs, (t0, t_eval[-1]), [w0, dw0], method="Radau", rtol=1e-12,
                    atol=1e-40, t_eval=t_eval)
    return sol.y[0]


@pytest.fixture(scope="module")
def prof10(params10):
    return shoot_profile(params10)


def test_monotone_profile_matches_independent_integrator(params10, prof10):
    ex = derive_exponents(params10)
    t = np.linspace(-5.0, 6.0, 45)
    ref = _radau_profile(params10, t)
    got = evaluate_profile(prof10, t)
    assert np.max(np.abs(got / ref - 1)) < 1e-6
    assert prof10.regime is Regime.MONOTONE
    assert abs(prof10.sup_value / ex.c_p - 1) < 1e-3


def test_monotone_profile_invariants(params10, prof10):
    ex = derive_exponents(params10)
    assert np.all(prof10.values > 0)
    assert np.all(np.diff(prof10.values) > 0)
    assert prof10.sup_value <= ex.c_p * (1 + 1e-9)
    # normalisation d0 = 1: w e^{-b t} -> 1 at the far left
    t = prof10.t_grid[:20]
    assert np.allclose(prof10.values[:20] * np.exp(-ex.b_p * t), 1.0, rtol=1e-6)


def test_oscillatory_regime_above_p_c():
    params = ProblemParams(10, 1.4)
    prof = shoot_profile(params)
    ex = derive_exponents(params)
    assert prof.regime is Regime.OSCILLATORY
    assert prof.sup_value > ex.c_p
    assert prof.sup_value < ((params.p + 1) / 2) ** (1 / (params.p - 1)) * ex.c_p
    assert prof.crossings >= 2


def test_outside_range_rejected():
    with pytest.raises(RegimeError):
        shoot_profile(ProblemParams(10, 1.2))
    with pytest.raises(RegimeError):
        shoot_profile(ProblemParams(10, 1.6))


def test_rates(params10, prof10):
    ex = derive_exponents(params10)
    rates = profile_asymptotics(prof10, params10)
    assert rates.rate_minus_inf == pytest.approx(ex.b_p, rel=1e-3)
    assert rates.rate_plus_inf == pytest.approx(-ex.mu1.real, rel=0.05)


def test_settle_and_emergence_times(params10, prof10):
    ex = derive_exponents(params10)
    ts = settle_time(prof10, 1e-3)
    te = emergence_time(prof10, 1e-3)
    assert te < ts
    late = np.linspace(ts, ts + 5, 20)
    assert np.all(np.abs(evaluate_profile(prof10, late) / ex.c_p - 1) < 1e-3 * (1 + 1e-6))
    early = np.linspace(te - 5, te, 20)
    assert np.all(np.abs(evaluate_profile(prof10, early) * np.exp(-ex.b_p * early) - 1)
                  < 1e-3 * (1 + 1e-6))


def test_hamiltonian_orbit_reaches_envelope(params10):
    orb = hamiltonian_orbit(params10)
    ex = derive_exponents(params10)
    env = ((params10.p + 1) / 2) ** (1 / (params10.p - 1)) * ex.c_p
    assert orb.sup_value == pytest.approx(env, rel=1e-6)
    # the damped profile stays strictly inside the undamped homoclinic loop
    assert shoot_profile(params10).sup_value < orb.sup_value
    assert np.max(np.abs(orb.energy)) < 1e-6 * ex.c_p_pow


def test_profile_cached(params10):
    assert shoot_profile(params10) is shoot_profile(params10)
