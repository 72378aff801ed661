from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laneemden.exponents import (ProblemParams, RegimeError, derive_exponents,
                                 fundamental_constant, joseph_lundgren, select_working_exponents,
                                 validate_regime)

mp.mp.dps = 40


def _oracle(N, p):
    """Closed forms in 40-digit arithmetic."""
    N, p = mp.mpf(N), mp.mpf(p)
    cpow = 2 / (p - 1) * (N - 2 - 2 / (p - 1))
    a = 4 / (p - 1) - N + 2
    disc = a * a - 4 * (p - 1) * cpow
    mu1 = (-a + mp.sqrt(disc)) / 2
    A = 2 / (p - 1) - (N - 2) / 2
    tau = A - mp.sqrt(A * A - 2 * (N - 2 - 2 / (p - 1)))
    return {"c_p_pow": cpow, "c_p": cpow ** (1 / (p - 1)), "a": a, "mu1": mu1, "tau_star": tau}


def test_invalid_params_rejected():
    with pytest.raises(RegimeError):
        ProblemParams(2, 1.5)
    with pytest.raises(RegimeError):
        ProblemParams(10, 1.0)


def test_sobolev_exponent_kills_a():
    ex = derive_exponents(ProblemParams(10, 1.5))
    assert ex.a == pytest.approx(0.0, abs=1e-14)


def test_p_c_rational_at_n10():
    # sqrt(9) = 3 makes p_c = 1 + 4/(6 + 6) = 4/3
    assert Fraction(1) + Fraction(4, 10 - 4 + 2 * 3) == Fraction(4, 3)
    assert joseph_lundgren(10) == pytest.approx(4 / 3, rel=1e-15)


def test_reference_values_n10_p13():
    ex = derive_exponents(ProblemParams(10, 1.3))
    # p - 1 = 3/10 makes these rational
    assert ex.c_p_pow == pytest.approx(float(Fraction(80, 9)), rel=1e-14)
    assert ex.a == pytest.approx(16 / 3, rel=1e-14)
    assert ex.b_p == pytest.approx(4 / 3, rel=1e-14)
    assert ex.lambda1 == pytest.approx(4 / 3, rel=1e-14)
    assert ex.lambda2 == pytest.approx(-20 / 3, rel=1e-14)
    assert ex.mu1.real == pytest.approx(-0.5585, abs=1e-4)
    assert ex.mu2.real == pytest.approx(-4.7749, abs=1e-4)
    assert ex.tau_star == pytest.approx(-ex.mu1.real, rel=1e-12)
    o = _oracle(10, "1.3")
    for key in ("c_p_pow", "c_p", "a", "tau_star"):
        assert getattr(ex, key) == pytest.approx(float(o[key]), rel=1e-12)
    assert ex.mu1.real == pytest.approx(float(o["mu1"]), rel=1e-12)


def test_oscillatory_roots_complex():
    ex = derive_exponents(ProblemParams(10, 1.4))
    assert ex.discriminant < 0
    assert ex.mu1.imag != 0 and ex.mu1 == pytest.approx(ex.mu2.conjugate())


def test_fundamental_constant_matches_gamma_function():
    for N in range(3, 13):
        omega = 2 * mp.pi ** (mp.mpf(N) / 2) / mp.gamma(mp.mpf(N) / 2)
        assert fundamental_constant(N) == pytest.approx(float(1 / ((N - 2) * omega)), rel=1e-13)


def test_working_exponents_reference():
    w = select_working_exponents(ProblemParams(10, 1.3), 1.0)
    assert w.tau1 == pytest.approx(0.7793, abs=1e-4)
    assert w.theta0 == pytest.approx(5.8874, abs=1e-4)
    ex = derive_exponents(ProblemParams(10, 1.3))
    assert w.theta0 * (8 - w.theta0) == pytest.approx(12.44, abs=0.01)
    assert w.theta0 * (8 - w.theta0) > 1.3 * ex.c_p_pow


def test_working_exponents_reject_small_tau0():
    ex = derive_exponents(ProblemParams(10, 1.3))
    with pytest.raises(RegimeError):
        select_working_exponents(ProblemParams(10, 1.3), ex.tau_star)


def test_validate_regime_serrin_message():
    rep = validate_regime(ProblemParams(10, 1.25))
    assert not rep.passed
    assert any("p must exceed Serrin exponent" in c.detail for c in rep.failures())
    assert validate_regime(ProblemParams(10, 1.3)).passed


def _subcritical(draw_N, frac):
    N = draw_N
    lo, hi = N / (N - 2), joseph_lundgren(N)
    return N, lo + (hi - lo) * frac


@settings(max_examples=300, deadline=None)
@given(N=st.integers(3, 12), frac=st.floats(1e-3, 1 - 1e-3))
def test_characteristic_identities(N, frac):
    _, p = _subcritical(N, frac)
    ex = derive_exponents(ProblemParams(N, p))
    assert (ex.mu1 + ex.mu2).real == pytest.approx(-ex.a, rel=1e-12, abs=1e-12)
    assert (ex.mu1 * ex.mu2).real == pytest.approx((p - 1) * ex.c_p_pow, rel=1e-10)
    assert ex.mu1.real < 0 and ex.mu2.real < 0 and ex.mu1.imag == 0
    assert ex.tau_star == pytest.approx(-ex.mu1.real, rel=1e-9, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(N=st.integers(3, 12), frac=st.floats(1e-3, 1 - 1e-3), extra=st.floats(0.0, 5.0))
def test_working_exponent_inequality(N, frac, extra):
    _, p = _subcritical(N, frac)
    params = ProblemParams(N, p)
    ex = derive_exponents(params)
    tau0 = ex.tau_star + 1e-3 + extra
    w = select_working_exponents(params, tau0)
    assert (N - 2) / 2 <= w.theta0 < 2 / (p - 1)
    assert w.theta0 * (N - 2 - w.theta0) > p * ex.c_p_pow
    assert w.tau2 > 0


def test_exponents_to_dict_roundtrip_json():
    import json
    d = derive_exponents(ProblemParams(10, 1.3)).to_dict()
    json.dumps(d)
    assert np.isclose(d["c_p_pow"], 80 / 9)
