"""Closed-form constants of the Lane-Emden problem -Delta u = V u^p in R^N minus the origin.

Everything here is a pure function of the dimension ``N`` and the exponent ``p``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass


class RegimeError(ValueError):
    """Raised when (N, p) or a potential parameter lies outside the admissible range."""


@dataclass(frozen=True)
class ProblemParams:
    N: int
    p: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise RegimeError(f"dimension N must be an integer >= 3, got {self.N}")
        if not self.p > 1:
            raise RegimeError(f"exponent p must exceed 1, got {self.p}")

    @property
    def serrin(self) -> float:
        return self.N / (self.N - 2)

    @property
    def sobolev(self) -> float:
        return (self.N + 2) / (self.N - 2)


@dataclass(frozen=True)
class ExponentSet:
    """All constants derived from (N, p).

    ``mu1``/``mu2`` are the roots of mu^2 + a mu + (p-1) c_p^{p-1}; ``mu1`` is the
    one with the larger real part (the slow rate of approach to c_p).
    """

    N: int
    p: float
    serrin: float
    sobolev: float
    p_c: float
    c_p_pow: float
    c_p: float
    a: float
    b_p: float
    lambda1: float
    lambda2: float
    mu1: complex
    mu2: complex
    discriminant: float
    tau_star: float
    tau_sharp: float
    sing_exp: float
    omega: float
    cN: float

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("mu1", "mu2"):
            z = out[key]
            out[key] = {"re": z.real, "im": z.imag}
        return out


@dataclass(frozen=True)
class WorkingExponents:
    tau1: float
    tau2: float
    theta0: float


def joseph_lundgren(N: int) -> float:
    return 1.0 + 4.0 / (N - 4 + 2.0 * math.sqrt(N - 1))


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere in R^N."""
    return 2.0 * math.pi ** (N / 2) / math.gamma(N / 2)


def fundamental_constant(N: int) -> float:
    """c_N with Gamma(x) = c_N |x|^{2-N} solving -Delta Gamma = delta_0."""
    return 1.0 / ((N - 2) * sphere_area(N))


def derive_exponents(params: ProblemParams) -> ExponentSet:
    N, p = params.N, params.p
    sing = 2.0 / (p - 1)
    b_p = N - 2 - sing
    c_p_pow = sing * b_p
    a = 4.0 / (p - 1) - N + 2
    disc = a * a - 4.0 * (p - 1) * c_p_pow
    root = cmath.sqrt(disc)
    mu1 = complex(0.5 * (-a + root))
    mu2 = complex(0.5 * (-a - root))
    if c_p_pow > 0:
        c_p = c_p_pow ** (1.0 / (p - 1))
    else:
        # p at or below Serrin: no positive singular solution
        c_p = float("nan")
    half = sing - (N - 2) / 2
    inner = half * half - 2.0 * b_p
    if inner >= 0:
        tau_star = half - math.sqrt(inner)
        tau_sharp = half + math.sqrt(inner)
    else:
        tau_star = tau_sharp = float("nan")
    return ExponentSet(
        N=N,
        p=p,
        serrin=params.serrin,
        sobolev=params.sobolev,
        p_c=joseph_lundgren(N),
        c_p_pow=c_p_pow,
        c_p=c_p,
        a=a,
        b_p=b_p,
        lambda1=b_p,
        lambda2=-sing,
        mu1=mu1,
        mu2=mu2,
        discriminant=disc,
        tau_star=tau_star,
        tau_sharp=tau_sharp,
        sing_exp=sing,
        omega=sphere_area(N),
        cN=fundamental_constant(N),
    )


def select_working_exponents(params: ProblemParams, tau0: float) -> WorkingExponents:
    """Pick tau1 in (tau*, tau#) and theta0 = 2/(p-1) - tau1.

    The half-gap rule is capped by the midpoint of (tau*, tau#) so that theta0
    stays in [(N-2)/2, 2/(p-1)) and theta0 (N-2-theta0) > p c_p^{p-1} holds
    strictly for every admissible (N, p, tau0), including p close to p_c.
    """
    ex = derive_exponents(params)
    if not ex.serrin < params.p < ex.p_c:
        raise RegimeError(
            f"working exponents need N/(N-2) < p < p_c = {ex.p_c:.6g}, got p = {params.p}"
        )
    if not tau0 > ex.tau_star:
        raise RegimeError(f"tau0 = {tau0} must exceed tau*_p = {ex.tau_star:.6g}")
    gap = min(tau0 - ex.tau_star, ex.sing_exp - (params.N - 2) / 2, ex.tau_sharp - ex.tau_star)
    tau1 = ex.tau_star + 0.5 * gap
    return WorkingExponents(tau1=tau1, tau2=tau0 - tau1, theta0=ex.sing_exp - tau1)


@dataclass
class HypothesisCheck:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass
class RegimeReport:
    checks: list[HypothesisCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[HypothesisCheck]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
        }


def validate_regime(params: ProblemParams, beta: float = 0.0, alpha: float | None = None,
                    tau0: float | None = None) -> RegimeReport:
    """Report each standing hypothesis on (N, p, beta, alpha, tau0) with its margin.

    Margins are positive when the hypothesis holds.
    """
    N, p = params.N, params.p
    p_c = joseph_lundgren(N)
    checks = [
        HypothesisCheck("p > N/(N-2)", p > params.serrin, p - params.serrin,
                        "p must exceed Serrin exponent N/(N-2)"),
        HypothesisCheck("p < p_c", p < p_c, p_c - p, "p must lie below the Joseph-Lundgren exponent"),
        HypothesisCheck("beta < (N-2)p - N", beta < (N - 2) * p - N, (N - 2) * p - N - beta,
                        "growth of V at infinity"),
    ]
    if tau0 is not None:
        ex = derive_exponents(params)
        ok = bool(p > params.serrin and p < p_c and tau0 > ex.tau_star)
        checks.append(HypothesisCheck("tau0 > tau*_p", ok, tau0 - ex.tau_star,
                                      "Holder rate of V at the origin"))
    if alpha is not None:
        lo = (N - 2) * p_c - N - 2
        ok = lo < alpha <= 0
        checks.append(HypothesisCheck("(N-2)p_c - N - 2 < alpha <= 0", ok,
                                      min(alpha - lo, -alpha), "decay rate of V at infinity"))
    return RegimeReport(checks)
