"""Potential families V(r) and sample-based checks of the standing hypotheses on V.

Spec strings accepted by :func:`build_potential`::

    const1
    bridge:alpha0=0,beta=-1      V = r^alpha0 (1+r)^(beta-alpha0)
    cap:alpha=-1                 V = min(1, r^alpha)
    bump:amp=0.2,power=2,decay=10   V = 1 + amp r^power / (1+r)^decay
    wave:amp=1                   V = 1 + amp r (1-r) e^{-r}   (crosses 1)
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .exponents import ProblemParams, RegimeError, joseph_lundgren
from .radial import RadialFunction, RadialGrid, fit_tail_exponent


class PotentialKind(str, Enum):
    CONSTANT1 = "Constant1"
    POWER_BRIDGE = "PowerBridge"
    RADIAL_DECREASING = "RadialDecreasing"
    CUSTOM = "Custom"


class SignClass(str, Enum):
    ONE = "one"
    GE1 = "ge1"
    LE1 = "le1"
    MIXED = "mixed"


@dataclass(frozen=True, eq=False)
class Potential:
    """An evaluable radial potential with declared metadata.

    ``inner_tail``/``outer_tail`` are the power-law exponents of V at 0 and
    infinity, used when V is sampled onto a grid.
    """

    kind: PotentialKind
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    meta: dict = field(default_factory=dict)
    spec: str = ""
    inner_tail: float | None = None
    outer_tail: float | None = None

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.func(r)

    def on_grid(self, grid: RadialGrid) -> RadialFunction:
        return RadialFunction.from_values(grid, self(grid.nodes), self.inner_tail, self.outer_tail)

    def sign_class(self, r=None, atol: float = 1e-14) -> SignClass:
        r = _probe_nodes() if r is None else r
        d = self(r) - 1.0
        if np.all(np.abs(d) <= atol):
            return SignClass.ONE
        if np.all(d >= -atol):
            return SignClass.GE1
        if np.all(d <= atol):
            return SignClass.LE1
        return SignClass.MIXED

    def split(self) -> tuple["Potential", "Potential"]:
        """V = V1 V2 with V1 = min(V, 1) <= 1 and V2 = max(V, 1) >= 1."""
        f = self.func
        lo = Potential(PotentialKind.CUSTOM, lambda r: np.minimum(f(r), 1.0),
                       {"part": "V1"}, f"min({self.spec},1)",
                       _clip_tail(self.inner_tail, "min"), _clip_tail(self.outer_tail, "min"))
        hi = Potential(PotentialKind.CUSTOM, lambda r: np.maximum(f(r), 1.0),
                       {"part": "V2"}, f"max({self.spec},1)",
                       _clip_tail(self.inner_tail, "max"), _clip_tail(self.outer_tail, "max"))
        return lo, hi

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "spec": self.spec, "meta": dict(self.meta)}


def _clip_tail(t, mode):
    # min(V,1) keeps a decaying tail and flattens a growing one; max does the reverse
    if t is None:
        return None
    if mode == "min":
        return min(t, 0.0) if t <= 0 else 0.0
    return max(t, 0.0)


def constant_one() -> Potential:
    return Potential(PotentialKind.CONSTANT1, lambda r: np.ones_like(r), {}, "const1", 0.0, 0.0)


def power_bridge(alpha0: float = 0.0, beta: float = 0.0) -> Potential:
    """V(r) = r^alpha0 (1+r)^(beta-alpha0)."""
    if alpha0 != 0.0:
        # near the origin |V - 1| ~ r^alpha0 - 1 does not vanish, tau0 undefined
        tau0 = None
    else:
        tau0 = 1.0
    meta = {"alpha0": alpha0, "beta": beta, "c_inf": 1.0, "tau0": tau0}
    return Potential(PotentialKind.POWER_BRIDGE,
                     lambda r: r**alpha0 * (1.0 + r) ** (beta - alpha0),
                     meta, f"bridge:alpha0={alpha0:g},beta={beta:g}", alpha0, beta)


def capped_power(alpha: float = -1.0, gamma: float = 1.0) -> Potential:
    """V(r) = min(1, r^alpha), radially decreasing for alpha <= 0."""
    if alpha > 0:
        raise ValueError("cap potential needs alpha <= 0")
    meta = {"alpha": alpha, "gamma": gamma, "beta": 0.0, "c_inf": 1.0, "tau0": math.inf}
    return Potential(PotentialKind.RADIAL_DECREASING,
                     lambda r: np.minimum(1.0, r**alpha),
                     meta, f"cap:alpha={alpha:g}", 0.0, alpha)


def bump(amp: float = 0.2, power: float = 2.0, decay: float = 10.0) -> Potential:
    """V(r) = 1 + amp r^power / (1+r)^decay; V >= 1 for amp >= 0."""
    if power <= 0:
        raise ValueError("bump power must be positive")
    meta = {"amp": amp, "power": power, "decay": decay, "tau0": power,
            "beta": max(power - decay, 0.0)}
    outer = max(power - decay, 0.0) if amp != 0 else 0.0
    return Potential(PotentialKind.CUSTOM,
                     lambda r: 1.0 + amp * r**power / (1.0 + r) ** decay,
                     meta, f"bump:amp={amp:g},power={power:g},decay={decay:g}", 0.0, outer)


def wave(amp: float = 1.0) -> Potential:
    """V(r) = 1 + amp r (1-r) e^{-r}: above 1 on (0,1), below 1 beyond."""
    meta = {"amp": amp, "tau0": 1.0, "beta": 0.0}
    return Potential(PotentialKind.CUSTOM,
                     lambda r: 1.0 + amp * r * (1.0 - r) * np.exp(-r),
                     meta, f"wave:amp={amp:g}", 0.0, 0.0)


_BUILDERS = {
    "const1": (constant_one, ()),
    "bridge": (power_bridge, ("alpha0", "beta")),
    "cap": (capped_power, ("alpha", "gamma")),
    "bump": (bump, ("amp", "power", "decay")),
    "wave": (wave, ("amp",)),
}


def parse_spec(spec: str) -> tuple[str, dict]:
    name, _, rest = spec.strip().partition(":")
    name = name.strip().lower()
    if name not in _BUILDERS:
        raise ValueError(f"unknown potential '{name}', expected one of {sorted(_BUILDERS)}")
    allowed = _BUILDERS[name][1]
    kwargs = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        key = key.strip()
        if not eq or key not in allowed:
            raise ValueError(f"bad parameter '{item}' for potential '{name}'")
        try:
            kwargs[key] = float(val)
        except ValueError:
            raise ValueError(f"parameter {key} must be numeric, got '{val}'") from None
    return name, kwargs


def build_potential(spec) -> Potential:
    """Build a potential from a spec string, or pass a Potential / callable through."""
    if isinstance(spec, Potential):
        V = spec
    elif callable(spec):
        V = Potential(PotentialKind.CUSTOM, spec, {}, "custom")
    else:
        name, kwargs = parse_spec(spec)
        V = _BUILDERS[name][0](**kwargs)
    values = V(_probe_nodes())
    if not np.all(np.isfinite(values)):
        raise ValueError(f"potential {V.spec} is not finite on (0, inf)")
    if np.any(values < 0):
        raise ValueError(f"potential {V.spec} takes negative values")
    return V


# --- hypothesis checks ----------------------------------------------------


@dataclass(frozen=True)
class ProbePlan:
    r_min: float = 1e-6
    r_max: float = 1e6
    per_decade: int = 50
    scale: float = 2.0  # l in the scaling hypotheses
    tau_window: tuple[float, float] = (1e-6, 0.1)

    def nodes(self) -> np.ndarray:
        n = int(round(math.log10(self.r_max / self.r_min) * self.per_decade)) + 1
        return np.geomspace(self.r_min, self.r_max, n)


def _probe_nodes() -> np.ndarray:
    return ProbePlan().nodes()


@dataclass
class HypothesisResult:
    name: str
    status: str  # "pass", "fail" or "inconclusive"
    margin: float
    constants: dict = field(default_factory=dict)
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass
class HypothesisReport:
    potential: str
    sign_class: SignClass
    results: list[HypothesisResult]
    samples: int
    nonexistence: bool = False

    def __getitem__(self, name: str) -> HypothesisResult:
        for res in self.results:
            if res.name == name:
                return res
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "potential": self.potential,
            "sign_class": self.sign_class.value,
            "samples": self.samples,
            "nonexistence": self.nonexistence,
            "results": [asdict(r) for r in self.results],
        }


def _lstsq(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((A @ coef - y) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2


def fit_tau0(V: Potential, plan: ProbePlan = ProbePlan()) -> tuple[float | None, float, float]:
    """(tau0, c0, r_squared) from log|V-1| against log r on the near-origin window.

    tau0 is None when V == 1 identically there.
    """
    lo, hi = plan.tau_window
    r = np.geomspace(max(lo, plan.r_min), hi, 2 * plan.per_decade * int(math.log10(hi / lo)) + 1)
    d = np.abs(V(r) - 1.0)
    if np.all(d <= 1e-15):
        return None, 0.0, 1.0
    if np.any(d == 0):
        return float("nan"), float("nan"), 0.0
    tau0, _, r2 = _lstsq(np.log(r), np.log(d))
    c0 = float(np.max(d / r**tau0))
    return tau0, c0, r2


def scaling_exponent(V: Potential, l: float, r: np.ndarray, part: str) -> float:
    """Tightest alpha with V(r/l) >= l^{-alpha} V(r) ("I") or <= ("II") on the sample."""
    ratio = np.log(V(r / l) / V(r)) / math.log(l)
    if part == "I":
        return max(0.0, float(np.max(-ratio)))
    return min(0.0, float(np.min(-ratio)))


def check_hypotheses(V: Potential, params: ProblemParams,
                     probe: ProbePlan = ProbePlan()) -> HypothesisReport:
    N, p = params.N, params.p
    r = probe.nodes()
    v = V(r)
    cls = V.sign_class(r)
    results = []

    # (V0)(i): |V - 1| <= c0 r^tau0 near the origin
    tau0, c0, r2 = fit_tau0(V, probe)
    if tau0 is None:
        results.append(HypothesisResult("V0(i)", "pass", math.inf, {"c0": 0.0, "tau0": None},
                                        "V = 1 near the origin"))
    elif not np.isfinite(tau0) or r2 < 0.99:
        results.append(HypothesisResult("V0(i)", "inconclusive", float("nan"),
                                        {"c0": c0, "tau0": tau0, "r_squared": r2},
                                        "power-law fit of |V-1| rejected"))
    else:
        ok = tau0 > 0
        results.append(HypothesisResult("V0(i)", "pass" if ok else "fail", tau0,
                                        {"c0": c0, "tau0": tau0, "r_squared": r2}))

    # (V0)(ii): 0 <= V <= c_inf (1+r)^beta
    beta = V.meta.get("beta")
    if beta is None:
        beta = fit_tail_exponent_samples(r, v)
    c_inf = float(np.max(v / (1.0 + r) ** beta))
    beta_ok = beta < (N - 2) * p - N
    ok = bool(np.all(v >= 0)) and np.isfinite(c_inf) and beta_ok
    results.append(HypothesisResult("V0(ii)", "pass" if ok else "fail",
                                    (N - 2) * p - N - beta, {"c_inf": c_inf, "beta": beta},
                                    "" if beta_ok else "beta >= (N-2)p - N"))

    # (V1)(I) and (II): scaling ratio sweeps
    l = probe.scale
    if cls in (SignClass.ONE, SignClass.GE1):
        a1 = scaling_exponent(V, l, r, "I")
        margin = N - 2 - (2 + a1) / (p - 1)
        results.append(HypothesisResult("V1(I)", "pass" if margin > 0 else "fail", margin,
                                        {"alpha1": a1, "l1": l}))
    else:
        results.append(HypothesisResult("V1(I)", "fail", -math.inf, {}, "V >= 1 fails"))
    if cls in (SignClass.ONE, SignClass.LE1):
        a2 = scaling_exponent(V, l, r, "II")
        margin = N - 2 - (2 + a2) / (p - 1)
        results.append(HypothesisResult("V1(II)", "pass" if margin > 0 else "fail", margin,
                                        {"alpha2": a2, "l2": l}))
    else:
        results.append(HypothesisResult("V1(II)", "fail", -math.inf, {}, "V <= 1 fails"))

    results.append(_check_v_infinity(V, params, r, v))

    nonexistence = False
    if V.kind == PotentialKind.POWER_BRIDGE:
        b = V.meta["beta"]
        nonexistence = b > -2 and p <= (N + b) / (N - 2)

    return HypothesisReport(V.spec, cls, results, len(r), nonexistence)


def fit_tail_exponent_samples(r: np.ndarray, v: np.ndarray, decades: float = 2.0) -> float:
    """Growth exponent of V at infinity from the last ``decades`` of the sample."""
    mask = r >= r[-1] / 10**decades
    if np.any(v[mask] <= 0):
        return 0.0
    slope, _, _ = _lstsq(np.log(r[mask]), np.log(v[mask]))
    return max(slope, 0.0) if abs(slope) > 1e-10 else 0.0


def _check_v_infinity(V, params, r, v) -> HypothesisResult:
    N = params.N
    lo = (N - 2) * joseph_lundgren(N) - N - 2
    decreasing = bool(np.all(np.diff(v) <= 1e-14 * np.maximum(v[:-1], 1.0)))
    out = r > 1
    alpha = V.meta.get("alpha")
    if alpha is None:
        if np.any(v[out] <= 0):
            return HypothesisResult("Vinf", "fail", -math.inf, {}, "V vanishes for r > 1")
        alpha, _, _ = _lstsq(np.log(r[out]), np.log(v[out]))
    ratio = v[out] / r[out] ** alpha
    gamma = float(max(np.max(ratio), np.max(1.0 / ratio))) if np.all(ratio > 0) else math.inf
    in_range = lo < alpha <= 0
    ok = decreasing and in_range and np.isfinite(gamma)
    detail = []
    if not decreasing:
        detail.append("V not radially decreasing")
    if not in_range:
        detail.append(f"alpha = {alpha:.4g} outside ({lo:.4g}, 0]")
    return HypothesisResult("Vinf", "pass" if ok else "fail", min(alpha - lo, -alpha),
                            {"alpha": alpha, "gamma": gamma}, "; ".join(detail))


def require_existence_regime(V: Potential, params: ProblemParams) -> None:
    """Refuse PowerBridge inputs in the known nonexistence regime."""
    if V.kind == PotentialKind.POWER_BRIDGE:
        b = V.meta["beta"]
        if b > -2 and params.p <= (params.N + b) / (params.N - 2):
            raise RegimeError(
                f"PowerBridge with beta = {b:g} > -2 and p <= (N+beta)/(N-2) has no solution")
