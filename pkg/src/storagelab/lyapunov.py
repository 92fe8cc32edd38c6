"""Drift certificates, rate predictions, and tail envelopes.

The machinery rests on a rate function phi (non-decreasing, differentiable,
concave on [1, inf)), its clock Phi(t) = int_1^t ds/phi(s), and the profile
Vbar(u) = Phi^{-1}(G(u) + 1) built from the drain-time primitive
G(u) = int_1^u dv/r(v).  By construction Vbar'(u) r(u) = phi(Vbar(u)), so the
drift ratio

    ratio(u) = int_0^inf [phi(Vbar(u+v)) / r(u+v)] nu_bar(v) dv / phi(Vbar(u))

having limsup < 1 certifies ergodicity with total-variation rate
phi(Phi^{-1}(t)) and stationary tail envelope 1 / max(phi(Phi^{-1}(u)),
phi(Vbar(u))).  Geometric certificates make phi(Vbar) astronomically large,
so every integrand here is assembled in log space and exponentiated once.

Lower bounds, uniform ergodicity, Wasserstein contraction moduli, and the
sufficient small-jump density check for irreducibility live here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classifier import (
    DEFAULT_DECISION_MARGIN,
    DEFAULT_PROBE_GRID,
    CriterionResult,
    criterion_positive_recurrent,
    limit_estimate,
)
from .errors import (
    C3Violation,
    Divergent,
    HypothesisFailed,
    InvalidModulus,
    InvalidRateFunction,
)
from .levy_input import LevyInput
from .numerics import (
    FitResult,
    QuadratureSpec,
    fit_loglog,
    integrate_interval,
    integrate_semiinfinite,
    invert_monotone,
)
from .release_rate import ReleaseRate, flow_time_integral

__all__ = [
    "RateFunction", "DriftCertificate", "TailEnvelope",
    "FromRate", "SubGeometric", "ExponentialTail", "PolyQuotient", "LogScale",
    "PowerModulus", "CustomModulus", "GapBound", "LowerRateCurve",
    "UniformReport", "generator_apply", "build_certificate", "check_uniform",
    "tail_upper", "tail_lower", "tv_lower_rate",
    "check_wasserstein_contraction", "wasserstein_rate",
    "check_irreducibility_sufficient",
]


# ---------------------------------------------------------------------------
# rate functions phi and their clocks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateFunction:
    """phi on [1, inf): family 'constant1' (phi = 1), 'linear' (phi = c t),
    'power' (phi = t^a, a in (0,1)), or 'custom' (callable, numeric clock)."""

    family: str
    c: float = 1.0
    a: float = 0.5
    fn: object = None

    def __post_init__(self):
        if self.family not in ("constant1", "linear", "power", "custom"):
            raise InvalidRateFunction(f"unknown family {self.family!r}")
        if self.family == "linear" and self.c <= 0:
            raise InvalidRateFunction("linear rate needs c > 0")
        if self.family == "power" and not 0 < self.a < 1:
            raise InvalidRateFunction("power rate needs exponent in (0, 1)")
        if self.family == "custom":
            if self.fn is None:
                raise InvalidRateFunction("custom rate needs a callable")
            _check_concave_nondecreasing(self.fn)

    @classmethod
    def constant1(cls):
        return cls("constant1")

    @classmethod
    def linear(cls, c: float):
        return cls("linear", c=c)

    @classmethod
    def power(cls, a: float):
        return cls("power", a=a)

    @classmethod
    def custom(cls, fn):
        return cls("custom", fn=fn)

    def value(self, t: float) -> float:
        if self.family == "constant1":
            return 1.0
        if self.family == "linear":
            return self.c * t
        if self.family == "power":
            return t ** self.a
        return float(self.fn(t))

    def clock(self, t: float) -> float:
        """Phi(t) = int_1^t ds / phi(s)."""
        if t < 1.0:
            raise ValueError("clock is defined on [1, inf)")
        if self.family == "constant1":
            return t - 1.0
        if self.family == "linear":
            return math.log(t) / self.c
        if self.family == "power":
            return (t ** (1.0 - self.a) - 1.0) / (1.0 - self.a)
        return integrate_interval(lambda s: 1.0 / float(self.fn(s)), 1.0, t).value

    def clock_inv(self, s: float) -> float:
        if s < 0.0:
            raise ValueError("clock values are non-negative")
        if self.family == "constant1":
            return 1.0 + s
        if self.family == "linear":
            return math.exp(self.c * s)
        if self.family == "power":
            return (1.0 + (1.0 - self.a) * s) ** (1.0 / (1.0 - self.a))
        hi = 2.0
        while self.clock(hi) < s:
            hi *= 2.0
            if hi > 1e300:
                raise Divergent("clock inverse out of range")
        return invert_monotone(self.clock, s, (1.0, hi))

    def log_clock_inv(self, s: float) -> float:
        """log Phi^{-1}(s), stable deep into geometric growth."""
        if self.family == "constant1":
            return math.log1p(s)
        if self.family == "linear":
            return self.c * s
        if self.family == "power":
            return math.log1p((1.0 - self.a) * s) / (1.0 - self.a)
        return math.log(self.clock_inv(s))

    def log_rate_at_clock(self, s: float) -> float:
        """log phi(Phi^{-1}(s)), the log of the predicted rate at clock s."""
        if self.family == "constant1":
            return 0.0
        if self.family == "linear":
            return math.log(self.c) + self.c * s
        if self.family == "power":
            r = self.a / (1.0 - self.a)
            return r * math.log1p((1.0 - self.a) * s)
        return math.log(self.value(self.clock_inv(s)))


def _check_concave_nondecreasing(fn, tol: float = 1e-7):
    t = np.linspace(1.0, 1e4, 400)
    vals = np.array([float(fn(x)) for x in t])
    if (vals <= 0).any():
        raise InvalidRateFunction("rate function must be positive")
    if (np.diff(vals) < -tol * np.abs(vals[:-1])).any():
        raise InvalidRateFunction("rate function must be non-decreasing")
    second = np.diff(vals, 2)
    scale = np.max(np.abs(vals))
    if (second > tol * scale).any():
        raise InvalidRateFunction("rate function must be concave")


# ---------------------------------------------------------------------------
# generator
# ---------------------------------------------------------------------------

def generator_apply(levy: LevyInput, release: ReleaseRate, f, u: float,
                    f_prime=None, form: str = "fubini") -> float:
    """L f(u) = -r(u) f'(u) + jump part.

    'fubini' uses int_0^inf f'(u+v) nu_bar(v) dv (valid for non-decreasing
    C^1 f); 'direct' integrates (f(u+v) - f(u)) against the Levy density.
    Both are exposed so they can cross-check each other.
    """
    if form not in ("fubini", "direct"):
        raise ValueError("form must be 'fubini' or 'direct'")
    if f_prime is None:
        h = 1e-6 * max(1.0, abs(u))
        f_prime = lambda w: (f(w + h) - f(w - h)) / (2.0 * h)
    drift_term = -float(release.rate(u)) * float(f_prime(u))
    if form == "fubini":
        jump = integrate_semiinfinite(
            lambda v: float(f_prime(u + v)) * float(levy.tail(v))).value
    else:
        jump = integrate_semiinfinite(
            lambda v: (float(f(u + v)) - float(f(u))) * float(levy.density(v))).value
    return drift_term + jump


# ---------------------------------------------------------------------------
# drift certificates
# ---------------------------------------------------------------------------

def _exp(x: float) -> float:
    """exp saturating to inf/0 instead of raising; infinities then surface
    through the quadrature's divergence handling."""
    if x > 709.0:
        return math.inf
    if x < -745.0:
        return 0.0
    return math.exp(x)


def _signed_drain_time(release: ReleaseRate, u: float) -> float:
    """G(u) = int_1^u dv/r(v), negative below 1."""
    if u >= 1.0:
        return flow_time_integral(release, 1.0, u)
    return -flow_time_integral(release, u, 1.0)


@dataclass(frozen=True)
class DriftCertificate:
    levy: LevyInput
    release: ReleaseRate
    phi: RateFunction
    u_probe: tuple
    ratios: tuple
    drift_margin: float
    condition_c3: bool

    @property
    def valid(self) -> bool:
        return self.condition_c3 and self.drift_margin > 0.0

    # -- profile -----------------------------------------------------------
    def profile(self, u: float) -> float:
        """Vbar(u) = Phi^{-1}(G(u) + 1) for u >= 1, quadratic C^1 patch below."""
        if u >= 1.0:
            return self.phi.clock_inv(_signed_drain_time(self.release, u) + 1.0)
        v1 = self.phi.clock_inv(1.0)
        s1 = self.profile_slope(1.0)
        return max(1.0, v1 - 0.5 * s1 + 0.5 * s1 * u * u)

    def log_profile(self, u: float) -> float:
        """log Vbar(u) for u >= 1, usable where Vbar itself overflows."""
        return self.phi.log_clock_inv(_signed_drain_time(self.release, u) + 1.0)

    def profile_slope(self, u: float) -> float:
        """Vbar'(u) = phi(Vbar(u)) / r(u) on [1, inf)."""
        return math.exp(self.log_phi_profile(u)) / float(self.release.rate(u))

    def log_phi_profile(self, u: float) -> float:
        """log phi(Vbar(u)), stable for geometric certificates."""
        return self.phi.log_rate_at_clock(_signed_drain_time(self.release, u) + 1.0)

    # -- predictions --------------------------------------------------------
    def log_predicted_tv_rate(self, t: float) -> float:
        return self.phi.log_rate_at_clock(t)

    def predicted_tv_rate(self, t: float) -> float:
        """phi(Phi^{-1}(t)); grows to +inf for valid certificates."""
        return math.exp(min(self.log_predicted_tv_rate(t), 700.0))

    def predicted_tail_upper(self, u: float) -> float:
        """Envelope 1 / max(phi(Phi^{-1}(u)), phi(Vbar(u))) from the moment
        bound on the invariant law."""
        biggest = max(self.log_predicted_tv_rate(u), self.log_phi_profile(u))
        return math.exp(-biggest)

    def ratio(self, u: float) -> float:
        return _drift_ratio(self.levy, self.release, self.phi, u)


def _ratio_integrand(levy, release, phi, u):
    base = phi.log_rate_at_clock(_signed_drain_time(release, u) + 1.0)

    def integrand(v):
        lr = phi.log_rate_at_clock(_signed_drain_time(release, u + v) + 1.0)
        lt = float(levy.log_tail(v))
        return _exp(lr - base + lt) / float(release.rate(u + v))

    return integrand


def _drift_ratio(levy, release, phi, u) -> float:
    return integrate_semiinfinite(_ratio_integrand(levy, release, phi, u)).value


def _c3_jump_integral(levy, release, phi, u) -> float:
    """Tail form of condition (C3): finiteness of int_1^inf Vbar'(u+v)
    nu_bar(v) dv.  Evaluated relative to phi(Vbar(u)), which rescales by a
    positive constant without changing convergence; the unscaled value can
    legitimately exceed float range for geometric certificates."""
    return integrate_semiinfinite(_ratio_integrand(levy, release, phi, u),
                                  lower=1.0).value


def build_certificate(levy: LevyInput, release: ReleaseRate, phi: RateFunction,
                      probe_grid=DEFAULT_PROBE_GRID) -> DriftCertificate:
    """Assemble the drift certificate and verify its hypotheses numerically.

    Raises C3Violation when the jump integral of the profile diverges at a
    probe point; an eq-ratio above 1 only marks the certificate invalid
    (the rate function was too ambitious), it is not an error.
    """
    probe_grid = tuple(probe_grid)
    for u in probe_grid:
        try:
            _c3_jump_integral(levy, release, phi, u)
        except Divergent as exc:
            raise C3Violation(
                f"profile jump integral diverges at probe u = {u}") from exc
    ratios = []
    for u in probe_grid:
        try:
            ratios.append(_drift_ratio(levy, release, phi, u))
        except Divergent:
            ratios.append(math.inf)
    margin = 1.0 - limit_estimate(ratios, "limsup")
    return DriftCertificate(levy, release, phi, probe_grid, tuple(ratios),
                            float(margin), True)


# ---------------------------------------------------------------------------
# uniform ergodicity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UniformReport:
    time_integral: float
    finite_time_integral: bool
    pos_rec: CriterionResult
    uniform: bool


def check_uniform(levy: LevyInput, release: ReleaseRate,
                  probe_grid=DEFAULT_PROBE_GRID,
                  margin: float = DEFAULT_DECISION_MARGIN) -> UniformReport:
    """Uniform ergodicity: finite int_1^inf du/r(u) plus the ergodicity
    criterion."""
    ti = flow_time_integral(release, 1.0, math.inf)
    finite = math.isfinite(ti)
    pr = criterion_positive_recurrent(levy, release, probe_grid, margin)
    return UniformReport(ti, finite, pr, bool(finite and pr.satisfied))


# ---------------------------------------------------------------------------
# tail envelopes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailEnvelope:
    kind: str
    fn: object
    u_report: float
    up_to_constant: bool = False
    note: str = ""

    def __call__(self, u):
        return self.fn(u)

    def fitted_exponent(self, lo: float = None, hi: float = 1e6) -> FitResult:
        lo = self.u_report if lo is None else lo
        us = np.geomspace(max(lo, 1e-6), hi, 40)
        return fit_loglog(us, np.array([float(self.fn(u)) for u in us]))


@dataclass(frozen=True)
class FromRate:
    certificate: DriftCertificate


@dataclass(frozen=True)
class SubGeometric:
    eps: float = 0.1


@dataclass(frozen=True)
class ExponentialTail:
    c: float
    eps: float = 0.1


def _subgeometric_ratio(levy, release, eps, u) -> float:
    """Folded form of the sub-geometric ratio hypothesis: one integral,
    assembled in log space so exponential tails cause no overflow."""
    lt_u = float(levy.log_tail(u))
    lr_u = math.log(float(release.rate(u)))
    lu = math.log(u)

    def integrand(v):
        expo = (lt_u - float(levy.log_tail(u + v))
                + (1.0 + eps) * (lu - math.log(u + v))
                + float(levy.log_tail(v)) - lr_u)
        return _exp(expo)

    return integrate_semiinfinite(integrand).value


def tail_upper(levy: LevyInput, release: ReleaseRate, mode,
               probe_grid=DEFAULT_PROBE_GRID,
               margin: float = DEFAULT_DECISION_MARGIN) -> TailEnvelope:
    """Stationary-tail upper envelope under one of three modes.

    FromRate reads the certificate's moment bound; SubGeometric(eps) gives
    u^{1+eps} nu_bar(u) / r(u) after its ratio and monotonicity hypotheses
    check out; ExponentialTail(c, eps) gives e^{-(c-eps)u} / r(u) when the
    drain is unbounded and e^{cu} nu_bar(u) stays bounded.
    """
    probe_grid = tuple(probe_grid)
    if isinstance(mode, FromRate):
        cert = mode.certificate
        if not cert.valid:
            raise HypothesisFailed("certificate", "certificate is not valid")
        return TailEnvelope("UpperFromRate", cert.predicted_tail_upper, 1.0)

    if isinstance(mode, SubGeometric):
        eps = mode.eps
        us = np.geomspace(probe_grid[0], probe_grid[-1], 40)
        if not np.all(np.isfinite([float(levy.log_tail(u)) for u in us])):
            raise HypothesisFailed("positive-tail", "nu_bar vanishes on the grid")
        incr = [math.log(float(release.rate(u))) - (1.0 + eps) * math.log(u)
                - float(levy.log_tail(u)) for u in us]
        if any(b < a - 1e-9 for a, b in zip(incr[-12:], incr[-11:])):
            raise HypothesisFailed(
                "monotone-ratio", "r(u)/(u^{1+eps} nu_bar(u)) is not eventually non-decreasing")
        vals = []
        for u in probe_grid:
            try:
                vals.append(_subgeometric_ratio(levy, release, eps, u))
            except Divergent as exc:
                raise HypothesisFailed(
                    "subgeometric-ratio",
                    f"ratio integral diverges at u = {u}") from exc
        if limit_estimate(vals, "limsup") >= 1.0 - margin:
            raise HypothesisFailed("subgeometric-ratio",
                                   f"limsup estimate {limit_estimate(vals, 'limsup'):.3g} not below 1")
        u_report = probe_grid[0]

        def env(u, eps=eps):
            return _exp((1.0 + eps) * math.log(u) + float(levy.log_tail(u))
                        - math.log(float(release.rate(u))))

        return TailEnvelope("UpperPower", env, u_report, up_to_constant=True)

    if isinstance(mode, ExponentialTail):
        c, eps = mode.c, mode.eps
        if not 0 < eps < c:
            raise ValueError("need 0 < eps < c")
        if release.asymptotics().limsup() != math.inf:
            raise HypothesisFailed("rate-unbounded", "release rate must diverge")
        checks = [c * u + float(levy.log_tail(u)) for u in probe_grid]
        if limit_estimate(checks, "limsup") > 700.0:
            raise HypothesisFailed("exp-moment",
                                   "e^{cu} nu_bar(u) is unbounded on the probe grid")

        def env(u, c=c, eps=eps):
            return _exp(-(c - eps) * u) / float(release.rate(u))

        return TailEnvelope("UpperExponential", env, probe_grid[0],
                            up_to_constant=True)

    raise ValueError(f"unknown tail_upper mode {mode!r}")


@dataclass(frozen=True)
class PolyQuotient:
    pass


@dataclass(frozen=True)
class LogScale:
    pass


def _submultiplicative(log_tail_fn, lo: float, hi: float, n: int = 1000,
                       seed: int = 7) -> bool:
    """Sampled check of nu_bar(u) nu_bar(v) <= C nu_bar(u+v), C in {1,2,4,8}."""
    rng = np.random.default_rng(seed)
    u = np.exp(rng.uniform(math.log(lo), math.log(hi), n))
    v = np.exp(rng.uniform(math.log(lo), math.log(hi), n))
    gap = log_tail_fn(u) + log_tail_fn(v) - log_tail_fn(u + v)
    return bool(np.max(gap) <= math.log(8.0) + 1e-9)


def tail_lower(levy: LevyInput, release: ReleaseRate, eps: float,
               scale=PolyQuotient(), probe_grid=DEFAULT_PROBE_GRID) -> TailEnvelope:
    """Stationary-tail lower envelope, up to an unknown constant (set to 1).

    PolyQuotient: L(u) = u^{1-eps} nu_bar(u) / r(u), needing 1/nu_bar
    increasing submultiplicative and r(u)/u decreasing to 0.  LogScale:
    L(u) = u^{-eps} nu_bar(u), needing the same in log coordinates and
    r(u)/(u log u) -> 0.  Only the exponent of these envelopes is meaningful.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    us = np.geomspace(1.0, probe_grid[-1], 50)
    lt = np.array([float(levy.log_tail(u)) for u in us])
    if (np.diff(lt) > 1e-12).any():
        raise HypothesisFailed("tail-decreasing", "1/nu_bar is not increasing")
    ra = release.asymptotics()
    if isinstance(scale, PolyQuotient):
        if not _submultiplicative(lambda x: np.asarray(levy.log_tail(x), dtype=float),
                                  0.05, 50.0):
            raise HypothesisFailed("submultiplicative",
                                   "1/nu_bar fails the sampled submultiplicativity check")
        ok = (ra.kind == "bounded") or (ra.kind == "power" and ra.exponent < 1.0)
        if not ok:
            raise HypothesisFailed("rate-sublinear", "r(u)/u does not decrease to 0")

        def env(u):
            return _exp((1.0 - eps) * math.log(u) + float(levy.log_tail(u))
                        - math.log(float(release.rate(u))))

        return TailEnvelope("LowerPolyQuotient", env, 1.0, up_to_constant=True,
                            note="constant c_eps set to 1; exponent-level only")

    if isinstance(scale, LogScale):
        if not _submultiplicative(
                lambda x: np.asarray(levy.log_tail(np.exp(x)), dtype=float),
                0.5, 20.0):
            raise HypothesisFailed("submultiplicative-log",
                                   "1/nu_bar(e^u) fails the sampled submultiplicativity check")
        ok = (ra.kind == "bounded") or (ra.kind == "power" and ra.exponent <= 1.0)
        if not ok:
            raise HypothesisFailed("rate-subloglinear",
                                   "r(u)/(u log u) does not decrease to 0")

        def env(u):
            return _exp(-eps * math.log(u) + float(levy.log_tail(u)))

        return TailEnvelope("LowerLogScale", env, 1.0, up_to_constant=True,
                            note="constant c_eps set to 1; exponent-level only")

    raise ValueError(f"unknown tail_lower scale {scale!r}")


# ---------------------------------------------------------------------------
# total-variation lower rate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LowerRateCurve:
    fn: object
    fitted: FitResult
    drift_constant: float
    a_h: float
    eps: float

    def __call__(self, t):
        return self.fn(t)


def default_h_exponent(levy: LevyInput, margin: float = 0.1) -> float:
    """Largest power with int u^{a} nu(du) finite by a clear margin."""
    asym = levy.asymptotics()
    if asym.kind == "power":
        return max(asym.index - margin, 0.1)
    return 1.0


def tv_lower_rate(levy: LevyInput, release: ReleaseRate, eps: float = 0.1,
                  a_h: float | None = None, x: float = 1.0,
                  envelope: TailEnvelope | None = None) -> LowerRateCurve:
    """Lower bound t -> 0.5 L(h^{-1}(F^{-1}(2(h(x) + c t)))).

    h(u) = u^{a_h} must have a verified moment drift L h <= c on the probe
    grid, and F(u) = u L(h^{-1}(u)) must increase to infinity; the fitted
    t-exponent of the returned curve is reported for table comparisons.
    Note the eps and a_h slacks compound through F^{-1}: the asymptotic
    t-exponent is l/(a_h + l) with l the u-exponent of L, which approaches
    the sharp value only as both slacks vanish.
    """
    if a_h is None:
        a_h = default_h_exponent(levy)
    if envelope is None:
        envelope = tail_lower(levy, release, eps, PolyQuotient())

    # moment drift: c bounding L h over a wide grid
    grid = np.concatenate([[1e-2, 0.1, 1.0], np.geomspace(10.0, 1e6, 21)])
    h = lambda w: w ** a_h
    h_prime = lambda w: a_h * w ** (a_h - 1.0)
    drift_vals = []
    for u in grid:
        try:
            drift_vals.append(generator_apply(levy, release, h, float(u), h_prime))
        except Divergent as exc:
            raise HypothesisFailed(
                "moment-drift",
                f"jump integral of u^{a_h} diverges (tail too heavy)") from exc
    c = max(max(drift_vals), 1e-6)

    def log_L(w: float) -> float:
        return math.log(float(envelope.fn(math.exp(w))))

    def log_F(y: float) -> float:
        return y + log_L(y / a_h)

    ys = np.linspace(0.0, 600.0, 121)
    lf = np.array([log_F(y) for y in ys])
    if (np.diff(lf) <= 0).any() or lf[-1] <= lf[0] + 1.0:
        raise HypothesisFailed("F-monotone", "u L(h^{-1}(u)) is not increasing to infinity")

    def curve(t: float) -> float:
        s = 2.0 * (h(x) + c * t)
        y = invert_monotone(log_F, math.log(s), (0.0, 600.0))
        return 0.5 * math.exp(log_L(y / a_h))

    # fit past the transient knee so the asymptotic exponent is measured
    t0 = max(10.0, 10.0 * h(x) / c)
    ts = np.geomspace(t0, t0 * 1e6, 41)
    fitted = fit_loglog(ts, np.array([curve(t) for t in ts]))
    return LowerRateCurve(curve, fitted, float(c), float(a_h), float(eps))


# ---------------------------------------------------------------------------
# Wasserstein contraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerModulus:
    """beta(t) = t^d with d >= 1 (convex, vanishing only at 0)."""

    d: float

    def __post_init__(self):
        if self.d < 1.0:
            raise InvalidModulus("power modulus needs d >= 1")

    def value(self, t):
        return np.asarray(t, dtype=float) ** self.d


@dataclass(frozen=True)
class CustomModulus:
    fn: object

    def __post_init__(self):
        t = np.linspace(0.0, 10.0, 200)
        vals = np.array([float(self.fn(x)) for x in t])
        if vals[0] != 0.0 or (vals[1:] <= 0).any():
            raise InvalidModulus("modulus must vanish exactly at 0 and be positive after")
        if (np.diff(vals, 2) < -1e-9 * max(1.0, vals.max())).any():
            raise InvalidModulus("modulus must be convex")

    def value(self, t):
        if np.isscalar(t) or np.ndim(t) == 0:
            return float(self.fn(float(t)))
        return np.asarray([float(self.fn(x)) for x in t])


def check_wasserstein_contraction(release: ReleaseRate, modulus, Gamma: float,
                                  grid=None):
    """r(u) - r(v) <= -Gamma beta(v - u) on all checked pairs u < v.

    Returns (passed, worst_margin, worst_pair); worst_margin <= 0 passes.
    """
    if Gamma <= 0:
        raise ValueError("Gamma must be positive")
    if grid is None:
        grid = np.concatenate([[0.0], np.geomspace(1e-3, 1e4, 29)])
    grid = np.asarray(grid, dtype=float)
    r = release.rate_vec(grid)
    worst, worst_pair = -math.inf, (0.0, 0.0)
    for i in range(len(grid) - 1):
        u, ru = grid[i], r[i]
        v = grid[i + 1:]
        margins = ru - r[i + 1:] + Gamma * np.asarray(modulus.value(v - u), dtype=float)
        k = int(np.argmax(margins))
        if margins[k] > worst:
            worst, worst_pair = float(margins[k]), (float(u), float(v[k]))
    tol = 1e-9 * (1.0 + abs(worst))
    return worst <= tol, worst, worst_pair


@dataclass(frozen=True)
class GapBound:
    """t -> B_kappa^{-1}(Gamma t): deterministic bound on the coupled gap."""

    modulus: object
    Gamma: float
    kappa: float

    def __post_init__(self):
        if self.kappa <= 0 or self.Gamma <= 0:
            raise ValueError("kappa and Gamma must be positive")

    def clock(self, t: float) -> float:
        """B_kappa(t) = int_t^kappa ds / beta(s) on (0, kappa]."""
        if not 0 < t <= self.kappa:
            raise ValueError("clock argument must lie in (0, kappa]")
        if isinstance(self.modulus, PowerModulus):
            d = self.modulus.d
            if d == 1.0:
                return math.log(self.kappa / t)
            return (t ** (1.0 - d) - self.kappa ** (1.0 - d)) / (d - 1.0)
        return integrate_interval(lambda s: 1.0 / float(self.modulus.value(s)),
                                  t, self.kappa).value

    def __call__(self, t: float) -> float:
        if t < 0:
            raise ValueError("time must be non-negative")
        s = self.Gamma * t
        if s == 0.0:
            return self.kappa
        if isinstance(self.modulus, PowerModulus):
            d = self.modulus.d
            if d == 1.0:
                return self.kappa * math.exp(-s)
            return (s * (d - 1.0) + self.kappa ** (1.0 - d)) ** (-1.0 / (d - 1.0))
        lo = self.kappa
        while self.clock(lo) < s:
            lo *= 0.5
            if lo < 1e-290:
                return 0.0
        return invert_monotone(lambda w: -self.clock(w), -s, (lo, self.kappa))


def wasserstein_rate(modulus, Gamma: float, kappa: float) -> GapBound:
    """Decreasing bound with value kappa at t = 0; closed form for power
    moduli, quadrature plus inversion otherwise."""
    return GapBound(modulus, Gamma, kappa)


# ---------------------------------------------------------------------------
# irreducibility (sufficient small-jump density bound)
# ---------------------------------------------------------------------------

def check_irreducibility_sufficient(levy: LevyInput):
    """Search for (alpha, theta) with density >= theta u^{-1-alpha} on (0,1).

    A pass supports irreducibility/aperiodicity of the model; a fail proves
    nothing (the bound is only sufficient).  Finite-activity inputs fail by
    construction and rely on the compound-Poisson route instead.
    """
    if levy.activity == "finite":
        return False, None, 0.0
    u = np.geomspace(1e-8, 1.0, 60)
    dens = np.asarray(levy.density(u), dtype=float)
    if not np.all(np.isfinite(dens)) or (dens <= 0).any():
        return False, None, 0.0
    best = (False, None, 0.0)
    for alpha in np.arange(0.1, 0.95, 0.1):
        prod = dens * u ** (1.0 + alpha)
        small = u <= 1e-3
        slope = fit_loglog(u[small], np.maximum(prod[small], 1e-300)).exponent
        if slope > 0.02:
            continue  # product vanishes toward 0: no positive theta works
        theta = float(np.min(prod))
        if theta > best[2]:
            best = (True, float(alpha), theta)
    return best
