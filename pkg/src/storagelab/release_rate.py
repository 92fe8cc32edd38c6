"""Release-rate families r(u) and their regularity diagnostics.

Families follow the convention r(0) = 0 (realised by an indicator factor),
keeping the content non-negative.  Each preset advertises closed forms for
the drain flow x' = drift - r(x) and for the drain-time primitive
int dv / r(v); the event-driven simulator leans on both.

Regularity is verified numerically: local Lipschitz constants by
finite-difference slopes on dyadic grids (including pairs against 0, which
is where constant and raw-power rates fail), and integrability of 1/r near
0 by the divergence-aware quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Divergent, NonFiniteEvaluation
from .numerics import integrate_interval, integrate_semiinfinite

__all__ = [
    "ReleaseRate", "Constant", "Affine", "Power", "PowerSmoothed", "Plateau",
    "Custom", "RateAsymptotics", "RegularityReport",
    "evaluate", "check_regularity", "flow_time_integral", "modulus_R",
]


@dataclass(frozen=True)
class RateAsymptotics:
    """kind 'bounded': r(u) -> limit; kind 'power': r(u) ~ coef * u^exponent."""

    kind: str
    exponent: float = 0.0
    coef: float = math.nan
    limit: float = math.nan

    def limsup(self) -> float:
        if self.kind == "bounded":
            return self.limit
        return math.inf if self.exponent > 0 else 0.0


class ReleaseRate:
    """Base class; subclasses are immutable and shareable."""

    def rate(self, u):
        raise NotImplementedError

    def asymptotics(self) -> RateAsymptotics:
        raise NotImplementedError

    def closed_flow(self, x0: float, dt: float, drift: float):
        """Closed-form flow of x' = drift - r(x), or None to use RK."""
        return None

    def drain_time(self, lo: float, hi: float) -> float:
        """int_lo^hi dv / r(v) for 0 < lo <= hi (hi may be inf)."""
        raise NotImplementedError

    def rate_vec(self, u):
        return self.rate(np.asarray(u, dtype=float))

    # analytic regularity flags; None means "decide numerically"
    _c1 = True
    _cbar1 = True


def _indicator(u):
    return np.where(np.asarray(u, dtype=float) > 0.0, 1.0, 0.0)


@dataclass(frozen=True)
class Constant(ReleaseRate):
    """r(u) = a for u > 0.  Lipschitz fails at 0; the compound-Poisson route
    applies instead (finite time to empty, integrable 1/r)."""

    a: float

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("release level must be positive")

    def rate(self, u):
        return self.a * _indicator(u)

    def asymptotics(self):
        return RateAsymptotics("bounded", limit=self.a)

    def closed_flow(self, x0, dt, drift):
        # empty state is stuck whenever inflow cannot outrun the service level
        slope = drift - self.a
        if x0 <= 0.0:
            return max(slope * dt, 0.0) if drift > self.a else 0.0
        return max(x0 + slope * dt, 0.0)

    def drain_time(self, lo, hi):
        if math.isinf(hi):
            return math.inf
        return (hi - lo) / self.a

    def modulus_decrease(self, u):
        # sup_v (r(v) - r(v+u)) = 0: candidates v = 0 gives -a, any v > 0 gives 0
        return 0.0


@dataclass(frozen=True)
class Affine(ReleaseRate):
    """r(u) = a + b u for u > 0.  With a = 0 this is the shot-noise drain."""

    a: float
    b: float

    def __post_init__(self):
        if self.a < 0 or self.b <= 0:
            raise ValueError("need a >= 0 and b > 0")

    def rate(self, u):
        u = np.asarray(u, dtype=float)
        return (self.a + self.b * u) * _indicator(u)

    def asymptotics(self):
        return RateAsymptotics("power", 1.0, self.b)

    def closed_flow(self, x0, dt, drift):
        if x0 <= 0.0 and drift <= self.a:
            return 0.0
        x_eq = (drift - self.a) / self.b
        x = x_eq + (x0 - x_eq) * math.exp(-self.b * dt)
        if x <= 0.0:
            return 0.0 if drift <= self.a else max(x, 0.0)
        return x

    def drain_time(self, lo, hi):
        if math.isinf(hi):
            return math.inf
        return math.log((self.a + self.b * hi) / (self.a + self.b * lo)) / self.b

    def modulus_decrease(self, u):
        return -self.b * u


@dataclass(frozen=True)
class Power(ReleaseRate):
    """r(u) = k u^beta for u > 0, beta != 0 (negative beta allowed)."""

    k: float
    beta: float

    def __post_init__(self):
        if self.k <= 0 or self.beta == 0:
            raise ValueError("need k > 0 and beta != 0")

    def rate(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            vals = self.k * np.maximum(u, 1e-300) ** self.beta
        return vals * _indicator(u)

    def asymptotics(self):
        return RateAsymptotics("power", self.beta, self.k)

    def closed_flow(self, x0, dt, drift):
        if drift != 0.0:
            return None
        if x0 <= 0.0:
            return 0.0
        if self.beta == 1.0:
            return x0 * math.exp(-self.k * dt)
        base = x0 ** (1.0 - self.beta) - self.k * (1.0 - self.beta) * dt
        if self.beta < 1.0:
            return 0.0 if base <= 0.0 else base ** (1.0 / (1.0 - self.beta))
        return base ** (1.0 / (1.0 - self.beta))

    def drain_time(self, lo, hi):
        if math.isinf(hi):
            if self.beta <= 1.0:
                return math.inf
            return lo ** (1.0 - self.beta) / (self.k * (self.beta - 1.0))
        if lo == 0.0 and self.beta >= 1.0:
            raise Divergent("time integral diverges at the empty state")
        if self.beta == 1.0:
            return math.log(hi / lo) / self.k
        return (hi ** (1.0 - self.beta) - lo ** (1.0 - self.beta)) / (
            self.k * (1.0 - self.beta))

    def modulus_decrease(self, u):
        if self.beta < 0.0:
            return math.inf  # r blows up at 0+, so decreases are unbounded
        if self.beta < 1.0:
            return 0.0
        return -self.k * u ** self.beta


@dataclass(frozen=True)
class PowerSmoothed(ReleaseRate):
    """Power rate with a linear ramp on [0, u_s] restoring local Lipschitz.

    For beta in (0, 1) the raw power has unbounded slope at 0; the ramp
    changes nothing at large u, which is all the asymptotic criteria see.
    """

    k: float
    beta: float
    u_s: float = 0.01

    def __post_init__(self):
        if self.k <= 0 or self.beta <= 0 or self.u_s <= 0:
            raise ValueError("need k > 0, beta > 0, u_s > 0")

    @property
    def _ramp_slope(self):
        return self.k * self.u_s ** (self.beta - 1.0)

    def rate(self, u):
        u = np.asarray(u, dtype=float)
        ramp = self._ramp_slope * u
        power = self.k * np.maximum(u, 1e-300) ** self.beta
        return np.where(u <= self.u_s, np.maximum(ramp, 0.0), power) * _indicator(u)

    def asymptotics(self):
        return RateAsymptotics("power", self.beta, self.k)

    def closed_flow(self, x0, dt, drift):
        if drift != 0.0:
            return None
        if x0 <= 0.0:
            return 0.0
        x, remaining = float(x0), float(dt)
        if x > self.u_s:
            upper = Power(self.k, self.beta)
            t_hit = upper.drain_time(self.u_s, x)
            if remaining <= t_hit:
                return upper.closed_flow(x, remaining, 0.0)
            x, remaining = self.u_s, remaining - t_hit
        # linear ramp region decays exponentially, never reaching 0
        return x * math.exp(-self._ramp_slope * remaining)

    def drain_time(self, lo, hi):
        if math.isinf(hi):
            if self.beta <= 1.0:
                return math.inf
            top = Power(self.k, self.beta)
            return self.drain_time(lo, max(lo, self.u_s)) + top.drain_time(
                max(lo, self.u_s), math.inf)
        if lo <= 0.0:
            raise Divergent("ramp time integral diverges at 0")
        parts = 0.0
        if lo < self.u_s:
            cap = min(hi, self.u_s)
            parts += math.log(cap / lo) / self._ramp_slope
            lo = cap
        if hi > lo:
            parts += Power(self.k, self.beta).drain_time(lo, hi)
        return parts

    def modulus_decrease(self, u):
        if self.beta <= 1.0:
            return 0.0
        return -self.k * u ** self.beta


@dataclass(frozen=True)
class Plateau(ReleaseRate):
    """Linear ramp up to u0, constant m beyond: realises drains that exactly
    match the input rate at high content."""

    m: float
    u0: float = 1.0

    def __post_init__(self):
        if self.m <= 0 or self.u0 <= 0:
            raise ValueError("need m > 0 and u0 > 0")

    def rate(self, u):
        u = np.asarray(u, dtype=float)
        return np.minimum(self.m * u / self.u0, self.m) * _indicator(u)

    def asymptotics(self):
        return RateAsymptotics("bounded", limit=self.m)

    def closed_flow(self, x0, dt, drift):
        if x0 <= 0.0 and drift <= 0.0:
            return 0.0
        slope = self.m / self.u0
        x, remaining = float(x0), float(dt)
        if x > self.u0:
            rate_above = self.m - drift
            if rate_above <= 0.0:
                return x - rate_above * remaining
            t_hit = (x - self.u0) / rate_above
            if remaining <= t_hit:
                return x - rate_above * remaining
            x, remaining = self.u0, remaining - t_hit
        x_eq = drift / slope
        if x_eq >= self.u0:
            return None  # drift pushes back above the plateau knee
        return x_eq + (x - x_eq) * math.exp(-slope * remaining)

    def drain_time(self, lo, hi):
        if math.isinf(hi):
            return math.inf
        if lo <= 0.0:
            raise Divergent("ramp time integral diverges at 0")
        slope = self.m / self.u0
        parts = 0.0
        if lo < self.u0:
            cap = min(hi, self.u0)
            parts += math.log(cap / lo) / slope
            lo = cap
        if hi > lo:
            parts += (hi - lo) / self.m
        return parts

    def modulus_decrease(self, u):
        return 0.0


@dataclass(frozen=True)
class Custom(ReleaseRate):
    """User callable with a declared asymptotic class."""

    fn: object
    declared: RateAsymptotics
    name: str = "custom"

    def rate(self, u):
        scalar = np.isscalar(u) or np.ndim(u) == 0
        arr = np.atleast_1d(np.asarray(u, dtype=float))
        vals = np.asarray([self.fn(x) for x in arr], dtype=float)
        if not np.isfinite(vals).all():
            raise NonFiniteEvaluation("custom release rate returned a non-finite value")
        out = vals * _indicator(arr)
        return float(out[0]) if scalar else out

    def asymptotics(self):
        return self.declared

    def drain_time(self, lo, hi):
        if math.isinf(hi):
            res = integrate_semiinfinite(lambda v: 1.0 / float(self.rate(v)), lower=lo)
            return res.value
        res = integrate_interval(lambda v: 1.0 / float(self.rate(v)), lo, hi,
                                 singular_left=(lo == 0.0))
        return res.value


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------

def evaluate(release: ReleaseRate, u: float) -> float:
    """r(u), exactly 0 at u = 0."""
    if u < 0:
        raise ValueError("content level must be non-negative")
    return float(release.rate(u))


def flow_time_integral(release: ReleaseRate, u_lo: float, u_hi: float) -> float:
    """int_{u_lo}^{u_hi} dv / r(v); math.inf when the upper end diverges,
    Divergent raised when u_lo = 0 is requested and 1/r is not integrable."""
    if u_lo < 0 or (u_hi < u_lo):
        raise ValueError("need 0 <= u_lo <= u_hi")
    return float(release.drain_time(u_lo, u_hi))


def modulus_R(release: ReleaseRate, u: float, probe_grid=None) -> float:
    """sup_{v >= 0} (r(v) - r(v+u)); exact for presets, a grid lower bound
    for Custom.  May be negative, and is 0 for any non-decreasing rate."""
    if u <= 0:
        raise ValueError("gap must be positive")
    exact = getattr(release, "modulus_decrease", None)
    if exact is not None:
        return float(exact(u))
    if probe_grid is None:
        probe_grid = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 121)])
    probe_grid = np.asarray(probe_grid, dtype=float)
    if probe_grid.size == 0:
        raise ValueError("probe grid must be non-empty")
    diffs = release.rate_vec(probe_grid) - release.rate_vec(probe_grid + u)
    return float(np.max(diffs))


@dataclass(frozen=True)
class RegularityReport:
    c1: bool
    c2: bool
    lipschitz_constants: dict
    cbar1: bool
    cbar2: bool
    applicable_regime: str  # "smooth" | "finite_activity" | "none"

    @property
    def applicable(self) -> bool:
        return self.applicable_regime != "none"


def _lipschitz_scan(release: ReleaseRate, rho: float):
    """(bounded?, max slope) from dyadic pair slopes on [0, rho].

    Pairs against 0 probe the behaviour at the empty state; geometric
    refinement decides whether slopes stabilise or keep growing.
    """
    ks = np.arange(2, 40)
    x = rho * 2.0 ** -ks.astype(float)
    r0 = float(release.rate(0.0))
    slopes_zero = np.abs(release.rate_vec(x) - r0) / x
    grid = np.linspace(0.0, rho, 513)[1:]
    vals = release.rate_vec(grid)
    slopes_grid = np.abs(np.diff(vals)) / np.diff(grid)
    finest = float(np.max(slopes_zero[-6:]))
    mid = float(np.max(slopes_zero[-18:-12]))
    growing = finest > 8.0 * max(mid, 1e-12)
    gamma = float(max(np.max(slopes_zero), np.max(slopes_grid)))
    return (not growing), gamma


def _inv_rate_integrable(release: ReleaseRate) -> bool:
    try:
        val = release.drain_time(0.0, 1.0)
        return math.isfinite(val)
    except Divergent:
        return False
    except (ZeroDivisionError, OverflowError):
        return False


def check_regularity(release: ReleaseRate, activity: str) -> RegularityReport:
    """Numeric verification of the smooth and finite-activity condition sets.

    The constant family fails the local Lipschitz bound at 0 and is routed
    to the finite-activity route, which only needs left continuity and an
    integrable 1/r near the origin.
    """
    if activity not in ("finite", "infinite"):
        raise ValueError("activity must be 'finite' or 'infinite'")
    c1 = bool(release._c1) and float(release.rate(0.0)) == 0.0 and bool(
        np.all(release.rate_vec(np.geomspace(1e-9, 1e6, 61)) > 0.0))
    lipschitz = {}
    c2 = True
    for rho in (1.0, 10.0, 100.0):
        ok, gamma = _lipschitz_scan(release, rho)
        lipschitz[rho] = gamma
        c2 = c2 and ok
    cbar1 = bool(release._cbar1)
    cbar2 = _inv_rate_integrable(release)
    if c1 and c2:
        regime = "smooth"
    elif activity == "finite" and cbar1 and cbar2:
        regime = "finite_activity"
    else:
        regime = "none"
    return RegularityReport(c1, c2, lipschitz, cbar1, cbar2, regime)
