"""Input subordinators: Levy measures, tails, moments, and jump sampling.

Each family knows its tail function nu_bar(u) = nu((u, inf)), Levy density,
first moment, Laplace exponent, and how to sample its jumps.  Infinite
activity families are simulated by keeping jumps above a truncation level
``eps`` exactly and replacing the discarded small jumps by their mean drift
int_0^eps u nu(du); the induced bias is controlled by the discarded second
moment int_0^eps u^2 nu(du), which every family reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import Divergent, OutOfGrid
from .numerics import integrate_semiinfinite
from .rng import substream

__all__ = [
    "Exponential", "ParetoJumps", "DeterministicJumps",
    "CompoundPoisson", "GammaSub", "StableSub", "TemperedStableSub",
    "TabulatedTail", "JumpStream", "TailAsymptotics",
    "tail", "first_moment", "sample_increment", "laplace_check",
    "sample_jumps",
]


@dataclass(frozen=True)
class TailAsymptotics:
    """Declared behaviour of nu_bar at infinity, for symbolic shortcuts.

    kind 'power': nu_bar(u) ~ coef * u^{-index}; kind 'exp': nu_bar decays
    at least as fast as exp(-index * u); kind 'other': no shortcut.
    """

    kind: str
    index: float = math.nan
    coef: float = math.nan


# ---------------------------------------------------------------------------
# jump size laws for compound Poisson inputs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Exponential:
    mu: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("exponential rate must be positive")

    def mean(self):
        return 1.0 / self.mu

    def sf(self, u):
        return np.exp(-self.mu * np.asarray(u, dtype=float))

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        return self.mu * np.exp(-self.mu * u)

    def sample(self, gen, n):
        return gen.exponential(1.0 / self.mu, n)

    def asymptotics(self):
        return TailAsymptotics("exp", self.mu)


@dataclass(frozen=True)
class ParetoJumps:
    """Pareto(alpha) sizes on [xm, inf): P(J > u) = (u/xm)^{-alpha}."""

    alpha: float
    xm: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0 or self.xm <= 0:
            raise ValueError("alpha and xm must be positive")

    def mean(self):
        if self.alpha <= 1:
            return math.inf
        return self.xm * self.alpha / (self.alpha - 1.0)

    def sf(self, u):
        u = np.asarray(u, dtype=float)
        return np.minimum((np.maximum(u, 1e-300) / self.xm) ** -self.alpha, 1.0)

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        out = self.alpha / self.xm * (u / self.xm) ** (-self.alpha - 1.0)
        return np.where(u >= self.xm, out, 0.0)

    def sample(self, gen, n):
        return self.xm * gen.random(n) ** (-1.0 / self.alpha)

    def asymptotics(self):
        return TailAsymptotics("power", self.alpha, self.xm ** self.alpha)


@dataclass(frozen=True)
class DeterministicJumps:
    size: float

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError("jump size must be positive")

    def mean(self):
        return self.size

    def sf(self, u):
        return np.where(np.asarray(u, dtype=float) < self.size, 1.0, 0.0)

    def pdf(self, u):
        raise NotImplementedError("point mass has no density")

    def sample(self, gen, n):
        return np.full(n, self.size)

    def asymptotics(self):
        return TailAsymptotics("exp", math.inf)


# ---------------------------------------------------------------------------
# subordinator families
# ---------------------------------------------------------------------------

class LevyInput:
    """Common interface; concrete families are frozen dataclasses below."""

    activity: str  # "finite" | "infinite"

    def tail(self, u):
        raise NotImplementedError

    def density(self, u):
        raise NotImplementedError

    def first_moment(self) -> float:
        raise NotImplementedError

    def log_tail(self, u):
        """log nu_bar(u), stable far into the tail (exact where closed forms
        exist, -inf once the tail is genuinely below the floating range)."""
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(self.tail(u), dtype=float))

    def laplace_exponent(self, lam: float) -> float:
        """psi(lam) = int (e^{-lam u} - 1) nu(du) <= 0, via the tail identity
        psi(lam) = -lam * int_0^inf e^{-lam u} nu_bar(u) du."""
        if lam == 0.0:
            return 0.0
        res = integrate_semiinfinite(lambda u: math.exp(-lam * u) * float(self.tail(u)))
        return -lam * res.value

    def asymptotics(self) -> TailAsymptotics:
        return TailAsymptotics("other")

    # --- truncation bookkeeping ------------------------------------------
    def restricted_rate(self, eps: float) -> float:
        """Intensity of retained jumps (arrival rate of the thinning target)."""
        raise NotImplementedError

    def proposal_rate(self, eps: float) -> float:
        """Arrival rate actually simulated; >= restricted_rate for thinned
        families, equal otherwise."""
        return self.restricted_rate(eps)

    def sample_sizes(self, gen, n: int, eps: float):
        """Sizes for n proposal arrivals; thinned-away proposals come back
        as exact zeros so arrival pairing stays deterministic."""
        raise NotImplementedError

    def compensator_drift(self, eps: float) -> float:
        """Mean drift of discarded small jumps, int_0^eps u nu(du)."""
        return 0.0

    def small_jump_msq(self, eps: float) -> float:
        """Discarded second moment int_0^eps u^2 nu(du) (bias control)."""
        return 0.0


@dataclass(frozen=True)
class CompoundPoisson(LevyInput):
    """Finite activity: jumps arrive at ``rate`` with i.i.d. sizes.

    rate == 0 gives the degenerate zero-input model (useful for pure-drain
    couplings); every tail/moment is then identically zero.
    """

    rate: float
    jump: Exponential | ParetoJumps | DeterministicJumps
    activity: str = field(default="finite", init=False)

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("rate must be non-negative")

    def tail(self, u):
        return self.rate * self.jump.sf(u)

    def log_tail(self, u):
        u = np.asarray(u, dtype=float)
        if self.rate == 0.0:
            return np.full_like(u, -np.inf)
        if isinstance(self.jump, Exponential):
            return math.log(self.rate) - self.jump.mu * u
        if isinstance(self.jump, ParetoJumps):
            lo = np.log(np.maximum(u, 1e-300) / self.jump.xm)
            return math.log(self.rate) - self.jump.alpha * np.maximum(lo, 0.0)
        return super().log_tail(u)

    def density(self, u):
        return self.rate * self.jump.pdf(u)

    def first_moment(self):
        return self.rate * self.jump.mean()

    def laplace_exponent(self, lam):
        if lam == 0.0 or self.rate == 0.0:
            return 0.0
        if isinstance(self.jump, Exponential):
            return -self.rate * lam / (self.jump.mu + lam)
        if isinstance(self.jump, DeterministicJumps):
            return self.rate * (math.exp(-lam * self.jump.size) - 1.0)
        return super().laplace_exponent(lam)

    def asymptotics(self):
        a = self.jump.asymptotics()
        if a.kind == "power":
            return TailAsymptotics("power", a.index, self.rate * a.coef)
        return a

    def restricted_rate(self, eps):
        return self.rate

    def sample_sizes(self, gen, n, eps):
        return self.jump.sample(gen, n)


@dataclass(frozen=True)
class GammaSub(LevyInput):
    """Gamma subordinator: nu(du) = shape * exp(-rate_ * u) / u du."""

    shape: float
    rate_: float
    activity: str = field(default="infinite", init=False)

    def __post_init__(self):
        if self.shape <= 0 or self.rate_ <= 0:
            raise ValueError("shape and rate must be positive")

    def tail(self, u):
        u = np.asarray(u, dtype=float)
        return self.shape * special.exp1(self.rate_ * u)

    def log_tail(self, u):
        u = np.asarray(u, dtype=float)
        x = self.rate_ * u
        # exp1(x) ~ e^{-x}/x (1 - 1/x) for large x, beyond float range of exp1
        asym = -x - np.log(x) + np.log1p(-1.0 / np.maximum(x, 2.0))
        with np.errstate(divide="ignore"):
            direct = np.log(self.shape * special.exp1(np.minimum(x, 600.0)))
        return np.where(x > 600.0, math.log(self.shape) + asym, direct)

    def density(self, u):
        u = np.asarray(u, dtype=float)
        return self.shape * np.exp(-self.rate_ * u) / u

    def first_moment(self):
        return self.shape / self.rate_

    def laplace_exponent(self, lam):
        return -self.shape * math.log1p(lam / self.rate_)

    def asymptotics(self):
        return TailAsymptotics("exp", self.rate_)

    def restricted_rate(self, eps):
        return float(self.shape * special.exp1(self.rate_ * eps))

    def sample_sizes(self, gen, n, eps):
        q, logu = _gamma_quantile_table(self.shape, self.rate_, eps)
        return np.exp(np.interp(gen.random(n), q, logu))

    def compensator_drift(self, eps):
        return self.shape * (1.0 - math.exp(-self.rate_ * eps)) / self.rate_

    def small_jump_msq(self, eps):
        t = self.rate_ * eps
        return self.shape * (1.0 - math.exp(-t) * (1.0 + t)) / self.rate_ ** 2


@lru_cache(maxsize=64)
def _gamma_quantile_table(shape: float, rate: float, eps: float, n: int = 4096):
    """Inverse of the normalised restricted tail E1(rate*u)/E1(rate*eps)."""
    e_eps = special.exp1(rate * eps)
    # march out until the conditional tail is numerically exhausted
    hi = eps
    while special.exp1(rate * hi) / e_eps > 1e-14:
        hi *= 2.0
    u = np.geomspace(eps, hi, n)
    q = 1.0 - special.exp1(rate * u) / e_eps
    return q, np.log(u)


@dataclass(frozen=True)
class StableSub(LevyInput):
    """Pure power tail nu_bar(u) = scale * u^{-alpha}, alpha in (0, 1).

    The normalisation is pinned directly by the tail: regime criteria only
    see nu_bar and the first moment, so (alpha, scale) is the whole story.
    """

    alpha: float
    scale: float = 1.0
    activity: str = field(default="infinite", init=False)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("stable index must lie in (0, 1)")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def tail(self, u):
        u = np.asarray(u, dtype=float)
        return self.scale * np.maximum(u, 1e-300) ** -self.alpha

    def log_tail(self, u):
        u = np.asarray(u, dtype=float)
        return math.log(self.scale) - self.alpha * np.log(np.maximum(u, 1e-300))

    def density(self, u):
        u = np.asarray(u, dtype=float)
        return self.scale * self.alpha * u ** (-1.0 - self.alpha)

    def first_moment(self):
        return math.inf

    def laplace_exponent(self, lam):
        if lam == 0.0:
            return 0.0
        return -self.scale * special.gamma(1.0 - self.alpha) * lam ** self.alpha

    def asymptotics(self):
        return TailAsymptotics("power", self.alpha, self.scale)

    def restricted_rate(self, eps):
        return self.scale * eps ** -self.alpha

    def sample_sizes(self, gen, n, eps):
        # restricted law is exactly Pareto(alpha) above eps
        return eps * gen.random(n) ** (-1.0 / self.alpha)

    def compensator_drift(self, eps):
        return self.scale * self.alpha * eps ** (1.0 - self.alpha) / (1.0 - self.alpha)

    def small_jump_msq(self, eps):
        return self.scale * self.alpha * eps ** (2.0 - self.alpha) / (2.0 - self.alpha)


@dataclass(frozen=True)
class TemperedStableSub(LevyInput):
    """nu(du) = scale * alpha * u^{-1-alpha} e^{-tempering u} du."""

    alpha: float
    scale: float = 1.0
    tempering: float = 1.0
    activity: str = field(default="infinite", init=False)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("index must lie in (0, 1)")
        if self.scale <= 0 or self.tempering <= 0:
            raise ValueError("scale and tempering must be positive")

    def tail(self, u):
        u = np.asarray(u, dtype=float)
        x = self.tempering * np.maximum(u, 1e-300)
        upper = special.gammaincc(1.0 - self.alpha, x) * special.gamma(1.0 - self.alpha)
        return self.scale * self.tempering ** self.alpha * (
            x ** -self.alpha * np.exp(-x) - upper)

    def log_tail(self, u):
        u = np.asarray(u, dtype=float)
        x = self.tempering * u
        # Gamma(-alpha, x) ~ x^{-alpha-1} e^{-x} for large x
        asym = (math.log(self.scale * self.alpha / self.tempering)
                - (1.0 + self.alpha) * np.log(np.maximum(u, 1e-300)) - x)
        with np.errstate(divide="ignore"):
            direct = np.log(np.maximum(self.tail(np.minimum(u, 600.0 / self.tempering)),
                                       1e-300))
        return np.where(x > 600.0, asym, direct)

    def density(self, u):
        u = np.asarray(u, dtype=float)
        return (self.scale * self.alpha * u ** (-1.0 - self.alpha)
                * np.exp(-self.tempering * u))

    def first_moment(self):
        return (self.scale * self.alpha * special.gamma(1.0 - self.alpha)
                * self.tempering ** (self.alpha - 1.0))

    def laplace_exponent(self, lam):
        if lam == 0.0:
            return 0.0
        c = self.tempering
        return -self.scale * special.gamma(1.0 - self.alpha) * (
            (lam + c) ** self.alpha - c ** self.alpha)

    def asymptotics(self):
        return TailAsymptotics("exp", self.tempering)

    def restricted_rate(self, eps):
        return float(self.tail(eps))

    def proposal_rate(self, eps):
        # untempered Pareto proposals, thinned by exp(-tempering * J)
        return self.scale * eps ** -self.alpha

    def sample_sizes(self, gen, n, eps):
        j = eps * gen.random(n) ** (-1.0 / self.alpha)
        keep = gen.random(n) < np.exp(-self.tempering * j)
        return np.where(keep, j, 0.0)

    def compensator_drift(self, eps):
        a, c = self.alpha, self.tempering
        lower = special.gammainc(1.0 - a, c * eps) * special.gamma(1.0 - a)
        return self.scale * a * c ** (a - 1.0) * lower

    def small_jump_msq(self, eps):
        a, c = self.alpha, self.tempering
        lower = special.gammainc(2.0 - a, c * eps) * special.gamma(2.0 - a)
        return self.scale * a * c ** (a - 2.0) * lower


@dataclass(frozen=True)
class TabulatedTail(LevyInput):
    """Tail given on a knot grid, log-log interpolated, finite activity.

    All mass sits at or above the first knot; queries beyond the last knot
    use the declared parametric extension ('power', alpha) or ('exp', rate),
    matched continuously at the last knot.  Without an extension such
    queries raise OutOfGrid.
    """

    knots_u: tuple
    knots_tail: tuple
    extension: tuple | None = None
    activity: str = field(default="finite", init=False)

    def __post_init__(self):
        u = np.asarray(self.knots_u, dtype=float)
        t = np.asarray(self.knots_tail, dtype=float)
        if u.ndim != 1 or u.size < 2 or t.shape != u.shape:
            raise ValueError("need matching 1-d knot arrays with >= 2 points")
        if (np.diff(u) <= 0).any() or (u <= 0).any():
            raise ValueError("knot levels must be positive and increasing")
        if (t <= 0).any() or (np.diff(t) > 0).any():
            raise ValueError("tail values must be positive and non-increasing")
        if self.extension is not None:
            kind, par = self.extension
            if kind not in ("power", "exp") or par <= 0:
                raise ValueError("extension must be ('power', a>0) or ('exp', c>0)")
        object.__setattr__(self, "knots_u", tuple(float(x) for x in u))
        object.__setattr__(self, "knots_tail", tuple(float(x) for x in t))

    def _u(self):
        return np.asarray(self.knots_u)

    def _t(self):
        return np.asarray(self.knots_tail)

    def tail(self, u):
        scalar = np.isscalar(u)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        ku, kt = self._u(), self._t()
        out = np.exp(np.interp(np.log(np.maximum(u, ku[0])), np.log(ku), np.log(kt)))
        out[u <= ku[0]] = kt[0]
        beyond = u > ku[-1]
        if beyond.any():
            if self.extension is None:
                raise OutOfGrid(f"query beyond last knot {ku[-1]} without tail extension")
            kind, par = self.extension
            if kind == "power":
                out[beyond] = kt[-1] * (u[beyond] / ku[-1]) ** -par
            else:
                out[beyond] = kt[-1] * np.exp(-par * (u[beyond] - ku[-1]))
        return float(out[0]) if scalar else out

    def density(self, u):
        h = 1e-5 * max(float(np.min(np.abs(np.atleast_1d(u)))), 1e-3)
        return (self.tail(np.asarray(u) - h) - self.tail(np.asarray(u) + h)) / (2 * h)

    def first_moment(self):
        try:
            res = integrate_semiinfinite(lambda u: float(self.tail(u)))
        except Divergent:
            return math.inf
        return res.value

    def asymptotics(self):
        if self.extension is None:
            return TailAsymptotics("other")
        kind, par = self.extension
        ku, kt = self.knots_u[-1], self.knots_tail[-1]
        if kind == "power":
            return TailAsymptotics("power", par, kt * ku ** par)
        return TailAsymptotics("exp", par)

    def restricted_rate(self, eps):
        return self.knots_tail[0]

    def sample_sizes(self, gen, n, eps):
        # inverse transform through the normalised tail
        total = self.knots_tail[0]
        q = gen.random(n)

        def cond_tail(u):
            return self.tail(u) / total

        lo, hi = self.knots_u[0], self.knots_u[-1]
        out = np.empty(n)
        for i, qi in enumerate(q):
            if qi >= 1.0 - cond_tail(hi) or self.extension is None:
                target = 1.0 - qi
                if self.extension is not None and target < cond_tail(hi):
                    kind, par = self.extension
                    frac = target * total / self.knots_tail[-1]
                    if kind == "power":
                        out[i] = hi * frac ** (-1.0 / par)
                    else:
                        out[i] = hi - math.log(frac) / par
                    continue
            from .numerics import invert_monotone
            out[i] = invert_monotone(lambda u: 1.0 - cond_tail(u), qi, (lo, hi))
        return out


# ---------------------------------------------------------------------------
# jump streams and sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JumpStream:
    """Reproducibility token: (seed, path tags) keys every random draw.

    Identical seeds reproduce identical jump sequences bit for bit, and
    sequences are nested in the horizon (longer horizons extend, never
    reshuffle).
    """

    seed: int
    truncation_eps: float = 1e-4
    tags: tuple = ()

    def __post_init__(self):
        if self.truncation_eps <= 0:
            raise ValueError("truncation level must be positive")

    def derive(self, *tags) -> "JumpStream":
        return JumpStream(self.seed, self.truncation_eps, self.tags + tags)

    def generator(self, purpose: str) -> np.random.Generator:
        return substream(self.seed, *self.tags, purpose)


def sample_jumps(levy: LevyInput, stream: JumpStream, horizon: float):
    """Jump times and sizes on [0, horizon]; zero-size entries are dropped.

    Arrival times come from exponential inter-arrival blocks, sizes from a
    lock-stepped second stream, so the k-th arrival is the same random pair
    for every horizon (nested consistency).
    """
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    eps = stream.truncation_eps
    lam = levy.proposal_rate(eps)
    if lam <= 0.0 or horizon == 0.0:
        return np.empty(0), np.empty(0)
    gen_t = stream.generator("arrivals")
    gen_s = stream.generator("sizes")
    block = 256
    times_parts, size_parts = [], []
    t_last = 0.0
    while t_last <= horizon:
        gaps = gen_t.exponential(1.0 / lam, block)
        t = t_last + np.cumsum(gaps)
        times_parts.append(t)
        size_parts.append(levy.sample_sizes(gen_s, block, eps))
        t_last = t[-1]
    times = np.concatenate(times_parts)
    sizes = np.concatenate(size_parts)
    keep = (times <= horizon) & (sizes > 0.0)
    return times[keep], sizes[keep]


def tail(levy: LevyInput, u: float):
    """nu_bar(u) = nu((u, inf)) for u > 0."""
    if np.any(np.asarray(u) <= 0):
        raise ValueError("tail is defined for u > 0")
    return levy.tail(u)


def first_moment(levy: LevyInput) -> float:
    """m_nu = int u nu(du) = int_0^inf nu_bar(u) du, possibly +inf."""
    return levy.first_moment()


def sample_increment(levy: LevyInput, stream: JumpStream, t: float):
    """One draw of (A(t), [(time, size), ...]) under the truncation scheme.

    A(t) sums the retained jumps plus compensator_drift * t; the drift is
    folded in here so callers treating it as continuous inflow can subtract
    it back via levy.compensator_drift(stream.truncation_eps).
    """
    times, sizes = sample_jumps(levy, stream, t)
    drift = levy.compensator_drift(stream.truncation_eps) if levy.activity == "infinite" else 0.0
    a_t = float(sizes.sum() + drift * t)
    return a_t, list(zip(times.tolist(), sizes.tolist()))


def laplace_check(levy: LevyInput, t: float, lambdas, n_paths: int,
                  stream: JumpStream):
    """Empirical vs analytic Laplace transform of A(t), with z-scores.

    Vectorised across paths under a single purpose-tagged stream; the whole
    batch is reproducible from the seed.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if n_paths < 100:
        raise ValueError("need at least 100 paths")
    eps = stream.truncation_eps
    lam_rate = levy.proposal_rate(eps)
    gen = stream.generator("laplace")
    counts = gen.poisson(lam_rate * t, n_paths)
    total = int(counts.sum())
    sizes = levy.sample_sizes(gen, total, eps) if total else np.empty(0)
    bounds = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.int64)
    sums = np.add.reduceat(sizes, bounds) if total else np.zeros(n_paths)
    sums[counts == 0] = 0.0
    drift = levy.compensator_drift(eps) if levy.activity == "infinite" else 0.0
    a = sums + drift * t
    out = []
    for lam in np.atleast_1d(lambdas):
        lam = float(lam)
        vals = np.exp(-lam * a)
        emp = float(vals.mean())
        analytic = math.exp(t * levy.laplace_exponent(lam))
        se = float(vals.std(ddof=1) / math.sqrt(n_paths))
        z = 0.0 if se == 0 else (emp - analytic) / se
        out.append({"lam": lam, "empirical": emp, "analytic": analytic,
                    "se": se, "z": z})
    return out
