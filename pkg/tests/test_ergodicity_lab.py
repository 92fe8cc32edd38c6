"""Estimator checks against independently derived stationary oracles.

Oracles, derived before the estimators existed:
  * constant drain a with Poisson(lam)/Exp(mu) input: level crossings give
    pi_bar(u) = rho e^{-(mu - lam/a) u} with rho = lam/(a mu)
    (a p(u) = lam e^{-mu u} (1-rho) + lam int e^{-mu(u-y)} dpi checks out);
  * linear drain r(u) = b u with the same input: the stationary Laplace
    transform exp(int_0^s psi(w)/(b w) dw) is (1+s/mu)^{-lam/b}, i.e. a
    Gamma(lam/b, mu) law, so pi_bar(2) = 3 e^{-2} for lam=2, b=mu=1.
"""

import math

import numpy as np
import pytest

from storagelab.errors import (
    MomentConditionFailed,
    NoiseFloorReached,
    NotStationaryRegime,
)
from storagelab.ergodicity_lab import (
    EnsembleEndpoint,
    LongRunTimeAverage,
    compare_rates,
    estimate_tail,
    estimate_tv_decay,
    estimate_wp_decay,
    select_tail_scale,
    w1_cdf_area,
    wasserstein_1d,
)
from storagelab.levy_input import (
    CompoundPoisson,
    Exponential,
    ParetoJumps,
    StableSub,
)
from storagelab.lyapunov import (
    PowerModulus,
    RateFunction,
    build_certificate,
    tv_lower_rate,
    wasserstein_rate,
)
from storagelab.release_rate import Affine, Constant, PowerSmoothed

SEED = 20260810
MM1 = (CompoundPoisson(1.0, Exponential(1.0)), Constant(2.0))
SHOTNOISE = (CompoundPoisson(2.0, Exponential(1.0)), Affine(0.0, 1.0))


def mm1_tail(u):
    return 0.5 * math.exp(-0.5 * u)


class TestEstimateTail:
    def test_mm1_longrun(self):
        grid = np.array([1.0, 2.0, 4.0])
        est = estimate_tail(*MM1, LongRunTimeAverage(), grid, 30_000,
                            seed=SEED, regime="PositiveRecurrent")
        for u, p, s in zip(est.levels, est.pi_bar_hat, est.stderr):
            assert abs(p - mm1_tail(u)) <= 3 * s

    def test_mm1_endpoint(self):
        cert = build_certificate(*MM1, RateFunction.linear(0.5))
        grid = np.array([1.0, 2.0, 4.0])
        est = estimate_tail(*MM1, EnsembleEndpoint(), grid, 20_000,
                            seed=SEED, certificate=cert, regime="PositiveRecurrent")
        for u, p, s in zip(est.levels, est.pi_bar_hat, est.stderr):
            assert abs(p - mm1_tail(u)) <= 3.5 * s

    def test_shotnoise_gamma(self):
        est = estimate_tail(*SHOTNOISE, LongRunTimeAverage(), np.array([2.0]),
                            30_000, seed=SEED, regime="PositiveRecurrent")
        assert abs(est.pi_bar_hat[0] - 3 * math.exp(-2.0)) <= 3 * est.stderr[0]

    def test_level_zero_bounded(self):
        est = estimate_tail(*MM1, LongRunTimeAverage(), np.array([1e-9, 1.0]),
                            10_000, seed=SEED, regime="PositiveRecurrent")
        # emptiness has positive probability, so P(X > 0) < 1
        assert est.pi_bar_hat[0] < 1.0
        assert est.pi_bar_hat[0] > est.pi_bar_hat[1]

    def test_monotone_after_isotonic(self):
        grid = np.geomspace(0.5, 8.0, 12)
        est = estimate_tail(*MM1, LongRunTimeAverage(), grid, 5_000,
                            seed=SEED, regime="PositiveRecurrent")
        assert (np.diff(est.pi_bar_hat) <= 1e-12).all()
        assert ((est.pi_bar_hat >= 0) & (est.pi_bar_hat <= 1)).all()

    def test_transient_hard_error(self):
        levy, rel = StableSub(0.3, 1.0), PowerSmoothed(1.0, 0.3)
        with pytest.raises(NotStationaryRegime):
            estimate_tail(levy, rel, LongRunTimeAverage(), np.array([1.0]), 2_000,
                          seed=SEED)

    def test_shift_consistency(self):
        grid = np.array([1.0, 2.0, 4.0])
        a = estimate_tail(*MM1, LongRunTimeAverage(), grid, 20_000, seed=11,
                          regime="PositiveRecurrent")
        b = estimate_tail(*MM1, LongRunTimeAverage(), grid, 20_000, seed=22,
                          regime="PositiveRecurrent")
        joint = np.sqrt(a.stderr ** 2 + b.stderr ** 2)
        assert (np.abs(a.pi_bar_hat - b.pi_bar_hat) <= 6 * joint).all()

    def test_budget_floor(self):
        with pytest.raises(ValueError):
            estimate_tail(*MM1, LongRunTimeAverage(), np.array([1.0]), 100,
                          seed=SEED, regime="PositiveRecurrent")

    def test_geweke_burnin_without_certificate(self):
        # no certificate, no explicit burn-in: the doubling heuristic picks
        # one and the estimate still hits the oracle
        grid = np.array([1.0, 2.0])
        est = estimate_tail(*MM1, LongRunTimeAverage(), grid, 20_000,
                            seed=SEED, regime="PositiveRecurrent")
        assert "burn=" in est.method
        for u, p, s in zip(est.levels, est.pi_bar_hat, est.stderr):
            assert abs(p - mm1_tail(u)) <= 4 * s


class TestTvDecay:
    def test_self_distance_below_floor(self):
        # two stationary samples: TV estimate within the noise floor
        from storagelab.simulator import endpoint_ensemble
        ref = endpoint_ensemble(*MM1, 0.0, 40.0, 20_000, SEED)
        curve_ref = endpoint_ensemble(*MM1, 0.0, 40.0, 20_000, SEED + 5)
        from storagelab.ergodicity_lab import _equal_mass_edges, _hist_probs
        edges = _equal_mass_edges(ref, 64)
        tv = 0.5 * np.abs(_hist_probs(curve_ref, edges) - _hist_probs(ref, edges)).sum()
        assert tv <= math.sqrt(64 / 20_000)

    def test_distant_start_near_one(self):
        # equal-mass histograms saturate at 1 - 1/bins, so the 0.99 check
        # needs at least 128 bins to be reachable at all
        t_grid = np.array([0.05, 0.1, 0.2, 0.4])
        try:
            curve = estimate_tv_decay(*MM1, 1000.0, t_grid, 4_000, seed=SEED,
                                      bins=128, regime="PositiveRecurrent")
        except NoiseFloorReached as exc:
            curve = exc.curve
        assert (curve.values >= 0.99).all()

    def test_power_sharp_exponent(self):
        levy, rel = CompoundPoisson(1.0, ParetoJumps(1.0)), PowerSmoothed(1.0, 0.5)
        t_grid = np.geomspace(2.0, 120.0, 16)
        curve = estimate_tv_decay(levy, rel, 0.0, t_grid, 20_000, seed=SEED,
                                  regime="PositiveRecurrent")
        assert -1.5 <= curve.fitted.exponent <= -0.5

    def test_sharp_constant_scenario_end_to_end(self):
        # bounded drain, Pareto(1.5) input: tail and TV decay are both
        # u (resp. t) to the power 1 - alpha = -1/2
        from storagelab.numerics import fit_loglog
        sc = (CompoundPoisson(0.5, ParetoJumps(1.5)), Constant(2.0))
        grid = np.geomspace(20.0, 1280.0, 13)
        est = estimate_tail(*sc, LongRunTimeAverage(spacing=30.0), grid,
                            100_000, seed=SEED, regime="PositiveRecurrent")
        tail_fit = fit_loglog(est.levels, est.pi_bar_hat)
        assert abs(tail_fit.exponent - (-0.5)) <= 0.3, tail_fit.exponent
        t_grid = np.geomspace(2.0, 200.0, 16)
        try:
            curve = estimate_tv_decay(*sc, 0.0, t_grid, 30_000, seed=SEED,
                                      regime="PositiveRecurrent")
        except NoiseFloorReached as exc:
            curve = exc.curve
        assert curve.fitted is not None
        assert abs(curve.fitted.exponent - (-0.5)) <= 0.3, curve.fitted.exponent

    def test_monotone_load(self):
        # larger start never decreases the early TV estimate
        t_grid = np.array([0.25, 0.5, 1.0, 2.0, 4.0, 8.0])
        vals = {}
        for x0 in (2.0, 20.0):
            try:
                c = estimate_tv_decay(*MM1, x0, t_grid, 8_000, seed=SEED,
                                      regime="PositiveRecurrent")
            except NoiseFloorReached as exc:
                c = exc.curve
            vals[x0] = c
        big, small = vals[20.0], vals[2.0]
        joint = np.sqrt(big.stderr ** 2 + small.stderr ** 2)
        assert (big.values[:3] >= small.values[:3] - 2 * joint[:3]).all()


class TestWasserstein1d:
    def test_identical(self):
        x = np.random.default_rng(1).exponential(1.0, 500)
        assert wasserstein_1d(x, x) == 0.0

    def test_point_masses(self):
        for p in (1.0, 2.0, 3.0):
            assert wasserstein_1d(np.zeros(10), np.full(10, 2.5), p) == pytest.approx(2.5)

    def test_cdf_area_identity(self):
        rng = np.random.default_rng(5)
        for na, nb in ((500, 500), (500, 701), (64, 1000)):
            a = rng.exponential(1.0, na)
            b = rng.gamma(2.0, 1.0, nb)
            assert wasserstein_1d(a, b, 1.0) == pytest.approx(
                w1_cdf_area(a, b), abs=1e-12)

    def test_translation(self):
        rng = np.random.default_rng(6)
        a = rng.exponential(1.0, 400)
        assert wasserstein_1d(a, a + 3.0, 1.0) == pytest.approx(3.0, rel=1e-12)


class TestWpDecay:
    def test_shotnoise_bounded_by_contraction(self):
        bound = wasserstein_rate(PowerModulus(1.0), 1.0, 5.0)
        t_grid = np.linspace(0.25, 6.0, 12)
        curve = estimate_wp_decay(*SHOTNOISE, 5.0, None, 1.0, t_grid, 10_000,
                                  seed=SEED, contraction=bound,
                                  regime="PositiveRecurrent")
        assert curve.reference_curve is not None
        assert (curve.values <= curve.reference_curve + 3 * curve.stderr).all()

    def test_moment_gate(self):
        levy = CompoundPoisson(1.0, ParetoJumps(1.5))
        with pytest.raises(MomentConditionFailed):
            estimate_wp_decay(levy, PowerSmoothed(1.0, 0.5), 1.0, None, 2.0,
                              np.array([1.0, 2.0]), 2_000, seed=SEED,
                              regime="PositiveRecurrent")

    def test_sampled_initial_law(self):
        t_grid = np.linspace(0.5, 4.0, 8)
        mu0 = lambda gen, m: gen.uniform(0.0, 10.0, m)
        curve = estimate_wp_decay(*SHOTNOISE, 0.0, mu0, 1.0, t_grid, 5_000,
                                  seed=SEED, regime="PositiveRecurrent")
        assert (np.diff(curve.values) <= 2 * (curve.stderr[1:] + curve.stderr[:-1])).all()

    def test_second_order(self):
        # p = 2 needs the second jump moment, which Exp(1) jumps provide
        t_grid = np.linspace(0.5, 4.0, 8)
        curve = estimate_wp_decay(*SHOTNOISE, 5.0, None, 2.0, t_grid, 5_000,
                                  seed=SEED, regime="PositiveRecurrent")
        assert curve.metric == "W2"
        assert (curve.values >= 0).all()
        assert curve.values[-1] < curve.values[0]


class TestCompareRates:
    def test_sharp_power_pass(self):
        levy, rel = CompoundPoisson(1.0, ParetoJumps(1.0)), PowerSmoothed(1.0, 0.5)
        cert = build_certificate(levy, rel, RateFunction.power(0.45))
        lower = tv_lower_rate(levy, rel, eps=0.1, a_h=0.9, x=1.0)
        t_grid = np.geomspace(2.0, 120.0, 16)
        curve = estimate_tv_decay(levy, rel, 0.0, t_grid, 20_000, seed=SEED,
                                  certificate=cert, regime="PositiveRecurrent")
        rep = compare_rates(curve, certificate=cert, lower=lower, eps=0.1)
        assert rep.verdict == "PASS"
        assert rep.predicted_lower <= rep.fitted <= rep.predicted_upper + rep.tol

    def test_geometric_vs_polynomial_diagnostic(self):
        levy, rel = MM1
        cert = build_certificate(levy, rel, RateFunction.linear(0.5))
        t_grid = np.linspace(1.0, 14.0, 14)
        try:
            curve = estimate_tv_decay(levy, rel, 30.0, t_grid, 8_000, seed=SEED,
                                      certificate=cert, regime="PositiveRecurrent")
        except NoiseFloorReached as exc:
            curve = exc.curve
        if curve.fitted is not None:
            rep = compare_rates(curve, certificate=cert)
            assert rep.predicted_upper == -math.inf
            assert rep.verdict == "FAIL"  # diagnostic mismatch path
            assert "geometric" in rep.note


class TestTailScaleSelection:
    def test_exact_power_law(self):
        u = np.geomspace(1.0, 100.0, 15)
        kind, fit = select_tail_scale(u, 2.0 * u ** -1.5)
        assert kind == "power"
        assert fit.exponent == pytest.approx(-1.5, abs=1e-9)

    def test_exact_exponential(self):
        u = np.linspace(1.0, 10.0, 15)
        kind, fit = select_tail_scale(u, 0.7 * np.exp(-0.8 * u))
        assert kind == "exponential"
        assert fit.exponent == pytest.approx(-0.8, abs=1e-9)

    def test_gamma_oracle_slope(self):
        # the estimator picks the exponential scale for the Gamma(2, 1) law;
        # the OLS slope of ln((1+u)e^{-u}) on [2, 8] is analytically -0.826,
        # so the +-0.15 window around -1 declared for this check is strictly
        # narrower than the ln(1+u) curvature allows (slope gap 0.174).  The
        # assertion below is kept at the declared width and is expected to
        # fail until that width is revisited.
        est = estimate_tail(*SHOTNOISE, LongRunTimeAverage(),
                            np.linspace(2.0, 8.0, 13), 100_000, seed=SEED,
                            regime="PositiveRecurrent")
        kind, fit = select_tail_scale(est.levels, est.pi_bar_hat)
        assert kind == "exponential"
        assert abs(fit.exponent - (-1.0)) <= 0.15
