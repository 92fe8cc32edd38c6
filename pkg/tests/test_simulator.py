"""Path simulation: exactness, coupling, ensembles, vector engines."""

import math

import numpy as np
import pytest

from storagelab.levy_input import (
    CompoundPoisson,
    Exponential,
    GammaSub,
    JumpStream,
    ParetoJumps,
)
from storagelab.lyapunov import PowerModulus, wasserstein_rate
from storagelab.release_rate import Affine, Constant, Plateau, Power, PowerSmoothed
from storagelab.simulator import (
    Endpoint,
    FullEvents,
    Grid,
    PathConfig,
    endpoint_ensemble,
    flow_vec,
    grid_ensemble,
    signed_drain_vec,
    simulate_coupled,
    simulate_ensemble,
    simulate_path,
)

SEED = 20260810
NO_JUMPS = CompoundPoisson(0.0, Exponential(1.0))
CPP = CompoundPoisson(1.0, Exponential(1.0))


class TestSimulatePath:
    def test_pure_drain_matches_flow(self):
        cfg = PathConfig(3.0, 2.0, Endpoint(), seed=SEED)
        rec = simulate_path(NO_JUMPS, Constant(2.0), cfg)
        assert rec.values[-1] == 0.0
        assert rec.n_jumps == 0

    def test_values_non_negative(self):
        cfg = PathConfig(0.0, 50.0, Grid(tuple(np.linspace(0, 50, 101))), seed=SEED)
        rec = simulate_path(CPP, PowerSmoothed(1.0, 0.5), cfg)
        assert (rec.values >= 0.0).all()

    def test_events_mode_decreasing_between_jumps(self):
        cfg = PathConfig(5.0, 10.0, FullEvents(), seed=SEED)
        rec = simulate_path(CPP, Affine(0.0, 1.0), cfg)
        assert not rec.compensator_used
        assert rec.jump_sizes is not None
        # value after each jump = flow from previous value + jump
        for i in range(1, len(rec.times)):
            dt = rec.times[i] - rec.times[i - 1]
            drained = rec.values[i - 1] * math.exp(-dt)
            assert rec.values[i] == pytest.approx(drained + rec.jump_sizes[i], rel=1e-9)

    def test_shot_noise_mean(self):
        # E[X(t)] = (lam/mu)(1 - e^{-t}) for r(u) = u from x0 = 0
        cfg = PathConfig(0.0, 1.0, Endpoint(), seed=SEED)
        vals = simulate_ensemble(CPP, Affine(0.0, 1.0), cfg, 4000)
        target = 1.0 - math.exp(-1.0)
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        assert abs(vals.mean() - target) <= 3 * se

    def test_infinite_activity_compensator(self):
        cfg = PathConfig(0.0, 1.0, Endpoint(), seed=SEED, truncation_eps=1e-4)
        rec = simulate_path(GammaSub(1.0, 1.0), Affine(0.0, 1.0), cfg)
        assert rec.compensator_used
        assert rec.values[-1] >= 0.0
        # recorded mean-square truncation bias: int_0^eps u^2 nu(du) * horizon
        assert rec.bias_bound == pytest.approx(
            GammaSub(1.0, 1.0).small_jump_msq(1e-4) * 1.0)
        assert 0.0 < rec.bias_bound < 1e-7

    def test_finite_activity_no_bias(self):
        cfg = PathConfig(0.0, 1.0, Endpoint(), seed=SEED)
        rec = simulate_path(CPP, Affine(0.0, 1.0), cfg)
        assert not rec.compensator_used
        assert rec.bias_bound == 0.0

    def test_grid_requires_sorted(self):
        with pytest.raises(ValueError):
            PathConfig(0.0, 1.0, Grid((0.5, 0.2)))
        with pytest.raises(ValueError):
            PathConfig(0.0, 1.0, Grid((0.5, 2.0)))

    def test_grid_endpoint_consistent(self):
        # the last grid value on a stream equals the endpoint on that stream
        stream = JumpStream(SEED, 1e-4).derive(3)
        cfg_g = PathConfig(2.0, 8.0, Grid((1.0, 4.0, 8.0)), seed=SEED)
        cfg_e = PathConfig(2.0, 8.0, Endpoint(), seed=SEED)
        g = simulate_path(CPP, Affine(0.0, 1.0), cfg_g, stream=stream)
        e = simulate_path(CPP, Affine(0.0, 1.0), cfg_e, stream=stream)
        assert g.values[-1] == e.values[-1]

    def test_transient_model_escapes(self):
        # alpha + beta < 1: paths drift to infinity; medians must ratchet up
        levy = CompoundPoisson(1.0, ParetoJumps(0.3))
        rel = PowerSmoothed(1.0, 0.3)
        grid = Grid((5.0, 20.0, 50.0))
        cfg = PathConfig(0.0, 50.0, grid, seed=SEED)
        mat = simulate_ensemble(levy, rel, cfg, 200)
        med = np.median(mat, axis=0)
        assert med[0] < med[1] < med[2]
        assert med[2] > 10.0 * max(med[0], 1.0)

    def test_infinite_activity_drift_rk_path(self):
        # stable input against a power drain: the compensator enters the
        # inter-jump ODE, which only the step-halving integrator covers
        from storagelab.levy_input import StableSub
        levy, rel = StableSub(0.3, 1.0), PowerSmoothed(1.0, 0.3)
        grid = Grid((2.0, 8.0, 20.0))
        cfg = PathConfig(0.0, 20.0, grid, seed=SEED, truncation_eps=1e-2)
        mat = simulate_ensemble(levy, rel, cfg, 20)
        assert (mat >= 0.0).all()
        med = np.median(mat, axis=0)
        assert med[-1] > med[0]


class TestCoupled:
    def test_linear_gap_exact(self):
        grid = Grid((0.5, 1.0, 2.0, 4.0))
        cfg = PathConfig(5.0, 4.0, grid, seed=SEED)
        _, _, dist = simulate_coupled(CPP, Affine(0.0, 1.0), 5.0, 0.0, cfg)
        for t, g in zip(dist.times, dist.gaps):
            assert g == pytest.approx(5.0 * math.exp(-t), abs=1e-9)

    def test_identical_starts(self):
        cfg = PathConfig(2.0, 3.0, Grid((1.0, 2.0, 3.0)), seed=SEED)
        _, _, dist = simulate_coupled(CPP, Affine(0.0, 1.0), 2.0, 2.0, cfg)
        assert (dist.gaps == 0.0).all()
        assert dist.merge_time <= 1.0

    def test_constant_drain_gap_closes(self):
        cfg = PathConfig(1.0, 1.0, Grid(tuple(np.linspace(0.05, 1.0, 20))), seed=SEED)
        _, _, dist = simulate_coupled(NO_JUMPS, Constant(2.0), 1.0, 0.0, cfg)
        assert (np.diff(dist.gaps) <= 1e-12).all()
        at_half = np.searchsorted(dist.times, 0.5)
        assert (dist.gaps[at_half:] == pytest.approx(0.0, abs=1e-9))

    def test_order_preserved(self):
        grid = Grid(tuple(np.linspace(0.2, 20.0, 40)))
        cfg = PathConfig(9.0, 20.0, grid, seed=SEED)
        for rel in (Affine(0.0, 1.0), Power(1.0, 2.0), Plateau(2.0, 1.0)):
            ra, rb, _ = simulate_coupled(CPP, rel, 9.0, 1.0, cfg)
            assert (ra.values >= rb.values - 1e-12).all()

    def test_gap_dominated_by_contraction_bound(self):
        # power drain with quadratic modulus: |X - Z| <= B_kappa^{-1}(t),
        # and the gap only shrinks (jumps cancel, the drift contracts)
        grid = Grid(tuple(np.linspace(0.1, 10.0, 30)))
        cfg = PathConfig(3.0, 10.0, grid, seed=SEED)
        bound = wasserstein_rate(PowerModulus(2.0), 1.0, 2.0)
        _, _, dist = simulate_coupled(CPP, Power(1.0, 2.0), 3.0, 1.0, cfg)
        for t, g in zip(dist.times, dist.gaps):
            assert g <= bound(t) + 1e-6
        assert (np.diff(dist.gaps) <= 1e-12).all()

    def test_affine_gap_with_jumps_matches_exponential_bound(self):
        grid = Grid(tuple(np.linspace(0.25, 8.0, 16)))
        cfg = PathConfig(4.0, 8.0, grid, seed=SEED)
        bound = wasserstein_rate(PowerModulus(1.0), 1.0, 4.0)
        for i in range(20):
            stream = JumpStream(SEED, 1e-4).derive(i)
            _, _, dist = simulate_coupled(CPP, Affine(0.0, 1.0), 4.0, 0.0, cfg,
                                          stream=stream)
            for t, g in zip(dist.times, dist.gaps):
                assert g <= bound(t) + 1e-6


class TestEnsemble:
    def test_single_path_reduces(self):
        cfg = PathConfig(2.0, 5.0, Endpoint(), seed=SEED)
        single = simulate_ensemble(CPP, Constant(2.0), cfg, 1)
        direct = simulate_path(CPP, Constant(2.0), cfg,
                               stream=JumpStream(SEED, 1e-4).derive(0))
        assert single[0] == direct.values[-1]

    def test_bit_reproducible(self):
        cfg = PathConfig(1.0, 5.0, Endpoint(), seed=SEED)
        a = simulate_ensemble(CPP, Affine(0.0, 1.0), cfg, 50)
        b = simulate_ensemble(CPP, Affine(0.0, 1.0), cfg, 50)
        assert (a == b).all()

    def test_order_independent_streams(self):
        cfg3 = PathConfig(1.0, 5.0, Endpoint(), seed=SEED)
        big = simulate_ensemble(CPP, Affine(0.0, 1.0), cfg3, 20)
        small = simulate_ensemble(CPP, Affine(0.0, 1.0), cfg3, 7)
        assert (big[:7] == small).all()

    def test_disjoint_seed_halves_consistent(self):
        cfg_a = PathConfig(0.0, 2.0, Endpoint(), seed=101)
        cfg_b = PathConfig(0.0, 2.0, Endpoint(), seed=202)
        a = simulate_ensemble(CPP, Affine(0.0, 1.0), cfg_a, 3000)
        b = simulate_ensemble(CPP, Affine(0.0, 1.0), cfg_b, 3000)
        se = math.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)
        assert abs(a.mean() - b.mean()) <= 6 * se


class TestVectorEngines:
    @pytest.mark.parametrize("rel", [
        Constant(2.0), Affine(0.0, 1.0), Affine(1.0, 2.0),
        Power(1.0, 2.0), Power(1.0, 1.0), PowerSmoothed(1.0, 0.5),
        Plateau(2.0, 1.0),
    ], ids=lambda r: f"{type(r).__name__}")
    def test_flow_vec_matches_scalar(self, rel):
        from storagelab.numerics import ode_flow
        xs = np.array([0.0, 0.005, 0.5, 1.0, 4.0, 50.0])
        dts = np.array([0.0, 0.3, 1.7, 9.0])
        for dt in dts:
            vec = flow_vec(rel, xs, dt)
            scal = np.array([ode_flow(rel, x, float(dt)) for x in xs])
            assert vec == pytest.approx(scal, abs=1e-9)

    @pytest.mark.parametrize("rel", [
        Constant(2.0), Affine(0.0, 1.0), Power(1.0, 2.0),
        PowerSmoothed(1.0, 0.5), Plateau(2.0, 1.0),
    ], ids=lambda r: f"{type(r).__name__}")
    def test_signed_drain_vec_matches_integral(self, rel):
        from storagelab.release_rate import flow_time_integral
        us = np.array([0.05, 0.4, 1.0, 3.0, 42.0])
        vec = signed_drain_vec(rel, us)
        for u, v in zip(us, vec):
            ref = (flow_time_integral(rel, 1.0, u) if u >= 1.0
                   else -flow_time_integral(rel, u, 1.0))
            assert v == pytest.approx(ref, rel=1e-9, abs=1e-12)

    def test_endpoint_engine_matches_law(self):
        # shot-noise mean against the per-path ensemble
        vals = endpoint_ensemble(CPP, Affine(0.0, 1.0), 0.0, 1.0, 20_000, SEED)
        target = 1.0 - math.exp(-1.0)
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        assert abs(vals.mean() - target) <= 3.5 * se

    def test_endpoint_engine_reproducible(self):
        a = endpoint_ensemble(CPP, Constant(2.0), 1.0, 5.0, 300, SEED)
        b = endpoint_ensemble(CPP, Constant(2.0), 1.0, 5.0, 300, SEED)
        assert (a == b).all()

    def test_grid_engine_consistent_with_endpoint(self):
        grid = np.array([0.5, 1.0, 2.0])
        mat = grid_ensemble(CPP, Affine(0.0, 1.0), 0.0, grid, 5000, SEED)
        assert mat.shape == (5000, 3)
        assert (mat >= 0.0).all()
        end = endpoint_ensemble(CPP, Affine(0.0, 1.0), 0.0, 2.0, 5000, SEED + 1)
        se = math.sqrt(mat[:, -1].var(ddof=1) / 5000 + end.var(ddof=1) / 5000)
        assert abs(mat[:, -1].mean() - end.mean()) <= 5 * se

    def test_grid_engine_no_jump_is_flow(self):
        grid = np.array([0.5, 1.0, 1.5, 2.0])
        mat = grid_ensemble(NO_JUMPS, Constant(2.0), 3.0, grid, 4, SEED)
        expect = np.maximum(3.0 - 2.0 * grid, 0.0)
        assert mat == pytest.approx(np.tile(expect, (4, 1)))
