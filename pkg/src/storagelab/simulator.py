"""Path simulation for the storage process X(t) = x + A(t) - int r(X) ds.

Event-driven and exact for finite-activity inputs: between jumps the state
follows the drain flow (closed form wherever the release family has one),
at a jump the size is added.  Infinite-activity inputs keep jumps above the
stream's truncation level and fold the discarded mean into the inter-jump
dynamics as a constant inflow, so the flow solves x' = d_eps - r(x).

``simulate_*`` walk one path at a time under per-path derived streams (bit
reproducible, order independent).  The private ``endpoint_ensemble`` /
``grid_ensemble`` engines vectorise across paths in chunks and are what the
estimators in ergodicity_lab call; they draw differently from the per-path
walkers but from the same law, and are equally reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .levy_input import JumpStream, LevyInput, sample_jumps
from .numerics import ode_flow
from .release_rate import (
    Affine,
    Constant,
    Plateau,
    Power,
    PowerSmoothed,
    ReleaseRate,
)
from .rng import substream

__all__ = [
    "Endpoint", "Grid", "FullEvents", "PathConfig", "PathRecord",
    "DistanceCurve", "simulate_path", "simulate_coupled", "simulate_ensemble",
    "flow_vec", "signed_drain_vec", "endpoint_ensemble", "grid_ensemble",
]

MERGE_TOL = 1e-9


@dataclass(frozen=True)
class Endpoint:
    pass


@dataclass(frozen=True)
class Grid:
    times: tuple

    def __post_init__(self):
        t = tuple(float(x) for x in self.times)
        if any(b < a for a, b in zip(t, t[1:])) or (t and t[0] < 0):
            raise ValueError("grid times must be sorted and non-negative")
        object.__setattr__(self, "times", t)


@dataclass(frozen=True)
class FullEvents:
    pass


@dataclass(frozen=True)
class PathConfig:
    x0: float
    horizon: float
    record: object = field(default_factory=Endpoint)
    seed: int = 0
    truncation_eps: float = 1e-4

    def __post_init__(self):
        if self.x0 < 0:
            raise ValueError("initial content must be non-negative")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if isinstance(self.record, Grid) and self.record.times:
            if self.record.times[-1] > self.horizon:
                raise ValueError("grid times must lie within the horizon")


@dataclass(frozen=True)
class PathRecord:
    times: np.ndarray
    values: np.ndarray
    n_jumps: int
    compensator_used: bool
    jump_sizes: np.ndarray | None = None
    # mean-square truncation bias bound int_0^eps u^2 nu(du) * horizon;
    # zero when no compensation was needed
    bias_bound: float = 0.0


@dataclass(frozen=True)
class DistanceCurve:
    times: np.ndarray
    gaps: np.ndarray
    merge_time: float  # inf if the paths never merged


def _drift_of(levy: LevyInput, eps: float) -> float:
    return levy.compensator_drift(eps) if levy.activity == "infinite" else 0.0


def simulate_path(levy: LevyInput, release: ReleaseRate, cfg: PathConfig,
                  stream: JumpStream | None = None) -> PathRecord:
    """One exact event-driven path; recording never perturbs the dynamics."""
    stream = stream or JumpStream(cfg.seed, cfg.truncation_eps)
    times, sizes = sample_jumps(levy, stream, cfg.horizon)
    drift = _drift_of(levy, stream.truncation_eps)
    comp = drift > 0.0
    bias = (levy.small_jump_msq(stream.truncation_eps) * cfg.horizon
            if comp else 0.0)

    if isinstance(cfg.record, Grid):
        grid = np.asarray(cfg.record.times, dtype=float)
    elif isinstance(cfg.record, Endpoint):
        grid = np.asarray([cfg.horizon])
    else:
        grid = None

    x, t_prev = float(cfg.x0), 0.0
    out_t, out_v = [], []
    gi = 0
    ev_t, ev_v = [0.0], [x]
    for tj, sj in zip(times, sizes):
        if grid is not None:
            while gi < len(grid) and grid[gi] < tj:
                out_t.append(grid[gi])
                out_v.append(ode_flow(release, x, grid[gi] - t_prev, drift))
                gi += 1
        x = ode_flow(release, x, tj - t_prev, drift) + sj
        t_prev = tj
        if grid is None:
            ev_t.append(tj)
            ev_v.append(x)
    if grid is not None:
        while gi < len(grid):
            out_t.append(grid[gi])
            out_v.append(ode_flow(release, x, grid[gi] - t_prev, drift))
            gi += 1
        return PathRecord(np.asarray(out_t), np.asarray(out_v),
                          int(len(times)), comp, bias_bound=bias)
    return PathRecord(np.asarray(ev_t), np.asarray(ev_v), int(len(times)), comp,
                      jump_sizes=np.concatenate([[0.0], sizes]), bias_bound=bias)


def simulate_coupled(levy: LevyInput, release: ReleaseRate, x: float, y: float,
                     cfg: PathConfig, stream: JumpStream | None = None,
                     merge_tol: float = MERGE_TOL):
    """Two copies driven by the identical jump sequence (synchronous coupling).

    After the first recorded time the gap falls below ``merge_tol`` the paths
    are identified; the distance curve before merging is untouched.
    """
    if x < 0 or y < 0:
        raise ValueError("starts must be non-negative")
    stream = stream or JumpStream(cfg.seed, cfg.truncation_eps)
    times, sizes = sample_jumps(levy, stream, cfg.horizon)
    drift = _drift_of(levy, stream.truncation_eps)
    if isinstance(cfg.record, Grid):
        grid = np.asarray(cfg.record.times, dtype=float)
    else:
        grid = np.asarray([cfg.horizon])

    xa, xb = float(x), float(y)
    t_prev = 0.0
    merge_time = math.inf
    rec_a, rec_b = [], []
    gi = 0

    def advance(xa, xb, dt):
        xa2 = ode_flow(release, xa, dt, drift)
        xb2 = xa2 if merge_time < math.inf else ode_flow(release, xb, dt, drift)
        return xa2, xb2

    for tj, sj in zip(times, sizes):
        while gi < len(grid) and grid[gi] < tj:
            ga, gb = advance(xa, xb, grid[gi] - t_prev)
            rec_a.append(ga)
            rec_b.append(gb)
            if merge_time == math.inf and abs(ga - gb) < merge_tol:
                merge_time = float(grid[gi])
            gi += 1
        xa, xb = advance(xa, xb, tj - t_prev)
        xa += sj
        xb = xa if merge_time < math.inf else xb + sj
        t_prev = tj
        if merge_time == math.inf and abs(xa - xb) < merge_tol:
            merge_time = float(tj)
    while gi < len(grid):
        ga, gb = advance(xa, xb, grid[gi] - t_prev)
        rec_a.append(ga)
        rec_b.append(gb)
        if merge_time == math.inf and abs(ga - gb) < merge_tol:
            merge_time = float(grid[gi])
        gi += 1
    gaps = np.abs(np.asarray(rec_a) - np.asarray(rec_b))
    rec = lambda vals: PathRecord(grid.copy(), np.asarray(vals), int(len(times)),
                                  drift > 0.0)
    return rec(rec_a), rec(rec_b), DistanceCurve(grid.copy(), gaps, merge_time)


def simulate_ensemble(levy: LevyInput, release: ReleaseRate, cfg: PathConfig,
                      n_paths: int):
    """Independent paths on streams derived per path index from the master
    seed; results are order-independent and bit-reproducible, and a single
    path reduces exactly to simulate_path on the derived stream."""
    if n_paths < 1:
        raise ValueError("need at least one path")
    base = JumpStream(cfg.seed, cfg.truncation_eps)
    records = [simulate_path(levy, release, cfg, stream=base.derive(i))
               for i in range(n_paths)]
    if isinstance(cfg.record, (Endpoint, Grid)):
        values = np.vstack([r.values for r in records])
        if isinstance(cfg.record, Endpoint):
            return values[:, -1]
        return values
    return records


# ---------------------------------------------------------------------------
# vectorised flows and drain times
# ---------------------------------------------------------------------------

def flow_vec(release: ReleaseRate, x, dt, drift: float = 0.0):
    """Closed-form drain flow applied elementwise; falls back to the scalar
    integrator for families without a vector form."""
    x = np.asarray(x, dtype=float)
    dt = np.broadcast_to(np.asarray(dt, dtype=float), x.shape).copy()
    dt = np.maximum(dt, 0.0)
    if isinstance(release, Constant):
        a = release.a
        if drift <= a:
            out = np.maximum(x + (drift - a) * dt, 0.0)
            out[x <= 0.0] = 0.0
            return out
        return x + (drift - a) * dt
    if isinstance(release, Affine):
        a, b = release.a, release.b
        x_eq = (drift - a) / b
        out = x_eq + (x - x_eq) * np.exp(-b * dt)
        out = np.maximum(out, 0.0)
        if drift <= a:
            out[x <= 0.0] = 0.0
        return out
    if isinstance(release, Power) and drift == 0.0:
        k, beta = release.k, release.beta
        if beta == 1.0:
            return x * np.exp(-k * dt)
        base = np.maximum(x, 1e-300) ** (1.0 - beta) - k * (1.0 - beta) * dt
        if beta < 1.0:
            out = np.where(base > 0.0, np.maximum(base, 0.0) ** (1.0 / (1.0 - beta)), 0.0)
        else:
            out = base ** (1.0 / (1.0 - beta))
        out[x <= 0.0] = 0.0
        return out
    if isinstance(release, PowerSmoothed) and drift == 0.0:
        k, beta, us = release.k, release.beta, release.u_s
        slope = release._ramp_slope
        out = np.empty_like(x)
        above = x > us
        if above.any():
            xa, da = x[above], dt[above]
            if beta == 1.0:
                t_hit = np.log(xa / us) / k
                power_part = xa * np.exp(-k * da)
            else:
                t_hit = (xa ** (1.0 - beta) - us ** (1.0 - beta)) / (k * (1.0 - beta))
                base = xa ** (1.0 - beta) - k * (1.0 - beta) * da
                power_part = np.maximum(base, 1e-300) ** (1.0 / (1.0 - beta))
            stays = da <= t_hit
            ramp_part = us * np.exp(-slope * np.maximum(da - t_hit, 0.0))
            out[above] = np.where(stays, power_part, ramp_part)
        below = ~above
        out[below] = x[below] * np.exp(-slope * dt[below])
        return out
    if isinstance(release, Plateau) and drift < release.m:
        m, u0 = release.m, release.u0
        slope = m / u0
        x_eq = drift / slope
        out = np.empty_like(x)
        above = x > u0
        if above.any():
            xa, da = x[above], dt[above]
            t_hit = (xa - u0) / (m - drift)
            linear_part = xa - (m - drift) * da
            exp_part = x_eq + (u0 - x_eq) * np.exp(-slope * (da - t_hit))
            out[above] = np.where(da <= t_hit, linear_part, exp_part)
        below = ~above
        out[below] = x_eq + (x[below] - x_eq) * np.exp(-slope * dt[below])
        return np.maximum(out, 0.0)
    return np.asarray([ode_flow(release, xi, di, drift)
                       for xi, di in zip(x.ravel(), dt.ravel())]).reshape(x.shape)


def signed_drain_vec(release: ReleaseRate, u):
    """G(u) = int_1^u dv/r(v), elementwise, for occupation bookkeeping.

    Only meaningful where the drain alone drives the motion (drift 0).
    """
    u = np.asarray(u, dtype=float)
    if isinstance(release, Constant):
        return (u - 1.0) / release.a
    if isinstance(release, Affine):
        a, b = release.a, release.b
        return np.log((a + b * np.maximum(u, 1e-300)) / (a + b)) / b
    if isinstance(release, Power):
        k, beta = release.k, release.beta
        if beta == 1.0:
            return np.log(np.maximum(u, 1e-300)) / k
        return (np.maximum(u, 1e-300) ** (1.0 - beta) - 1.0) / (k * (1.0 - beta))
    if isinstance(release, PowerSmoothed):
        k, beta, us = release.k, release.beta, release.u_s
        slope = release._ramp_slope
        power = Power(k, beta)
        anchor = signed_drain_vec(power, u)  # valid above u_s
        if us >= 1.0:
            raise ValueError("ramp knee above the reference level")
        ramp = np.log(np.maximum(u, 1e-300) / us) / slope + signed_drain_vec(
            power, np.asarray(us))
        return np.where(u >= us, anchor, ramp)
    if isinstance(release, Plateau):
        m, u0 = release.m, release.u0
        out = np.where(u <= u0,
                       np.log(np.maximum(u, 1e-300) / u0) * u0 / m,
                       (u - u0) / m)
        ref = math.log(1.0 / u0) * u0 / m if u0 >= 1.0 else (1.0 - u0) / m
        return out - ref
    return np.asarray([_signed_drain_scalar(release, x) for x in u.ravel()]
                      ).reshape(u.shape)


def _signed_drain_scalar(release, u):
    from .release_rate import flow_time_integral
    if u >= 1.0:
        return flow_time_integral(release, 1.0, u)
    return -flow_time_integral(release, u, 1.0)


# ---------------------------------------------------------------------------
# chunked cross-path engines
# ---------------------------------------------------------------------------

_CHUNK = 8192


def _chunk_jumps(levy, gen, horizon, m, eps):
    """Padded (times, sizes) matrices: padding jumps sit at the horizon with
    size zero, so the stepping loop needs no masks."""
    lam = levy.proposal_rate(eps)
    if lam <= 0.0:
        return np.zeros((m, 0)), np.zeros((m, 0))
    counts = gen.poisson(lam * horizon, m)
    kmax = int(counts.max()) if m else 0
    if kmax == 0:
        return np.zeros((m, 0)), np.zeros((m, 0))
    t = gen.random((m, kmax)) * horizon
    idx = np.arange(kmax)[None, :]
    t[idx >= counts[:, None]] = horizon
    t.sort(axis=1)
    s = levy.sample_sizes(gen, m * kmax, eps).reshape(m, kmax)
    s[idx >= counts[:, None]] = 0.0
    return t, s


def _starts(x0, gen, m):
    if callable(x0):
        return np.asarray(x0(gen, m), dtype=float)
    return np.full(m, float(x0))


def endpoint_ensemble(levy: LevyInput, release: ReleaseRate, x0,
                      horizon: float, n_paths: int, seed: int,
                      eps: float = 1e-4, chunk: int = _CHUNK) -> np.ndarray:
    """X(horizon) across paths, vectorised in chunks.

    ``x0`` is a level or a sampler ``(gen, m) -> array`` for random starts.
    """
    drift = _drift_of(levy, eps)
    out = np.empty(n_paths)
    done = 0
    ci = 0
    while done < n_paths:
        m = min(chunk, n_paths - done)
        gen = substream(seed, "endpoint", ci)
        x = _starts(x0, gen, m)
        t, s = _chunk_jumps(levy, gen, horizon, m, eps)
        tp = np.zeros(m)
        for k in range(t.shape[1]):
            x = flow_vec(release, x, t[:, k] - tp, drift) + s[:, k]
            tp = t[:, k]
        x = flow_vec(release, x, horizon - tp, drift)
        out[done:done + m] = x
        done += m
        ci += 1
    return out


def grid_ensemble(levy: LevyInput, release: ReleaseRate, x0,
                  grid, n_paths: int, seed: int, eps: float = 1e-4,
                  chunk: int = _CHUNK) -> np.ndarray:
    """Matrix (n_paths, len(grid)) of states at common grid times."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or (np.diff(grid) < 0).any() or grid[0] < 0:
        raise ValueError("grid must be sorted and non-negative")
    horizon = float(grid[-1])
    drift = _drift_of(levy, eps)
    out = np.empty((n_paths, grid.size))
    done = 0
    ci = 0
    while done < n_paths:
        m = min(chunk, n_paths - done)
        gen = substream(seed, "grid", ci)
        x = _starts(x0, gen, m)
        t, s = _chunk_jumps(levy, gen, horizon, m, eps)
        kmax = t.shape[1]
        tp = np.zeros(m)
        ptr = np.zeros(m, dtype=np.int64)
        rows_all = np.arange(m)
        for j, g in enumerate(grid):
            while True:
                if kmax == 0:
                    break
                has = ptr < kmax
                rows = rows_all[has]
                if rows.size == 0:
                    break
                tj = t[rows, ptr[rows]]
                move = tj <= g
                if not move.any():
                    break
                rows = rows[move]
                tj = tj[move]
                x[rows] = flow_vec(release, x[rows], tj - tp[rows], drift) \
                    + s[rows, ptr[rows]]
                tp[rows] = tj
                ptr[rows] += 1
            x = flow_vec(release, x, g - tp, drift)
            tp[:] = g
            out[done:done + m, j] = x
        done += m
        ci += 1
    return out
