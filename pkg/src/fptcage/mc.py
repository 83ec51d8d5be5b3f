"""Euler-Maruyama ground truth with absorbing (possibly moving) boundaries.

Each trajectory consumes its own counter-based random substream keyed by
(seed, trajectory index), so results are identical however the batch is
partitioned or parallelised.  Between steps, an exact Brownian-bridge
crossing probability (with the boundary evaluated at the step's start and
end times, which is exact for linear trajectories) removes the
discretisation bias of the end-point crossing test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .errors import DomainError
from .filtration import DensityCurve
from .processes import MovingBoundaries, ProcessSpec, StaticBoundaries

LOWER, UPPER, CENSORED = 0, 1, -1
_BOUNDARY_NAMES = {LOWER: "lower", UPPER: "upper"}


@dataclass(frozen=True)
class McConfig:
    """Simulation settings; identical seed and config give identical output.

    ``horizon`` is the censoring time; ``None`` picks a multiple of the
    slowest relaxation time for static boundaries and is rejected for moving
    boundaries (whose natural horizon depends on the cage kinematics).
    """

    dt: float
    n_traj: int
    seed: int
    bridge_correction: bool = True
    horizon: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if self.n_traj < 1:
            raise DomainError("n_traj must be >= 1")


@dataclass(frozen=True)
class FptSample:
    """One absorbed trajectory: when and through which boundary."""

    hit_time: float
    which_boundary: str


@dataclass
class SimulationResult:
    """Columnar FPT samples plus the censoring tally."""

    hit_times: np.ndarray  # nan for censored trajectories
    boundaries: np.ndarray  # LOWER / UPPER / CENSORED codes
    horizon: float
    config: McConfig

    @property
    def n_traj(self) -> int:
        return self.boundaries.size

    @property
    def n_censored(self) -> int:
        return int(np.count_nonzero(self.boundaries == CENSORED))

    def samples(self) -> list[FptSample]:
        out = []
        for t, b in zip(self.hit_times, self.boundaries):
            if b != CENSORED:
                out.append(FptSample(float(t), _BOUNDARY_NAMES[int(b)]))
        return out

    def hit_fraction(self, boundary=None) -> float:
        if boundary is None:
            return 1.0 - self.n_censored / self.n_traj
        code = _boundary_code(boundary)
        return float(np.count_nonzero(self.boundaries == code)) / self.n_traj

    def times_for(self, boundary=None) -> np.ndarray:
        if boundary is None:
            mask = self.boundaries != CENSORED
        else:
            mask = self.boundaries == _boundary_code(boundary)
        return self.hit_times[mask]


def _boundary_code(boundary) -> int:
    if boundary in (LOWER, "lower"):
        return LOWER
    if boundary in (UPPER, "upper"):
        return UPPER
    raise DomainError("boundary must be 'lower' or 'upper'")


def _boundary_motion(boundaries):
    if isinstance(boundaries, StaticBoundaries):
        return 0.0, 0.0, boundaries.L, 0.0
    if isinstance(boundaries, MovingBoundaries):
        return 0.0, boundaries.v0, boundaries.L, boundaries.vL
    raise DomainError("boundaries must be StaticBoundaries or MovingBoundaries")


def simulate(
    p: ProcessSpec,
    boundaries,
    x0,
    cfg: McConfig,
    batch_size=8192,
    chunk_steps=512,
) -> SimulationResult:
    """Euler-Maruyama first-passage sampling on the interval.

    Per step x <- x + drift(x) dt + sqrt(2 D dt) xi; absorption is decided
    against the boundary positions at the step's end time, refined by the
    Brownian-bridge crossing probability when ``cfg.bridge_correction`` is
    on.  Trajectories still alive at the horizon are censored.

    ``batch_size`` only partitions the work and never changes the output;
    ``chunk_steps`` fixes how each trajectory's substream is consumed, so it
    must match for bit-identical reproduction.
    """
    lo0, vlo, hi0, vhi = _boundary_motion(boundaries)
    if isinstance(boundaries, MovingBoundaries):
        if cfg.horizon is None:
            raise DomainError("moving boundaries need an explicit horizon")
        horizon = float(cfg.horizon)
        boundaries.check_gap(np.linspace(0.0, horizon, 4097))
    else:
        horizon = (
            float(cfg.horizon)
            if cfg.horizon is not None
            else 20.0 * boundaries.L**2 / p.D
        )
    x0 = float(x0)
    if not lo0 < x0 < hi0:
        raise DomainError("x0 must start strictly inside the interval")

    n = cfg.n_traj
    dt = cfg.dt
    max_steps = int(math.ceil(horizon / dt))
    sdt = math.sqrt(2.0 * p.D * dt)
    inv_ddt = 1.0 / (p.D * dt)

    hit_times = np.full(n, np.nan)
    codes = np.full(n, CENSORED, dtype=np.int8)

    for start in range(0, n, batch_size):
        stop = min(start + batch_size, n)
        gens = [
            Generator(Philox(key=(int(cfg.seed) << 64) + i)) for i in range(start, stop)
        ]
        m = stop - start
        x = np.full(m, x0)
        alive = np.ones(m, dtype=bool)
        step = 0
        while step < max_steps and alive.any():
            n_chunk = min(chunk_steps, max_steps - step)
            rows = np.flatnonzero(alive)
            noise = np.empty((rows.size, n_chunk))
            for r, row in enumerate(rows):
                noise[r] = gens[row].standard_normal(n_chunk)
            if cfg.bridge_correction:
                uni = np.empty((rows.size, n_chunk, 2))
                for r, row in enumerate(rows):
                    uni[r] = gens[row].random((n_chunk, 2))
            xs = x[rows]
            live = np.ones(rows.size, dtype=bool)
            for j in range(n_chunk):
                t0 = (step + j) * dt
                t1 = t0 + dt
                idx = np.flatnonzero(live)
                if idx.size == 0:
                    break
                xo = xs[idx]
                xn = xo + p.drift(xo) * dt + sdt * noise[idx, j]
                lo_0, lo_1 = lo0 + vlo * t0, lo0 + vlo * t1
                hi_0, hi_1 = hi0 + vhi * t0, hi0 + vhi * t1
                if cfg.bridge_correction:
                    # exp(-d_start d_end/(D dt)) >= 1 exactly when the end
                    # point already crossed, so one test covers both cases
                    arg_lo = -(xo - lo_0) * (xn - lo_1) * inv_ddt
                    arg_hi = -(hi_0 - xo) * (hi_1 - xn) * inv_ddt
                    hit_lo = uni[idx, j, 0] < np.exp(np.minimum(arg_lo, 0.0))
                    hit_hi = uni[idx, j, 1] < np.exp(np.minimum(arg_hi, 0.0))
                else:
                    hit_lo = xn <= lo_1
                    hit_hi = xn >= hi_1
                hit_hi &= ~hit_lo
                absorbed = hit_lo | hit_hi
                if absorbed.any():
                    rel = idx[absorbed]
                    g_rows = rows[rel]
                    hit_times[start + g_rows] = t1
                    codes[start + g_rows] = np.where(hit_lo[absorbed], LOWER, UPPER)
                    live[rel] = False
                xs[idx] = xn
            x[rows] = xs
            alive[rows] = live
            step += n_chunk
    return SimulationResult(hit_times, codes, horizon, cfg)


def histogram(result: SimulationResult, bins, boundary_filter=None, t_range=None) -> DensityCurve:
    """Density histogram of FPT samples.

    Normalised so the curve integrates to the *filtered fraction* of all
    trajectories (censored ones included in the denominator), matching the
    convention that the one-sided density integrates to the splitting
    probability.  ``bins`` is a count (with ``t_range`` defaulting to
    (0, horizon)) or an array of edges.
    """
    times = result.times_for(boundary_filter)
    if times.size == 0:
        raise DomainError("no samples left after filtering")
    if np.isscalar(bins):
        if t_range is None:
            t_range = (0.0, result.horizon)
        edges = np.linspace(t_range[0], t_range[1], int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=float)
    counts, edges = np.histogram(times, bins=edges)
    widths = np.diff(edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    density = counts / (result.n_traj * widths)
    return DensityCurve(centers, density, "mc", result.n_traj, counts=counts)
