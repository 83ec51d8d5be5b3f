"""Stochastic models and their one-absorbing-boundary passage kernels.

Three homogeneous 1-D Markov models are supported: free diffusion, diffusion
in a linear potential (constant drift), and the Ornstein-Uhlenbeck process.
For each, the first-passage-time kernel to a single absorbing boundary is
available in the Laplace domain and (free/biased in closed form, OU through
numerical inversion) in the time domain, together with the moving-boundary
kernel used by the time-domain filtration recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import DomainError

_SQRT4PI = math.sqrt(4.0 * math.pi)

KINDS = ("free", "biased", "ou")


@dataclass(frozen=True)
class ProcessSpec:
    """Which stochastic model, and its physical parameters.

    ``D`` is the diffusion coefficient.  The drift convention for the biased
    model is U(x) = -alpha*x, so the drift velocity is v = alpha/gamma; the
    OU model has U(x) = k/2 (x-a)^2.  Derived quantities (v, tau, b) are
    always computed from the stored primaries.
    """

    kind: str
    D: float
    gamma: float | None = None
    alpha: float | None = None
    k: float | None = None
    a: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown process kind {self.kind!r}")
        if not self.D > 0:
            raise DomainError("D must be positive")
        if self.kind == "free":
            if any(f is not None for f in (self.gamma, self.alpha, self.k, self.a)):
                raise DomainError("free diffusion takes no potential parameters")
        elif self.kind == "biased":
            if self.gamma is None or self.alpha is None:
                raise DomainError("biased diffusion needs gamma and alpha")
            if not self.gamma > 0:
                raise DomainError("gamma must be positive")
            if self.k is not None or self.a is not None:
                raise DomainError("biased diffusion takes no k or a")
        else:
            if self.gamma is None or self.k is None or self.a is None:
                raise DomainError("OU needs gamma, k and a")
            if not self.gamma > 0:
                raise DomainError("gamma must be positive")
            if not self.k > 0:
                raise DomainError("k must be positive")

    @classmethod
    def free(cls, D):
        return cls("free", float(D))

    @classmethod
    def biased(cls, D, alpha=None, v=None, gamma=1.0):
        """Biased diffusion; give either the potential slope ``alpha``
        (U(x) = -alpha*x) or the drift ``v`` = alpha/gamma directly."""
        if (alpha is None) == (v is None):
            raise DomainError("give exactly one of alpha or v")
        gamma = float(gamma)
        if alpha is None:
            alpha = float(v) * gamma
        return cls("biased", float(D), gamma=gamma, alpha=float(alpha))

    @classmethod
    def ou(cls, D, k, a, gamma=1.0):
        return cls("ou", float(D), gamma=float(gamma), k=float(k), a=float(a))

    @property
    def v(self) -> float:
        """Drift velocity (free: 0, biased: alpha/gamma)."""
        if self.kind == "free":
            return 0.0
        if self.kind == "biased":
            return self.alpha / self.gamma
        raise DomainError("OU drift is state dependent; use drift(x)")

    @property
    def tau(self) -> float:
        if self.kind != "ou":
            raise DomainError("tau is defined for the OU process only")
        return self.gamma / self.k

    @property
    def b2(self) -> float:
        return self.D * self.tau

    @property
    def b(self) -> float:
        return math.sqrt(self.b2)

    def drift(self, x):
        """Deterministic part of dx/dt at position x."""
        if self.kind == "free":
            return np.zeros_like(np.asarray(x, dtype=float))
        if self.kind == "biased":
            return np.full_like(np.asarray(x, dtype=float), self.v)
        return -(np.asarray(x, dtype=float) - self.a) / self.tau


@dataclass(frozen=True)
class StaticBoundaries:
    """Absorbing interval [0, L]."""

    L: float
    left: float = 0.0

    def __post_init__(self):
        if self.left != 0.0:
            raise DomainError("the lower boundary sits at 0 by convention")
        if not self.L > 0:
            raise DomainError("L must be positive")

    def contains(self, x0) -> bool:
        return 0.0 < x0 < self.L


@dataclass(frozen=True)
class LinearTrajectory:
    """Boundary position b(t) = pos0 + velocity * t."""

    pos0: float
    velocity: float

    def __call__(self, t):
        return self.pos0 + self.velocity * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class MovingBoundaries:
    """Pair of linearly moving absorbing boundaries.

    Lower boundary starts at 0 with velocity ``v0``; upper starts at ``L``
    with velocity ``vL``; gap(t) = L + (vL - v0) t.
    """

    L: float
    v0: float
    vL: float

    def __post_init__(self):
        if not self.L > 0:
            raise DomainError("initial gap L must be positive")

    @property
    def lower(self) -> LinearTrajectory:
        return LinearTrajectory(0.0, self.v0)

    @property
    def upper(self) -> LinearTrajectory:
        return LinearTrajectory(self.L, self.vL)

    def gap(self, t):
        return self.L + (self.vL - self.v0) * np.asarray(t, dtype=float)

    def check_gap(self, times):
        g = self.gap(times)
        if np.any(g <= 0):
            raise DomainError("boundaries touch or cross inside the requested grid")

    def collapse_time(self) -> float:
        """Time at which the gap closes (inf for non-shrinking cages)."""
        rate = self.v0 - self.vL
        return self.L / rate if rate > 0 else math.inf


def relaxation_horizon(L, D, factor=20.0) -> float:
    """Multiple of the slowest free-diffusion relaxation time L^2/(pi^2 D)."""
    return factor * L * L / (math.pi * math.pi * D)


def transition_density(p: ProcessSpec, x, t, x0, t0=0.0):
    """Infinite-space transition density (free and biased diffusion)."""
    if p.kind not in ("free", "biased"):
        raise DomainError("transition_density covers free and biased diffusion")
    dt = np.asarray(t, dtype=float) - t0
    if np.any(dt <= 0):
        raise DomainError("elapsed time must be positive")
    mean = x0 + p.v * dt
    var = 2.0 * p.D * dt
    x = np.asarray(x, dtype=float)
    out = np.exp(-((x - mean) ** 2) / (2.0 * var)) / np.sqrt(2.0 * math.pi * var)
    return out if out.shape else float(out)


def fpt_one_boundary_laplace(p: ProcessSpec, A, B, s) -> complex:
    """Laplace transform F~_I(s; A => B) of the one-boundary FPT density.

    Closed exponential forms for free/biased diffusion; for OU the ratio of
    u_s^{+-} evaluations, the branch picked by the sign of A - B.
    """
    A = float(A)
    B = float(B)
    s = complex(s)
    if A == B:
        return 1.0 + 0.0j
    if p.kind == "free":
        return complex(np.exp(-abs(B - A) * np.sqrt(s / p.D)))
    if p.kind == "biased":
        v = p.v
        root = np.sqrt(4.0 * p.D * s + v * v + 0.0j)
        return complex(np.exp((-root * abs(B - A) + (B - A) * v) / (2.0 * p.D)))
    a = p.a
    if A < B:
        logs = specfun.ou_u_log_line(p, s, [A - a, B - a])
    else:
        # u^+(y) = u^-(-y)
        logs = specfun.ou_u_log_line(p, s, [-(A - a), -(B - a)])
    return complex(np.exp(logs[0] - logs[1]))


def fpt_one_boundary_time(p: ProcessSpec, A, B, t, ilt_nodes=32):
    """One-boundary FPT density F_I(t; A => B).

    Free and biased diffusion use the closed Levy-type forms; OU is obtained
    by numerical inversion of the Laplace kernel.  Accepts scalar or array
    ``t``.
    """
    A = float(A)
    B = float(B)
    tt = np.asarray(t, dtype=float)
    if np.any(tt <= 0):
        raise DomainError("t must be positive")
    if A == B:
        raise DomainError("time-domain kernel undefined for A == B")
    if p.kind in ("free", "biased"):
        y = abs(B - A)
        v = p.v if p.kind == "biased" else 0.0
        # F_I = |A-B| / sqrt(4 pi D t^3) * exp(-(A - B + v t)^2 / (4 D t))
        out = y / (_SQRT4PI * np.sqrt(p.D * tt**3)) * np.exp(
            -((A - B + v * tt) ** 2) / (4.0 * p.D * tt)
        )
        return out if out.shape else float(out)
    from .laplace import LaplaceKernel, invert_talbot

    kernel = LaplaceKernel(lambda s: fpt_one_boundary_laplace(p, A, B, s))
    if tt.shape:
        return np.array([invert_talbot(kernel, float(ti), ilt_nodes) for ti in tt])
    return invert_talbot(kernel, float(tt), ilt_nodes)


def moving_boundary_kernel(t0, A, t, B: LinearTrajectory, D):
    """Passage kernel from (t0, A) to a linearly moving boundary at time t.

    The prefactor uses the gap at the *start* time |B(t0) - A| while the
    exponent uses the displacement to the boundary at the *arrival* time, so
    the kernel is not a function of t - t0 alone.
    """
    t0 = float(t0)
    tt = np.asarray(t, dtype=float)
    if np.any(tt <= t0):
        raise DomainError("t must exceed t0")
    gap0 = B(t0) - float(A)
    if gap0 == 0.0:
        raise DomainError("start position coincides with the boundary at t0")
    dt = tt - t0
    out = abs(gap0) / (_SQRT4PI * np.sqrt(D * dt**3)) * np.exp(
        -((B(tt) - float(A)) ** 2) / (4.0 * D * dt)
    )
    return out if out.shape else float(out)


def characteristic_time(p: ProcessSpec, n, x0, L) -> float:
    """Peak time of the n-th filtration term (free and biased diffusion).

    Evaluated in the algebraically stable form y^2 / (3D + sqrt(9D^2 +
    v^2 y^2)), which reduces to y^2/(6D) exactly at v = 0.
    """
    if p.kind not in ("free", "biased"):
        raise DomainError("characteristic_time covers free and biased diffusion")
    n = int(n)
    if n < 0:
        raise DomainError("n must be non-negative")
    if not 0 < x0 < L:
        raise DomainError("x0 must lie strictly inside (0, L)")
    y = L * n + x0 if n % 2 == 0 else L * (n + 1) - x0
    v = p.v if p.kind == "biased" else 0.0
    return y * y / (3.0 * p.D + math.sqrt(9.0 * p.D * p.D + v * v * y * y))
