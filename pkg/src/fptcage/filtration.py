"""Two-boundary FPT densities built from one-boundary kernels by filtration.

Three construction routes:

* the Laplace-domain closed formula (finite even truncation order, exact for
  every such order),
* the image-like alternating time-domain series (closed forms for free and
  biased diffusion, numerically inverted products for OU),
* the time-domain convolution recursion for linearly moving boundaries.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import AccuracyWarning, ConvergenceError, DomainError
from .processes import MovingBoundaries, ProcessSpec, moving_boundary_kernel

_SQRT4PI = math.sqrt(4.0 * math.pi)
_NEG_FLOOR = -1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_i = i*dt, i = 0..n_steps."""

    dt: float
    n_steps: int

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if self.n_steps < 1:
            raise DomainError("n_steps must be >= 1")

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    @property
    def horizon(self) -> float:
        return self.dt * self.n_steps


@dataclass(frozen=True)
class FiltrationConfig:
    """Settings bag for the filtration solvers."""

    N: int | None = None
    time_grid: TimeGrid | None = None
    conv_tol: float = 1e-8
    quadrature: str = "trapezoid"

    def __post_init__(self):
        if self.N is not None and self.N < 1:
            raise DomainError("N must be >= 1")
        if not self.conv_tol > 0:
            raise DomainError("conv_tol must be positive")
        if self.quadrature != "trapezoid":
            raise DomainError("only trapezoid quadrature is implemented")


@dataclass
class DensityCurve:
    """Sampled FPT density on a time grid, with provenance metadata."""

    times: np.ndarray
    values: np.ndarray
    method: str
    trunc_order: int
    counts: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise DomainError("times and values must have matching shapes")
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("times must be strictly increasing")
        worst = float(self.values.min(initial=0.0))
        if worst < _NEG_FLOOR:
            warnings.warn(
                f"density has negative excursions down to {worst:.3e} "
                "(truncation not converged?)",
                AccuracyWarning,
                stacklevel=2,
            )

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.times))


@dataclass(frozen=True)
class RatioReport:
    """Truncation diagnostics for the alternating filtration series."""

    n: int
    max_ratio: float
    first_omitted_sup: float


def reflected(p: ProcessSpec, x0, L):
    """Map the target-L problem onto a target-0 problem via x -> L - x.

    Returns the reflected process and start position; free diffusion is
    unchanged, the drift flips sign, and the OU minimum moves to L - a.
    """
    if p.kind == "free":
        return p, L - x0
    if p.kind == "biased":
        return ProcessSpec.biased(p.D, alpha=-p.alpha, gamma=p.gamma), L - x0
    return ProcessSpec.ou(p.D, p.k, L - p.a, gamma=p.gamma), L - x0


def _kernel_bundle(p: ProcessSpec, x0, L, s):
    """The four one-boundary transforms entering the filtration formulas:
    F~(x0=>0), F~(x0=>L), F~(0=>L), F~(L=>0)."""
    s = complex(s)
    if p.kind == "free":
        q = np.sqrt(s / p.D)
        e = np.exp
        return (e(-x0 * q), e(-(L - x0) * q), e(-L * q), e(-L * q))
    if p.kind == "biased":
        v = p.v
        rho = np.sqrt(4.0 * p.D * s + v * v + 0.0j) / (2.0 * p.D)
        h = v / (2.0 * p.D)
        e = np.exp
        return (
            e(-x0 * rho - x0 * h),
            e(-(L - x0) * rho + (L - x0) * h),
            e(-L * rho + L * h),
            e(-L * rho - L * h),
        )
    from . import specfun

    a = p.a
    pts = np.array([x0 - a, -a, L - a, -(x0 - a), a, -(L - a)])
    logs = specfun.ou_u_log_line(p, s, pts)
    lx0, l0, lL, mx0, m0, mL = logs
    # minus branch (A < B): u^-(A-a)/u^-(B-a); plus branch via u^+(y) = u^-(-y)
    return (
        complex(np.exp(mx0 - m0)),  # x0 => 0 (A > B)
        complex(np.exp(lx0 - lL)),  # x0 => L (A < B)
        complex(np.exp(l0 - lL)),  # 0 => L
        complex(np.exp(mL - m0)),  # L => 0
    )


def _f_n_from_bundle(bundle, n):
    f_x0_0, f_x0_L, f_0L, f_L0 = bundle
    loop = f_0L * f_L0
    if n % 2 == 0:
        return f_x0_0 * loop ** (n // 2)
    return f_x0_L * f_L0 * loop ** ((n - 1) // 2)


def f_n_laplace(p: ProcessSpec, n, x0, L, s) -> complex:
    """n-th filtration term f~_I^{(n)}(s; x0 => 0) as a product of
    one-boundary transforms (even/odd split in the loop factor)."""
    n = int(n)
    if n < 0:
        raise DomainError("n must be non-negative")
    _check_interval(x0, L)
    return complex(_f_n_from_bundle(_kernel_bundle(p, x0, L, s), n))


def ftwo_laplace(p: ProcessSpec, x0, L, s, N=2) -> complex:
    """Two-boundary transform F~_II(s; x0 => 0) from the N-step formula.

    ``N`` must be even; the result is independent of N (the formula is exact
    for every even truncation), which doubles as a self-check.
    """
    N = int(N)
    if N < 2 or N % 2:
        raise DomainError("N must be an even integer >= 2")
    _check_interval(x0, L)
    bundle = _kernel_bundle(p, x0, L, s)
    loop = bundle[2] * bundle[3]
    num = 0.0 + 0.0j
    for n in range(N):
        num += (-1) ** n * _f_n_from_bundle(bundle, n)
    den = 1.0 - loop ** (N // 2)
    if abs(den) < 1e-300:
        raise DomainError("total absorption: denominator vanished (s -> 0)")
    return complex(num / den)


def _check_interval(x0, L):
    if not 0 < x0 < L:
        raise DomainError("x0 must lie strictly inside (0, L)")


def _image_terms(p: ProcessSpec, x0, L, t, n_list):
    """Closed-form f^{(n)}(t; x0 => 0) for free/biased diffusion, stacked
    over ``n_list``; exponents are combined before exponentiation so the
    bias factors cannot overflow."""
    tt = np.asarray(t, dtype=float)
    v = p.v if p.kind == "biased" else 0.0
    D = p.D
    out = np.empty((len(n_list),) + tt.shape)
    pref_t = _SQRT4PI * np.sqrt(D * tt**3)
    for i, n in enumerate(n_list):
        if n % 2 == 0:
            y = L * n + x0
            expo = -((y + v * tt) ** 2) / (4.0 * D * tt) + L * v * n / (2.0 * D)
        else:
            y = L * (n + 1) - x0
            expo = -((y - v * tt) ** 2) / (4.0 * D * tt) - L * v * (n + 1) / (2.0 * D)
        out[i] = y / pref_t * np.exp(expo)
    return out


def _ou_terms_time(p: ProcessSpec, x0, L, t, n_max, ilt_nodes=32):
    """OU filtration terms by numerical inversion, sharing the expensive
    u-line integrations across all n through one bundle per contour node."""
    M = int(ilt_nodes)
    r = 2.0 * M / 5.0
    theta = np.arange(1, M) * math.pi / M
    cot = 1.0 / np.tan(theta)
    s_nodes = np.empty(M, dtype=complex)
    s_nodes[0] = r / t
    s_nodes[1:] = (r / t) * theta * (cot + 1j)
    gamma = np.empty(M, dtype=complex)
    gamma[0] = 0.5 * math.exp(r)
    gamma[1:] = np.exp(t * s_nodes[1:]) * (1.0 + 1j * theta * (1.0 + cot**2) - 1j * cot)
    sums = np.zeros(n_max + 1, dtype=complex)
    for g, s in zip(gamma, s_nodes):
        bundle = _kernel_bundle(p, x0, L, s)
        for n in range(n_max + 1):
            sums[n] += g * _f_n_from_bundle(bundle, n)
    return (2.0 / (5.0 * t)) * sums.real


@functools.lru_cache(maxsize=1 << 16)
def _ou_terms_time_cached(p, x0, L, t, n_max, ilt_nodes):
    return tuple(_ou_terms_time(p, x0, L, t, n_max, ilt_nodes))


def f_n_time(p: ProcessSpec, n, x0, L, t, ilt_nodes=32):
    """Time-domain filtration term f^{(n)}(t; x0 => 0).

    Image closed forms for free/biased diffusion; inverse transform of the
    Laplace product for OU (cached per time point).
    """
    n = int(n)
    if n < 0:
        raise DomainError("n must be non-negative")
    _check_interval(x0, L)
    tt = np.asarray(t, dtype=float)
    if np.any(tt <= 0):
        raise DomainError("t must be positive")
    if p.kind in ("free", "biased"):
        out = _image_terms(p, x0, L, tt, [n])[0]
        return out if out.shape else float(out)
    if tt.shape:
        return np.array(
            [_ou_terms_time_cached(p, x0, L, float(ti), n, ilt_nodes)[n] for ti in tt]
        )
    return _ou_terms_time_cached(p, x0, L, float(tt), n, ilt_nodes)[n]


def ftwo_series_time(p: ProcessSpec, x0, L, t, N, ilt_nodes=32, warn_unconverged=True):
    """Alternating partial sum sum_{n<N} (-1)^n f^{(n)}(t; x0 => 0).

    For free and biased diffusion the terms are the closed image forms; for
    OU each term is inverted numerically.  When the last two computed terms
    are not yet decreasing somewhere the truncation has not passed its hump
    and an :class:`AccuracyWarning` is emitted (run :func:`ratio_diagnostic`
    for the full picture).
    """
    N = int(N)
    if N < 1:
        raise DomainError("N must be >= 1")
    _check_interval(x0, L)
    tt = np.asarray(t, dtype=float)
    if np.any(tt <= 0):
        raise DomainError("t must be positive")
    scalar = not tt.shape
    tt = np.atleast_1d(tt)
    if p.kind in ("free", "biased"):
        terms = _image_terms(p, x0, L, tt, list(range(N)))
    else:
        terms = np.empty((N, tt.size))
        for j, ti in enumerate(tt):
            vals = _ou_terms_time_cached(p, x0, L, float(ti), N - 1, ilt_nodes)
            terms[:, j] = vals
    signs = (-1.0) ** np.arange(N)
    total = signs @ terms
    if warn_unconverged and N >= 2:
        scale = max(float(np.max(np.abs(total))), np.finfo(float).tiny)
        bad = np.abs(terms[N - 1]) > np.maximum(np.abs(terms[N - 2]), 1e-12 * scale)
        if bad.any():
            warnings.warn(
                f"filtration series at N={N}: terms still growing at "
                f"{int(bad.sum())} of {tt.size} grid points (truncation hump "
                "not passed; increase N)",
                AccuracyWarning,
                stacklevel=2,
            )
    return float(total[0]) if scalar else total


def ratio_diagnostic(p: ProcessSpec, x0, L, t_grid, N, ilt_nodes=32) -> RatioReport:
    """Convergence diagnostics for the series truncated at ``N`` terms.

    Reports the grid maximum of |f^{(N)} / f^{(N-1)}| (the paper's ratio
    test at the deepest computed level) and the sup-norm of the first
    omitted term as a truncation-error proxy.
    """
    N = int(N)
    if N < 2:
        raise DomainError("need N >= 2 computed terms")
    tt = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if p.kind in ("free", "biased"):
        pair = _image_terms(p, x0, L, tt, [N - 1, N])
    else:
        pair = np.empty((2, tt.size))
        for j, ti in enumerate(tt):
            vals = _ou_terms_time_cached(p, x0, L, float(ti), N, ilt_nodes)
            pair[0, j] = vals[N - 1]
            pair[1, j] = vals[N]
    denom_ok = np.abs(pair[0]) > 1e-300
    ratios = np.abs(pair[1][denom_ok]) / np.abs(pair[0][denom_ok])
    max_ratio = float(ratios.max()) if ratios.size else 0.0
    return RatioReport(
        n=N - 1,
        max_ratio=max_ratio,
        first_omitted_sup=float(np.max(np.abs(pair[1]))),
    )


def auto_order(p: ProcessSpec, x0, L, t_max, term_tol=1e-7, n_cap=64) -> int:
    """Truncation order for the time-domain series up to ``t_max``.

    Starts from the timing heuristic (smallest N whose next characteristic
    time t*_{(N-1)} exceeds ``t_max``) and then raises N until the sup of
    the first omitted term over the horizon drops below ``term_tol``; the
    timing rule alone under-truncates when drift inflates the odd images.
    """
    from .processes import characteristic_time

    _check_interval(x0, L)
    N = 2
    while N < n_cap and characteristic_time(p, N - 1, x0, L) <= t_max:
        N += 1
    probe = np.geomspace(max(t_max * 1e-3, 1e-6), t_max, 64)
    while N < n_cap:
        omitted = _image_terms(p, x0, L, probe, [N])[0]
        if float(np.max(np.abs(omitted))) <= term_tol:
            break
        N += 1
    return N


def splitting_probability(p: ProcessSpec, x0, L, s_probe=1e-10) -> float:
    """Probability of reaching 0 before L, as the s -> 0 limit of the
    two-boundary transform (Richardson-extrapolated from ``s_probe`` and
    ``s_probe``/2, with the difference as a consistency check)."""
    _check_interval(x0, L)
    f1 = ftwo_laplace(p, x0, L, s_probe).real
    f2 = ftwo_laplace(p, x0, L, 0.5 * s_probe).real
    if abs(f1 - f2) > 1e-5:
        warnings.warn(
            f"splitting probability Richardson check: |F(s) - F(s/2)| = "
            f"{abs(f1 - f2):.2e}; probe s may be too large",
            AccuracyWarning,
            stacklevel=2,
        )
    return float(2.0 * f2 - f1)


def _transfer_matrix(times, src, dst, D):
    """K[i, j] = kernel from (tau_j, src(tau_j)) to (t_i, dst(t_i)), strictly
    lower triangular; the tau -> t diagonal limit vanishes because the
    boundaries never touch."""
    ti = times[:, None]
    tj = times[None, :]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        dt = ti - tj
        gap0 = dst(tj) - src(tj)
        K = np.abs(gap0) / (_SQRT4PI * np.sqrt(D * dt**3)) * np.exp(
            -((dst(ti) - src(tj)) ** 2) / (4.0 * D * dt)
        )
    K[~np.isfinite(K)] = 0.0
    return np.tril(K, k=-1)


def ftwo_moving_pair(
    p: ProcessSpec,
    x0,
    mb: MovingBoundaries,
    grid: TimeGrid,
    N=None,
    conv_tol=1e-8,
    n_cap=400,
):
    """Filtration recursion for linearly moving boundaries.

    Returns the pair of :class:`DensityCurve` objects (absorption density at
    the lower and at the upper boundary).  Levels are convolved on the
    uniform grid with the trapezoid rule; with ``N`` set to ``None`` the
    alternating sum is extended until the last level's sup-norm falls below
    ``conv_tol`` (a cap of ``n_cap`` levels guards the assumed convergence).
    """
    if p.kind != "free":
        raise DomainError("the moving-boundary recursion covers free diffusion")
    times = grid.times
    mb.check_gap(times)
    if not 0.0 < x0 < mb.L:
        raise DomainError("x0 must start strictly inside the cage")
    lower, upper = mb.lower, mb.upper
    D = p.D

    base_lo = np.zeros_like(times)
    base_hi = np.zeros_like(times)
    base_lo[1:] = moving_boundary_kernel(0.0, x0, times[1:], lower, D)
    base_hi[1:] = moving_boundary_kernel(0.0, x0, times[1:], upper, D)

    K_lo_from_hi = _transfer_matrix(times, upper, lower, D)
    K_hi_from_lo = _transfer_matrix(times, lower, upper, D)

    u, v = base_lo, base_hi
    sum_lo = base_lo.copy()
    sum_hi = base_hi.copy()
    sup_last = max(np.abs(u).max(), np.abs(v).max())
    levels = 1
    limit = n_cap if N is None else int(N)
    if limit < 1:
        raise DomainError("N must be >= 1")
    while levels < limit:
        u, v = grid.dt * (K_lo_from_hi @ v), grid.dt * (K_hi_from_lo @ u)
        sign = -1.0 if levels % 2 else 1.0
        sum_lo += sign * u
        sum_hi += sign * v
        sup_last = max(np.abs(u).max(), np.abs(v).max())
        levels += 1
        if N is None and sup_last <= conv_tol:
            break
    if sup_last > conv_tol:
        raise ConvergenceError(
            f"moving-boundary series not settled after {levels} levels "
            f"(last-level sup {sup_last:.3e} > conv_tol {conv_tol:g}); "
            "the alternating sum is assumed convergent but has not reached "
            "tolerance on this grid",
            context={"levels": levels, "sup_last": sup_last},
        )
    tag = f"moving-{levels}"
    return (
        DensityCurve(times, sum_lo, tag, levels),
        DensityCurve(times, sum_hi, tag, levels),
    )


def ftwo_moving(
    p: ProcessSpec,
    x0,
    mb: MovingBoundaries,
    grid: TimeGrid,
    N=None,
    target="lower",
    conv_tol=1e-8,
    n_cap=400,
) -> DensityCurve:
    """Absorption density at one moving boundary (see
    :func:`ftwo_moving_pair`)."""
    lo, hi = ftwo_moving_pair(p, x0, mb, grid, N, conv_tol, n_cap)
    if target == "lower":
        return lo
    if target == "upper":
        return hi
    raise DomainError("target must be 'lower' or 'upper'")
