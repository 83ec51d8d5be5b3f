"""Special functions behind the Ornstein-Uhlenbeck kernels and eigenfunctions.

Kummer's confluent hypergeometric function 1F1 with complex parameters, the
parabolic cylinder function D_nu, complex log-Gamma, and the solutions
u_s^{+-} of the adjoint generator equation.  Every series evaluator reports a
truncation/cancellation error estimate so that downstream consumers (inverse
Laplace transforms, the spectrum solver) can keep a total error budget.

For strongly oscillatory or strongly cancelling parameter ranges, where no
double-precision power series can deliver the budget, the u-function ratios
are recovered by direct integration of the defining second-order ODE with a
WKB-normalised gauge.  The public entry point for that hybrid is
:func:`ou_u_log_line`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.integrate import IntegrationWarning, quad, solve_ivp
from scipy.special import loggamma as _loggamma

from .errors import DomainError, NumericError

if TYPE_CHECKING:  # pragma: no cover
    from .processes import ProcessSpec

_EPS = float(np.finfo(float).eps)
_LOG2 = math.log(2.0)
_LOG_PI = math.log(math.pi)

# |tau*s| above which the Kummer-series route is not even attempted for the
# u-functions (cancellation makes it hopeless; the ODE gauge takes over).
_SERIES_NU_CAP = 60.0


@dataclass(frozen=True)
class SpecfunResult:
    """Value of a special-function evaluation plus an error estimate.

    ``est_error`` is the estimated *absolute* error magnitude (truncation
    plus rounding/cancellation noise); ``rel_error`` reports it relative to
    the value.
    """

    value: complex
    est_error: float
    terms_used: int

    @property
    def rel_error(self) -> float:
        mag = abs(self.value)
        if mag == 0.0:
            return math.inf if self.est_error > 0 else 0.0
        return self.est_error / mag


def log_gamma(z) -> complex:
    """Principal branch of log Gamma(z) for complex z."""
    return complex(_loggamma(complex(z)))


def _is_nonpositive_int(z: complex) -> bool:
    return z.imag == 0.0 and z.real <= 0.0 and z.real == round(z.real)


def kummer_1f1(a, b, z, rtol=1e-12, max_terms=1000) -> SpecfunResult:
    """Confluent hypergeometric 1F1(a; b; z) by adaptive power series.

    Parameters may all be complex.  The series is summed until the terms are
    negligible and demonstrably shrinking; the returned ``est_error`` covers
    the omitted tail and the rounding noise accumulated through the largest
    intermediate term (which is what limits accuracy when the sum cancels).

    Raises
    ------
    DomainError
        If ``b`` is a non-positive integer (pole of the series).
    NumericError
        If the series does not settle within ``max_terms``, or if ``rtol``
        is given and the certified relative error exceeds it.
    """
    a = complex(a)
    b = complex(b)
    z = complex(z)
    if _is_nonpositive_int(b):
        raise DomainError(f"1F1 pole: b={b} is a non-positive integer")

    total = 1.0 + 0.0j
    term = 1.0 + 0.0j
    peak = 1.0
    k = 0
    converged = False
    while k < max_terms:
        term = term * (a + k) / (b + k) * z / (k + 1)
        total += term
        mag = abs(term)
        if mag > peak:
            peak = mag
        if abs(total) > peak:
            peak = abs(total)
        k += 1
        if term == 0:  # polynomial case: a hit a non-positive integer
            converged = True
            break
        if mag <= 0.25 * _EPS * abs(total):
            ratio_next = abs(a + k) / abs(b + k) * abs(z) / (k + 1)
            if ratio_next < 0.5:
                converged = True
                break
    if not converged:
        raise NumericError(
            "1F1 series did not converge",
            context={"a": a, "b": b, "z": z, "terms": k},
        )
    est = abs(term) + _EPS * peak * max(4.0, 0.5 * k)
    result = SpecfunResult(total, est, k)
    if rtol is not None and est > rtol * max(abs(total), np.finfo(float).tiny):
        raise NumericError(
            f"1F1 cannot certify rtol={rtol:g} (est rel err {result.rel_error:.2e})",
            context={"a": a, "b": b, "z": z, "terms": k},
        )
    return result


def _log_of(value: complex) -> complex:
    if value == 0:
        return complex(-math.inf, 0.0)
    return complex(np.log(complex(value)))


def _loggamma_poleaware(q: complex) -> complex:
    """log Gamma(q) returning +inf at the poles (scipy yields nan there),
    so that 1/Gamma factors vanish cleanly in log-space composition."""
    if _is_nonpositive_int(q):
        return complex(math.inf, 0.0)
    return log_gamma(q)


def _d_scaled_log_integral(nu: complex, z: float):
    """log of e^{z^2/4} D_nu(z) through the Laplace-type integral
    (1/Gamma(-nu)) int_0^inf t^{-nu-1} e^{-t^2/2 - z t} dt, valid for
    Re nu < 0.

    In exponential variables the integrand is smooth and positive for real
    orders, so this route has none of the cancellation that kills the
    power-series decomposition for very negative nu with z > 0.
    """
    nu = complex(nu)
    z = float(z)

    def integrand(u):
        if u >= 300.0:
            return 0.0 + 0.0j
        eu = math.exp(u)
        expo = -nu * u - 0.5 * eu * eu - z * eu
        if expo.real < -745.0:
            return 0.0 + 0.0j
        return np.exp(expo)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        re, re_err = quad(
            lambda u: integrand(u).real, -np.inf, np.inf, limit=400, epsabs=0.0, epsrel=1e-13
        )
        if nu.imag == 0.0:
            total = complex(re)
            err = re_err
        else:
            im, im_err = quad(
                lambda u: integrand(u).imag, -np.inf, np.inf, limit=400, epsabs=0.0, epsrel=1e-13
            )
            total = complex(re, im)
            err = math.hypot(re_err, im_err)
    if total == 0:
        return complex(-math.inf, 0.0), math.inf, 300
    rel = err / abs(total) + 8.0 * _EPS
    return _log_of(total) - log_gamma(-nu), rel, 300


def _d_scaled_log_cosine(nu: complex, z: float):
    """log of e^{z^2/4} D_nu(z) through the oscillatory representation
    sqrt(2/pi) e^{z^2/2} int_0^inf t^nu e^{-t^2/2} cos(z t - nu pi/2) dt,
    valid for Re nu > -1.  Complements the Laplace-type route on the other
    half of the order plane."""
    nu = complex(nu)
    z = float(z)
    phase = 0.5 * math.pi * nu

    def integrand(t):
        if t <= 0.0:
            return 0.0 + 0.0j
        return np.exp(nu * np.log(t) - 0.5 * t * t) * np.cos(z * t - phase)

    t_peak = max(math.sqrt(max(nu.real, 0.0)), 1e-3)
    peak_mag = abs(np.exp(nu * np.log(t_peak) - 0.5 * t_peak * t_peak)) * math.exp(
        abs(nu.imag) * 0.5 * math.pi
    )
    eps_abs = max(16.0 * _EPS * peak_mag, 1e-300)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        re, re_err = quad(
            lambda t: integrand(t).real, 0.0, np.inf, limit=400, epsabs=eps_abs, epsrel=1e-13
        )
        im, im_err = quad(
            lambda t: integrand(t).imag, 0.0, np.inf, limit=400, epsabs=eps_abs, epsrel=1e-13
        )
    total = complex(re, im)
    # rounding floor: the integrand peak limits attainable absolute accuracy
    err = max(math.hypot(re_err, im_err), 32.0 * _EPS * peak_mag)
    if total == 0:
        return complex(-math.inf, 0.0), math.inf, 300
    rel = err / abs(total) + 8.0 * _EPS
    logval = 0.5 * math.log(2.0 / math.pi) + 0.5 * z * z + _log_of(total)
    return logval, rel, 300


def _d_scaled_log(nu: complex, z: float):
    """log of e^{z^2/4} D_nu(z) with an error estimate.

    Returns ``(logval, rel_err, terms)``.  The Gaussian factor of D_nu is
    removed analytically, so the result stays representable where D_nu alone
    would over- or underflow.  Composition happens in log space because the
    Gamma prefactors leave double range for large |nu|.  When the even/odd
    split cancels too deeply the integral representations take over
    (Laplace-type for Re nu < -1/2, oscillatory-cosine otherwise).
    """
    nu = complex(nu)
    z = float(z)
    if nu == 0:  # D_0(z) = e^{-z^2/4} identically
        return complex(0.0), 4.0 * _EPS, 0
    w = 0.5 * z * z
    f1 = kummer_1f1(-0.5 * nu, 0.5, w, rtol=None)
    f2 = kummer_1f1(0.5 * (1.0 - nu), 1.5, w, rtol=None)
    base = 0.5 * nu * _LOG2
    log_a1 = base + 0.5 * _LOG_PI - _loggamma_poleaware(0.5 * (1.0 - nu)) + _log_of(f1.value)
    log_a2 = (
        base
        + 0.5 * (_LOG_PI + _LOG2)
        + _log_of(z)
        - _loggamma_poleaware(-0.5 * nu)
        + _log_of(f2.value)
    )
    terms = f1.terms_used + f2.terms_used
    if log_a1.real == -math.inf and log_a2.real == -math.inf:
        return complex(-math.inf, 0.0), 0.0, terms

    # order so that the dominant piece comes first
    flip = log_a2.real > log_a1.real
    if flip:
        log_a1, log_a2 = log_a2, log_a1
    delta = log_a2 - log_a1
    small = np.exp(delta) if delta.real > -745.0 else 0.0
    diff = (small - 1.0) if flip else (1.0 - small)
    noise = sum(abs(la) for la in (log_a1, log_a2) if math.isfinite(la.real))
    rel_components = f1.rel_error + f2.rel_error + _EPS * (4.0 + noise)
    if diff == 0:
        rel = math.inf
        logval = complex(-math.inf, 0.0)
    else:
        cancel = (1.0 + abs(small)) / abs(diff)
        rel = rel_components * cancel
        logval = log_a1 + _log_of(diff)
    if rel > 1e-11 and abs(nu.imag) <= 20.0:
        if nu.real < -0.5:
            better = _d_scaled_log_integral(nu, z)
        else:
            better = _d_scaled_log_cosine(nu, z)
        if better[1] < rel:
            return better
    return logval, rel, terms


def parabolic_cylinder_d(nu, z, rtol=None) -> SpecfunResult:
    """Parabolic cylinder function D_nu(z) for complex order, real argument.

    Evaluated through the even/odd 1F1 decomposition; the error estimate of
    the two Kummer pieces (including their mutual cancellation) is
    propagated.  If ``rtol`` is given, a result that cannot be certified to
    that relative accuracy raises :class:`NumericError`.
    """
    z = float(z)
    logval, rel, terms = _d_scaled_log(complex(nu), z)
    logval = logval - 0.25 * z * z
    if logval.real == -math.inf:
        value = 0.0 + 0.0j
        est = 0.0
    else:
        value = complex(np.exp(logval))
        est = abs(value) * rel
    if rtol is not None and rel > rtol:
        raise NumericError(
            f"D_nu cannot certify rtol={rtol:g} (est rel err {rel:.2e})",
            context={"nu": complex(nu), "z": z},
        )
    return SpecfunResult(value, est, terms)


def u_pm(p: "ProcessSpec", sign, s, y0) -> SpecfunResult:
    """Solution u_s^{+-}(y0) = e^{y0^2/4b^2} D_{-tau s}(+- y0/b) of the
    adjoint generator equation for the Ornstein-Uhlenbeck process.

    The Gaussian prefactor is combined with the internal factor of D
    analytically before exponentiation, so large ``|y0|/b`` does not
    overflow.  ``sign`` is +1 or -1.
    """
    if getattr(p, "kind", None) != "ou":
        raise DomainError("u_pm is defined for the OU process only")
    sign = int(sign)
    if sign not in (-1, 1):
        raise DomainError("sign must be +1 or -1")
    nu = -p.tau * complex(s)
    z = sign * float(y0) / p.b
    logval, rel, terms = _d_scaled_log(nu, z)
    if logval.real == -math.inf:
        return SpecfunResult(0.0 + 0.0j, 0.0, terms)
    value = complex(np.exp(logval))
    est = abs(value) * rel if math.isfinite(abs(value)) else math.inf
    return SpecfunResult(value, est, terms)


def _wkb_slope(p: "ProcessSpec", s: complex, y: float):
    """Log-derivative of the minimal-at-minus-infinity solution, with the
    first WKB correction.  Used to seed the ODE gauge."""
    D, tau = p.D, p.tau
    disc = np.sqrt((y / (D * tau)) ** 2 + 4.0 * s / D + 0.0j)
    m0 = 0.5 * (y / (D * tau) + disc)
    dm0 = 0.5 * (1.0 / (D * tau) + y / ((D * tau) ** 2 * disc))
    return m0 - dm0 / disc


def _ou_log_profile_ode(p: "ProcessSpec", s: complex, points: np.ndarray) -> np.ndarray:
    """log u^-_s at ``points`` up to one common additive constant.

    Integrates the adjoint equation D u'' - (y/tau) u' - s u = 0 rightward
    from deep inside the asymptotic region, in the gauge u = e^{kappa y} w
    so that w stays within double range for large |s|.
    """
    D, tau = p.D, p.tau
    b = p.b
    pts = np.asarray(points, dtype=float)
    order = np.argsort(pts)
    sorted_pts = pts[order]

    # run-in length: enough decay of the unwanted mode before the first point
    y0 = sorted_pts[0] - 2.0 * b
    decay = 0.0
    while decay < 30.0 and y0 > sorted_pts[0] - 60.0 * b:
        disc = np.sqrt((y0 / (D * tau)) ** 2 + 4.0 * s / D + 0.0j)
        decay += max(disc.real, 1e-12) * 0.25 * b
        y0 -= 0.25 * b
    kappa = _wkb_slope(p, s, 0.5 * (y0 + sorted_pts[-1]))

    def rhs(y, state):
        # gauge u = e^{kappa (y - y0)} w:
        #   D w'' + (2 D kappa - y/tau) w' + (D kappa^2 - kappa y/tau - s) w = 0
        w = state[0] + 1j * state[1]
        dw = state[2] + 1j * state[3]
        ddw = ((y / tau - 2.0 * D * kappa) * dw + (kappa * y / tau + s - D * kappa * kappa) * w) / D
        return [dw.real, dw.imag, ddw.real, ddw.imag]

    m_init = _wkb_slope(p, s, y0) - kappa
    freq = abs(np.sqrt(s / D + 0.0j)) + abs(kappa) + 1.0 / b
    sol = solve_ivp(
        rhs,
        (y0, sorted_pts[-1]),
        [1.0, 0.0, m_init.real, m_init.imag],
        t_eval=sorted_pts,
        method="DOP853",
        rtol=1e-12,
        atol=1e-250,  # effectively pure relative control; 0 stalls the stepper
        first_step=min(0.05 / freq, 0.25 * (sorted_pts[-1] - y0)),
    )
    if not sol.success:  # pragma: no cover - defensive
        raise NumericError("adjoint-equation integration failed", context={"s": s})
    w = sol.y[0] + 1j * sol.y[1]
    if np.any(w == 0):
        raise NumericError("u-profile hit an exact zero", context={"s": s})
    logs = kappa * (sorted_pts - y0) + np.log(w)
    out = np.empty_like(logs)
    out[order] = logs
    return out


def ou_u_log_line(p: "ProcessSpec", s, points, rtol=1e-11) -> np.ndarray:
    """log u^-_s(y) at the given shifted positions, one common gauge.

    Uses the 1F1 decomposition when its certified error meets ``rtol`` at
    every point, and the WKB-gauged ODE integration otherwise.  Only
    *differences* of the returned logs are meaningful on the ODE branch
    (the additive constant is arbitrary); all consumers form ratios.
    """
    s = complex(s)
    pts = np.asarray(points, dtype=float)
    nu = -p.tau * s
    if abs(nu) <= _SERIES_NU_CAP:
        logs = np.empty(pts.shape, dtype=complex)
        ok = True
        for i, y in enumerate(pts):
            lv, rel, _ = _d_scaled_log(nu, -y / p.b)
            if not (rel <= rtol) or lv.real == -math.inf:
                ok = False
                break
            logs[i] = lv
        if ok:
            return logs
    return _ou_log_profile_ode(p, s, pts)
