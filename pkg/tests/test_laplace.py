import math
import warnings

import numpy as np
import pytest

import fptcage as F

from .conftest import FREE, OU


def test_talbot_exponential_pair():
    K = F.LaplaceKernel(lambda s: 1.0 / (s + 1.0))
    assert abs(F.invert_talbot(K, 1.0) - math.exp(-1.0)) < 1e-9


def test_talbot_ramp_pair():
    assert abs(F.invert_talbot(lambda s: 1.0 / s**2, 3.0) - 3.0) < 1e-9


def test_talbot_free_kernel_vs_closed_form(free_p):
    # closed form stated independently: Levy density with tau = (B-A)^2/(2D)
    A, B, D, t = 5.0, 0.0, 1.0, 4.0
    tau = (B - A) ** 2 / (2.0 * D)
    closed = math.sqrt(tau / (2.0 * math.pi * t**3)) * math.exp(-tau / (2.0 * t))
    K = F.LaplaceKernel(lambda s: F.fpt_one_boundary_laplace(free_p, A, B, s))
    assert abs(F.invert_talbot(K, t) - closed) < 1e-8


def test_talbot_domain_errors():
    K = F.LaplaceKernel(lambda s: 1.0 / (s + 1.0))
    with pytest.raises(F.DomainError):
        F.invert_talbot(K, 0.0)
    bad = F.LaplaceKernel(lambda s: 1.0 / (s - 2.0), domain_note=2.0)
    with pytest.raises(F.DomainError):
        F.invert_talbot(bad, 1.0)


def test_talbot_imaginary_residue_flags_asymmetric_kernel():
    with pytest.warns(F.AccuracyWarning, match="residue"):
        F.invert_talbot(lambda s: 1.0 / (s + 1.0 + 0.5j), 1.0)


def test_talbot_kernel_failure_propagates():
    def broken(s):
        raise F.NumericError("boom")

    with pytest.raises(F.NumericError):
        F.invert_talbot(broken, 1.0)


def test_gaver_stehfest_exponential():
    K = F.LaplaceKernel(lambda s: 1.0 / (s + 1.0))
    assert abs(F.invert_gaver_stehfest(K, 1.0) - math.exp(-1.0)) < 1e-6


def test_gaver_stehfest_constant():
    K = F.LaplaceKernel(lambda s: 1.0 / s)
    for t in (0.3, 1.0, 17.0):
        assert abs(F.invert_gaver_stehfest(K, t) - 1.0) < 1e-8


def test_gaver_stehfest_order_validation():
    K = F.LaplaceKernel(lambda s: 1.0 / s)
    with pytest.raises(F.DomainError):
        F.invert_gaver_stehfest(K, 1.0, order=13)
    with pytest.raises(F.DomainError):
        F.invert_gaver_stehfest(K, 1.0, order=2)


def test_gaver_stehfest_warns_on_oscillatory_kernel():
    # transform of cos(t): poles off the real axis defeat real-node sampling
    K = F.LaplaceKernel(lambda s: s / (s * s + 1.0))
    with pytest.warns(F.AccuracyWarning, match="disagree"):
        F.invert_gaver_stehfest(K, float(math.pi))


def test_gaver_stehfest_vs_talbot_on_ou_two_boundary(ou_p):
    K = F.LaplaceKernel(lambda s: F.ftwo_laplace(ou_p, OU["x0"], OU["L"], s, 2))
    tb = F.invert_talbot(K, 1.0, check_conjugate=False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", F.AccuracyWarning)
        gs = F.invert_gaver_stehfest(K, 1.0, order=16)
    assert abs(gs - tb) < 1e-4


def test_sinh_ratio_series_matches_talbot(free_p):
    A, B = 8.0, 3.0
    K = F.LaplaceKernel(lambda s: np.sinh(B * np.sqrt(s + 0j)) / np.sinh(A * np.sqrt(s + 0j)))
    v_series = F.sinh_ratio_series(B, A, 10.0)
    v_talbot = F.invert_talbot(K, 10.0)
    assert abs(v_series - v_talbot) < 1e-8


def test_three_engines_agree_on_two_boundary_transform():
    # sinh(3 sqrt(s))/sinh(8 sqrt(s)): residue series vs both inversion engines
    A, B = 8.0, 3.0
    K = F.LaplaceKernel(lambda s: np.sinh(B * np.sqrt(s + 0j)) / np.sinh(A * np.sqrt(s + 0j)))
    for t in np.geomspace(0.5, 200.0, 12):
        ref = F.sinh_ratio_series(B, A, float(t))
        assert abs(F.invert_talbot(K, float(t)) - ref) < 1e-8
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", F.AccuracyWarning)
            gs = F.invert_gaver_stehfest(K, float(t))
        assert abs(gs - ref) < 1e-4


def test_sinh_ratio_time_integral_three_eighths():
    # integral over (0, inf) equals the s -> 0 transform limit B/A = 0.375;
    # per-evaluation automatic mode counts keep truncation below 1e-14
    from scipy.integrate import quad

    val = quad(lambda t: F.sinh_ratio_series(3.0, 8.0, t), 0.0, 300.0, limit=400)[0]
    val += quad(lambda t: F.sinh_ratio_series(3.0, 8.0, t), 300.0, 3000.0, limit=100)[0]
    assert abs(val - 0.375) < 1e-8


def test_sinh_ratio_time_integral_near_delta():
    # B/A = 0.999: the mass collapses toward t = 0 but still integrates to B/A
    from scipy.integrate import quad

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", F.AccuracyWarning)
        val = sum(
            quad(lambda t: F.sinh_ratio_series(7.992, 8.0, t), a, b, limit=400)[0]
            for a, b in [(0, 1e-4), (1e-4, 1e-2), (1e-2, 1), (1, 50), (50, 400)]
        )
    assert abs(val - 0.999) < 1e-6


def test_sinh_ratio_first_omitted_envelope(rng):
    # doubling the mode count moves the result by at most a few envelope
    # units of the first omitted term, once the exponential factors decay
    for _ in range(60):
        A = rng.uniform(2.0, 10.0)
        B = rng.uniform(0.1, 0.9) * A
        M = int(rng.integers(2, 30))
        t_min = A * A * math.log(4.0) / ((2 * M + 3) * math.pi**2)
        t = rng.uniform(t_min, 10.0 * t_min)
        r1 = F.sinh_ratio_series(B, A, t, M=M, warn_tol=np.inf)
        r2 = F.sinh_ratio_series(B, A, t, M=2 * M, warn_tol=np.inf)
        envelope = 2.0 * (M + 1) * math.pi / A**2 * math.exp(-(((M + 1) * math.pi / A) ** 2) * t)
        assert abs(r1 - r2) <= 3.0 * envelope + 1e-15


def test_sinh_ratio_truncation_warning():
    with pytest.warns(F.AccuracyWarning, match="omitted"):
        F.sinh_ratio_series(3.0, 8.0, 0.05, M=3)


def test_sinh_ratio_validation():
    with pytest.raises(F.DomainError):
        F.sinh_ratio_series(8.0, 3.0, 1.0)
    with pytest.raises(F.DomainError):
        F.sinh_ratio_series(3.0, 8.0, -1.0)
    with pytest.raises(F.DomainError):
        F.sinh_ratio_series(3.0, 8.0, 1.0, M=0)
