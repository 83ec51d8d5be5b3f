import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

import fptcage as F

from . import oracles
from .conftest import BIASED, FREE

SQRT4PI = math.sqrt(4.0 * math.pi)


# -- ProcessSpec ---------------------------------------------------------


def test_spec_validation():
    with pytest.raises(F.DomainError):
        F.ProcessSpec.free(0.0)
    with pytest.raises(F.DomainError):
        F.ProcessSpec.biased(1.0, alpha=0.1, v=0.1)
    with pytest.raises(F.DomainError):
        F.ProcessSpec.biased(1.0)
    with pytest.raises(F.DomainError):
        F.ProcessSpec.ou(1.0, -1.0, 0.0)
    with pytest.raises(F.DomainError):
        F.ProcessSpec("free", 1.0, gamma=2.0)


def test_derived_quantities_never_disagree():
    p = F.ProcessSpec.biased(2.0, alpha=-0.6, gamma=2.0)
    assert p.v == -0.3
    q = F.ProcessSpec.biased(2.0, v=-0.3, gamma=2.0)
    assert q.alpha == -0.6 and q.v == -0.3
    ou = F.ProcessSpec.ou(1.0, 4.0, 1.0, gamma=2.0)
    assert ou.tau == 0.5 and ou.b2 == 0.5 and ou.b == math.sqrt(0.5)
    with pytest.raises(F.DomainError):
        _ = ou.v


# -- transition density --------------------------------------------------


def test_transition_density_zero_displacement(free_p):
    # 1/sqrt(4 pi) at D = 1, t - t0 = 1
    got = F.transition_density(free_p, 5.0, 1.0, 5.0, 0.0)
    assert abs(got - 1.0 / SQRT4PI) < 1e-15
    assert abs(got - 0.28209479177387814) < 1e-15


def test_transition_density_normalises(free_p):
    val, _ = quad(lambda x: F.transition_density(free_p, x, 2.0, 1.0), -np.inf, np.inf)
    assert abs(val - 1.0) < 1e-10


def test_transition_density_biased_mean_shift():
    p = F.ProcessSpec.biased(1.0, v=-0.3)
    mass, mean = oracles.gaussian_moments(
        lambda x: F.transition_density(p, x, 2.0, 1.0), -40.0, 40.0
    )
    assert abs(mass - 1.0) < 1e-10
    assert abs(mean - (1.0 - 0.6)) < 1e-9


def test_transition_density_domain_errors(free_p, ou_p):
    with pytest.raises(F.DomainError):
        F.transition_density(free_p, 0.0, 1.0, 0.0, 1.0)
    with pytest.raises(F.DomainError):
        F.transition_density(ou_p, 0.0, 1.0, 0.5)


# -- one-boundary Laplace kernel ----------------------------------------


def test_free_kernel_zero_distance(free_p):
    for s in (0.0, 0.37, 2.0 + 1.0j):
        assert F.fpt_one_boundary_laplace(free_p, 4.0, 4.0, s) == 1.0


def test_free_kernel_reference_point(free_p):
    # tau_A = 12.5, s = 0.02: exp(-sqrt(2*12.5*0.02)) = exp(-sqrt(0.5))
    got = F.fpt_one_boundary_laplace(free_p, 5.0, 0.0, 0.02)
    assert abs(got - math.exp(-math.sqrt(0.5))) < 1e-15
    assert abs(got - 0.4930686913952398) < 1e-15


def test_biased_kernel_small_drift_limit(free_p):
    pb = F.ProcessSpec.biased(1.0, v=1e-6)
    for s in (0.05, 1.0):
        a = F.fpt_one_boundary_laplace(pb, 5.0, 0.0, s)
        b = F.fpt_one_boundary_laplace(free_p, 5.0, 0.0, s)
        assert abs(a - b) <= 1e-5 * abs(b)


def test_biased_kernel_total_mass():
    pb = F.ProcessSpec.biased(1.0, v=-0.3)
    for A, B in [(6.0, 0.0), (0.0, 6.0), (2.0, 7.0)]:
        got = F.fpt_one_boundary_laplace(pb, A, B, 0.0)
        expected = math.exp(((B - A) * pb.v - abs(B - A) * abs(pb.v)) / (2.0 * pb.D))
        assert abs(got - expected) < 1e-14
        assert got.real <= 1.0 + 1e-15


def test_kernel_bounds_and_monotonicity(free_p, biased_p, ou_p):
    s_grid = np.linspace(0.0, 10.0, 41)
    cases = [
        (free_p, 5.0, 0.0),
        (biased_p, 6.0, 0.0),
        (biased_p, 6.0, 10.0),
        (ou_p, 1.5, 0.0),
        (ou_p, 1.5, 3.0),
    ]
    for p, A, B in cases:
        vals = np.array(
            [F.fpt_one_boundary_laplace(p, A, B, float(s)).real for s in s_grid]
        )
        assert np.all(vals > 0.0)
        assert np.all(vals <= 1.0 + 1e-12)
        assert np.all(np.diff(vals) <= 1e-12)


def test_free_kernel_semigroup(free_p):
    s = 0.7
    ab = F.fpt_one_boundary_laplace(free_p, 1.0, 3.0, s)
    bc = F.fpt_one_boundary_laplace(free_p, 3.0, 7.5, s)
    ac = F.fpt_one_boundary_laplace(free_p, 1.0, 7.5, s)
    assert abs(ab * bc - ac) < 1e-14


def test_ou_kernel_vs_mpmath(ou_p):
    import mpmath as mp

    def ref(A, B, s):
        tau, b, a = ou_p.tau, ou_p.b, ou_p.a
        sign = -1 if A <= B else 1

        def u(y):
            return mp.e ** (y * y / (4 * b * b)) * mp.pcfd(-tau * mp.mpmathify(s), sign * y / b)

        return complex(u(A - a) / u(B - a))

    for A, B in [(1.5, 0.0), (1.5, 3.0), (0.0, 3.0), (3.0, 0.0)]:
        for s in (0.25, 2.0, 1.0 + 2.0j, -3.0 + 8.0j):
            got = F.fpt_one_boundary_laplace(ou_p, A, B, s)
            want = ref(A, B, s)
            assert abs(got - want) <= 1e-9 * max(abs(want), 1e-300)


# -- one-boundary time kernel -------------------------------------------


def test_free_time_kernel_peak_location(free_p):
    # stationarity of the closed form puts the peak at (B-A)^2/(6D) = 25/6
    t_star = oracles.argmax_of(
        lambda t: F.fpt_one_boundary_time(free_p, 5.0, 0.0, t), 0.5, 20.0
    )
    assert abs(t_star - 25.0 / 6.0) < 1e-4 * (25.0 / 6.0)


def test_free_time_kernel_normalises(free_p):
    val = oracles.heavy_tail_time_integral(
        lambda t: F.fpt_one_boundary_time(free_p, 5.0, 0.0, t)
    )
    assert abs(val - 1.0) < 1e-6


def test_biased_time_kernel_mass_matches_transform():
    # quadrature of the density against the s = 0 transform value, both
    # drift directions
    pb = F.ProcessSpec.biased(1.0, v=-0.3)
    for A, B in [(6.0, 0.0), (0.0, 6.0)]:
        mass = oracles.heavy_tail_time_integral(
            lambda t: F.fpt_one_boundary_time(pb, A, B, t)
        )
        want = F.fpt_one_boundary_laplace(pb, A, B, 0.0).real
        assert abs(mass - want) < 1e-6


def test_time_kernel_domain_errors(free_p):
    with pytest.raises(F.DomainError):
        F.fpt_one_boundary_time(free_p, 5.0, 0.0, 0.0)
    with pytest.raises(F.DomainError):
        F.fpt_one_boundary_time(free_p, 5.0, 5.0, 1.0)


def test_ou_time_kernel_positive_and_cross_checked(ou_p):
    t = 1.5
    tb = F.fpt_one_boundary_time(ou_p, 1.5, 0.0, t)
    K = F.LaplaceKernel(lambda s: F.fpt_one_boundary_laplace(ou_p, 1.5, 0.0, s))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", F.AccuracyWarning)
        gs = F.invert_gaver_stehfest(K, t, order=16)
    assert tb > 0
    assert abs(tb - gs) < 1e-5


# -- moving boundary kernel ---------------------------------------------


def test_moving_kernel_static_limit(free_p):
    traj = F.LinearTrajectory(0.0, 0.0)
    for t in (0.3, 2.0, 9.0):
        k1 = F.moving_boundary_kernel(0.0, 5.0, t, traj, 1.0)
        k2 = F.fpt_one_boundary_time(free_p, 5.0, 0.0, t)
        assert abs(k1 - k2) <= 1e-15 * k2


def test_moving_kernel_reference_value():
    # D=1, A=2, B(t) = 3 + 0.1 t, t0=0, t=1: prefactor 1/sqrt(4 pi),
    # exponent -(3.1-2)^2/4
    traj = F.LinearTrajectory(3.0, 0.1)
    got = F.moving_boundary_kernel(0.0, 2.0, 1.0, traj, 1.0)
    want = 1.0 / SQRT4PI * math.exp(-(1.1**2) / 4.0)
    assert abs(got - want) < 1e-15
    assert abs(got - 0.2084591618228644) < 1e-12


def test_moving_kernel_vanishes_at_start():
    traj = F.LinearTrajectory(3.0, 0.1)
    assert F.moving_boundary_kernel(0.0, 2.0, 1e-9, traj, 1.0) < 1e-200


def test_moving_kernel_domain_errors():
    traj = F.LinearTrajectory(3.0, 0.1)
    with pytest.raises(F.DomainError):
        F.moving_boundary_kernel(1.0, 2.0, 1.0, traj, 1.0)
    coincident = F.LinearTrajectory(2.0, 0.5)
    with pytest.raises(F.DomainError):
        F.moving_boundary_kernel(0.0, 2.0, 1.0, coincident, 1.0)


# -- characteristic times ------------------------------------------------


def test_characteristic_time_free(free_p):
    assert abs(F.characteristic_time(free_p, 0, 5.0, 8.0) - 25.0 / 6.0) < 1e-14
    # n = 1 lands near 20, the scale on which the two-term truncation works
    t1 = F.characteristic_time(free_p, 1, 5.0, 8.0)
    assert abs(t1 - 121.0 / 6.0) < 1e-13
    assert 19.0 < t1 < 21.0


def test_characteristic_time_matches_term_peak(biased_p):
    for n in (0, 1, 2):
        t_star = F.characteristic_time(biased_p, n, BIASED["x0"], BIASED["L"])
        t_num = oracles.argmax_of(
            lambda t: F.f_n_time(biased_p, n, BIASED["x0"], BIASED["L"], t),
            0.3,
            40.0 + 40.0 * n,
        )
        assert abs(t_star - t_num) < 1e-4 * t_star


def test_characteristic_time_drift_free_limit(free_p):
    pb = F.ProcessSpec.biased(1.0, v=1e-6)
    for n in (0, 1, 3):
        a = F.characteristic_time(pb, n, 5.0, 8.0)
        b = F.characteristic_time(free_p, n, 5.0, 8.0)
        assert abs(a - b) <= 1e-9 * b


def test_characteristic_time_domain_errors(free_p, ou_p):
    with pytest.raises(F.DomainError):
        F.characteristic_time(free_p, -1, 5.0, 8.0)
    with pytest.raises(F.DomainError):
        F.characteristic_time(free_p, 0, 9.0, 8.0)
    with pytest.raises(F.DomainError):
        F.characteristic_time(ou_p, 0, 1.0, 3.0)


# -- boundaries ----------------------------------------------------------


def test_boundary_types():
    st = F.StaticBoundaries(8.0)
    assert st.left == 0.0 and st.contains(5.0) and not st.contains(8.0)
    with pytest.raises(F.DomainError):
        F.StaticBoundaries(-1.0)
    mb = F.MovingBoundaries(3.0, 0.2, -0.1)
    assert mb.collapse_time() == pytest.approx(10.0)
    assert mb.gap(5.0) == pytest.approx(1.5)
    with pytest.raises(F.DomainError):
        mb.check_gap(np.linspace(0.0, 12.0, 100))
    expanding = F.MovingBoundaries(3.0, -0.2, 0.1)
    assert expanding.collapse_time() == math.inf
