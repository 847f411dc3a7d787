import numpy as np
import pytest

from robust_inversion.errors import SingularityError
from robust_inversion.pulses import drive
from robust_inversion.schedules import (
    FlatPiSchedule,
    InvariantEigenstate,
    RobustAlphaSchedule,
    SmoothSineSchedule,
    invariant_rates,
    lewis_riesenfeld_phase,
    m_phase,
    make_schedule,
)

SCHEDULES = [
    FlatPiSchedule(2.0),
    SmoothSineSchedule(1.0, 1.0),
    SmoothSineSchedule(3.0, 0.5),
    RobustAlphaSchedule(1.0, 1.0, 0.0),
    RobustAlphaSchedule(3.0, 0.5, -0.206),
    RobustAlphaSchedule(1.0, 0.25, 0.3),
]


def _interior(s, n=401):
    """Sample times avoiding the breakpoints, where derivatives have kinks."""
    t = np.linspace(0.0, s.duration, n)[1:-1]
    for b in s.breakpoints:
        t = t[np.abs(t - b) > 1e-3 * s.duration]
    return t


@pytest.mark.parametrize("s", SCHEDULES, ids=lambda s: f"{s.family}-{s.params}")
def test_boundary_angles(s):
    assert s.theta(0.0) == pytest.approx(np.pi, abs=1e-14)
    assert s.theta(s.duration) == pytest.approx(0.0, abs=1e-14)


def test_flat_pi_values():
    s = FlatPiSchedule(2.0)
    assert s.theta(0.5) == pytest.approx(0.75 * np.pi)
    assert s.theta_dot(1.3) == pytest.approx(-np.pi / 2.0)
    assert s.beta(0.7) == pytest.approx(np.pi / 2.0)
    assert not s.satisfies_smooth_boundaries


def test_smooth_sine_ramp_edges():
    s = SmoothSineSchedule(4.0, 0.5)
    assert (s.t1, s.t2) == pytest.approx((1.0, 3.0))
    assert s.breakpoints == pytest.approx((1.0, 3.0))
    assert s.theta(0.5) == pytest.approx(np.pi)
    assert s.theta(3.5) == pytest.approx(0.0)
    assert s.theta(2.0) == pytest.approx(np.pi / 2.0)
    assert s.theta_dot(0.5) == 0.0
    # peak slope at the ramp centre
    assert s.theta_dot(2.0) == pytest.approx(-np.pi**2 / (2 * 0.5 * 4.0))
    assert s.satisfies_smooth_boundaries
    assert SmoothSineSchedule(1.0, 1.0).breakpoints == ()


@pytest.mark.parametrize("W", [0.0, -0.1, 1.5])
def test_width_validation(W):
    with pytest.raises(ValueError):
        SmoothSineSchedule(1.0, W)


def test_duration_validation():
    with pytest.raises(ValueError):
        FlatPiSchedule(0.0)
    with pytest.raises(ValueError):
        make_schedule("gaussian", 1.0)


def test_scalar_and_array_outputs():
    s = RobustAlphaSchedule(1.0, 1.0, -0.2)
    assert isinstance(s.theta(0.3), float)
    assert s.theta(np.array([0.1, 0.2])).shape == (2,)


@pytest.mark.parametrize("s", SCHEDULES, ids=lambda s: f"{s.family}-{s.params}")
def test_angle_derivatives_match_finite_differences(s):
    t = _interior(s)
    h = 1e-6 * s.duration
    fd_theta = (s.theta(t + h) - s.theta(t - h)) / (2 * h)
    fd_beta = (s.beta(t + h) - s.beta(t - h)) / (2 * h)
    scale = np.pi / s.duration
    np.testing.assert_allclose(s.theta_dot(t), fd_theta, atol=1e-6 * scale * 10)
    np.testing.assert_allclose(s.beta_dot(t), fd_beta, atol=1e-6 * scale * 10)


def test_robust_beta_matches_arccos_form():
    # beta = arccos(2 M sin(theta) / sqrt(1 + 4 M^2 sin^2 theta)) for sin(theta) > 0
    for alpha in (-0.5, -0.206, 0.0, 0.4):
        s = RobustAlphaSchedule(1.0, 1.0, alpha)
        t = np.linspace(0.01, 0.99, 97)
        u = 2.0 * s.M(t) * s.sin_theta(t)
        np.testing.assert_allclose(s.beta(t), np.arccos(u / np.sqrt(1 + u * u)), atol=1e-13)
    # alpha = 0 midpoint: M = 1 + 2 alpha cos(pi) = 1, sin(theta) = 1
    s = RobustAlphaSchedule(1.0, 1.0, 0.0)
    assert s.beta(0.5) == pytest.approx(np.arccos(2 / np.sqrt(5)), abs=1e-14)
    assert s.beta(0.5) == pytest.approx(0.4636476090008061, abs=1e-14)


def test_robust_alpha_endpoints_have_beta_pi_half():
    s = RobustAlphaSchedule(1.0, 0.5, -0.206)
    assert s.beta(0.0) == pytest.approx(np.pi / 2)
    assert s.beta(1.0) == pytest.approx(np.pi / 2)


@pytest.mark.parametrize("s", SCHEDULES, ids=lambda s: f"{s.family}-{s.params}")
def test_drive_reproduces_invariance_equations(s):
    t = _interior(s)
    omega, delta = drive(s, t)
    th_dot, b_dot = invariant_rates(s.theta(t), s.beta(t), omega, delta)
    scale = np.pi / s.duration
    np.testing.assert_allclose(th_dot, s.theta_dot(t), atol=1e-12 * scale)
    ok = np.abs(np.sin(s.theta(t))) > 1e-6
    np.testing.assert_allclose(b_dot[ok], s.beta_dot(t)[ok], atol=1e-9 * scale)


def test_eigenstates_orthonormal_on_grid():
    theta, beta = np.meshgrid(np.linspace(0, np.pi, 100), np.linspace(-np.pi, np.pi, 100))
    worst_norm = worst_overlap = 0.0
    for th, b in zip(theta.ravel(), beta.ravel()):
        p = InvariantEigenstate(th, b, "+").amplitudes
        m = InvariantEigenstate(th, b, "-").amplitudes
        worst_norm = max(worst_norm, abs(np.vdot(p, p) - 1), abs(np.vdot(m, m) - 1))
        worst_overlap = max(worst_overlap, abs(np.vdot(p, m)))
    assert worst_norm < 1e-14
    assert worst_overlap < 1e-14


def test_eigenstate_bloch_vector():
    th, b = 1.1, 0.4
    c = InvariantEigenstate(th, b, "+").amplitudes
    rho = np.outer(c, c.conj())
    r = [2 * rho[0, 1].real, -2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real]
    np.testing.assert_allclose(r, [np.sin(th) * np.cos(b), np.sin(th) * np.sin(b), np.cos(th)], atol=1e-15)
    with pytest.raises(ValueError):
        InvariantEigenstate(th, b, "0")


def test_lr_phase_zero_for_beta_pi_half_families():
    for s in (FlatPiSchedule(1.0), SmoothSineSchedule(2.0, 0.5)):
        g = lewis_riesenfeld_phase(s, np.linspace(0, s.duration, 11))
        assert np.all(g == 0.0)


def test_lr_phase_branches_and_order_independence():
    s = RobustAlphaSchedule(1.0, 1.0, -0.206)
    t = np.array([0.9, 0.1, 0.5, 0.0, 1.0])
    gp = lewis_riesenfeld_phase(s, t)
    gm = lewis_riesenfeld_phase(s, t, branch="-")
    np.testing.assert_allclose(gm, -gp)
    assert gp[3] == 0.0
    sorted_t = np.sort(t)
    np.testing.assert_allclose(lewis_riesenfeld_phase(s, sorted_t), gp[np.argsort(t)], atol=1e-13)
    with pytest.raises(ValueError):
        lewis_riesenfeld_phase(s, 1.5)


def test_lr_phase_adaptive_matches_gauss_legendre():
    s = RobustAlphaSchedule(2.0, 0.5, -0.3)
    t_end = 1.37
    x, w = np.polynomial.legendre.leggauss(200)
    # split at the ramp start so the rule sees only smooth pieces
    total = 0.0
    for a, b in ((0.0, s.t1), (s.t1, t_end)):
        tt = 0.5 * (b - a) * (x + 1) + a
        total += 0.5 * (b - a) * np.sum(w * s.phase_rate(tt))
    assert lewis_riesenfeld_phase(s, t_end) == pytest.approx(0.5 * total, abs=1e-10)


def test_m_phase_relation():
    s = RobustAlphaSchedule(1.0, 1.0, 0.2)
    t = np.linspace(0, 1, 9)
    np.testing.assert_allclose(m_phase(s, t), 2 * lewis_riesenfeld_phase(s, t) - s.beta(t), atol=1e-14)


def test_robust_phase_rate_has_no_endpoint_singularity():
    s = RobustAlphaSchedule(1.0, 1.0, -0.206)
    r = s.phase_rate(np.array([0.0, 1e-12, 0.5, 1.0 - 1e-12, 1.0]))
    assert np.all(np.isfinite(r))


def test_generic_drive_singularity_guard():
    class Tilted(FlatPiSchedule):
        def _beta(self, t):
            return np.zeros_like(t)

    with pytest.raises(SingularityError):
        drive(Tilted(1.0), np.linspace(0.1, 0.9, 5))
