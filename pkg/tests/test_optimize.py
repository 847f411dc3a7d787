import json

import numpy as np
import pytest
from scipy import integrate

from robust_inversion.errors import NoBracketError
from robust_inversion.optimize import (
    FIG2A_OMEGA_MAX,
    ComparisonSurface,
    comparison_surface,
    fig2_protocols,
    find_alpha_star,
    scan_alpha,
)
from robust_inversion.pulses import omega_max_robust_alpha
from robust_inversion.schedules import RobustAlphaSchedule
from robust_inversion.sensitivity import reduced_integral, systematic_sensitivity_general

# frozen; reproduced independently by test_alpha_star_independent_oracle
ALPHA_STAR = -0.20574557977560035


def test_alpha_star_value():
    a = find_alpha_star()
    assert a == pytest.approx(ALPHA_STAR, abs=1e-11)
    assert abs(reduced_integral(a)) < 1e-12


def test_alpha_star_independent_oracle():
    # plain bisection of a dense trapezoid rule in the angle variable z = cos(phi)
    phi = np.linspace(0.0, np.pi, 20001)
    z = np.cos(phi)

    def f(a):
        g = np.cos(np.pi * z / 2) * np.cos(np.pi * z - 2 * a * np.sin(np.pi * z))
        return integrate.trapezoid(g, phi)

    lo, hi = -0.3, -0.1
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if f(lo) * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    assert 0.5 * (lo + hi) == pytest.approx(ALPHA_STAR, abs=1e-10)


@pytest.mark.parametrize("W", [0.25, 0.5, 1.0])
def test_alpha_star_ignores_width(W):
    assert find_alpha_star(W, (-0.5, 0.0)) == pytest.approx(ALPHA_STAR, abs=1e-11)


def test_alpha_star_nulls_general_path():
    for T, W in ((1.0, 1.0), (3.0, 0.5)):
        qs = systematic_sensitivity_general(RobustAlphaSchedule(T, W, ALPHA_STAR))
        assert qs < 1e-8 * (W * T) ** 2


def test_no_bracket():
    with pytest.raises(NoBracketError):
        find_alpha_star(search_interval=(-0.1, 0.0))
    with pytest.raises(ValueError):
        find_alpha_star(search_interval=(0.0, -0.5))


def test_scan_lists_zeros_by_magnitude():
    scan = scan_alpha(np.linspace(-4, 4, 401))
    assert scan.zeros[0] == pytest.approx(ALPHA_STAR, abs=1e-11)
    assert np.all(np.diff(np.abs(scan.zeros)) > 0)
    assert len(scan.zeros) == 5
    for a in scan.zeros:
        assert abs(reduced_integral(a)) < 1e-12


def test_scan_peak_column():
    scan = scan_alpha([-0.5, -0.2, 0.0], W=0.5, T=2.0)
    expected = [omega_max_robust_alpha(2.0, 0.5, a) for a in (-0.5, -0.2, 0.0)]
    np.testing.assert_allclose(scan.omega_max_wt, np.array(expected) * 1.0, rtol=1e-14)


def test_scan_outputs(tmp_path):
    scan = scan_alpha(np.linspace(-0.3, -0.1, 5))
    path = tmp_path / "s.csv"
    scan.write_csv(path)
    assert path.read_text().splitlines()[0] == "alpha,qs_scaled,omega_max_wt"
    data = json.loads(scan.to_json())
    assert data["stars"][0][1] == pytest.approx(14.779, abs=1e-3)
    with pytest.raises(ValueError):
        scan_alpha([])


def test_fig2_protocol_parameters():
    (flat, robust), labels = fig2_protocols("fig2a")
    assert labels == ["flat-pi", "robust-alpha"]
    assert flat.duration == pytest.approx(0.638e-6, rel=2e-3)
    assert flat.omega_max == pytest.approx(FIG2A_OMEGA_MAX)
    assert robust.omega_max == pytest.approx(FIG2A_OMEGA_MAX, rel=1e-3)
    (flat_b, _), _ = fig2_protocols("fig2b")
    assert flat_b.omega_max / (2e6 * np.pi) == pytest.approx(0.167, abs=1e-3)
    with pytest.raises(ValueError):
        fig2_protocols("fig3")


def test_surface_engines_agree_for_small_perturbations():
    (flat, robust), labels = fig2_protocols("fig2a", 400)
    kw = dict(gamma_d_sq_range=(0.0, 2e3), delta0_range=(-2e4, 2e4), n_grid=3, labels=labels)
    lin = comparison_surface([flat, robust], engine="lindblad", n_steps=800, **kw)
    per = comparison_surface([flat, robust], engine="perturbative", **kw)
    np.testing.assert_allclose(lin.p1, per.p1, atol=1e-5)
    with pytest.raises(ValueError):
        comparison_surface([flat], engine="magic")


def test_dominance_helpers(tmp_path):
    p1 = np.array([[[0.9, 0.5, 0.2]], [[0.8, 0.6, 0.7]]])
    surf = ComparisonSurface(np.array([0.0]), np.array([-1.0, 0.0, 1.0]), p1, ["a", "b"], "lindblad")
    np.testing.assert_array_equal(surf.dominated_mask(0), [[False, True, True]])
    assert surf.dominated_fraction(1) == pytest.approx(1 / 3)
    b = surf.dominance_boundary()
    assert b.shape == (1, 2)
    assert b[0, 1] == pytest.approx(-0.5)
    path = tmp_path / "surf.csv"
    surf.write_csv(path)
    assert len(path.read_text().splitlines()) == 7
