import json

import numpy as np
import pytest

from robust_inversion.pulses import (
    ControlPulse,
    drive,
    omega_max_robust_alpha,
    peak_rabi,
    pulse_area,
    read_pulse_csv,
    synthesize_pulse,
    write_pulse_csv,
    write_pulse_json,
)
from robust_inversion.schedules import FlatPiSchedule, RobustAlphaSchedule, SmoothSineSchedule


def test_flat_pi_drive_is_constant_and_resonant():
    p = synthesize_pulse(FlatPiSchedule(2.0), 100)
    np.testing.assert_allclose(p.rabi, np.pi / 2.0, rtol=1e-15)
    assert np.all(p.detuning == 0.0)
    assert pulse_area(p) == np.pi


def test_smooth_sine_drive_profile():
    s = SmoothSineSchedule(1.0, 0.5)
    p = synthesize_pulse(s, 400)
    assert np.all(p.detuning == 0.0)
    # zero outside the ramp, cosine-shaped inside
    out = (p.grid < s.t1) | (p.grid > s.t2)
    assert np.all(p.rabi[out] == 0.0)
    assert p.rabi_at(0.5) == pytest.approx(np.pi**2 / (2 * 0.5))
    assert pulse_area(p) == pytest.approx(np.pi, rel=1e-12)


def test_robust_alpha_drive_vanishes_at_ends():
    p = synthesize_pulse(RobustAlphaSchedule(1.0, 1.0, -0.206))
    assert abs(p.rabi[0]) < 1e-12 and abs(p.rabi[-1]) < 1e-12
    assert abs(p.detuning[0]) < 1e-12 and abs(p.detuning[-1]) < 1e-12


def test_robust_alpha_closed_form_matches_generic_path():
    from robust_inversion.pulses import _generic_drive

    s = RobustAlphaSchedule(2.0, 0.75, -0.4)
    t = np.linspace(0.3, 1.7, 57)
    o1, d1 = drive(s, t)
    o2, d2 = _generic_drive(s, t)
    np.testing.assert_allclose(o1, o2, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(d1, d2, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("alpha", [0.0, -0.1, -0.206, -0.5, -1.0])
def test_closed_form_peak_matches_dense_grid(alpha):
    s = RobustAlphaSchedule(1.0, 1.0, alpha)
    t = np.linspace(0.0, 1.0, 200_001)
    dense = np.max(np.abs(drive(s, t)[0]))
    assert omega_max_robust_alpha(1.0, 1.0, alpha) == pytest.approx(dense, rel=1e-9)


def test_refined_peak_for_positive_alpha():
    s = RobustAlphaSchedule(1.0, 1.0, 0.5)
    t = np.linspace(0.0, 1.0, 400_001)
    dense = np.max(np.abs(drive(s, t)[0]))
    assert peak_rabi(s) == pytest.approx(dense, rel=1e-9)
    with pytest.raises(ValueError):
        omega_max_robust_alpha(1.0, 1.0, 0.5)


def test_peak_scales_with_inverse_duration():
    a = omega_max_robust_alpha(1.0, 1.0, -0.206)
    assert omega_max_robust_alpha(3.0, 0.5, -0.206) == pytest.approx(a / 1.5)


def test_robust_alpha_area_regression():
    p = synthesize_pulse(RobustAlphaSchedule(1.0, 1.0, -0.206))
    assert pulse_area(p) == pytest.approx(5.8549444009977885, rel=1e-12)
    # sampled trapezoid agrees to its own discretization error
    sampled = ControlPulse.from_samples(p.grid, p.rabi, p.detuning)
    assert pulse_area(sampled) == pytest.approx(5.8549444009977885, rel=1e-5)


def test_pulse_is_immutable_and_validated():
    p = synthesize_pulse(FlatPiSchedule(1.0), 10)
    with pytest.raises(ValueError):
        p.rabi[0] = 1.0
    with pytest.raises(ValueError):
        ControlPulse.from_samples([0.0, 1.0], [1.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        ControlPulse.from_samples([0.0, 1.0, 0.5], [1.0, 1.0, 1.0], [0.0, 0.0, 0.0])


def test_interpolation_without_schedule():
    p = ControlPulse.from_samples([0.0, 1.0, 2.0], [0.0, 2.0, 0.0], [1.0, 1.0, 3.0])
    assert p.rabi_at(0.5) == pytest.approx(1.0)
    assert p.detuning_at(1.5) == pytest.approx(2.0)
    assert p.duration == 2.0


def test_csv_round_trip(tmp_path):
    p = synthesize_pulse(RobustAlphaSchedule(3e-6, 1.0, -0.206), 200)
    path = tmp_path / "p.csv"
    write_pulse_csv(p, path)
    assert path.read_text().splitlines()[0] == "t,omega,delta"
    q = read_pulse_csv(path)
    np.testing.assert_array_equal(q.grid, p.grid)
    np.testing.assert_array_equal(q.rabi, p.rabi)
    np.testing.assert_array_equal(q.detuning, p.detuning)


def test_json_export(tmp_path):
    p = synthesize_pulse(SmoothSineSchedule(1.0, 0.5), 20)
    path = tmp_path / "p.json"
    write_pulse_json(p, path)
    data = json.loads(path.read_text())
    assert data["family"] == "smooth-sine"
    assert data["W"] == 0.5
    assert len(data["t"]) == 21
    assert data["omega_max"] == pytest.approx(np.pi**2)
