"""Invariant-based design and robustness analysis of two-level population inversion."""

from .dynamics import (
    EXCITED,
    BlochState,
    EnsembleResult,
    PerturbationSpec,
    TrajectoryResult,
    propagate_bloch,
    propagate_bloch_batch,
    propagate_density_matrix,
    simulate_white_noise_detuning,
)
from .errors import (
    IntegratorError,
    NoBracketError,
    NumericalError,
    PerturbativeRegimeWarning,
    SingularityError,
)
from .optimize import AlphaScan, ComparisonSurface, comparison_surface, fig2_protocols, find_alpha_star, scan_alpha
from .pulses import ControlPulse, drive, omega_max_robust_alpha, peak_rabi, pulse_area, synthesize_pulse
from .schedules import (
    AngleSchedule,
    FlatPiSchedule,
    InvariantEigenstate,
    RobustAlphaSchedule,
    SmoothSineSchedule,
    lewis_riesenfeld_phase,
    m_phase,
    make_flat_pi_schedule,
    make_robust_alpha_schedule,
    make_schedule,
    make_smooth_sine_schedule,
)
from .sensitivity import (
    SensitivityReport,
    analyze,
    bessel_j0,
    bound_product,
    noise_sensitivity,
    predicted_fidelity,
    reduced_integral,
    systematic_sensitivity,
    systematic_sensitivity_family,
    systematic_sensitivity_general,
)

__version__ = "0.1.0"
