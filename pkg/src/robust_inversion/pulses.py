"""
Drive synthesis by inverse engineering.

Given an angle trajectory the Rabi frequency and detuning follow from

    Omega = -theta_dot / sin(beta)
    Delta = theta_dot cot(beta) cot(theta) - beta_dot

For the robust-alpha family the closed forms

    Omega = -theta_dot sqrt(1 + 4 M^2 sin^2 theta)
    Delta = 2 theta_dot cos(theta) [M + (1 - 4 alpha + 6 alpha cos 2 theta) / (1 + 4 M^2 sin^2 theta)]

are used directly. All frequencies are angular (rad/s).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, optimize

from .errors import SingularityError
from .schedules import (
    AngleSchedule,
    FlatPiSchedule,
    RobustAlphaSchedule,
    SmoothSineSchedule,
)

DEFAULT_SAMPLES = 2000


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def drive(s: AngleSchedule, t):
    """Rabi frequency and detuning ``(Omega(t), Delta(t))`` realizing schedule ``s``."""
    arr = np.asarray(t, dtype=float)
    if isinstance(s, RobustAlphaSchedule):
        omega, delta = _robust_alpha_drive(s, arr)
    else:
        omega, delta = _generic_drive(s, arr)
    if arr.ndim == 0:
        return float(omega), float(delta)
    return omega, delta


def _robust_alpha_drive(s: RobustAlphaSchedule, t):
    th = s._theta(t)
    th_dot = s._theta_dot(t)
    sin_th = s._sin_theta(t)
    M = s._M(t)
    q = 1.0 + 4.0 * M * M * sin_th * sin_th
    omega = -th_dot * np.sqrt(q)
    bracket = M + (1.0 - 4.0 * s.alpha + 6.0 * s.alpha * np.cos(2.0 * th)) / q
    delta = 2.0 * th_dot * np.cos(th) * bracket
    return omega, delta


def _generic_drive(s: AngleSchedule, t):
    th_dot = s._theta_dot(t)
    beta = s._beta(t)
    sin_b = np.sin(beta)
    # beta = pi/2 exactly means cot(beta) = 0; avoid the 6e-17 residue of cos(pi/2)
    cos_b = np.where(beta == 0.5 * np.pi, 0.0, np.cos(beta))
    active = th_dot != 0.0
    if np.any(active & (np.abs(sin_b) < 1e-300)):
        raise SingularityError("sin(beta) vanishes where theta_dot is nonzero")
    with np.errstate(divide="ignore", invalid="ignore"):
        omega = np.where(active, -th_dot / sin_b, 0.0)
        coeff = th_dot * cos_b / sin_b
        sin_th = s._sin_theta(t)
        cot_th = np.cos(s._theta(t)) / sin_th
        bad = (coeff != 0.0) & (sin_th == 0.0)
        if np.any(bad):
            raise SingularityError("cot(theta) is indeterminate at theta in {0, pi} with nonzero coefficient")
        delta = np.where(coeff != 0.0, coeff * cot_th, 0.0) - s._beta_dot(t)
    return omega, delta


def omega_max_robust_alpha(T: float, W: float, alpha: float) -> float:
    """Closed-form peak Rabi frequency of the robust-alpha family (valid for alpha <= 0)."""
    if alpha > 0:
        raise ValueError("the closed-form peak holds for alpha <= 0 only; use peak_rabi instead")
    if T <= 0 or not (0 < W <= 1):
        raise ValueError("need T > 0 and 0 < W <= 1")
    return float(np.pi**2 / (2.0 * W * T) * np.sqrt(1.0 + 4.0 * (1.0 + 2.0 * abs(alpha)) ** 2))


def peak_rabi(s: AngleSchedule, n_grid: int = DEFAULT_SAMPLES) -> float:
    """
    Maximum of |Omega(t)| over the continuous profile.

    Closed forms are used for the three built-in families where they are known;
    otherwise the grid argmax is refined by a bounded scalar search.
    """
    if isinstance(s, RobustAlphaSchedule):
        if s.alpha <= 0:
            return omega_max_robust_alpha(s.duration, s.width, s.alpha)
    elif isinstance(s, SmoothSineSchedule):
        return float(np.pi**2 / (2.0 * s.width * s.duration))
    elif isinstance(s, FlatPiSchedule):
        return float(np.pi / s.duration)
    return _refined_peak(s, n_grid)


def _refined_peak(s: AngleSchedule, n_grid: int) -> float:
    t = s.time_grid(n_grid)
    mag = np.abs(drive(s, t)[0])
    i = int(np.argmax(mag))
    lo, hi = t[max(i - 1, 0)], t[min(i + 1, len(t) - 1)]
    res = optimize.minimize_scalar(
        lambda x: -abs(drive(s, x)[0]),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12 * s.duration},
    )
    return max(float(mag[i]), -float(res.fun))


@dataclass(frozen=True)
class ControlPulse:
    """
    Sampled drive on a uniform grid.

    ``schedule`` is kept when the pulse was synthesized from a closed-form
    trajectory; :meth:`rabi_at` and :meth:`detuning_at` then evaluate the
    closed forms, and fall back to linear interpolation of the samples otherwise.
    """

    grid: np.ndarray
    rabi: np.ndarray
    detuning: np.ndarray
    omega_max: float
    source: str = "sampled"
    schedule: AngleSchedule | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("grid", "rabi", "detuning"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (len(self.grid) == len(self.rabi) == len(self.detuning)):
            raise ValueError("grid, rabi and detuning must have equal lengths")
        if len(self.grid) < 2 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing with at least two points")

    @property
    def duration(self) -> float:
        return float(self.grid[-1] - self.grid[0])

    def rabi_at(self, t):
        if self.schedule is not None:
            return drive(self.schedule, t)[0]
        return np.interp(t, self.grid, self.rabi)

    def detuning_at(self, t):
        if self.schedule is not None:
            return drive(self.schedule, t)[1]
        return np.interp(t, self.grid, self.detuning)

    @property
    def params(self) -> dict:
        if self.schedule is not None:
            return self.schedule.params
        return {"family": self.source, "T": self.duration, "W": None, "alpha": None}

    @classmethod
    def from_samples(cls, grid, rabi, detuning, source: str = "sampled") -> "ControlPulse":
        rabi = np.asarray(rabi, dtype=float)
        return cls(grid, rabi, detuning, float(np.max(np.abs(rabi))), source)


def synthesize_pulse(s: AngleSchedule, n_samples: int = DEFAULT_SAMPLES) -> ControlPulse:
    """
    Sample the inverse-engineered drive of ``s`` on ``n_samples + 1`` points.

    Raises
    ------
    SingularityError
        When sin(beta) vanishes with theta_dot nonzero, or cot(theta) is
        needed at an interior theta in {0, pi}.
    """
    t = s.time_grid(n_samples)
    omega, delta = drive(s, t)
    return ControlPulse(t, omega, delta, peak_rabi(s), s.family, s)


def pulse_area(p: ControlPulse) -> float:
    """Time integral of the Rabi frequency."""
    if p.schedule is None:
        return float(integrate.trapezoid(p.rabi, p.grid))
    s = p.schedule
    if isinstance(s, FlatPiSchedule):
        return float(np.pi)
    val, _ = integrate.quad(
        p.rabi_at,
        0.0,
        s.duration,
        points=list(s.breakpoints) or None,
        epsabs=1e-13,
        epsrel=1e-12,
        limit=200,
    )
    return float(val)


def write_pulse_csv(p: ControlPulse, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "omega", "delta"])
        for row in zip(p.grid, p.rabi, p.detuning):
            writer.writerow([fmt_float(v) for v in row])


def read_pulse_csv(path) -> ControlPulse:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return ControlPulse.from_samples(data[:, 0], data[:, 1], data[:, 2], source=Path(path).stem)


def pulse_to_dict(p: ControlPulse) -> dict:
    meta = dict(p.params)
    meta["omega_max"] = p.omega_max
    meta["t"] = p.grid.tolist()
    meta["omega"] = p.rabi.tolist()
    meta["delta"] = p.detuning.tolist()
    return meta


def write_pulse_json(p: ControlPulse, path) -> None:
    Path(path).write_text(json.dumps(pulse_to_dict(p), indent=2) + "\n")
