"""
Angle trajectories for invariant-based population inversion.

A protocol is specified through the two angles (theta, beta) that
parameterize the eigenvector of the dynamical invariant

    I(t) ~ [[cos theta, sin theta e^{-i beta}],
            [sin theta e^{i beta}, -cos theta]]

The state follows |phi_+(t)> exactly, so theta(0) = pi maps |2> onto
theta(T) = 0, i.e. |1>. The drive that realizes a trajectory is derived in
:mod:`robust_inversion.pulses`.

Three families are provided:

* ``FlatPiSchedule``     theta linear in t, beta = pi/2
* ``SmoothSineSchedule`` sine ramp of relative width W, beta = pi/2
* ``RobustAlphaSchedule`` same theta as the sine ramp, beta chosen so that
  the phase m(t) = 2 gamma_+ - beta follows 2 theta + 2 alpha sin(2 theta)

All evaluators accept scalars or numpy arrays and are vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy import integrate

from .errors import SingularityError

HALF_PI = 0.5 * np.pi


def _wrap(value, scalar: bool):
    return float(value) if scalar else value


@dataclass(frozen=True)
class AngleSchedule:
    """Base class of the closed-form angle trajectories on ``[0, duration]``."""

    duration: float
    family: ClassVar[str] = "generic"

    def __post_init__(self):
        if not np.isfinite(self.duration) or self.duration <= 0:
            raise ValueError(f"duration must be positive, got {self.duration!r}")

    # -- to be provided by each family (array in, array out) -------------
    def _theta(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _theta_dot(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _sin_theta(self, t: np.ndarray) -> np.ndarray:
        return np.sin(self._theta(t))

    def _beta(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _beta_dot(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _phase_rate(self, t: np.ndarray) -> np.ndarray:
        # generic form; families with beta = pi/2 or known cancellations override
        th_dot = self._theta_dot(t)
        beta = self._beta(t)
        sin_th = self._sin_theta(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            singular = th_dot * np.cos(beta) / (np.sin(beta) * sin_th)
        rate = self._beta_dot(t) + np.where(th_dot == 0.0, 0.0, singular)
        if not np.all(np.isfinite(rate)):
            raise SingularityError(
                "Lewis-Riesenfeld phase integrand is unbounded: theta_dot cot(beta)/sin(theta) "
                "does not cancel on this schedule"
            )
        return rate

    # -- public evaluators ------------------------------------------------
    def theta(self, t):
        """Polar angle of the invariant eigenvector."""
        arr = np.asarray(t, dtype=float)
        return _wrap(self._theta(arr), arr.ndim == 0)

    def theta_dot(self, t):
        arr = np.asarray(t, dtype=float)
        return _wrap(self._theta_dot(arr), arr.ndim == 0)

    def sin_theta(self, t):
        """sin(theta(t)), exactly zero where theta sits on 0 or pi by construction."""
        arr = np.asarray(t, dtype=float)
        return _wrap(self._sin_theta(arr), arr.ndim == 0)

    def beta(self, t):
        """Azimuthal angle of the invariant eigenvector."""
        arr = np.asarray(t, dtype=float)
        return _wrap(self._beta(arr), arr.ndim == 0)

    def beta_dot(self, t):
        arr = np.asarray(t, dtype=float)
        return _wrap(self._beta_dot(arr), arr.ndim == 0)

    def phase_rate(self, t):
        """Integrand of the Lewis-Riesenfeld phase, beta_dot + theta_dot cot(beta) / sin(theta)."""
        arr = np.asarray(t, dtype=float)
        return _wrap(self._phase_rate(arr), arr.ndim == 0)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Interior times where the trajectory is only piecewise smooth."""
        return ()

    @property
    def params(self) -> dict:
        return {"family": self.family, "T": self.duration, "W": None, "alpha": None}

    @property
    def satisfies_smooth_boundaries(self) -> bool:
        """Whether theta_dot (hence the Rabi frequency) vanishes at both ends."""
        return False

    def time_grid(self, n: int = 2000) -> np.ndarray:
        """``n + 1`` uniform samples including both endpoints."""
        if n < 1:
            raise ValueError("n must be at least 1")
        return np.linspace(0.0, self.duration, n + 1)


@dataclass(frozen=True)
class FlatPiSchedule(AngleSchedule):
    """theta = pi (T - t) / T with beta = pi/2, i.e. a constant resonant pi pulse."""

    family: ClassVar[str] = "flat-pi"

    def _theta(self, t):
        return np.pi * (self.duration - t) / self.duration

    def _theta_dot(self, t):
        return np.full_like(t, -np.pi / self.duration)

    def _sin_theta(self, t):
        s = np.sin(self._theta(t))
        return np.where((t <= 0.0) | (t >= self.duration), 0.0, s)

    def _beta(self, t):
        return np.full_like(t, HALF_PI)

    def _beta_dot(self, t):
        return np.zeros_like(t)

    def _phase_rate(self, t):
        return np.zeros_like(t)


@dataclass(frozen=True)
class SmoothSineSchedule(AngleSchedule):
    """
    Sine ramp of theta from pi to 0 centred on T/2.

    theta stays at pi on ``[0, t1]`` and at 0 on ``[t2, T]`` with
    ``t1 = (1 - W) T / 2`` and ``t2 = (1 + W) T / 2``; in between

        theta = (pi/2) {1 - sin[pi (2t - T) / (2 W T)]}

    so theta_dot is continuous and vanishes at t1, t2.
    """

    width: float = 1.0
    family: ClassVar[str] = "smooth-sine"

    def __post_init__(self):
        super().__post_init__()
        if not (0.0 < self.width <= 1.0):
            raise ValueError(f"width W must lie in (0, 1], got {self.width!r}")

    @property
    def t1(self) -> float:
        return 0.5 * (1.0 - self.width) * self.duration

    @property
    def t2(self) -> float:
        return 0.5 * (1.0 + self.width) * self.duration

    def _phase_arg(self, t):
        # x in [-pi/2, pi/2] on the ramp, clipped outside it
        x = np.pi * (2.0 * t - self.duration) / (2.0 * self.width * self.duration)
        return np.clip(x, -HALF_PI, HALF_PI)

    def _inside(self, t):
        return np.abs(2.0 * t - self.duration) < self.width * self.duration

    def _theta(self, t):
        return HALF_PI * (1.0 - np.sin(self._phase_arg(t)))

    def _theta_dot(self, t):
        rate = -np.pi**2 / (2.0 * self.width * self.duration) * np.cos(self._phase_arg(t))
        return np.where(self._inside(t), rate, 0.0)

    def _sin_theta(self, t):
        return np.where(self._inside(t), np.sin(self._theta(t)), 0.0)

    def _beta(self, t):
        return np.full_like(t, HALF_PI)

    def _beta_dot(self, t):
        return np.zeros_like(t)

    def _phase_rate(self, t):
        return np.zeros_like(t)

    @property
    def breakpoints(self):
        if self.width == 1.0:
            return ()
        return (self.t1, self.t2)

    @property
    def params(self):
        return {"family": self.family, "T": self.duration, "W": self.width, "alpha": None}

    @property
    def satisfies_smooth_boundaries(self):
        return True


@dataclass(frozen=True)
class RobustAlphaSchedule(SmoothSineSchedule):
    """
    Sine-ramp theta with beta chosen to shape the phase m(t).

    With M = 1 + 2 alpha cos(2 theta),

        beta = arccos(2 M sin(theta) / sqrt(1 + 4 M^2 sin^2(theta)))

    which is evaluated as pi/2 - arctan(2 M sin(theta)); the two are equal
    on the whole real line and the latter is exact at sin(theta) = 0.
    """

    alpha: float = 0.0
    family: ClassVar[str] = "robust-alpha"

    def __post_init__(self):
        super().__post_init__()
        if not np.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite, got {self.alpha!r}")

    def M(self, t):
        arr = np.asarray(t, dtype=float)
        return _wrap(self._M(arr), arr.ndim == 0)

    def _M(self, t):
        return 1.0 + 2.0 * self.alpha * np.cos(2.0 * self._theta(t))

    def _cot_beta(self, t):
        return 2.0 * self._M(t) * self._sin_theta(t)

    def _beta(self, t):
        return HALF_PI - np.arctan(self._cot_beta(t))

    def _beta_dot(self, t):
        # d/dt arccot(u) = -u_dot / (1 + u^2),  u = 2 M sin(theta)
        th = self._theta(t)
        u = self._cot_beta(t)
        u_dot = (
            2.0
            * self._theta_dot(t)
            * np.cos(th)
            * (1.0 - 4.0 * self.alpha + 6.0 * self.alpha * np.cos(2.0 * th))
        )
        return -u_dot / (1.0 + u * u)

    def _phase_rate(self, t):
        # theta_dot cot(beta) / sin(theta) = 2 M theta_dot after cancelling sin(theta)
        return self._beta_dot(t) + 2.0 * self._M(t) * self._theta_dot(t)

    @property
    def params(self):
        return {"family": self.family, "T": self.duration, "W": self.width, "alpha": self.alpha}


def make_flat_pi_schedule(T: float) -> FlatPiSchedule:
    return FlatPiSchedule(float(T))


def make_smooth_sine_schedule(T: float, W: float = 1.0) -> SmoothSineSchedule:
    return SmoothSineSchedule(float(T), float(W))


def make_robust_alpha_schedule(T: float, W: float = 1.0, alpha: float = 0.0) -> RobustAlphaSchedule:
    return RobustAlphaSchedule(float(T), float(W), float(alpha))


def make_schedule(family: str, T: float, W: float = 1.0, alpha: float = 0.0) -> AngleSchedule:
    """Build a schedule from its family name (``flat-pi``, ``smooth-sine``, ``robust-alpha``)."""
    key = family.lower().replace("_", "-")
    if key == "flat-pi":
        return make_flat_pi_schedule(T)
    if key == "smooth-sine":
        return make_smooth_sine_schedule(T, W)
    if key == "robust-alpha":
        return make_robust_alpha_schedule(T, W, alpha)
    raise ValueError(f"unknown schedule family {family!r}")


def invariant_rates(theta, beta, omega, delta):
    """
    Angle velocities implied by a drive, from the invariance condition.

        theta_dot = -Omega sin(beta)
        beta_dot  = -Omega cot(theta) cos(beta) - Delta
    """
    theta = np.asarray(theta, dtype=float)
    beta = np.asarray(beta, dtype=float)
    theta_dot = -omega * np.sin(beta)
    with np.errstate(divide="ignore", invalid="ignore"):
        beta_dot = -omega * np.cos(beta) / np.tan(theta) - delta
    return theta_dot, beta_dot


@dataclass(frozen=True)
class InvariantEigenstate:
    """Eigenvector |phi_+> or |phi_-> of the invariant at fixed angles."""

    theta: float
    beta: float
    branch: str = "+"

    def __post_init__(self):
        if self.branch not in ("+", "-"):
            raise ValueError("branch must be '+' or '-'")

    @property
    def amplitudes(self) -> np.ndarray:
        c = np.cos(0.5 * self.theta)
        s = np.sin(0.5 * self.theta)
        if self.branch == "+":
            return np.array([c * np.exp(-1j * self.beta), s])
        return np.array([s, -c * np.exp(1j * self.beta)])


def _phase_segments(s: AngleSchedule, t_sorted: np.ndarray, epsabs: float, epsrel: float):
    edges = np.concatenate(([0.0], t_sorted))
    pieces = np.empty(len(t_sorted))
    rate = s.phase_rate
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        if b <= a:
            pieces[i] = 0.0
            continue
        inner = [p for p in s.breakpoints if a < p < b]
        val, _ = integrate.quad(
            rate, a, b, epsabs=epsabs, epsrel=epsrel, limit=200, points=inner or None
        )
        pieces[i] = val
    return np.cumsum(pieces)


def lewis_riesenfeld_phase(
    s: AngleSchedule, t, branch: str = "+", epsabs: float = 1e-10, epsrel: float = 1e-12
):
    """
    Lewis-Riesenfeld phase gamma_(+/-)(t) with the convention gamma(0) = 0.

    gamma_+(t) = (1/2) int_0^t [beta_dot + theta_dot cot(beta) / sin(theta)] dt'
    and gamma_- = -gamma_+. Array ``t`` is integrated piecewise between the
    sorted sample times, so the cost grows linearly with the number of samples.

    Raises
    ------
    SingularityError
        If the integrand diverges on the path.
    """
    if branch not in ("+", "-"):
        raise ValueError("branch must be '+' or '-'")
    arr = np.asarray(t, dtype=float)
    flat = arr.ravel()
    if np.any(flat < 0.0) or np.any(flat > s.duration * (1 + 1e-12)):
        raise ValueError("t must lie in [0, T]")
    order = np.argsort(flat, kind="stable")
    cumulative = _phase_segments(s, flat[order], epsabs, epsrel)
    out = np.empty_like(flat)
    out[order] = 0.5 * cumulative
    if branch == "-":
        out = -out
    out = out.reshape(arr.shape)
    return _wrap(out, arr.ndim == 0)


def m_phase(s: AngleSchedule, t, epsabs: float = 1e-10, epsrel: float = 1e-12):
    """Phase m(t) = 2 gamma_+(t) - beta(t) entering the systematic-error sensitivity."""
    gamma = lewis_riesenfeld_phase(s, t, epsabs=epsabs, epsrel=epsrel)
    return 2.0 * gamma - s.beta(t)
