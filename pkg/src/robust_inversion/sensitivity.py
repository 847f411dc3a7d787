"""
Second-order sensitivities of the inversion fidelity.

With dephasing strength gamma_d (Lindblad operator gamma_d sigma_z) and a
constant detuning offset delta_0, the final population of |1> behaves as

    P_1(T) ~ 1 - gamma_d^2 q_N - delta_0^2 q_S

where

    q_N = int_0^T sin^2(theta) dt
    q_S = (1/4) | int_0^T sin(theta) exp(i m(t)) dt |^2 ,  m = 2 gamma_+ - beta

For the robust-alpha family q_S reduces to a single integral over
z = sin[pi (2t - T) / (2 W T)],

    q_S = (W T)^2 / (4 pi^2) * I(alpha)^2
    I(alpha) = int_{-1}^{1} cos(pi z / 2) / sqrt(1 - z^2) exp(-i pi z + 2 i alpha sin(pi z)) dz

I(alpha) is real because the integrand is conjugated by z -> -z.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import PerturbativeRegimeWarning
from .pulses import peak_rabi
from .schedules import AngleSchedule, RobustAlphaSchedule

CHEBYSHEV_NODES = 512
ZERO_QS_TOL = 1e-10
HALF_PI = 0.5 * np.pi


def bessel_j0(x):
    """Bessel function of the first kind of order zero."""
    return special.j0(x)


def noise_sensitivity(s: AngleSchedule) -> float:
    """Dephasing sensitivity q_N = int_0^T sin^2(theta) dt (seconds)."""
    f = lambda t: s.sin_theta(t) ** 2
    val, _ = integrate.quad(
        f, 0.0, s.duration, points=list(s.breakpoints) or None,
        epsabs=1e-14 * s.duration, epsrel=1e-13, limit=200,
    )
    return float(val)


@lru_cache(maxsize=8)
def _gauss_legendre(order: int):
    return np.polynomial.legendre.leggauss(order)


def _panels(s: AngleSchedule, n_panels: int):
    edges = [0.0, *s.breakpoints, s.duration]
    cuts = [np.linspace(a, b, n_panels + 1)[:-1] for a, b in zip(edges[:-1], edges[1:])]
    lo = np.concatenate(cuts)
    hi = np.append(lo[1:], s.duration)
    return lo, hi


def _cumulative_phase_rate(s: AngleSchedule, lo, hi, nodes, order: int):
    """int_0^t phase_rate for every node t; nodes[p] lie in panel [lo[p], hi[p]]."""
    x, w = _gauss_legendre(order)
    half = 0.5 * (hi - lo)
    full = np.sum(half[:, None] * w * s.phase_rate(lo[:, None] + half[:, None] * (x + 1.0)), axis=1)
    offset = np.concatenate(([0.0], np.cumsum(full)[:-1]))
    # sub-rule on [lo_p, t] for each node t
    span = 0.5 * (nodes - lo[:, None])
    sub_t = lo[:, None, None] + span[..., None] * (x + 1.0)
    partial = np.sum(span[..., None] * w * s.phase_rate(sub_t), axis=-1)
    return offset[:, None] + partial


def systematic_amplitude(s: AngleSchedule, n_panels: int = 16, order: int = 20) -> complex:
    """
    Complex first-order amplitude int_0^T sin(theta) e^{i m(t)} dt.

    m(t) is obtained by integrating the Lewis-Riesenfeld phase rate with a
    cumulative Gauss-Legendre rule on panels split at the schedule breakpoints,
    which keeps this path independent of any closed form for m.
    """
    x, w = _gauss_legendre(order)
    lo, hi = _panels(s, n_panels)
    half = 0.5 * (hi - lo)
    t = lo[:, None] + half[:, None] * (x + 1.0)
    m = _cumulative_phase_rate(s, lo, hi, t, order) - s.beta(t)
    return complex(np.sum(half[:, None] * w * s.sin_theta(t) * np.exp(1j * m)))


def systematic_sensitivity_general(s: AngleSchedule, n_panels: int = 16, order: int = 20) -> float:
    """Systematic-offset sensitivity q_S (seconds^2) of an arbitrary schedule."""
    amp = systematic_amplitude(s, n_panels, order)
    return 0.25 * abs(amp) ** 2


@lru_cache(maxsize=8)
def _chebyshev_nodes(n: int) -> np.ndarray:
    k = np.arange(1, n + 1)
    return np.cos((2 * k - 1) * np.pi / (2 * n))


def reduced_integral_complex(alpha: float, n_nodes: int = CHEBYSHEV_NODES) -> complex:
    """
    I(alpha) by Chebyshev-Gauss quadrature of the full complex integrand.

    The weight 1/sqrt(1 - z^2) is absorbed exactly by the nodes
    z_k = cos((2k - 1) pi / 2n), each carrying weight pi / n.
    """
    z = _chebyshev_nodes(n_nodes)
    f = np.cos(HALF_PI * z) * np.exp(-1j * np.pi * z + 2j * alpha * np.sin(np.pi * z))
    return complex(np.pi / n_nodes * np.sum(f))


def reduced_integral(alpha: float, n_nodes: int = CHEBYSHEV_NODES) -> float:
    """Signed real I(alpha); its zeros are the zeros of q_S for the robust-alpha family."""
    z = _chebyshev_nodes(n_nodes)
    f = np.cos(HALF_PI * z) * np.cos(np.pi * z - 2.0 * alpha * np.sin(np.pi * z))
    return float(np.pi / n_nodes * np.sum(f))


def scaled_systematic_sensitivity(alpha: float, n_nodes: int = CHEBYSHEV_NODES) -> float:
    """q_S / (W T)^2 of the robust-alpha family; independent of T and W."""
    return reduced_integral(alpha, n_nodes) ** 2 / (4.0 * np.pi**2)


def systematic_sensitivity_family(T: float, W: float, alpha: float, n_nodes: int = CHEBYSHEV_NODES) -> float:
    """q_S of the robust-alpha family from the reduced one-dimensional integral."""
    if T <= 0:
        raise ValueError("T must be positive")
    if not (0.0 < W <= 1.0):
        raise ValueError("W must lie in (0, 1]")
    return (W * T) ** 2 * scaled_systematic_sensitivity(alpha, n_nodes)


def systematic_sensitivity(s: AngleSchedule) -> float:
    """q_S using the reduced integral when ``s`` belongs to the robust-alpha family."""
    if isinstance(s, RobustAlphaSchedule):
        return systematic_sensitivity_family(s.duration, s.width, s.alpha)
    return systematic_sensitivity_general(s)


def bound_product(s: AngleSchedule) -> float:
    """Omega_max * q_N; never below pi/2 for any inversion protocol."""
    return peak_rabi(s) * noise_sensitivity(s)


@dataclass(frozen=True)
class SensitivityReport:
    family: str
    T: float
    W: float | None
    alpha: float | None
    q_N: float
    q_S: float
    omega_max: float
    bound_product: float

    @property
    def saturates_bound(self) -> bool:
        return abs(self.bound_product - HALF_PI) <= 1e-9

    @property
    def systematic_null(self) -> bool:
        scale = (self.W or 1.0) * self.T
        return self.q_S / scale**2 < ZERO_QS_TOL

    def predicted_fidelity(self, gamma_d_sq: float = 0.0, delta0: float = 0.0) -> float:
        return predicted_fidelity(self, gamma_d_sq, delta0)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "SensitivityReport":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__})


def analyze(s: AngleSchedule) -> SensitivityReport:
    """Collect q_N, q_S, the peak Rabi frequency and their bound product for ``s``."""
    q_n = noise_sensitivity(s)
    om = peak_rabi(s)
    p = s.params
    return SensitivityReport(
        family=s.family, T=s.duration, W=p["W"], alpha=p["alpha"],
        q_N=q_n, q_S=systematic_sensitivity(s), omega_max=om, bound_product=om * q_n,
    )


def predicted_fidelity(report: SensitivityReport, gamma_d_sq: float = 0.0, delta0: float = 0.0) -> float:
    """
    Second-order estimate 1 - gamma_d^2 q_N - delta_0^2 q_S.

    ``gamma_d_sq`` is the squared dephasing strength (a rate). The result is
    clamped to [0, 1]; a :class:`PerturbativeRegimeWarning` is emitted once
    the correction exceeds 0.5.
    """
    if gamma_d_sq < 0:
        raise ValueError("gamma_d_sq must be non-negative")
    loss = gamma_d_sq * report.q_N + delta0**2 * report.q_S
    if loss > 0.5:
        warnings.warn(
            f"fidelity correction {loss:.3g} is outside the perturbative regime",
            PerturbativeRegimeWarning,
            stacklevel=2,
        )
    return float(min(1.0, max(0.0, 1.0 - loss)))
