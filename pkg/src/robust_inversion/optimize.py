"""
Nulling the systematic-error sensitivity and comparing protocols.

The zeros of q_S for the robust-alpha family are the sign changes of the real
reduced integral I(alpha); they are located by bracketing on a scan grid and
refined with Brent's method. Comparison surfaces tabulate P_1(T) over a
(gamma_d^2, delta_0) grid for several pulses.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .dynamics import propagate_bloch_batch
from .errors import NoBracketError
from .pulses import ControlPulse, fmt_float, omega_max_robust_alpha, peak_rabi, synthesize_pulse
from .schedules import make_flat_pi_schedule, make_robust_alpha_schedule
from .sensitivity import analyze, reduced_integral, scaled_systematic_sensitivity

TWO_PI_MHZ = 2.0 * np.pi * 1e6
MICROSECOND = 1e-6

# parameters of the two-protocol comparison
FIG2_ALPHA = -0.206
FIG2_DURATION = 3.0 * MICROSECOND
FIG2A_OMEGA_MAX = 0.784 * TWO_PI_MHZ
FIG2_GAMMA_D_SQ_MAX = 0.2 / MICROSECOND
FIG2_DELTA0_MAX = 2.0 * TWO_PI_MHZ

DEFAULT_ALPHA_INTERVAL = (-1.0, 0.0)
DEFAULT_SCAN_POINTS = 201


def _refine(a: float, b: float, fa: float, fb: float, tol: float) -> float:
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    return float(optimize.brentq(reduced_integral, a, b, xtol=tol, rtol=4 * np.finfo(float).eps))


def _zeros_on_grid(alphas: np.ndarray, values: np.ndarray, tol: float) -> list[float]:
    zeros = []
    for i in range(len(alphas) - 1):
        fa, fb = values[i], values[i + 1]
        if fa == 0.0 and i > 0:
            continue  # already recorded as the right end of the previous cell
        if fa * fb <= 0.0:
            zeros.append(_refine(alphas[i], alphas[i + 1], fa, fb, tol))
    if len(alphas) == 1 and values[0] == 0.0:
        zeros.append(float(alphas[0]))
    return sorted(set(zeros), key=abs)


def find_alpha_star(
    W: float = 1.0,
    search_interval: tuple[float, float] = DEFAULT_ALPHA_INTERVAL,
    tol: float = 1e-12,
    n_scan: int = DEFAULT_SCAN_POINTS,
) -> float:
    """
    Zero of q_S with the smallest |alpha| inside ``search_interval``.

    The reduced integral does not depend on T or W, so neither does the
    result; ``W`` is only validated.

    Raises
    ------
    NoBracketError
        If I(alpha) has no sign change on the interval.
    """
    if not (0.0 < W <= 1.0):
        raise ValueError("W must lie in (0, 1]")
    lo, hi = map(float, search_interval)
    if not lo < hi:
        raise ValueError("search interval must satisfy lo < hi")
    grid = np.linspace(lo, hi, max(n_scan, 2))
    values = np.array([reduced_integral(a) for a in grid])
    zeros = _zeros_on_grid(grid, values, tol)
    if not zeros:
        raise NoBracketError(f"I(alpha) keeps one sign on [{lo}, {hi}]")
    return zeros[0]


@dataclass
class AlphaScan:
    alpha: np.ndarray
    qs_scaled: np.ndarray
    omega_max_wt: np.ndarray
    zeros: list[float]
    W: float = 1.0
    T: float = 1.0

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["alpha", "qs_scaled", "omega_max_wt"])
            for row in zip(self.alpha, self.qs_scaled, self.omega_max_wt):
                w.writerow([fmt_float(v) for v in row])

    def to_dict(self) -> dict:
        return {
            "W": self.W,
            "T": self.T,
            "alpha": self.alpha.tolist(),
            "qs_scaled": self.qs_scaled.tolist(),
            "omega_max_wt": self.omega_max_wt.tolist(),
            "zeros": list(self.zeros),
            "stars": [[a, _omega_max_wt(a, self.W, self.T)] for a in self.zeros],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _omega_max_wt(alpha: float, W: float, T: float) -> float:
    if alpha <= 0:
        return omega_max_robust_alpha(T, W, alpha) * W * T
    return peak_rabi(make_robust_alpha_schedule(T, W, alpha)) * W * T


def scan_alpha(alpha_grid, W: float = 1.0, T: float = 1.0, tol: float = 1e-12) -> AlphaScan:
    """Tabulate q_S/(WT)^2 and Omega_max WT over ``alpha_grid`` and locate the zeros of q_S."""
    alphas = np.sort(np.asarray(alpha_grid, dtype=float).ravel())
    if alphas.size == 0:
        raise ValueError("alpha grid is empty")
    if not (0.0 < W <= 1.0) or T <= 0:
        raise ValueError("need T > 0 and 0 < W <= 1")
    values = np.array([reduced_integral(a) for a in alphas])
    qs = np.array([scaled_systematic_sensitivity(a) for a in alphas])
    om = np.array([_omega_max_wt(a, W, T) for a in alphas])
    return AlphaScan(alphas, qs, om, _zeros_on_grid(alphas, values, tol), W, T)


@dataclass
class ComparisonSurface:
    """P_1(T) of each protocol on a (gamma_d^2, delta_0) grid; ``p1[k, i, j]`` is protocol k at (gamma[i], delta[j])."""

    gamma_d_sq: np.ndarray
    delta0: np.ndarray
    p1: np.ndarray
    labels: list[str]
    engine: str
    metadata: list[dict] = field(default_factory=list)

    def dominated_mask(self, k: int) -> np.ndarray:
        """Grid points where protocol ``k`` is strictly worse than some other protocol."""
        others = np.delete(self.p1, k, axis=0)
        return self.p1[k] < others.max(axis=0)

    def dominated_fraction(self, k: int) -> float:
        return float(np.mean(self.dominated_mask(k)))

    def dominance_boundary(self, a: int = 0, b: int = 1) -> np.ndarray:
        """
        Points (gamma_d^2, delta_0) where protocols ``a`` and ``b`` tie.

        Sign changes of P_a - P_b between neighbouring cells along delta_0 are
        located by linear interpolation, row by row.
        """
        diff = self.p1[a] - self.p1[b]
        pts = []
        for i, g in enumerate(self.gamma_d_sq):
            row = diff[i]
            for j in range(len(row) - 1):
                d1, d2 = row[j], row[j + 1]
                if d1 == 0.0 and d2 == 0.0:
                    continue
                if d1 * d2 < 0.0 or (d2 == 0.0 and d1 != 0.0):
                    x = self.delta0[j] + (self.delta0[j + 1] - self.delta0[j]) * d1 / (d1 - d2)
                    pts.append((g, x))
        return np.array(pts).reshape(-1, 2)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["protocol", "gamma_d_sq", "delta0", "p1"])
            for k, label in enumerate(self.labels):
                for i, g in enumerate(self.gamma_d_sq):
                    for j, d in enumerate(self.delta0):
                        w.writerow([label, fmt_float(g), fmt_float(d), fmt_float(self.p1[k, i, j])])

    def to_dict(self) -> dict:
        return {
            "engine": self.engine,
            "labels": self.labels,
            "metadata": self.metadata,
            "gamma_d_sq": self.gamma_d_sq.tolist(),
            "delta0": self.delta0.tolist(),
            "p1": self.p1.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _axis(spec, n: int) -> np.ndarray:
    arr = np.asarray(spec, dtype=float)
    if arr.ndim == 0:
        return np.linspace(0.0, float(arr), n)
    if arr.size == 2:
        return np.linspace(arr[0], arr[1], n)
    return arr.ravel()


def comparison_surface(
    protocols: list[ControlPulse],
    gamma_d_sq_range=(0.0, FIG2_GAMMA_D_SQ_MAX),
    delta0_range=(-FIG2_DELTA0_MAX, FIG2_DELTA0_MAX),
    n_grid: int | tuple[int, int] = 41,
    engine: str = "lindblad",
    n_steps: int = 2000,
    labels: list[str] | None = None,
) -> ComparisonSurface:
    """
    Final population of each protocol over a perturbation grid.

    ``engine="lindblad"`` integrates the Bloch equation for every grid point;
    ``engine="perturbative"`` evaluates 1 - gamma_d^2 q_N - delta_0^2 q_S
    clamped to [0, 1] and needs pulses that carry their schedule.
    Ranges are ``(lo, hi)`` pairs or explicit axis arrays.
    """
    if engine not in ("lindblad", "perturbative"):
        raise ValueError(f"unknown engine {engine!r}")
    if not protocols:
        raise ValueError("need at least one protocol")
    ng, nd = (n_grid, n_grid) if np.isscalar(n_grid) else n_grid
    g_axis = _axis(gamma_d_sq_range, ng)
    d_axis = _axis(delta0_range, nd)
    if np.any(g_axis < 0):
        raise ValueError("gamma_d_sq axis must be non-negative")
    G, D = np.meshgrid(g_axis, d_axis, indexing="ij")
    out = np.empty((len(protocols),) + G.shape)
    meta = []
    for k, p in enumerate(protocols):
        meta.append(dict(p.params, omega_max=p.omega_max))
        if engine == "lindblad":
            r = propagate_bloch_batch(p, G, D, n_steps=n_steps)
            out[k] = np.clip(0.5 * (1.0 + r[..., 2]), 0.0, 1.0)
        else:
            if p.schedule is None:
                raise ValueError("perturbative engine needs pulses synthesized from a schedule")
            rep = analyze(p.schedule)
            loss = G * rep.q_N + D**2 * rep.q_S
            out[k] = np.clip(1.0 - loss, 0.0, 1.0)
    labels = labels or [f"{m['family']}[{k}]" for k, m in enumerate(meta)]
    return ComparisonSurface(g_axis, d_axis, out, list(labels), engine, meta)


def fig2_protocols(scenario: str = "fig2a", n_samples: int = 2000) -> tuple[list[ControlPulse], list[str]]:
    """
    Flat pi pulse versus the alpha = -0.206, W = 1, T = 3 us robust pulse.

    ``fig2a`` gives the flat pulse the common peak 0.784 x 2pi MHz, hence
    T_pi = pi / Omega_max = 0.638 us; ``fig2b`` stretches it to 3 us.
    """
    robust = synthesize_pulse(make_robust_alpha_schedule(FIG2_DURATION, 1.0, FIG2_ALPHA), n_samples)
    if scenario == "fig2a":
        t_pi = np.pi / FIG2A_OMEGA_MAX
    elif scenario == "fig2b":
        t_pi = FIG2_DURATION
    else:
        raise ValueError(f"unknown scenario {scenario!r}")
    flat = synthesize_pulse(make_flat_pi_schedule(t_pi), n_samples)
    return [flat, robust], ["flat-pi", "robust-alpha"]

