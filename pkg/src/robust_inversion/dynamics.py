"""
Time propagation of the driven, dephased two-level system.

Bloch vector r = (rho12 + rho21, i(rho12 - rho21), rho11 - rho22) obeys

    dr/dt = (L0 + L1 + Ld) r

    L0 = [[0, Delta, 0], [-Delta, 0, -Omega], [0, Omega, 0]]
    L1 = [[0, -delta0, 0], [delta0, 0, 0], [0, 0, 0]]
    Ld = diag(-2 gamma_d^2, -2 gamma_d^2, 0)

which is the Bloch form of the Lindblad equation with H = H0 + delta0 sigma_z / 2
and jump operator gamma_d sigma_z. Three engines are provided: fixed-step RK4
on the Bloch vector, fixed-step RK4 on the density matrix, and a Monte Carlo
average over white-noise detuning trajectories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegratorError
from .pulses import ControlPulse, fmt_float

DEFAULT_STEPS = 10_000
NORM_TOL = 1e-6
TRACE_TOL = 1e-8

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class BlochState:
    rx: float
    ry: float
    rz: float

    def as_array(self) -> np.ndarray:
        return np.array([self.rx, self.ry, self.rz], dtype=float)

    @classmethod
    def from_array(cls, r) -> "BlochState":
        r = np.asarray(r, dtype=float)
        return cls(float(r[0]), float(r[1]), float(r[2]))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    @property
    def p1(self) -> float:
        """Population of |1>."""
        return 0.5 * (1.0 + self.rz)

    def to_density_matrix(self) -> np.ndarray:
        return 0.5 * (IDENTITY + self.rx * SIGMA_X + self.ry * SIGMA_Y + self.rz * SIGMA_Z)

    @classmethod
    def from_density_matrix(cls, rho) -> "BlochState":
        rho = np.asarray(rho, dtype=complex)
        return cls(
            float((rho[0, 1] + rho[1, 0]).real),
            float((1j * (rho[0, 1] - rho[1, 0])).real),
            float((rho[0, 0] - rho[1, 1]).real),
        )


#: |2>, the initial state of every inversion protocol
EXCITED = BlochState(0.0, 0.0, -1.0)


@dataclass(frozen=True)
class PerturbationSpec:
    """Dephasing strength (stored as gamma_d^2, a rate) and constant detuning offset, both rad/s."""

    gamma_d_sq: float = 0.0
    delta0: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.gamma_d_sq) or self.gamma_d_sq < 0:
            raise ValueError("gamma_d_sq must be finite and non-negative")
        if not np.isfinite(self.delta0):
            raise ValueError("delta0 must be finite")

    @classmethod
    def from_gamma_d(cls, gamma_d: float, delta0: float = 0.0) -> "PerturbationSpec":
        return cls(float(gamma_d) ** 2, delta0)

    @classmethod
    def from_dephasing_rate(cls, rate: float, delta0: float = 0.0) -> "PerturbationSpec":
        """From the coherence decay rate 2 gamma_d^2."""
        return cls(0.5 * float(rate), delta0)

    @property
    def dephasing_rate(self) -> float:
        return 2.0 * self.gamma_d_sq


@dataclass
class TrajectoryResult:
    times: np.ndarray
    states: np.ndarray
    rho: np.ndarray | None = field(default=None, repr=False)

    @property
    def final_state(self) -> BlochState:
        return BlochState.from_array(self.states[-1])

    @property
    def p1(self) -> float:
        """Terminal population of |1>."""
        return float(0.5 * (1.0 + self.states[-1, 2]))

    @property
    def populations(self) -> np.ndarray:
        return 0.5 * (1.0 + self.states[:, 2])

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,rx,ry,rz\n")
            for t, (x, y, z) in zip(self.times, self.states):
                fh.write(f"{fmt_float(t)},{fmt_float(x)},{fmt_float(y)},{fmt_float(z)}\n")


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean_states: np.ndarray
    p1_samples: np.ndarray = field(repr=False)
    seed: int

    @property
    def n_traj(self) -> int:
        return len(self.p1_samples)

    @property
    def mean_p1(self) -> float:
        return float(np.mean(self.p1_samples))

    @property
    def stderr_p1(self) -> float:
        if self.n_traj < 2:
            return float("nan")
        return float(np.std(self.p1_samples, ddof=1) / np.sqrt(self.n_traj))

    def summary(self) -> dict:
        return {"n_traj": self.n_traj, "seed": self.seed, "mean_P1": self.mean_p1, "stderr_P1": self.stderr_p1}

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def bloch_generator(omega, delta, delta0: float = 0.0, gamma_d_sq: float = 0.0) -> np.ndarray:
    """L0 + L1 + Ld for arrays of Rabi frequency and detuning; shape (..., 3, 3)."""
    omega = np.asarray(omega, dtype=float)
    delta = np.asarray(delta, dtype=float)
    A = np.zeros(omega.shape + (3, 3))
    A[..., 0, 1] = delta - delta0
    A[..., 1, 0] = -(delta - delta0)
    A[..., 1, 2] = -omega
    A[..., 2, 1] = omega
    A[..., 0, 0] = -2.0 * gamma_d_sq
    A[..., 1, 1] = -2.0 * gamma_d_sq
    return A


def lindblad_generator(omega, delta, delta0: float = 0.0, gamma_d_sq: float = 0.0) -> np.ndarray:
    """Superoperator on row-major vec(rho); shape (..., 4, 4)."""
    omega = np.asarray(omega, dtype=float)[..., None, None]
    delta = np.asarray(delta, dtype=float)[..., None, None]
    H = 0.5 * (omega * SIGMA_X + (delta0 - delta) * SIGMA_Z)
    # vec(A rho B) = (A kron B^T) vec(rho) for row-major vectorization
    comm = np.einsum("...ij,kl->...ikjl", H, IDENTITY) - np.einsum("ij,...kl->...ikjl", IDENTITY, np.swapaxes(H, -1, -2))
    comm = comm.reshape(comm.shape[:-4] + (4, 4))
    deph = gamma_d_sq * (np.kron(SIGMA_Z, SIGMA_Z) - np.eye(4))
    return -1j * comm + deph


def _rk4_propagators(A0, Am, A1, h: float) -> np.ndarray:
    """One-step RK4 maps of the linear system x' = A(t) x, batched over steps."""
    eye = np.eye(A0.shape[-1])
    K2 = Am @ (eye + 0.5 * h * A0)
    K3 = Am @ (eye + 0.5 * h * K2)
    K4 = A1 @ (eye + h * K3)
    return eye + (h / 6.0) * (A0 + 2.0 * K2 + 2.0 * K3 + K4)


def _drive_samples(pulse: ControlPulse, n_steps: int):
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    T = pulse.duration
    t0 = float(pulse.grid[0])
    t = t0 + np.linspace(0.0, T, n_steps + 1)
    h = T / n_steps
    mid = t[:-1] + 0.5 * h
    om = np.asarray(pulse.rabi_at(t), dtype=float)
    de = np.asarray(pulse.detuning_at(t), dtype=float)
    om_m = np.asarray(pulse.rabi_at(mid), dtype=float)
    de_m = np.asarray(pulse.detuning_at(mid), dtype=float)
    return t, h, (om, de), (om_m, de_m)


def _bloch_propagators(pulse, n_steps, delta0, gamma_d_sq):
    t, h, (om, de), (om_m, de_m) = _drive_samples(pulse, n_steps)
    A = bloch_generator(om, de, delta0, gamma_d_sq)
    Am = bloch_generator(om_m, de_m, delta0, gamma_d_sq)
    return t, _rk4_propagators(A[:-1], Am, A[1:], h)


def _evolve(S, x, kick_cos=None, kick_sin=None, reduce=False):
    """
    Apply step maps ``S`` to the column batch ``x`` of shape (d, B).

    Optional z-rotation kicks (for the stochastic engine) are applied before
    the first step and after every step. With ``reduce`` only the batch sum of
    the states is stored.
    """
    n = len(S)
    shape = (n + 1, x.shape[0]) if reduce else (n + 1,) + x.shape
    out = np.empty(shape, dtype=x.dtype)

    def kick(x, k):
        if kick_cos is None:
            return x
        c, s = kick_cos[k], kick_sin[k]
        rx, ry = x[0], x[1]
        return np.stack((c * rx - s * ry, s * rx + c * ry, x[2]))

    x = kick(x, 0)
    out[0] = x.sum(axis=1) if reduce else x
    for k in range(n):
        x = kick(S[k] @ x, k + 1)
        out[k + 1] = x.sum(axis=1) if reduce else x
    return out, x


def _check_norm(r: np.ndarray, where: str = "Bloch vector") -> None:
    worst = float(np.max(np.linalg.norm(r, axis=-1)))
    if not np.isfinite(worst) or worst > 1.0 + NORM_TOL:
        raise IntegratorError(f"{where} norm reached {worst:.12g}; reduce the step size")


def propagate_bloch(
    pulse: ControlPulse,
    pert: PerturbationSpec | None = None,
    r0: BlochState = EXCITED,
    n_steps: int = DEFAULT_STEPS,
) -> TrajectoryResult:
    """
    Integrate the Bloch equation with classical fixed-step RK4.

    The drive is evaluated from the pulse's closed form when it carries its
    schedule, and by linear interpolation of the samples otherwise.

    Raises
    ------
    IntegratorError
        If |r| exceeds 1 + 1e-6 anywhere along the trajectory.
    """
    pert = pert or PerturbationSpec()
    t, S = _bloch_propagators(pulse, n_steps, pert.delta0, pert.gamma_d_sq)
    states, _ = _evolve(S, r0.as_array()[:, None])
    states = states[:, :, 0]
    _check_norm(states)
    return TrajectoryResult(t, states)


def propagate_density_matrix(
    pulse: ControlPulse,
    pert: PerturbationSpec | None = None,
    rho0=None,
    n_steps: int = DEFAULT_STEPS,
) -> TrajectoryResult:
    """Integrate the Lindblad equation for the 2x2 density matrix with fixed-step RK4."""
    pert = pert or PerturbationSpec()
    rho0 = EXCITED.to_density_matrix() if rho0 is None else np.asarray(rho0, dtype=complex)
    if rho0.shape != (2, 2):
        raise ValueError("rho0 must be 2x2")
    if not np.allclose(rho0, rho0.conj().T, atol=1e-12):
        raise ValueError("rho0 must be Hermitian")
    if abs(np.trace(rho0) - 1.0) > 1e-12:
        raise ValueError("rho0 must have unit trace")
    if np.min(np.linalg.eigvalsh(rho0)) < -1e-12:
        raise ValueError("rho0 must be positive semidefinite")

    t, h, (om, de), (om_m, de_m) = _drive_samples(pulse, n_steps)
    A = lindblad_generator(om, de, pert.delta0, pert.gamma_d_sq)
    Am = lindblad_generator(om_m, de_m, pert.delta0, pert.gamma_d_sq)
    S = _rk4_propagators(A[:-1], Am, A[1:], h)
    vecs, _ = _evolve(S, rho0.reshape(4, 1))
    rho = vecs[:, :, 0].reshape(-1, 2, 2)
    drift = float(np.max(np.abs(np.trace(rho, axis1=1, axis2=2) - 1.0)))
    if drift > TRACE_TOL:
        raise IntegratorError(f"trace drifted by {drift:.3g}")
    states = np.stack(
        (
            (rho[:, 0, 1] + rho[:, 1, 0]).real,
            (1j * (rho[:, 0, 1] - rho[:, 1, 0])).real,
            (rho[:, 0, 0] - rho[:, 1, 1]).real,
        ),
        axis=1,
    )
    _check_norm(states)
    return TrajectoryResult(t, states, rho)


def propagate_bloch_batch(
    pulse: ControlPulse,
    gamma_d_sq,
    delta0,
    r0: BlochState = EXCITED,
    n_steps: int = DEFAULT_STEPS,
) -> np.ndarray:
    """
    Terminal Bloch vectors for many perturbations at once, shape ``broadcast + (3,)``.

    Same RK4 scheme as :func:`propagate_bloch`, vectorized over the
    broadcast of ``gamma_d_sq`` and ``delta0`` instead of over time.
    """
    g2, d0 = np.broadcast_arrays(np.asarray(gamma_d_sq, float), np.asarray(delta0, float))
    if np.any(g2 < 0):
        raise ValueError("gamma_d_sq must be non-negative")
    shape = g2.shape
    g2, d0 = g2.ravel(), d0.ravel()
    _, h, (om, de), (om_m, de_m) = _drive_samples(pulse, n_steps)
    r = np.repeat(r0.as_array()[:, None], g2.size, axis=1)
    decay = 2.0 * g2

    def rhs(r, o, d):
        dz = d - d0
        return np.stack((dz * r[1] - decay * r[0], -dz * r[0] - o * r[2] - decay * r[1], o * r[1]))

    for k in range(n_steps):
        k1 = rhs(r, om[k], de[k])
        k2 = rhs(r + 0.5 * h * k1, om_m[k], de_m[k])
        k3 = rhs(r + 0.5 * h * k2, om_m[k], de_m[k])
        k4 = rhs(r + h * k3, om[k + 1], de[k + 1])
        r = r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    r = r.T
    _check_norm(r)
    return r.reshape(shape + (3,))


def simulate_white_noise_detuning(
    pulse: ControlPulse,
    gamma_d_sq: float,
    delta0: float = 0.0,
    n_traj: int = 1000,
    seed: int = 0,
    n_steps: int = DEFAULT_STEPS,
    chunk_size: int = 500,
    r0: BlochState = EXCITED,
) -> EnsembleResult:
    """
    Monte Carlo average over white-noise detuning fluctuations.

    Each trajectory is unitary: the detuning is Delta(t) - delta0 - xi(t) with
    <xi(t) xi(t')> = 4 gamma_d^2 delta(t - t'), whose ensemble average is the
    Lindblad dephasing with rate 2 gamma_d^2. The noise is integrated exactly as
    z-rotations in a Strang splitting around the RK4 drive step: a rotation of
    variance 2 gamma_d^2 h at both ends and 4 gamma_d^2 h between steps. The mean
    of the scheme therefore equals the split Lindblad propagator exactly.

    Every trajectory draws from its own PCG64 stream spawned from
    ``SeedSequence(seed)``, so results do not depend on ``chunk_size``.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    if gamma_d_sq < 0:
        raise ValueError("gamma_d_sq must be non-negative")
    if chunk_size < 1:
        raise ValueError("chunk_size must be at least 1")
    t, S = _bloch_propagators(pulse, n_steps, delta0, 0.0)
    h = pulse.duration / n_steps
    sigma = np.full(n_steps + 1, np.sqrt(4.0 * gamma_d_sq * h))
    sigma[[0, -1]] = np.sqrt(2.0 * gamma_d_sq * h)
    children = np.random.SeedSequence(seed).spawn(n_traj)

    sums = np.zeros((n_steps + 1, 3))
    p1 = np.empty(n_traj)
    x0 = r0.as_array()[:, None]
    for start in range(0, n_traj, chunk_size):
        batch = children[start:start + chunk_size]
        x = np.repeat(x0, len(batch), axis=1)
        if gamma_d_sq > 0:
            xi = np.stack([np.random.default_rng(c).standard_normal(n_steps + 1) for c in batch], axis=1)
            phi = sigma[:, None] * xi
            part, final = _evolve(S, x, np.cos(phi), np.sin(phi), reduce=True)
        else:
            part, final = _evolve(S, x, reduce=True)
        _check_norm(final.T, "trajectory Bloch vector")
        sums += part
        p1[start:start + len(batch)] = 0.5 * (1.0 + final[2])
    return EnsembleResult(t, sums / n_traj, p1, seed)
