"""Statevector simulation of the layered RX-RY-RZ / CNOT-chain ansatz.

Conventions:
  - single-qubit rotations are exp(-i * angle * P / 2)
  - qubit 0 is the most significant bit of the basis index
  - the measured observable is Pauli-Z on qubit 0

All kernels work on a leading batch axis so that every shifted circuit of a
parameter-shift pass (and every timestep of an episode) is simulated in a
single sweep over the gate list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MAX_QUBITS = 12
AXES = ("X", "Y", "Z")
SHIFT = np.pi / 2


class ConfigurationError(ValueError):
    """Invalid static configuration (qubit count, noise level, ...)."""


class ShapeError(ValueError):
    """Array shapes do not match the circuit definition."""


class InvalidGateError(ValueError):
    """Gate arguments that do not define a valid gate."""


@dataclass(frozen=True)
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ShapeError(
                f"expected {2**self.n_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))


@dataclass(frozen=True)
class VqcParams:
    """Ansatz angles indexed ``[layer, qubit, axis]`` plus the embedding setup."""

    angles: np.ndarray
    embed_scale: float = 1.0
    embed_axis: str = "X"

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=np.float64)
        if angles.ndim != 3 or angles.shape[2] != 3 or angles.shape[0] < 1:
            raise ShapeError(f"angles must have shape (L, d, 3), got {angles.shape}")
        if not 1 <= angles.shape[1] <= MAX_QUBITS:
            raise ConfigurationError(f"qubit count {angles.shape[1]} outside [1, {MAX_QUBITS}]")
        if not np.all(np.isfinite(angles)):
            raise ValueError("angles must be finite")
        if not self.embed_scale > 0:
            raise ConfigurationError("embed_scale must be positive")
        if self.embed_axis not in ("X", "Y"):
            raise ConfigurationError(f"embed_axis must be 'X' or 'Y', got {self.embed_axis!r}")
        object.__setattr__(self, "angles", angles)

    @property
    def depth(self) -> int:
        return self.angles.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.angles.shape[1]

    @property
    def n_params(self) -> int:
        return self.angles.size

    def flat(self) -> np.ndarray:
        return self.angles.reshape(-1).copy()

    def with_flat(self, flat) -> VqcParams:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.n_params,):
            raise ShapeError(f"expected {self.n_params} parameters, got shape {flat.shape}")
        return VqcParams(flat.reshape(self.angles.shape), self.embed_scale, self.embed_axis)

    @classmethod
    def zeros(cls, n_qubits: int, depth: int, **kwargs) -> VqcParams:
        return cls(np.zeros((depth, n_qubits, 3)), **kwargs)

    @classmethod
    def random(cls, n_qubits: int, depth: int, rng, scale: float = 0.1, **kwargs) -> VqcParams:
        return cls(rng.uniform(-scale, scale, size=(depth, n_qubits, 3)), **kwargs)


@dataclass(frozen=True)
class MeasurementNoiseModel:
    sigma_z: float = 0.0

    def __post_init__(self):
        if not self.sigma_z >= 0:
            raise ConfigurationError(f"sigma_z must be >= 0, got {self.sigma_z}")


@dataclass(frozen=True)
class GradientReport:
    value: float
    grads: np.ndarray
    shift_evals: int = field(default=0)


def _check_qubits(n_qubits: int) -> None:
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"qubit count must be in [1, {MAX_QUBITS}], got {n_qubits!r}")


def _check_index(qubit: int, n_qubits: int) -> None:
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {n_qubits} qubits")


# --- batched kernels -------------------------------------------------------
# ``psi`` has shape (B, 2**d); ``theta`` is a scalar or shape (B,).


def _rotate(psi: np.ndarray, n_qubits: int, qubit: int, axis: str, theta) -> np.ndarray:
    batch = psi.shape[0]
    view = psi.reshape(batch, 2**qubit, 2, 2 ** (n_qubits - qubit - 1))
    half = np.asarray(theta, dtype=np.float64) / 2
    c = np.cos(half).reshape(-1, 1, 1)
    s = np.sin(half).reshape(-1, 1, 1)
    a0 = view[:, :, 0, :]
    a1 = view[:, :, 1, :]
    out = np.empty_like(view)
    if axis == "X":
        out[:, :, 0, :] = c * a0 - 1j * s * a1
        out[:, :, 1, :] = c * a1 - 1j * s * a0
    elif axis == "Y":
        out[:, :, 0, :] = c * a0 - s * a1
        out[:, :, 1, :] = s * a0 + c * a1
    elif axis == "Z":
        phase = np.exp(-1j * half).reshape(-1, 1, 1)
        out[:, :, 0, :] = phase * a0
        out[:, :, 1, :] = np.conj(phase) * a1
    else:
        raise InvalidGateError(f"unknown rotation axis {axis!r}")
    return out.reshape(batch, -1)


@lru_cache(maxsize=None)
def _cnot_permutation(n_qubits: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    cmask = 1 << (n_qubits - 1 - control)
    tmask = 1 << (n_qubits - 1 - target)
    return np.where(idx & cmask, idx ^ tmask, idx)


@lru_cache(maxsize=None)
def _z_signs(n_qubits: int, qubit: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    return np.where(idx & (1 << (n_qubits - 1 - qubit)), -1.0, 1.0)


def _cnot(psi: np.ndarray, n_qubits: int, control: int, target: int) -> np.ndarray:
    return psi[:, _cnot_permutation(n_qubits, control, target)]


def _expect_z(psi: np.ndarray, n_qubits: int, qubit: int) -> np.ndarray:
    # column-by-column accumulation: each row's result is independent of the batch size
    weighted = (psi.real**2 + psi.imag**2) * _z_signs(n_qubits, qubit)
    total = np.zeros(psi.shape[0])
    for column in weighted.T:
        total += column
    return total


def simulate_batch(scaled_obs: np.ndarray, angles: np.ndarray, embed_axis: str = "X") -> np.ndarray:
    """<Z_0> for a batch of circuits.

    ``scaled_obs`` has shape (B, d) and ``angles`` shape (B, L, d, 3); both
    are taken as already validated.
    """
    batch, n_qubits = scaled_obs.shape
    depth = angles.shape[1]
    psi = np.zeros((batch, 2**n_qubits), dtype=np.complex128)
    psi[:, 0] = 1.0
    for q in range(n_qubits):
        psi = _rotate(psi, n_qubits, q, embed_axis, scaled_obs[:, q])
    for layer in range(depth):
        for q in range(n_qubits):
            for k, axis in enumerate(AXES):
                psi = _rotate(psi, n_qubits, q, axis, angles[:, layer, q, k])
        for q in range(n_qubits - 1):
            psi = _cnot(psi, n_qubits, q, q + 1)
    return _expect_z(psi, n_qubits, 0)


# --- single-state operations ----------------------------------------------


def new_statevector(n_qubits: int) -> Statevector:
    _check_qubits(n_qubits)
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return Statevector(int(n_qubits), amps)


def apply_rotation(state: Statevector, qubit: int, axis: str, angle: float) -> Statevector:
    _check_index(qubit, state.n_qubits)
    if axis not in AXES:
        raise InvalidGateError(f"unknown rotation axis {axis!r}")
    if not np.isfinite(angle):
        raise ValueError("rotation angle must be finite")
    psi = _rotate(state.amplitudes[None, :], state.n_qubits, qubit, axis, float(angle))
    return Statevector(state.n_qubits, psi[0])


def apply_cnot(state: Statevector, control: int, target: int) -> Statevector:
    if control == target:
        raise InvalidGateError("CNOT control and target must differ")
    _check_index(control, state.n_qubits)
    _check_index(target, state.n_qubits)
    return Statevector(state.n_qubits, state.amplitudes[_cnot_permutation(state.n_qubits, control, target)])


def angle_embedding(state: Statevector, scaled_obs, axis: str = "X") -> Statevector:
    scaled_obs = np.asarray(scaled_obs, dtype=np.float64)
    if scaled_obs.shape != (state.n_qubits,):
        raise ShapeError(f"expected {state.n_qubits} embedding angles, got shape {scaled_obs.shape}")
    if axis not in ("X", "Y"):
        raise ConfigurationError(f"embedding axis must be 'X' or 'Y', got {axis!r}")
    for q, value in enumerate(scaled_obs):
        state = apply_rotation(state, q, axis, value)
    return state


def expectation_z(state: Statevector, qubit: int = 0) -> float:
    _check_index(qubit, state.n_qubits)
    return float(_expect_z(state.amplitudes[None, :], state.n_qubits, qubit)[0])


def _check_obs(obs_scaled, params: VqcParams) -> np.ndarray:
    obs = np.asarray(obs_scaled, dtype=np.float64)
    if obs.ndim not in (1, 2) or obs.shape[-1] != params.n_qubits:
        raise ShapeError(
            f"observation of shape {obs.shape} does not match {params.n_qubits} qubits"
        )
    if not np.all(np.isfinite(obs)):
        raise ValueError("embedding angles must be finite")
    return obs


def run_vqc(obs_scaled, params: VqcParams) -> float:
    """Noiseless <Z_0> after embedding ``obs_scaled`` and applying the ansatz."""
    obs = _check_obs(obs_scaled, params)
    if obs.ndim != 1:
        raise ShapeError("run_vqc takes a single observation; use run_vqc_batch")
    return float(simulate_batch(obs[None, :], params.angles[None], params.embed_axis)[0])


def run_vqc_batch(obs_scaled, params: VqcParams) -> np.ndarray:
    obs = np.atleast_2d(_check_obs(obs_scaled, params))
    angles = np.broadcast_to(params.angles, (obs.shape[0],) + params.angles.shape)
    return simulate_batch(obs, angles, params.embed_axis)


def apply_measurement_noise(z: float, model: MeasurementNoiseModel, rng) -> float:
    if model.sigma_z < 0:
        raise ConfigurationError(f"sigma_z must be >= 0, got {model.sigma_z}")
    if model.sigma_z == 0:
        return z
    return z + model.sigma_z * rng.standard_normal()


def _shifted_angles(params: VqcParams) -> np.ndarray:
    """Shape (1 + 2P, L, d, 3): unshifted, then +pi/2 for each k, then -pi/2."""
    n = params.n_params
    base = params.flat()
    stack = np.tile(base, (2 * n + 1, 1))
    stack[1 : n + 1] += SHIFT * np.eye(n)
    stack[n + 1 :] -= SHIFT * np.eye(n)
    return stack.reshape((2 * n + 1,) + params.angles.shape)


def parameter_shift_batch(obs_scaled, params: VqcParams) -> tuple[np.ndarray, np.ndarray, int]:
    """Values (T,), gradients (T, P) and the number of shifted evaluations.

    Every observation row gets one unshifted and 2P shifted circuits.
    """
    obs = np.atleast_2d(_check_obs(obs_scaled, params))
    n_obs = obs.shape[0]
    n = params.n_params
    shifted = _shifted_angles(params)
    per_row = shifted.shape[0]
    angles = np.broadcast_to(shifted, (n_obs,) + shifted.shape).reshape((-1,) + params.angles.shape)
    rows = np.repeat(obs, per_row, axis=0)
    z = simulate_batch(rows, angles, params.embed_axis).reshape(n_obs, per_row)
    grads = 0.5 * (z[:, 1 : n + 1] - z[:, n + 1 :])
    return z[:, 0], grads, 2 * n * n_obs


def parameter_shift_gradient(obs_scaled, params: VqcParams) -> GradientReport:
    obs = _check_obs(obs_scaled, params)
    if obs.ndim != 1:
        raise ShapeError("parameter_shift_gradient takes a single observation")
    values, grads, evals = parameter_shift_batch(obs, params)
    return GradientReport(float(values[0]), grads[0], evals)


def circuit_evals_per_step(n_qubits: int, depth: int) -> int:
    """One forward pass plus two shifted passes per ansatz angle."""
    return 1 + 2 * 3 * n_qubits * depth
