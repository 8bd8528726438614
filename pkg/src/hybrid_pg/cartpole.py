"""CartPole-v1 physics with explicit Euler integration.

The plant follows the classic frictionless cart-pole equations with the v1
horizon of 500 steps.  Observation noise is injected in
:meth:`CartPoleEnv.observe` only; the physical state is never perturbed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from hybrid_pg.quantum import ConfigurationError

GRAVITY = 9.8
MASS_CART = 1.0
MASS_POLE = 0.1
TOTAL_MASS = MASS_CART + MASS_POLE
HALF_LENGTH = 0.5
POLE_MASS_LENGTH = MASS_POLE * HALF_LENGTH
FORCE_MAG = 10.0
TAU = 0.02
X_THRESHOLD = 2.4
THETA_THRESHOLD = 12 * 2 * math.pi / 360
HORIZON = 500
RESET_BOUND = 0.05

DEFAULT_Q = np.diag([1.0, 0.1, 10.0, 0.1])
DEFAULT_R = 0.001


class ProtocolError(RuntimeError):
    """Environment used out of order, e.g. stepped after the episode ended."""


@dataclass(frozen=True)
class CartPoleState:
    x: float
    x_dot: float
    theta: float
    theta_dot: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.x_dot, self.theta, self.theta_dot], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> CartPoleState:
        x, x_dot, theta, theta_dot = (float(v) for v in values)
        return cls(x, x_dot, theta, theta_dot)

    def __neg__(self) -> CartPoleState:
        return CartPoleState(-self.x, -self.x_dot, -self.theta, -self.theta_dot)

    def failed(self) -> bool:
        return abs(self.x) > X_THRESHOLD or abs(self.theta) > THETA_THRESHOLD


@dataclass(frozen=True)
class StepResult:
    next_obs: np.ndarray
    reward: float
    terminated: bool
    truncated: bool
    state: CartPoleState

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


@dataclass(frozen=True)
class RewardMode:
    """``unit_per_step`` (+1 per step) or ``quadratic`` (-(x'Qx + R u^2))."""

    mode: str = "unit_per_step"
    Q: Optional[np.ndarray] = None
    R: float = DEFAULT_R

    def __post_init__(self):
        if self.mode not in ("unit_per_step", "quadratic"):
            raise ConfigurationError(f"unknown reward mode {self.mode!r}")
        if self.mode == "quadratic":
            Q = DEFAULT_Q if self.Q is None else np.asarray(self.Q, dtype=np.float64)
            _check_weights(Q, self.R)
            object.__setattr__(self, "Q", Q)


@dataclass(frozen=True)
class ObservationNoiseSpec:
    sigma: float = 0.0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ConfigurationError(f"observation noise sigma must be >= 0, got {self.sigma}")


def _check_weights(Q, R):
    Q = np.asarray(Q, dtype=np.float64)
    if Q.shape != (4, 4):
        raise ConfigurationError(f"Q must be 4x4, got {Q.shape}")
    if not np.allclose(Q, Q.T):
        raise ConfigurationError("Q must be symmetric")
    if np.linalg.eigvalsh(Q).min() < -1e-12:
        raise ConfigurationError("Q must be positive semidefinite")
    if R < 0:
        raise ConfigurationError("R must be non-negative")


def dynamics(state: CartPoleState, action: int) -> CartPoleState:
    """One Euler step of the cart-pole equations under force +-10 N."""
    if action not in (0, 1):
        raise ValueError(f"action must be 0 or 1, got {action!r}")
    force = FORCE_MAG if action == 1 else -FORCE_MAG
    cos_t = math.cos(state.theta)
    sin_t = math.sin(state.theta)
    temp = (force + POLE_MASS_LENGTH * state.theta_dot**2 * sin_t) / TOTAL_MASS
    theta_acc = (GRAVITY * sin_t - cos_t * temp) / (
        HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos_t**2 / TOTAL_MASS)
    )
    x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_t / TOTAL_MASS
    return CartPoleState(
        state.x + TAU * state.x_dot,
        state.x_dot + TAU * x_acc,
        state.theta + TAU * state.theta_dot,
        state.theta_dot + TAU * theta_acc,
    )


def quadratic_reward(state: CartPoleState, action: int, Q=DEFAULT_Q, R: float = DEFAULT_R) -> float:
    _check_weights(Q, R)
    x = state.as_array()
    u = FORCE_MAG if action == 1 else -FORCE_MAG
    return -float(x @ np.asarray(Q, dtype=np.float64) @ x + R * u * u)


def observe(state: CartPoleState, noise: ObservationNoiseSpec, rng=None) -> np.ndarray:
    if noise.sigma < 0:
        raise ConfigurationError(f"observation noise sigma must be >= 0, got {noise.sigma}")
    obs = state.as_array()
    if noise.sigma == 0:
        return obs
    return obs + noise.sigma * rng.standard_normal(4)


def initial_state(seed) -> CartPoleState:
    rng = np.random.default_rng(seed)
    return CartPoleState.from_array(rng.uniform(-RESET_BOUND, RESET_BOUND, size=4))


@dataclass
class CartPoleEnv:
    """Single-threaded episode state machine around :func:`dynamics`.

    ``process_noise_std`` is the hook for additive process noise on the
    plant; only the zero setting is supported.
    """

    noise: ObservationNoiseSpec = field(default_factory=ObservationNoiseSpec)
    reward_mode: RewardMode = field(default_factory=RewardMode)
    horizon: int = HORIZON
    noise_seed: Optional[int] = None
    process_noise_std: float = 0.0
    plant: Callable[[CartPoleState, int], CartPoleState] = dynamics

    def __post_init__(self):
        if self.process_noise_std != 0.0:
            raise NotImplementedError("process noise is not modelled")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be positive")
        self.rng = np.random.default_rng(self.noise_seed)
        self.state: Optional[CartPoleState] = None
        self.steps = 0
        self.done = True

    def reset(self, seed) -> np.ndarray:
        self.state = initial_state(seed)
        self.steps = 0
        self.done = False
        return self.observe()

    def observe(self) -> np.ndarray:
        return observe(self.state, self.noise, self.rng)

    def step(self, action: int) -> StepResult:
        if self.state is None:
            raise ProtocolError("reset() must be called before step()")
        if self.done:
            raise ProtocolError("episode already finished; call reset()")
        if self.reward_mode.mode == "quadratic":
            reward = quadratic_reward(self.state, action, self.reward_mode.Q, self.reward_mode.R)
        else:
            reward = 1.0
        self.state = self.plant(self.state, action)
        self.steps += 1
        terminated = self.state.failed()
        truncated = not terminated and self.steps >= self.horizon
        self.done = terminated or truncated
        return StepResult(self.observe(), reward, terminated, truncated, self.state)

    def with_noise(self, sigma: float, noise_seed=None) -> CartPoleEnv:
        return replace(self, noise=ObservationNoiseSpec(sigma), noise_seed=noise_seed)
