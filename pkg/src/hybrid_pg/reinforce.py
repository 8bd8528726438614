"""REINFORCE with a running-average baseline, entropy and L2 regularization.

One trajectory per episode is sampled from the current policy; returns and
advantages are formed, the regularized loss is differentiated (manual
backprop for the MLP, parameter shift for the VQC), the gradient is clipped
to a global norm and applied with an exponentially decaying step size.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from hybrid_pg.cartpole import HORIZON, CartPoleEnv
from hybrid_pg.policies import MlpParams, MlpPolicy, NormalizationSpec, VqcPolicy, sample_action
from hybrid_pg.quantum import ConfigurationError, MeasurementNoiseModel, VqcParams


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    entropy_weight: float = 5e-3
    l2_weight: float = 1e-4
    clip_threshold: float = 1.0
    lr0: float = 0.005
    lr_decay: float = 0.995
    episodes: int = 400
    baseline_decay: float = 0.95
    batch_episodes: int = 1
    optimizer: str = "adam"
    standardize_advantages: bool = False
    horizon: int = HORIZON

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ConfigurationError("gamma must lie in (0, 1]")
        if not self.clip_threshold > 0:
            raise ConfigurationError("clip_threshold must be positive")
        if not 0 < self.lr_decay <= 1:
            raise ConfigurationError("lr_decay must lie in (0, 1]")
        if min(self.entropy_weight, self.l2_weight, self.lr0) < 0:
            raise ConfigurationError("weights and learning rate must be non-negative")
        if not 0 <= self.baseline_decay < 1:
            raise ConfigurationError("baseline_decay must lie in [0, 1)")
        if self.episodes < 0 or self.batch_episodes < 1:
            raise ConfigurationError("episodes must be >= 0 and batch_episodes >= 1")
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigurationError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class Trajectory:
    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    returns: np.ndarray = None
    advantages: np.ndarray = None
    truncated: bool = False

    @property
    def episode_length(self) -> int:
        return len(self.rewards)

    @property
    def episode_return(self) -> float:
        return float(np.sum(self.rewards))


@dataclass
class BaselineState:
    """Exponential moving average of episode returns G_0.

    Starts empty; the first observed return initializes it.
    """

    decay: float = 0.95
    value_estimate: Optional[float] = None

    def update(self, first_return: float) -> None:
        if self.value_estimate is None:
            self.value_estimate = float(first_return)
        else:
            self.value_estimate = self.decay * self.value_estimate + (1 - self.decay) * float(first_return)


@dataclass(frozen=True)
class UpdateReport:
    episode: int
    episode_return: float
    episode_length: int
    loss: float
    grad_norm_pre_clip: float
    grad_norm_post_clip: float
    lr_used: float
    circuit_evals: int
    wall_clock: float


def compute_returns(rewards, gamma: float) -> np.ndarray:
    """Discounted reward-to-go by backward recursion."""
    rewards = np.asarray(rewards, dtype=np.float64)
    out = np.empty_like(rewards)
    running = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        running = rewards[t] + gamma * running
        out[t] = running
    return out


def compute_advantages(returns, baseline: BaselineState, standardize: bool = False) -> np.ndarray:
    """A_t = G_t - b with the current scalar baseline, then move b toward G_0."""
    returns = np.asarray(returns, dtype=np.float64)
    if returns.size == 0:
        raise ValueError("returns must be non-empty")
    if baseline.value_estimate is None:
        baseline.update(returns[0])
    advantages = returns - baseline.value_estimate
    baseline.update(returns[0])
    if standardize and advantages.size > 1:
        advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)
    return advantages


def clip_gradient(grad, tau: float):
    """Rescale to global L2 norm ``tau`` when larger; returns (grad, pre_norm, post_norm)."""
    if not tau > 0:
        raise ConfigurationError("clip threshold must be positive")
    grad = np.asarray(grad, dtype=np.float64)
    norm = float(np.linalg.norm(grad))
    if norm > tau:
        grad = grad * (tau / norm)
    return grad, norm, float(np.linalg.norm(grad))


def lr_schedule(episode_index: int, config: TrainConfig) -> float:
    return config.lr0 * config.lr_decay**episode_index


def episode_loss(trajectory: Trajectory, policy, config: TrainConfig):
    """Regularized loss for one episode and its gradient w.r.t. the flat parameters.

    Returns ``(loss, grad, circuit_evals)``.
    """
    loss, grad, evals = policy.episode_terms(
        trajectory.observations, trajectory.actions, trajectory.advantages, config.entropy_weight
    )
    theta = policy.flat()
    loss += config.l2_weight * float(theta @ theta)
    grad = grad + 2.0 * config.l2_weight * theta
    if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
        raise TrainingError(f"non-finite loss {loss} (episode length {trajectory.episode_length})")
    return loss, grad, evals


def batch_loss(trajectories, policy, config: TrainConfig):
    """Monte Carlo average over N episodes: ``(mean loss, mean grad, per-episode results)``."""
    per_episode = [episode_loss(t, policy, config) for t in trajectories]
    loss = float(np.mean([r[0] for r in per_episode]))
    grad = np.mean([r[1] for r in per_episode], axis=0)
    return loss, grad, per_episode


class SGD:
    def step(self, theta, grad, lr):
        return theta - lr * grad


class Adam:
    def __init__(self, size, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0

    def step(self, theta, grad, lr):
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return theta - lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(name: str, size: int):
    return Adam(size) if name == "adam" else SGD()


def rollout(policy, env: CartPoleEnv, episode_seed, action_rng, deterministic: bool = False,
            horizon: int = HORIZON) -> Trajectory:
    """Run one episode, recording the observations the policy actually saw."""
    obs = env.reset(episode_seed)
    observations, actions, rewards = [], [], []
    truncated = False
    for _ in range(horizon):
        dist = policy.distribution(obs, action_rng)
        if deterministic:
            action = int(np.argmax(dist.probs))
        else:
            action = sample_action(dist, action_rng)
        result = env.step(action)
        observations.append(obs)
        actions.append(action)
        rewards.append(result.reward)
        obs = result.next_obs
        if result.done:
            truncated = result.truncated
            break
    return Trajectory(np.array(observations), np.array(actions, dtype=np.int64),
                      np.array(rewards), truncated=truncated)


def make_policy(agent_kind: str, seed_seq, hidden: int = 64, n_qubits: int = 4, depth: int = 3,
                kappa: float = 1.0, embed_axis: str = "X", sigma_z: float = 0.0,
                s_max=NormalizationSpec.s_max):
    rng = np.random.default_rng(seed_seq)
    if agent_kind == "classical":
        return MlpPolicy(MlpParams.init(hidden, rng))
    if agent_kind == "quantum":
        params = VqcParams.random(n_qubits, depth, rng, scale=0.1, embed_scale=kappa, embed_axis=embed_axis)
        return VqcPolicy(params, NormalizationSpec(tuple(s_max), kappa), MeasurementNoiseModel(sigma_z))
    raise ConfigurationError(f"unknown agent kind {agent_kind!r}")


@dataclass
class TrainResult:
    policy: object
    log: list = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def returns(self) -> np.ndarray:
        return np.array([r.episode_return for r in self.log])

    @property
    def circuit_evals(self) -> int:
        return sum(r.circuit_evals for r in self.log)


def train(agent_kind: str, config: TrainConfig, env: Optional[CartPoleEnv] = None, seed: int = 42,
          policy=None, callback=None, **policy_kwargs) -> TrainResult:
    """Hybrid training loop; deterministic given ``seed`` and ``config``.

    ``callback`` receives each :class:`UpdateReport` as soon as its update is
    applied.  Wall-clock fields are the only non-deterministic output.
    """
    init_seq, episode_seq, action_seq, noise_seq = np.random.SeedSequence(seed).spawn(4)
    if policy is None:
        policy = make_policy(agent_kind, init_seq, **policy_kwargs)
    if env is None:
        env = CartPoleEnv()
    env.rng = np.random.default_rng(noise_seq)
    episode_rng = np.random.default_rng(episode_seq)
    action_rng = np.random.default_rng(action_seq)
    optimizer = make_optimizer(config.optimizer, policy.n_params)
    baseline = BaselineState(config.baseline_decay)

    result = TrainResult(policy)
    start = time.perf_counter()
    batch = []
    for episode in range(config.episodes):
        episode_start = time.perf_counter()
        seed_i = int(episode_rng.integers(2**63))
        traj = rollout(policy, env, seed_i, action_rng, horizon=config.horizon)
        traj.returns = compute_returns(traj.rewards, config.gamma)
        traj.advantages = compute_advantages(traj.returns, baseline, config.standardize_advantages)
        batch.append((episode, traj, time.perf_counter() - episode_start))
        if len(batch) < config.batch_episodes and episode < config.episodes - 1:
            continue

        update_start = time.perf_counter()
        _, grad, per_episode = batch_loss([b[1] for b in batch], policy, config)
        clipped, pre, post = clip_gradient(grad, config.clip_threshold)
        lr = lr_schedule(episode, config)
        theta = optimizer.step(policy.flat(), clipped, lr)
        if not np.all(np.isfinite(theta)):
            raise TrainingError(f"non-finite parameters after update at episode {episode}")
        policy = policy.with_flat(theta)
        update_share = (time.perf_counter() - update_start) / len(batch)
        for (ep, tr, wall), (loss, _, evals) in zip(batch, per_episode):
            report = UpdateReport(ep, tr.episode_return, tr.episode_length, loss, pre, post, lr, evals,
                                  wall + update_share)
            result.log.append(report)
            if callback is not None:
                callback(report)
        batch = []
    result.policy = policy
    result.wall_clock = time.perf_counter() - start
    return result
