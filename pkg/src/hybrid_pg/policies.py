"""Action-selection policies: a tanh MLP with softmax head and the VQC Bernoulli policy.

Both policies expose the same episode-level interface used by the trainer:
``distribution`` for acting, ``episode_terms`` for the summed
advantage-weighted log-likelihood and entropy terms plus their gradient
with respect to the flat parameter vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hybrid_pg.quantum import (
    ConfigurationError,
    MeasurementNoiseModel,
    ShapeError,
    VqcParams,
    apply_measurement_noise,
    circuit_evals_per_step,
    parameter_shift_batch,
    run_vqc,
    run_vqc_batch,
)

LN2 = float(np.log(2.0))
OBS_DIM = 4
N_ACTIONS = 2


class NumericError(FloatingPointError):
    pass


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-np.logaddexp(0.0, -x))


@dataclass(frozen=True)
class PolicyDistribution:
    probs: np.ndarray
    logits: np.ndarray
    log_probs: np.ndarray
    entropy: float

    @classmethod
    def from_logits(cls, logits) -> PolicyDistribution:
        logits = np.asarray(logits, dtype=np.float64)
        shifted = logits - np.max(logits)
        log_probs = shifted - np.log(np.sum(np.exp(shifted)))
        probs = np.exp(log_probs)
        support = probs > 0
        entropy = float(-np.sum(probs[support] * log_probs[support]))
        return cls(probs, logits, log_probs, min(max(entropy, 0.0), LN2))


# --- state normalization ---------------------------------------------------


@dataclass(frozen=True)
class NormalizationSpec:
    s_max: tuple = (2.4, 3.0, 0.21, 3.0)
    kappa: float = 1.0

    def __post_init__(self):
        if np.any(np.asarray(self.s_max, dtype=float) <= 0):
            raise ConfigurationError(f"s_max entries must be positive, got {self.s_max}")
        if not self.kappa > 0:
            raise ConfigurationError("kappa must be positive")


def normalize_state(obs, spec: NormalizationSpec) -> np.ndarray:
    """Clip each dimension to +-s_max, then rescale onto [-kappa*pi, kappa*pi]."""
    s_max = np.asarray(spec.s_max, dtype=np.float64)
    if np.any(s_max <= 0):
        raise ConfigurationError(f"s_max entries must be positive, got {spec.s_max}")
    obs = np.asarray(obs, dtype=np.float64)
    return np.clip(obs, -s_max, s_max) * (spec.kappa * np.pi / s_max)


# --- classical MLP ---------------------------------------------------------

_MLP_FIELDS = ("W1", "b1", "W2", "b2", "W3", "b3")


@dataclass(frozen=True)
class MlpParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray

    def __post_init__(self):
        h = np.shape(self.b1)[0]
        expected = {
            "W1": (h, OBS_DIM), "b1": (h,), "W2": (h, h), "b2": (h,),
            "W3": (N_ACTIONS, h), "b3": (N_ACTIONS,),
        }
        for name in _MLP_FIELDS:
            value = np.asarray(getattr(self, name), dtype=np.float64)
            if value.shape != expected[name]:
                raise ShapeError(f"{name} has shape {value.shape}, expected {expected[name]}")
            if not np.all(np.isfinite(value)):
                raise ValueError(f"{name} has non-finite entries")
            object.__setattr__(self, name, value)

    @property
    def hidden(self) -> int:
        return self.b1.shape[0]

    @property
    def n_params(self) -> int:
        return mlp_param_count(self.hidden)

    def flat(self) -> np.ndarray:
        return np.concatenate([getattr(self, name).ravel() for name in _MLP_FIELDS])

    def with_flat(self, flat) -> MlpParams:
        return MlpParams.from_flat(flat, self.hidden)

    @classmethod
    def from_flat(cls, flat, hidden: int) -> MlpParams:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (mlp_param_count(hidden),):
            raise ShapeError(f"expected {mlp_param_count(hidden)} parameters, got shape {flat.shape}")
        shapes = [(hidden, OBS_DIM), (hidden,), (hidden, hidden), (hidden,), (N_ACTIONS, hidden), (N_ACTIONS,)]
        parts, start = [], 0
        for shape in shapes:
            size = int(np.prod(shape))
            parts.append(flat[start : start + size].reshape(shape))
            start += size
        return cls(*parts)

    @classmethod
    def zeros(cls, hidden: int) -> MlpParams:
        return cls.from_flat(np.zeros(mlp_param_count(hidden)), hidden)

    @classmethod
    def init(cls, hidden: int, rng) -> MlpParams:
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases of each layer."""
        def layer(fan_out, fan_in):
            bound = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-bound, bound, (fan_out, fan_in)), rng.uniform(-bound, bound, fan_out)

        W1, b1 = layer(hidden, OBS_DIM)
        W2, b2 = layer(hidden, hidden)
        W3, b3 = layer(N_ACTIONS, hidden)
        return cls(W1, b1, W2, b2, W3, b3)


def mlp_param_count(hidden: int) -> int:
    return OBS_DIM * hidden + hidden + hidden * hidden + hidden + N_ACTIONS * hidden + N_ACTIONS


def _check_finite(value, layer):
    if not np.all(np.isfinite(value)):
        raise NumericError(f"non-finite values at layer {layer}")


def _mlp_layers(obs, params: MlpParams):
    # obs: (T, 4)
    h1 = np.tanh(obs @ params.W1.T + params.b1)
    _check_finite(h1, "h1")
    h2 = np.tanh(h1 @ params.W2.T + params.b2)
    _check_finite(h2, "h2")
    logits = h2 @ params.W3.T + params.b3
    _check_finite(logits, "logits")
    return h1, h2, logits


def _log_softmax(logits):
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def mlp_forward(obs, params: MlpParams) -> PolicyDistribution:
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape != (OBS_DIM,):
        raise ShapeError(f"observation must have shape ({OBS_DIM},), got {obs.shape}")
    _check_finite(obs, "input")
    _, _, logits = _mlp_layers(obs[None, :], params)
    return PolicyDistribution.from_logits(logits[0])


def mlp_episode_terms(obs, actions, weights, entropy_weight, params: MlpParams):
    """Value and gradient of ``-sum_t w_t log pi(a_t|s_t) - beta * sum_t H_t``.

    Manual reverse mode through the three affine maps; the gradient is
    returned as an ``MlpParams`` of matching shapes.
    """
    obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
    actions = np.asarray(actions, dtype=np.int64).reshape(-1)
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    h1, h2, logits = _mlp_layers(obs, params)
    log_probs = _log_softmax(logits)
    probs = np.exp(log_probs)
    entropy = -np.sum(probs * log_probs, axis=1)
    rows = np.arange(len(actions))
    loss = -np.sum(weights * log_probs[rows, actions]) - entropy_weight * np.sum(entropy)

    onehot = np.zeros_like(probs)
    onehot[rows, actions] = 1.0
    # d(-w log p_a)/dlogits = w (p - onehot);  dH/dlogits_j = -p_j (log p_j + H)
    d_logits = weights[:, None] * (probs - onehot)
    d_logits += entropy_weight * probs * (log_probs + entropy[:, None])

    dW3 = d_logits.T @ h2
    db3 = d_logits.sum(axis=0)
    d_pre2 = (d_logits @ params.W3) * (1.0 - h2**2)
    dW2 = d_pre2.T @ h1
    db2 = d_pre2.sum(axis=0)
    d_pre1 = (d_pre2 @ params.W2) * (1.0 - h1**2)
    dW1 = d_pre1.T @ obs
    db1 = d_pre1.sum(axis=0)
    return float(loss), MlpParams(dW1, db1, dW2, db2, dW3, db3)


def mlp_backward(obs, action: int, advantage_weight: float, params: MlpParams) -> MlpParams:
    """Gradient of ``-advantage_weight * log pi(action | obs)``."""
    if action not in (0, 1):
        raise ValueError(f"action must be 0 or 1, got {action!r}")
    _, grad = mlp_episode_terms(np.asarray(obs)[None, :], [action], [advantage_weight], 0.0, params)
    return grad


# --- VQC Bernoulli policy --------------------------------------------------


def _check_kappa(params: VqcParams, spec: NormalizationSpec) -> None:
    if spec.kappa != params.embed_scale:
        raise ConfigurationError(
            f"normalization kappa {spec.kappa} differs from circuit embed_scale {params.embed_scale}"
        )


def bernoulli_distribution(z: float) -> PolicyDistribution:
    """pi(1) = sigmoid(2z); logits are indexed by action, i.e. [-z, z]."""
    return PolicyDistribution.from_logits(np.array([-z, z], dtype=np.float64))


def vqc_policy(obs, params: VqcParams, spec: NormalizationSpec,
               noise: MeasurementNoiseModel = MeasurementNoiseModel(), rng=None) -> PolicyDistribution:
    _check_kappa(params, spec)
    z = run_vqc(normalize_state(obs, spec), params)
    if noise.sigma_z > 0:
        if rng is None:
            raise ConfigurationError("measurement noise needs a random generator")
        z = apply_measurement_noise(z, noise, rng)
    return bernoulli_distribution(z)


def _bernoulli_dz(z, actions, weights, entropy_weight):
    """Per-step d/dz of ``-w log pi(a) - beta H`` and the loss itself."""
    p1 = sigmoid(2.0 * z)
    log_p1 = -np.logaddexp(0.0, -2.0 * z)
    log_p0 = -np.logaddexp(0.0, 2.0 * z)
    log_pa = np.where(actions == 1, log_p1, log_p0)
    entropy = -(p1 * log_p1 + (1.0 - p1) * log_p0)
    loss = -np.sum(weights * log_pa) - entropy_weight * np.sum(entropy)
    # dlog pi(a)/dz = 2 (a - p1);  dH/dz = -4 z p1 (1 - p1)
    dz = -weights * 2.0 * (actions - p1) + entropy_weight * 4.0 * z * p1 * (1.0 - p1)
    return float(loss), dz


def vqc_episode_terms(scaled_obs, actions, weights, entropy_weight, params: VqcParams):
    """Loss terms over a whole episode with gradient chained through parameter shift.

    ``scaled_obs`` are normalized observations, shape (T, d).  Returns
    ``(loss, grad (P,), circuit_evaluations)``.
    """
    actions = np.asarray(actions, dtype=np.float64).reshape(-1)
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    z, dz_dtheta, shift_evals = parameter_shift_batch(scaled_obs, params)
    loss, dz = _bernoulli_dz(z, actions, weights, entropy_weight)
    return loss, dz @ dz_dtheta, shift_evals + len(z)


def vqc_logprob_gradient(obs, action: int, advantage_weight: float, params: VqcParams,
                         spec: NormalizationSpec) -> np.ndarray:
    """Gradient of ``-advantage_weight * log pi(action | obs)``, shaped like the angles.

    Evaluated at the noiseless expectation value.
    """
    if action not in (0, 1):
        raise ValueError(f"action must be 0 or 1, got {action!r}")
    _check_kappa(params, spec)
    scaled = normalize_state(obs, spec)[None, :]
    _, grad, _ = vqc_episode_terms(scaled, [action], [advantage_weight], 0.0, params)
    return grad.reshape(params.angles.shape)


def sample_action(dist: PolicyDistribution, rng) -> int:
    """One uniform draw; action 1 when it falls below pi(1)."""
    return int(rng.random() < dist.probs[1])


# --- shared policy interface ----------------------------------------------


@dataclass
class MlpPolicy:
    params: MlpParams
    kind: str = field(default="classical", init=False)

    @property
    def n_params(self) -> int:
        return self.params.n_params

    def flat(self) -> np.ndarray:
        return self.params.flat()

    def with_flat(self, flat) -> MlpPolicy:
        return MlpPolicy(self.params.with_flat(flat))

    def distribution(self, obs, rng=None) -> PolicyDistribution:
        return mlp_forward(obs, self.params)

    def episode_terms(self, obs, actions, weights, entropy_weight):
        """(loss, flat gradient, circuit evaluations) for one episode."""
        loss, grad = mlp_episode_terms(obs, actions, weights, entropy_weight, self.params)
        return loss, grad.flat(), 0

    def shape(self) -> dict:
        return {"hidden": self.params.hidden}


@dataclass
class VqcPolicy:
    params: VqcParams
    norm: NormalizationSpec = None
    noise: MeasurementNoiseModel = MeasurementNoiseModel()
    kind: str = field(default="quantum", init=False)

    def __post_init__(self):
        if self.norm is None:
            self.norm = NormalizationSpec(kappa=self.params.embed_scale)
        _check_kappa(self.params, self.norm)

    @property
    def n_params(self) -> int:
        return self.params.n_params

    @property
    def evals_per_step(self) -> int:
        return circuit_evals_per_step(self.params.n_qubits, self.params.depth)

    def flat(self) -> np.ndarray:
        return self.params.flat()

    def with_flat(self, flat) -> VqcPolicy:
        return VqcPolicy(self.params.with_flat(flat), self.norm, self.noise)

    def distribution(self, obs, rng=None) -> PolicyDistribution:
        return vqc_policy(obs, self.params, self.norm, self.noise, rng)

    def episode_terms(self, obs, actions, weights, entropy_weight):
        scaled = normalize_state(np.atleast_2d(obs), self.norm)
        return vqc_episode_terms(scaled, actions, weights, entropy_weight, self.params)

    def expectation_batch(self, obs) -> np.ndarray:
        return run_vqc_batch(normalize_state(np.atleast_2d(obs), self.norm), self.params)

    def shape(self) -> dict:
        return {
            "n_qubits": self.params.n_qubits,
            "depth": self.params.depth,
            "embed_scale": self.params.embed_scale,
            "embed_axis": self.params.embed_axis,
            "s_max": list(self.norm.s_max),
        }
