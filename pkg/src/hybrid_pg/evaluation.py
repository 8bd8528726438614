"""Post-training evaluation: noise sweeps, multi-seed aggregation, efficiency accounting."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from hybrid_pg.cartpole import HORIZON, CartPoleEnv, ObservationNoiseSpec
from hybrid_pg.policies import mlp_param_count
from hybrid_pg.quantum import ConfigurationError, circuit_evals_per_step
from hybrid_pg.reinforce import rollout

REPORT_SCHEMA_VERSION = 1
DEFAULT_NOISE_LEVELS = (0.0, 0.02, 0.05, 0.10)
SWEEP_HEADER = ["sigma", "mean_return", "std_return", "success_rate"]


@dataclass(frozen=True)
class EvalConfig:
    rollouts_per_point: int = 20
    noise_levels: tuple = DEFAULT_NOISE_LEVELS
    seeds: tuple = (0, 1, 2, 3, 4)
    deterministic_actions: bool = False
    horizon: int = HORIZON

    def __post_init__(self):
        if self.rollouts_per_point < 1:
            raise ConfigurationError("rollouts_per_point must be >= 1")
        if not self.seeds:
            raise ConfigurationError("at least one evaluation seed is required")
        if any(s < 0 for s in self.noise_levels):
            raise ConfigurationError("noise levels must be >= 0")
        object.__setattr__(self, "noise_levels", tuple(sorted(float(s) for s in self.noise_levels)))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))


@dataclass
class NoiseRow:
    sigma: float
    mean_return: float
    std_return: float
    success_rate: float
    returns: list = field(default_factory=list)


@dataclass
class EvalReport:
    agent_kind: str
    rows: list
    parameter_count: int
    source: str = "evaluation_rollouts"
    train_wall_clock_seconds: Optional[float] = None
    vqc_circuit_evaluations: Optional[int] = None
    config: dict = field(default_factory=dict)

    def row(self, sigma: float) -> NoiseRow:
        for r in self.rows:
            if r.sigma == sigma:
                return r
        raise KeyError(sigma)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["schema_version"] = REPORT_SCHEMA_VERSION
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def sweep_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for r in self.rows:
            writer.writerow([repr(r.sigma), repr(r.mean_return), repr(r.std_return), repr(r.success_rate)])
        return buf.getvalue()


def _aggregate(sigma: float, returns, horizon: int) -> NoiseRow:
    returns = np.asarray(returns, dtype=np.float64)
    return NoiseRow(
        sigma=float(sigma),
        mean_return=float(np.mean(returns)),
        std_return=float(np.std(returns)),
        success_rate=float(np.count_nonzero(returns >= horizon)) / len(returns),
        returns=[float(r) for r in returns],
    )


def _cell_rng(seed: int, cell: int, stream: int):
    return np.random.default_rng(np.random.SeedSequence([seed, cell, stream]))


def evaluate(policy, config: EvalConfig = EvalConfig(), env: Optional[CartPoleEnv] = None) -> EvalReport:
    """Mean/std/success over ``rollouts_per_point x len(seeds)`` episodes per noise level.

    Every noise level reuses the same initial states for a given seed, so
    rows differ only by the injected observation noise.  Returns are
    undiscounted (unit reward per surviving step).
    """
    env = env or CartPoleEnv(horizon=config.horizon)
    rows = []
    for sigma in config.noise_levels:
        returns = []
        for seed in config.seeds:
            starts = _cell_rng(seed, 0, 0).integers(2**63, size=config.rollouts_per_point)
            noisy = CartPoleEnv(ObservationNoiseSpec(sigma), env.reward_mode, config.horizon,
                                plant=env.plant)
            noisy.rng = _cell_rng(seed, 1, int(round(sigma * 1e9)))
            action_rng = _cell_rng(seed, 2, 0)
            for start in starts:
                traj = rollout(policy, noisy, int(start), action_rng,
                               deterministic=config.deterministic_actions, horizon=config.horizon)
                returns.append(traj.episode_return)
        rows.append(_aggregate(sigma, returns, config.horizon))
    return EvalReport(
        agent_kind=policy.kind,
        rows=rows,
        parameter_count=policy.n_params,
        config={**asdict(config), "shape": policy.shape()},
    )


def summarize_training_log(log, agent_kind: str, parameter_count: int, horizon: int = HORIZON) -> EvalReport:
    """Aggregate the training trace itself (the alternative reading of a
    "mean over N episodes" summary); reported as a single noise-free row."""
    returns = [r.episode_return for r in log]
    return EvalReport(agent_kind, [_aggregate(0.0, returns, horizon)], parameter_count,
                      source="training_log")


def count_parameters(agent_kind: str, hidden: int = 64, n_qubits: int = 4, depth: int = 3) -> int:
    if agent_kind == "classical":
        return mlp_param_count(hidden)
    if agent_kind == "quantum":
        return 3 * n_qubits * depth
    raise ConfigurationError(f"unknown agent kind {agent_kind!r}")


@dataclass(frozen=True)
class EfficiencyProfile:
    wall_clock: float
    timesteps: int
    circuit_evaluations: Optional[int] = None
    evals_per_timestep: Optional[int] = None
    evals_per_episode: Optional[list] = None


def efficiency_profile(train_log, agent_kind: str, n_qubits: int = 4, depth: int = 3) -> EfficiencyProfile:
    """Wall-clock and, for the VQC, circuit evaluations of the gradient passes."""
    wall = float(sum(r.wall_clock for r in train_log))
    lengths = [r.episode_length for r in train_log]
    if agent_kind == "classical":
        return EfficiencyProfile(wall, sum(lengths))
    per_step = circuit_evals_per_step(n_qubits, depth)
    per_episode = [per_step * t for t in lengths]
    return EfficiencyProfile(wall, sum(lengths), sum(per_episode), per_step, per_episode)
