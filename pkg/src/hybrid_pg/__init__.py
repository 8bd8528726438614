"""REINFORCE training of MLP and variational-quantum-circuit policies on CartPole."""

from hybrid_pg.cartpole import CartPoleEnv, CartPoleState, dynamics
from hybrid_pg.evaluation import EvalConfig, EvalReport, count_parameters, evaluate
from hybrid_pg.policies import MlpParams, MlpPolicy, NormalizationSpec, VqcPolicy
from hybrid_pg.quantum import VqcParams, parameter_shift_gradient, run_vqc
from hybrid_pg.reinforce import TrainConfig, train

__all__ = [
    "CartPoleEnv", "CartPoleState", "dynamics", "EvalConfig", "EvalReport", "count_parameters",
    "evaluate", "MlpParams", "MlpPolicy", "NormalizationSpec", "VqcPolicy", "VqcParams",
    "parameter_shift_gradient", "run_vqc", "TrainConfig", "train",
]
