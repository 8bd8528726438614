"""Command-line entry point.

    hybrid-pg train --agent classical --episodes 400 --lr 0.005 --hidden 64 --exp mlp_stable --noise 0.0
    hybrid-pg eval --exp mlp_stable [--sigma 0.0 0.05] [--rollouts 20] [--seeds 0 1 2 3 4]

``train`` may be omitted: an argument list starting with a flag is treated
as a training command.  Exit codes: 0 success, 1 usage error, 2 runtime or
I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from hybrid_pg.cartpole import CartPoleEnv, ObservationNoiseSpec
from hybrid_pg.evaluation import EvalConfig, efficiency_profile, evaluate, summarize_training_log
from hybrid_pg.reinforce import TrainConfig, TrainingError, train
from hybrid_pg.quantum import ConfigurationError
from hybrid_pg.runstore import (
    RunArtifacts,
    RunConfig,
    RunStoreError,
    atomic_write,
    create_run_dir,
    load_weights,
    reward_log_csv,
    run_dir,
    save_weights,
    weights_filename,
)

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonneg_float(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return value


def _train_parser() -> argparse.ArgumentParser:
    d = RunConfig()
    p = _Parser(prog="hybrid-pg train", description="Train an MLP or VQC policy on CartPole.")
    p.add_argument("--agent", choices=["classical", "quantum"], default=d.agent)
    p.add_argument("--episodes", type=_positive_int, default=d.episodes)
    p.add_argument("--lr", type=_nonneg_float, default=d.lr)
    p.add_argument("--hidden", type=_positive_int, default=d.hidden)
    p.add_argument("--exp", default=d.exp)
    p.add_argument("--noise", type=_nonneg_float, default=d.noise,
                   help="training-time observation noise sigma")
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--gamma", type=float, default=d.gamma)
    p.add_argument("--entropy-weight", type=_nonneg_float, default=d.entropy_weight)
    p.add_argument("--l2-weight", type=_nonneg_float, default=d.l2_weight)
    p.add_argument("--clip", dest="clip_threshold", type=float, default=d.clip_threshold)
    p.add_argument("--lr-decay", type=float, default=d.lr_decay)
    p.add_argument("--baseline-decay", type=float, default=d.baseline_decay)
    p.add_argument("--batch-episodes", type=_positive_int, default=d.batch_episodes)
    p.add_argument("--optimizer", choices=["sgd", "adam"], default=d.optimizer)
    p.add_argument("--standardize-advantages", action="store_true")
    p.add_argument("--qubits", dest="n_qubits", type=_positive_int, default=d.n_qubits)
    p.add_argument("--depth", type=_positive_int, default=d.depth)
    p.add_argument("--kappa", type=float, default=d.kappa)
    p.add_argument("--embed-axis", choices=["X", "Y"], default=d.embed_axis)
    p.add_argument("--sigma-z", type=_nonneg_float, default=d.sigma_z)
    p.add_argument("--runs-dir", default="runs")
    p.add_argument("--overwrite", action="store_true")
    return p


def _eval_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hybrid-pg eval", description="Evaluate a trained run under observation noise.")
    p.add_argument("--exp", required=True)
    p.add_argument("--runs-dir", default="runs")
    p.add_argument("--sigma", type=_nonneg_float, nargs="+", default=None)
    p.add_argument("--rollouts", type=_positive_int, default=EvalConfig.rollouts_per_point)
    p.add_argument("--seeds", type=int, nargs="+", default=None)
    p.add_argument("--deterministic", action="store_true", help="argmax actions instead of sampling")
    return p


def _strip_train(argv):
    argv = list(argv)
    if argv and argv[0] == "train":
        argv = argv[1:]
    return argv


def parse_args(argv) -> RunConfig:
    """Parse training flags into a :class:`RunConfig` (raises UsageError)."""
    ns = _train_parser().parse_args(_strip_train(argv))
    values = {f.name: getattr(ns, f.name) for f in fields(RunConfig)}
    try:
        return RunConfig(**values)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def parse_train_options(argv):
    ns = _train_parser().parse_args(_strip_train(argv))
    return parse_args(argv), Path(ns.runs_dir), ns.overwrite


def config_to_argv(config: RunConfig) -> list:
    """Inverse of :func:`parse_args` for every RunConfig field."""
    flags = {"clip_threshold": "--clip", "n_qubits": "--qubits"}
    out = []
    for f in fields(RunConfig):
        flag = flags.get(f.name, "--" + f.name.replace("_", "-"))
        value = getattr(config, f.name)
        if isinstance(value, bool):
            if value:
                out.append(flag)
        else:
            out += [flag, repr(value) if isinstance(value, float) else str(value)]
    return out


def train_config(config: RunConfig) -> TrainConfig:
    return TrainConfig(
        gamma=config.gamma, entropy_weight=config.entropy_weight, l2_weight=config.l2_weight,
        clip_threshold=config.clip_threshold, lr0=config.lr, lr_decay=config.lr_decay,
        episodes=config.episodes, baseline_decay=config.baseline_decay,
        batch_episodes=config.batch_episodes, optimizer=config.optimizer,
        standardize_advantages=config.standardize_advantages,
    )


def run_training(config: RunConfig, runs_root="runs", overwrite: bool = False) -> RunArtifacts:
    directory = create_run_dir(runs_root, config.exp, overwrite)
    artifacts = RunArtifacts(directory)

    def write(name, text):
        path = directory / name
        try:
            atomic_write(path, text)
        except OSError as exc:
            raise RunStoreError(f"cannot write {path}: {exc}") from exc
        artifacts.files[name] = path

    # written before episode 0 so that a crashed run leaves its configuration behind
    write("config.json", config.to_json())
    env = CartPoleEnv(ObservationNoiseSpec(config.noise))
    result = train(
        config.agent, train_config(config), env, seed=config.seed,
        hidden=config.hidden, n_qubits=config.n_qubits, depth=config.depth,
        kappa=config.kappa, embed_axis=config.embed_axis, sigma_z=config.sigma_z,
    )
    write("reward_log.csv", reward_log_csv(result.log))
    weights = weights_filename(config.agent)
    save_weights(directory / weights, result.policy)
    artifacts.files[weights] = directory / weights

    profile = efficiency_profile(result.log, config.agent, config.n_qubits, config.depth)
    summary = {
        "train_wall_clock_seconds": result.wall_clock,
        "parameter_count": result.policy.n_params,
        "timesteps": profile.timesteps,
        "vqc_circuit_evaluations": profile.circuit_evaluations,
        "vqc_evals_per_timestep": profile.evals_per_timestep,
    }
    write("train_summary.json", json.dumps(summary, indent=2))
    report = summarize_training_log(result.log, config.agent, result.policy.n_params)
    report.train_wall_clock_seconds = result.wall_clock
    report.vqc_circuit_evaluations = profile.circuit_evaluations
    write("eval_report.json", report.to_json())
    return artifacts


def run_evaluation(exp: str, runs_root="runs", sigmas=None, rollouts: int = 20, seeds=None,
                   deterministic: bool = False) -> RunArtifacts:
    directory = run_dir(runs_root, exp)
    if not directory.is_dir():
        raise RunStoreError(f"no run directory {directory}")
    config = RunConfig.from_json((directory / "config.json").read_text())
    policy = load_weights(directory / weights_filename(config.agent))
    eval_config = EvalConfig(
        rollouts_per_point=rollouts,
        noise_levels=tuple(sigmas) if sigmas else EvalConfig.noise_levels,
        seeds=tuple(seeds) if seeds else EvalConfig.seeds,
        deterministic_actions=deterministic,
    )
    report = evaluate(policy, eval_config)
    summary_path = directory / "train_summary.json"
    if summary_path.exists():
        summary = json.loads(summary_path.read_text())
        report.train_wall_clock_seconds = summary.get("train_wall_clock_seconds")
        report.vqc_circuit_evaluations = summary.get("vqc_circuit_evaluations")
    artifacts = RunArtifacts(directory)
    for name, text in (("eval_report.json", report.to_json()), ("noise_sweep.csv", report.sweep_csv())):
        atomic_write(directory / name, text)
        artifacts.files[name] = directory / name
    return artifacts


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] == "eval":
            ns = _eval_parser().parse_args(argv[1:])
            artifacts = run_evaluation(ns.exp, ns.runs_dir, ns.sigma, ns.rollouts, ns.seeds, ns.deterministic)
        elif not argv or argv[0] == "train" or argv[0].startswith("-"):
            config, runs_root, overwrite = parse_train_options(argv)
            artifacts = run_training(config, runs_root, overwrite)
        else:
            raise UsageError(f"unknown command {argv[0]!r}; expected 'train' or 'eval'")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (RunStoreError, TrainingError, ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for name, path in sorted(artifacts.files.items()):
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
