"""Train both agents on the same seeds and print a side-by-side summary.

Reports the final-50-episode training return, the noise sweep of each trained
policy, parameter counts and the circuit-evaluation budget of the VQC.

    python3 scripts/compare_agents.py --seeds 0 1 2 --episodes 400
"""

import argparse
import json

import numpy as np

from hybrid_pg.evaluation import EvalConfig, count_parameters, efficiency_profile, evaluate
from hybrid_pg.reinforce import TrainConfig, train


def run(agent, seeds, episodes, rollouts):
    finals, sweeps, evals, clock = [], [], 0, 0.0
    for seed in seeds:
        result = train(agent, TrainConfig(episodes=episodes), seed=seed)
        finals.append(float(np.mean(result.returns[-50:])))
        report = evaluate(result.policy, EvalConfig(rollouts_per_point=rollouts))
        sweeps.append([row.mean_return for row in report.rows])
        profile = efficiency_profile(result.log, agent)
        evals += profile.circuit_evaluations or 0
        clock += result.wall_clock
    return {
        "agent": agent,
        "parameters": count_parameters(agent),
        "final50_mean": float(np.mean(finals)),
        "final50_std": float(np.std(finals)),
        "final50_per_seed": finals,
        "sweep_sigma": list(EvalConfig().noise_levels),
        "sweep_mean_return": np.mean(sweeps, axis=0).tolist(),
        "circuit_evaluations": evals if agent == "quantum" else None,
        "train_seconds": clock,
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    parser.add_argument("--episodes", type=int, default=400)
    parser.add_argument("--rollouts", type=int, default=20)
    parser.add_argument("--agents", nargs="+", default=["classical", "quantum"],
                        choices=["classical", "quantum"])
    parser.add_argument("--json", help="also write the summary to this path")
    args = parser.parse_args(argv)

    rows = [run(agent, args.seeds, args.episodes, args.rollouts) for agent in args.agents]
    for row in rows:
        sweep = "  ".join(f"{s:.2f}:{m:.1f}" for s, m in zip(row["sweep_sigma"], row["sweep_mean_return"]))
        print(f"{row['agent']:>9}  params={row['parameters']:<5}  "
              f"final50={row['final50_mean']:.1f}±{row['final50_std']:.1f}  "
              f"sweep[{sweep}]  train={row['train_seconds']:.0f}s")
        if row["circuit_evaluations"] is not None:
            print(f"{'':>9}  circuit evaluations={row['circuit_evaluations']}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
