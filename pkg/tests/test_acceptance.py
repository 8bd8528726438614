"""End-to-end acceptance checks.

Each test prints one ``CRITERION n: PASS|FAIL`` line to the terminal, even
under output capture, then re-raises on failure so pytest reports it too.
"""

import contextlib
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybrid_pg.cartpole import CartPoleState, dynamics
from hybrid_pg.cli import run_training
from hybrid_pg.evaluation import EvalConfig, count_parameters, evaluate
from hybrid_pg.policies import (
    LN2,
    MlpParams,
    PolicyDistribution,
    bernoulli_distribution,
    mlp_episode_terms,
    mlp_forward,
)
from hybrid_pg.quantum import (
    VqcParams,
    apply_cnot,
    apply_rotation,
    new_statevector,
    parameter_shift_gradient,
    run_vqc,
)
from hybrid_pg.reinforce import TrainConfig, clip_gradient, compute_returns, train
from hybrid_pg.runstore import RunConfig, load_weights, save_weights
from hybrid_pg.testing import central_difference, dense_expectation

MLP_SEEDS = range(5)


@contextlib.contextmanager
def criterion(n, name, capsys, limit_s):
    start = time.perf_counter()
    detail = {}
    try:
        yield detail
        elapsed = time.perf_counter() - start
        assert elapsed < limit_s, f"runtime {elapsed:.1f}s over the {limit_s}s limit"
    except BaseException as exc:
        with capsys.disabled():
            print(f"\nCRITERION {n}: FAIL  {name}  ({exc})")
        raise
    extra = "  ".join(f"{k}={v}" for k, v in detail.items())
    with capsys.disabled():
        print(f"\nCRITERION {n}: PASS  {name}  [{time.perf_counter() - start:.1f}s]  {extra}")


@pytest.fixture(scope="session")
def mlp_runs():
    return [train("classical", TrainConfig(episodes=400), seed=s, hidden=64) for s in MLP_SEEDS]


def test_criterion_01_parameter_shift(capsys):
    with criterion(1, "parameter shift vs central differences", capsys, 30) as info:
        worst = 0.0
        for depth in (2, 3, 4):
            for draw in range(20):
                rng = np.random.default_rng(1000 * depth + draw)
                params = VqcParams.random(4, depth, rng, scale=np.pi)
                obs = rng.uniform(-np.pi, np.pi, 4)
                grad = parameter_shift_gradient(obs, params).grads
                fd = central_difference(lambda f: run_vqc(obs, params.with_flat(f)), params.flat(), h=1e-4)
                worst = max(worst, float(np.max(np.abs(grad - fd))))
        info["max_abs_err"] = f"{worst:.2e}"
        assert worst <= 1e-6


def test_criterion_02_dense_oracle(capsys):
    with criterion(2, "statevector vs dense-matrix oracle", capsys, 10) as info:
        worst = 0.0
        for draw in range(100):
            rng = np.random.default_rng(draw)
            d, depth = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            params = VqcParams.random(d, depth, rng, scale=np.pi)
            obs = rng.uniform(-np.pi, np.pi, d)
            worst = max(worst, abs(run_vqc(obs, params) - dense_expectation(obs, params.angles)))
        info["max_abs_err"] = f"{worst:.2e}"
        assert worst <= 1e-10


def test_criterion_03_mlp_gradient(capsys):
    with criterion(3, "MLP episode-loss gradient vs finite differences", capsys, 30) as info:
        worst = 0.0
        for draw in range(20):
            rng = np.random.default_rng(draw)
            hidden, length = 6, int(rng.integers(2, 8))
            n = MlpParams.zeros(hidden).n_params
            params = MlpParams.from_flat(0.7 * rng.standard_normal(n), hidden)
            obs = rng.standard_normal((length, 4))
            actions = rng.integers(2, size=length)
            weights = rng.normal(size=length)

            def loss(flat):
                return mlp_episode_terms(obs, actions, weights, 0.01, MlpParams.from_flat(flat, hidden))[0]

            grad = mlp_episode_terms(obs, actions, weights, 0.01, params)[1].flat()
            fd = central_difference(loss, params.flat(), h=1e-5)
            rel = np.abs(grad - fd) / np.maximum(np.abs(fd), 1e-3)
            worst = max(worst, float(rel.max()))
        info["max_rel_err"] = f"{worst:.2e}"
        assert worst <= 1e-4


def test_criterion_04_mlp_convergence(capsys, mlp_runs):
    with criterion(4, "MLP convergence over 5 seeds", capsys, 300) as info:
        finals = [float(np.mean(r.returns[-50:])) for r in mlp_runs]
        train_s = sum(r.wall_clock for r in mlp_runs)
        info["train_s"] = round(train_s, 1)
        assert train_s < 300
        info["final50"] = [round(f, 1) for f in finals]
        assert sum(f >= 400 for f in finals) >= 3
        assert sum(f >= 475 for f in finals) >= 1


def test_criterion_05_vqc_viability(capsys):
    with criterion(5, "VQC 400-episode training run", capsys, 900) as info:
        result = train("quantum", TrainConfig(episodes=400), seed=0)
        assert len(result.log) == 400
        assert all(np.isfinite(r.loss) for r in result.log)
        assert max(r.grad_norm_post_clip for r in result.log) <= 1.0 + 1e-9
        assert all(r.circuit_evals == 73 * r.episode_length for r in result.log)
        info["final50"] = round(float(np.mean(result.returns[-50:])), 1)
        info["circuit_evals"] = result.circuit_evals


def test_criterion_06_noise_sweep(capsys, mlp_runs):
    # training time is charged to criterion 4; this times the sweep alone
    with criterion(6, "noise sweep shape", capsys, 180) as info:
        report = evaluate(mlp_runs[0].policy, EvalConfig())
        sigmas = [row.sigma for row in report.rows]
        info["means"] = [round(row.mean_return, 1) for row in report.rows]
        assert sigmas == [0.0, 0.02, 0.05, 0.10]
        assert report.row(0.10).mean_return <= report.row(0.0).mean_return


def test_criterion_07_parameter_counts(capsys):
    with criterion(7, "parameter counts", capsys, 1):
        assert count_parameters("quantum", n_qubits=4, depth=3) == 36
        assert count_parameters("classical", hidden=64) == 4610


def test_criterion_08_physics(capsys):
    with criterion(8, "cart-pole physics", capsys, 5):
        nxt = dynamics(CartPoleState(0.0, 0.0, 0.0, 0.0), 1)
        assert abs(nxt.x_dot - 0.19512) <= 1e-5
        assert abs(nxt.theta_dot + 0.29268) <= 1e-5
        rng = np.random.default_rng(8)
        lo, hi = np.array([-2.4, -5, -0.21, -5]), np.array([2.4, 5, 0.21, 5])
        for _ in range(1000):
            state = CartPoleState.from_array(rng.uniform(lo, hi))
            action = int(rng.integers(2))
            a = dynamics(state, action).as_array()
            b = dynamics(-state, 1 - action).as_array()
            assert np.max(np.abs(a + b)) <= 1e-12


def test_criterion_09_determinism(capsys, tmp_path):
    with criterion(9, "determinism and persistence", capsys, 60):
        logs = []
        for root in ("a", "b"):
            cfg = RunConfig(agent="classical", episodes=40, exp="det", seed=11)
            run_training(cfg, tmp_path / root)
            logs.append((tmp_path / root / "det" / "reward_log.csv").read_bytes())
        assert logs[0] == logs[1]

        eval_cfg = EvalConfig(rollouts_per_point=3, noise_levels=(0.0, 0.1), seeds=(0, 1))
        for kind in ("classical", "quantum"):
            policy = train(kind, TrainConfig(episodes=5), seed=2).policy
            path = tmp_path / f"{kind}.json"
            save_weights(path, policy)
            loaded = load_weights(path)
            assert loaded.flat().tobytes() == policy.flat().tobytes()
            assert evaluate(loaded, eval_cfg).to_json() == evaluate(policy, eval_cfg).to_json()


def test_criterion_10_invariants(capsys):
    many = settings(max_examples=1000, deadline=None, database=None)
    gates = st.lists(
        st.tuples(st.sampled_from(["X", "Y", "Z", "CNOT"]), st.integers(0, 5), st.integers(0, 5),
                  st.floats(-10, 10)),
        max_size=100,
    )

    @many
    @given(n=st.integers(1, 6), ops=gates)
    def norm_preserved(n, ops):
        state = new_statevector(n)
        for kind, q1, q2, angle in ops:
            q1, q2 = q1 % n, q2 % n
            if kind == "CNOT":
                if q1 != q2:
                    state = apply_cnot(state, q1, q2)
            else:
                state = apply_rotation(state, q1, kind, angle)
        assert abs(state.norm - 1.0) <= 1e-12

    @many
    @given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.01, 20), z=st.floats(-1, 1))
    def simplex_and_entropy(seed, scale, z):
        rng = np.random.default_rng(seed)
        params = MlpParams.from_flat(scale * rng.standard_normal(MlpParams.zeros(4).n_params), 4)
        for dist in (mlp_forward(rng.standard_normal(4) * scale, params), bernoulli_distribution(z)):
            assert np.all(dist.probs >= 0) and abs(dist.probs.sum() - 1) <= 1e-12
            assert 0 <= dist.entropy <= LN2

    @many
    @given(rewards=st.lists(st.floats(-100, 100), min_size=1, max_size=60), gamma=st.floats(0.01, 1.0))
    def return_recursion(rewards, gamma):
        g = compute_returns(rewards, gamma)
        assert g[-1] == rewards[-1]
        assert all(g[t] == rewards[t] + gamma * g[t + 1] for t in range(len(rewards) - 1))

    @many
    @given(grad=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50), tau=st.floats(1e-3, 1e3))
    def clip_contract(grad, tau):
        g = np.array(grad)
        clipped, pre, post = clip_gradient(g, tau)
        assert post <= tau + 1e-9 and post <= pre + 1e-9
        if pre > 0:
            assert np.dot(clipped, g) == pytest.approx(np.linalg.norm(clipped) * pre, rel=1e-9)

    @many
    @given(logits=st.lists(st.floats(-50, 50), min_size=2, max_size=2))
    def softmax_bounds(logits):
        dist = PolicyDistribution.from_logits(logits)
        assert abs(dist.probs.sum() - 1) <= 1e-12 and 0 <= dist.entropy <= LN2

    with criterion(10, "property suites at 1000 cases each", capsys, 60):
        for prop in (norm_preserved, simplex_and_entropy, return_recursion, clip_contract, softmax_bounds):
            prop()
