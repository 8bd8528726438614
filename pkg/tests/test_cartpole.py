import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybrid_pg.cartpole import (
    THETA_THRESHOLD,
    X_THRESHOLD,
    CartPoleEnv,
    CartPoleState,
    ObservationNoiseSpec,
    ProtocolError,
    RewardMode,
    dynamics,
    initial_state,
    observe,
    quadratic_reward,
)
from hybrid_pg.quantum import ConfigurationError

ZERO = CartPoleState(0.0, 0.0, 0.0, 0.0)

# From the zero state with +10 N: temp = 100/11, theta_acc = -(100/11) / (41/66) = -600/41,
# x_acc = 100/11 + 0.05 * (600/41) / 1.1 = 400/41; one Euler step of 0.02 s.
X_DOT_ONE_STEP = 8 / 41
THETA_DOT_ONE_STEP = -12 / 41


def test_reset_range_and_determinism():
    for seed in range(50):
        state = initial_state(seed).as_array()
        assert np.all(np.abs(state) <= 0.05)
    assert initial_state(7) == initial_state(7)
    assert initial_state(7) != initial_state(8)


def test_zero_state_step():
    nxt = dynamics(ZERO, 1)
    assert nxt.x == 0.0 and nxt.theta == 0.0
    assert nxt.x_dot == pytest.approx(0.19512, abs=1e-5)
    assert nxt.theta_dot == pytest.approx(-0.29268, abs=1e-5)
    assert nxt.x_dot == pytest.approx(X_DOT_ONE_STEP, abs=1e-15)
    assert nxt.theta_dot == pytest.approx(THETA_DOT_ONE_STEP, abs=1e-15)
    mirror = dynamics(ZERO, 0)
    np.testing.assert_array_equal(mirror.as_array(), -nxt.as_array())


_state = st.builds(
    CartPoleState,
    st.floats(-2.4, 2.4), st.floats(-5, 5), st.floats(-0.21, 0.21), st.floats(-5, 5),
)


@settings(max_examples=1000)
@given(state=_state, action=st.integers(0, 1))
def test_mirror_symmetry(state, action):
    a = dynamics(state, action).as_array()
    b = dynamics(-state, 1 - action).as_array()
    np.testing.assert_allclose(b, -a, atol=1e-12, rtol=0)


def test_termination_on_large_angle():
    env = CartPoleEnv()
    env.reset(0)
    env.state = CartPoleState(0.0, 0.0, 0.29, 1.0)
    result = env.step(1)
    assert abs(result.state.theta) > 0.2095
    assert result.terminated and not result.truncated


def test_step_after_termination_is_error():
    env = CartPoleEnv()
    env.reset(0)
    while not env.step(0).done:
        pass
    with pytest.raises(ProtocolError):
        env.step(0)
    with pytest.raises(ProtocolError):
        CartPoleEnv().step(0)


def test_horizon_truncation():
    env = CartPoleEnv(horizon=5)
    env.reset(1)
    results = [env.step(a) for a in (0, 1, 0, 1, 0)]
    assert [r.truncated for r in results] == [False] * 4 + [True]
    assert not any(r.terminated for r in results)


@settings(max_examples=1000)
@given(seed=st.integers(0, 2**31), actions=st.lists(st.integers(0, 1), min_size=1, max_size=300))
def test_termination_and_reward_accounting(seed, actions):
    env = CartPoleEnv()
    env.reset(seed)
    total, steps = 0.0, 0
    for a in actions:
        result = env.step(a)
        total += result.reward
        steps += 1
        if not result.terminated:
            assert abs(result.state.x) <= X_THRESHOLD and abs(result.state.theta) <= THETA_THRESHOLD
        if result.done:
            break
    assert result.reward == 1.0
    assert total == steps


def test_trajectory_reproducible():
    actions = [0, 1, 1, 0, 1, 0, 0, 1] * 3
    runs = []
    for _ in range(2):
        env = CartPoleEnv()
        env.reset(11)
        runs.append([env.step(a).state for a in actions[:8]])
    assert runs[0] == runs[1]


def test_observe_noise():
    rng = np.random.default_rng(0)
    state = CartPoleState(0.1, -0.2, 0.03, 0.4)
    np.testing.assert_array_equal(observe(state, ObservationNoiseSpec(0.0), rng), state.as_array())
    samples = np.array([observe(state, ObservationNoiseSpec(0.05), rng)[2] for _ in range(100_000)])
    assert samples.std() == pytest.approx(0.05, rel=0.02)
    with pytest.raises(ConfigurationError):
        ObservationNoiseSpec(-0.1)


def test_noise_does_not_touch_physics():
    actions = [1, 0, 0, 1, 1, 0, 1, 0, 0, 1]
    clean, noisy = CartPoleEnv(), CartPoleEnv(ObservationNoiseSpec(0.1), noise_seed=3)
    clean.reset(5)
    noisy.reset(5)
    for a in actions:
        c, n = clean.step(a), noisy.step(a)
        assert c.state == n.state
        assert not np.array_equal(c.next_obs, n.next_obs)


def test_quadratic_reward_examples():
    u_only = quadratic_reward(ZERO, 1, np.eye(4), 0.001)
    assert u_only == pytest.approx(-0.1)
    assert quadratic_reward(CartPoleState(0.3, 1, -0.1, 2), 0, np.zeros((4, 4)), 0.0) == 0.0
    assert quadratic_reward(CartPoleState(1.0, 0, 0, 0), 1, np.diag([1.0, 0, 0, 0]), 0.0) == -1.0


def test_quadratic_reward_rejects_non_psd():
    with pytest.raises(ConfigurationError):
        quadratic_reward(ZERO, 1, np.diag([1.0, -1, 0, 0]), 0.1)
    with pytest.raises(ConfigurationError):
        RewardMode("quadratic", np.diag([1.0, -1, 0, 0]))


@settings(max_examples=200)
@given(state=_state, action=st.integers(0, 1))
def test_quadratic_reward_nonpositive(state, action):
    mode = RewardMode("quadratic")
    assert quadratic_reward(state, action, mode.Q, mode.R) <= 0


def test_quadratic_reward_mode_in_env():
    env = CartPoleEnv(reward_mode=RewardMode("quadratic"))
    env.reset(0)
    before = env.state
    result = env.step(1)
    assert result.reward == pytest.approx(quadratic_reward(before, 1))


def test_process_noise_hook_zero_only():
    with pytest.raises(NotImplementedError):
        CartPoleEnv(process_noise_std=0.1)
