"""
🧪 TEST PPO - GAE, objetivo recortado, gradientes, actualización y entrenamiento
"""

import json

import numpy as np
import pytest

from src.config.settings import make_rng
from src.domain.environment import EpisodeOutcome, QuadGainEnv
from src.domain.errors import IntegrationError, ShapeError, TrainingError
from src.domain.trajectory import step_reference
from src.services.neuralnet import (
    OptState, backward, gaussian_log_prob, init_policy, load_checkpoint, policy_mean, policy_value,
)
from src.services.ppo import (
    EnvWorker, Minibatch, RolloutBuffer, TrainConfig, collect_rollouts, compute_gae, explained_variance,
    ppo_loss, ppo_loss_grad, train, update,
)


def _tiny_policy(seed=0):
    return init_policy(np.random.default_rng(seed), hidden_sizes=(4,))


def _batch_with_offsets(policy, offsets, advantages, seed=0):
    rng = np.random.default_rng(seed)
    n = len(offsets)
    obs = rng.standard_normal((n, 6))
    actions = policy_mean(policy, obs) + 0.5 * rng.standard_normal((n, 6))
    current = gaussian_log_prob(policy_mean(policy, obs), policy.log_std, actions)
    returns = rng.standard_normal(n)
    return Minibatch(obs, actions, current - np.asarray(offsets), np.asarray(advantages, dtype=float), returns)


# ---------------------------------------------------------------- GAE

def test_gae_single_terminal_step():
    adv, ret = compute_gae([1.0], [0.0], [1.0], 0.0, 0.99, 0.95)
    assert adv.tolist() == [1.0]
    assert ret.tolist() == [1.0]


def test_gae_two_steps():
    adv, ret = compute_gae([0.0, 1.0], [0.5, 0.5], [0.0, 1.0], 0.0, 0.99, 0.95)
    assert adv[1] == pytest.approx(0.5, abs=1e-12)
    assert adv[0] == pytest.approx(0.46525, abs=1e-12)
    np.testing.assert_allclose(ret, adv + 0.5)


def test_gae_lambda_one_is_monte_carlo():
    rng = np.random.default_rng(0)
    rewards = rng.standard_normal(20)
    values = rng.standard_normal(20)
    last_value = 0.7
    adv, _ = compute_gae(rewards, values, np.zeros(20), last_value, 1.0, 1.0)
    expected = np.array([rewards[t:].sum() + last_value - values[t] for t in range(20)])
    np.testing.assert_allclose(adv, expected, atol=1e-12)


def test_gae_returns_are_discounted_returns_within_episodes():
    rng = np.random.default_rng(1)
    rewards = rng.standard_normal(12)
    values = rng.standard_normal(12)
    terminals = np.zeros(12)
    terminals[4] = 1.0
    gamma = 0.9
    _, returns = compute_gae(rewards, values, terminals, 0.0, gamma, 1.0)
    expected = np.zeros(12)
    running = 0.0
    for t in reversed(range(12)):
        running = rewards[t] + gamma * running * (1.0 - terminals[t])
        expected[t] = running
    np.testing.assert_allclose(returns, expected, atol=1e-12)


def test_gae_columns_are_independent():
    rng = np.random.default_rng(2)
    rewards = rng.standard_normal((8, 3))
    values = rng.standard_normal((8, 3))
    terminals = (rng.uniform(size=(8, 3)) < 0.2).astype(float)
    last_values = rng.standard_normal(3)
    adv, _ = compute_gae(rewards, values, terminals, last_values, 0.99, 0.95)
    for e in range(3):
        column, _ = compute_gae(rewards[:, e], values[:, e], terminals[:, e], last_values[e], 0.99, 0.95)
        np.testing.assert_allclose(adv[:, e], column, atol=1e-14)


def test_gae_length_mismatch():
    with pytest.raises(ShapeError):
        compute_gae([1.0, 2.0], [0.0], [0.0, 0.0], 0.0, 0.99, 0.95)


# ---------------------------------------------------------------- pérdida

def test_policy_loss_zero_for_normalized_advantages_at_ratio_one():
    policy = _tiny_policy()
    adv = np.array([1.0, -1.0, 0.5, -0.5])
    batch = _batch_with_offsets(policy, np.zeros(4), adv)
    _, components = ppo_loss(batch, policy, 0.2, 0.5, 0.0)
    assert components['policy_loss'] == pytest.approx(0.0, abs=1e-12)
    assert components['approx_kl'] == pytest.approx(0.0, abs=1e-12)
    assert components['clip_fraction'] == 0.0


def test_clipped_positive_advantage():
    policy = _tiny_policy()
    batch = _batch_with_offsets(policy, [np.log(1.5)], [1.0])
    _, components = ppo_loss(batch, policy, 0.2, 0.5, 0.0)
    assert components['policy_loss'] == pytest.approx(-1.2, abs=1e-12)
    assert components['clip_fraction'] == 1.0


def test_clipped_negative_advantage():
    policy = _tiny_policy()
    batch = _batch_with_offsets(policy, [np.log(0.5)], [-1.0])
    _, components = ppo_loss(batch, policy, 0.2, 0.5, 0.0)
    assert components['policy_loss'] == pytest.approx(0.8, abs=1e-12)


def test_value_loss_is_mean_squared_error():
    policy = _tiny_policy()
    batch = _batch_with_offsets(policy, np.zeros(5), np.zeros(5))
    _, components = ppo_loss(batch, policy, 0.2, 0.5, 0.0)
    expected = np.mean((policy_value(policy, batch.observations) - batch.returns) ** 2)
    assert components['value_loss'] == pytest.approx(expected)


def test_non_finite_loss_raises():
    policy = _tiny_policy()
    batch = _batch_with_offsets(policy, np.zeros(3), [np.nan, 1.0, 0.0])
    with pytest.raises(TrainingError):
        ppo_loss(batch, policy, 0.2, 0.5, 0.0)


def test_loss_gradient_matches_finite_differences():
    policy = _tiny_policy(3)
    offsets = [-0.5, -0.05, 0.05, 0.5, -0.5, 0.05, 0.5, -0.05]
    advantages = [1.0, -1.0, 0.7, -0.3, -1.2, 0.4, 1.5, -0.8]
    batch = _batch_with_offsets(policy, offsets, advantages, seed=4)
    args = (0.2, 0.5, 0.01)
    _, _, grads = ppo_loss_grad(batch, policy, *args)

    params = policy.parameters()
    h = 1e-6
    for p, g in zip(params, grads):
        numeric = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            original = p[idx]
            p[idx] = original + h
            plus, _ = ppo_loss(batch, policy, *args)
            p[idx] = original - h
            minus, _ = ppo_loss(batch, policy, *args)
            p[idx] = original
            numeric[idx] = (plus - minus) / (2 * h)
        np.testing.assert_allclose(g, numeric, rtol=1e-4, atol=1e-7)


def test_unclipped_gradient_is_vanilla_policy_gradient():
    policy = _tiny_policy(5)
    advantages = np.array([1.0, -0.5, 0.3, 2.0, -1.0])
    batch = _batch_with_offsets(policy, np.zeros(5), advantages, seed=6)
    _, _, grads = ppo_loss_grad(batch, policy, np.inf, 0.0, 0.0)

    n = len(advantages)
    sigma = np.exp(policy.log_std)
    z = (batch.actions - policy_mean(policy, batch.observations)) / sigma
    weights = -advantages[:, None] / n
    expected_actor, _ = backward(policy.actor, batch.observations, weights * z / sigma)
    expected_log_std = np.sum(weights * (z ** 2 - 1.0), axis=0)

    n_actor = len(expected_actor)
    for got, expected in zip(grads[:n_actor], expected_actor):
        np.testing.assert_allclose(got, expected, atol=1e-12)
    np.testing.assert_allclose(grads[n_actor], expected_log_std, atol=1e-12)
    assert all(np.all(g == 0.0) for g in grads[n_actor + 1:])


def test_explained_variance():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    assert explained_variance(y, y) == 1.0
    assert explained_variance(np.zeros(4), np.zeros(4)) == 1.0
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert explained_variance(rng.standard_normal(10), rng.standard_normal(10)) <= 1.0


# ---------------------------------------------------------------- actualización

def _synthetic_buffer(policy, n_steps, n_envs, seed=0, zero_advantages=False):
    rng = np.random.default_rng(seed)
    obs = rng.standard_normal((n_steps, n_envs, 6))
    actions = rng.standard_normal((n_steps, n_envs, 6))
    log_probs = gaussian_log_prob(policy_mean(policy, obs.reshape(-1, 6)), policy.log_std,
                                  actions.reshape(-1, 6)).reshape(n_steps, n_envs)
    values = policy_value(policy, obs.reshape(-1, 6)).reshape(n_steps, n_envs)
    buffer = RolloutBuffer(
        observations=obs, actions=actions, log_probs=log_probs, values=values,
        rewards=rng.standard_normal((n_steps, n_envs)), terminals=np.zeros((n_steps, n_envs)),
        last_values=np.zeros(n_envs),
    )
    if zero_advantages:
        buffer.advantages = np.zeros((n_steps, n_envs))
        buffer.returns = values + 1.0
    else:
        buffer.compute_advantages(0.99, 0.95)
    return buffer


def test_zero_advantages_leave_actor_unchanged():
    policy = _tiny_policy(1)
    buffer = _synthetic_buffer(policy, 32, 2, zero_advantages=True)
    config = TrainConfig(batch_size=16, n_epochs=2)
    opt = OptState.for_parameters(policy.parameters(), lr=config.lr)
    updated, _ = update(buffer, policy, opt, config, np.random.default_rng(0))
    for before, after in zip(policy.actor.parameters(), updated.actor.parameters()):
        assert np.array_equal(before, after)
    assert np.array_equal(policy.log_std, updated.log_std)
    assert not np.array_equal(policy.critic.weights[-1], updated.critic.weights[-1])


def test_gradient_step_count():
    policy = init_policy(np.random.default_rng(0))
    buffer = _synthetic_buffer(policy, 2048, 3)
    config = TrainConfig()
    opt = OptState.for_parameters(policy.parameters(), lr=config.lr)
    _, stats = update(buffer, policy, opt, config, np.random.default_rng(0), iteration=1, timesteps=6144)
    assert stats.n_gradient_steps == 960
    assert stats.timesteps == 6144
    assert stats.explained_variance <= 1.0
    assert np.isfinite(stats.loss)


def test_advantages_computed_once():
    policy = _tiny_policy()
    buffer = _synthetic_buffer(policy, 8, 1)
    with pytest.raises(TrainingError):
        buffer.compute_advantages(0.99, 0.95)


# ---------------------------------------------------------------- recolección

def _workers(seed, n_envs=3):
    traj = step_reference(1.0, 5.0, 0.02)
    return [EnvWorker(env=QuadGainEnv(traj), rng=make_rng(seed, f"env-{i}"), index=i) for i in range(n_envs)]


def test_collect_rollouts_shapes_and_episodes():
    policy = init_policy(make_rng(0, "init"))
    buffer = collect_rollouts(_workers(0), policy, 400)
    assert buffer.capacity == 1200
    assert buffer.observations.shape == (400, 3, 6)
    assert buffer.last_values.shape == (3,)
    assert len(buffer.episodes) >= 3
    assert all(e.outcome.terminal for e in buffer.episodes)
    assert int(buffer.terminals.sum()) == len(buffer.episodes)


def test_frozen_random_policy_window_counts(golden):
    # una ventana de monitoreo: 2 iteraciones × 3 entornos × 2048 pasos
    policy = init_policy(make_rng(0, "init"))
    workers = _workers(0)
    episodes = []
    for _ in range(2):
        episodes.extend(collect_rollouts(workers, policy, 2048).episodes)
    counts = {outcome.value: 0 for outcome in EpisodeOutcome if outcome.terminal}
    for e in episodes:
        counts[e.outcome.value] += 1
    assert sum(counts.values()) == len(episodes)
    # cada éxito dura al menos nominal_duration / dt = 250 pasos
    assert counts['Success'] <= 12288 // 250 + 3
    golden("random_policy_window", counts)


def test_collect_rollouts_deterministic_across_worker_counts():
    policy = init_policy(make_rng(0, "init"))
    sequential = collect_rollouts(_workers(4), policy, 150, n_workers=1)
    parallel = collect_rollouts(_workers(4), policy, 150, n_workers=3)
    assert np.array_equal(sequential.actions, parallel.actions)
    assert np.array_equal(sequential.rewards, parallel.rewards)


# ---------------------------------------------------------------- entrenamiento

def test_iteration_arithmetic():
    assert TrainConfig().n_iterations == 40
    assert TrainConfig().steps_per_iteration == 6144
    assert TrainConfig(total_steps=12288).n_iterations == 2


def _small_config(seed=0):
    return TrainConfig(total_steps=768, n_steps_per_env=128, n_epochs=2, seed=seed)


def test_small_training_run_is_reproducible(tmp_path):
    first_policy, first = train(_small_config(), out_dir=tmp_path / "a")
    second_policy, second = train(_small_config(), out_dir=tmp_path / "b")
    assert [vars(u) for u in first.updates] == [vars(u) for u in second.updates]
    assert [vars(w) for w in first.windows] == [vars(w) for w in second.windows]
    for a, b in zip(first_policy.parameters(), second_policy.parameters()):
        assert np.array_equal(a, b)
    log_a = (tmp_path / "a" / "training_log.jsonl").read_bytes()
    assert log_a == (tmp_path / "b" / "training_log.jsonl").read_bytes()


def test_small_training_run_artifacts(tmp_path):
    policy, stats = train(_small_config(), out_dir=tmp_path)
    assert len(stats.updates) == 2
    assert len(stats.windows) == 1
    assert stats.windows[0].timesteps == 768
    records = [json.loads(line) for line in (tmp_path / "training_log.jsonl").read_text().splitlines()]
    assert [r['type'] for r in records] == ['update', 'update', 'window']
    assert (tmp_path / "monitoring.csv").exists()
    assert (tmp_path / "snapshots" / "window_01.csv").exists()
    loaded, metadata = load_checkpoint(tmp_path / "checkpoints" / "window_01.json")
    assert metadata['training_step'] == 768
    final, _ = load_checkpoint(tmp_path / "policy_final.json")
    for a, b in zip(policy.parameters(), final.parameters()):
        assert np.array_equal(a, b)


def test_different_seeds_differ():
    _, first = train(_small_config(seed=0))
    _, second = train(_small_config(seed=1))
    assert [vars(u) for u in first.updates] != [vars(u) for u in second.updates]


def test_simulation_failure_keeps_partial_history(monkeypatch):
    import src.services.ppo as ppo_module

    real_collect = ppo_module.collect_rollouts
    calls = []

    def failing_collect(*args, **kwargs):
        calls.append(1)
        if len(calls) == 2:
            raise IntegrationError("estado no finito")
        return real_collect(*args, **kwargs)

    monkeypatch.setattr(ppo_module, "collect_rollouts", failing_collect)
    with pytest.raises(TrainingError) as excinfo:
        train(_small_config())
    assert len(excinfo.value.history) == 1
    assert isinstance(excinfo.value.__cause__, IntegrationError)
