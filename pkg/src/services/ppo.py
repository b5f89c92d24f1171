"""
🤖 PPO SERVICE
Responsabilidad: Proximal Policy Optimization: recolección de experiencia en
varios entornos, GAE, objetivo recortado, épocas de minilotes y diagnósticos
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from src.config.parameters import PPO_CONFIG
from src.config.settings import make_rng
from src.domain.dynamics import QuadParams
from src.domain.environment import EpisodeOutcome, QuadGainEnv
from src.domain.errors import QuadGainError, ShapeError, TrainingError
from src.domain.trajectory import Trajectory
from src.services.evaluation import run_episode
from src.services.monitor import TrainingMonitor
from src.services.neuralnet import (
    OptState, PolicyParams, adam_update, backward, forward, gaussian_entropy, init_policy,
    sample_action, save_checkpoint,
)

logger = logging.getLogger(__name__)

OBS_DIM = 6
ACT_DIM = 6


@dataclass(frozen=True)
class TrainConfig:
    total_steps: int = PPO_CONFIG['total_steps']
    n_envs: int = PPO_CONFIG['n_envs']
    n_steps_per_env: int = PPO_CONFIG['n_steps_per_env']
    batch_size: int = PPO_CONFIG['batch_size']
    gamma: float = PPO_CONFIG['gamma']
    lr: float = PPO_CONFIG['lr']
    gae_lambda: float = PPO_CONFIG['gae_lambda']
    clip_eps: float = PPO_CONFIG['clip_eps']
    n_epochs: int = PPO_CONFIG['n_epochs']
    value_coef: float = PPO_CONFIG['value_coef']
    entropy_coef: float = PPO_CONFIG['entropy_coef']
    max_grad_norm: float = PPO_CONFIG['max_grad_norm']
    monitor_every: int = PPO_CONFIG['monitor_every']
    seed: int = 0
    n_workers: int = 1

    @property
    def steps_per_iteration(self) -> int:
        return self.n_envs * self.n_steps_per_env

    @property
    def n_iterations(self) -> int:
        return math.ceil(self.total_steps / self.steps_per_iteration)


@dataclass(frozen=True)
class EpisodeSummary:
    env_index: int
    outcome: EpisodeOutcome
    total_reward: float
    length: int
    ise: float


@dataclass
class UpdateStats:
    """Diagnósticos de una iteración de actualización"""
    iteration: int
    timesteps: int
    entropy_loss: float
    value_loss: float
    policy_loss: float
    explained_variance: float
    approx_kl: float
    clip_fraction: float
    loss: float
    n_gradient_steps: int
    log_std_mean: float


@dataclass
class WindowStats:
    """Conteos de episodios terminados dentro de una ventana de monitoreo"""
    window: int
    iterations: int
    timesteps: int
    episodes: int
    successes: int
    deviations: int
    timeouts: int
    success_rate: float
    mean_episode_reward: Optional[float]


@dataclass
class TrainStats:
    updates: List[UpdateStats] = field(default_factory=list)
    windows: List[WindowStats] = field(default_factory=list)


@dataclass
class RolloutBuffer:
    """Experiencia on-policy con forma (n_steps, n_envs, ...)"""
    observations: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    terminals: np.ndarray
    last_values: np.ndarray
    episodes: List[EpisodeSummary] = field(default_factory=list)
    advantages: Optional[np.ndarray] = None
    returns: Optional[np.ndarray] = None

    @property
    def capacity(self) -> int:
        return self.rewards.size

    def compute_advantages(self, gamma: float, gae_lambda: float) -> None:
        if self.advantages is not None:
            raise TrainingError("Las ventajas ya fueron calculadas para esta recolección")
        self.advantages, self.returns = compute_gae(
            self.rewards, self.values, self.terminals, self.last_values, gamma, gae_lambda)

    def flat(self) -> Dict[str, np.ndarray]:
        if self.advantages is None:
            raise TrainingError("Faltan las ventajas: llame a compute_advantages()")
        n = self.capacity
        return {
            'observations': self.observations.reshape(n, OBS_DIM),
            'actions': self.actions.reshape(n, ACT_DIM),
            'log_probs': self.log_probs.reshape(n),
            'values': self.values.reshape(n),
            'advantages': self.advantages.reshape(n),
            'returns': self.returns.reshape(n),
        }


@dataclass
class EnvWorker:
    """Un entorno con su propio flujo aleatorio y su episodio en curso"""
    env: QuadGainEnv
    rng: np.random.Generator
    index: int
    observation: Optional[np.ndarray] = None
    episode_reward: float = 0.0
    episode_length: int = 0

    def reset(self) -> None:
        self.observation = self.env.reset().to_array()
        self.episode_reward = 0.0
        self.episode_length = 0


class _WorkerRollout(NamedTuple):
    observations: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    terminals: np.ndarray
    last_value: float
    episodes: List[EpisodeSummary]


def _collect_worker(worker: EnvWorker, policy: PolicyParams, n_steps: int) -> _WorkerRollout:
    observations = np.zeros((n_steps, OBS_DIM))
    actions = np.zeros((n_steps, ACT_DIM))
    log_probs = np.zeros(n_steps)
    values = np.zeros(n_steps)
    rewards = np.zeros(n_steps)
    terminals = np.zeros(n_steps)
    episodes = []
    if worker.observation is None:
        worker.reset()

    for t in range(n_steps):
        sample = sample_action(policy, worker.observation, worker.rng)
        observations[t] = worker.observation
        actions[t] = sample.raw_action
        log_probs[t] = sample.log_prob
        values[t] = sample.value

        next_obs, reward, outcome = worker.env.step(sample.action)
        rewards[t] = reward
        worker.episode_reward += reward
        worker.episode_length += 1
        if outcome.terminal:
            terminals[t] = 1.0
            episodes.append(EpisodeSummary(worker.index, outcome, worker.episode_reward,
                                           worker.episode_length, worker.env.state.accumulated_ise))
            worker.reset()
        else:
            worker.observation = next_obs.to_array()

    # ventana truncada a mitad de episodio: se usa V(s_last)
    last_value = float(forward(policy.critic, worker.observation)[0])
    return _WorkerRollout(observations, actions, log_probs, values, rewards, terminals, last_value, episodes)


def collect_rollouts(workers: Sequence[EnvWorker], policy: PolicyParams, n_steps_per_env: int,
                     n_workers: int = 1) -> RolloutBuffer:
    """🕵️ Avanza cada entorno n_steps_per_env pasos con acciones muestreadas"""
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(lambda w: _collect_worker(w, policy, n_steps_per_env), workers))
    else:
        results = [_collect_worker(w, policy, n_steps_per_env) for w in workers]

    def stack(name):
        return np.stack([getattr(r, name) for r in results], axis=1)

    episodes = [e for r in results for e in r.episodes]
    return RolloutBuffer(
        observations=stack('observations'),
        actions=stack('actions'),
        log_probs=stack('log_probs'),
        values=stack('values'),
        rewards=stack('rewards'),
        terminals=stack('terminals'),
        last_values=np.array([r.last_value for r in results]),
        episodes=episodes,
    )


def compute_gae(rewards, values, terminals, last_value, gamma: float,
                gae_lambda: float) -> Tuple[np.ndarray, np.ndarray]:
    """Ventajas GAE(λ) y retornos; el eje 0 es el tiempo (admite columnas por entorno)"""
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    terminals = np.asarray(terminals, dtype=float)
    if rewards.shape != values.shape or rewards.shape != terminals.shape:
        raise ShapeError(f"Secuencias de distinto largo: r{rewards.shape} V{values.shape} d{terminals.shape}")
    last_value = np.asarray(last_value, dtype=float)

    advantages = np.zeros_like(rewards)
    gae = np.zeros_like(last_value)
    next_value = last_value
    for t in reversed(range(len(rewards))):
        mask = 1.0 - terminals[t]
        delta = rewards[t] + gamma * next_value * mask - values[t]
        gae = delta + gamma * gae_lambda * mask * gae
        advantages[t] = gae
        next_value = values[t]
    return advantages, advantages + values


class Minibatch(NamedTuple):
    observations: np.ndarray
    actions: np.ndarray
    old_log_probs: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    return (advantages - advantages.mean()) / (advantages.std() + 1e-8)


def _ppo_objective(batch: Minibatch, policy: PolicyParams, clip_eps: float, value_coef: float,
                   entropy_coef: float, with_grad: bool):
    obs = np.asarray(batch.observations, dtype=float)
    n = obs.shape[0]
    adv = np.asarray(batch.advantages, dtype=float)
    mean = forward(policy.actor, obs)
    sigma = np.exp(policy.log_std)
    actions = np.asarray(batch.actions, dtype=float)
    returns = np.asarray(batch.returns, dtype=float)
    z = (actions - mean) / sigma
    log_prob = np.sum(-0.5 * z ** 2 - policy.log_std - 0.5 * math.log(2.0 * math.pi), axis=1)
    log_ratio = log_prob - np.asarray(batch.old_log_probs, dtype=float)
    ratio = np.exp(log_ratio)

    surr_unclipped = ratio * adv
    surr_clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * adv
    policy_loss = -float(np.mean(np.minimum(surr_unclipped, surr_clipped)))

    values = forward(policy.critic, obs)[:, 0]
    value_loss = float(np.mean((values - returns) ** 2))
    entropy_loss = -gaussian_entropy(policy.log_std)
    loss = policy_loss + value_coef * value_loss + entropy_coef * entropy_loss

    components = {
        'loss': loss,
        'policy_loss': policy_loss,
        'value_loss': value_loss,
        'entropy_loss': entropy_loss,
        'approx_kl': float(np.mean((ratio - 1.0) - log_ratio)),
        'clip_fraction': float(np.mean(np.abs(ratio - 1.0) > clip_eps)),
    }
    if not math.isfinite(loss):
        raise TrainingError(f"Pérdida PPO no finita: {components}")
    if not with_grad:
        return loss, components, None

    # el gradiente solo fluye por la rama sin recortar cuando es la mínima
    active = surr_unclipped <= surr_clipped
    g_log_prob = np.where(active, -adv * ratio / n, 0.0)
    g_mean = g_log_prob[:, None] * z / sigma
    g_log_std = np.sum(g_log_prob[:, None] * (z ** 2 - 1.0), axis=0) - entropy_coef
    actor_grads, _ = backward(policy.actor, obs, g_mean)
    g_values = (value_coef * 2.0 * (values - returns) / n)[:, None]
    critic_grads, _ = backward(policy.critic, obs, g_values)
    return loss, components, actor_grads + [g_log_std] + critic_grads


def ppo_loss(batch: Minibatch, policy: PolicyParams, clip_eps: float, value_coef: float,
             entropy_coef: float) -> Tuple[float, Dict[str, float]]:
    """Objetivo recortado + pérdida de valor + término de entropía"""
    loss, components, _ = _ppo_objective(batch, policy, clip_eps, value_coef, entropy_coef, with_grad=False)
    return loss, components


def ppo_loss_grad(batch: Minibatch, policy: PolicyParams, clip_eps: float, value_coef: float,
                  entropy_coef: float) -> Tuple[float, Dict[str, float], List[np.ndarray]]:
    """Como ppo_loss, más el gradiente en el orden de PolicyParams.parameters()"""
    return _ppo_objective(batch, policy, clip_eps, value_coef, entropy_coef, with_grad=True)


def explained_variance(predictions: np.ndarray, targets: np.ndarray) -> float:
    """1 − Var(y − ŷ)/Var(y)"""
    var_y = float(np.var(targets))
    var_residual = float(np.var(targets - predictions))
    if var_y == 0.0:
        return 1.0 if var_residual == 0.0 else 0.0
    return min(1.0 - var_residual / var_y, 1.0)


def clip_grad_norm(grads: List[np.ndarray], max_norm: float) -> Tuple[List[np.ndarray], float]:
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if total > max_norm:
        scale = max_norm / (total + 1e-6)
        grads = [g * scale for g in grads]
    return grads, total


def update(buffer: RolloutBuffer, policy: PolicyParams, opt: OptState, config: TrainConfig,
           rng: np.random.Generator, iteration: int = 0,
           timesteps: int = 0) -> Tuple[PolicyParams, UpdateStats]:
    """n_epochs pasadas sobre minilotes barajados; Adam con recorte global de norma"""
    data = buffer.flat()
    n = buffer.capacity
    history = {k: [] for k in ('loss', 'policy_loss', 'value_loss', 'entropy_loss', 'approx_kl', 'clip_fraction')}
    n_steps = 0
    for _ in range(config.n_epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            batch = Minibatch(
                observations=data['observations'][idx],
                actions=data['actions'][idx],
                old_log_probs=data['log_probs'][idx],
                advantages=normalize_advantages(data['advantages'][idx]),
                returns=data['returns'][idx],
            )
            _, components, grads = ppo_loss_grad(batch, policy, config.clip_eps, config.value_coef,
                                                 config.entropy_coef)
            if not all(np.all(np.isfinite(g)) for g in grads):
                raise TrainingError(f"Gradientes no finitos en la iteración {iteration}, minilote {n_steps}")
            grads, _ = clip_grad_norm(grads, config.max_grad_norm)
            policy = policy.with_parameters(adam_update(policy.parameters(), grads, opt))
            for key, value in components.items():
                history[key].append(value)
            n_steps += 1

    stats = UpdateStats(
        iteration=iteration,
        timesteps=timesteps,
        entropy_loss=float(np.mean(history['entropy_loss'])),
        value_loss=float(np.mean(history['value_loss'])),
        policy_loss=float(np.mean(history['policy_loss'])),
        explained_variance=explained_variance(data['values'], data['returns']),
        approx_kl=float(np.mean(history['approx_kl'])),
        clip_fraction=float(np.mean(history['clip_fraction'])),
        loss=float(np.mean(history['loss'])),
        n_gradient_steps=n_steps,
        log_std_mean=float(np.mean(policy.log_std)),
    )
    return policy, stats


def _window_stats(window: int, iterations: int, timesteps: int, episodes: List[EpisodeSummary]) -> WindowStats:
    counts = {outcome: 0 for outcome in EpisodeOutcome}
    for e in episodes:
        counts[e.outcome] += 1
    total = len(episodes)
    return WindowStats(
        window=window,
        iterations=iterations,
        timesteps=timesteps,
        episodes=total,
        successes=counts[EpisodeOutcome.SUCCESS],
        deviations=counts[EpisodeOutcome.DEVIATION],
        timeouts=counts[EpisodeOutcome.TIMEOUT],
        success_rate=counts[EpisodeOutcome.SUCCESS] / total if total else 0.0,
        mean_episode_reward=float(np.mean([e.total_reward for e in episodes])) if total else None,
    )


def train(config: TrainConfig = TrainConfig(), traj: Optional[Trajectory] = None,
          params: QuadParams = QuadParams(), out_dir: Optional[Union[str, Path]] = None,
          monitor: Optional[TrainingMonitor] = None) -> Tuple[PolicyParams, TrainStats]:
    """🚀 Entrenamiento completo; checkpoints y snapshots por ventana si hay out_dir"""
    out_dir = Path(out_dir) if out_dir else None
    monitor = monitor or TrainingMonitor(out_dir)
    workers = []
    for i in range(config.n_envs):
        env = QuadGainEnv(traj, params=params, dt=traj.dt) if traj else QuadGainEnv(params=params)
        workers.append(EnvWorker(env=env, rng=make_rng(config.seed, f"env-{i}"), index=i))
    train_traj = workers[0].env.default_traj
    policy = init_policy(make_rng(config.seed, "init"))
    opt = OptState.for_parameters(policy.parameters(), lr=config.lr)
    sampler = make_rng(config.seed, "sampler")

    stats = TrainStats()
    window_episodes: List[EpisodeSummary] = []
    window_iterations = 0
    timesteps = 0
    logger.info("🚀 Entrenamiento PPO: %d iteraciones de %d pasos", config.n_iterations, config.steps_per_iteration)

    for iteration in range(1, config.n_iterations + 1):
        try:
            buffer = collect_rollouts(workers, policy, config.n_steps_per_env, n_workers=config.n_workers)
            buffer.compute_advantages(config.gamma, config.gae_lambda)
            timesteps += buffer.capacity
            policy, update_stats = update(buffer, policy, opt, config, sampler, iteration, timesteps)
        except QuadGainError as e:
            logger.error("❌ Entrenamiento abortado en la iteración %d: %s", iteration, e)
            raise TrainingError(str(e), history=stats.updates) from e

        stats.updates.append(update_stats)
        monitor.log_update(update_stats)
        window_episodes.extend(buffer.episodes)
        window_iterations += 1

        if window_iterations == config.monitor_every or iteration == config.n_iterations:
            window = len(stats.windows) + 1
            window_stats = _window_stats(window, window_iterations, timesteps, window_episodes)
            stats.windows.append(window_stats)
            monitor.log_window(window_stats)
            if out_dir:
                save_checkpoint(policy, out_dir / "checkpoints" / f"window_{window:02d}.json",
                                training_step=timesteps, extra={'iteration': iteration, 'seed': config.seed})
                snapshot = run_episode(policy, train_traj, params=params, name=f"snapshot_{window:02d}")
                snapshot.to_csv(out_dir / "snapshots" / f"window_{window:02d}.csv")
            window_episodes = []
            window_iterations = 0

    if out_dir:
        save_checkpoint(policy, out_dir / "policy_final.json", training_step=timesteps,
                        extra={'iteration': config.n_iterations, 'seed': config.seed})
    logger.info("✅ Entrenamiento completado: %s", monitor.summary())
    return policy, stats
