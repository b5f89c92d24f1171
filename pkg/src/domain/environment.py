"""
🌍 ENVIRONMENT - Proceso de decisión de Markov del ajuste de ganancias
Responsabilidad: reset/step, reescalado de acciones, recompensa, terminación
y registro del episodio (dinámica + controlador + trayectoria)
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, NamedTuple, Optional

import numpy as np

from src.config.parameters import GAIN_NAMES, GAIN_RANGES, REWARD_CONFIG, SIM_CONFIG, TERMINATION_CONFIG
from src.domain.controller import ErrorVector, GainVector, RefPoint, compute_cascade
from src.domain.dynamics import QuadParams, QuadState, step_rk4
from src.domain.errors import EpisodeTerminatedError, TrajectoryError
from src.domain.trajectory import Trajectory, expected_duration, step_reference

logger = logging.getLogger(__name__)

_GAIN_LO = np.array([GAIN_RANGES[name][0] for name in GAIN_NAMES])
_GAIN_HI = np.array([GAIN_RANGES[name][1] for name in GAIN_NAMES])


class EpisodeOutcome(str, Enum):
    """Resultado de cada paso"""
    RUNNING = "Running"
    SUCCESS = "Success"
    DEVIATION = "Deviation"
    TIMEOUT = "TimeOut"

    @property
    def terminal(self) -> bool:
        return self is not EpisodeOutcome.RUNNING


@dataclass(frozen=True)
class TerminationConfig:
    max_deviation: float = TERMINATION_CONFIG['max_deviation']
    timeout_factor: float = TERMINATION_CONFIG['timeout_factor']
    eps_pos: float = TERMINATION_CONFIG['eps_pos']
    eps_vel: float = TERMINATION_CONFIG['eps_vel']
    time_tolerance: float = TERMINATION_CONFIG['time_tolerance']


@dataclass(frozen=True)
class RewardConfig:
    timeout: float = REWARD_CONFIG['timeout']
    deviation: float = REWARD_CONFIG['deviation']
    success_numerator: float = REWARD_CONFIG['success_numerator']
    running_scale: float = REWARD_CONFIG['running_scale']
    running_clamp: float = REWARD_CONFIG['running_clamp']
    eps_div: float = REWARD_CONFIG['eps_div']


@dataclass
class EnvState:
    """Estado completo del episodio"""
    quad: QuadState
    traj: Trajectory
    t: float = 0.0
    step_index: int = 0
    accumulated_ise: float = 0.0
    prev_deviation: float = 0.0
    gains: GainVector = field(default_factory=GainVector.midpoints)

    @property
    def reference(self) -> RefPoint:
        return self.traj.ref_at_index(self.step_index)

    def deviation(self) -> float:
        ref = self.reference
        return math.hypot(self.quad.px - ref.x_ref, self.quad.py - ref.y_ref)


class StepResult(NamedTuple):
    observation: ErrorVector
    reward: float
    outcome: EpisodeOutcome


def rescale_action(action) -> GainVector:
    """Mapa afín [-1, 1] → rango de cada ganancia (extremos exactos)"""
    a = np.clip(np.asarray(action, dtype=float), -1.0, 1.0)
    return GainVector.from_array(_GAIN_LO * (1.0 - a) / 2.0 + _GAIN_HI * (1.0 + a) / 2.0)


def normalize_gains(gains: GainVector) -> np.ndarray:
    """Inverso de rescale_action: ganancias → acción normalizada"""
    return 2.0 * (gains.to_array() - _GAIN_LO) / (_GAIN_HI - _GAIN_LO) - 1.0


def check_termination(env: EnvState, config: TerminationConfig = TerminationConfig()) -> EpisodeOutcome:
    """Deviation antes que TimeOut antes que Success"""
    if env.deviation() > config.max_deviation:
        return EpisodeOutcome.DEVIATION
    if env.t > config.timeout_factor * expected_duration(env.traj) + config.time_tolerance:
        return EpisodeOutcome.TIMEOUT
    terminal = env.traj.terminal
    distance = math.hypot(env.quad.px - terminal.x_ref, env.quad.py - terminal.y_ref)
    speed = math.hypot(env.quad.vx, env.quad.vy)
    if (distance < config.eps_pos and speed < config.eps_vel
            and env.t >= env.traj.nominal_duration - config.time_tolerance):
        return EpisodeOutcome.SUCCESS
    return EpisodeOutcome.RUNNING


def compute_reward(outcome: EpisodeOutcome, accumulated_ise: float, prev_dev: float, curr_dev: float,
                   config: RewardConfig = RewardConfig()) -> float:
    """Recompensa por caso: time-out, desviación, éxito (10/ISE) o progreso"""
    if outcome is EpisodeOutcome.TIMEOUT:
        return config.timeout
    if outcome is EpisodeOutcome.DEVIATION:
        return config.deviation
    if outcome is EpisodeOutcome.SUCCESS:
        return config.success_numerator / max(accumulated_ise, config.eps_div)
    ratio = prev_dev / max(curr_dev, config.eps_div)
    return config.running_scale * min(ratio - 1.0, config.running_clamp)


class QuadGainEnv:
    """🌍 Entorno: la política elige las seis ganancias en cada paso de simulación"""

    def __init__(self, traj: Optional[Trajectory] = None, params: QuadParams = QuadParams(),
                 dt: float = SIM_CONFIG['dt'], termination: TerminationConfig = TerminationConfig(),
                 reward: RewardConfig = RewardConfig(), record: bool = False):
        self.params = params
        self.dt = dt
        self.termination = termination
        self.reward_config = reward
        self.record = record
        self.default_traj = traj or step_reference(
            SIM_CONFIG['step_amplitude'], SIM_CONFIG['nominal_settle_time'], dt)
        self.state: Optional[EnvState] = None
        self.outcome = EpisodeOutcome.RUNNING
        self.history: List[Dict[str, float]] = []

    def _observe(self) -> ErrorVector:
        errors, _ = compute_cascade(self.state.quad, self.state.reference, self.state.gains, self.params)
        return errors

    def reset(self, seed: Optional[int] = None, traj: Optional[Trajectory] = None) -> ErrorVector:
        """Dron en reposo en el origen, t = 0, ganancias en el punto medio.

        El entorno es determinista: `seed` se acepta por compatibilidad con la
        interfaz reset(seed) y no altera el estado inicial.
        """
        traj = traj or self.default_traj
        if abs(traj.dt - self.dt) > 1e-12:
            raise TrajectoryError(f"dt de la trayectoria ({traj.dt}) distinto del entorno ({self.dt})")
        self.state = EnvState(quad=QuadState(), traj=traj)
        self.state.prev_deviation = self.state.deviation()
        self.outcome = EpisodeOutcome.RUNNING
        self.history = []
        return self._observe()

    def step(self, action) -> StepResult:
        """Acción normalizada → ganancias → un paso de simulación"""
        return self.step_gains(rescale_action(action))

    def step_gains(self, gains: GainVector) -> StepResult:
        if self.state is None:
            raise EpisodeTerminatedError("El entorno no ha sido reiniciado")
        if self.outcome.terminal:
            raise EpisodeTerminatedError(f"Episodio terminado ({self.outcome.value}); llame a reset()")

        env = self.state
        env.gains = gains
        _, thrusts = compute_cascade(env.quad, env.reference, gains, self.params)
        env.quad = step_rk4(env.quad, thrusts, self.params, self.dt)
        env.step_index += 1
        env.t = env.step_index * self.dt

        ref = env.reference
        e_x = ref.x_ref - env.quad.px
        e_y = ref.y_ref - env.quad.py
        env.accumulated_ise += (e_x * e_x + e_y * e_y) * self.dt

        outcome = check_termination(env, self.termination)
        curr_dev = env.deviation()
        reward = compute_reward(outcome, env.accumulated_ise, env.prev_deviation, curr_dev, self.reward_config)
        env.prev_deviation = curr_dev
        self.outcome = outcome

        observation = self._observe()
        if self.record:
            self.history.append(self._log_row(thrusts, observation, reward))
        if outcome.terminal:
            logger.debug("🏁 Episodio terminado: %s en t=%.2f s (ISE=%.4f)", outcome.value, env.t, env.accumulated_ise)
        return StepResult(observation, reward, outcome)

    def _log_row(self, thrusts, observation: ErrorVector, reward: float) -> Dict[str, float]:
        env = self.state
        ref = env.reference
        row = {
            't': env.t,
            'px': env.quad.px, 'py': env.quad.py, 'theta': env.quad.theta,
            'vx': env.quad.vx, 'vy': env.quad.vy, 'omega': env.quad.omega,
            'x_ref': ref.x_ref, 'y_ref': ref.y_ref,
        }
        row.update(env.gains.as_dict())
        row.update({'t1': thrusts.t1, 't2': thrusts.t2, 'reward': reward})
        row.update({name: value for name, value in zip(
            ('e_x', 'e_vx', 'e_theta', 'e_omega', 'e_y', 'e_vy'), observation.to_array())})
        return row
