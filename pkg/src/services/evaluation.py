"""
🏁 EVALUATION SERVICE
Responsabilidad: Episodios en lazo cerrado con ganancias estáticas o programadas
por la política, y comparación base vs RL (ISE/ITSE, diferencias porcentuales)
"""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.config.parameters import GAIN_NAMES, PUBLISHED_REFERENCE, SIM_CONFIG
from src.domain.controller import ErrorVector, GainVector
from src.domain.dynamics import QuadParams
from src.domain.environment import EpisodeOutcome, QuadGainEnv, RewardConfig, TerminationConfig, rescale_action
from src.domain.errors import IntegrationError
from src.domain.trajectory import Trajectory, expected_duration
from src.services.metrics import ise, itse, percentage_difference
from src.services.neuralnet import PolicyParams, policy_mean

logger = logging.getLogger(__name__)

LOG_COLUMNS = (['t', 'px', 'py', 'theta', 'vx', 'vy', 'omega', 'x_ref', 'y_ref']
               + list(GAIN_NAMES) + ['t1', 't2', 'reward', 'e_x', 'e_vx', 'e_theta', 'e_omega', 'e_y', 'e_vy'])

GainSource = Union[GainVector, PolicyParams]


@dataclass
class EpisodeLog:
    """Serie temporal completa de un episodio y su resultado final"""
    frame: pd.DataFrame
    outcome: EpisodeOutcome
    dt: float
    accumulated_ise: float = 0.0
    name: str = "episode"

    def position_errors(self) -> np.ndarray:
        return np.column_stack([
            self.frame['x_ref'].to_numpy() - self.frame['px'].to_numpy(),
            self.frame['y_ref'].to_numpy() - self.frame['py'].to_numpy(),
        ])

    @property
    def duration(self) -> float:
        return float(self.frame['t'].iloc[-1]) if len(self.frame) else 0.0

    def ise(self) -> float:
        return ise(self.position_errors(), self.dt)

    def itse(self) -> float:
        return itse(self.position_errors(), self.dt, times=self.frame['t'].to_numpy())

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.frame.to_csv(path, index=False)
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path], dt: Optional[float] = None,
                 outcome: EpisodeOutcome = EpisodeOutcome.SUCCESS) -> "EpisodeLog":
        frame = pd.read_csv(path, float_precision='round_trip')
        if dt is None:
            dt = float(frame['t'].iloc[1] - frame['t'].iloc[0]) if len(frame) > 1 else SIM_CONFIG['dt']
        return cls(frame=frame, outcome=outcome, dt=dt, name=Path(path).stem)


def _gains_for(source: GainSource, observation: ErrorVector) -> GainVector:
    if isinstance(source, GainVector):
        return source
    # modo evaluación: media del actor, sin muestreo
    return rescale_action(policy_mean(source, observation.to_array()))


def run_episode(gain_source: GainSource, traj: Trajectory, params: QuadParams = QuadParams(),
                termination: TerminationConfig = TerminationConfig(),
                reward: RewardConfig = RewardConfig(), name: Optional[str] = None) -> EpisodeLog:
    """Ejecuta el entorno hasta un resultado terminal registrando todo el episodio"""
    env = QuadGainEnv(traj, params=params, dt=traj.dt, termination=termination, reward=reward, record=True)
    observation = env.reset(traj=traj)
    max_steps = math.ceil(termination.timeout_factor * expected_duration(traj) / traj.dt) + 2
    outcome = EpisodeOutcome.RUNNING
    try:
        for _ in range(max_steps):
            observation, _, outcome = env.step_gains(_gains_for(gain_source, observation))
            if outcome.terminal:
                break
    except IntegrationError:
        logger.error("❌ Estado no finito en %s tras %d pasos", name or traj.name, len(env.history))
        raise

    frame = pd.DataFrame(env.history, columns=LOG_COLUMNS)
    return EpisodeLog(frame=frame, outcome=outcome, dt=traj.dt,
                      accumulated_ise=env.state.accumulated_ise, name=name or traj.name)


@dataclass
class EvalRow:
    trajectory: str
    baseline_outcome: str
    rl_outcome: str
    ise_baseline: Optional[float]
    ise_rl: Optional[float]
    itse_baseline: Optional[float]
    itse_rl: Optional[float]
    ise_pct: Optional[float]
    itse_pct: Optional[float]


@dataclass
class EvalReport:
    """Métricas por trayectoria para ambos controladores"""
    rows: List[EvalRow]
    baseline_gains: Dict[str, float]
    reference: Dict = field(default_factory=lambda: dict(PUBLISHED_REFERENCE))
    logs: Dict[str, EpisodeLog] = field(default_factory=dict, repr=False)

    def mean_pct(self, metric: str) -> Optional[float]:
        values = [getattr(r, f"{metric}_pct") for r in self.rows if getattr(r, f"{metric}_pct") is not None]
        return float(np.mean(values)) if values else None

    def to_dict(self) -> Dict:
        return {
            'rows': [vars(r) for r in self.rows],
            'mean_ise_pct': self.mean_pct('ise'),
            'mean_itse_pct': self.mean_pct('itse'),
            'baseline_gains': self.baseline_gains,
            'reference': self.reference,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        """Tabla de ancho fijo: ISE, ITSE y diferencia porcentual por trayectoria"""
        def fmt(value, pct=False):
            if value is None:
                return "—"
            return f"{value:+.1f}%" if pct else f"{value:.3f}"

        header = f"{'':<22}|{'ISE':^25}|{'ITSE':^25}|{'Diferencia %':^21}"
        sub = f"{'Trayectoria':<22}|{'Base':>12}{'RL':>13}|{'Base':>12}{'RL':>13}|{'ISE':>10}{'ITSE':>11}"
        lines = [header, sub, "-" * len(sub)]
        for r in self.rows:
            lines.append(
                f"{r.trajectory:<22}|{fmt(r.ise_baseline):>12}{fmt(r.ise_rl):>13}|"
                f"{fmt(r.itse_baseline):>12}{fmt(r.itse_rl):>13}|"
                f"{fmt(r.ise_pct, True):>10}{fmt(r.itse_pct, True):>11}"
            )
        lo, hi = self.reference['ise_band_pct']
        lines.append("-" * len(sub))
        lines.append(f"Media ISE: {fmt(self.mean_pct('ise'), True)} | Media ITSE: {fmt(self.mean_pct('itse'), True)}"
                     f" | Referencia publicada ISE: [{lo:+.1f}%, {hi:+.1f}%]")
        return "\n".join(lines)


def _completed_metrics(log: EpisodeLog):
    if log.outcome is not EpisodeOutcome.SUCCESS:
        return None, None
    return log.ise(), log.itse()


def compare(baseline: GainVector, policy: GainSource, trajectories: Sequence[Trajectory],
            params: QuadParams = QuadParams(), n_workers: int = 1) -> EvalReport:
    """⚖️ Compara el controlador base con el programado por la política"""
    jobs = []
    for traj in trajectories:
        jobs.append((baseline, traj, f"{traj.name}_baseline"))
        jobs.append((policy, traj, f"{traj.name}_rl"))

    def _run(job):
        source, traj, name = job
        return run_episode(source, traj, params=params, name=name)

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            logs = list(pool.map(_run, jobs))
    else:
        logs = [_run(job) for job in jobs]

    rows, by_name = [], {}
    for k, traj in enumerate(trajectories):
        base_log, rl_log = logs[2 * k], logs[2 * k + 1]
        by_name[base_log.name] = base_log
        by_name[rl_log.name] = rl_log
        ise_b, itse_b = _completed_metrics(base_log)
        ise_r, itse_r = _completed_metrics(rl_log)
        if base_log.outcome is not EpisodeOutcome.SUCCESS or rl_log.outcome is not EpisodeOutcome.SUCCESS:
            logger.warning("⚠️ %s: base=%s, RL=%s (métricas ausentes)",
                           traj.name, base_log.outcome.value, rl_log.outcome.value)
        rows.append(EvalRow(
            trajectory=traj.name,
            baseline_outcome=base_log.outcome.value,
            rl_outcome=rl_log.outcome.value,
            ise_baseline=ise_b, ise_rl=ise_r,
            itse_baseline=itse_b, itse_rl=itse_r,
            ise_pct=percentage_difference(ise_b, ise_r),
            itse_pct=percentage_difference(itse_b, itse_r),
        ))
        logger.info("📊 %s: ISE base=%s RL=%s", traj.name, ise_b, ise_r)
    return EvalReport(rows=rows, baseline_gains=baseline.as_dict(), logs=by_name)
