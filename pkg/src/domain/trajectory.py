"""
🗺️ TRAJECTORY - Generación de trayectorias de referencia
Responsabilidad: Escalón de entrenamiento, trayectorias por waypoints con
interpolación de mínimo jerk, suite de evaluación e import/export CSV
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.config.parameters import EVAL_SUITE, SIM_CONFIG
from src.domain.controller import RefPoint
from src.domain.errors import TrajectoryError

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ['t', 'x_ref', 'y_ref']


@dataclass(frozen=True)
class Trajectory:
    """Referencia muestreada a dt fijo; se mantiene en `terminal` tras el final"""
    samples: Tuple[RefPoint, ...]
    dt: float
    nominal_duration: float
    terminal: RefPoint
    expected_time: Optional[float] = None
    name: str = "trajectory"

    def __post_init__(self):
        if not self.samples:
            raise TrajectoryError("La trayectoria no tiene muestras")
        if not self.dt > 0:
            raise TrajectoryError(f"dt debe ser > 0 (recibido {self.dt})")

    def __len__(self) -> int:
        return len(self.samples)

    def ref_at_index(self, index: int) -> RefPoint:
        """Referencia en la muestra `index`; más allá del final devuelve `terminal`"""
        if index >= len(self.samples):
            return self.terminal
        return self.samples[max(index, 0)]

    def ref_at(self, t: float) -> RefPoint:
        return self.ref_at_index(int(round(t / self.dt)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            't': [k * self.dt for k in range(len(self.samples))],
            'x_ref': [p.x_ref for p in self.samples],
            'y_ref': [p.y_ref for p in self.samples],
        })


def step_reference(amplitude: float, nominal_duration: float, dt: float,
                   name: str = "step") -> Trajectory:
    """Escalón constante (amplitude, amplitude) durante nominal_duration"""
    if not math.isfinite(amplitude):
        raise TrajectoryError(f"Amplitud no finita: {amplitude}")
    if not nominal_duration > 0:
        raise TrajectoryError(f"nominal_duration debe ser > 0 (recibido {nominal_duration})")

    n_samples = int(round(nominal_duration / dt)) + 1
    point = RefPoint(float(amplitude), float(amplitude))
    return Trajectory(
        samples=(point,) * n_samples,
        dt=dt,
        nominal_duration=(n_samples - 1) * dt,
        terminal=point,
        expected_time=nominal_duration,
        name=name,
    )


def _min_jerk_profile(tau: np.ndarray) -> np.ndarray:
    """s(τ) = 10τ³ − 15τ⁴ + 6τ⁵, con velocidad y aceleración nulas en los extremos"""
    return tau ** 3 * (10.0 - 15.0 * tau + 6.0 * tau ** 2)


def waypoint_trajectory(waypoints: Sequence[RefPoint], speed: float, dt: float,
                        seed_tag: str = "waypoints") -> Trajectory:
    """Interpolación de mínimo jerk entre waypoints consecutivos; cada segmento dura longitud/speed"""
    if len(waypoints) < 2:
        raise TrajectoryError("Se necesitan al menos 2 waypoints")
    if not speed > 0:
        raise TrajectoryError(f"speed debe ser > 0 (recibido {speed})")

    points = np.array([[w.x_ref, w.y_ref] for w in waypoints], dtype=float)
    lengths = np.linalg.norm(np.diff(points, axis=0), axis=1)
    if np.any(lengths <= 0.0):
        index = int(np.argmin(lengths))
        raise TrajectoryError(f"Waypoints consecutivos duplicados en la posición {index}")

    durations = lengths / speed
    boundaries = np.concatenate([[0.0], np.cumsum(durations)])
    total = float(boundaries[-1])
    n_samples = int(round(total / dt)) + 1
    times = np.arange(n_samples) * dt

    segment = np.clip(np.searchsorted(boundaries, times, side='right') - 1, 0, len(durations) - 1)
    tau = np.clip((times - boundaries[segment]) / durations[segment], 0.0, 1.0)
    s = _min_jerk_profile(tau)[:, None]
    positions = points[segment] + s * (points[segment + 1] - points[segment])
    # los waypoints que caen sobre la rejilla se fijan exactamente
    for k, boundary in enumerate(boundaries):
        index = int(round(boundary / dt))
        if index < n_samples and abs(index * dt - boundary) < 1e-9:
            positions[index] = points[k]
    positions[-1] = points[-1]

    samples = tuple(RefPoint(float(x), float(y)) for x, y in positions)
    terminal = RefPoint(float(points[-1, 0]), float(points[-1, 1]))
    logger.debug("🗺️ Trayectoria %s: %d muestras, %.2f s", seed_tag, n_samples, total)
    return Trajectory(
        samples=samples,
        dt=dt,
        nominal_duration=(n_samples - 1) * dt,
        terminal=terminal,
        expected_time=total,
        name=seed_tag,
    )


def expected_duration(traj: Trajectory) -> float:
    """Tiempo esperado para alcanzar el objetivo (base del criterio de time-out)"""
    if traj.expected_time is not None:
        return traj.expected_time
    return traj.nominal_duration


def random_waypoints(seed: int, n_waypoints: int = EVAL_SUITE['n_waypoints'],
                     area: float = EVAL_SUITE['area']) -> List[RefPoint]:
    """Waypoints uniformes en [0, area]² con semilla fija"""
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0.0, area, size=(n_waypoints, 2))
    return [RefPoint(float(x), float(y)) for x, y in coords]


def evaluation_suite(seeds: Sequence[int] = EVAL_SUITE['seeds'],
                     n_waypoints: int = EVAL_SUITE['n_waypoints'],
                     area: float = EVAL_SUITE['area'],
                     speed: float = EVAL_SUITE['speed'],
                     dt: float = SIM_CONFIG['dt'],
                     start: Tuple[float, float] = EVAL_SUITE['start']) -> List[Trajectory]:
    """Las trayectorias de evaluación (una por semilla), todas desde el punto de partida del dron"""
    origin = RefPoint(float(start[0]), float(start[1]))
    return [
        waypoint_trajectory([origin] + random_waypoints(seed, n_waypoints, area), speed, dt,
                            seed_tag=f"waypoints-seed{seed}")
        for seed in seeds
    ]


def save_trajectory_csv(traj: Trajectory, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    traj.to_frame().to_csv(path, index=False)
    return path


def load_trajectory_csv(path: Union[str, Path], expected_time: Optional[float] = None) -> Trajectory:
    """Lee un CSV (t, x_ref, y_ref); el último punto es el objetivo final"""
    path = Path(path)
    if not path.exists():
        raise TrajectoryError(f"No existe el archivo de trayectoria: {path}")
    try:
        df = pd.read_csv(path)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise TrajectoryError(f"CSV de trayectoria ilegible ({path}): {e}") from e

    missing = [c for c in TRAJECTORY_COLUMNS if c not in df.columns]
    if missing:
        raise TrajectoryError(f"Faltan columnas {missing} en {path}")
    if df.empty:
        raise TrajectoryError(f"Trayectoria vacía: {path}")
    values = df[TRAJECTORY_COLUMNS].to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise TrajectoryError(f"Valores no finitos en {path}")

    if len(values) > 1:
        dt = float(values[1, 0] - values[0, 0])
    else:
        dt = SIM_CONFIG['dt']
    if not dt > 0:
        raise TrajectoryError(f"Columna t no creciente en {path}")
    if len(values) > 2 and np.max(np.abs(np.diff(values[:, 0]) - dt)) > 1e-9:
        raise TrajectoryError(f"Columna t sin paso uniforme en {path} (dt={dt})")

    samples = tuple(RefPoint(float(x), float(y)) for _, x, y in values)
    return Trajectory(
        samples=samples,
        dt=dt,
        nominal_duration=(len(samples) - 1) * dt,
        terminal=samples[-1],
        expected_time=expected_time,
        name=path.stem,
    )
