"""
⚙️ SETTINGS CONFIG
Responsabilidad: Configuración de ejecución (archivo clave=valor + overrides CLI)
y flujos de aleatoriedad con nombre derivados de una semilla raíz
"""

import zlib
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np
from dotenv import dotenv_values

from src.config.parameters import EVAL_SUITE, GAIN_NAMES, GAIN_RANGES, PPO_CONFIG, QUAD_PARAMS, SIM_CONFIG
from src.domain.errors import ConfigError

_MIDPOINT_GAINS = tuple((GAIN_RANGES[name][0] + GAIN_RANGES[name][1]) / 2.0 for name in GAIN_NAMES)


def make_rng(seed: int, name: str) -> np.random.Generator:
    """🎲 Flujo independiente `name` derivado de la semilla raíz"""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(zlib.crc32(name.encode('utf-8')),))
    return np.random.default_rng(sequence)


@dataclass
class RunConfig:
    """Configuración plana de una ejecución; cada campo es una clave del archivo"""
    seed: int = 0
    out: str = "out"
    # simulación
    dt: float = SIM_CONFIG['dt']
    nominal_settle_time: float = SIM_CONFIG['nominal_settle_time']
    step_amplitude: float = SIM_CONFIG['step_amplitude']
    # dron
    m: float = QUAD_PARAMS['m']
    inertia: float = QUAD_PARAMS['inertia']
    l: float = QUAD_PARAMS['l']
    g: float = QUAD_PARAMS['g']
    cd_v: float = QUAD_PARAMS['cd_v']
    cd_omega: float = QUAD_PARAMS['cd_omega']
    t_max: float = QUAD_PARAMS['t_max']
    angular_denominator: str = QUAD_PARAMS['angular_denominator']
    # entrenamiento
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
    n_workers: int = 1
    # evaluación y simulación
    eval_seeds: Tuple[int, ...] = EVAL_SUITE['seeds']
    eval_waypoints: int = EVAL_SUITE['n_waypoints']
    eval_area: float = EVAL_SUITE['area']
    eval_speed: float = EVAL_SUITE['speed']
    baseline_gains: Tuple[float, ...] = _MIDPOINT_GAINS
    checkpoint: str = ""
    gains: Tuple[float, ...] = field(default_factory=tuple)
    trajectory: str = ""
    output: str = ""

    def quad_params(self):
        from src.domain.dynamics import QuadParams
        return QuadParams(m=self.m, inertia=self.inertia, l=self.l, g=self.g, cd_v=self.cd_v,
                          cd_omega=self.cd_omega, t_max=self.t_max,
                          angular_denominator=self.angular_denominator)

    def train_config(self):
        from src.services.ppo import TrainConfig
        return TrainConfig(
            total_steps=self.total_steps, n_envs=self.n_envs, n_steps_per_env=self.n_steps_per_env,
            batch_size=self.batch_size, gamma=self.gamma, lr=self.lr, gae_lambda=self.gae_lambda,
            clip_eps=self.clip_eps, n_epochs=self.n_epochs, value_coef=self.value_coef,
            entropy_coef=self.entropy_coef, max_grad_norm=self.max_grad_norm,
            monitor_every=self.monitor_every, seed=self.seed, n_workers=self.n_workers,
        )

    def to_flat(self) -> Dict[str, str]:
        flat = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(repr(v) for v in value)
            elif isinstance(value, float):
                value = repr(value)
            flat[f.name] = str(value)
        return flat


def _parse_value(name: str, raw: str, default):
    raw = raw.strip()
    try:
        if isinstance(default, int):
            value = float(raw)
            if not value.is_integer():
                raise ValueError("se esperaba un entero")
            return int(value)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            if not raw:
                return ()
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            if default and isinstance(default[0], int):
                return tuple(int(p) for p in parts)
            return tuple(float(p) for p in parts)
        return raw
    except ValueError as e:
        raise ConfigError(f"Valor inválido para {name}: '{raw}' ({e})") from e


def apply_overrides(config: RunConfig, overrides: Mapping[str, Optional[str]]) -> RunConfig:
    """Aplica pares clave=valor (claves con '-' o '_', sin distinguir mayúsculas)"""
    known = {f.name: f for f in fields(config)}
    for key, raw in overrides.items():
        name = key.strip().lower().lstrip('-').replace('-', '_')
        if name not in known:
            raise ConfigError(f"Clave de configuración desconocida: {key}")
        if raw is None:
            raise ConfigError(f"Clave sin valor: {key}")
        setattr(config, name, _parse_value(name, str(raw), getattr(RunConfig(), name)))
    return config


def load_run_config(config_path: Optional[Union[str, Path]] = None,
                    overrides: Optional[Mapping[str, Optional[str]]] = None) -> RunConfig:
    """Valores por defecto < archivo de configuración < overrides de línea de comandos"""
    config = RunConfig()
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"No existe el archivo de configuración: {path}")
        apply_overrides(config, dotenv_values(path))
    if overrides:
        apply_overrides(config, overrides)
    return config


def write_resolved_config(config: RunConfig, path: Union[str, Path]) -> Path:
    """📝 Guarda la configuración resuelta en el mismo formato clave=valor"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{key}={value}" for key, value in config.to_flat().items()]
    path.write_text("\n".join(lines) + "\n", encoding='utf-8')
    return path
