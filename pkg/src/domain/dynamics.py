"""
🚁 DYNAMICS - Dinámica del cuadricóptero plano
Responsabilidad: Ecuaciones de movimiento (6 estados) e integrador RK4 de paso fijo
"""

import math
from dataclasses import dataclass, asdict

import numpy as np

from src.config.parameters import QUAD_PARAMS
from src.domain.errors import IntegrationError


@dataclass(frozen=True)
class QuadState:
    """Estado físico: posición, actitud, velocidades y tasa angular"""
    px: float = 0.0
    py: float = 0.0
    theta: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    omega: float = 0.0

    def to_array(self) -> np.ndarray:
        return np.array([self.px, self.py, self.theta, self.vx, self.vy, self.omega], dtype=float)

    @classmethod
    def from_array(cls, values) -> "QuadState":
        px, py, theta, vx, vy, omega = (float(v) for v in values)
        return cls(px, py, theta, vx, vy, omega)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.px, self.py, self.theta, self.vx, self.vy, self.omega))


@dataclass(frozen=True)
class QuadParams:
    """Parámetros físicos del dron (por defecto, QUAD_PARAMS)"""
    m: float = QUAD_PARAMS['m']
    inertia: float = QUAD_PARAMS['inertia']
    l: float = QUAD_PARAMS['l']
    g: float = QUAD_PARAMS['g']
    cd_v: float = QUAD_PARAMS['cd_v']
    cd_omega: float = QUAD_PARAMS['cd_omega']
    t_max: float = QUAD_PARAMS['t_max']
    angular_denominator: str = QUAD_PARAMS['angular_denominator']

    def __post_init__(self):
        positives = {'m': self.m, 'inertia': self.inertia, 'l': self.l, 'g': self.g, 't_max': self.t_max}
        for name, value in positives.items():
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} debe ser > 0 (recibido {value})")
        for name, value in {'cd_v': self.cd_v, 'cd_omega': self.cd_omega}.items():
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} debe ser >= 0 (recibido {value})")
        if self.angular_denominator not in ('inertia', 'mass'):
            raise ValueError(f"angular_denominator inválido: {self.angular_denominator}")

    @property
    def hover_thrust(self) -> float:
        """Empuje por rotor que equilibra la gravedad"""
        return self.m * self.g / 2.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RotorThrusts:
    """Empujes de rotor izquierdo (t1) y derecho (t2) [N]"""
    t1: float
    t2: float


def _state_derivative(x: np.ndarray, t1: float, t2: float, params: QuadParams) -> np.ndarray:
    _, _, theta, vx, vy, omega = x
    total = t1 + t2
    # arrastre opuesto a la velocidad en ambos ejes
    ax = (-total * math.sin(theta) - params.cd_v * vx) / params.m
    ay = (total * math.cos(theta) - params.cd_v * vy) / params.m - params.g
    denominator = params.inertia if params.angular_denominator == 'inertia' else params.m
    alpha = ((t2 - t1) * params.l - params.cd_omega * omega) / denominator
    return np.array([vx, vy, omega, ax, ay, alpha], dtype=float)


def derivatives(state: QuadState, thrusts: RotorThrusts, params: QuadParams) -> np.ndarray:
    """Derivada temporal del estado: (vx, vy, omega, ax, ay, alpha)"""
    return _state_derivative(state.to_array(), thrusts.t1, thrusts.t2, params)


def step_rk4(state: QuadState, thrusts: RotorThrusts, params: QuadParams, dt: float) -> QuadState:
    """Avanza un paso RK4 clásico con empujes constantes durante el paso"""
    if not dt > 0:
        raise ValueError(f"dt debe ser > 0 (recibido {dt})")

    x = state.to_array()
    t1, t2 = thrusts.t1, thrusts.t2
    k1 = _state_derivative(x, t1, t2, params)
    k2 = _state_derivative(x + 0.5 * dt * k1, t1, t2, params)
    k3 = _state_derivative(x + 0.5 * dt * k2, t1, t2, params)
    k4 = _state_derivative(x + dt * k3, t1, t2, params)
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    if not np.all(np.isfinite(x_next)):
        raise IntegrationError(f"Estado no finito tras RK4: {x_next.tolist()}")
    return QuadState.from_array(x_next)
