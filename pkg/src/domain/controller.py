"""
🎛️ CASCADE CONTROLLER - Controlador en cascada de ganancias proporcionales
Responsabilidad: Lazos posición → velocidad → actitud → tasa (eje x) y
posición → velocidad (eje y), produciendo empujes de rotor y el vector de error
"""

from dataclasses import dataclass, astuple
from typing import Tuple

import numpy as np

from src.config.parameters import GAIN_NAMES, GAIN_RANGES
from src.domain.dynamics import QuadParams, QuadState, RotorThrusts
from src.domain.errors import GainRangeError


@dataclass(frozen=True)
class GainVector:
    """Las seis ganancias proporcionales del controlador base"""
    kp_x: float
    kp_vx: float
    kp_theta: float
    kp_omega: float
    kp_y: float
    kp_vy: float

    def to_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, values) -> "GainVector":
        values = [float(v) for v in values]
        if len(values) != len(GAIN_NAMES):
            raise ValueError(f"Se esperaban {len(GAIN_NAMES)} ganancias, recibidas {len(values)}")
        return cls(*values)

    @classmethod
    def midpoints(cls) -> "GainVector":
        """Punto medio de cada rango"""
        return cls(*((GAIN_RANGES[name][0] + GAIN_RANGES[name][1]) / 2.0 for name in GAIN_NAMES))

    def as_dict(self) -> dict:
        return dict(zip(GAIN_NAMES, astuple(self)))


@dataclass(frozen=True)
class ErrorVector:
    """Errores de la cascada, orden [e_x; e_vx; e_theta; e_omega; e_y; e_vy]"""
    e_x: float
    e_vx: float
    e_theta: float
    e_omega: float
    e_y: float
    e_vy: float

    def to_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


@dataclass(frozen=True)
class RefPoint:
    """Posición de referencia [m]"""
    x_ref: float
    y_ref: float


def validate_gains(gains: GainVector, tolerance: float = 1e-12) -> GainVector:
    """Verifica que cada ganancia esté dentro de su rango; nombra el límite violado"""
    for name, value in gains.as_dict().items():
        lo, hi = GAIN_RANGES[name]
        if not (lo - tolerance <= value <= hi + tolerance):
            raise GainRangeError(f"{name}={value} fuera de rango [{lo}, {hi}]")
    return gains


def compute_cascade(state: QuadState, ref: RefPoint, gains: GainVector,
                    params: QuadParams) -> Tuple[ErrorVector, RotorThrusts]:
    """Evalúa la cascada completa; devuelve errores pre-saturación y empujes saturados"""
    # eje x: posición → velocidad → actitud → tasa
    e_x = ref.x_ref - state.px
    vx_ref = gains.kp_x * e_x
    e_vx = vx_ref - state.vx
    theta_ref = gains.kp_vx * e_vx
    e_theta = theta_ref - state.theta
    omega_ref = gains.kp_theta * e_theta
    e_omega = omega_ref - state.omega
    u_diff = gains.kp_omega * e_omega

    # eje y: posición → velocidad, con compensación de gravedad
    e_y = ref.y_ref - state.py
    vy_ref = gains.kp_y * e_y
    e_vy = vy_ref - state.vy
    u_coll = gains.kp_vy * e_vy + params.m * params.g

    t1 = min(max((u_coll - u_diff) / 2.0, 0.0), params.t_max)
    t2 = min(max((u_coll + u_diff) / 2.0, 0.0), params.t_max)

    errors = ErrorVector(e_x, e_vx, e_theta, e_omega, e_y, e_vy)
    return errors, RotorThrusts(t1, t2)
