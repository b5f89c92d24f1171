"""
📊 METRICS SERVICE
Responsabilidad: Métricas de seguimiento (ISE, ITSE) y diferencias porcentuales
"""

from typing import Optional

import numpy as np


def _squared_norms(errors) -> np.ndarray:
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ValueError("Serie de errores vacía")
    if errors.ndim == 1:
        return errors ** 2
    return np.sum(errors ** 2, axis=1)


def ise(errors, dt: float) -> float:
    """Integral del error cuadrático: Σ (e_x² + e_y²)·dt (Riemann por la izquierda)"""
    total = 0.0
    for value in _squared_norms(errors):
        total += float(value) * dt
    return total


def itse(errors, dt: float, times=None) -> float:
    """Integral del error cuadrático ponderado por el tiempo: Σ t·(e_x² + e_y²)·dt"""
    squared = _squared_norms(errors)
    if times is None:
        times = np.arange(len(squared)) * dt
    times = np.asarray(times, dtype=float)
    if times.shape != squared.shape:
        raise ValueError(f"times ({times.shape}) y errores ({squared.shape}) de distinto largo")
    return float(np.sum(times * squared) * dt)


def percentage_difference(baseline: Optional[float], candidate: Optional[float]) -> Optional[float]:
    """100·(candidato − base)/base; None si falta algún valor o la base es cero"""
    if baseline is None or candidate is None or baseline == 0:
        return None
    return 100.0 * (candidate - baseline) / baseline
