"""
⚠️ ERRORES DEL DOMINIO
Responsabilidad: Jerarquía de excepciones del simulador y del entrenamiento
"""


class QuadGainError(Exception):
    """Error base del sistema"""


class IntegrationError(QuadGainError):
    """El integrador produjo un estado no finito"""


class TrajectoryError(QuadGainError):
    """Trayectoria de referencia inválida"""


class GainRangeError(QuadGainError):
    """Ganancia fuera de su rango permitido"""


class EpisodeTerminatedError(QuadGainError):
    """Se intentó avanzar un episodio ya terminado"""


class ShapeError(QuadGainError):
    """Dimensiones incompatibles en red u optimizador"""


class TrainingError(QuadGainError):
    """Fallo numérico durante el entrenamiento"""

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = list(history or [])


class CheckpointError(QuadGainError):
    """Checkpoint inexistente o corrupto"""


class ConfigError(QuadGainError):
    """Configuración ilegible o clave desconocida"""
