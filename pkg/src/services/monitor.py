"""
🎯 TRAINING MONITOR - Registro del progreso de entrenamiento
Responsabilidad: Log JSON-lines por iteración, ventanas de monitoreo
(éxitos, desviaciones, time-outs, recompensa media) y resúmenes en consola
"""

import json
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd

logger = logging.getLogger(__name__)


class TrainingMonitor:
    """Rastrea y persiste las estadísticas de entrenamiento"""

    def __init__(self, out_dir: Optional[Union[str, Path]] = None,
                 log_name: str = "training_log.jsonl", windows_name: str = "monitoring.csv"):
        self.out_dir = Path(out_dir) if out_dir else None
        self.updates: List[Dict] = []
        self.windows: List[Dict] = []
        self.log_path = self.out_dir / log_name if self.out_dir else None
        self.windows_path = self.out_dir / windows_name if self.out_dir else None
        if self.out_dir:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            self.log_path.write_text("", encoding='utf-8')

    def _append(self, record: Dict):
        if self.log_path is None:
            return
        with open(self.log_path, 'a', encoding='utf-8') as f:
            f.write(json.dumps(record, sort_keys=True) + "\n")

    def log_update(self, stats) -> None:
        """Registra las estadísticas de una iteración de actualización"""
        record = {'type': 'update', **asdict(stats)}
        self.updates.append(record)
        self._append(record)
        logger.info("🔄 Iteración %d (%d pasos): EV=%.3f value_loss=%.4f entropy=%.3f kl=%.4f",
                    stats.iteration, stats.timesteps, stats.explained_variance,
                    stats.value_loss, stats.entropy_loss, stats.approx_kl)

    def log_window(self, stats) -> None:
        """Registra una ventana de monitoreo y reescribe el CSV de ventanas"""
        record = {'type': 'window', **asdict(stats)}
        self.windows.append(record)
        self._append(record)
        if self.windows_path is not None:
            frame = pd.DataFrame([{k: v for k, v in w.items() if k != 'type'} for w in self.windows])
            frame.to_csv(self.windows_path, index=False)
        self._show_window_stats(stats)

    def _show_window_stats(self, stats):
        """Muestra el resumen de la ventana"""
        if stats.episodes == 0:
            logger.info("📊 Ventana %d: sin episodios terminados", stats.window)
            return
        reward = "—" if stats.mean_episode_reward is None else f"{stats.mean_episode_reward:.2f}"
        logger.info("📊 Ventana %d: ✅ %d éxitos | ❌ %d desviaciones | ⏱️ %d time-outs | tasa %.1f%% | recompensa media %s",
                    stats.window, stats.successes, stats.deviations, stats.timeouts,
                    100.0 * stats.success_rate, reward)

    def summary(self) -> str:
        """Resumen compacto de todas las ventanas"""
        if not self.windows:
            return "Sin ventanas de monitoreo"
        first, last = self.windows[0], self.windows[-1]
        return (f"Ventanas: {len(self.windows)} | éxitos {first['successes']} → {last['successes']} | "
                f"desviaciones+time-outs {first['deviations'] + first['timeouts']} → "
                f"{last['deviations'] + last['timeouts']}")
