"""
🚀 QUAD GAIN TUNER - MAIN
Programación de ganancias de un controlador en cascada con PPO:
entrenamiento, evaluación contra el controlador base y simulación
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from src.config.settings import RunConfig, load_run_config, write_resolved_config
from src.domain.controller import GainVector, validate_gains
from src.domain.errors import ConfigError, QuadGainError
from src.domain.trajectory import evaluation_suite, load_trajectory_csv, save_trajectory_csv, step_reference
from src.services.evaluation import compare, run_episode
from src.services.monitor import TrainingMonitor
from src.services.neuralnet import load_checkpoint
from src.services.ppo import train

logger = logging.getLogger("quad_gain")


def _step_trajectory(config: RunConfig):
    return step_reference(config.step_amplitude, config.nominal_settle_time, config.dt)


def _prepare_out(config: RunConfig, command: str) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved_config(config, out / "config_resolved.env")
    logger.info("📝 Configuración resuelta (%s) guardada en %s", command, out / "config_resolved.env")
    return out


def cmd_train(config: RunConfig) -> int:
    """🏋️ Entrena la política y guarda checkpoints, log JSON-lines y CSV de ventanas"""
    out = _prepare_out(config, "train")
    train_config = config.train_config()
    monitor = TrainingMonitor(out)
    train(train_config, traj=_step_trajectory(config), params=config.quad_params(), out_dir=out, monitor=monitor)
    print(f"✅ Entrenamiento completado. {monitor.summary()}")
    print(f"💾 Política final: {out / 'policy_final.json'}")
    return 0


def cmd_eval(config: RunConfig) -> int:
    """⚖️ Compara el controlador base con la política entrenada"""
    if not config.checkpoint:
        raise ConfigError("eval requiere --checkpoint")
    baseline = validate_gains(GainVector.from_array(config.baseline_gains))
    policy, metadata = load_checkpoint(config.checkpoint)
    out = _prepare_out(config, "eval")

    trajectories = evaluation_suite(config.eval_seeds, config.eval_waypoints, config.eval_area,
                                    config.eval_speed, config.dt)
    for traj in trajectories:
        save_trajectory_csv(traj, out / "trajectories" / f"{traj.name}.csv")
    report = compare(baseline, policy, trajectories, params=config.quad_params(), n_workers=config.n_workers)

    (out / "eval_report.json").write_text(report.to_json() + "\n", encoding='utf-8')
    table = report.to_text()
    (out / "eval_report.txt").write_text(table + "\n", encoding='utf-8')
    for name, log in report.logs.items():
        log.to_csv(out / "episodes" / f"{name}.csv")
    print(table)
    return 0


def cmd_simulate(config: RunConfig) -> int:
    """🛩️ Simula un episodio con ganancias fijas o con un checkpoint"""
    if config.gains and config.checkpoint:
        raise ConfigError("Use --gains o --checkpoint, no ambos")
    if config.gains:
        source = validate_gains(GainVector.from_array(config.gains))
    elif config.checkpoint:
        source, _ = load_checkpoint(config.checkpoint)
    else:
        source = validate_gains(GainVector.from_array(config.baseline_gains))

    traj = load_trajectory_csv(config.trajectory) if config.trajectory else _step_trajectory(config)
    if abs(traj.dt - config.dt) > 1e-12:
        raise ConfigError(f"El dt de la trayectoria ({traj.dt}) no coincide con dt={config.dt}")
    out = _prepare_out(config, "simulate")
    log = run_episode(source, traj, params=config.quad_params())
    path = log.to_csv(config.output or out / "simulation.csv")
    print(f"🏁 Resultado: {log.outcome.value} | ISE={log.ise():.4f} | ITSE={log.itse():.4f}")
    print(f"💾 Serie temporal: {path}")
    return 0


COMMANDS = {'train': cmd_train, 'eval': cmd_eval, 'simulate': cmd_simulate}


def _parse_overrides(extra: Sequence[str]) -> Dict[str, str]:
    """Convierte ['--clave', 'valor', '--otra=valor'] en un diccionario"""
    overrides: Dict[str, str] = {}
    items: List[str] = list(extra)
    k = 0
    while k < len(items):
        token = items[k]
        if not token.startswith("--"):
            raise ConfigError(f"Argumento inesperado: {token}")
        if "=" in token:
            key, value = token[2:].split("=", 1)
            k += 1
        else:
            if k + 1 >= len(items):
                raise ConfigError(f"Falta el valor de {token}")
            key, value = token[2:], items[k + 1]
            k += 2
        overrides[key] = value
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quad-gain",
        description="Ajuste de ganancias de un cuadricóptero plano con PPO",
        allow_abbrev=False,
        epilog="Cualquier clave de configuración se puede sobrescribir con --clave valor",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="archivo clave=valor")
    parser.add_argument("--seed", help="semilla raíz")
    parser.add_argument("-o", "--out", help="directorio de salida")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        overrides = _parse_overrides(extra)
        if args.seed is not None:
            overrides['seed'] = args.seed
        if args.out is not None:
            overrides['out'] = args.out
        config = load_run_config(args.config, overrides)
        return COMMANDS[args.command](config)
    except (QuadGainError, ValueError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("\n👋 Detenido por el usuario.", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
