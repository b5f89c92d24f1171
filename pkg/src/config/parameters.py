"""
📍 PARAMETERS CONFIG
Responsabilidad: Tablas de parámetros del dron, rangos de ganancias, MDP y PPO
"""

# Parámetros físicos del dron plano (masa, inercia, brazo, gravedad, arrastres)
QUAD_PARAMS = {
    'm': 2.5,
    'inertia': 1.0,
    'l': 1.0,
    'g': 9.807,
    'cd_v': 0.25,
    'cd_omega': 0.02255,
    't_max': 1.5 * 2.5 * 9.807,
    'angular_denominator': 'inertia',
}

# Orden canónico de las seis ganancias proporcionales
GAIN_NAMES = ('kp_x', 'kp_vx', 'kp_theta', 'kp_omega', 'kp_y', 'kp_vy')

# Rangos (lo, hi) de cada ganancia
GAIN_RANGES = {
    'kp_x': (0.5, 2.0),
    'kp_vx': (-0.5, -0.1),
    'kp_theta': (5.0, 10.0),
    'kp_omega': (10.0, 16.0),
    'kp_y': (0.5, 3.0),
    'kp_vy': (5.0, 15.0),
}

# Simulación
SIM_CONFIG = {
    'dt': 0.02,
    'nominal_settle_time': 5.0,
    'step_amplitude': 1.0,
}

# Condiciones de terminación del episodio
TERMINATION_CONFIG = {
    'max_deviation': 10.0,
    'timeout_factor': 1.2,
    'eps_pos': 0.1,
    'eps_vel': 0.1,
    'time_tolerance': 1e-9,
}

# Recompensa por caso
REWARD_CONFIG = {
    'timeout': -1.0,
    'deviation': -5.0,
    'success_numerator': 10.0,
    'running_scale': 0.05,
    'running_clamp': 2.0,
    'eps_div': 1e-6,
}

# Hiperparámetros PPO
PPO_CONFIG = {
    'total_steps': 240_000,
    'n_envs': 3,
    'n_steps_per_env': 2048,
    'batch_size': 64,
    'gamma': 0.99,
    'lr': 3e-4,
    'gae_lambda': 0.95,
    'clip_eps': 0.2,
    'n_epochs': 10,
    'value_coef': 0.5,
    'entropy_coef': 0.0,
    'max_grad_norm': 0.5,
    'monitor_every': 2,
}

# Red actor-crítico
NETWORK_CONFIG = {
    'hidden_sizes': (64, 64),
    'hidden_gain': 2 ** 0.5,
    'actor_out_gain': 0.01,
    'critic_out_gain': 1.0,
    'log_std_init': 0.0,
    'log_std_min': -20.0,
    'log_std_max': 2.0,
    'adam_betas': (0.9, 0.999),
    'adam_eps': 1e-8,
}

# Suite de evaluación: trayectorias por waypoints aleatorios con semilla fija
EVAL_SUITE = {
    'seeds': (1, 2, 3),
    'n_waypoints': 5,
    'area': 10.0,
    'speed': 1.0,
    'start': (0.0, 0.0),    # punto de partida del dron; cada trayectoria arranca aquí
}

# Valores publicados (solo contexto para el reporte, no objetivo de reproducción)
PUBLISHED_REFERENCE = {
    'rows': [
        {'trajectory': 1, 'ise_base': 0.582, 'ise_rl': 0.330, 'itse_base': 71.651, 'itse_rl': 37.551, 'ise_pct': -43.3, 'itse_pct': -47.6},
        {'trajectory': 2, 'ise_base': 0.526, 'ise_rl': 0.290, 'itse_base': 86.409, 'itse_rl': 44.137, 'ise_pct': -44.9, 'itse_pct': -48.9},
        {'trajectory': 3, 'ise_base': 0.357, 'ise_rl': 0.205, 'itse_base': 66.681, 'itse_rl': 36.120, 'ise_pct': -42.6, 'itse_pct': -45.8},
    ],
    'ise_band_pct': (-44.9, -42.6),
}
