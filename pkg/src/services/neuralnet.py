"""
🧠 NEURALNET SERVICE
Responsabilidad: Perceptrón multicapa con gradientes analíticos, política
gaussiana diagonal, optimizador Adam y checkpoints JSON
"""

import json
import logging
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from src.config.parameters import NETWORK_CONFIG
from src.domain.errors import CheckpointError, ShapeError

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
CHECKPOINT_FORMAT = "quad-gain-policy"
CHECKPOINT_VERSION = 1


@dataclass
class MlpParams:
    """Pesos (out, in) y sesgos por capa; tanh en capas ocultas, identidad a la salida"""
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    activation: str = "tanh"

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ShapeError("Número de matrices de pesos y vectores de sesgo distinto")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ShapeError(f"Capa {k}: pesos {w.shape} incompatibles con sesgo {b.shape}")
            if k > 0 and w.shape[1] != self.weights[k - 1].shape[0]:
                raise ShapeError(f"Capa {k}: entrada {w.shape[1]} != salida previa {self.weights[k - 1].shape[0]}")

    @property
    def layer_sizes(self) -> List[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def parameters(self) -> List[np.ndarray]:
        """Orden plano [W0, b0, W1, b1, ...]"""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend((w, b))
        return params

    @classmethod
    def from_parameters(cls, params: Sequence[np.ndarray], activation: str = "tanh") -> "MlpParams":
        return cls(weights=list(params[0::2]), biases=list(params[1::2]), activation=activation)


def _orthogonal(rng: np.random.Generator, rows: int, cols: int, gain: float) -> np.ndarray:
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


def init_mlp(sizes: Sequence[int], rng: np.random.Generator,
             hidden_gain: float = NETWORK_CONFIG['hidden_gain'], out_gain: float = 1.0) -> MlpParams:
    """Inicialización ortogonal escalada; sesgos en cero"""
    weights, biases = [], []
    n_layers = len(sizes) - 1
    for k in range(n_layers):
        gain = out_gain if k == n_layers - 1 else hidden_gain
        weights.append(_orthogonal(rng, sizes[k + 1], sizes[k], gain))
        biases.append(np.zeros(sizes[k + 1]))
    return MlpParams(weights, biases)


def _forward_cache(net: MlpParams, x: np.ndarray) -> Tuple[List[np.ndarray], np.ndarray]:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.weights[0].shape[1]:
        raise ShapeError(f"Entrada de tamaño {x.shape[-1]}, la red espera {net.weights[0].shape[1]}")
    activations = [x]
    h = x
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w.T + b
        h = z if k == last else np.tanh(z)
        activations.append(h)
    return activations, h


def forward(net: MlpParams, x) -> np.ndarray:
    """Composición afín + tanh; acepta un vector o un lote (N, in)"""
    return _forward_cache(net, x)[1]


def backward(net: MlpParams, x, output_grad) -> Tuple[List[np.ndarray], np.ndarray]:
    """Gradientes exactos en modo reverso; devuelve ([dW0, db0, ...], d_input)

    Para lotes, los gradientes de parámetros se suman sobre el lote.
    """
    activations, out = _forward_cache(net, x)
    grad = np.asarray(output_grad, dtype=float)
    if grad.shape != out.shape:
        raise ShapeError(f"output_grad {grad.shape} no coincide con la salida {out.shape}")

    batched = grad.ndim == 2
    n_layers = len(net.weights)
    param_grads: List[np.ndarray] = [None] * (2 * n_layers)
    for k in reversed(range(n_layers)):
        if k < n_layers - 1:
            grad = grad * (1.0 - activations[k + 1] ** 2)
        h_in = activations[k]
        if batched:
            param_grads[2 * k] = grad.T @ h_in
            param_grads[2 * k + 1] = grad.sum(axis=0)
        else:
            param_grads[2 * k] = np.outer(grad, h_in)
            param_grads[2 * k + 1] = grad.copy()
        grad = grad @ net.weights[k]
    return param_grads, grad


def gaussian_log_prob(mean, log_std, action) -> Union[float, np.ndarray]:
    """Log-densidad de una gaussiana diagonal, sumada sobre la última dimensión"""
    mean = np.asarray(mean, dtype=float)
    log_std = np.asarray(log_std, dtype=float)
    z = (np.asarray(action, dtype=float) - mean) / np.exp(log_std)
    return np.sum(-0.5 * z ** 2 - log_std - 0.5 * LOG_2PI, axis=-1)


def gaussian_entropy(log_std) -> float:
    return float(np.sum(np.asarray(log_std, dtype=float) + 0.5 * (1.0 + LOG_2PI)))


@dataclass
class PolicyParams:
    """Actor (medias), log_std independiente del estado y crítico (valor)"""
    actor: MlpParams
    log_std: np.ndarray
    critic: MlpParams

    def parameters(self) -> List[np.ndarray]:
        """Orden plano: actor, log_std, crítico"""
        return self.actor.parameters() + [self.log_std] + self.critic.parameters()

    def with_parameters(self, params: Sequence[np.ndarray]) -> "PolicyParams":
        n_actor = 2 * len(self.actor.weights)
        log_std = np.clip(params[n_actor], NETWORK_CONFIG['log_std_min'], NETWORK_CONFIG['log_std_max'])
        return PolicyParams(
            actor=MlpParams.from_parameters(params[:n_actor], self.actor.activation),
            log_std=log_std,
            critic=MlpParams.from_parameters(params[n_actor + 1:], self.critic.activation),
        )

    def copy(self) -> "PolicyParams":
        return self.with_parameters([p.copy() for p in self.parameters()])


def init_policy(rng: np.random.Generator, obs_dim: int = 6, act_dim: int = 6,
                hidden_sizes: Sequence[int] = NETWORK_CONFIG['hidden_sizes']) -> PolicyParams:
    """Actor y crítico 6-64-64-{6,1} con ganancias de inicialización estándar"""
    actor = init_mlp([obs_dim, *hidden_sizes, act_dim], rng, out_gain=NETWORK_CONFIG['actor_out_gain'])
    critic = init_mlp([obs_dim, *hidden_sizes, 1], rng, out_gain=NETWORK_CONFIG['critic_out_gain'])
    return PolicyParams(actor, np.full(act_dim, NETWORK_CONFIG['log_std_init']), critic)


class ActionSample(NamedTuple):
    action: np.ndarray       # recortada a [-1, 1]
    log_prob: float          # evaluada sobre la muestra sin recortar
    value: float
    raw_action: np.ndarray


def policy_mean(policy: PolicyParams, obs) -> np.ndarray:
    return forward(policy.actor, obs)


def policy_value(policy: PolicyParams, obs) -> Union[float, np.ndarray]:
    out = forward(policy.critic, obs)
    return float(out[0]) if out.ndim == 1 else out[:, 0]


def sample_action(policy: PolicyParams, obs, rng: np.random.Generator) -> ActionSample:
    """a ~ N(μ(obs), diag σ²)"""
    obs = np.asarray(obs, dtype=float)
    mean = policy_mean(policy, obs)
    raw = mean + np.exp(policy.log_std) * rng.standard_normal(mean.shape)
    log_prob = float(gaussian_log_prob(mean, policy.log_std, raw))
    return ActionSample(np.clip(raw, -1.0, 1.0), log_prob, policy_value(policy, obs), raw)


@dataclass
class OptState:
    """Momentos de Adam por parámetro"""
    m: List[np.ndarray]
    v: List[np.ndarray]
    lr: float
    beta1: float = NETWORK_CONFIG['adam_betas'][0]
    beta2: float = NETWORK_CONFIG['adam_betas'][1]
    eps: float = NETWORK_CONFIG['adam_eps']
    step: int = 0

    @classmethod
    def for_parameters(cls, params: Sequence[np.ndarray], lr: float, **kwargs) -> "OptState":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params], lr=lr, **kwargs)


def adam_update(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], opt: OptState) -> List[np.ndarray]:
    """Paso de Adam con corrección de sesgo; actualiza los momentos de `opt`"""
    if len(params) != len(grads) or len(params) != len(opt.m):
        raise ShapeError(f"Listas de tamaño distinto: {len(params)} parámetros, {len(grads)} gradientes, {len(opt.m)} momentos")
    opt.step += 1
    correction1 = 1.0 - opt.beta1 ** opt.step
    correction2 = 1.0 - opt.beta2 ** opt.step
    updated = []
    for k, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape or p.shape != opt.m[k].shape:
            raise ShapeError(f"Parámetro {k}: forma {p.shape} vs gradiente {g.shape}")
        opt.m[k] = opt.beta1 * opt.m[k] + (1.0 - opt.beta1) * g
        opt.v[k] = opt.beta2 * opt.v[k] + (1.0 - opt.beta2) * g * g
        m_hat = opt.m[k] / correction1
        v_hat = opt.v[k] / correction2
        updated.append(p - opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps))
    return updated


def _mlp_to_json(net: MlpParams) -> Dict:
    return {
        'layer_sizes': net.layer_sizes,
        'activation': net.activation,
        'weights': [w.tolist() for w in net.weights],
        'biases': [b.tolist() for b in net.biases],
    }


def _mlp_from_json(data: Dict) -> MlpParams:
    return MlpParams(
        weights=[np.array(w, dtype=float) for w in data['weights']],
        biases=[np.array(b, dtype=float) for b in data['biases']],
        activation=data.get('activation', 'tanh'),
    )


def save_checkpoint(policy: PolicyParams, path: Union[str, Path], training_step: int = 0,
                    extra: Optional[Dict] = None) -> Path:
    """💾 Guarda la política como un único documento JSON (decimales de precisión completa)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {
        'format': CHECKPOINT_FORMAT,
        'version': CHECKPOINT_VERSION,
        'metadata': {
            'actor_layer_sizes': policy.actor.layer_sizes,
            'critic_layer_sizes': policy.critic.layer_sizes,
            'activation': policy.actor.activation,
            'created_at': datetime.now().isoformat(),
            'training_step': int(training_step),
            **(extra or {}),
        },
        'actor': _mlp_to_json(policy.actor),
        'log_std': policy.log_std.tolist(),
        'critic': _mlp_to_json(policy.critic),
    }
    try:
        text = json.dumps(document, allow_nan=False)
    except ValueError as e:
        raise CheckpointError(f"Parámetros no finitos, checkpoint no guardado: {e}") from e
    path.write_text(text, encoding='utf-8')
    logger.info("💾 Checkpoint guardado: %s (paso %d)", path, training_step)
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[PolicyParams, Dict]:
    """Carga un checkpoint; devuelve (política, metadatos)"""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"No existe el checkpoint: {path}")
    try:
        document = json.loads(path.read_text(encoding='utf-8'))
        if document.get('format') != CHECKPOINT_FORMAT:
            raise CheckpointError(f"Formato desconocido en {path}: {document.get('format')}")
        policy = PolicyParams(
            actor=_mlp_from_json(document['actor']),
            log_std=np.array(document['log_std'], dtype=float),
            critic=_mlp_from_json(document['critic']),
        )
    except CheckpointError:
        raise
    except (json.JSONDecodeError, KeyError, TypeError, ValueError, ShapeError) as e:
        raise CheckpointError(f"Checkpoint corrupto ({path}): {e}") from e
    return policy, document.get('metadata', {})
