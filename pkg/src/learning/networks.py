"""
Redes densas mínimas com gradientes exatos, otimizador Adam e soft update

Todas as contas em float64. Entradas podem ser vetores (uma amostra) ou
matrizes (lote x dimensão); os gradientes de parâmetros são somados no lote.
"""
import copy
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.exceptions import NumericalError
from utils.logger import setup_logger

logger = setup_logger(__name__)


class Layer:
    kind = "layer"

    @property
    def params(self) -> List[np.ndarray]:
        return []

    @property
    def out_dim(self) -> Optional[int]:
        return None

    def forward(self, x):
        raise NotImplementedError

    def backward(self, cache, dy):
        raise NotImplementedError

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind}


class ConcatInputs(Layer):
    kind = "concat"

    def __init__(self, sizes: Sequence[int]):
        self.sizes = [int(s) for s in sizes]

    @property
    def out_dim(self) -> int:
        return sum(self.sizes)

    def forward(self, inputs):
        for x, size in zip(inputs, self.sizes):
            if x.shape[1] != size:
                raise ValueError(f"entrada com dimensão {x.shape[1]}, esperado {size}")
        return np.concatenate(inputs, axis=1), None

    def backward(self, cache, dy):
        splits = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(dy, splits, axis=1)), []

    def describe(self):
        return {"kind": self.kind, "sizes": self.sizes}


class Normalize(Layer):
    """Mapa afim de [lo, hi] para [-1, 1] por feature"""
    kind = "normalize"

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)
        if np.any(self.hi <= self.lo):
            raise ValueError("normalize exige hi > lo")

    def forward(self, x):
        return 2.0 * (x - self.lo) / (self.hi - self.lo) - 1.0, None

    def backward(self, cache, dy):
        return dy * 2.0 / (self.hi - self.lo), []

    def describe(self):
        return {"kind": self.kind, "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class Linear(Layer):
    kind = "linear"

    def __init__(self, n_in: int, n_out: int, rng: Optional[np.random.Generator] = None, init_scale: Optional[float] = None):
        rng = rng or np.random.default_rng(0)
        bound = init_scale if init_scale is not None else 1.0 / np.sqrt(n_in)
        self.weight = rng.uniform(-bound, bound, size=(n_in, n_out))
        self.bias = rng.uniform(-bound, bound, size=n_out)

    @property
    def params(self):
        return [self.weight, self.bias]

    @property
    def out_dim(self):
        return self.weight.shape[1]

    def forward(self, x):
        if x.shape[1] != self.weight.shape[0]:
            raise ValueError(f"entrada com dimensão {x.shape[1]}, esperado {self.weight.shape[0]}")
        return x @ self.weight + self.bias, x

    def backward(self, cache, dy):
        return dy @ self.weight.T, [cache.T @ dy, dy.sum(axis=0)]

    def describe(self):
        return {"kind": self.kind, "n_in": self.weight.shape[0], "n_out": self.weight.shape[1]}


class ReLU(Layer):
    kind = "relu"

    def forward(self, x):
        return np.maximum(x, 0.0), x > 0

    def backward(self, cache, dy):
        return dy * cache, []


class Tanh(Layer):
    kind = "tanh"

    def forward(self, x):
        y = np.tanh(x)
        return y, y

    def backward(self, cache, dy):
        return dy * (1.0 - cache**2), []


class Scale(Layer):
    """Mapa afim de [-1, 1] para [lo, hi]"""
    kind = "scale"

    def __init__(self, lo: float, hi: float):
        self.lo = float(lo)
        self.hi = float(hi)

    def forward(self, x):
        return self.lo + (x + 1.0) * (self.hi - self.lo) / 2.0, None

    def backward(self, cache, dy):
        return dy * (self.hi - self.lo) / 2.0, []

    def describe(self):
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}


class DenseNet:
    def __init__(self, layers: Sequence[Layer]):
        self.layers = list(layers)

    @property
    def params(self) -> List[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    @property
    def n_inputs(self) -> int:
        first = self.layers[0]
        return len(first.sizes) if isinstance(first, ConcatInputs) else 1

    def _prepare(self, inputs) -> Tuple[Any, bool]:
        arrays = [np.asarray(x, dtype=np.float64) for x in inputs]
        single = arrays[0].ndim == 1
        arrays = [np.atleast_2d(x) for x in arrays]
        if len(arrays) != self.n_inputs:
            raise ValueError(f"rede espera {self.n_inputs} entrada(s), recebeu {len(arrays)}")
        x = tuple(arrays) if isinstance(self.layers[0], ConcatInputs) else arrays[0]
        return x, single

    def forward(self, *inputs) -> np.ndarray:
        x, single = self._prepare(inputs)
        for layer in self.layers:
            x, _ = layer.forward(x)
        return x[0] if single else x

    def gradients(self, *inputs, upstream) -> Tuple[List[np.ndarray], Any]:
        """
        Gradientes reversos exatos de (upstream · saída)

        Retorna (gradientes na ordem de ``params``, gradiente da entrada).
        Para redes com ConcatInputs o gradiente da entrada é uma tupla.
        """
        x, single = self._prepare(inputs)
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x)
            caches.append(cache)

        dy = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
        if dy.shape != x.shape:
            raise ValueError(f"upstream com forma {dy.shape}, saída com forma {x.shape}")

        grads: List[List[np.ndarray]] = []
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            dy, layer_grads = layer.backward(cache, dy)
            grads.append(layer_grads)
        flat = [g for layer_grads in reversed(grads) for g in layer_grads]

        if single:
            dy = tuple(d[0] for d in dy) if isinstance(dy, tuple) else dy[0]
        return flat, dy

    def copy(self) -> "DenseNet":
        return copy.deepcopy(self)

    def set_params(self, values: Sequence[np.ndarray]) -> None:
        for target, value in zip(self.params, values):
            target[...] = value

    def flat_params(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params]).astype("<f8")

    def load_flat(self, flat: np.ndarray) -> None:
        offset = 0
        for p in self.params:
            p[...] = flat[offset:offset + p.size].reshape(p.shape)
            offset += p.size
        if offset != flat.size:
            raise ValueError("vetor de parâmetros com tamanho incompatível")

    def topology(self) -> List[Dict[str, Any]]:
        return [layer.describe() for layer in self.layers]

    @classmethod
    def from_topology(cls, topology: Sequence[Dict[str, Any]]) -> "DenseNet":
        layers: List[Layer] = []
        for spec in topology:
            kind = spec["kind"]
            if kind == "concat":
                layers.append(ConcatInputs(spec["sizes"]))
            elif kind == "normalize":
                layers.append(Normalize(spec["lo"], spec["hi"]))
            elif kind == "linear":
                layers.append(Linear(spec["n_in"], spec["n_out"]))
            elif kind == "relu":
                layers.append(ReLU())
            elif kind == "tanh":
                layers.append(Tanh())
            elif kind == "scale":
                layers.append(Scale(spec["lo"], spec["hi"]))
            else:
                raise ValueError(f"camada desconhecida: {kind}")
        return cls(layers)


@dataclass
class AdamOptimizer:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)

    def step(self, params: List[np.ndarray], grads: List[np.ndarray]) -> None:
        if len(params) != len(grads):
            raise ValueError("parâmetros e gradientes em quantidades diferentes")
        for p, g in zip(params, grads):
            if p.shape != g.shape:
                raise ValueError(f"gradiente com forma {g.shape} para parâmetro {p.shape}")
            if not np.all(np.isfinite(g)):
                logger.error("Gradiente não finito detectado")
                raise NumericalError("gradiente não finito")
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]

        self.step_count += 1
        correction1 = 1 - self.beta1**self.step_count
        correction2 = 1 - self.beta2**self.step_count
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)


def forward(net: DenseNet, *inputs) -> np.ndarray:
    return net.forward(*inputs)


def gradients(net: DenseNet, *inputs, upstream):
    return net.gradients(*inputs, upstream=upstream)


def adam_step(params: List[np.ndarray], grads: List[np.ndarray], opt: AdamOptimizer) -> List[np.ndarray]:
    opt.step(params, grads)
    return params


def soft_update(target: DenseNet, online: DenseNet, tau: float) -> DenseNet:
    """θ_t ← τ·θ + (1 − τ)·θ_t"""
    if not 0 < tau <= 1:
        raise ValueError(f"tau deve estar em (0, 1], recebido {tau}")
    target_params, online_params = target.params, online.params
    if [p.shape for p in target_params] != [p.shape for p in online_params]:
        raise ValueError("redes com formas diferentes")
    for t, p in zip(target_params, online_params):
        t *= 1 - tau
        t += tau * p
    return target


def build_actor(n: int, levels: int, rng: np.random.Generator) -> DenseNet:
    """normalização → 16N' → relu → 16N' → relu → N' → tanh → escala [-π, π]"""
    width = 16 * n
    return DenseNet([
        Normalize(np.zeros(n), np.full(n, levels - 1.0)),
        Linear(n, width, rng),
        ReLU(),
        Linear(width, width, rng),
        ReLU(),
        Linear(width, n, rng, init_scale=1e-3),
        Tanh(),
        Scale(-np.pi, np.pi),
    ])


def build_critic(n: int, levels: int, rng: np.random.Generator) -> DenseNet:
    """concat(estado, ação) → normalização → 32N' → relu → 16N' → tanh → 1"""
    lo = np.concatenate([np.zeros(n), np.full(n, -np.pi)])
    hi = np.concatenate([np.full(n, levels - 1.0), np.full(n, np.pi)])
    return DenseNet([
        ConcatInputs([n, n]),
        Normalize(lo, hi),
        Linear(2 * n, 32 * n, rng),
        ReLU(),
        Linear(32 * n, 16 * n, rng),
        Tanh(),
        Linear(16 * n, 1, rng),
    ])
