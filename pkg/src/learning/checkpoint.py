"""
Formato de checkpoint das redes (arquivo .npz, sem pickle)

Chaves gravadas:

    format_version            inteiro, versão do layout abaixo
    meta                      string JSON com metadados livres do chamador
    net.<nome>.topology       string JSON com a lista de camadas (DenseNet.topology)
    net.<nome>.params         float64 little-endian, parâmetros concatenados na
                              ordem de DenseNet.params (pesos (in, out) e bias)
    opt.<nome>.hyper          float64 [lr, beta1, beta2, eps, step_count]
    opt.<nome>.m / .v         float64, momentos concatenados como os parâmetros
                              (vazios antes do primeiro passo)
    array.<nome>              arrays extras (por exemplo o replay buffer)

Salvar e carregar preserva os parâmetros bit a bit.
"""
import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from utils.exceptions import NumericalError
from utils.logger import setup_logger
from .networks import AdamOptimizer, DenseNet

logger = setup_logger(__name__)

FORMAT_VERSION = 1


def _flatten(arrays) -> np.ndarray:
    if not arrays:
        return np.zeros(0, dtype="<f8")
    return np.concatenate([a.ravel() for a in arrays]).astype("<f8")


def _split_like(flat: np.ndarray, like) -> list:
    parts, offset = [], 0
    for p in like:
        parts.append(np.array(flat[offset:offset + p.size], dtype=np.float64).reshape(p.shape))
        offset += p.size
    return parts


def save_checkpoint(
    path: Union[str, Path],
    networks: Dict[str, DenseNet],
    optimizers: Optional[Dict[str, AdamOptimizer]] = None,
    meta: Optional[Dict[str, Any]] = None,
    arrays: Optional[Dict[str, np.ndarray]] = None,
) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload: Dict[str, np.ndarray] = {
        "format_version": np.array(FORMAT_VERSION, dtype=np.int64),
        "meta": np.array(json.dumps(meta or {}, sort_keys=True)),
    }
    for name, net in networks.items():
        payload[f"net.{name}.topology"] = np.array(json.dumps(net.topology()))
        payload[f"net.{name}.params"] = net.flat_params()
    for name, opt in (optimizers or {}).items():
        payload[f"opt.{name}.hyper"] = np.array(
            [opt.lr, opt.beta1, opt.beta2, opt.eps, opt.step_count], dtype="<f8"
        )
        payload[f"opt.{name}.m"] = _flatten(opt.m)
        payload[f"opt.{name}.v"] = _flatten(opt.v)
    for name, array in (arrays or {}).items():
        payload[f"array.{name}"] = np.asarray(array)

    with open(path, "wb") as f:
        np.savez(f, **payload)
    logger.info(f"Checkpoint salvo: {path} ({len(networks)} redes)")
    return str(path)


def load_checkpoint(
    path: Union[str, Path],
) -> Tuple[Dict[str, DenseNet], Dict[str, AdamOptimizer], Dict[str, Any], Dict[str, np.ndarray]]:
    """Retorna (redes, otimizadores, meta, arrays extras)"""
    with np.load(path, allow_pickle=False) as data:
        version = int(data["format_version"])
        if version != FORMAT_VERSION:
            raise NumericalError(f"versão de checkpoint não suportada: {version}")
        meta = json.loads(data["meta"].item())

        networks: Dict[str, DenseNet] = {}
        optimizers: Dict[str, AdamOptimizer] = {}
        arrays: Dict[str, np.ndarray] = {}
        for key in data.files:
            kind, _, rest = key.partition(".")
            if kind == "net" and rest.endswith(".topology"):
                name = rest[: -len(".topology")]
                net = DenseNet.from_topology(json.loads(data[key].item()))
                net.load_flat(data[f"net.{name}.params"])
                networks[name] = net
            elif kind == "array":
                arrays[rest] = np.array(data[key])

        for key in data.files:
            kind, _, rest = key.partition(".")
            if kind != "opt" or not rest.endswith(".hyper"):
                continue
            name = rest[: -len(".hyper")]
            lr, beta1, beta2, eps, step_count = data[key].tolist()
            opt = AdamOptimizer(lr=lr, beta1=beta1, beta2=beta2, eps=eps, step_count=int(step_count))
            m, v = data[f"opt.{name}.m"], data[f"opt.{name}.v"]
            if m.size and name in networks:
                opt.m = _split_like(m, networks[name].params)
                opt.v = _split_like(v, networks[name].params)
            optimizers[name] = opt

    logger.info(f"Checkpoint carregado: {path}")
    return networks, optimizers, meta, arrays
