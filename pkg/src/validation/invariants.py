"""
Verificações rápidas de invariantes do simulador e do aprendizado

Cada verificação retorna True ou levanta ValidationError. ``run_checks``
executa todas e devolve o resultado por nome.
"""
from itertools import product
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from beamforming.codebook import BeamVector, PhaseCodebook
from beamforming.power import SignalModel, conjugate_oracle, quantized_oracle, received_power
from channel.propagation import ChannelVector
from config.settings import DEFAULT_EXPERIMENT
from geometry.array_layout import ArrayLayout, module_slice
from geometry.fresnel import fresnel_bounds
from learning.knn import knn, knn_bruteforce
from learning.networks import DenseNet, build_actor, build_critic
from orchestration.fusion import align_phases_continuous, align_phases_quantized
from utils.exceptions import FocusBaseException, ValidationError
from utils.logger import setup_logger
from utils.seeding import SeedStreams

logger = setup_logger(__name__)

GRADIENT_RTOL = 1e-4


def _fail(name: str, message: str) -> None:
    logger.error(f"Verificação '{name}' falhou: {message}")
    raise ValidationError(f"{name}: {message}")


def random_channel(n: int, rng: np.random.Generator) -> ChannelVector:
    magnitude = rng.uniform(0.5, 1.5, n)
    return ChannelVector(magnitude * np.exp(1j * rng.uniform(-np.pi, np.pi, n)))


def check_tiling_partition(layout: Optional[ArrayLayout] = None) -> bool:
    """Os módulos particionam os elementos, em blocos contíguos"""
    layout = layout or ArrayLayout.from_shape(6, 4, 3, 2, 0.005)
    seen = np.concatenate([module_slice(layout, m) for m in range(layout.n_modules)])
    if not np.array_equal(np.sort(seen), np.arange(layout.n_elements)):
        _fail("tiling", "módulos não cobrem cada elemento exatamente uma vez")
    positions = layout.positions()
    if len(np.unique(np.round(positions, 12), axis=0)) != layout.n_elements:
        _fail("tiling", "posições de elementos repetidas")
    return True


def check_fresnel_monotone(wavelength: float = 299792458.0 / 28e9) -> bool:
    previous = None
    for diameter in np.linspace(0.05, 1.0, 40):
        bounds = fresnel_bounds(diameter, wavelength)
        if previous is not None and not (bounds.lower > previous.lower and bounds.upper > previous.upper):
            _fail("fresnel", f"limites não crescem com D em D={diameter:.3f}")
        previous = bounds
    return True


def check_oracle_dominance(rng: np.random.Generator, trials: int = 200) -> bool:
    """Oráculo quantizado é ótimo por busca exaustiva em instâncias pequenas"""
    sig = SignalModel()
    for _ in range(trials):
        n = int(rng.integers(1, 5))
        codebook = PhaseCodebook(int(rng.integers(1, 3)))
        h = random_channel(n, rng)
        oracle_power = received_power(quantized_oracle(h, codebook), h, sig)
        best = max(
            received_power(BeamVector(np.array(c), codebook.bits), h, sig)
            for c in product(range(codebook.size), repeat=n)
        )
        if oracle_power < best * (1 - 1e-12):
            _fail("oracle", f"oráculo {oracle_power:.6g} abaixo da busca exaustiva {best:.6g}")
        continuous = received_power(np.exp(1j * conjugate_oracle(h)) / np.sqrt(n), h, sig)
        if continuous < best * (1 - 1e-12):
            _fail("oracle", "oráculo contínuo abaixo do quantizado")
    return True


def check_knn_bruteforce(rng: np.random.Generator, trials: int = 1000) -> bool:
    """knn coincide com a enumeração por níveis (conjunto por nível completo)"""
    for _ in range(trials):
        n = int(rng.integers(1, 5))
        codebook = PhaseCodebook(int(rng.integers(1, 4)))
        k = int(rng.integers(1, 21))
        w = BeamVector(rng.integers(codebook.size, size=n), codebook.bits)
        result = knn(w, k, codebook, rng)
        reference = knn_bruteforce(w, 3**n, codebook)
        truth = reference.by_level()

        keys = [tuple(int(i) for i in v.indices) for v in result.vectors]
        if len(set(keys)) != len(keys):
            _fail("knn", "vizinhos repetidos")
        if result.levels != sorted(result.levels):
            _fail("knn", "níveis fora de ordem")
        if len(result) != min(k, len(reference)):
            _fail("knn", f"retornou {len(result)} vizinhos, esperado {min(k, len(reference))}")
        found = result.by_level()
        for level, members in found.items():
            if not members <= truth.get(level, set()):
                _fail("knn", f"vizinho fora do nível {level}")
        top = max(found, default=0)
        for level, members in truth.items():
            if level < top and found.get(level) != members:
                _fail("knn", f"nível {level} incompleto antes do nível seguinte")
    return True


def check_alignment_identities(rng: np.random.Generator, trials: int = 1000) -> bool:
    for _ in range(trials):
        m = int(rng.integers(1, 17))
        n = int(rng.integers(1, 5))
        bits = int(rng.integers(1, 5))
        codebook = PhaseCodebook(bits)
        channels = [random_channel(n, rng) for _ in range(m)]
        vectors = [BeamVector(rng.integers(codebook.size, size=n), bits) for _ in range(m)]

        x = np.array([np.vdot(v.coefficients(), h.gains) for v, h in zip(vectors, channels)])
        total = np.sum(np.abs(x))

        aligned = align_phases_continuous(x, [v.coefficients() for v in vectors])
        x_cont = np.array([np.vdot(w, h.gains) for w, h in zip(aligned, channels)])
        if abs(abs(x_cont.sum()) - total) > 1e-12 * max(1.0, total):
            _fail("alignment", "alinhamento contínuo não soma coerentemente")

        aligned_q = align_phases_quantized(x, vectors, codebook)
        x_q = np.array([np.vdot(v.coefficients(), h.gains) for v, h in zip(aligned_q, channels)])
        if abs(x_q.sum()) < np.cos(np.pi / codebook.size) * total - 1e-12:
            _fail("alignment", "alinhamento quantizado abaixo de cos(π/2^r)·Σ|x|")
    return True


def numeric_gradients(
    net: DenseNet, inputs: Sequence[np.ndarray], upstream: np.ndarray, eps: float = 1e-6
) -> List[np.ndarray]:
    """Diferenças centrais de Σ upstream·saída em relação a cada parâmetro"""
    def objective() -> float:
        return float(np.sum(upstream * net.forward(*inputs)))

    grads = []
    for param in net.params:
        grad = np.zeros_like(param)
        flat, out = param.reshape(-1), grad.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + eps
            plus = objective()
            flat[i] = saved - eps
            minus = objective()
            flat[i] = saved
            out[i] = (plus - minus) / (2 * eps)
        grads.append(grad)
    return grads


def gradient_mismatch(analytic: Sequence[np.ndarray], numeric: Sequence[np.ndarray]) -> float:
    """Maior erro relativo entre gradientes analíticos e numéricos"""
    worst = 0.0
    for a, b in zip(analytic, numeric):
        scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-5)
        worst = max(worst, float(np.max(np.abs(a - b) / scale)))
    return worst


def check_gradients(rng: np.random.Generator, trials: int = 50) -> bool:
    for _ in range(trials):
        n = int(rng.integers(1, 3))
        levels = 2 ** int(rng.integers(1, 4))
        batch = int(rng.integers(1, 4))
        states = rng.integers(levels, size=(batch, n)).astype(float)
        actions = rng.uniform(-np.pi, np.pi, size=(batch, n))

        actor = build_actor(n, levels, rng)
        for p in actor.params:
            p[...] = rng.uniform(-0.5, 0.5, p.shape)
        upstream = rng.normal(size=(batch, n))
        analytic, _ = actor.gradients(states, upstream=upstream)
        if gradient_mismatch(analytic, numeric_gradients(actor, [states], upstream)) > GRADIENT_RTOL:
            _fail("gradients", "gradiente do ator difere das diferenças finitas")

        critic = build_critic(n, levels, rng)
        upstream = rng.normal(size=(batch, 1))
        analytic, _ = critic.gradients(states, actions, upstream=upstream)
        if gradient_mismatch(analytic, numeric_gradients(critic, [states, actions], upstream)) > GRADIENT_RTOL:
            _fail("gradients", "gradiente do crítico difere das diferenças finitas")
    return True


CHECKS: Dict[str, Callable[[np.random.Generator], bool]] = {
    "tiling": lambda rng: check_tiling_partition(),
    "fresnel": lambda rng: check_fresnel_monotone(),
    "oracle": check_oracle_dominance,
    "knn": check_knn_bruteforce,
    "alignment": check_alignment_identities,
    "gradients": check_gradients,
}


def run_checks(seed: int = DEFAULT_EXPERIMENT["seed"], names: Optional[Sequence[str]] = None) -> Dict[str, str]:
    """Executa as verificações; o valor é "ok" ou a mensagem de falha"""
    streams = SeedStreams(seed)
    results: Dict[str, str] = {}
    for index, name in enumerate(names or CHECKS):
        if name not in CHECKS:
            raise ValidationError(f"verificação desconhecida: {name}")
        try:
            CHECKS[name](streams.stream("check", index))
            results[name] = "ok"
            logger.info(f"Verificação '{name}': ok")
        except FocusBaseException as e:
            results[name] = str(e)
    return results
