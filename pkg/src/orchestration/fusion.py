"""
Fusão de fase entre módulos e concatenação no vetor do arranjo completo

Com x = wᴴh, girar os pesos de um módulo por e^{-jδ} gira o sinal do módulo
por e^{+jδ}. O deslocamento δ_m = ∠x_ref − ∠x_m leva todos os sinais à fase do
módulo de referência (o ativo de menor índice).
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from beamforming.codebook import BeamVector, PhaseCodebook, Weights, as_weights
from utils.exceptions import AlignmentError
from utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass
class FusionResult:
    module_vectors: List[Weights]
    aligned_vectors: List[Weights]
    signals: np.ndarray
    full_vector: Weights
    fused_power: float
    module_powers: np.ndarray
    reference: int
    offsets: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_modules(self) -> int:
        return len(self.module_vectors)

    def to_dict(self) -> Dict:
        return {
            "reference": self.reference,
            "fused_power_w": float(self.fused_power),
            "module_powers_w": [float(p) for p in self.module_powers],
            "signal_phases_rad": [float(p) for p in np.angle(self.signals)],
            "offsets_rad": [float(o) for o in self.offsets],
        }


def reference_module(x: np.ndarray, active: Optional[Sequence[int]] = None) -> int:
    """Menor índice ativo; sem lista de ativos, o primeiro sinal não nulo"""
    x = np.asarray(x, dtype=complex)
    candidates = sorted(active) if active is not None else [m for m in range(x.size) if x[m] != 0]
    if not candidates:
        raise AlignmentError("nenhum módulo ativo para servir de referência")
    return candidates[0]


def alignment_offsets(x: np.ndarray, reference: int = 0) -> np.ndarray:
    """δ_m = ∠x_ref − ∠x_m; zero para módulos sem sinal"""
    x = np.asarray(x, dtype=complex)
    if x[reference] == 0:
        logger.error(f"Sinal de referência nulo no módulo {reference}")
        raise AlignmentError(f"sinal de referência nulo (módulo {reference})")
    offsets = np.angle(x[reference]) - np.angle(x)
    offsets[x == 0] = 0.0
    offsets[reference] = 0.0
    return offsets


def align_phases_continuous(
    x: np.ndarray, vectors: Sequence[np.ndarray], reference: int = 0
) -> List[np.ndarray]:
    if len(vectors) != len(x):
        raise AlignmentError(f"{len(x)} sinais para {len(vectors)} vetores")
    offsets = alignment_offsets(x, reference)
    return [as_weights(w) * np.exp(-1j * delta) for w, delta in zip(vectors, offsets)]


def align_phases_quantized(
    x: np.ndarray,
    vectors: Sequence[BeamVector],
    codebook: PhaseCodebook,
    reference: int = 0,
) -> List[BeamVector]:
    """
    Desloca os índices de cada módulo pelo nível do codebook mais próximo de δ_m

    O deslocamento é modular (mod 2^r): girar todas as fases do módulo por um
    nível do codebook é sempre realizável.
    """
    if len(vectors) != len(x):
        raise AlignmentError(f"{len(x)} sinais para {len(vectors)} vetores")
    offsets = alignment_offsets(x, reference)
    levels = codebook.nearest(offsets)
    aligned = []
    for w, level in zip(vectors, levels):
        aligned.append(w.with_indices(np.mod(w.indices - level, codebook.size)))
    return aligned


def concatenate(vectors: Sequence[Weights]) -> Weights:
    """
    Vetor do arranjo completo em ordem de módulo

    BeamVectors concatenam índices (normalização 1/√N aplicada nos
    coeficientes); vetores contínuos com normalização 1/√N' por módulo são
    reescalados para 1/√N.
    """
    if not vectors:
        raise AlignmentError("nenhum vetor para concatenar")
    if all(isinstance(v, BeamVector) for v in vectors):
        return BeamVector.concatenate(vectors)
    parts = [as_weights(v) for v in vectors]
    sizes = {p.size for p in parts}
    if len(sizes) != 1:
        raise AlignmentError(f"módulos com tamanhos diferentes: {sorted(sizes)}")
    return np.concatenate(parts) / np.sqrt(len(parts))


def fuse(
    module_vectors: Sequence[Weights],
    env,
    active: Optional[Sequence[int]] = None,
    quantized: bool = True,
) -> FusionResult:
    """
    Alinha, concatena e avalia o vetor completo

    ``env`` fornece ``signals``, ``measure`` e ``full_power``
    (ver orchestration.environment.ModuleEnvironment). Módulos inativos devem
    vir como vetores de amplitude zero.
    """
    module_vectors = list(module_vectors)
    if len(module_vectors) != env.n_modules:
        raise AlignmentError(f"esperados {env.n_modules} vetores de módulo, recebidos {len(module_vectors)}")
    active = sorted(active) if active is not None else list(range(len(module_vectors)))

    x = env.signals(module_vectors)
    reference = reference_module(x, active)
    offsets = alignment_offsets(x, reference)
    if quantized:
        aligned = align_phases_quantized(x, module_vectors, env.scene.codebook, reference)
    else:
        aligned = align_phases_continuous(x, module_vectors, reference)

    full = concatenate(aligned)
    fused_power = env.full_power(full)
    module_powers = np.array([env.measure(m, w) for m, w in enumerate(module_vectors)])
    logger.info(
        f"Fusão de {len(active)} módulos (referência {reference}): "
        f"potência {fused_power:.4g} W, melhor módulo {module_powers.max():.4g} W"
    )
    return FusionResult(
        module_vectors=module_vectors,
        aligned_vectors=aligned,
        signals=x,
        full_vector=full,
        fused_power=fused_power,
        module_powers=module_powers,
        reference=reference,
        offsets=offsets,
    )
