"""
Codebook de fases quantizadas e vetores de beamforming
"""
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Union

import numpy as np

from utils.exceptions import BeamformingError

TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PhaseCodebook:
    bits: int

    def __post_init__(self):
        if int(self.bits) < 1:
            raise BeamformingError("r deve ser >= 1")

    @property
    def size(self) -> int:
        return 2 ** int(self.bits)

    @property
    def step(self) -> float:
        return 2 * np.pi / self.size

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.size) * self.step

    def nearest(self, phases: np.ndarray) -> np.ndarray:
        """Nível mais próximo no círculo; empates vão para o índice menor"""
        phases = np.asarray(phases, dtype=float)
        if not np.all(np.isfinite(phases)):
            raise BeamformingError("fases não finitas")
        position = np.mod(phases, 2 * np.pi) / self.step
        lower = np.floor(position)
        frac = position - lower
        index = np.where(frac > 0.5 + TIE_TOLERANCE, lower + 1, lower)
        return np.mod(index.astype(np.int64), self.size)

    def phase_of(self, indices: np.ndarray) -> np.ndarray:
        return np.asarray(indices) * self.step

    def action_phase(self, indices: np.ndarray) -> np.ndarray:
        """Fase do índice representada em [-π, π), domínio das ações do ator"""
        phase = self.phase_of(indices)
        return np.where(phase >= np.pi, phase - 2 * np.pi, phase)


@dataclass(frozen=True)
class BeamVector:
    indices: np.ndarray
    bits: int
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        indices = np.array(self.indices, dtype=np.int64).reshape(-1)
        size = 2 ** int(self.bits)
        if indices.size and (indices.min() < 0 or indices.max() >= size):
            raise BeamformingError(f"índices fora do codebook de {size} níveis")
        mask = np.ones(indices.size, dtype=bool) if self.mask is None else np.array(self.mask, dtype=bool).reshape(-1)
        if mask.shape != indices.shape:
            raise BeamformingError("máscara e índices com tamanhos diferentes")
        indices.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "mask", mask)

    def __len__(self) -> int:
        return int(self.indices.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BeamVector):
            return NotImplemented
        return (
            self.bits == other.bits
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.mask, other.mask)
        )

    def __hash__(self) -> int:
        return hash((self.bits, self.indices.tobytes(), self.mask.tobytes()))

    @property
    def codebook(self) -> PhaseCodebook:
        return PhaseCodebook(self.bits)

    @property
    def phases(self) -> np.ndarray:
        return self.codebook.phase_of(self.indices)

    def coefficients(self) -> np.ndarray:
        """w_i = (1/√N)·exp(jφ_i); elementos inativos têm amplitude zero"""
        return np.exp(1j * self.phases) * self.mask / np.sqrt(len(self))

    def with_indices(self, indices: np.ndarray) -> "BeamVector":
        return BeamVector(indices, self.bits, self.mask)

    @classmethod
    def zeros(cls, length: int, bits: int, active: bool = True) -> "BeamVector":
        return cls(np.zeros(length, dtype=np.int64), bits, np.full(length, active))

    @classmethod
    def concatenate(cls, parts: Iterable["BeamVector"]) -> "BeamVector":
        parts = list(parts)
        if not parts:
            raise BeamformingError("nada para concatenar")
        bits = {p.bits for p in parts}
        if len(bits) != 1:
            raise BeamformingError(f"vetores com resoluções diferentes: {sorted(bits)}")
        return cls(
            np.concatenate([p.indices for p in parts]),
            parts[0].bits,
            np.concatenate([p.mask for p in parts]),
        )

    def to_dict(self) -> Dict:
        return {
            "bits": int(self.bits),
            "indices": [int(i) for i in self.indices],
            "mask": [bool(m) for m in self.mask],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "BeamVector":
        return cls(np.asarray(data["indices"]), int(data["bits"]), data.get("mask"))


Weights = Union[BeamVector, np.ndarray]


def quantize_phases(phases: Sequence[float], codebook: PhaseCodebook) -> BeamVector:
    return BeamVector(codebook.nearest(np.asarray(phases, dtype=float)), codebook.bits)


def continuous_weights(phases: Sequence[float]) -> np.ndarray:
    phases = np.asarray(phases, dtype=float)
    return np.exp(1j * phases) / np.sqrt(phases.size)


def as_weights(w: Weights) -> np.ndarray:
    """Coeficientes complexos normalizados de um BeamVector ou de um vetor contínuo"""
    if isinstance(w, BeamVector):
        return w.coefficients()
    return np.asarray(w, dtype=complex)
