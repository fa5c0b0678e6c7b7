"""
Potência recebida, sinal por módulo e oráculos com CSI perfeita

Convenção do sinal: x = wᴴ·h·s. O oráculo casado guarda φ_i = arg(h_i), de
forma que o coeficiente conjugado aplica -arg(h_i) e x fica real positivo.
"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from channel.propagation import ChannelParams, ChannelVector, effective_channel
from channel.room import RoomEnv
from geometry.array_layout import ArrayLayout
from geometry.fresnel import FresnelBounds, Zone, layout_bounds, zone_classify
from utils.exceptions import BeamformingError, ZoneError
from utils.logger import setup_logger
from .codebook import BeamVector, PhaseCodebook, Weights, as_weights, quantize_phases

logger = setup_logger(__name__)

ORACLE_CHUNK = 256
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class SignalModel:
    signal_power: float = 1.0
    noise_power: float = 0.0

    def __post_init__(self):
        if not self.signal_power > 0:
            raise BeamformingError("potência do sinal deve ser positiva")
        if self.noise_power < 0:
            raise BeamformingError("potência de ruído não pode ser negativa")


def _checked(w: Weights, h: ChannelVector) -> np.ndarray:
    weights = as_weights(w)
    if weights.shape != h.gains.shape:
        raise BeamformingError(f"tamanhos incompatíveis: w={weights.size}, h={h.gains.size}")
    return weights


def module_signal(w_m: Weights, h_m: ChannelVector, sig: SignalModel) -> complex:
    """Amplitude complexa sem ruído x_m = w_mᴴ·h_m·√P_s"""
    weights = _checked(w_m, h_m)
    return complex(np.vdot(weights, h_m.gains) * np.sqrt(sig.signal_power))


def received_power(w: Weights, h: ChannelVector, sig: SignalModel) -> float:
    """|wᴴh|²·P_s + σ²; sinal e ruído são descorrelacionados"""
    weights = _checked(w, h)
    return float(np.abs(np.vdot(weights, h.gains)) ** 2 * sig.signal_power + sig.noise_power)


def batch_received_power(weights: np.ndarray, gains: np.ndarray, sig: SignalModel) -> np.ndarray:
    """Potência para pares (pontos x elementos) de canais e um único vetor de pesos"""
    amplitude = gains @ np.conj(weights)
    return np.abs(amplitude) ** 2 * sig.signal_power + sig.noise_power


def conjugate_oracle(h: ChannelVector) -> np.ndarray:
    if np.any(h.gains == 0):
        raise BeamformingError("canal com entrada nula: fase indefinida")
    return np.angle(h.gains)


def quantized_oracle(h: ChannelVector, codebook: PhaseCodebook) -> BeamVector:
    """
    Melhor vetor do codebook para o canal h (ótimo exato sobre o reticulado)

    Arredondar cada fase casada para o nível mais próximo só é ótimo a menos
    de uma rotação comum ψ. Avalia ψ = 0 e um ψ dentro de cada intervalo entre
    as fronteiras de decisão dos elementos em [0, 2π/2^r); empates ficam com
    ψ = 0, que é o arredondamento elemento a elemento.
    """
    phases = conjugate_oracle(h)
    step = codebook.step
    boundaries = np.unique(np.mod(phases - step / 2, step))
    following = np.append(boundaries[1:], boundaries[0] + step)
    rotations = np.concatenate([[0.0], np.mod((boundaries + following) / 2, step)])

    values = []
    for start in range(0, rotations.size, ORACLE_CHUNK):
        chunk = rotations[start : start + ORACLE_CHUNK]
        indices = codebook.nearest(phases[None, :] - chunk[:, None])
        values.append(np.abs(np.sum(h.gains[None, :] * np.exp(-1j * codebook.phase_of(indices)), axis=1)))
    values = np.concatenate(values)

    best = int(np.argmax(values))
    if values[0] >= values[best] * (1 - TIE_RTOL):
        return quantize_phases(phases, codebook)
    logger.debug(f"Oráculo quantizado com rotação comum de {rotations[best]:.4g} rad")
    return quantize_phases(phases - rotations[best], codebook)


def target_power(h: ChannelVector, sig: SignalModel) -> float:
    """Potência do oráculo contínuo (normalizador das curvas de aprendizado)"""
    return float(np.sum(np.abs(h.gains)) ** 2 / len(h) * sig.signal_power + sig.noise_power)


def full_power_objective(
    w: Weights,
    r_u: Sequence[float],
    layout: ArrayLayout,
    room: RoomEnv,
    params: ChannelParams,
    sig: SignalModel,
    bounds: FresnelBounds = None,
    wpt_override: bool = False,
) -> float:
    bounds = bounds or layout_bounds(layout, params.wavelength)
    zone = zone_classify(r_u, layout, bounds)
    if zone is not Zone.FRESNEL and not wpt_override:
        logger.error(f"UE na região {zone.value}, fora da zona de Fresnel")
        raise ZoneError(
            f"UE na região {zone.value}: distância fora de [{bounds.lower:.4g}, {bounds.upper:.4g}] m"
        )
    return received_power(w, effective_channel(r_u, layout, room, params), sig)
