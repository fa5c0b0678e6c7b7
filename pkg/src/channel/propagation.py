"""
Ganho de canal multipercurso entre elementos do arranjo e um ponto 3D
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy.constants import speed_of_light

from geometry.array_layout import ArrayLayout, element_position
from utils.exceptions import ChannelError
from utils.logger import setup_logger
from .room import SURFACES, RoomEnv, check_inside, image_reflection_paths, surface_image_lengths

logger = setup_logger(__name__)

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class ChannelParams:
    wavelength: float
    path_loss_exponent: float = 2.7
    tx_gain: ArrayLike = 1.0
    rx_gain: float = 1.0
    direct_phase_offset: ArrayLike = 0.0
    element_phase_error: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ChannelError("comprimento de onda deve ser positivo")
        if not self.path_loss_exponent > 0:
            raise ChannelError("expoente de perda de percurso deve ser positivo")
        if np.any(np.asarray(self.tx_gain) <= 0) or not self.rx_gain > 0:
            raise ChannelError("ganhos de antena devem ser positivos")

    @classmethod
    def from_frequency(cls, frequency: float, **kwargs) -> "ChannelParams":
        if not frequency > 0:
            raise ChannelError("frequência deve ser positiva")
        return cls(wavelength=speed_of_light / frequency, **kwargs)

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def eta_att(self) -> float:
        """Coeficiente de atenuação, |h| = (λ / 4πd)^(α/2)"""
        return (self.wavelength / (4 * np.pi)) ** (self.path_loss_exponent / 2)

    def element_offsets(self, n_elements: int) -> np.ndarray:
        """Δθ_n0 por elemento, já somado ao erro de fase de hardware"""
        offsets = np.broadcast_to(np.asarray(self.direct_phase_offset, dtype=float), (n_elements,)).copy()
        return offsets + self.hardware_errors(n_elements)

    def hardware_errors(self, n_elements: int) -> np.ndarray:
        if self.element_phase_error is None:
            return np.zeros(n_elements)
        errors = np.asarray(self.element_phase_error, dtype=float)
        if errors.shape != (n_elements,):
            raise ChannelError(f"erro de fase por elemento precisa de {n_elements} valores")
        return errors

    def element_gains(self, n_elements: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.tx_gain, dtype=float), (n_elements,)) * self.rx_gain


@dataclass(frozen=True)
class ChannelVector:
    gains: np.ndarray

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=complex)
        if not np.all(np.isfinite(gains)):
            raise ChannelError("canal contém valores não finitos")
        object.__setattr__(self, "gains", gains)

    def __len__(self) -> int:
        return len(self.gains)

    def subset(self, indices: Sequence[int]) -> "ChannelVector":
        return ChannelVector(self.gains[np.asarray(indices)])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "element": np.arange(len(self.gains)),
                "real": self.gains.real,
                "imag": self.gains.imag,
            }
        )

    def to_csv(self, path: Union[str, Path]) -> str:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        logger.info(f"Canal salvo: {path} ({len(self.gains)} elementos)")
        return str(path)


def path_term(
    lengths: np.ndarray, extra_phase: ArrayLike, amplitude: ArrayLike, params: ChannelParams
) -> np.ndarray:
    return (
        amplitude
        * params.eta_att
        * lengths ** (-params.path_loss_exponent / 2)
        * np.exp(-1j * (params.wavenumber * lengths + extra_phase))
    )


def direct_path_gain(
    r_n: Sequence[float], r_u: Sequence[float], params: ChannelParams, phase_offset: float = None
) -> complex:
    distance = float(np.linalg.norm(np.asarray(r_n, dtype=float) - np.asarray(r_u, dtype=float)))
    if distance == 0:
        raise ChannelError("pontos coincidentes: perda de percurso singular")
    offset = float(np.asarray(params.direct_phase_offset).flat[0]) if phase_offset is None else phase_offset
    return complex(path_term(distance, offset, 1.0, params))


def channel_gain(
    n: int, r_u: Sequence[float], layout: ArrayLayout, room: RoomEnv, params: ChannelParams
) -> complex:
    r_n = element_position(layout, n)
    offsets = params.element_offsets(layout.n_elements)
    hardware = params.hardware_errors(layout.n_elements)[n]
    gain = direct_path_gain(r_n, r_u, params, phase_offset=offsets[n])
    paths = image_reflection_paths(room, r_n, r_u)
    if len(paths):
        gain += complex(np.sum(path_term(paths.lengths, paths.phases + hardware, paths.amplitudes, params)))
    return gain


def channel_matrix(
    points: np.ndarray, layout: ArrayLayout, room: RoomEnv, params: ChannelParams
) -> np.ndarray:
    """
    Ganhos efetivos (P, N) entre todos os elementos e P pontos

    Inclui caminho direto, reflexões de primeira ordem e os ganhos de antena.
    """
    targets = np.atleast_2d(np.asarray(points, dtype=float))
    sources = layout.positions()
    n_elements = layout.n_elements

    distances = np.linalg.norm(targets[:, None, :] - sources[None, :, :], axis=2)
    if np.any(distances == 0):
        raise ChannelError("ponto de avaliação coincide com um elemento do arranjo")

    offsets = params.element_offsets(n_elements)
    gains = path_term(distances, offsets[None, :], 1.0, params)

    if room.enabled:
        check_inside(room, sources, "Elemento")
        check_inside(room, targets, "UE")
        hardware = params.hardware_errors(n_elements)[None, :]
        for surface in range(len(SURFACES)):
            beta = room.surface_reflection[surface]
            if beta == 0:
                continue
            lengths, valid = surface_image_lengths(room, sources, targets, surface)
            term = path_term(lengths, room.surface_phase_shift[surface] + hardware, beta, params)
            gains += np.where(valid, term, 0.0)

    return gains * params.element_gains(n_elements)[None, :]


def effective_channel(
    r_u: Sequence[float], layout: ArrayLayout, room: RoomEnv, params: ChannelParams
) -> ChannelVector:
    return ChannelVector(channel_matrix(np.asarray(r_u, dtype=float), layout, room, params)[0])
