"""
Cena simulada: geometria, canal e medição de potência por módulo
"""
from dataclasses import dataclass
from typing import Callable, FrozenSet, List, Optional, Sequence

import numpy as np

from beamforming.codebook import BeamVector, PhaseCodebook, Weights
from beamforming.power import (
    SignalModel,
    module_signal,
    quantized_oracle,
    received_power,
    target_power,
)
from channel.propagation import ChannelParams, ChannelVector, effective_channel
from channel.room import RoomEnv
from config.loader import ExperimentConfig
from geometry.array_layout import ArrayLayout, module_slice
from geometry.fresnel import FresnelBounds, effective_module_set, layout_bounds, subarray_constraint_ok
from utils.exceptions import ExperimentError
from utils.logger import setup_logger
from utils.seeding import SeedStreams

logger = setup_logger(__name__)


@dataclass(frozen=True)
class Scene:
    layout: ArrayLayout
    room: RoomEnv
    params: ChannelParams
    signal: SignalModel
    r_u: np.ndarray
    codebook: PhaseCodebook
    active: FrozenSet[int]
    enforce_zone: bool = True

    @property
    def bounds(self) -> FresnelBounds:
        return layout_bounds(self.layout, self.params.wavelength)


def build_scene(config: ExperimentConfig, streams: Optional[SeedStreams] = None) -> Scene:
    streams = streams or SeedStreams(config.seed)
    layout = config.build_layout()

    room = RoomEnv(
        dimensions=config.room.dimensions,
        surface_reflection=config.room.reflection,
        surface_phase_shift=config.room.phase_shift,
        enabled=config.room.enabled,
    )
    if config.room.random_phase:
        room = room.with_random_phases(streams.stream("room"))

    phase_error = None
    if config.channel.phase_error_std > 0:
        phase_error = streams.stream("hardware").normal(0.0, config.channel.phase_error_std, layout.n_elements)
    params = ChannelParams.from_frequency(
        config.frequency,
        path_loss_exponent=config.channel.path_loss_exponent,
        tx_gain=config.channel.tx_gain,
        rx_gain=config.channel.rx_gain,
        direct_phase_offset=config.channel.direct_phase_offset,
        element_phase_error=phase_error,
    )

    r_u = config.ue_position(layout)
    if config.zone.enforce:
        active = effective_module_set(r_u, layout, params.wavelength, allow_near=config.zone.wpt_override)
    else:
        active = frozenset(range(layout.n_modules))

    logger.info(
        f"Cena: {layout.rows}x{layout.cols} elementos, {len(active)}/{layout.n_modules} módulos ativos, "
        f"UE em {np.round(r_u, 4).tolist()}"
    )
    return Scene(
        layout=layout,
        room=room,
        params=params,
        signal=SignalModel(config.signal.signal_power, config.signal.noise_power),
        r_u=r_u,
        codebook=PhaseCodebook(config.bits),
        active=active,
        enforce_zone=config.zone.enforce,
    )


class ModuleEnvironment:
    """
    Canal efetivo fixo do UE dividido por módulo

    Cada módulo mede sua própria potência com normalização 1/√N' e apenas
    lê o canal compartilhado, então módulos diferentes podem ser avaliados
    em threads diferentes.
    """

    def __init__(self, scene: Scene):
        self.scene = scene
        self.channel: ChannelVector = effective_channel(scene.r_u, scene.layout, scene.room, scene.params)
        self.module_channels: List[ChannelVector] = [
            self.channel.subset(module_slice(scene.layout, m)) for m in range(scene.layout.n_modules)
        ]
        if scene.enforce_zone:
            self._warn_subarrays()

    def _warn_subarrays(self) -> None:
        bounds = self.scene.bounds
        for m in sorted(self.scene.active):
            if not subarray_constraint_ok(self.scene.r_u, m, self.scene.layout, bounds):
                logger.warning(f"Módulo {m}: UE fora da zona de Fresnel do módulo")

    @property
    def n_modules(self) -> int:
        return self.scene.layout.n_modules

    @property
    def module_size(self) -> int:
        return self.scene.layout.module_size

    def measure(self, m: int, w_m: Weights) -> float:
        return received_power(w_m, self.module_channels[m], self.scene.signal)

    def meter(self, m: int) -> Callable[[BeamVector], float]:
        if m not in self.scene.active:
            raise ExperimentError(f"módulo {m} está desativado")
        return lambda w_m: self.measure(m, w_m)

    def signal(self, m: int, w_m: Weights) -> complex:
        return module_signal(w_m, self.module_channels[m], self.scene.signal)

    def signals(self, vectors: Sequence[Weights]) -> np.ndarray:
        return np.array([self.signal(m, w) for m, w in enumerate(vectors)], dtype=complex)

    def module_target(self, m: int) -> float:
        return target_power(self.module_channels[m], self.scene.signal)

    def module_oracle(self, m: int) -> BeamVector:
        return quantized_oracle(self.module_channels[m], self.scene.codebook)

    def full_power(self, w: Weights) -> float:
        return received_power(w, self.channel, self.scene.signal)

    def full_target(self) -> float:
        return target_power(self.channel, self.scene.signal)
