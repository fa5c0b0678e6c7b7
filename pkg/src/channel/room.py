"""
Sala retangular e caminhos de reflexão de primeira ordem (método das imagens)
"""
from dataclasses import dataclass, field, replace
from typing import Sequence, Tuple

import numpy as np

from utils.exceptions import ChannelError
from utils.logger import setup_logger

logger = setup_logger(__name__)

# (eixo, lado) de cada superfície; lado 0 -> plano coordenada 0, lado 1 -> plano na dimensão
SURFACES: Tuple[Tuple[str, int, int], ...] = (
    ("x_min", 0, 0),
    ("x_max", 0, 1),
    ("y_min", 1, 0),
    ("y_max", 1, 1),
    ("floor", 2, 0),
    ("ceiling", 2, 1),
)

TOLERANCE = 1e-9


@dataclass(frozen=True)
class RoomEnv:
    dimensions: Tuple[float, float, float] = (4.0, 4.0, 3.0)
    surface_reflection: Tuple[float, ...] = (0.1,) * 6
    surface_phase_shift: Tuple[float, ...] = (0.0,) * 6
    enabled: bool = True

    def __post_init__(self):
        dims = tuple(float(d) for d in self.dimensions)
        if len(dims) != 3 or min(dims) <= 0:
            raise ChannelError(f"Dimensões da sala inválidas: {self.dimensions}")
        reflection = _per_surface(self.surface_reflection, "surface_reflection")
        if min(reflection) < 0 or max(reflection) > 1:
            raise ChannelError("coeficientes de reflexão devem estar em [0, 1]")
        phase = _per_surface(self.surface_phase_shift, "surface_phase_shift")
        object.__setattr__(self, "dimensions", dims)
        object.__setattr__(self, "surface_reflection", reflection)
        object.__setattr__(self, "surface_phase_shift", phase)

    def with_random_phases(self, rng: np.random.Generator) -> "RoomEnv":
        """Cópia com deslocamentos de fase uniformes em [0, 2π) por superfície"""
        phases = tuple(float(p) for p in rng.uniform(0.0, 2 * np.pi, size=len(SURFACES)))
        return replace(self, surface_phase_shift=phases)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Máscara de pontos dentro da caixa fechada"""
        points = np.atleast_2d(points)
        dims = np.asarray(self.dimensions)
        return np.all((points >= -TOLERANCE) & (points <= dims + TOLERANCE), axis=1)


@dataclass(frozen=True)
class PathSet:
    lengths: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray
    surfaces: Tuple[str, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.lengths)


def free_space() -> RoomEnv:
    return RoomEnv(enabled=False)


def _per_surface(values, name: str) -> Tuple[float, ...]:
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if values.size == 1:
        values = np.repeat(values, len(SURFACES))
    if values.size != len(SURFACES):
        raise ChannelError(f"{name} precisa de 1 ou {len(SURFACES)} valores")
    return tuple(float(v) for v in values)


def check_inside(room: RoomEnv, points: np.ndarray, label: str) -> None:
    inside = room.contains(points)
    if not inside.all():
        bad = np.atleast_2d(points)[~inside][0]
        logger.error(f"{label} fora da sala: {bad}")
        raise ChannelError(f"{label} fora da sala {room.dimensions}: {tuple(bad)}")


def surface_image_lengths(
    room: RoomEnv, sources: np.ndarray, targets: np.ndarray, surface: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Comprimentos (P, N) dos caminhos refletidos numa superfície

    Retorna também a máscara de caminhos válidos: a fonte ou o alvo sobre a
    própria superfície não geram imagem, e o ponto de reflexão precisa cair
    dentro do retângulo finito da parede.
    """
    _, axis, side = SURFACES[surface]
    plane = room.dimensions[axis] * side

    images = sources.copy()
    images[:, axis] = 2 * plane - sources[:, axis]

    delta = targets[:, None, :] - images[None, :, :]
    lengths = np.linalg.norm(delta, axis=2)

    source_gap = np.abs(sources[:, axis] - plane)
    target_gap = np.abs(targets[:, axis] - plane)
    valid = (source_gap[None, :] > TOLERANCE) & (target_gap[:, None] > TOLERANCE)

    # ponto onde o segmento imagem -> alvo cruza o plano da parede
    denominator = np.where(valid, delta[:, :, axis], 1.0)
    fraction = (plane - images[None, :, axis]) / denominator
    hit = images[None, :, :] + fraction[:, :, None] * delta
    dims = np.asarray(room.dimensions)
    for other in range(3):
        if other == axis:
            continue
        valid &= (hit[:, :, other] >= -TOLERANCE) & (hit[:, :, other] <= dims[other] + TOLERANCE)

    return lengths, valid


def image_reflection_paths(room: RoomEnv, r_n: Sequence[float], r_u: Sequence[float]) -> PathSet:
    if not room.enabled:
        empty = np.zeros(0)
        return PathSet(lengths=empty, amplitudes=empty.copy(), phases=empty.copy())

    source = np.asarray(r_n, dtype=float).reshape(1, 3)
    target = np.asarray(r_u, dtype=float).reshape(1, 3)
    check_inside(room, source, "Elemento")
    check_inside(room, target, "UE")

    lengths, amplitudes, phases, names = [], [], [], []
    for surface, (name, _, _) in enumerate(SURFACES):
        length, valid = surface_image_lengths(room, source, target, surface)
        if valid[0, 0]:
            lengths.append(length[0, 0])
            amplitudes.append(room.surface_reflection[surface])
            phases.append(room.surface_phase_shift[surface])
            names.append(name)

    return PathSet(
        lengths=np.asarray(lengths, dtype=float),
        amplitudes=np.asarray(amplitudes, dtype=float),
        phases=np.asarray(phases, dtype=float),
        surfaces=tuple(names),
    )
