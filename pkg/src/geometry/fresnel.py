"""
Limites da zona de Fresnel e classificação de pontos
"""
from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Sequence

import numpy as np

from utils.exceptions import GeometryError, ZoneError
from utils.logger import setup_logger
from .array_layout import ArrayLayout, aperture_diameter

logger = setup_logger(__name__)

LOWER_FACTOR = 0.62


class Zone(str, Enum):
    NON_RADIATIVE = "non-radiative"
    FRESNEL = "fresnel"
    FAR_FIELD = "far-field"


@dataclass(frozen=True)
class FresnelBounds:
    lower: float
    upper: float
    sub_lower: float

    def __post_init__(self):
        if not (self.lower > 0 and self.upper > 0 and self.sub_lower >= 0):
            raise GeometryError("limites de Fresnel devem ser positivos")
        if self.sub_lower > self.lower:
            raise GeometryError("sub_lower não pode exceder lower")
        if self.lower >= self.upper:
            logger.warning(
                f"Abertura pequena demais para uma zona de Fresnel: lower={self.lower:.4g} m >= upper={self.upper:.4g} m"
            )


def fresnel_lower(diameter: float, wavelength: float) -> float:
    return LOWER_FACTOR * float(np.sqrt(diameter**3 / wavelength))


def fresnel_upper(diameter: float, wavelength: float) -> float:
    return 2.0 * diameter**2 / wavelength


def fresnel_bounds(diameter: float, wavelength: float, sub_diameter: float = None) -> FresnelBounds:
    """
    Limites da zona radiativa de campo próximo

    ``sub_lower`` usa o diâmetro de um único módulo quando informado; caso
    contrário é igual a ``lower``. Módulos de um só elemento têm diâmetro
    nulo e portanto ``sub_lower`` = 0.
    """
    if diameter <= 0 or wavelength <= 0:
        raise GeometryError(f"Diâmetro e comprimento de onda devem ser positivos (D={diameter}, λ={wavelength})")
    lower = fresnel_lower(diameter, wavelength)
    upper = fresnel_upper(diameter, wavelength)
    if sub_diameter is None:
        sub_lower = lower
    else:
        if sub_diameter < 0:
            raise GeometryError("diâmetro do módulo não pode ser negativo")
        sub_lower = min(fresnel_lower(sub_diameter, wavelength), lower)
    return FresnelBounds(lower=lower, upper=upper, sub_lower=sub_lower)


def layout_bounds(layout: ArrayLayout, wavelength: float) -> FresnelBounds:
    """Limites completos do arranjo, incluindo o limite inferior por módulo"""
    return fresnel_bounds(aperture_diameter(layout), wavelength, layout.module_diameter())


def zone_classify(r_u: Sequence[float], layout: ArrayLayout, bounds: FresnelBounds) -> Zone:
    distance = float(np.linalg.norm(layout.aperture_center() - np.asarray(r_u, dtype=float)))
    if distance < bounds.lower:
        return Zone.NON_RADIATIVE
    if distance > bounds.upper:
        return Zone.FAR_FIELD
    return Zone.FRESNEL


def subarray_constraint_ok(
    r_u: Sequence[float], m: int, layout: ArrayLayout, bounds: FresnelBounds
) -> bool:
    distance = float(np.linalg.norm(layout.module_center(m) - np.asarray(r_u, dtype=float)))
    return bounds.sub_lower <= distance <= bounds.upper


def effective_module_set(
    r_u: Sequence[float],
    layout: ArrayLayout,
    wavelength: float,
    allow_near: bool = False,
) -> FrozenSet[int]:
    """
    Módulos ativos para que o UE fique na zona de Fresnel da abertura efetiva

    Com o UE aquém do limite inferior do arranjo completo, desativa módulos
    mantendo o maior bloco quadrado centrado cujo limite inferior ainda é
    atendido. ``allow_near`` aceita UEs abaixo do limite de um único módulo
    (transferência de potência pura) e mantém todos os módulos.
    """
    all_modules = frozenset(range(layout.n_modules))
    bounds = layout_bounds(layout, wavelength)
    distance = float(np.linalg.norm(layout.aperture_center() - np.asarray(r_u, dtype=float)))

    if distance >= bounds.lower:
        return all_modules

    if distance < bounds.sub_lower:
        if allow_near:
            logger.warning(f"UE a {distance:.4g} m abaixo do limite de um módulo; mantendo todos os módulos")
            return all_modules
        raise ZoneError(
            f"UE a {distance:.4g} m está abaixo do limite de Fresnel de um módulo ({bounds.sub_lower:.4g} m)"
        )

    for block in range(min(layout.module_rows, layout.module_cols), 0, -1):
        if fresnel_lower(layout.block_diameter(block), wavelength) <= distance:
            row0 = (layout.module_rows - block) // 2
            col0 = (layout.module_cols - block) // 2
            active = frozenset(
                (row0 + r) * layout.module_cols + col0 + c
                for r in range(block)
                for c in range(block)
            )
            logger.info(f"UE aquém do limite do arranjo: mantendo bloco {block}x{block} de módulos ({len(active)}/{layout.n_modules})")
            return active

    # inalcançável: o bloco 1x1 tem limite sub_lower <= distance
    raise ZoneError("nenhum bloco de módulos atende o limite inferior")
