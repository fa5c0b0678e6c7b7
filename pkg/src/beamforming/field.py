"""
Mapas de potência em planos de referência e raio de foco do feixe (BFR)
"""
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from channel.propagation import ChannelParams, channel_matrix
from channel.room import RoomEnv
from geometry.array_layout import ArrayLayout
from utils.exceptions import BeamformingError
from utils.logger import setup_logger
from .codebook import Weights, as_weights
from .power import SignalModel, batch_received_power

logger = setup_logger(__name__)

FIELD_COLUMNS = ["u_m", "v_m", "x_m", "y_m", "z_m", "power_w", "power_dbm"]
PLANE_TOLERANCE = 1e-6
CHUNK_POINTS = 256


@dataclass(frozen=True)
class PlaneSpec:
    """Plano pelo ponto ``center`` gerado pelos eixos ortonormais u e v"""
    center: np.ndarray
    u_axis: np.ndarray
    v_axis: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u_axis, dtype=float)
        v = np.asarray(self.v_axis, dtype=float)
        if np.linalg.norm(u) == 0 or np.linalg.norm(v) == 0:
            raise BeamformingError("eixos do plano degenerados")
        u = u / np.linalg.norm(u)
        v = v - (v @ u) * u
        if np.linalg.norm(v) < 1e-12:
            raise BeamformingError("eixos do plano degenerados (paralelos)")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "u_axis", u)
        object.__setattr__(self, "v_axis", v / np.linalg.norm(v))

    @classmethod
    def parallel_to_aperture(cls, layout: ArrayLayout, center: Sequence[float]) -> "PlaneSpec":
        return cls(np.asarray(center, dtype=float), layout.u_axis, layout.v_axis)

    @property
    def normal(self) -> np.ndarray:
        return np.cross(self.u_axis, self.v_axis)


@dataclass(frozen=True)
class GridSpec:
    half_extent_u: float
    half_extent_v: float
    n_u: int
    n_v: int

    def __post_init__(self):
        if self.n_u < 1 or self.n_v < 1:
            raise BeamformingError("grade precisa de pelo menos 1 ponto por eixo")
        if self.half_extent_u < 0 or self.half_extent_v < 0:
            raise BeamformingError("extensão da grade não pode ser negativa")
        if (self.n_u > 1 and self.half_extent_u == 0) or (self.n_v > 1 and self.half_extent_v == 0):
            raise BeamformingError("espaçamento da grade deve ser positivo")

    @classmethod
    def square(cls, half_extent: float, points: int) -> "GridSpec":
        return cls(half_extent, half_extent, points, points)

    def coordinates(self):
        u = np.linspace(-self.half_extent_u, self.half_extent_u, self.n_u) if self.n_u > 1 else np.zeros(1)
        v = np.linspace(-self.half_extent_v, self.half_extent_v, self.n_v) if self.n_v > 1 else np.zeros(1)
        return u, v


@dataclass(frozen=True)
class PowerField:
    plane: PlaneSpec
    u: np.ndarray
    v: np.ndarray
    values: np.ndarray  # (n_u, n_v), W

    @property
    def cell_area(self) -> float:
        du = self.u[1] - self.u[0] if self.u.size > 1 else 1.0
        dv = self.v[1] - self.v[0] if self.v.size > 1 else 1.0
        return float(du * dv)

    def points(self) -> np.ndarray:
        """Pontos (n_u * n_v, 3) em ordem linha a linha (u externo, v interno)"""
        uu, vv = np.meshgrid(self.u, self.v, indexing="ij")
        return (
            self.plane.center
            + uu.reshape(-1, 1) * self.plane.u_axis
            + vv.reshape(-1, 1) * self.plane.v_axis
        )

    def to_frame(self) -> pd.DataFrame:
        uu, vv = np.meshgrid(self.u, self.v, indexing="ij")
        points = self.points()
        power = self.values.reshape(-1)
        return pd.DataFrame(
            {
                "u_m": uu.reshape(-1),
                "v_m": vv.reshape(-1),
                "x_m": points[:, 0],
                "y_m": points[:, 1],
                "z_m": points[:, 2],
                "power_w": power,
                "power_dbm": to_dbm(power),
            },
            columns=FIELD_COLUMNS,
        )

    def to_csv(self, path: Union[str, Path]) -> str:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        logger.info(f"Mapa de potência salvo: {path} ({self.values.size} pontos)")
        return str(path)

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "PowerField":
        missing = [c for c in FIELD_COLUMNS[:6] if c not in df.columns]
        if missing:
            raise BeamformingError(f"colunas ausentes no mapa: {missing}")
        u = np.unique(df["u_m"].to_numpy())
        v = np.unique(df["v_m"].to_numpy())
        if len(df) != u.size * v.size:
            raise BeamformingError("mapa não forma uma grade completa")

        ordered = df.sort_values(["u_m", "v_m"])
        xyz = ordered[["x_m", "y_m", "z_m"]].to_numpy()
        values = ordered["power_w"].to_numpy().reshape(u.size, v.size)

        u_axis = _axis_from(xyz, u, v, along_u=True)
        v_axis = _axis_from(xyz, u, v, along_u=False)
        center = xyz[0] - u[0] * u_axis - v[0] * v_axis
        return cls(PlaneSpec(center, u_axis, v_axis), u, v, values)

    @classmethod
    def read_csv(cls, path: Union[str, Path]) -> "PowerField":
        return cls.from_frame(pd.read_csv(path))


def _axis_from(xyz: np.ndarray, u: np.ndarray, v: np.ndarray, along_u: bool) -> np.ndarray:
    n_v = v.size
    if along_u:
        if u.size < 2:
            return np.array([1.0, 0.0, 0.0])
        return (xyz[n_v] - xyz[0]) / (u[1] - u[0])
    if n_v < 2:
        return np.array([0.0, 0.0, 1.0])
    return (xyz[1] - xyz[0]) / (v[1] - v[0])


@dataclass(frozen=True)
class FocusMetrics:
    bfr: float
    eta_frac: float
    peak_power: float
    peak_location: np.ndarray

    def to_dict(self) -> Dict:
        return {
            "bfr_m": float(self.bfr),
            "eta": float(self.eta_frac),
            "peak_w": float(self.peak_power),
            "peak_xyz": [float(c) for c in self.peak_location],
        }

    def to_json(self, path: Union[str, Path]) -> str:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
        return str(path)


def to_dbm(power_w: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 10 * np.log10(np.asarray(power_w, dtype=float) * 1000.0)


def evaluate_points(
    w: Weights,
    points: np.ndarray,
    layout: ArrayLayout,
    room: RoomEnv,
    params: ChannelParams,
    sig: SignalModel,
    workers: int = 1,
) -> np.ndarray:
    """Potência recebida em cada ponto, processada em blocos na ordem de entrada"""
    weights = as_weights(w)
    if weights.size != layout.n_elements:
        raise BeamformingError(f"vetor com {weights.size} elementos para arranjo de {layout.n_elements}")
    chunks: List[np.ndarray] = np.array_split(points, max(1, int(np.ceil(len(points) / CHUNK_POINTS))))

    def run(chunk: np.ndarray) -> np.ndarray:
        return batch_received_power(weights, channel_matrix(chunk, layout, room, params), sig)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(run, chunks))
    else:
        results = [run(chunk) for chunk in chunks]
    return np.concatenate(results)


def power_map(
    w: Weights,
    plane: PlaneSpec,
    grid: GridSpec,
    layout: ArrayLayout,
    room: RoomEnv,
    params: ChannelParams,
    sig: SignalModel,
    workers: int = 1,
) -> PowerField:
    u, v = grid.coordinates()
    empty = PowerField(plane, u, v, np.zeros((u.size, v.size)))
    values = evaluate_points(w, empty.points(), layout, room, params, sig, workers)
    logger.debug(f"Mapa {u.size}x{v.size} calculado, pico {values.max():.4g} W")
    return PowerField(plane, u, v, values.reshape(u.size, v.size))


def power_profile(
    w: Weights,
    start: Sequence[float],
    direction: Sequence[float],
    distances: np.ndarray,
    layout: ArrayLayout,
    room: RoomEnv,
    params: ChannelParams,
    sig: SignalModel,
) -> pd.DataFrame:
    """Potência ao longo de uma reta (potência por distância)"""
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    distances = np.asarray(distances, dtype=float)
    points = np.asarray(start, dtype=float) + distances[:, None] * direction
    power = evaluate_points(w, points, layout, room, params, sig)
    return pd.DataFrame(
        {
            "distance_m": distances,
            "x_m": points[:, 0],
            "y_m": points[:, 1],
            "z_m": points[:, 2],
            "power_w": power,
            "power_dbm": to_dbm(power),
        }
    )


def bfr(field: PowerField, dfp: Sequence[float], eta_frac: float) -> FocusMetrics:
    """
    Menor raio em torno do DFP que contém a fração eta_frac da potência do plano

    As células são ordenadas pela distância ao DFP e as somas acumuladas
    percorridas, o que é exato na grade discreta.
    """
    if not 0 < eta_frac <= 1:
        raise BeamformingError(f"eta_frac deve estar em (0, 1], recebido {eta_frac}")
    dfp = np.asarray(dfp, dtype=float)
    offset = dfp - field.plane.center
    if abs(offset @ field.plane.normal) > PLANE_TOLERANCE:
        raise BeamformingError("DFP não está sobre o plano do mapa")

    points = field.points()
    cell_power = field.values.reshape(-1) * field.cell_area
    total = cell_power.sum()
    if total <= 0:
        raise BeamformingError("potência total nula no plano")

    distances = np.linalg.norm(points - dfp, axis=1)
    order = np.argsort(distances, kind="stable")
    cumulative = np.cumsum(cell_power[order])
    reached = np.nonzero(cumulative >= eta_frac * total * (1 - 1e-12))[0]
    radius = float(distances[order][reached[0]])

    peak = int(np.argmax(field.values))
    return FocusMetrics(
        bfr=radius,
        eta_frac=float(eta_frac),
        peak_power=float(field.values.reshape(-1)[peak]),
        peak_location=points[peak],
    )
