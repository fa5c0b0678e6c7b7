"""
Geometria do arranjo planar e dos módulos (sub-arranjos)

Ordem global dos elementos: módulo a módulo. O índice global é
``m * N' + l``, com ``l`` o índice linha-a-linha dentro do módulo e os
módulos também numerados linha a linha na grade de módulos. Para M = 1 isso
coincide com a ordem linha-a-linha do arranjo inteiro.

Eixos no plano da abertura: ``u`` percorre as colunas e ``v`` as linhas.
``v`` é a projeção do eixo z no plano (eixo x se a normal for paralela a z) e
``u = normal x v``. Para a normal padrão (0, 1, 0) temos u = x e v = z.
"""
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from utils.exceptions import GeometryError
from utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class ArrayLayout:
    module_rows: int
    module_cols: int
    sub_rows: int
    sub_cols: int
    spacing: float
    origin: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    normal: Tuple[float, float, float] = (0.0, 1.0, 0.0)
    _axes: Tuple[np.ndarray, np.ndarray] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("module_rows", "module_cols", "sub_rows", "sub_cols"):
            if int(getattr(self, name)) < 1:
                raise GeometryError(f"{name} deve ser >= 1")
        if not self.spacing > 0:
            raise GeometryError("spacing deve ser positivo")

        normal = np.asarray(self.normal, dtype=float)
        norm = np.linalg.norm(normal)
        if norm == 0:
            raise GeometryError("normal do plano não pode ser nula")
        normal = normal / norm

        reference = np.array([0.0, 0.0, 1.0])
        if abs(normal @ reference) > 1 - 1e-9:
            reference = np.array([1.0, 0.0, 0.0])
        v_axis = reference - (reference @ normal) * normal
        v_axis /= np.linalg.norm(v_axis)
        u_axis = np.cross(normal, v_axis)

        object.__setattr__(self, "origin", tuple(float(c) for c in self.origin))
        object.__setattr__(self, "normal", tuple(float(c) for c in normal))
        object.__setattr__(self, "_axes", (u_axis, v_axis))

    @classmethod
    def from_shape(
        cls,
        rows: int,
        cols: int,
        module_rows: int,
        module_cols: int,
        spacing: float,
        origin: Sequence[float] = (0.0, 0.0, 0.0),
        normal: Sequence[float] = (0.0, 1.0, 0.0),
    ) -> "ArrayLayout":
        """Constrói o layout a partir do tamanho total, exigindo tiling exato"""
        if module_rows < 1 or module_cols < 1:
            raise GeometryError("grade de módulos deve ter pelo menos 1x1")
        if rows % module_rows or cols % module_cols:
            raise GeometryError(
                f"Arranjo {rows}x{cols} não é dividido exatamente em {module_rows}x{module_cols} módulos"
            )
        return cls(
            module_rows=module_rows,
            module_cols=module_cols,
            sub_rows=rows // module_rows,
            sub_cols=cols // module_cols,
            spacing=spacing,
            origin=tuple(origin),
            normal=tuple(normal),
        )

    @property
    def rows(self) -> int:
        return self.module_rows * self.sub_rows

    @property
    def cols(self) -> int:
        return self.module_cols * self.sub_cols

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols

    @property
    def n_modules(self) -> int:
        return self.module_rows * self.module_cols

    @property
    def module_size(self) -> int:
        return self.sub_rows * self.sub_cols

    @property
    def u_axis(self) -> np.ndarray:
        return self._axes[0].copy()

    @property
    def v_axis(self) -> np.ndarray:
        return self._axes[1].copy()

    @property
    def normal_vector(self) -> np.ndarray:
        return np.asarray(self.normal, dtype=float)

    def grid_indices(self, n: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(linha, coluna) no arranjo completo para índices globais"""
        n = np.asarray(n)
        module, local = np.divmod(n, self.module_size)
        module_row, module_col = np.divmod(module, self.module_cols)
        local_row, local_col = np.divmod(local, self.sub_cols)
        return module_row * self.sub_rows + local_row, module_col * self.sub_cols + local_col

    def positions(self) -> np.ndarray:
        """Posições (N, 3) de todos os elementos na ordem global"""
        row, col = self.grid_indices(np.arange(self.n_elements))
        return (
            np.asarray(self.origin)
            + np.outer(col * self.spacing, self._axes[0])
            + np.outer(row * self.spacing, self._axes[1])
        )

    def aperture_center(self) -> np.ndarray:
        return self.positions().mean(axis=0)

    def module_center(self, m: int) -> np.ndarray:
        return self.positions()[module_slice(self, m)].mean(axis=0)

    def module_diameter(self) -> float:
        return self.spacing * float(np.hypot(self.sub_cols - 1, self.sub_rows - 1))

    def block_diameter(self, block: int) -> float:
        """Diâmetro de um bloco quadrado de ``block`` x ``block`` módulos"""
        return self.spacing * float(
            np.hypot(block * self.sub_cols - 1, block * self.sub_rows - 1)
        )


def element_position(layout: ArrayLayout, n: int) -> np.ndarray:
    if not 0 <= n < layout.n_elements:
        raise GeometryError(f"Índice de elemento fora do intervalo: {n} (N={layout.n_elements})")
    row, col = layout.grid_indices(np.array([n]))
    return (
        np.asarray(layout.origin)
        + col[0] * layout.spacing * layout.u_axis
        + row[0] * layout.spacing * layout.v_axis
    )


def module_slice(layout: ArrayLayout, m: int) -> np.ndarray:
    """Índices globais (contíguos) dos elementos do módulo m"""
    if not 0 <= m < layout.n_modules:
        raise GeometryError(f"Índice de módulo fora do intervalo: {m} (M={layout.n_modules})")
    size = layout.module_size
    return np.arange(m * size, (m + 1) * size)


def aperture_diameter(layout: ArrayLayout) -> float:
    """Diagonal da caixa que envolve os elementos"""
    return layout.spacing * float(np.hypot(layout.cols - 1, layout.rows - 1))
