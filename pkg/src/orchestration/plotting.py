"""
Figuras PNG dos mapas de potência e das curvas de aprendizado
"""
from pathlib import Path
from typing import Dict, Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from beamforming.field import FocusMetrics, PowerField, to_dbm  # noqa: E402
from utils.logger import setup_logger  # noqa: E402

logger = setup_logger(__name__)


def plot_power_field(
    field: PowerField,
    path: Union[str, Path],
    metrics: Optional[FocusMetrics] = None,
    dfp_uv=(0.0, 0.0),
    title: str = "Mapa de potência no plano focal",
) -> str:
    fig, ax = plt.subplots(figsize=(6, 5))
    extent = [field.u[0], field.u[-1], field.v[0], field.v[-1]]
    image = ax.imshow(to_dbm(field.values).T, origin="lower", extent=extent, cmap="viridis", aspect="equal")
    fig.colorbar(image, ax=ax, label="potência (dBm)")
    if metrics is not None:
        circle = plt.Circle(dfp_uv, metrics.bfr, fill=False, color="white", linestyle="--")
        ax.add_patch(circle)
        ax.set_title(f"{title}\nBFR({metrics.eta_frac:g}) = {metrics.bfr * 100:.1f} cm")
    else:
        ax.set_title(title)
    ax.set_xlabel("u (m)")
    ax.set_ylabel("v (m)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info(f"Figura salva: {path}")
    return str(path)


def plot_learning_curves(
    curves: Dict[str, pd.DataFrame],
    path: Union[str, Path],
    smooth: int = 100,
) -> str:
    """Fração do alvo por passo, uma linha por módulo ou variante"""
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, df in curves.items():
        if df.empty:
            continue
        best = np.maximum.accumulate(df["power_frac_of_target"].to_numpy())
        running = df["power_frac_of_target"].rolling(smooth, min_periods=1).mean()
        line, = ax.plot(df["step"], best, label=f"{label} (melhor)")
        ax.plot(df["step"], running, color=line.get_color(), alpha=0.4)
    ax.set_xlabel("passo")
    ax.set_ylabel("potência / alvo")
    ax.set_ylim(0, 1.05)
    ax.grid(alpha=0.3)
    if 0 < len(curves) <= 10:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info(f"Figura salva: {path}")
    return str(path)
