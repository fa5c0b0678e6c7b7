"""
Treinamento distribuído dos agentes de cada módulo
"""
from concurrent.futures import ThreadPoolExecutor, as_completed
from contextlib import nullcontext
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from beamforming.codebook import BeamVector
from learning.agent import PowerMeter, TD3Agent
from utils.exceptions import ExperimentError
from utils.logger import setup_logger

logger = setup_logger(__name__)

CURVE_COLUMNS = [
    "step",
    "power_w",
    "power_frac_of_target",
    "reward",
    "loss_q1",
    "loss_q2",
    "sigma_explore",
]
PROGRESS_EVERY = 1000


@dataclass(frozen=True)
class TrainingSchedule:
    max_steps: int
    window: int = 5000
    threshold: float = 0.01
    parallel: bool = True
    workers: int = 4
    snapshot_steps: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.max_steps < 1:
            raise ExperimentError("max_steps deve ser >= 1")
        if not 1 <= self.window < self.max_steps:
            raise ExperimentError("a janela de convergência deve ser menor que max_steps")
        if self.threshold < 0:
            raise ExperimentError("threshold não pode ser negativo")
        object.__setattr__(self, "snapshot_steps", tuple(sorted(set(int(s) for s in self.snapshot_steps))))


@dataclass
class ModuleOutcome:
    module: int
    best_action: BeamVector
    best_power: float
    target: float
    steps: int
    converged: bool
    snapshots: Dict[int, BeamVector] = field(default_factory=dict)

    @property
    def power_fraction(self) -> float:
        return self.best_power / self.target if self.target > 0 else float("nan")


class CurveWriter:
    """CSV de curva de aprendizado, só com acréscimos (legível durante a execução)"""

    def __init__(self, path: Union[str, Path], flush_every: int = PROGRESS_EVERY):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.flush_every = flush_every
        self.rows: List[Dict[str, float]] = []
        pd.DataFrame(columns=CURVE_COLUMNS).to_csv(self.path, index=False)

    def append(self, row: Dict[str, float]) -> None:
        self.rows.append(row)
        if len(self.rows) >= self.flush_every:
            self.flush()

    def flush(self) -> None:
        if not self.rows:
            return
        pd.DataFrame(self.rows, columns=CURVE_COLUMNS).to_csv(
            self.path, mode="a", header=False, index=False, float_format="%.17g"
        )
        self.rows.clear()

    def __enter__(self) -> "CurveWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.flush()


def read_curve(path: Union[str, Path]) -> pd.DataFrame:
    df = pd.read_csv(path)
    missing = [c for c in CURVE_COLUMNS if c not in df.columns]
    if missing:
        raise ExperimentError(f"curva sem colunas {missing}: {path}")
    return df


def train_module(
    agent: TD3Agent,
    meter: PowerMeter,
    schedule: TrainingSchedule,
    target: float,
    writer: Optional[CurveWriter] = None,
) -> ModuleOutcome:
    """
    Executa passos de treino até convergir ou atingir max_steps

    Convergência: a melhor potência até o momento melhorou menos que
    ``threshold`` (relativo) nos últimos ``window`` passos.
    """
    best_history: List[float] = []
    snapshots: Dict[int, BeamVector] = {}
    wanted = set(schedule.snapshot_steps)
    converged = False
    steps = 0

    for n in range(schedule.max_steps):
        report = agent.train_step(meter, n)
        steps = n + 1
        if writer is not None:
            writer.append(report.to_row(target))
        best_history.append(agent.best_power)
        if steps in wanted:
            snapshots[steps] = agent.best_action
        if steps % PROGRESS_EVERY == 0:
            logger.debug(
                f"Módulo {agent.module}, passo {steps}: melhor {agent.best_power / target:.3f} do alvo"
            )
        if steps > schedule.window:
            before = best_history[-schedule.window - 1]
            if agent.best_power - before < schedule.threshold * abs(before):
                converged = True
                break

    for step in wanted - snapshots.keys():
        snapshots[step] = agent.best_action

    if converged:
        logger.info(f"Módulo {agent.module} convergiu em {steps} passos ({agent.best_power / target:.3f} do alvo)")
    else:
        logger.warning(f"Módulo {agent.module} não convergiu em {steps} passos ({agent.best_power / target:.3f} do alvo)")
    return ModuleOutcome(
        module=agent.module,
        best_action=agent.best_action,
        best_power=agent.best_power,
        target=target,
        steps=steps,
        converged=converged,
        snapshots=dict(sorted(snapshots.items())),
    )


def train_all(
    agents: Dict[int, TD3Agent],
    env,
    schedule: TrainingSchedule,
    curve_dir: Optional[Union[str, Path]] = None,
    curve_names: Optional[Dict[int, str]] = None,
) -> Dict[int, ModuleOutcome]:
    """
    Treina todos os módulos ativos, em paralelo ou em sequência

    Os agentes não compartilham estado mutável e o canal é apenas lido, então
    o resultado por módulo independe da ordem e do paralelismo.
    """
    if not agents:
        logger.error("Nenhum módulo ativo para treinar")
        raise ExperimentError("nenhum módulo ativo")
    curve_names = curve_names or {}

    def run(m: int) -> ModuleOutcome:
        path = Path(curve_dir) / curve_names.get(m, f"module_{m}.csv") if curve_dir is not None else None
        with CurveWriter(path) if path is not None else nullcontext() as writer:
            return train_module(agents[m], env.meter(m), schedule, env.module_target(m), writer)

    modules: Sequence[int] = sorted(agents)
    outcomes: Dict[int, ModuleOutcome] = {}
    failed: List[int] = []

    if schedule.parallel and len(modules) > 1:
        logger.info(f"Treinando {len(modules)} módulos em paralelo ({schedule.workers} workers)")
        with ThreadPoolExecutor(max_workers=schedule.workers) as executor:
            future_to_module = {executor.submit(run, m): m for m in modules}
            for future in as_completed(future_to_module):
                m = future_to_module[future]
                try:
                    outcomes[m] = future.result()
                except Exception as e:
                    failed.append(m)
                    logger.error(f"Falha no treino do módulo {m}: {e}")
    else:
        logger.info(f"Treinando {len(modules)} módulo(s) em sequência")
        for m in modules:
            outcomes[m] = run(m)

    if failed:
        raise ExperimentError(f"treino falhou nos módulos {sorted(failed)}")
    return dict(sorted(outcomes.items()))
