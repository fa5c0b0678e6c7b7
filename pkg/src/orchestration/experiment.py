"""
Execução ponta a ponta de um experimento e gravação dos artefatos

Modos:
    oracle   oráculo quantizado com CSI perfeita em cada módulo, sem treino
    train    treino distribuído de todos os módulos ativos seguido de fusão
    compare  TD3 e DDPG nos mesmos módulos, com orçamento idêntico
"""
import json
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from beamforming.codebook import BeamVector, Weights
from beamforming.field import FocusMetrics, GridSpec, PlaneSpec, PowerField, bfr, power_map, power_profile
from config.loader import ExperimentConfig, config_hash, dump_config
from config.settings import CODE_VERSION, OUTPUT_LAYOUT
from learning.agent import AgentVariant, TD3Agent, TD3Hyper
from utils.exceptions import ExperimentError
from utils.logger import setup_logger
from utils.seeding import SeedStreams, seed_streams
from .environment import ModuleEnvironment, Scene, build_scene
from .fusion import FusionResult, fuse
from .plotting import plot_learning_curves, plot_power_field
from .trainer import ModuleOutcome, TrainingSchedule, read_curve, train_all

logger = setup_logger(__name__)

MODES = ("oracle", "train", "compare")


@dataclass
class RunManifest:
    config_hash: str
    code_version: str
    seed: int
    mode: str
    started_at: str
    finished_at: str = ""
    wall_time_s: float = 0.0
    status: str = "running"
    files: List[str] = field(default_factory=list)

    def to_json(self, path: Union[str, Path]) -> str:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(asdict(self), f, indent=2, sort_keys=True)
        return str(path)


@dataclass
class ExperimentResult:
    output_dir: Path
    summary: Dict[str, Any]
    manifest: RunManifest
    fusion: Optional[FusionResult] = None
    metrics: Optional[FocusMetrics] = None
    outcomes: Dict[str, Dict[int, ModuleOutcome]] = field(default_factory=dict)


class _Artifacts:
    """Registra os arquivos escritos, relativos ao diretório de saída"""

    def __init__(self, root: Path):
        self.root = root
        self.files: List[str] = []

    def path(self, *parts: str) -> Path:
        target = self.root.joinpath(*parts)
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def directory(self, name: str) -> Path:
        target = self.root / name
        target.mkdir(parents=True, exist_ok=True)
        return target

    def add(self, path: Union[str, Path]) -> None:
        relative = Path(path).relative_to(self.root).as_posix()
        if relative not in self.files:
            self.files.append(relative)

    def write_json(self, data: Dict[str, Any], *parts: str) -> Path:
        target = self.path(*parts)
        with open(target, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2, sort_keys=True)
        self.add(target)
        return target


def schedule_from_config(config: ExperimentConfig) -> TrainingSchedule:
    s = config.schedule
    return TrainingSchedule(
        max_steps=s.max_steps,
        window=s.window,
        threshold=s.threshold,
        parallel=s.parallel,
        workers=s.workers,
        snapshot_steps=s.snapshot_steps,
    )


def hyper_from_config(config: ExperimentConfig) -> TD3Hyper:
    return TD3Hyper(**config.agent.hyper_fields())


def focal_plane(scene: Scene, config: ExperimentConfig) -> Tuple[PlaneSpec, GridSpec]:
    """Plano paralelo à abertura passando pelo DFP"""
    plane = PlaneSpec.parallel_to_aperture(scene.layout, scene.r_u)
    return plane, GridSpec.square(config.map.half_extent, config.map.points)


def map_workers(config: ExperimentConfig) -> int:
    return config.schedule.workers if config.schedule.parallel else 1


def evaluate_focus(
    w: Weights, scene: Scene, config: ExperimentConfig
) -> Tuple[PowerField, FocusMetrics]:
    plane, grid = focal_plane(scene, config)
    field_ = power_map(w, plane, grid, scene.layout, scene.room, scene.params, scene.signal, map_workers(config))
    return field_, bfr(field_, scene.r_u, config.map.eta)


def _placeholders(scene: Scene, chosen: Dict[int, BeamVector]) -> List[BeamVector]:
    size = scene.layout.module_size
    return [
        chosen[m] if m in chosen else BeamVector.zeros(size, scene.codebook.bits, active=False)
        for m in range(scene.layout.n_modules)
    ]


def _build_agents(
    scene: Scene, config: ExperimentConfig, streams: SeedStreams, modules: Sequence[int], variant: str
) -> Dict[int, TD3Agent]:
    hyper = hyper_from_config(config)
    return {
        m: TD3Agent(scene.layout.module_size, scene.codebook, hyper, variant, streams, module=m)
        for m in modules
    }


def _write_focus(
    artifacts: _Artifacts,
    w: Weights,
    scene: Scene,
    config: ExperimentConfig,
    name: str = "focal_plane",
) -> Tuple[PowerField, FocusMetrics]:
    field_, metrics = evaluate_focus(w, scene, config)
    target = artifacts.path(OUTPUT_LAYOUT["maps"], f"{name}.csv")
    field_.to_csv(target)
    artifacts.add(target)
    if config.map.plots:
        png = artifacts.path(OUTPUT_LAYOUT["maps"], f"{name}.png")
        plot_power_field(field_, png, metrics)
        artifacts.add(png)
    return field_, metrics


def _write_profile(artifacts: _Artifacts, w: Weights, scene: Scene, config: ExperimentConfig) -> None:
    distances = np.linspace(config.map.profile_start, config.map.profile_stop, config.map.profile_points)
    start = scene.layout.aperture_center()
    direction = scene.r_u - start
    if np.linalg.norm(direction) == 0:
        direction = scene.layout.normal_vector
    if scene.room.enabled:
        unit = direction / np.linalg.norm(direction)
        distances = distances[scene.room.contains(start + distances[:, None] * unit)]
    profile = power_profile(
        w, start, direction, distances, scene.layout, scene.room, scene.params, scene.signal
    )
    target = artifacts.path(OUTPUT_LAYOUT["maps"], "axial_profile.csv")
    profile.to_csv(target, index=False, float_format="%.17g")
    artifacts.add(target)


def _fusion_summary(
    fusion: FusionResult,
    metrics: FocusMetrics,
    scene: Scene,
    env: ModuleEnvironment,
    outcomes: Optional[Dict[int, ModuleOutcome]] = None,
) -> Dict[str, Any]:
    active = sorted(scene.active)
    target = env.full_target()
    per_module = []
    for m in active:
        entry = {
            "module": m,
            "best_power_w": float(fusion.module_powers[m]),
            "target_w": env.module_target(m),
        }
        entry["power_fraction"] = entry["best_power_w"] / entry["target_w"]
        if outcomes is not None:
            entry["steps"] = outcomes[m].steps
            entry["converged"] = outcomes[m].converged
        per_module.append(entry)

    mean_module = float(np.mean([fusion.module_powers[m] for m in active]))
    return {
        "active_modules": active,
        "per_module": per_module,
        "fused_power_w": fusion.fused_power,
        "target_power_w": target,
        "power_fraction": fusion.fused_power / target,
        "mean_module_power_w": mean_module,
        "gain_ratio": fusion.fused_power / mean_module if mean_module > 0 else float("nan"),
        "reference_module": fusion.reference,
        "bfr_m": metrics.bfr,
        "eta": metrics.eta_frac,
        "peak_w": metrics.peak_power,
        "peak_xyz": [float(c) for c in metrics.peak_location],
    }


def _run_fused(
    artifacts: _Artifacts,
    chosen: Dict[int, BeamVector],
    scene: Scene,
    env: ModuleEnvironment,
    config: ExperimentConfig,
    outcomes: Optional[Dict[int, ModuleOutcome]] = None,
) -> Tuple[FusionResult, FocusMetrics, Dict[str, Any]]:
    fusion = fuse(_placeholders(scene, chosen), env, active=sorted(scene.active), quantized=True)
    _, metrics = _write_focus(artifacts, fusion.full_vector, scene, config)
    _write_profile(artifacts, fusion.full_vector, scene, config)
    artifacts.add(metrics.to_json(artifacts.path(OUTPUT_LAYOUT["metrics"])))
    artifacts.write_json(fusion.full_vector.to_dict(), OUTPUT_LAYOUT["beam_vector"])
    return fusion, metrics, _fusion_summary(fusion, metrics, scene, env, outcomes)


def _run_oracle(artifacts, scene, env, config, streams, result: ExperimentResult) -> Dict[str, Any]:
    chosen = {m: env.module_oracle(m) for m in sorted(scene.active)}
    result.fusion, result.metrics, summary = _run_fused(artifacts, chosen, scene, env, config)
    return summary


def _run_train(artifacts, scene, env, config, streams, result: ExperimentResult) -> Dict[str, Any]:
    schedule = schedule_from_config(config)
    agents = _build_agents(scene, config, streams, sorted(scene.active), config.agent.variant)
    curve_dir = artifacts.directory(OUTPUT_LAYOUT["curves"])
    outcomes = train_all(agents, env, schedule, curve_dir)
    for m in outcomes:
        artifacts.add(curve_dir / f"module_{m}.csv")
    result.outcomes[config.agent.variant] = outcomes

    chosen = {m: o.best_action for m, o in outcomes.items()}
    result.fusion, result.metrics, summary = _run_fused(artifacts, chosen, scene, env, config, outcomes)
    summary["variant"] = config.agent.variant

    snapshots = {}
    for step in schedule.snapshot_steps:
        at_step = {m: o.snapshots[step] for m, o in outcomes.items()}
        fusion = fuse(_placeholders(scene, at_step), env, active=sorted(scene.active))
        _, metrics = _write_focus(artifacts, fusion.full_vector, scene, config, f"focal_plane_step_{step}")
        snapshots[str(step)] = {"fused_power_w": fusion.fused_power, "bfr_m": metrics.bfr}
    if snapshots:
        summary["snapshots"] = snapshots

    if config.map.plots:
        curves = {f"módulo {m}": read_curve(curve_dir / f"module_{m}.csv") for m in outcomes}
        png = artifacts.path(OUTPUT_LAYOUT["curves"], "learning_curves.png")
        plot_learning_curves(curves, png)
        artifacts.add(png)
    return summary


def _run_compare(artifacts, scene, env, config, streams, result: ExperimentResult) -> Dict[str, Any]:
    schedule = schedule_from_config(config)
    modules = [m for m in config.compare.modules if m in scene.active]
    if not modules:
        raise ExperimentError(f"nenhum dos módulos {list(config.compare.modules)} está ativo")
    curve_dir = artifacts.directory(OUTPUT_LAYOUT["curves"])

    frames = []
    variants: Dict[str, Any] = {}
    for variant in (AgentVariant.TD3.value, AgentVariant.DDPG.value):
        agents = _build_agents(scene, config, streams, modules, variant)
        names = {m: f"{variant}_module_{m}.csv" for m in modules}
        outcomes = train_all(agents, env, schedule, curve_dir, names)
        result.outcomes[variant] = outcomes
        for m in modules:
            artifacts.add(curve_dir / names[m])
            df = read_curve(curve_dir / names[m])
            df.insert(0, "module", m)
            df.insert(0, "variant", variant)
            frames.append(df)
        variants[variant] = {
            str(m): {
                "best_power_w": o.best_power,
                "power_fraction": o.power_fraction,
                "steps": o.steps,
                "converged": o.converged,
            }
            for m, o in outcomes.items()
        }

    merged = pd.concat(frames, ignore_index=True)
    target = artifacts.path(OUTPUT_LAYOUT["curves"], "comparison.csv")
    merged.to_csv(target, index=False, float_format="%.17g")
    artifacts.add(target)

    if config.map.plots:
        curves = {
            f"{variant} módulo {m}": group.reset_index(drop=True)
            for (variant, m), group in merged.groupby(["variant", "module"], sort=False)
        }
        png = artifacts.path(OUTPUT_LAYOUT["curves"], "learning_curves.png")
        plot_learning_curves(curves, png)
        artifacts.add(png)
    return {"modules": modules, "variants": variants}


RUNNERS = {"oracle": _run_oracle, "train": _run_train, "compare": _run_compare}


def run_experiment(
    config: ExperimentConfig,
    mode: str = "train",
    output_dir: Optional[Union[str, Path]] = None,
) -> ExperimentResult:
    """
    Monta a cena, executa o modo pedido e grava os artefatos

    summary.json depende apenas da configuração e do seed; horários e tempo
    de execução ficam em manifest.json. Em caso de falha o manifesto é gravado
    com status "failed" e a exceção é propagada.
    """
    if mode not in RUNNERS:
        raise ExperimentError(f"modo desconhecido: {mode} (use {', '.join(MODES)})")
    root = Path(output_dir or config.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    artifacts = _Artifacts(root)

    digest = config_hash(config)
    manifest = RunManifest(
        config_hash=digest,
        code_version=CODE_VERSION,
        seed=config.seed,
        mode=mode,
        started_at=datetime.now(timezone.utc).isoformat(),
    )
    config_path = artifacts.path(OUTPUT_LAYOUT["config"])
    config_path.write_text(dump_config(config), encoding="utf-8")
    artifacts.add(config_path)

    result = ExperimentResult(output_dir=root, summary={}, manifest=manifest)
    started = time.perf_counter()
    logger.info(f"Iniciando experimento '{mode}' (seed {config.seed}) em {root}")
    try:
        streams = seed_streams(config.seed)
        scene = build_scene(config, streams)
        env = ModuleEnvironment(scene)
        channel_path = artifacts.path(OUTPUT_LAYOUT["channel"])
        env.channel.to_csv(channel_path)
        artifacts.add(channel_path)
        details = RUNNERS[mode](artifacts, scene, env, config, streams, result)

        summary = {
            "config_hash": digest,
            "seed": config.seed,
            "mode": mode,
            "n_elements": scene.layout.n_elements,
            "n_modules": scene.layout.n_modules,
            "bits": config.bits,
        }
        summary.update(details)
        result.summary = summary
        artifacts.write_json(summary, OUTPUT_LAYOUT["summary"])
        manifest.status = "completed"
    except Exception as e:
        manifest.status = "failed"
        logger.error(f"Experimento falhou: {e}")
        raise
    finally:
        manifest.finished_at = datetime.now(timezone.utc).isoformat()
        manifest.wall_time_s = time.perf_counter() - started
        manifest.files = sorted(artifacts.files)
        manifest.to_json(artifacts.path(OUTPUT_LAYOUT["manifest"]))
        logger.info(f"Manifesto gravado ({manifest.status}, {manifest.wall_time_s:.1f} s)")
    return result


def load_beam_vector(path: Union[str, Path]) -> BeamVector:
    with open(path, encoding="utf-8") as f:
        return BeamVector.from_dict(json.load(f))


def run_map(
    config: ExperimentConfig,
    vector_path: Optional[Union[str, Path]] = None,
    output_dir: Optional[Union[str, Path]] = None,
) -> FocusMetrics:
    """
    Mapa do plano focal para um vetor salvo (beam_vector.json) ou, sem
    vetor, para o oráculo quantizado fundido
    """
    root = Path(output_dir or config.output_dir)
    artifacts = _Artifacts(root)
    scene = build_scene(config)
    if vector_path is not None:
        w = load_beam_vector(vector_path)
        if len(w) != scene.layout.n_elements:
            raise ExperimentError(f"vetor com {len(w)} elementos para arranjo de {scene.layout.n_elements}")
    else:
        env = ModuleEnvironment(scene)
        chosen = {m: env.module_oracle(m) for m in sorted(scene.active)}
        w = fuse(_placeholders(scene, chosen), env, active=sorted(scene.active)).full_vector
    _, metrics = _write_focus(artifacts, w, scene, config)
    artifacts.add(metrics.to_json(artifacts.path(OUTPUT_LAYOUT["metrics"])))
    return metrics


def map_metrics(
    map_path: Union[str, Path],
    dfp: Optional[Sequence[float]] = None,
    eta_frac: float = 0.8,
) -> FocusMetrics:
    """BFR de um mapa salvo; sem DFP usa o centro do plano"""
    field_ = PowerField.read_csv(map_path)
    return bfr(field_, field_.plane.center if dfp is None else dfp, eta_frac)
