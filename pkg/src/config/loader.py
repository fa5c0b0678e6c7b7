"""
Leitura, validação e serialização canônica da configuração do experimento
"""
import copy
import hashlib
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple, Union

import numpy as np
import yaml
from scipy.constants import speed_of_light

from config.settings import DEFAULT_EXPERIMENT
from geometry.array_layout import ArrayLayout
from geometry.fresnel import effective_module_set, layout_bounds, zone_classify, Zone
from utils.exceptions import ConfigParseError, ConfigValidationError, GeometryError, ZoneError
from utils.logger import setup_logger

logger = setup_logger(__name__)

MAX_SEED = 2**64


def _require(condition: bool, field_name: str, message: str) -> None:
    if not condition:
        logger.error(f"Configuração inválida em {field_name}: {message}")
        raise ConfigValidationError(field_name, message)


def _vector(values, field_name: str, length: int = 3) -> Tuple[float, ...]:
    try:
        result = tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise ConfigValidationError(field_name, f"esperada lista de {length} números")
    _require(len(result) == length, field_name, f"esperada lista de {length} números")
    return result


def _per_surface(values, field_name: str) -> Tuple[float, ...]:
    if isinstance(values, (int, float)):
        return (float(values),) * 6
    result = tuple(float(v) for v in values)
    _require(len(result) in (1, 6), field_name, "informe 1 ou 6 valores (um por superfície)")
    return result * 6 if len(result) == 1 else result


@dataclass(frozen=True)
class ArrayConfig:
    rows: int
    cols: int
    module_rows: int
    module_cols: int
    spacing_factor: float
    origin: Tuple[float, float, float]
    normal: Tuple[float, float, float]

    def __post_init__(self):
        for name in ("rows", "cols", "module_rows", "module_cols"):
            _require(int(getattr(self, name)) >= 1, f"array.{name}", "deve ser >= 1")
        _require(self.rows % self.module_rows == 0, "array.module_rows", "rows deve ser múltiplo de module_rows")
        _require(self.cols % self.module_cols == 0, "array.module_cols", "cols deve ser múltiplo de module_cols")
        _require(self.spacing_factor > 0, "array.spacing_factor", "deve ser positivo")
        object.__setattr__(self, "origin", _vector(self.origin, "array.origin"))
        object.__setattr__(self, "normal", _vector(self.normal, "array.normal"))
        _require(any(self.normal), "array.normal", "não pode ser nula")


@dataclass(frozen=True)
class RoomConfig:
    enabled: bool
    dimensions: Tuple[float, float, float]
    reflection: Tuple[float, ...]
    phase_shift: Tuple[float, ...]
    random_phase: bool

    def __post_init__(self):
        object.__setattr__(self, "dimensions", _vector(self.dimensions, "room.dimensions"))
        _require(min(self.dimensions) > 0, "room.dimensions", "dimensões devem ser positivas")
        object.__setattr__(self, "reflection", _per_surface(self.reflection, "room.reflection"))
        _require(all(0 <= b <= 1 for b in self.reflection), "room.reflection", "β deve estar em [0, 1]")
        object.__setattr__(self, "phase_shift", _per_surface(self.phase_shift, "room.phase_shift"))


@dataclass(frozen=True)
class ChannelConfig:
    path_loss_exponent: float
    tx_gain: float
    rx_gain: float
    direct_phase_offset: float
    phase_error_std: float

    def __post_init__(self):
        _require(self.path_loss_exponent > 0, "channel.path_loss_exponent", "deve ser positivo")
        _require(self.tx_gain > 0, "channel.tx_gain", "deve ser positivo")
        _require(self.rx_gain > 0, "channel.rx_gain", "deve ser positivo")
        _require(self.phase_error_std >= 0, "channel.phase_error_std", "não pode ser negativo")


@dataclass(frozen=True)
class SignalConfig:
    signal_power: float
    noise_power: float

    def __post_init__(self):
        _require(self.signal_power > 0, "signal.signal_power", "deve ser positivo")
        _require(self.noise_power >= 0, "signal.noise_power", "não pode ser negativo")


@dataclass(frozen=True)
class UEConfig:
    position: Optional[Tuple[float, float, float]]
    distance: float

    def __post_init__(self):
        if self.position is not None:
            object.__setattr__(self, "position", _vector(self.position, "ue.position"))
        _require(self.distance > 0, "ue.distance", "deve ser positiva")


@dataclass(frozen=True)
class ZoneConfig:
    enforce: bool
    wpt_override: bool


@dataclass(frozen=True)
class AgentConfig:
    variant: str
    gamma: float
    tau: float
    batch_size: int
    buffer_capacity: int
    actor_period: int
    target_period: int
    explore_var: float
    explore_decay: float
    explore_min: float
    target_var: float
    target_decay: float
    knn_k: int
    knn_wrap: bool
    actor_lr: float
    critic_lr: float

    def __post_init__(self):
        _require(self.variant in ("td3", "ddpg"), "agent.variant", "deve ser td3 ou ddpg")
        _require(0 < self.gamma < 1, "agent.gamma", "deve estar em (0, 1)")
        _require(0 < self.tau <= 1, "agent.tau", "deve estar em (0, 1]")
        _require(self.batch_size >= 1, "agent.batch_size", "deve ser >= 1")
        _require(self.buffer_capacity >= self.batch_size, "agent.buffer_capacity", "deve ser >= batch_size")
        _require(self.actor_period >= 1, "agent.actor_period", "deve ser >= 1")
        _require(self.target_period > self.actor_period, "agent.target_period", "deve ser > actor_period")
        for name in ("explore_var", "explore_decay", "explore_min", "target_var", "target_decay"):
            _require(getattr(self, name) >= 0, f"agent.{name}", "não pode ser negativo")
        _require(self.knn_k >= 1, "agent.knn_k", "deve ser >= 1")
        _require(self.actor_lr > 0 and self.critic_lr > 0, "agent.actor_lr", "taxas de aprendizado devem ser positivas")

    def hyper_fields(self) -> Dict[str, Any]:
        values = asdict(self)
        values.pop("variant")
        return values


@dataclass(frozen=True)
class ScheduleConfig:
    max_steps: int
    window: int
    threshold: float
    parallel: bool
    workers: int
    snapshot_steps: Tuple[int, ...]

    def __post_init__(self):
        _require(self.max_steps >= 1, "schedule.max_steps", "deve ser >= 1")
        _require(1 <= self.window < self.max_steps, "schedule.window", "deve estar em [1, max_steps)")
        _require(self.threshold >= 0, "schedule.threshold", "não pode ser negativo")
        _require(self.workers >= 1, "schedule.workers", "deve ser >= 1")
        steps = tuple(int(s) for s in self.snapshot_steps)
        _require(all(1 <= s <= self.max_steps for s in steps), "schedule.snapshot_steps", "passos fora de [1, max_steps]")
        object.__setattr__(self, "snapshot_steps", tuple(sorted(set(steps))))


@dataclass(frozen=True)
class MapConfig:
    half_extent: float
    points: int
    eta: float
    profile_start: float
    profile_stop: float
    profile_points: int
    plots: bool

    def __post_init__(self):
        _require(self.half_extent > 0, "map.half_extent", "deve ser positivo")
        _require(self.points >= 3 and self.points % 2 == 1, "map.points", "deve ser ímpar e >= 3 (DFP no nó central)")
        _require(0 < self.eta <= 1, "map.eta", "deve estar em (0, 1]")
        _require(0 < self.profile_start < self.profile_stop, "map.profile_start", "exige 0 < start < stop")
        _require(self.profile_points >= 2, "map.profile_points", "deve ser >= 2")


@dataclass(frozen=True)
class CompareConfig:
    modules: Tuple[int, ...]

    def __post_init__(self):
        modules = tuple(int(m) for m in self.modules)
        _require(len(modules) >= 1 and min(modules) >= 0, "compare.modules", "informe índices de módulo >= 0")
        object.__setattr__(self, "modules", modules)


SECTIONS = {
    "array": ArrayConfig,
    "room": RoomConfig,
    "channel": ChannelConfig,
    "signal": SignalConfig,
    "ue": UEConfig,
    "zone": ZoneConfig,
    "agent": AgentConfig,
    "schedule": ScheduleConfig,
    "map": MapConfig,
    "compare": CompareConfig,
}


@dataclass(frozen=True)
class ExperimentConfig:
    frequency: float
    seed: int
    output_dir: str
    bits: int
    array: ArrayConfig
    room: RoomConfig
    channel: ChannelConfig
    signal: SignalConfig
    ue: UEConfig
    zone: ZoneConfig
    agent: AgentConfig
    schedule: ScheduleConfig
    map: MapConfig
    compare: CompareConfig

    def __post_init__(self):
        _require(self.frequency > 0, "frequency", "deve ser positiva")
        _require(0 <= self.seed < MAX_SEED, "seed", "deve ser um inteiro de 64 bits sem sinal")
        _require(self.bits >= 1, "bits", "r deve ser >= 1")

    @property
    def wavelength(self) -> float:
        return speed_of_light / self.frequency

    def build_layout(self) -> ArrayLayout:
        a = self.array
        try:
            return ArrayLayout.from_shape(
                a.rows, a.cols, a.module_rows, a.module_cols,
                a.spacing_factor * self.wavelength, a.origin, a.normal,
            )
        except GeometryError as e:
            raise ConfigValidationError("array", str(e)) from e

    def ue_position(self, layout: Optional[ArrayLayout] = None) -> np.ndarray:
        """Posição do UE; sem posição explícita, a distance m do centro da abertura na normal"""
        if self.ue.position is not None:
            return np.asarray(self.ue.position, dtype=float)
        layout = layout or self.build_layout()
        return layout.aperture_center() + self.ue.distance * layout.normal_vector

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for section in SECTIONS:
            for key, value in data[section].items():
                if isinstance(value, tuple):
                    data[section][key] = list(value)
        return data

    def with_updates(self, **overrides: Any) -> "ExperimentConfig":
        """Nova configuração com chaves pontilhadas substituídas (ex.: schedule.max_steps=10)"""
        data = self.to_dict()
        for key, value in overrides.items():
            _set_dotted(data, key, value)
        return config_from_dict(data)


def _merge(defaults: Dict[str, Any], given: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    merged = copy.deepcopy(defaults)
    for key, value in given.items():
        path = f"{prefix}{key}"
        if key not in defaults:
            raise ConfigValidationError(path, "chave desconhecida")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigValidationError(path, "esperada uma seção")
            merged[key] = _merge(defaults[key], value, f"{path}.")
        else:
            merged[key] = value
    return merged


def _set_dotted(data: Dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        if not isinstance(node.get(key), dict):
            raise ConfigValidationError(dotted, "chave desconhecida")
        node = node[key]
    if keys[-1] not in node:
        raise ConfigValidationError(dotted, "chave desconhecida")
    node[keys[-1]] = value


def parse_override(text: str) -> Tuple[str, Any]:
    """``chave.pontilhada=valor``, com o valor interpretado como escalar YAML"""
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ConfigValidationError(text, "override deve ter a forma CHAVE=VALOR")
    try:
        return key.strip(), yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigValidationError(key.strip(), f"valor ilegível: {raw}") from e


def _typed(cls, values: Dict[str, Any], section: str):
    kwargs = {}
    for f in fields(cls):
        value = values[f.name]
        try:
            if f.type is int and not isinstance(value, bool):
                value = int(value)
            elif f.type is float:
                value = float(value)
            elif f.type is bool and not isinstance(value, bool):
                raise ValueError
        except (TypeError, ValueError):
            raise ConfigValidationError(f"{section}{f.name}", f"tipo inválido: {value!r}")
        kwargs[f.name] = value
    return cls(**kwargs)


def config_from_dict(data: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    merged = _merge(DEFAULT_EXPERIMENT, data or {})
    sections = {name: _typed(cls, merged[name], f"{name}.") for name, cls in SECTIONS.items()}
    top = {k: v for k, v in merged.items() if k not in SECTIONS}
    base = _typed(_TopLevel, top, "")
    return ExperimentConfig(**asdict(base), **sections)


@dataclass(frozen=True)
class _TopLevel:
    frequency: float
    seed: int
    output_dir: str
    bits: int


def check_zone(config: ExperimentConfig) -> None:
    """Verificação de zona feita na carga: UE dentro da sala e na zona de Fresnel (ou aquém dela, com módulos desativados)"""
    layout = config.build_layout()
    r_u = config.ue_position(layout)
    if config.room.enabled:
        dims = np.asarray(config.room.dimensions)
        inside = np.all((r_u >= 0) & (r_u <= dims))
        _require(bool(inside), "ue.position", "UE fora da sala")
        corners = layout.positions()
        _require(bool(np.all((corners >= -1e-9) & (corners <= dims + 1e-9))), "array.origin", "arranjo fora da sala")
    if not config.zone.enforce:
        return
    # abaixo do limite completo, módulos são desativados (ou erro abaixo do limite de um módulo)
    effective_module_set(r_u, layout, config.wavelength, allow_near=config.zone.wpt_override)
    zone = zone_classify(r_u, layout, layout_bounds(layout, config.wavelength))
    if zone is Zone.FAR_FIELD and not config.zone.wpt_override:
        logger.error("UE além do limite superior da zona de Fresnel")
        raise ZoneError(f"UE na região {zone.value}: fora da zona de Fresnel do arranjo")


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Iterable[str] = (),
) -> ExperimentConfig:
    """
    Carrega um arquivo YAML (ou JSON), aplica os padrões e os overrides

    Args:
        path: Arquivo de configuração; None usa apenas os padrões
        overrides: Itens ``chave.pontilhada=valor``

    Returns:
        Configuração validada
    """
    data: Dict[str, Any] = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            line, column = (mark.line + 1, mark.column + 1) if mark else (0, 0)
            logger.error(f"Erro de sintaxe em {path}: linha {line}, coluna {column}")
            raise ConfigParseError(f"YAML inválido em {path}", line, column) from e
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigParseError(f"{path} deve conter um mapeamento de chaves", 1, 1)
        data = loaded

    data = _merge(DEFAULT_EXPERIMENT, data)
    for item in overrides:
        key, value = parse_override(item)
        _set_dotted(data, key, value)

    config = config_from_dict(data)
    check_zone(config)
    logger.info(f"Configuração carregada (hash {config_hash(config)[:12]})")
    return config


def dump_config(config: ExperimentConfig) -> str:
    """JSON canônico: chaves ordenadas, sem espaços"""
    return json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(dump_config(config).encode("utf-8")).hexdigest()
