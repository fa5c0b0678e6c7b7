"""Treino distribuído, fusão de fase e execução de experimentos"""
from .environment import ModuleEnvironment, Scene, build_scene
from .fusion import FusionResult, align_phases_continuous, align_phases_quantized, fuse
from .trainer import ModuleOutcome, TrainingSchedule, train_all
