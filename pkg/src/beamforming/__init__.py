"""Beamforming quantizado, oráculos e mapas de potência"""
from .codebook import BeamVector, PhaseCodebook, as_weights, continuous_weights, quantize_phases
from .field import (
    FocusMetrics,
    GridSpec,
    PlaneSpec,
    PowerField,
    bfr,
    power_map,
    power_profile,
)
from .power import (
    SignalModel,
    conjugate_oracle,
    full_power_objective,
    module_signal,
    quantized_oracle,
    received_power,
    target_power,
)
