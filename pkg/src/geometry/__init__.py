"""Geometria do arranjo e zona de Fresnel"""
from .array_layout import ArrayLayout, aperture_diameter, element_position, module_slice
from .fresnel import (
    FresnelBounds,
    Zone,
    effective_module_set,
    fresnel_bounds,
    layout_bounds,
    subarray_constraint_ok,
    zone_classify,
)
