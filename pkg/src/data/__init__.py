# Data module for Flux Sense
from .presets import available_presets, load_preset_data

__all__ = [
    'available_presets',
    'load_preset_data',
]
