# Sensor description, closed-form physics and step records
from .sensor import FluxGrid, LinearDetuning, SensorConfig, TransmonDetuning
from .experiment import ExperimentResult

__all__ = [
    'FluxGrid',
    'LinearDetuning',
    'SensorConfig',
    'TransmonDetuning',
    'ExperimentResult',
]
