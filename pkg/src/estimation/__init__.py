# Readout model, calibration grids and the Kitaev estimator
from .kitaev import PeaConfig, run_algorithm, run_task
from .readout import ReadoutModel, RngStream

__all__ = [
    'PeaConfig',
    'run_algorithm',
    'run_task',
    'ReadoutModel',
    'RngStream',
]
