"""
Experiment orchestrator.

Runs the (flux j, repetition k) sweep of every configured sensor. It handles:
- Test-flux selection on the common sub-lattice
- A worker pool over independent tasks
- Streaming records to per-sensor CSVs as tasks complete
- Resuming from existing records of the same configuration
- Canonical (j, k, l) ordering of the final files
"""
from concurrent.futures import ProcessPoolExecutor, as_completed
from datetime import datetime
import json
import logging
from pathlib import Path
import time
from typing import Optional

import numpy as np

from ..config import ExperimentSpec, OutputConfig, SweepConfig
from ..errors import ResumeMismatchError
from ..estimation.grids import build_calibration_grid, choose_test_fluxes
from ..estimation.kitaev import PeaConfig, run_task
from ..models.experiment import ExperimentResult
from ..models.sensor import SensorConfig
from .persistence import RecordStore

try:
    from rich.progress import Progress, BarColumn, MofNCompleteColumn, TimeElapsedColumn
    RICH_AVAILABLE = True
except ImportError:
    RICH_AVAILABLE = False

logger = logging.getLogger(__name__)


def _execute(args):
    """Worker entry point; module level so the process pool can pickle it."""
    sensor, config, flux, j, k, seed, grid = args
    return j, k, run_task(sensor, config, flux, j, k, seed, grid)


def records_path(output_dir, label: str) -> Path:
    return Path(output_dir) / f"records_{label}.csv"


class ExperimentOrchestrator:
    """
    Coordinates the Monte Carlo sweep of an experiment and persists its records.
    """

    def __init__(self, spec: ExperimentSpec, output_dir: Optional[str] = None, progress: bool = True):
        """
        Initialize orchestrator.

        Args:
            spec: Resolved experiment specification
            output_dir: Directory for record files (defaults to the spec's output directory)
            progress: Show a rich progress bar when available
        """
        self.spec = spec
        self.output_dir = Path(output_dir or spec.output.directory)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.progress = progress and RICH_AVAILABLE
        self.config = spec.experiment_config()

        self.stats = {
            'tasks_total': 0,
            'tasks_completed': 0,
            'tasks_resumed': 0,
            'sensors': {},
            'errors': [],
        }
        self._load_checkpoint()

    def _checkpoint_file(self) -> Path:
        return self.output_dir / "checkpoint.json"

    def _load_checkpoint(self):
        """Report the state of a previous run, if any."""
        checkpoint_file = self._checkpoint_file()
        if checkpoint_file.exists():
            try:
                with open(checkpoint_file, 'r') as f:
                    data = json.load(f)
                logger.info(
                    "Found checkpoint from %s: %s tasks completed",
                    data.get('timestamp'), data.get('stats', {}).get('tasks_completed'),
                )
            except Exception as e:
                logger.error(f"Error loading checkpoint: {e}")

    def _save_checkpoint(self):
        try:
            data = {'stats': self.stats, 'timestamp': datetime.now().isoformat()}
            with open(self._checkpoint_file(), 'w') as f:
                json.dump(data, f, indent=2)
            logger.info("Checkpoint saved: %d tasks completed", self.stats['tasks_completed'])
        except Exception as e:
            logger.error(f"Error saving checkpoint: {e}")

    def test_fluxes(self) -> np.ndarray:
        return choose_test_fluxes(self.spec.sensors, self.spec.sweep.F, self.spec.sweep.base_points)

    def _open_store(self, sensor: SensorConfig) -> tuple[RecordStore, set]:
        """
        Open the record file of ``sensor``; returns the store and the completed (j, k) tasks.

        Raises:
            ResumeMismatchError: existing records came from another configuration
        """
        store = RecordStore(str(records_path(self.output_dir, sensor.label)), self.config, self.spec.sweep.seed)
        if not store.exists():
            store.reset()
            return store, set()

        stored = store.stored_hash()
        if stored != store.hash:
            raise ResumeMismatchError(
                f"{store.path} was written by configuration {stored}, current is {store.hash}; "
                "choose another output directory"
            )
        frame = store.load()
        max_steps = self.spec.pea.max_steps
        if frame.empty:
            complete = frame
        else:
            counts = frame.groupby(["j", "k"])["l"].transform("count")
            complete = frame[counts == max_steps]
        dropped = len(frame) - len(complete)
        if dropped:
            logger.warning("%s: dropping %d rows of incomplete tasks", sensor.label, dropped)
        store.reset(complete)
        done = set(zip(complete["j"].astype(int), complete["k"].astype(int)))
        if done:
            logger.info("%s: resuming with %d completed tasks", sensor.label, len(done))
        return store, done

    def run_sensor(self, sensor: SensorConfig, fluxes: np.ndarray) -> ExperimentResult:
        """Run every pending (j, k) task of one sensor and return its canonical records."""
        sweep = self.spec.sweep
        pea: PeaConfig = self.spec.pea
        store, done = self._open_store(sensor)
        grid = build_calibration_grid(sensor, sweep.base_points)
        tasks = [
            (sensor, pea, float(fluxes[j]), j, k, sweep.seed, grid)
            for j in range(len(fluxes)) for k in range(sweep.M) if (j, k) not in done
        ]
        self.stats['tasks_total'] += len(fluxes) * sweep.M
        self.stats['tasks_resumed'] += len(done)
        sensor_stats = {'completed': len(done), 'errors': 0}
        self.stats['sensors'][sensor.label] = sensor_stats
        logger.info("=== %s: %d tasks pending ===", sensor.label, len(tasks))

        try:
            for j, k, rows in self._iterate(tasks, sensor.label):
                if rows is None:
                    sensor_stats['errors'] += 1
                    continue
                store.append(rows)
                sensor_stats['completed'] += 1
                self.stats['tasks_completed'] += 1
        finally:
            self._save_checkpoint()

        frame = store.canonicalize()
        return ExperimentResult(frame, sensor.label, self.config)

    def _iterate(self, tasks: list, label: str):
        """Yield (j, k, rows) per task in completion order; rows is None on failure."""
        if not tasks:
            return
        progress = None
        if self.progress:
            progress = Progress(
                "[progress.description]{task.description}", BarColumn(), MofNCompleteColumn(), TimeElapsedColumn()
            )
            progress.start()
            bar = progress.add_task(label, total=len(tasks))
        try:
            for j, k, rows in self._dispatch(tasks, label):
                if progress:
                    progress.advance(bar)
                yield j, k, rows
        finally:
            if progress:
                progress.stop()

    def _dispatch(self, tasks: list, label: str):
        workers = self.spec.output.workers
        if workers == 1:
            for task in tasks:
                try:
                    yield _execute(task)
                except Exception as e:
                    yield self._failed(task, label, e)
            return
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_execute, task): task for task in tasks}
            for future in as_completed(futures):
                try:
                    yield future.result()
                except Exception as e:
                    yield self._failed(futures[future], label, e)

    def _failed(self, task, label: str, error: Exception):
        j, k = task[3], task[4]
        logger.error(f"Task {label} j={j} k={k} failed: {error}")
        self.stats['errors'].append(f"{label}/j={j}/k={k}: {error}")
        return j, k, None

    def run(self) -> dict[str, ExperimentResult]:
        """Run the whole experiment; returns results keyed by sensor label."""
        start_time = time.time()
        logger.info("========== STARTING EXPERIMENT ==========")
        fluxes = self.test_fluxes()
        results = {}
        for sensor in self.spec.sensors:
            results[sensor.label] = self.run_sensor(sensor, fluxes)
        elapsed = time.time() - start_time
        logger.info("========== EXPERIMENT COMPLETE ==========")
        logger.info(f"Time elapsed: {elapsed/60:.1f} minutes")
        logger.info(f"Errors: {len(self.stats['errors'])}")
        return results

    def get_summary(self) -> dict:
        """Get summary statistics."""
        return {
            'sensors': len(self.spec.sensors),
            'test_fluxes': self.spec.sweep.F,
            'repetitions': self.spec.sweep.M,
            'tasks_total': self.stats['tasks_total'],
            'tasks_completed': self.stats['tasks_completed'],
            'tasks_resumed': self.stats['tasks_resumed'],
            'errors': len(self.stats['errors']),
        }


def run_experiment(
    sensor: SensorConfig,
    config: PeaConfig,
    F: int,
    M: int,
    seed: int,
    output_dir: str,
    workers: int = 1,
    base_points: int = 2048,
    progress: bool = False,
) -> ExperimentResult:
    """Sweep one sensor over F test fluxes and M repetitions, persisting to ``output_dir``."""
    spec = ExperimentSpec(
        sensors=(sensor,),
        pea=config,
        sweep=SweepConfig(F=F, M=M, seed=seed, base_points=base_points),
        output=OutputConfig(directory=output_dir, workers=workers),
    )
    orchestrator = ExperimentOrchestrator(spec, progress=progress)
    return orchestrator.run()[sensor.label]
