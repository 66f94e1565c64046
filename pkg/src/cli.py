#!/usr/bin/env python3
"""
Flux Sense CLI
Simulate flux sensing with single and entangled qubits under the Kitaev
phase-estimation protocol.
"""
import click
import logging
import sys
from pathlib import Path

import numpy as np

# Rich for pretty terminal output
try:
    from rich.console import Console
    from rich.table import Table
    from rich.panel import Panel
    RICH_AVAILABLE = True
except ImportError:
    RICH_AVAILABLE = False

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from src import __version__
from src.config import ExperimentSpec, load_spec
from src.errors import ConfigError, FluxSenseError

console = Console() if RICH_AVAILABLE else None

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_VERIFICATION = 3

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def say(message: str, plain: str = None):
    """Print through rich when available, else as plain text."""
    if console:
        console.print(message)
    else:
        print(plain if plain is not None else message)


def fail(error: Exception):
    """Report ``error`` and exit with the matching code."""
    if isinstance(error, ConfigError):
        code = EXIT_VALIDATION
    else:
        code = EXIT_RUNTIME
    say(f"[red]Error:[/red] {error}", f"Error: {error}")
    if not isinstance(error, FluxSenseError):
        logging.getLogger(__name__).exception("unexpected failure")
    sys.exit(code)


def setup_logging(ctx, default_level: int):
    level = logging.DEBUG if ctx.obj.get('verbose') else default_level
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


_EXPERIMENT_OPTIONS = [
    click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
                 help='Experiment JSON file'),
    click.option('--preset', default=None, help='Shipped preset (paper-fig4, desk, qec, custom, fig2b)'),
    click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), default=None, help='Root seed'),
    click.option('--workers', type=click.IntRange(min=1), default=None, help='Worker processes'),
    click.option('--out', default=None, help='Output directory'),
]


def experiment_options(command):
    """--config, --preset, --seed, --workers and --out, shared by the run commands."""
    for option in reversed(_EXPERIMENT_OPTIONS):
        command = option(command)
    return command


def resolve_spec(config_path, preset, seed, workers, out) -> ExperimentSpec:
    return load_spec(config_path, preset=preset, seed=seed, workers=workers, out=out)


@click.group()
@click.version_option(__version__, prog_name='flux-sense')
@click.option('--verbose', '-v', is_flag=True, help='Debug logging')
@click.pass_context
def cli(ctx, verbose):
    """
    Flux Sense - Kitaev phase estimation of magnetic flux with entangled qubits.

    Examples:
        flux-sense pattern --preset custom
        flux-sense verify
        flux-sense sense --preset desk --workers 4
        flux-sense analyze results/desk
    """
    ctx.ensure_object(dict)
    ctx.obj['verbose'] = verbose


@cli.command()
@experiment_options
@click.pass_context
def pattern(ctx, config_path, preset, seed, workers, out):
    """
    Write the calibration pattern (flux x delay) of the configured sensor.

    With "engine": true in the pattern block the pattern comes from the Lindblad
    engine instead of the closed form; "fixed_flux" adds the single versus
    two-qubit trace at that flux.
    """
    setup_logging(ctx, logging.WARNING)
    try:
        from src.analysis.plots import write_pattern_script, write_trace_script
        from src.engine.sequences import EngineOptions, engine_pattern, single_vs_entangled_trace
        from src.models.physics import build_calibration_pattern, pattern_period
        from src.models.sensor import FluxGrid
        from src.pipeline.persistence import write_frame, write_pattern
        import pandas as pd

        spec = resolve_spec(config_path, preset, seed, workers, out)
        settings = spec.pattern
        sensor = spec.sensors[settings.sensor]
        output_dir = Path(spec.output.directory)

        if settings.taus is not None:
            taus = np.array(settings.taus)
        else:
            stop = settings.tau_stop or (sensor.t2_star if np.isfinite(sensor.t2_star) else 10e-6)
            taus = np.linspace(0.0, stop, settings.tau_count)
        low, high = sensor.flux_window()
        step = (high - low) / settings.flux_points
        grid = FluxGrid(start=low + 0.5 * step, step=step, count=settings.flux_points)
        longest = float(np.max(taus))
        period = pattern_period(sensor, longest) if longest > 0 and sensor.slope != 0 else np.inf
        if period < 4 * step:
            logging.getLogger(__name__).warning(
                "flux pitch %.3g Phi0 undersamples the %.3g Phi0 fringe period at tau=%.3g s", step, period, longest
            )

        if settings.engine:
            say(f"[bold blue]Engine pattern:[/bold blue] {sensor.label}", f"Engine pattern: {sensor.label}")
            values = engine_pattern(sensor, grid.values(), taus, EngineOptions())
        else:
            values = build_calibration_pattern(sensor, grid, taus)

        config, run_seed = spec.to_dict(), spec.sweep.seed
        csv_path = output_dir / f"pattern_{sensor.label}.csv"
        write_pattern(str(csv_path), grid.values(), taus, values, config, run_seed)
        write_pattern_script(str(csv_path), str(output_dir / f"plot_pattern_{sensor.label}.py"), config, run_seed,
                             title=f"{sensor.label} calibration pattern",
                             label="P|1>" if sensor.n_qubits == 1 else "P|10..0>")
        written = [csv_path]

        if settings.fixed_flux is not None:
            trace = single_vs_entangled_trace(sensor, settings.fixed_flux, taus)
            trace_path = output_dir / f"trace_{sensor.label}.csv"
            write_frame(pd.DataFrame(trace), str(trace_path), config, run_seed, index=False)
            write_trace_script(str(trace_path), str(output_dir / f"plot_trace_{sensor.label}.py"), config, run_seed)
            written.append(trace_path)

        for path in written:
            say(f"[green]Wrote[/green] {path}", f"Wrote {path}")

    except Exception as e:
        fail(e)


@cli.command()
@experiment_options
@click.option('--gate-angle-error', type=float, default=None,
              help='Add this angle (rad) to the first entangler rotation')
@click.pass_context
def verify(ctx, config_path, preset, seed, workers, out, gate_angle_error):
    """
    Cross-check the Lindblad engine against the closed-form pattern.

    Exits with code 3 when any check fails.
    """
    setup_logging(ctx, logging.WARNING)
    try:
        from src.engine.sequences import EngineOptions
        from src.engine.verification import run_verification
        from src.pipeline.persistence import write_frame

        spec = resolve_spec(config_path, preset, seed, workers, out)
        settings = spec.verify
        options = EngineOptions(
            gate_time_s=settings.gate_time_s,
            angle_error=settings.angle_error if gate_angle_error is None else gate_angle_error,
            snapshot_dir=settings.snapshot_dir,
            snapshot_config=spec.to_dict(),
            snapshot_seed=spec.sweep.seed,
        )
        report = run_verification(
            spec.sensors[0],
            options=options,
            readout=spec.pea.readout,
            n_flux=settings.n_flux,
            n_tau=settings.n_tau,
            cptp_sequences=settings.cptp_sequences,
            seed=spec.sweep.seed,
        )
        frame = report.to_frame()
        report_path = Path(spec.output.directory) / "verify_report.csv"
        write_frame(frame, str(report_path), spec.to_dict(), spec.sweep.seed, index=False)
        display_report(frame)

    except Exception as e:
        fail(e)

    if not report.passed:
        say("[red]Verification FAILED[/red]", "Verification FAILED")
        sys.exit(EXIT_VERIFICATION)
    say("[green]Verification passed[/green]", "Verification passed")


@cli.command()
@experiment_options
@click.option('--quiet', '-q', is_flag=True, help='No progress bar')
@click.pass_context
def sense(ctx, config_path, preset, seed, workers, out, quiet):
    """
    Run the Monte Carlo sweep and stream step records to CSV.

    Re-running into the same directory resumes; a different configuration is refused.
    """
    setup_logging(ctx, logging.INFO)
    try:
        from src.pipeline.orchestrator import ExperimentOrchestrator

        spec = resolve_spec(config_path, preset, seed, workers, out)
        say(f"[bold]Starting experiment[/bold] ({spec.sweep.preset})", f"Starting experiment ({spec.sweep.preset})")
        say(f"Output directory: {spec.output.directory}")

        orchestrator = ExperimentOrchestrator(spec, progress=not quiet)
        orchestrator.run()
        summary = orchestrator.get_summary()
        display_run_summary(summary, spec.output.directory)

    except Exception as e:
        fail(e)

    if summary['errors']:
        say(f"[red]{summary['errors']} task(s) failed[/red]", f"{summary['errors']} task(s) failed")
        sys.exit(EXIT_RUNTIME)


@cli.command()
@click.argument('directory', type=click.Path(exists=True, file_okay=False))
@click.option('--bootstrap', type=click.IntRange(min=0), default=200, help='Bootstrap resamples per step')
@click.option('--reference', default=None, help='Sensor label used for matched-time comparison')
@click.pass_context
def analyze(ctx, directory, bootstrap, reference):
    """Aggregate completed records in DIRECTORY into per-step summaries."""
    setup_logging(ctx, logging.WARNING)
    try:
        from src.analysis.plots import write_summary_script
        from src.analysis.summary import entanglement_advantage, summarize
        from src.models.experiment import ExperimentResult
        from src.pipeline.persistence import read_frame, read_header, write_frame
        import pandas as pd

        directory = Path(directory)
        record_files = sorted(directory.glob("records_*.csv"))
        if not record_files:
            raise FluxSenseError(f"no records_*.csv files in {directory}")

        summaries, summary_paths, rows = {}, {}, []
        config, seed = {}, None
        for path in record_files:
            header = read_header(str(path))
            config = header.get("config", {})
            seed = header.get("seed")
            label = path.stem[len("records_"):]
            max_steps = config.get("pea", {}).get("max_steps")
            result = ExperimentResult(read_frame(str(path)), label, config)
            if max_steps:
                result = result.complete_tasks(max_steps)
            if not len(result.records):
                logging.getLogger(__name__).warning("%s has no completed tasks", path)
                continue
            summary = summarize(result, bootstrap=bootstrap)
            summary_path = directory / f"summary_{label}.csv"
            write_frame(summary, str(summary_path), config, seed, index=False)
            summaries[label] = summary
            summary_paths[label] = str(summary_path)
            rows.append(_summary_row(label, result, summary, config))

        if not summaries:
            raise FluxSenseError(f"no completed tasks in {directory}")
        reference = reference or next(iter(summaries))
        advantage = entanglement_advantage(summaries, reference)
        write_frame(advantage, str(directory / "advantage.csv"), config, seed, index=False)
        write_frame(pd.DataFrame(rows), str(directory / "scaling.csv"), config, seed, index=False)
        write_summary_script(summary_paths, str(directory / "plot_summary.py"), config, seed)
        display_analysis(rows)

    except Exception as e:
        fail(e)


def _sensor_delay_cap(config: dict, label: str) -> float:
    """Delay cap of sensor ``label`` under the recorded settings (NaN when not recorded)."""
    from src.estimation.kitaev import PeaConfig, delay_cap
    from src.models.sensor import SensorConfig

    sensors = {s.get("label"): s for s in config.get("sensors", [])}
    if label not in sensors:
        return float("nan")
    return delay_cap(SensorConfig.from_dict(sensors[label]), PeaConfig.from_dict(config.get("pea", {})))


def _exponent(summary, steps) -> float:
    from src.analysis.summary import summary_exponent

    try:
        return summary_exponent(summary, steps)
    except FluxSenseError:
        return float("nan")


def _summary_row(label, result, summary, config) -> dict:
    from src.analysis.summary import nearest_limit, saturation_step

    steps = summary["l"].tolist()
    early = _exponent(summary, [l for l in steps if l <= 4])
    late = _exponent(summary, steps[-3:])
    saturation = saturation_step(summary, _sensor_delay_cap(config, label))
    final = summary.iloc[-1]
    return {
        'label': label,
        'tasks': result.n_fluxes * result.n_repetitions,
        'final_accuracy': final["delta_phi_over_phi0"],
        'final_delay_us': final["delay_bar_s"] * 1e6,
        'early_slope': early,
        'late_slope': late,
        'late_limit': nearest_limit(late),
        'saturation_step': saturation if saturation is not None else -1,
        'undecided': result.undecided_fraction(),
    }


def display_report(frame):
    """Display verification checks."""
    if console and RICH_AVAILABLE:
        table = Table(title="Verification")
        for column in ("check", "result", "measured", "threshold", "detail"):
            table.add_column(column)
        for _, row in frame.iterrows():
            result = "[green]PASS[/green]" if row["passed"] else "[red]FAIL[/red]"
            table.add_row(row["check"], result, f"{row['measured']:.3e}", f"{row['threshold']:.1e}", str(row["detail"]))
        console.print(table)
    else:
        for _, row in frame.iterrows():
            status = "PASS" if row["passed"] else "FAIL"
            print(f"{status}  {row['check']}: {row['measured']:.3e} (threshold {row['threshold']:.1e})")


def display_run_summary(summary: dict, output_dir: str):
    """Display the experiment summary panel."""
    lines = [
        f"Sensors: {summary['sensors']}",
        f"Test fluxes x repetitions: {summary['test_fluxes']} x {summary['repetitions']}",
        f"Tasks completed: {summary['tasks_completed']} (resumed {summary['tasks_resumed']})",
        f"Errors: {summary['errors']}",
        f"Records in: {output_dir}",
    ]
    if console and RICH_AVAILABLE:
        console.print(Panel("\n".join(lines), title="[bold]Experiment complete[/bold]", border_style="green"))
    else:
        print("\nExperiment complete")
        print("\n".join(f"  {line}" for line in lines))


def display_analysis(rows: list):
    """Display per-sensor results."""
    if console and RICH_AVAILABLE:
        table = Table(title="Accuracy summary")
        columns = ("sensor", "tasks", "final dPhi/Phi0", "final delay (us)", "slope l<=4", "slope last 3",
                   "saturates at", "undecided")
        for column in columns:
            table.add_column(column)
        for row in rows:
            saturation = str(row['saturation_step']) if row['saturation_step'] > 0 else "-"
            table.add_row(
                row['label'], str(row['tasks']), f"{row['final_accuracy']:.3e}",
                f"{row['final_delay_us']:.3f}", f"{row['early_slope']:.3f}",
                f"{row['late_slope']:.3f} ({row['late_limit']})", saturation, f"{row['undecided']:.1%}",
            )
        console.print(table)
    else:
        for row in rows:
            print(f"{row['label']}: dPhi/Phi0={row['final_accuracy']:.3e} slope={row['early_slope']:.3f}")


if __name__ == '__main__':
    cli()
