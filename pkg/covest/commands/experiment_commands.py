"""
Experiment Commands for covest
Handles running sweeps, summarizing result files and emitting figures
"""

import json
import logging
import os
import sys

import click

from covest.forms.experiment_forms import load_experiment_config, load_plot_spec
from covest.models.experiment_model import ResultRow
from covest.services.error_handling_service import CovestError, ConfigError, ExperimentErrorHandler
from covest.services.experiment_service import ExperimentService
from covest.services.plot_service import PlotService
from covest.utils.export_utils import (
    read_result_rows, read_summary, summary_path, export_summary_to_csv, export_summary_to_excel
)

logger = logging.getLogger(__name__)

experiment_cli = click.Group('experiment', help='Run and report experiments')


def _fail(error, path=None):
    """Print a user-facing error and exit non-zero"""
    code = ExperimentErrorHandler.error_code_of(error)
    if isinstance(error, ConfigError):
        ExperimentErrorHandler.log_config_error(path, error)
    click.echo(f'Error: {ExperimentErrorHandler.get_user_friendly_message(code)} {error}', err=True)
    sys.exit(2 if isinstance(error, ConfigError) else 1)


def _overrides(**options):
    return {key: value for key, value in options.items() if value is not None}


@experiment_cli.command('run')
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.option('--workers', '-w', type=int, default=None, help='Worker processes (default COVEST_WORKERS)')
@click.option('--output', '-o', default=None, help='Result CSV path')
@click.option('--trials', type=int, default=None, help='Override TRIALS')
@click.option('--seed', type=int, default=None, help='Override SEED')
def run(config_path, workers, output, trials, seed):
    """Run the sweep described by CONFIG_PATH and write its result CSV"""
    try:
        config = load_experiment_config(config_path, _overrides(trials=trials, seed=seed, output=output))
    except CovestError as e:
        _fail(e, config_path)

    click.echo(f'Running {config!r}')
    try:
        rows = ExperimentService.run(config, workers=workers)
    except CovestError as e:
        _fail(e, config_path)

    stats = ExperimentErrorHandler.get_error_statistics(rows)
    click.echo(f'✓ {len(rows)} rows written to {config.output_path}')
    if stats['total_errors']:
        click.echo(f"  {stats['total_errors']} failed rows: {json.dumps(stats['error_counts'], sort_keys=True)}")


@experiment_cli.command('show-config')
@click.argument('config_path', type=click.Path(dir_okay=False))
def show_config(config_path):
    """Print the resolved configuration as JSON"""
    try:
        config = load_experiment_config(config_path)
    except CovestError as e:
        _fail(e, config_path)
    payload = {**config.to_dict(), 'grid_points': len(config.grid()), 'trial_count': config.trial_count}
    click.echo(json.dumps(payload, indent=2, default=str))


@experiment_cli.command('summarize')
@click.argument('results_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--best-over', default=None, help='Grid axis to minimize the mean error over (e.g. lam)')
@click.option('--xlsx', is_flag=True, help='Also write an Excel workbook')
@click.option('--output', '-o', default=None, help='Summary CSV path')
def summarize(results_path, best_over, xlsx, output):
    """Aggregate a result CSV into mean and standard error per group"""
    try:
        rows = read_result_rows(results_path)
        table = ExperimentService.summarize(rows, best_over=best_over)
        path = export_summary_to_csv(table, output or summary_path(results_path))
        click.echo(f'✓ Summary of {len(rows)} rows written to {path}')
        if xlsx:
            workbook = export_summary_to_excel(table, os.path.splitext(path)[0] + '.xlsx',
                                               title=os.path.basename(os.path.splitext(results_path)[0]))
            click.echo(f'✓ Workbook written to {workbook}')
    except CovestError as e:
        _fail(e)


def _load_table(path, spec):
    """A summary CSV as is, or a result CSV summarized on the fly"""
    with open(path, encoding='utf-8') as handle:
        header = handle.readline().strip().split(',')
    if tuple(header) == ResultRow.FIELDS:
        return ExperimentService.summarize(read_result_rows(path), best_over=spec.best_over or None)
    return read_summary(path)


@experiment_cli.command('plot')
@click.argument('table_path', type=click.Path(exists=True, dir_okay=False))
@click.argument('spec_path', type=click.Path(dir_okay=False))
@click.option('--output', '-o', default=None, help='SVG path (default OUTPUT of the spec)')
def plot(table_path, spec_path, output):
    """Draw TABLE_PATH (results or summary CSV) as laid out by SPEC_PATH"""
    try:
        spec = load_plot_spec(spec_path)
        table = _load_table(table_path, spec)
        svg, data = PlotService.emit_plot(table, spec, output)
    except CovestError as e:
        _fail(e, spec_path)
    click.echo(f'✓ Figure written to {svg}')
    click.echo(f'✓ Plotted data written to {data}')
