"""
Catalog Commands for covest
Handles listing estimators and experiments and writing the preset config files
"""

import click

from covest.models.experiment_model import PRESETS, ExperimentConfig
from covest.services.error_handling_service import CovestError, ExperimentErrorHandler
from covest.services.experiment_service import ExperimentService
from covest.utils.config_utils import write_preset_configs

catalog_cli = click.Group('catalog', help='Estimators, experiments and preset files')


@catalog_cli.command('list-estimators')
def list_estimators():
    """Print every registered estimator id"""
    for name, family, description in ExperimentService.list_estimators():
        click.echo(f'{name:<20} {family:<5} {description}')


@catalog_cli.command('list-experiments')
def list_experiments():
    """Print the preset experiments and their grid sizes"""
    for experiment in PRESETS:
        config = ExperimentConfig.preset(experiment)
        click.echo(f'{experiment:<20} {len(config.grid()):>4} points x {config.trial_count} trials')


@catalog_cli.command('init-configs')
@click.argument('directory', required=False)
@click.option('--force', is_flag=True, help='Overwrite existing files')
def init_configs(directory, force):
    """Write the preset experiment configs and plot specs"""
    try:
        results = write_preset_configs(directory, force=force)
    except CovestError as e:
        click.echo(f'Error: {ExperimentErrorHandler.get_user_friendly_message(e.error_code)} {e}', err=True)
        raise SystemExit(1)
    for path, written in results:
        click.echo(f'✓ {path}' if written else f'  {path} exists, kept')
