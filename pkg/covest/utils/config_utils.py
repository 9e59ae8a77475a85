"""
Config File Utilities for covest
Writes the preset experiment configs and plot specs as editable KEY=value files
"""

import logging
import os

from config import Config
from covest.models.experiment_model import PRESETS, ExperimentConfig
from covest.services.error_handling_service import ExportError

logger = logging.getLogger(__name__)

PLOT_SPECS = {
    'fig3_mimo_enf': {
        'x': 'N', 'metric': 'enf', 'logx': True, 'logy': True,
        'title': 'Channel covariance, normalized Frobenius error',
        'xlabel': 'pilots N', 'ylabel': 'E_NF',
    },
    'fig3_mimo_epe': {
        'x': 'N', 'metric': 'epe@8', 'logx': True,
        'title': 'Channel covariance, subspace power loss (d = 8)',
        'xlabel': 'pilots N', 'ylabel': 'E_PE',
    },
    'fig4_correlation': {
        'x': 'n', 'metric': 'operator', 'panel': 'c', 'logy': True,
        'title': 'Sign estimator against sample covariance',
        'xlabel': 'samples n', 'ylabel': 'operator-norm error',
    },
    'fig5_dimension': {
        'x': 'p', 'metric': 'operator', 'best_over': 'lam',
        'title': 'Error against dimension at the best dither level',
        'xlabel': 'dimension p', 'ylabel': 'operator-norm error',
    },
    'fig6_lambda_sweep': {
        'x': 'lam', 'metric': 'operator', 'logy': True,
        'title': 'Dithered estimator across dither levels',
        'xlabel': 'λ / max|Σ|', 'ylabel': 'operator-norm error',
    },
}

CUSTOM_EXAMPLE = {
    'truth': 'banded_toeplitz',
    'truth_col': (1.0, 0.5, 0.25),
    'truth_bandwidth': 3,
    'dims': (20, 50, 100),
    'samples': (50,),
    'estimators': ('sample', 'threshold', 'toeplitz', 'toeplitz-threshold'),
    'metrics': ('operator', 'frobenius'),
    'trials': 20,
}


def format_value(value):
    """Config-file spelling of a setting value"""
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (tuple, list)):
        return ','.join(format_value(v) for v in value)
    if isinstance(value, float):
        return f'{value:g}'
    return str(value)


def experiment_file_text(experiment, settings=None):
    """KEY=value text that loads back to the named preset"""
    settings = dict(PRESETS[experiment] if settings is None else settings)
    lines = [f'# {experiment} experiment', f'EXPERIMENT={experiment}', 'SEED=0']
    if 'trials' not in settings and not settings.get('truth') == 'asf':
        lines.append(f'TRIALS={ExperimentConfig.trials}')

    lam_factors = settings.pop('lam_factors', None)
    for key, value in settings.items():
        lines.append(f'{key.upper()}={format_value(value)}')
    if lam_factors:
        lines.append(f'LAM_POINTS={len(lam_factors)}')
    return '\n'.join(lines) + '\n'


def plot_spec_text(name, spec):
    lines = [f'# {name} figure'] + [f'{key.upper()}={format_value(value)}' for key, value in spec.items()]
    lines.append(f"OUTPUT={os.path.join(Config.RESULTS_DIR, name + '.svg')}")
    return '\n'.join(lines) + '\n'


def _write(path, text, force):
    if os.path.exists(path) and not force:
        return False
    try:
        with open(path, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write(text)
    except OSError as e:
        raise ExportError(f'cannot write {path}: {e}', path=str(path))
    return True


def write_preset_configs(directory=None, force=False):
    """
    Write one .env file per preset experiment and one .plot file per figure.

    Args:
        directory (str): target directory, Config.CONFIGS_DIR by default
        force (bool): overwrite existing files
    Returns:
        list: (path, written) pairs; written is False for files left untouched
    """
    directory = directory or Config.CONFIGS_DIR
    os.makedirs(directory, exist_ok=True)

    files = []
    for experiment in PRESETS:
        settings = CUSTOM_EXAMPLE if experiment == 'custom' else None
        files.append((os.path.join(directory, f'{experiment}.env'), experiment_file_text(experiment, settings)))
    for name, spec in PLOT_SPECS.items():
        files.append((os.path.join(directory, f'{name}.plot'), plot_spec_text(name, spec)))

    results = [(path, _write(path, text, force)) for path, text in files]
    logger.info(f"Preset configs in {directory}: {sum(w for _, w in results)} written")
    return results
