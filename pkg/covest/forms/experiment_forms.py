"""
Experiment Forms for covest
WTForms forms validating experiment config files and plot specs

Config files are flat KEY=value text (read with python-dotenv); keys are
case-insensitive, lists are comma-separated, and unknown keys are rejected.
"""

import os

from dotenv import dotenv_values
from werkzeug.datastructures import MultiDict
from wtforms import Form, Field, StringField, IntegerField, FloatField, BooleanField
from wtforms.validators import Optional, NumberRange, AnyOf, ValidationError

from covest.models.experiment_model import ExperimentConfig, PlotSpec, lambda_grid
from covest.services.error_handling_service import ConfigError
from covest.services.experiment_service import ESTIMATORS, METRICS, ExperimentService
from covest.services.mimo_estimation_service import MimoEstimationService

FALSE_VALUES = ('false', 'False', 'FALSE', '0', 'no', 'off', '')


class ListField(Field):
    """Comma-separated list; `item_type` converts each entry"""
    item_type = str
    item_name = 'value'

    def _value(self):
        return ', '.join(str(v) for v in self.data) if self.data else ''

    def process_formdata(self, valuelist):
        if not valuelist:
            return
        items = [item.strip() for item in valuelist[0].split(',') if item.strip()]
        try:
            self.data = tuple(self.item_type(item) for item in items)
        except ValueError:
            self.data = None
            raise ValueError(f'Not a valid list of {self.item_name}s.')


class IntegerListField(ListField):
    item_type = int
    item_name = 'integer'


class FloatListField(ListField):
    item_type = float
    item_name = 'number'


class Positive:
    """Strictly positive number"""

    def __init__(self, message=None):
        self.message = message or 'Must be greater than 0.'

    def __call__(self, form, field):
        if field.data is not None and not field.data > 0:
            raise ValidationError(self.message)


class ExperimentConfigForm(Form):
    """Experiment configuration overrides on top of a preset"""
    experiment = StringField('Experiment', validators=[
        Optional(), AnyOf(ExperimentConfig.EXPERIMENTS, message='Unknown experiment.')
    ])
    name = StringField('Name', validators=[Optional()])
    seed = IntegerField('Seed', validators=[Optional(), NumberRange(min=0)])
    trials = IntegerField('Trials', validators=[Optional(), NumberRange(min=1)])

    truth = StringField('Truth', validators=[
        Optional(), AnyOf(ExperimentConfig.TRUTHS, message='Unknown truth model.')
    ])
    truth_c = FloatField('Correlation', validators=[Optional(), NumberRange(min=-1.0, max=1.0)])
    truth_col = FloatListField('Toeplitz column')
    truth_bandwidth = IntegerField('Bandwidth', validators=[Optional(), NumberRange(min=1)])
    truth_q = FloatField('Sparsity exponent', validators=[Optional(), NumberRange(min=0.0, max=1.0)])
    truth_s = IntegerField('Sparsity level', validators=[Optional(), NumberRange(min=1)])
    truth_bound = FloatField('Entry bound', validators=[Optional(), Positive()])
    truth_rank = IntegerField('Rank', validators=[Optional(), NumberRange(min=1)])
    truth_ridge = FloatField('Ridge', validators=[Optional(), NumberRange(min=0.0)])
    truth_scaling = StringField('Scaling', validators=[Optional(), AnyOf(('none', 'ramp'))])

    dims = IntegerListField('Dimensions')
    samples = IntegerListField('Sample sizes')
    correlations = FloatListField('Correlations')
    lam_factors = FloatListField('Dither levels')
    lam_points = IntegerField('Dither grid points', validators=[Optional(), NumberRange(min=1)])

    estimators = ListField('Estimators')
    metrics = ListField('Metrics')

    mprime = FloatField("M'", validators=[Optional(), Positive()])
    toeplitz_C = FloatField('C', validators=[Optional(), Positive()])
    toeplitz_K = FloatField('K', validators=[Optional(), Positive()])
    toeplitz_c = FloatField('c', validators=[Optional()])
    toeplitz_alpha = FloatField('alpha', validators=[Optional()])
    lasso_c = FloatField('Lasso C', validators=[Optional(), NumberRange(min=0.0)])
    c_lambda = FloatField('c_lambda', validators=[Optional(), Positive()])
    mask_width = IntegerField('Mask width', validators=[Optional(), NumberRange(min=0)])

    snr_db = FloatField('SNR (dB)', validators=[Optional()])
    spacing_ratio = FloatField('Antenna spacing', validators=[Optional(), Positive()])
    dictionary = StringField('Dictionary', validators=[
        Optional(), AnyOf(MimoEstimationService.DICTIONARY_KINDS, message='Unknown dictionary kind.')
    ])
    dictionary_size = IntegerField('Dictionary size', validators=[Optional(), NumberRange(min=0)])
    music_order = StringField('MUSIC order', validators=[Optional()])
    asfs = IntegerField('ASFs', validators=[Optional(), NumberRange(min=1)])
    realizations = IntegerField('Realizations', validators=[Optional(), NumberRange(min=1)])
    epe_dims = IntegerListField('Subspace dimensions')

    output = StringField('Output', validators=[Optional()])
    record_wall_time = BooleanField('Record wall time', false_values=FALSE_VALUES)

    def validate_dims(self, field):
        if field.data is not None and (not field.data or min(field.data) < 1):
            raise ValidationError('Dimensions must be positive.')

    def validate_samples(self, field):
        if field.data is not None and (not field.data or min(field.data) < 1):
            raise ValidationError('Sample sizes must be positive.')

    def validate_lam_factors(self, field):
        if field.data and min(field.data) <= 0:
            raise ValidationError('Dither levels must be positive.')

    def validate_estimators(self, field):
        if field.data is not None:
            if not field.data:
                raise ValidationError('Select at least one estimator.')
            unknown = [name for name in field.data if name not in ESTIMATORS]
            if unknown:
                raise ValidationError(f"Unknown estimator(s): {', '.join(unknown)}.")

    def validate_metrics(self, field):
        if field.data is not None:
            unknown = [name for name in field.data if name not in METRICS]
            if unknown or not field.data:
                raise ValidationError(f"Metrics must be chosen from {', '.join(METRICS)}.")

    def validate_toeplitz_c(self, field):
        if field.data is not None and not field.data > 1:
            raise ValidationError('c must exceed 1.')

    def validate_toeplitz_alpha(self, field):
        if field.data is not None and not 0 < field.data < 1:
            raise ValidationError('alpha must lie in (0, 1).')

    def validate_music_order(self, field):
        if field.data and field.data != 'auto':
            if not field.data.isdigit():
                raise ValidationError("MUSIC order must be 'auto' or a non-negative integer.")


class PlotSpecForm(Form):
    """Figure layout read from a plot spec file"""
    x = StringField('X axis', validators=[Optional()])
    metric = StringField('Metric', validators=[Optional()])
    panel = StringField('Panel axis', validators=[Optional()])
    series = StringField('Series', validators=[Optional()])
    estimators = ListField('Estimators')
    best_over = StringField('Best over', validators=[Optional()])
    logx = BooleanField('Log x', false_values=FALSE_VALUES)
    logy = BooleanField('Log y', false_values=FALSE_VALUES)
    title = StringField('Title', validators=[Optional()])
    xlabel = StringField('X label', validators=[Optional()])
    ylabel = StringField('Y label', validators=[Optional()])
    output = StringField('Output', validators=[Optional()])


def read_key_values(path):
    """KEY=value pairs of a config file, keys lower-cased"""
    if not os.path.isfile(path):
        raise ConfigError('path', f'config file {path!r} not found')
    values = dotenv_values(path)
    return {key.strip().lower(): ('' if value is None else value.strip()) for key, value in values.items()}


def _bind(form_class, values):
    """Validate `values` with `form_class`; return the cleaned entries that were given"""
    known = {name for name, _ in form_class()._fields.items()}
    for key in values:
        if key not in known:
            raise ConfigError(key, 'unknown key')

    form = form_class(MultiDict(values))
    if not form.validate():
        field, messages = next(iter(form.errors.items()))
        raise ConfigError(field, messages[0])
    return {key: form[key].data for key in values if form[key].data is not None}


def experiment_config_from_values(values):
    """Preset named by EXPERIMENT (custom by default) with the given keys applied"""
    changes = _bind(ExperimentConfigForm, values)
    lam_points = changes.pop('lam_points', None)
    if lam_points:
        changes.setdefault('lam_factors', lambda_grid(lam_points))
    config = ExperimentConfig.preset(changes.pop('experiment', None) or 'custom')
    config = config.updated(**changes)
    return ExperimentService.validate(config)


def load_experiment_config(path, overrides=None):
    """
    Read and validate an experiment config file.

    Args:
        path (str): KEY=value file
        overrides (dict): extra key/values applied after the file (e.g. from the CLI)
    Returns:
        ExperimentConfig
    Raises:
        ConfigError: naming the offending key
    """
    values = read_key_values(path)
    values.update({key.lower(): str(value) for key, value in (overrides or {}).items()})
    return experiment_config_from_values(values)


def load_plot_spec(path):
    """Read and validate a plot spec file"""
    changes = _bind(PlotSpecForm, read_key_values(path))
    return PlotSpec(**{key: value for key, value in changes.items() if value is not None})
