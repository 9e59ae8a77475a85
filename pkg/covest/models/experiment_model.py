"""
Experiment Models for covest
Experiment configurations with their desk-scale presets, grid points, result rows and plot specs
"""

import itertools
import json
import math
import os
from dataclasses import dataclass, field, asdict, replace

from config import Config
from covest.models.covariance_model import (
    ConstCorr, BandedToeplitz, SparseRandom, LowRankPlusRidge, ScaledModel
)
from covest.services.error_handling_service import ConfigError


def lambda_grid(points, upper=4.0):
    """points dither levels k/points·upper, k = 1..points, as multiples of ‖Σ‖_∞"""
    return tuple(upper * k / points for k in range(1, points + 1))


def power_of_two_dims(M):
    """1, 2, 4, ... up to M/2"""
    dims, d = [], 1
    while d <= max(1, M // 2):
        dims.append(d)
        d *= 2
    return tuple(dims)


@dataclass(frozen=True)
class GridPoint:
    """One point of the sweep; `base_index` ignores the λ axis so λ points share random streams"""
    axes: tuple
    base_index: int

    def get(self, name, default=None):
        return dict(self.axes).get(name, default)

    @property
    def label(self):
        return ';'.join(f'{name}={value:g}' for name, value in self.axes)

    def to_dict(self):
        return dict(self.axes)

    def __repr__(self):
        return f'<GridPoint {self.label}>'


@dataclass(frozen=True)
class ExperimentConfig:
    """A Monte-Carlo sweep: truth recipe, grid axes, estimators, metrics and tuning constants"""
    experiment: str = 'custom'
    name: str = ''
    seed: int = 0
    trials: int = Config.DEFAULT_TRIALS

    # ground truth
    truth: str = 'const_corr'
    truth_c: float = 0.5
    truth_col: tuple = (1.0, 0.5, 0.25)
    truth_bandwidth: int = 3
    truth_q: float = 0.0
    truth_s: int = 3
    truth_bound: float = 0.3
    truth_rank: int = 2
    truth_ridge: float = 0.1
    truth_scaling: str = 'none'

    # grid axes
    dims: tuple = (20,)
    samples: tuple = (100,)
    correlations: tuple = ()
    lam_factors: tuple = ()

    estimators: tuple = ('sample',)
    metrics: tuple = ('operator',)

    # tuning constants
    mprime: float = 1.0
    toeplitz_C: float = 1.0
    toeplitz_K: float = 1.0
    toeplitz_c: float = 2.0
    toeplitz_alpha: float = 0.5
    lasso_c: float = 1.0
    c_lambda: float = 1.0
    mask_width: int = 0

    # channel experiments
    snr_db: float = 10.0
    spacing_ratio: float = 0.5
    dictionary: str = 'dirac'
    dictionary_size: int = 0
    music_order: str = 'auto'
    asfs: int = 20
    realizations: int = 50
    epe_dims: tuple = ()

    output: str = ''
    record_wall_time: bool = Config.RECORD_WALL_TIME

    EXPERIMENTS = ('fig3_mimo', 'fig4_correlation', 'fig5_dimension', 'fig6_lambda_sweep', 'custom')
    TRUTHS = ('const_corr', 'banded_toeplitz', 'sparse_random', 'low_rank', 'asf')

    @classmethod
    def preset(cls, experiment):
        """Desk-scale defaults of a named experiment"""
        if experiment not in PRESETS:
            raise ConfigError('experiment', f'unknown experiment {experiment!r}')
        return cls(experiment=experiment, **PRESETS[experiment])

    def updated(self, **changes):
        return replace(self, **changes)

    @property
    def label(self):
        return self.name or self.experiment

    @property
    def is_mimo(self):
        return self.truth == 'asf'

    @property
    def trial_count(self):
        return self.asfs * self.realizations if self.is_mimo else self.trials

    @property
    def output_path(self):
        return self.output or os.path.join(Config.RESULTS_DIR, f'{self.label}.csv')

    def grid(self):
        """Grid points in sweep order; λ varies fastest"""
        if self.is_mimo:
            base = [(('M', M), ('N', N)) for M in self.dims for N in self.samples]
        else:
            correlations = self.correlations or (None,)
            base = []
            for p, n, c in itertools.product(self.dims, self.samples, correlations):
                axes = (('p', p), ('n', n))
                base.append(axes + ((('c', c),) if c is not None else ()))

        points = []
        for index, axes in enumerate(base):
            if self.lam_factors and not self.is_mimo:
                points.extend(GridPoint(axes + (('lam', lam),), index) for lam in self.lam_factors)
            else:
                points.append(GridPoint(axes, index))
        return points

    def truth_model(self, point):
        """Covariance model of a (non-channel) grid point"""
        p = int(point.get('p'))
        c = point.get('c', self.truth_c)
        if self.truth == 'const_corr':
            model = ConstCorr(float(c))
        elif self.truth == 'banded_toeplitz':
            model = BandedToeplitz(tuple(self.truth_col), self.truth_bandwidth)
        elif self.truth == 'sparse_random':
            model = SparseRandom(self.truth_q, self.truth_s, self.truth_bound)
        elif self.truth == 'low_rank':
            model = LowRankPlusRidge(self.truth_rank, self.truth_ridge)
        else:
            raise ConfigError('truth', f'{self.truth!r} has no covariance model')
        if self.truth_scaling == 'ramp':
            model = ScaledModel(model, tuple(float(k) for k in range(1, p + 1)))
        return model

    def subspace_dims(self, M):
        dims = self.epe_dims or power_of_two_dims(M)
        return tuple(d for d in dims if 1 <= d <= M)

    def to_dict(self):
        return asdict(self)

    def metadata(self, point=None):
        """Settings every result row of this experiment carries, truth model and numeric constants included"""
        record = {
            'truth': self.truth, 'trials': self.trial_count, 'seed': self.seed,
            'numeric': Config.numeric_settings(),
        }
        if self.is_mimo:
            record.update(snr_db=self.snr_db, spacing_ratio=self.spacing_ratio)
        elif point is not None:
            model = self.truth_model(point)
            base = model.base if isinstance(model, ScaledModel) else model
            record.update(truth_model=base.label(), truth_scaling=self.truth_scaling)
        record.update(SHRINKAGE.get(self.experiment, {}))
        return record

    def __repr__(self):
        return f'<ExperimentConfig {self.label} points={len(self.grid())} trials={self.trial_count}>'


PRESETS = {
    'fig3_mimo': {
        'truth': 'asf',
        'dims': (32,),
        'samples': (4, 8, 16, 32, 64),
        'estimators': ('mimo-sample', 'mimo-toeplitz', 'nnls'),
        'metrics': ('enf', 'epe'),
        'asfs': 20,
        'realizations': 50,
        'snr_db': 10.0,
        'dictionary': 'dirac',
    },
    'fig4_correlation': {
        'truth': 'const_corr',
        'dims': (20,),
        'samples': (10, 50, 100, 200, 300),
        'correlations': (0.5, 0.9, 0.99),
        'estimators': ('sample', 'sign'),
        'metrics': ('operator',),
    },
    'fig5_dimension': {
        'truth': 'const_corr',
        'truth_c': 0.5,
        'dims': (5, 10, 15, 20, 25, 30),
        'samples': (200,),
        'lam_factors': lambda_grid(16),
        'estimators': ('sample', 'sign', 'dithered'),
        'metrics': ('operator',),
    },
    'fig6_lambda_sweep': {
        'truth': 'const_corr',
        'truth_c': 0.5,
        'dims': (5,),
        'samples': (200,),
        'lam_factors': lambda_grid(Config.LAMBDA_POINTS),
        'estimators': ('sample', 'sign', 'dithered'),
        'metrics': ('operator',),
    },
    'custom': {},
}

# channel preset runs at a quarter of the array size and channel draws of the full study
SHRINKAGE = {
    'fig3_mimo': {'array_shrinkage': 0.25, 'realization_shrinkage': 0.25},
}


@dataclass(frozen=True)
class ResultRow:
    """One metric value of one estimator on one trial of one grid point"""
    experiment: str
    trial: int
    grid_point: str
    estimator: str
    metric: str
    value: float
    wall_time: float = 0.0
    metadata: dict = field(default_factory=dict)
    status: str = 'ok'

    FIELDS = ('experiment', 'trial', 'grid_point', 'estimator', 'metric',
              'value', 'wall_time', 'metadata', 'status')

    @property
    def ok(self):
        return self.status == 'ok'

    def to_csv_row(self):
        """Cells in FIELDS order; floats by repr so reruns are byte-identical"""
        return [
            self.experiment,
            str(self.trial),
            self.grid_point,
            self.estimator,
            self.metric,
            repr(float(self.value)),
            f'{self.wall_time:.6f}',
            json.dumps(self.metadata, sort_keys=True, default=_json_default),
            self.status,
        ]

    @classmethod
    def from_csv_row(cls, cells):
        values = dict(zip(cls.FIELDS, cells))
        return cls(
            experiment=values['experiment'],
            trial=int(values['trial']),
            grid_point=values['grid_point'],
            estimator=values['estimator'],
            metric=values['metric'],
            value=float(values['value']),
            wall_time=float(values['wall_time']),
            metadata=json.loads(values['metadata']) if values['metadata'] else {},
            status=values['status'],
        )

    def to_dict(self):
        return {name: getattr(self, name) for name in self.FIELDS}

    def __repr__(self):
        return f'<ResultRow {self.estimator} {self.metric}={self.value:.4g} @ {self.grid_point}#{self.trial}>'


def _json_default(value):
    if hasattr(value, 'item'):
        return value.item()
    if isinstance(value, float) and math.isnan(value):
        return None
    return str(value)


@dataclass(frozen=True)
class PlotSpec:
    """Which summary columns a figure shows and how"""
    x: str = 'n'
    metric: str = 'operator'
    panel: str = ''
    series: str = 'estimator'
    estimators: tuple = ()
    best_over: str = ''
    logx: bool = False
    logy: bool = False
    title: str = ''
    xlabel: str = ''
    ylabel: str = ''
    output: str = ''

    def to_dict(self):
        return asdict(self)
