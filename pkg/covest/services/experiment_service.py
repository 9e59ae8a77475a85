"""
Experiment Service for covest
Handles the estimator registry, Monte-Carlo trials, sweep execution and result summaries
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import pandas as pd

from config import Config
from covest.models.covariance_model import BickelRule, ToeplitzRule
from covest.models.experiment_model import ResultRow
from covest.models.matrix_model import Mask, ToeplitzCol
from covest.models.mimo_model import UlaConfig
from covest.models.rng_model import RngStream
from covest.services.channel_service import ChannelService
from covest.services.error_handling_service import (
    ConfigError, EmptyResultError, ExperimentErrorHandler
)
from covest.services.estimator_service import EstimatorService
from covest.services.mimo_estimation_service import MimoEstimationService
from covest.services.quantization_service import QuantizationService
from covest.services.synth_service import SynthService
from covest.utils.matrix_utils import correlation_normalize, eig, op_norm
from covest.utils.export_utils import ResultCsvSink

logger = logging.getLogger(__name__)

# counter lanes of one trial's random stream
LANE_TRUTH = 0
LANE_SAMPLES = 1
LANE_DITHER = 2
LANE_ASF = 3


@dataclass(frozen=True, eq=False)
class TrialInputs:
    """Everything an estimator may look at in one trial"""
    config: object
    point: object
    stream: RngStream
    truth: object
    batch: object = None
    pilots: object = None
    ula: UlaConfig = None


# ---- real-valued estimators ------------------------------------------------

def _sample(inputs):
    return EstimatorService.sample_cov(inputs.batch), {}


def _masked(inputs):
    p = inputs.batch.p
    width = inputs.config.mask_width or p
    mask = Mask.banded(p, min(width, p))
    return EstimatorService.masked_cov(inputs.batch, mask), {'mask_width': min(width, p)}


def _threshold(inputs):
    rule = BickelRule(inputs.config.mprime)
    tau = rule.resolve(inputs.batch.n, inputs.batch.p)
    return EstimatorService.thresholded_cov(inputs.batch, rule), {'tau': tau, **rule.constants()}


def _toeplitz(inputs):
    return EstimatorService.toeplitz_cov(inputs.batch).expand(), {}


def _toeplitz_rule(config):
    return ToeplitzRule(config.toeplitz_C, config.toeplitz_K, config.toeplitz_c, config.toeplitz_alpha)


def _toeplitz_threshold(inputs):
    rule = _toeplitz_rule(inputs.config)
    n, p = inputs.batch.n, inputs.batch.p
    meta = {'tau': rule.resolve(n, p), 'band_width': rule.band_width(p), **rule.constants()}
    return EstimatorService.toeplitz_thresholded_cov(inputs.batch, rule), meta


def _lasso(inputs):
    lam = EstimatorService.lounici_lambda(inputs.batch, C=inputs.config.lasso_c)
    return EstimatorService.lasso_lowrank_cov(inputs.batch, lam), {'lambda': lam, 'C': inputs.config.lasso_c}


def _sign(inputs):
    return QuantizationService.sign_estimator(QuantizationService.quantize_sign(inputs.batch)), {}


def _sign_psd(inputs):
    estimate, meta = _sign(inputs)
    return QuantizationService.psd_projected(estimate), meta


def _dither_level(inputs):
    """λ from the grid's λ/‖Σ‖_∞ factor, or the logarithmic rule without a λ axis"""
    sigma_max = float(np.max(np.abs(inputs.truth.entries)))
    factor = inputs.point.get('lam')
    if factor is not None:
        return factor * sigma_max, {'lam_factor': factor, 'sigma_max': sigma_max}
    lam = QuantizationService.dither_level_rule(sigma_max, inputs.batch.n, inputs.config.c_lambda)
    return lam, {'c_lambda': inputs.config.c_lambda, 'sigma_max': sigma_max}


def _dithered(inputs):
    lam, meta = _dither_level(inputs)
    bits = QuantizationService.quantize_dithered(inputs.batch, lam, inputs.stream.substream(LANE_DITHER))
    return QuantizationService.dithered_estimator(bits), {'lambda': lam, **meta}


def _dithered_psd(inputs):
    estimate, meta = _dithered(inputs)
    return QuantizationService.psd_projected(estimate), meta


# ---- channel estimators ----------------------------------------------------

def _mimo_sample(inputs):
    return MimoEstimationService.sample_estimate(inputs.pilots), {'noise_power': inputs.pilots.noise_power}


def _mimo_toeplitz(inputs):
    col = MimoEstimationService.toeplitz_denoise(inputs.pilots.samples, inputs.pilots.noise_power)
    return ToeplitzCol(col).expand(), {'noise_power': inputs.pilots.noise_power}


def _nnls(inputs):
    config = inputs.config
    order = config.music_order if config.music_order == 'auto' else int(config.music_order)
    return MimoEstimationService.estimate_nnls(
        inputs.pilots, inputs.ula,
        dictionary_kind=config.dictionary,
        G=config.dictionary_size or None,
        order=order
    )


ESTIMATORS = {
    'sample': ('real', _sample, 'Sample covariance (1/n)·Σ x xᵀ'),
    'masked': ('real', _masked, 'Banded-mask sample covariance (MASK_WIDTH diagonals)'),
    'threshold': ('real', _threshold, "Hard-thresholded sample covariance, τ = M'·√(log p/n)"),
    'toeplitz': ('real', _toeplitz, 'Diagonal-averaged (Toeplitz) sample covariance'),
    'toeplitz-threshold': ('real', _toeplitz_threshold, 'Thresholded, ⌊αp⌋-banded Toeplitz average'),
    'lasso': ('real', _lasso, 'Nuclear-norm penalized (low-rank) estimator'),
    'sign': ('real', _sign, 'One-bit sign estimator sin((π/2)·BᵀB/n)'),
    'sign-psd': ('real', _sign_psd, 'Sign estimator projected onto the PSD cone'),
    'dithered': ('real', _dithered, 'Two-bit dithered estimator λ²·AᵀB/n'),
    'dithered-psd': ('real', _dithered_psd, 'Dithered estimator projected onto the PSD cone'),
    'mimo-sample': ('mimo', _mimo_sample, 'Sample covariance of the pilots minus N0·I'),
    'mimo-toeplitz': ('mimo', _mimo_toeplitz, 'Toeplitz projection of the noise-removed sample covariance'),
    'nnls': ('mimo', _nnls, 'MUSIC spikes + dictionary NNLS fit'),
}

# estimators that only see correlations are scored against the correlation matrix
CORRELATION_TARGETS = ('sign', 'sign-psd')

METRICS = ('operator', 'frobenius', 'enf', 'epe')


@lru_cache(maxsize=64)
def _channel_truth(asf, ula):
    """Σ_h and its eigendecomposition; shared by all realizations of one ASF"""
    truth = ChannelService.true_covariance(asf, ula)
    return truth, eig(truth)


def _metric_values(config, truth, estimate, truth_decomp=None):
    values = {}
    for metric in config.metrics:
        if metric == 'operator':
            values['operator'] = op_norm(estimate - truth)
        elif metric == 'frobenius':
            values['frobenius'] = float(np.linalg.norm(estimate.entries - truth.entries))
        elif metric == 'enf':
            values['enf'] = MimoEstimationService.metric_enf(truth, estimate)
        else:
            dims = config.subspace_dims(truth.dim)
            profile = MimoEstimationService.metric_epe_profile(truth, estimate, dims, truth_decomp)
            values.update({f'epe@{d}': value for d, value in profile.items()})
    return values


def _metric_names(config, dim):
    names = []
    for metric in config.metrics:
        if metric == 'epe':
            names.extend(f'epe@{d}' for d in config.subspace_dims(dim))
        else:
            names.append(metric)
    return names


class ExperimentService:
    """Monte-Carlo sweeps over estimator, grid point and trial"""

    @staticmethod
    def list_estimators():
        return [(name, family, description) for name, (family, _, description) in ESTIMATORS.items()]

    @staticmethod
    def validate(config):
        """Reject configurations a sweep cannot run"""
        if config.experiment not in config.EXPERIMENTS:
            raise ConfigError('experiment', f'unknown experiment {config.experiment!r}')
        if config.truth not in config.TRUTHS:
            raise ConfigError('truth', f'unknown truth {config.truth!r}')
        if config.trial_count < 1:
            raise ConfigError('trials', 'need at least one trial')
        if not config.dims or not config.samples:
            raise ConfigError('dims' if not config.dims else 'samples', 'grid axis is empty')
        if not config.estimators:
            raise ConfigError('estimators', 'no estimator selected')
        family = 'mimo' if config.is_mimo else 'real'
        for name in config.estimators:
            if name not in ESTIMATORS:
                raise ConfigError('estimators', f'unknown estimator {name!r}')
            if ESTIMATORS[name][0] != family:
                raise ConfigError('estimators', f'{name!r} does not apply to truth {config.truth!r}')
        for metric in config.metrics:
            if metric not in METRICS:
                raise ConfigError('metrics', f'unknown metric {metric!r}')
        if not config.is_mimo:
            for point in config.grid():
                p = int(point.get('p'))
                try:
                    config.truth_model(point).validate(p)
                except Exception as e:
                    raise ConfigError('truth', str(e))
        return config

    @staticmethod
    def stream_for(config, point, trial):
        return RngStream(config.seed, point.base_index * config.trial_count + trial)

    @staticmethod
    def run_trial(config, point, trial):
        """All estimators and metrics of one trial at one grid point"""
        stream = ExperimentService.stream_for(config, point, trial)
        base_meta = {**config.metadata(point), **point.to_dict()}

        try:
            if config.is_mimo:
                inputs, truth_decomp = ExperimentService._channel_inputs(config, point, trial, stream)
                base_meta.update({'asf': trial // config.realizations,
                                  'realization': trial % config.realizations})
            else:
                inputs = ExperimentService._real_inputs(config, point, stream)
                truth_decomp = None
        except Exception as e:
            return [row for name in config.estimators
                    for row in ExperimentService._failed_rows(config, point, trial, name, e, base_meta)]

        rows = []
        for name in config.estimators:
            started = time.perf_counter()
            try:
                estimate, meta = ESTIMATORS[name][1](inputs)
                target = inputs.truth
                if name in CORRELATION_TARGETS:
                    target = correlation_normalize(inputs.truth)
                values = _metric_values(config, target, estimate, truth_decomp if target is inputs.truth else None)
            except Exception as e:
                rows.extend(ExperimentService._failed_rows(config, point, trial, name, e, base_meta))
                continue

            elapsed = time.perf_counter() - started if config.record_wall_time else 0.0
            metadata = {**base_meta, **meta}
            rows.extend(
                ResultRow(config.label, trial, point.label, name, metric, float(value),
                          elapsed, metadata)
                for metric, value in values.items()
            )
        return rows

    @staticmethod
    def _real_inputs(config, point, stream):
        p, n = int(point.get('p')), int(point.get('n'))
        model = config.truth_model(point)
        truth = SynthService.realize(model, p, stream.substream(LANE_TRUTH))
        batch = SynthService.sample_gaussian(truth, n, stream.substream(LANE_SAMPLES))
        return TrialInputs(config=config, point=point, stream=stream, truth=truth, batch=batch)

    @staticmethod
    def _channel_inputs(config, point, trial, stream):
        ula = UlaConfig(int(point.get('M')), config.spacing_ratio)
        asf_stream = RngStream(config.seed, trial // config.realizations, LANE_ASF)
        asf = ChannelService.random_asf(asf_stream)
        truth, truth_decomp = _channel_truth(asf, ula)
        pilots = ChannelService.simulate_pilots(asf, ula, int(point.get('N')), config.snr_db,
                                                stream.substream(LANE_SAMPLES))
        inputs = TrialInputs(config=config, point=point, stream=stream, truth=truth,
                             pilots=pilots, ula=ula)
        return inputs, truth_decomp

    @staticmethod
    def _failed_rows(config, point, trial, name, error, base_meta):
        ExperimentErrorHandler.log_trial_error(config.label, point.label, trial, name, error)
        metadata = {**base_meta, 'error_code': ExperimentErrorHandler.error_code_of(error),
                    'error': str(error)}
        dim = int(point.get('p', point.get('M', 1)))
        return [
            ResultRow(config.label, trial, point.label, name, metric, math.nan, 0.0, metadata, 'failed')
            for metric in _metric_names(config, dim)
        ]

    @staticmethod
    def run(config, workers=None, output=None):
        """
        Run every grid point × trial and stream the rows into the result CSV.

        Args:
            config (ExperimentConfig): validated sweep
            workers (int): process count, Config.WORKERS by default
            output (str): CSV path, config.output_path by default
        Returns:
            list[ResultRow]: rows in grid-point, trial, estimator, metric order
        """
        ExperimentService.validate(config)
        workers = max(1, int(workers or Config.WORKERS))
        path = output or config.output_path
        grid = config.grid()
        items = [(point, trial) for point in grid for trial in range(config.trial_count)]
        logger.info(f"Running {config.label}: {len(grid)} grid points x {config.trial_count} trials "
                    f"on {workers} worker(s) -> {path}")

        rows = []
        with ResultCsvSink(path) as sink:
            if workers == 1:
                batches = (ExperimentService.run_trial(config, point, trial) for point, trial in items)
                ExperimentService._drain(batches, sink, rows, config)
            else:
                chunk = max(1, len(items) // (workers * 8))
                with ProcessPoolExecutor(max_workers=workers) as executor:
                    batches = executor.map(_run_work_item, [(config, p, t) for p, t in items],
                                           chunksize=chunk)
                    ExperimentService._drain(batches, sink, rows, config)

        failures = sum(1 for row in rows if not row.ok)
        logger.info(f"Finished {config.label}: {len(rows)} rows, {failures} failed")
        return rows

    @staticmethod
    def _drain(batches, sink, rows, config):
        per_point = config.trial_count
        for index, batch in enumerate(batches, start=1):
            sink.write_rows(batch)
            rows.extend(batch)
            if index % per_point == 0:
                logger.info(f"Grid point {index // per_point} complete ({batch[0].grid_point if batch else ''})")

    @staticmethod
    def summarize(rows, best_over=None):
        """
        Mean and standard error per (experiment, grid point, estimator, metric).

        Failed rows are counted in `failures` and left out of the statistics.
        With best_over, the axis is minimized away: every other grid coordinate keeps
        the value of that axis with the smallest mean.
        """
        if not rows:
            raise EmptyResultError('no result rows to summarize')
        frame = pd.DataFrame([row.to_dict() for row in rows])
        keys = ['experiment', 'grid_point', 'estimator', 'metric']
        frame['failed'] = frame['status'] != 'ok'

        ok = frame[~frame['failed']]
        stats = ok.groupby(keys, sort=False)['value'].agg(mean='mean', std='std', count='count').reset_index()
        failures = frame.groupby(keys, sort=False)['failed'].sum().rename('failures').reset_index()
        table = failures.merge(stats, on=keys, how='left')

        empty = table['count'].isna() | (table['count'] == 0)
        if empty.any():
            logger.warning(f"{int(empty.sum())} group(s) have no successful rows and are dropped")
        table = table[~empty].copy()
        if table.empty:
            raise EmptyResultError('every result row failed')

        table['count'] = table['count'].astype(int)
        table['failures'] = table['failures'].astype(int)
        table['sem'] = np.where(table['count'] > 1,
                                table['std'].fillna(0.0) / np.sqrt(table['count']), 0.0)
        table = table.drop(columns='std')

        axes = table['grid_point'].apply(ExperimentService.parse_grid_point).apply(pd.Series)
        table = pd.concat([table, axes], axis=1)

        if best_over:
            table = ExperimentService._best_over(table, best_over, list(axes.columns))
        return table.reset_index(drop=True)

    @staticmethod
    def parse_grid_point(label):
        """'p=20;n=50' -> {'p': 20.0, 'n': 50.0}"""
        values = {}
        for part in filter(None, label.split(';')):
            name, _, value = part.partition('=')
            values[name] = float(value)
        return values

    @staticmethod
    def _best_over(table, axis, axis_columns):
        if axis not in table.columns:
            raise ConfigError('best_over', f'grid has no {axis!r} axis')
        others = [c for c in axis_columns if c != axis]
        table = table.copy()
        table['grid_point'] = table[others].apply(
            lambda row: ';'.join(f'{name}={row[name]:g}' for name in others), axis=1)
        keys = ['experiment', 'grid_point', 'estimator', 'metric']
        best = table.loc[table.groupby(keys, sort=False)['mean'].idxmin()]
        return best.rename(columns={axis: f'best_{axis}'})


def _run_work_item(item):
    config, point, trial = item
    return ExperimentService.run_trial(config, point, trial)
