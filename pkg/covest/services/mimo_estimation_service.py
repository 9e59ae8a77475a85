"""
MIMO Estimation Service for covest
Handles MUSIC spike detection, dictionary construction, Toeplitz denoising,
the weighted NNLS fit and the channel-covariance error metrics
"""

import logging

import numpy as np
from scipy.stats import laplace, norm

from config import Config
from covest.models.matrix_model import HermMatrix, ToeplitzCol
from covest.models.mimo_model import Dictionary, NnlsProblem
from covest.services.channel_service import ChannelService
from covest.services.error_handling_service import (
    DimensionMismatchError, InvalidParameterError, NotPSDError, OrderTooLargeError, ZeroMatrixError
)
from covest.services.estimator_service import EstimatorService
from covest.utils.matrix_utils import eig, eig_herm, is_psd, toeplitz_project
from covest.utils.nnls_utils import lawson_hanson

logger = logging.getLogger(__name__)


class MimoEstimationService:
    """Channel covariance estimation from pilot observations"""

    DICTIONARY_KINDS = ('dirac', 'gaussian', 'laplacian', 'rect')

    # atoms are spectrally checked on construction up to this array size
    DICTIONARY_CHECK_MAX_M = 8

    @staticmethod
    def periodic_grid(size, cfg):
        """Uniform grid on [−1, 1); both endpoints are kept for non-periodic arrays"""
        if size < 1:
            raise InvalidParameterError(f'grid size must be >= 1, got {size}')
        if cfg.periodic:
            return np.linspace(-1.0, 1.0, size, endpoint=False)
        return np.linspace(-1.0, 1.0, size)

    @staticmethod
    def music_order(values, M):
        """
        Largest k <= min(MUSIC_MAX_ORDER, M/4) with λ_k >= ρ·λ_{k+1}; 0 when no gap exists.

        Args:
            values (np.ndarray): eigenvalues, descending
            M (int): array size
        """
        cap = min(Config.MUSIC_MAX_ORDER, M // 4, values.size - 1)
        rho = Config.MUSIC_GAP_FACTOR
        for k in range(cap, 0, -1):
            if values[k - 1] > 0.0 and values[k - 1] >= rho * values[k]:
                return k
        return 0

    @staticmethod
    def music_pseudospectrum(noise_basis, grid, cfg):
        """P(ξ) = 1/‖E_noiseᴴ a(ξ)‖² on the grid"""
        projection = noise_basis.conj().T @ ChannelService.steering_matrix(grid, cfg)
        denominator = np.sum(np.abs(projection) ** 2, axis=0)
        return 1.0 / np.maximum(denominator, np.finfo(float).tiny)

    @staticmethod
    def music_spikes(samples, cfg, order='auto', grid_size=None):
        """
        MUSIC estimate of the spike locations.

        Args:
            samples (ComplexSampleBatch): pilot observations, one per row
            cfg (UlaConfig): array geometry
            order (int | str): number of spikes, or 'auto' for the spectral gap rule
            grid_size (int): pseudospectrum grid, MUSIC_GRID_FACTOR·M by default
        Returns:
            tuple: (sorted spike locations, order used)
        """
        M = cfg.M
        decomp = eig_herm(EstimatorService.sample_cov(samples))
        if order == 'auto':
            order = MimoEstimationService.music_order(decomp.values, M)
        order = int(order)
        if order >= M:
            raise OrderTooLargeError(f'model order {order} must be below M={M}', order=order, M=M)
        if order < 0:
            raise InvalidParameterError(f'model order must be >= 0, got {order}')
        if order == 0:
            return [], 0
        if samples.n < order + 1:
            raise InvalidParameterError(f'MUSIC with order {order} needs at least {order + 1} samples')

        grid = MimoEstimationService.periodic_grid(grid_size or Config.MUSIC_GRID_FACTOR * M, cfg)
        spectrum = MimoEstimationService.music_pseudospectrum(decomp.vectors[:, order:], grid, cfg)

        if cfg.periodic:
            left, right = np.roll(spectrum, 1), np.roll(spectrum, -1)
        else:
            left = np.concatenate([[-np.inf], spectrum[:-1]])
            right = np.concatenate([spectrum[1:], [-np.inf]])
        # plateaus report their leftmost point
        peaks = np.flatnonzero((spectrum > left) & (spectrum >= right))
        ranked = peaks[np.lexsort((peaks, -spectrum[peaks]))][:order]
        return sorted(float(grid[i]) for i in ranked), order

    @staticmethod
    def kernel_masses(kind, centers, width, cfg):
        """Unit-mass kernel masses on the quadrature cells, one column per center"""
        edges, _ = ChannelService.quadrature_grid(cfg)
        low, high = edges[:-1, None], edges[1:, None]
        centers = np.asarray(centers, dtype=float)[None, :]
        if kind == 'gaussian':
            masses = norm.cdf(high, loc=centers, scale=width) - norm.cdf(low, loc=centers, scale=width)
        elif kind == 'laplacian':
            scale = width / np.sqrt(2.0)
            masses = laplace.cdf(high, loc=centers, scale=scale) - laplace.cdf(low, loc=centers, scale=scale)
        else:
            masses = np.clip(np.minimum(high, centers + width / 2.0) -
                             np.maximum(low, centers - width / 2.0), 0.0, None)
        totals = masses.sum(axis=0)
        if np.any(totals <= 0.0):
            raise InvalidParameterError(f'{kind} kernel of width {width} has no mass inside [-1, 1]')
        return masses / totals

    @staticmethod
    def build_dictionary(kind, G, cfg, spikes=(), width=None):
        """
        Dictionary of Toeplitz atom columns: G grid atoms followed by one atom per spike.

        Dirac atoms are a(ξ_i) itself; continuous atoms integrate a unit-mass kernel of
        the given width (the grid spacing by default) against a(ξ) on the quadrature cells.
        """
        if kind not in MimoEstimationService.DICTIONARY_KINDS:
            raise InvalidParameterError(f'unknown dictionary kind {kind!r}')
        G = int(G)
        grid = MimoEstimationService.periodic_grid(G, cfg)

        if kind == 'dirac':
            atoms = ChannelService.steering_matrix(grid, cfg)
        else:
            width = 2.0 / G if width is None else float(width)
            if not width > 0:
                raise InvalidParameterError(f'kernel width must be positive, got {width}')
            _, mids = ChannelService.quadrature_grid(cfg)
            masses = MimoEstimationService.kernel_masses(kind, grid, width, cfg)
            atoms = ChannelService.steering_matrix(mids, cfg) @ masses

        spikes = np.asarray(list(spikes), dtype=float)
        if spikes.size:
            atoms = np.hstack([atoms, ChannelService.steering_matrix(spikes, cfg)])

        dictionary = Dictionary(kind=kind, size=G, atoms=atoms,
                                locations=np.concatenate([grid, spikes]), spike_count=spikes.size)
        if cfg.M <= MimoEstimationService.DICTIONARY_CHECK_MAX_M:
            for i in range(dictionary.columns):
                if not is_psd(ToeplitzCol(dictionary.atoms[:, i]).expand()):
                    raise NotPSDError(f'dictionary atom {i} is not positive semi-definite')
        return dictionary

    @staticmethod
    def sample_estimate(pilots):
        """Σ̂_y − N0·I"""
        sample = EstimatorService.sample_cov(pilots.samples)
        return sample - HermMatrix.identity(pilots.M) * pilots.noise_power

    @staticmethod
    def toeplitz_denoise(samples, noise_power):
        """First column of the Toeplitz projection of Σ̂_y − N0·I"""
        if not noise_power >= 0:
            raise InvalidParameterError(f'noise power must be >= 0, got {noise_power}')
        sample = EstimatorService.sample_cov(samples)
        denoised = sample - HermMatrix.identity(sample.dim) * noise_power
        return np.array(toeplitz_project(denoised).col, dtype=complex)

    @staticmethod
    def nnls_solve(problem, strict=False):
        """u* = argmin_{u >= 0} ‖W(S̃u − σ̃)‖² by Lawson–Hanson on the real lift"""
        matrix, rhs = problem.real_lift()
        return lawson_hanson(matrix, rhs, strict=strict)

    @staticmethod
    def assemble_estimate(dictionary, u):
        """Σ u_i S_i expanded from the atom columns"""
        u = np.asarray(u, dtype=float)
        if u.shape != (dictionary.columns,):
            raise DimensionMismatchError(f'{u.size} weights for {dictionary.columns} atoms')
        if np.any(u < 0):
            raise InvalidParameterError('atom weights must be non-negative')
        return ToeplitzCol(dictionary.atoms @ u).expand()

    @staticmethod
    def estimate_nnls(pilots, cfg, dictionary_kind='dirac', G=None, order='auto', width=None):
        """
        Full pipeline: MUSIC spikes, dictionary, Toeplitz denoising and the NNLS fit.

        Returns:
            tuple: (HermMatrix estimate, metadata dict)
        """
        G = 2 * cfg.M if G is None else int(G)
        spikes, used_order = MimoEstimationService.music_spikes(pilots.samples, cfg, order)
        dictionary = MimoEstimationService.build_dictionary(dictionary_kind, G, cfg, spikes, width)
        target = MimoEstimationService.toeplitz_denoise(pilots.samples, pilots.noise_power)
        result = MimoEstimationService.nnls_solve(NnlsProblem(atoms=dictionary.atoms, target=target))
        estimate = MimoEstimationService.assemble_estimate(dictionary, result.u)
        metadata = {
            'dictionary': dictionary_kind,
            'G': G,
            'music_order': used_order,
            'music_rule': 'auto' if order == 'auto' else 'fixed',
            'music_gap_factor': Config.MUSIC_GAP_FACTOR,
            'music_max_order': Config.MUSIC_MAX_ORDER,
            'spikes': [round(s, 6) for s in spikes],
            'noise_power': pilots.noise_power,
            **result.to_dict()
        }
        return estimate, metadata

    @staticmethod
    def metric_enf(truth, estimate):
        """‖Σ_h − Σ̄‖_F / ‖Σ_h‖_F"""
        scale = float(np.linalg.norm(truth.entries))
        if scale == 0.0:
            raise ZeroMatrixError('normalized error needs a nonzero truth')
        return float(np.linalg.norm(truth.entries - estimate.entries)) / scale

    @staticmethod
    def metric_epe(truth, estimate, d):
        return MimoEstimationService.metric_epe_profile(truth, estimate, [d])[d]

    @staticmethod
    def metric_epe_profile(truth, estimate, dims, truth_decomp=None):
        """
        E_PE(d) = 1 − ⟨Σ_h, Ū_d Ū_dᴴ⟩ / ⟨Σ_h, U_d U_dᴴ⟩ for every d in dims, clipped to [0, 1].

        Both eigendecompositions are computed once and shared across d.
        """
        M = truth.dim
        dims = [int(d) for d in dims]
        for d in dims:
            if not 1 <= d <= M:
                raise InvalidParameterError(f'subspace dimension must lie in [1, {M}], got {d}')
        truth_decomp = truth_decomp or eig(truth)
        estimate_vectors = eig(estimate).vectors

        captured = np.real(np.einsum('ij,ik,kj->j', estimate_vectors.conj(), truth.entries,
                                     estimate_vectors))
        captured_cumulative = np.cumsum(captured)
        best_cumulative = np.cumsum(truth_decomp.values)

        profile = {}
        for d in dims:
            best = best_cumulative[d - 1]
            if not best > 0.0:
                raise ZeroMatrixError('power efficiency needs positive dominant power')
            profile[d] = float(np.clip(1.0 - captured_cumulative[d - 1] / best, 0.0, 1.0))
        return profile
