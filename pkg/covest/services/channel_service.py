"""
Channel Service for covest
Handles the uniform linear array model, random angular scattering functions,
true channel covariances and pilot simulation
"""

import logging
import math

import numpy as np
from scipy.stats import norm

from config import Config
from covest.models.batch_model import ComplexSampleBatch
from covest.models.matrix_model import ToeplitzCol
from covest.models.mimo_model import AsfSpec, PilotBatch
from covest.services.error_handling_service import InvalidParameterError, OutOfRangeError

logger = logging.getLogger(__name__)


class ChannelService:
    """Massive-MIMO channel model on a uniform linear array"""

    # Random ASF recipe: r spikes, n_r rectangles, n_g Gaussians
    SPIKE_COUNT = 2
    RECT_COUNT = 2
    GAUSSIAN_COUNT = 2
    DEFAULT_ALPHA = 0.5
    RECT_WIDTH_RANGE = (0.1, 0.3)
    GAUSSIAN_MEAN_RANGE = (-0.7, 0.7)
    GAUSSIAN_STD_RANGE = (0.03, 0.04)

    @staticmethod
    def array_response(xi, cfg):
        """a(ξ)_m = exp(j·2π·(d/λ)·m·ξ), m = 0..M−1"""
        xi = float(xi)
        if not -1.0 <= xi <= 1.0:
            raise OutOfRangeError(f'angle {xi} outside [-1, 1]')
        return ChannelService.steering_matrix(np.array([xi]), cfg)[:, 0]

    @staticmethod
    def steering_matrix(locations, cfg):
        """M×K matrix whose columns are a(ξ_k)"""
        locations = np.asarray(locations, dtype=float)
        phase = 2.0 * np.pi * cfg.spacing_ratio * np.outer(np.arange(cfg.M), locations)
        return np.exp(1j * phase)

    @staticmethod
    def quadrature_grid(cfg):
        """Edges and midpoints of the QUADRATURE_FACTOR·M uniform cells covering [−1, 1]"""
        cells = Config.QUADRATURE_FACTOR * cfg.M
        edges = np.linspace(-1.0, 1.0, cells + 1)
        return edges, 0.5 * (edges[:-1] + edges[1:])

    @staticmethod
    def raw_cell_masses(asf, edges):
        """Exact mass of each rectangle and Gaussian inside every cell, before normalization"""
        low, high = edges[:-1], edges[1:]
        masses = np.zeros(low.size)
        for center, width in asf.rects:
            left, right = center - width / 2.0, center + width / 2.0
            masses += np.clip(np.minimum(high, right) - np.maximum(low, left), 0.0, None)
        for mean, std in asf.gaussians:
            masses += norm.cdf(high, loc=mean, scale=std) - norm.cdf(low, loc=mean, scale=std)
        return masses

    @staticmethod
    def continuous_masses(asf, cfg):
        """Cell midpoints and cell masses of γ_c; the masses sum to 1 − alpha"""
        edges, mids = ChannelService.quadrature_grid(cfg)
        if asf.alpha >= 1.0:
            return mids, np.zeros(mids.size)
        raw = ChannelService.raw_cell_masses(asf, edges)
        total = raw.sum()
        if not total > 0:
            raise InvalidParameterError('continuous part of the ASF has no mass inside [-1, 1]')
        return mids, (1.0 - asf.alpha) * raw / total

    @staticmethod
    def continuous_density(asf, xi):
        """Pointwise value of the normalized continuous density γ_c on [−1, 1]"""
        xi = np.asarray(xi, dtype=float)
        density = np.zeros(xi.shape)
        if asf.alpha >= 1.0:
            return density
        for center, width in asf.rects:
            density += (np.abs(xi - center) <= width / 2.0).astype(float)
        for mean, std in asf.gaussians:
            density += norm.pdf(xi, loc=mean, scale=std)
        total = ChannelService.raw_cell_masses(asf, np.array([-1.0, 1.0]))[0]
        return np.where(np.abs(xi) <= 1.0, (1.0 - asf.alpha) * density / total, 0.0)

    @staticmethod
    def atoms_of(asf, cfg):
        """Locations and masses of every channel atom: spikes first, then quadrature cells"""
        mids, masses = ChannelService.continuous_masses(asf, cfg)
        locations = np.concatenate([asf.spike_locations, mids])
        weights = np.concatenate([asf.spike_weights, masses])
        keep = weights > 0.0
        return locations[keep], weights[keep]

    @staticmethod
    def random_asf(rng, alpha=None, spikes=None, rects=None, gaussians=None):
        """
        Random ASF: spikes uniform on [−1, 1] with weight α/r each, rectangles
        alternating between centers in [−1, 0] and [0, 1], narrow Gaussians.
        """
        alpha = ChannelService.DEFAULT_ALPHA if alpha is None else float(alpha)
        r = ChannelService.SPIKE_COUNT if spikes is None else int(spikes)
        n_r = ChannelService.RECT_COUNT if rects is None else int(rects)
        n_g = ChannelService.GAUSSIAN_COUNT if gaussians is None else int(gaussians)
        if not 0.0 <= alpha <= 1.0 or min(r, n_r, n_g) < 0:
            raise InvalidParameterError('random ASF needs alpha in [0, 1] and non-negative counts')
        if alpha > 0.0 and r == 0:
            raise InvalidParameterError('spike power alpha > 0 needs at least one spike')
        if alpha < 1.0 and n_r + n_g == 0:
            raise InvalidParameterError('continuous power 1 - alpha needs a rectangle or gaussian')

        spike_list = ()
        if alpha > 0.0 and r > 0:
            locations = rng.uniform(-1.0, 1.0, r)
            spike_list = tuple((float(loc), alpha / r) for loc in locations)

        rect_list, gaussian_list = (), ()
        if alpha < 1.0:
            halves = np.where(np.arange(n_r) % 2 == 0, -1.0, 0.0)
            centers = halves + rng.uniform(0.0, 1.0, n_r)
            widths = rng.uniform(*ChannelService.RECT_WIDTH_RANGE, n_r)
            rect_list = tuple((float(c), float(w)) for c, w in zip(centers, widths))
            means = rng.uniform(*ChannelService.GAUSSIAN_MEAN_RANGE, n_g)
            stds = rng.uniform(*ChannelService.GAUSSIAN_STD_RANGE, n_g)
            gaussian_list = tuple((float(m), float(s)) for m, s in zip(means, stds))

        return AsfSpec(spikes=spike_list, rects=rect_list, gaussians=gaussian_list, alpha=alpha)

    @staticmethod
    def true_covariance(asf, cfg):
        """Σ_h = Σ_k c_k a(ξ_k)a(ξ_k)ᴴ + ∫γ_c a aᴴ dξ as a Hermitian Toeplitz matrix"""
        locations, weights = ChannelService.atoms_of(asf, cfg)
        col = ChannelService.steering_matrix(locations, cfg) @ weights
        return ToeplitzCol(col.astype(complex)).expand()

    @staticmethod
    def noise_power(sigma_h, snr_db):
        """N0 = tr(Σ_h)/M / 10^(snr/10); zero for an infinite SNR"""
        if math.isinf(snr_db) and snr_db > 0:
            return 0.0
        per_antenna = float(np.real(np.trace(sigma_h.entries))) / sigma_h.dim
        return per_antenna / 10.0 ** (snr_db / 10.0)

    @staticmethod
    def simulate_pilots(asf, cfg, N, snr_db, rng):
        """
        N pilot observations y(s) = h(s) + z(s) with unit pilots.

        h(s) = Σ_i √(mass_i)·g_i·a(ξ_i) over spike and quadrature atoms, g_i ~ CN(0, 1),
        and z(s) ~ CN(0, N0·I).

        Returns:
            PilotBatch: samples (N×M) and the noise power N0
        """
        if N < 1:
            raise InvalidParameterError(f'pilot count must be >= 1, got {N}')
        locations, weights = ChannelService.atoms_of(asf, cfg)
        steering = ChannelService.steering_matrix(locations, cfg)
        gains = rng.complex_normal((N, weights.size)) * np.sqrt(weights)
        channels = gains @ steering.T

        total_power = float(np.sum(weights))
        n0 = 0.0 if math.isinf(snr_db) and snr_db > 0 else total_power / 10.0 ** (snr_db / 10.0)
        observations = channels
        if n0 > 0.0:
            observations = channels + math.sqrt(n0) * rng.complex_normal((N, cfg.M))
        return PilotBatch(samples=ComplexSampleBatch(observations), noise_power=n0, snr_db=snr_db)
