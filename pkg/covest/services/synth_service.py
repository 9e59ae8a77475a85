"""
Synthesis Service for covest
Seeded ground-truth covariances and i.i.d. Gaussian sample batches
"""

import logging

import numpy as np

from covest.models.batch_model import SampleBatch, ComplexSampleBatch
from covest.models.covariance_model import (
    ConstCorr, BandedToeplitz, SparseRandom, LowRankPlusRidge, Explicit, ScaledModel,
    const_corr_matrix
)
from covest.models.matrix_model import SymMatrix, HermMatrix, ToeplitzCol
from covest.services.error_handling_service import InvalidParameterError
from covest.utils.matrix_utils import cholesky, eig_sym

logger = logging.getLogger(__name__)


class SynthService:
    """Ground-truth realization and Gaussian sampling"""

    # Tolerance for accepting user-supplied truths as PSD
    PSD_TOLERANCE = 1e-10

    @staticmethod
    def realize(model, p, rng=None):
        """
        Realize a covariance model at dimension p.

        Args:
            model: one of the CovModel variants
            p (int): dimension
            rng (RngStream): required by the random variants
        Returns:
            SymMatrix: PSD ground truth
        """
        if p < 1:
            raise InvalidParameterError(f'dimension must be positive, got {p}')
        model.validate(p)

        if isinstance(model, ConstCorr):
            return SymMatrix(const_corr_matrix(model.c, p))

        if isinstance(model, BandedToeplitz):
            col = np.zeros(p)
            width = min(model.bandwidth, len(model.col), p)
            col[:width] = model.col[:width]
            truth = ToeplitzCol(col).expand()
            return SynthService._require_psd(truth, model)

        if isinstance(model, SparseRandom):
            return SynthService._sparse_random(model, p, SynthService._need_rng(rng, model))

        if isinstance(model, LowRankPlusRidge):
            factor = SynthService._need_rng(rng, model).standard_normal((p, model.rank))
            return SymMatrix(factor @ factor.T / model.rank + model.ridge * np.eye(p))

        if isinstance(model, Explicit):
            return SynthService._require_psd(model.matrix, model)

        if isinstance(model, ScaledModel):
            base = SynthService.realize(model.base, p, rng)
            scales = np.asarray(model.scales, dtype=float)
            return SymMatrix(base.entries * np.outer(scales, scales))

        raise InvalidParameterError(f'unknown covariance model {model!r}')

    @staticmethod
    def _need_rng(rng, model):
        if rng is None:
            raise InvalidParameterError(f'{model.label()} needs a random stream')
        return rng

    @staticmethod
    def _require_psd(matrix, model):
        values = eig_sym(matrix).values
        if values[-1] < -SynthService.PSD_TOLERANCE * max(1.0, abs(values[0])):
            raise InvalidParameterError(f'{model.label()} is not PSD (min eigenvalue {values[-1]:.3g})')
        return matrix

    @staticmethod
    def _sparse_random(model, p, rng):
        """
        s rounds of random pairings: every row gains at most one partner per round.
        Diagonal is 1, lifted to 1 + |λ_min(off-diagonal part)| when needed.
        """
        off = np.zeros((p, p))
        for k in range(1, model.s + 1):
            perm = rng.permutation(p)
            rows, cols = perm[0:p - 1:2], perm[1:p:2]
            magnitude = model.bound if model.q == 0 else model.bound * k ** (-1.0 / model.q)
            values = magnitude * rng.signs(rows.size)
            fresh = off[rows, cols] == 0.0
            off[rows[fresh], cols[fresh]] = values[fresh]
            off[cols[fresh], rows[fresh]] = values[fresh]

        lowest = eig_sym(SymMatrix(off)).values[-1]
        diagonal = 1.0 if lowest >= -1.0 else 1.0 + abs(lowest)
        return SymMatrix(off + diagonal * np.eye(p))

    @staticmethod
    def sample_gaussian(sigma, n, rng):
        """n i.i.d. rows from N(0, Σ) as standard normals times the Cholesky factor"""
        if n < 0:
            raise InvalidParameterError(f'sample count must be >= 0, got {n}')
        low = cholesky(sigma)
        normals = rng.standard_normal((n, sigma.dim))
        return SampleBatch(normals @ low.T)

    @staticmethod
    def sample_complex_gaussian(sigma, n, rng):
        """n i.i.d. circularly-symmetric rows from CN(0, Σ)"""
        if n < 0:
            raise InvalidParameterError(f'sample count must be >= 0, got {n}')
        if not isinstance(sigma, HermMatrix):
            sigma = HermMatrix(sigma.entries)
        low = cholesky(sigma)
        normals = rng.complex_normal((n, sigma.dim))
        return ComplexSampleBatch(normals @ low.T)
