"""
Quantization Service for covest
One-bit and dithered quantizers, their covariance estimators, and the
constant-free diagnostics of the one-bit error bounds
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from covest.models.batch_model import BitBatch, DitheredBatch
from covest.models.matrix_model import SymMatrix, Mask
from covest.services.error_handling_service import (
    EmptyBatchError, InvalidParameterError, OutOfRangeError
)
from covest.utils.matrix_utils import check_finite, hadamard, norms, op_norm, psd_project

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SignDiagnostics:
    """Quantities entering the one-bit operator-norm bounds (constant-free)"""
    A: SymMatrix
    sigma_ma_norm: float
    masked_a_norm: float
    masked_sigma_norm: float
    lower_second: float
    lower_third: float
    p: int

    def thm_upper(self, t, n):
        """‖σ(M⊙A)‖·√((log p + t)/n) + max{‖M⊙A‖, ‖M⊙Σ‖}·(log p + t)/n"""
        ratio = (math.log(self.p) + t) / n
        return self.sigma_ma_norm * math.sqrt(ratio) + \
            max(self.masked_a_norm, self.masked_sigma_norm) * ratio

    def prop_lower(self, n):
        """The three lower-bound terms, each already divided by its power of n"""
        return {
            'variance': self.sigma_ma_norm / math.sqrt(n),
            'bias': self.lower_second / n,
            'curvature': self.lower_third / n
        }

    def to_dict(self):
        return {
            'sigma_ma_norm': self.sigma_ma_norm,
            'masked_a_norm': self.masked_a_norm,
            'masked_sigma_norm': self.masked_sigma_norm,
            'p': self.p
        }


class QuantizationService:
    """One-bit and dithered quantization of sample batches"""

    # entries of a correlation matrix may overshoot ±1 by rounding
    RANGE_SLACK = 1e-12

    @staticmethod
    def quantize_sign(batch):
        """Entrywise sign with sign(0) = +1"""
        check_finite(batch.values, 'sample batch')
        return BitBatch(QuantizationService.sign(batch.values))

    @staticmethod
    def sign(values):
        return np.where(np.asarray(values) >= 0, 1, -1).astype(np.int8)

    @staticmethod
    def quantize_dithered(batch, lam, rng):
        """
        Two bit blocks sign(x + τ), sign(x + τ̄) with τ, τ̄ ~ Unif[−λ, λ]^p
        drawn independently per sample; the dithers are discarded.
        """
        if not lam > 0:
            raise InvalidParameterError(f'dither level must be positive, got {lam}')
        check_finite(batch.values, 'sample batch')
        shape = batch.values.shape
        dither_a = rng.uniform(-lam, lam, shape)
        dither_b = rng.uniform(-lam, lam, shape)
        return DitheredBatch(
            bits_a=QuantizationService.sign(batch.values + dither_a),
            bits_b=QuantizationService.sign(batch.values + dither_b),
            dither_level=lam
        )

    @staticmethod
    def sign_estimator(bits, mask=None):
        """sin((π/2)·BᵀB/n), optionally masked"""
        if bits.n < 1:
            raise EmptyBatchError('sign estimator needs at least one sample')
        b = bits.bits.astype(float)
        estimate = SymMatrix(np.sin(0.5 * np.pi * (b.T @ b) / bits.n))
        return hadamard(estimate, mask) if mask is not None else estimate

    @staticmethod
    def dithered_estimator(d, mask=None):
        """Symmetric part of (λ²/n)·Σ_k sign(x_k + τ_k) sign(x_k + τ̄_k)ᵀ"""
        if d.n < 1:
            raise EmptyBatchError('dithered estimator needs at least one sample')
        a = d.bits_a.astype(float)
        b = d.bits_b.astype(float)
        estimate = SymMatrix(d.dither_level ** 2 * (a.T @ b) / d.n)
        return hadamard(estimate, mask) if mask is not None else estimate

    @staticmethod
    def _check_correlation(sigma):
        entries = sigma.entries
        slack = QuantizationService.RANGE_SLACK
        if np.any(np.abs(entries) > 1.0 + slack):
            raise OutOfRangeError('correlation entries must lie in [-1, 1]')
        if np.any(np.abs(entries.diagonal() - 1.0) > slack):
            raise OutOfRangeError('arcsin law needs a unit diagonal')
        return np.clip(entries, -1.0, 1.0)

    @staticmethod
    def arcsin_law(sigma):
        """Γ = (2/π)·arcsin(Σ) for a unit-diagonal Σ"""
        return SymMatrix(2.0 / np.pi * np.arcsin(QuantizationService._check_correlation(sigma)))

    @staticmethod
    def inverse_arcsin_law(gamma):
        """Σ = sin((π/2)·Γ)"""
        return SymMatrix(np.sin(0.5 * np.pi * gamma.entries))

    @staticmethod
    def dither_level_rule(sigma_max, n, c_lambda=1.0):
        """
        λ = √(c_λ·log n·‖Σ‖_∞).

        Args:
            sigma_max: ‖Σ‖_∞ as a float, or a SymMatrix whose max-norm is used
            n (int): sample count, at least 2
            c_lambda (float): positive scaling
        """
        if n < 2:
            raise InvalidParameterError(f'dither rule needs n >= 2, got {n}')
        if not c_lambda > 0:
            raise InvalidParameterError(f'c_lambda must be positive, got {c_lambda}')
        level = float(np.max(np.abs(sigma_max.entries))) if hasattr(sigma_max, 'entries') else float(sigma_max)
        if not level > 0:
            raise InvalidParameterError(f'max-norm must be positive, got {level}')
        return math.sqrt(c_lambda * math.log(n) * level)

    @staticmethod
    def sigma_squared(z, arcsin_sigma):
        """σ(Z)² = (2/π)·Z²⊙arcsin(Σ) − (4/π²)·(Z⊙arcsin(Σ))²"""
        z = np.asarray(z, dtype=float)
        masked = z * arcsin_sigma
        return 2.0 / np.pi * (z @ z) * arcsin_sigma - 4.0 / np.pi ** 2 * (masked @ masked)

    @staticmethod
    def sign_diagnostics(sigma, mask=None):
        """A = cos(arcsin Σ) and the norms entering the one-bit bounds"""
        entries = QuantizationService._check_correlation(sigma)
        p = sigma.dim
        mask_entries = (mask or Mask.ones(p)).entries
        arcsin_sigma = np.arcsin(entries)
        a = np.cos(arcsin_sigma)
        gamma = 2.0 / np.pi * arcsin_sigma

        sigma_ma = QuantizationService.sigma_squared(mask_entries * a, arcsin_sigma)
        sigma_ms = QuantizationService.sigma_squared(mask_entries * entries, arcsin_sigma)
        bias = mask_entries * entries * (1.0 - gamma ** 2)

        return SignDiagnostics(
            A=SymMatrix(a),
            sigma_ma_norm=math.sqrt(max(op_norm(SymMatrix(sigma_ma)), 0.0)),
            masked_a_norm=op_norm(SymMatrix(mask_entries * a)),
            masked_sigma_norm=op_norm(SymMatrix(mask_entries * entries)),
            lower_second=op_norm(SymMatrix(bias)),
            lower_third=math.sqrt(op_norm(SymMatrix(sigma_ms * gamma))),
            p=p
        )

    @staticmethod
    def sign_simplified_bound(sigma, n, t=0.0):
        """max{‖cos(arcsin Σ)‖, ‖Σ‖}·(√((log p + t)/n) + (log p + t)/n), unmasked"""
        entries = QuantizationService._check_correlation(sigma)
        ratio = (math.log(sigma.dim) + t) / n
        scale = max(op_norm(SymMatrix(np.cos(np.arcsin(entries)))), op_norm(sigma))
        return scale * (math.sqrt(ratio) + ratio)

    @staticmethod
    def dithered_bound(sigma, lam, n, t=0.0, mask=None):
        """‖M‖_{1→2}(λ‖Σ‖^{1/2} + λ²)√((log p + t)/n) + λ²‖M‖(log p + t)/n"""
        p = sigma.dim
        mask_norms = norms(SymMatrix((mask or Mask.ones(p)).entries))
        ratio = (math.log(p) + t) / n
        return mask_norms.col12 * (lam * math.sqrt(op_norm(sigma)) + lam ** 2) * math.sqrt(ratio) + \
            lam ** 2 * mask_norms.op * ratio

    @staticmethod
    def psd_projected(estimate):
        return psd_project(estimate)
