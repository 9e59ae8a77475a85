"""
Estimator Service for covest
Sample, masked, thresholded, banded, Toeplitz and low-rank covariance estimators,
their tuning rules, and constant-free evaluators of the matching error bounds
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from covest.models.batch_model import ComplexSampleBatch
from covest.models.covariance_model import ToeplitzRule
from covest.models.matrix_model import SymMatrix, HermMatrix, ToeplitzCol, Mask
from covest.services.error_handling_service import (
    EmptyBatchError, InvalidParameterError, ZeroMatrixError
)
from covest.utils.matrix_utils import (
    eig_sym, hadamard, norms, op_norm, psd_project, toeplitz_project
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundValue:
    """Right-hand side of an error bound, absolute constant set to 1 unless overridden"""
    kind: str
    value: float
    terms: dict = field(default_factory=dict)
    constant_free: bool = True

    def to_dict(self):
        return {'kind': self.kind, 'value': self.value, 'terms': dict(self.terms),
                'constant_free': self.constant_free}


class EstimatorService:
    """Classical (un-quantized) structured covariance estimators"""

    BOUND_KINDS = (
        'gauss', 'chen', 'koltchinskii', 'kabanava',
        'bickel', 'lounici', 'toeplitz_threshold', 'koltchinskii_expectation', 'banding_tail'
    )

    @staticmethod
    def sample_cov(batch, center=False):
        """
        (1/n)·Σ_k x_k x_kᵀ (Hermitian x_k x_kᴴ for complex batches).

        Args:
            batch (SampleBatch | ComplexSampleBatch): samples as rows
            center (bool): subtract the sample mean first; off by default
        Returns:
            SymMatrix | HermMatrix
        """
        if batch.n < 1:
            raise EmptyBatchError('sample covariance needs at least one sample')
        values = batch.values
        if center:
            values = values - values.mean(axis=0)
        gram = values.T @ values.conj() / batch.n
        if isinstance(batch, ComplexSampleBatch):
            return HermMatrix(gram)
        return SymMatrix(gram)

    @staticmethod
    def masked_cov(batch, mask, center=False):
        return hadamard(EstimatorService.sample_cov(batch, center), mask)

    @staticmethod
    def threshold(a, tau):
        """Hard threshold: keep entries with |a_ij| >= tau"""
        if not tau >= 0:
            raise InvalidParameterError(f'threshold must be >= 0, got {tau}')
        entries = a.entries
        return type(a)(np.where(np.abs(entries) >= tau, entries, 0.0))

    @staticmethod
    def thresholded_cov(batch, rule, center=False):
        tau = rule.resolve(batch.n, batch.p)
        return EstimatorService.threshold(EstimatorService.sample_cov(batch, center), tau)

    @staticmethod
    def band(a, width):
        """Keep entries with |i − j| + 1 <= width (SymMatrix, HermMatrix or ToeplitzCol)"""
        p = a.dim
        if not 1 <= width <= p:
            raise InvalidParameterError(f'band width must lie in [1, {p}], got {width}')
        if isinstance(a, ToeplitzCol):
            col = np.array(a.col)
            col[width:] = 0
            return ToeplitzCol(col)
        return hadamard(a, Mask.banded(p, width))

    @staticmethod
    def toeplitz_cov(batch, center=False):
        """Diagonal averages of the sample covariance"""
        return toeplitz_project(EstimatorService.sample_cov(batch, center))

    @staticmethod
    def toeplitz_thresholded_cov(batch, rule, center=False):
        """Threshold at τ(rule) the ⌊αp⌋-banded Toeplitz average"""
        if not isinstance(rule, ToeplitzRule):
            raise InvalidParameterError('thresholded Toeplitz estimation needs a ToeplitzRule')
        col = EstimatorService.toeplitz_cov(batch, center)
        banded = EstimatorService.band(col, rule.band_width(batch.p))
        return EstimatorService.threshold(banded.expand(), rule.resolve(batch.n, batch.p))

    @staticmethod
    def lasso_lowrank_cov(batch, lam, center=False):
        """
        argmin over PSD S of ‖S − Σ̂‖_F² + λ‖S‖_*, i.e. eigenvalues max(d_i − λ/2, 0).
        """
        if not lam >= 0:
            raise InvalidParameterError(f'regularizer must be >= 0, got {lam}')
        sample = EstimatorService.sample_cov(batch, center)
        return EstimatorService.soft_threshold_spectrum(sample, lam / 2.0)

    @staticmethod
    def soft_threshold_spectrum(a, shift):
        decomp = eig_sym(a)
        return SymMatrix(decomp.reconstruct(np.maximum(decomp.values - shift, 0.0)))

    @staticmethod
    def lounici_lambda(batch, C=1.0, center=False):
        """λ = C·√(tr(Σ̂)·‖Σ̂‖)·√(log(2p)/n)"""
        if C < 0:
            raise InvalidParameterError(f'C must be >= 0, got {C}')
        sample = EstimatorService.sample_cov(batch, center)
        sample_norms = norms(sample)
        return C * math.sqrt(max(sample_norms.trace, 0.0) * sample_norms.op) * \
            math.sqrt(math.log(2 * batch.p) / batch.n)

    @staticmethod
    def effective_rank(a):
        """‖A‖_* / ‖A‖"""
        matrix_norms = norms(a)
        if matrix_norms.op == 0.0:
            raise ZeroMatrixError('effective rank of the zero matrix is undefined')
        return matrix_norms.nuclear / matrix_norms.op

    @staticmethod
    def mask_weighted_norms(m):
        """
        Weighted norms of a Toeplitz mask column:
        l1star = Σ_r m_r/(p − r), l2star = (Σ_r m_r²/(p − r))^{1/2}, r = 0..p−1
        """
        col = np.asarray(m.col if isinstance(m, ToeplitzCol) else m, dtype=float)
        if np.any(col < 0) or np.any(col > 1):
            raise InvalidParameterError('mask column entries must lie in [0, 1]')
        weights = 1.0 / (col.size - np.arange(col.size))
        return {
            'l1star': float(np.sum(col * weights)),
            'l2star': float(math.sqrt(np.sum(col ** 2 * weights)))
        }

    @staticmethod
    def bound_eval(kind, sigma, **params):
        """
        Evaluate the right-hand side of a covariance error bound.

        Args:
            kind (str): one of BOUND_KINDS
            sigma (SymMatrix): true covariance
            **params: n, t, mask, m (Toeplitz mask column), s, q, C, K, c, alpha,
                      u, constant (multiplies the result, default 1)
        Returns:
            BoundValue
        """
        if kind not in EstimatorService.BOUND_KINDS:
            raise InvalidParameterError(f'unknown bound kind {kind!r}')
        p = sigma.dim
        n = params.get('n')
        if kind != 'banding_tail' and (n is None or n < 1):
            raise InvalidParameterError('bound evaluation needs n >= 1')
        t = float(params.get('t', 0.0))
        constant = float(params.get('constant', 1.0))
        sigma_norms = norms(sigma)
        op = sigma_norms.op

        if kind == 'gauss':
            ratio = (p + t) / n
            terms = {'deviation': op * math.sqrt(ratio), 'tail': op * ratio}

        elif kind == 'chen':
            mask = params.get('mask') or Mask.ones(p)
            mask_norms = norms(SymMatrix(mask.entries))
            if op == 0.0:
                raise ZeroMatrixError('bound needs a nonzero covariance')
            spread = sigma_norms.max / op
            log_p = math.log(p)
            terms = {
                'deviation': op * math.sqrt(spread * mask_norms.col12 ** 2 * log_p / n),
                'tail': op * spread * mask_norms.op * log_p * math.log(n * p) / n
            }

        elif kind == 'koltchinskii':
            rank = EstimatorService.effective_rank(sigma)
            terms = {
                'rank_deviation': op * math.sqrt(rank / n),
                'rank_tail': op * rank / n,
                'deviation': op * math.sqrt(t / n),
                'tail': op * t / n
            }

        elif kind == 'koltchinskii_expectation':
            trace = sigma_norms.trace
            terms = {'deviation': math.sqrt(op * trace / n), 'tail': trace / n}

        elif kind == 'kabanava':
            m = params.get('m')
            if m is None:
                raise InvalidParameterError('kabanava bound needs the Toeplitz mask column m')
            weighted = EstimatorService.mask_weighted_norms(m)
            log_p = math.log(p)
            terms = {
                'deviation': op * math.sqrt(weighted['l2star'] ** 2 * log_p / n),
                'tail': op * weighted['l1star'] * log_p / n
            }

        elif kind == 'bickel':
            s, q = EstimatorService._sparsity(params)
            terms = {'sparsity': s * (math.log(p) / n) ** ((1.0 - q) / 2.0)}

        elif kind == 'lounici':
            rank = EstimatorService.effective_rank(sigma)
            terms = {'deviation': op * math.sqrt(rank * math.log(2 * p) / n)}

        elif kind == 'toeplitz_threshold':
            s, q = EstimatorService._sparsity(params)
            rule = ToeplitzRule(params.get('C', 1.0), params.get('K', 1.0),
                                params.get('c', 2.0), params.get('alpha', 0.5))
            scale = max(rule.C ** 2 * rule.K ** 4, rule.C * rule.K ** 2)
            rate = scale * rule.c / (1.0 - rule.alpha) * math.log(p) / (n * p)
            banded = EstimatorService.band(sigma, rule.band_width(p))
            terms = {
                'sparsity': s * rate ** ((1.0 - q) / 2.0),
                'band_bias': op_norm(banded - sigma)
            }

        else:  # banding_tail
            rule = ToeplitzRule(params.get('C', 1.0), params.get('K', 1.0),
                                params.get('c', 2.0), params.get('alpha', 0.5))
            u = float(params.get('u', 0.5))
            if n is None or not 0 < u < 1:
                raise InvalidParameterError('banding tail needs n and 0 < u < 1')
            exponent = (1.0 - rule.alpha) * min(1.0 / (rule.C * rule.K ** 4),
                                                1.0 / (rule.C * rule.K ** 2)) * n * p * u
            terms = {'probability': 2.0 * rule.alpha * p * math.exp(-exponent)}

        value = constant * sum(terms.values())
        return BoundValue(kind=kind, value=value, terms=terms, constant_free=constant == 1.0)

    @staticmethod
    def _sparsity(params):
        s = params.get('s')
        q = float(params.get('q', 0.0))
        if s is None or s <= 0 or not 0 <= q < 1:
            raise InvalidParameterError('sparsity bounds need s > 0 and q in [0, 1)')
        return float(s), q

    @staticmethod
    def psd_projected(estimate):
        return psd_project(estimate)
