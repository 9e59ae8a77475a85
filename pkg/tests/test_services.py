import math

import numpy as np
import pytest

from covest.models.batch_model import BitBatch, SampleBatch
from covest.models.covariance_model import (
    BandedToeplitz, BickelRule, ConstCorr, Explicit, LowRankPlusRidge, ScaledModel, SparseRandom,
    ToeplitzRule, const_corr_matrix
)
from covest.models.matrix_model import HermMatrix, Mask, SymMatrix, ToeplitzCol
from covest.models.rng_model import RngStream
from covest.services.error_handling_service import (
    CovestError, EmptyBatchError, ExperimentErrorHandler, InvalidParameterError, OutOfRangeError,
    ZeroMatrixError
)
from covest.services.estimator_service import EstimatorService
from covest.services.quantization_service import QuantizationService
from covest.services.synth_service import SynthService
from covest.utils.matrix_utils import eig_sym, is_psd, norms, op_norm


# ---- synthesis -------------------------------------------------------------

@pytest.mark.unit
def test_realize_deterministic_models():
    truth = SynthService.realize(ConstCorr(0.5), 4)
    assert np.array_equal(truth.entries, const_corr_matrix(0.5, 4))

    banded = SynthService.realize(BandedToeplitz((1.0, 0.5, 0.25), 3), 5)
    assert np.allclose(banded.entries[:, 0], [1.0, 0.5, 0.25, 0.0, 0.0])

    scaled = SynthService.realize(ScaledModel(ConstCorr(0.5), (1.0, 2.0)), 2)
    assert np.allclose(scaled.entries, [[1.0, 1.0], [1.0, 4.0]])

    explicit = SynthService.realize(Explicit(SymMatrix.identity(3)), 3)
    assert np.array_equal(explicit.entries, np.eye(3))


@pytest.mark.unit
def test_realize_rejects_indefinite_truth():
    with pytest.raises(InvalidParameterError):
        SynthService.realize(BandedToeplitz((1.0, 2.0), 2), 3)
    with pytest.raises(InvalidParameterError):
        SynthService.realize(SparseRandom(0.0, 2, 0.3), 6)


@pytest.mark.unit
def test_sparse_random_structure():
    model = SparseRandom(q=0.0, s=3, bound=0.3)
    truth = SynthService.realize(model, 20, RngStream(1))
    off = truth.entries - np.diag(truth.diagonal())

    assert np.all(truth.diagonal() >= 1.0)
    assert np.all(np.count_nonzero(off, axis=1) <= 3)
    assert np.all(np.abs(off) <= 0.3 + 1e-15)
    assert is_psd(truth)

    again = SynthService.realize(model, 20, RngStream(1))
    assert np.array_equal(truth.entries, again.entries)


@pytest.mark.unit
def test_low_rank_plus_ridge_spectrum():
    truth = SynthService.realize(LowRankPlusRidge(2, 0.1), 6, RngStream(2))
    values = eig_sym(truth).values
    assert np.allclose(values[2:], 0.1, atol=1e-9)
    assert values[1] > 0.1


@pytest.mark.unit
def test_sample_gaussian_matches_covariance(const_corr, rng):
    batch = SynthService.sample_gaussian(const_corr, 20000, rng)
    assert (batch.n, batch.p) == (20000, 4)
    sample = EstimatorService.sample_cov(batch)
    assert op_norm(sample - const_corr) < 0.15


@pytest.mark.unit
def test_sample_complex_gaussian_matches_covariance(rng):
    sigma = HermMatrix([[1.0, 0.5j], [-0.5j, 1.0]])
    batch = SynthService.sample_complex_gaussian(sigma, 20000, rng)
    sample = EstimatorService.sample_cov(batch)
    assert isinstance(sample, HermMatrix)
    assert op_norm(sample - sigma) < 0.05


@pytest.mark.unit
def test_sample_gaussian_is_reproducible(const_corr):
    a = SynthService.sample_gaussian(const_corr, 10, RngStream(9, 4))
    b = SynthService.sample_gaussian(const_corr, 10, RngStream(9, 4))
    assert np.array_equal(a.values, b.values)


# ---- classical estimators ----------------------------------------------------

@pytest.mark.unit
def test_sample_cov_small_batch():
    batch = SampleBatch([[1.0, 2.0], [3.0, 4.0]])
    assert np.allclose(EstimatorService.sample_cov(batch).entries, [[5.0, 7.0], [7.0, 10.0]])
    with pytest.raises(EmptyBatchError):
        EstimatorService.sample_cov(SampleBatch(np.zeros((0, 3))))


@pytest.mark.unit
def test_masked_and_thresholded_cov():
    batch = SampleBatch([[1.0, 2.0], [3.0, 4.0]])
    masked = EstimatorService.masked_cov(batch, Mask.identity(2))
    assert np.allclose(masked.entries, [[5.0, 0.0], [0.0, 10.0]])

    a = SymMatrix([[1.0, 0.3], [0.3, 1.0]])
    assert EstimatorService.threshold(a, 0.3).entries[0, 1] == 0.3
    assert EstimatorService.threshold(a, 0.31).entries[0, 1] == 0.0
    with pytest.raises(InvalidParameterError):
        EstimatorService.threshold(a, -1.0)


@pytest.mark.unit
def test_band_and_toeplitz_estimators():
    col = EstimatorService.band(ToeplitzCol([1.0, 0.5, 0.25, 0.1]), 2)
    assert np.array_equal(col.col, [1.0, 0.5, 0.0, 0.0])

    batch = SampleBatch([[1.0, 2.0, 3.0], [0.0, 1.0, -1.0]])
    sample = EstimatorService.sample_cov(batch).entries
    toep = EstimatorService.toeplitz_cov(batch).col
    assert toep[0] == pytest.approx(np.trace(sample) / 3)
    assert toep[1] == pytest.approx((sample[1, 0] + sample[2, 1]) / 2)
    assert toep[2] == pytest.approx(sample[2, 0])

    rule = ToeplitzRule(alpha=0.5)
    estimate = EstimatorService.toeplitz_thresholded_cov(SampleBatch(np.ones((4, 4))), rule)
    assert np.allclose(estimate.entries, Mask.banded(4, 2).entries)
    with pytest.raises(InvalidParameterError):
        EstimatorService.toeplitz_thresholded_cov(batch, BickelRule())


def _projected_gradient_lasso(sample, lam, steps=400):
    """Reference solver: PSD-projected gradient on ‖S − Σ̂‖_F² + λ·tr(S)"""
    s = np.zeros_like(sample)
    for _ in range(steps):
        step = s - 0.25 * (2.0 * (s - sample) + lam * np.eye(sample.shape[0]))
        values, vectors = np.linalg.eigh(step)
        s = (vectors * np.maximum(values, 0.0)) @ vectors.T
    return s


@pytest.mark.unit
def test_lasso_lowrank_matches_reference(rng):
    truth = SynthService.realize(LowRankPlusRidge(2, 0.05), 5, rng.substream(0))
    batch = SynthService.sample_gaussian(truth, 30, rng.substream(1))
    lam = 0.4
    estimate = EstimatorService.lasso_lowrank_cov(batch, lam)
    reference = _projected_gradient_lasso(EstimatorService.sample_cov(batch).entries, lam)
    assert np.allclose(estimate.entries, reference, atol=1e-8)

    values = eig_sym(estimate).values
    sample_values = eig_sym(EstimatorService.sample_cov(batch)).values
    assert np.allclose(values, np.maximum(sample_values - lam / 2.0, 0.0), atol=1e-9)


@pytest.mark.unit
def test_lounici_lambda_and_effective_rank():
    batch = SampleBatch(np.vstack([np.eye(3), -np.eye(3)]) * math.sqrt(3.0))
    sample = EstimatorService.sample_cov(batch)
    assert np.allclose(sample.entries, np.eye(3))
    assert EstimatorService.lounici_lambda(batch, C=2.0) == pytest.approx(
        2.0 * math.sqrt(3.0) * math.sqrt(math.log(6) / 6))
    assert EstimatorService.effective_rank(SymMatrix.identity(4)) == pytest.approx(4.0)
    with pytest.raises(ZeroMatrixError):
        EstimatorService.effective_rank(SymMatrix.zeros(3))


@pytest.mark.unit
def test_mask_weighted_norms():
    weighted = EstimatorService.mask_weighted_norms(ToeplitzCol([1.0, 1.0, 1.0]))
    assert weighted['l1star'] == pytest.approx(1.0 / 3 + 1.0 / 2 + 1.0)
    assert weighted['l2star'] == pytest.approx(math.sqrt(11.0 / 6))
    with pytest.raises(InvalidParameterError):
        EstimatorService.mask_weighted_norms([1.0, 2.0])


@pytest.mark.unit
def test_bound_eval_closed_forms():
    sigma = SymMatrix.identity(4)
    gauss = EstimatorService.bound_eval('gauss', sigma, n=16)
    assert gauss.value == pytest.approx(0.75)
    assert gauss.constant_free

    bickel = EstimatorService.bound_eval('bickel', SymMatrix.identity(10), n=100, s=3, q=0.0)
    assert bickel.value == pytest.approx(3.0 * math.sqrt(math.log(10) / 100))

    kabanava = EstimatorService.bound_eval('kabanava', sigma, n=50, m=ToeplitzCol(np.ones(4)))
    weighted = EstimatorService.mask_weighted_norms(np.ones(4))
    expected = math.sqrt(weighted['l2star'] ** 2 * math.log(4) / 50) + weighted['l1star'] * math.log(4) / 50
    assert kabanava.value == pytest.approx(expected)

    doubled = EstimatorService.bound_eval('gauss', sigma, n=16, constant=2.0)
    assert doubled.value == pytest.approx(1.5)
    assert not doubled.constant_free

    with pytest.raises(InvalidParameterError):
        EstimatorService.bound_eval('unknown', sigma, n=10)
    with pytest.raises(InvalidParameterError):
        EstimatorService.bound_eval('gauss', sigma)


@pytest.mark.unit
def test_kabanava_bound_scales_with_covariance():
    m = ToeplitzCol([1.0, 0.5, 0.0, 0.0])
    base = EstimatorService.bound_eval('kabanava', SymMatrix(const_corr_matrix(0.3, 4)), n=40, m=m)
    scaled = EstimatorService.bound_eval('kabanava', SymMatrix(3.0 * const_corr_matrix(0.3, 4)), n=40, m=m)
    assert scaled.value == pytest.approx(3.0 * base.value)


# ---- quantization ------------------------------------------------------------

@pytest.mark.unit
def test_quantize_sign_maps_zero_to_plus_one():
    bits = QuantizationService.quantize_sign(SampleBatch([[0.0, -1.0], [2.0, -0.0]]))
    assert np.array_equal(bits.bits, [[1, -1], [1, 1]])


@pytest.mark.unit
def test_sign_estimator_on_identical_bits():
    estimate = QuantizationService.sign_estimator(BitBatch(np.ones((5, 3), dtype=int)))
    assert np.allclose(estimate.entries, np.ones((3, 3)))
    masked = QuantizationService.sign_estimator(BitBatch(np.ones((5, 3), dtype=int)), Mask.identity(3))
    assert np.allclose(masked.entries, np.eye(3))


@pytest.mark.unit
def test_arcsin_law():
    sigma = SymMatrix(const_corr_matrix(0.5, 3))
    gamma = QuantizationService.arcsin_law(sigma)
    assert gamma.entries[0, 1] == pytest.approx(1.0 / 3.0)
    assert np.allclose(QuantizationService.inverse_arcsin_law(gamma).entries, sigma.entries)
    with pytest.raises(OutOfRangeError):
        QuantizationService.arcsin_law(SymMatrix.diag([2.0, 1.0]))


@pytest.mark.unit
def test_dither_level_rule():
    assert QuantizationService.dither_level_rule(2.0, 100, 0.5) == pytest.approx(math.sqrt(math.log(100)))
    assert QuantizationService.dither_level_rule(SymMatrix.diag([2.0, 1.0]), 100, 0.5) == \
        pytest.approx(math.sqrt(math.log(100)))
    with pytest.raises(InvalidParameterError):
        QuantizationService.dither_level_rule(1.0, 1)
    with pytest.raises(InvalidParameterError):
        QuantizationService.dither_level_rule(1.0, 10, c_lambda=0.0)


@pytest.mark.unit
def test_quantize_dithered(const_corr):
    batch = SynthService.sample_gaussian(const_corr, 50, RngStream(1))
    a = QuantizationService.quantize_dithered(batch, 2.0, RngStream(1, 0, 2))
    b = QuantizationService.quantize_dithered(batch, 2.0, RngStream(1, 0, 2))
    assert np.array_equal(a.bits_a, b.bits_a)
    assert not np.array_equal(a.bits_a, a.bits_b)
    assert set(np.unique(a.bits_a)) <= {-1, 1}
    with pytest.raises(InvalidParameterError):
        QuantizationService.quantize_dithered(batch, 0.0, RngStream(1))


@pytest.mark.unit
def test_sign_estimator_recovers_correlation():
    sigma = SymMatrix(const_corr_matrix(0.5, 3))
    batch = SynthService.sample_gaussian(sigma, 20000, RngStream(5))
    estimate = QuantizationService.sign_estimator(QuantizationService.quantize_sign(batch))
    assert op_norm(estimate - sigma) < 0.05


@pytest.mark.unit
def test_psd_projection_never_increases_error():
    sigma = SymMatrix(const_corr_matrix(0.9, 10))
    for trial in range(20):
        batch = SynthService.sample_gaussian(sigma, 8, RngStream(11, trial))
        estimate = QuantizationService.sign_estimator(QuantizationService.quantize_sign(batch))
        projected = QuantizationService.psd_projected(estimate)
        assert is_psd(projected)
        assert norms(projected - sigma).frob <= norms(estimate - sigma).frob + 1e-10

    assert np.allclose(QuantizationService.psd_projected(SymMatrix(np.diag([1.0, -1.0]))).entries,
                       np.diag([1.0, 0.0]))


@pytest.mark.unit
def test_dithered_estimator_recovers_covariance():
    sigma = SymMatrix(const_corr_matrix(0.5, 3))
    batch = SynthService.sample_gaussian(sigma, 200000, RngStream(6))
    bits = QuantizationService.quantize_dithered(batch, 3.0, RngStream(6, 0, 2))
    estimate = QuantizationService.dithered_estimator(bits)
    assert op_norm(estimate - sigma) < 0.1


@pytest.mark.unit
def test_sign_diagnostics_and_bounds():
    identity = SymMatrix.identity(3)
    diagnostics = QuantizationService.sign_diagnostics(identity)
    assert np.allclose(diagnostics.A.entries, np.ones((3, 3)) - np.eye(3), atol=1e-15)
    assert diagnostics.masked_a_norm == pytest.approx(2.0)
    assert diagnostics.masked_sigma_norm == pytest.approx(1.0)

    ratio = math.log(4) / 100
    assert QuantizationService.sign_simplified_bound(SymMatrix.identity(4), 100) == \
        pytest.approx(3.0 * (math.sqrt(ratio) + ratio))
    assert QuantizationService.dithered_bound(SymMatrix.identity(4), 1.0, 100) == \
        pytest.approx(2.0 * 2.0 * math.sqrt(ratio) + 4.0 * ratio)


# ---- error handling ----------------------------------------------------------

@pytest.mark.unit
def test_error_codes_and_messages():
    error = OutOfRangeError('angle 2 outside [-1, 1]', value=2)
    assert ExperimentErrorHandler.error_code_of(error) == 'OUT_OF_RANGE'
    assert error.to_dict()['value'] == 2
    assert ExperimentErrorHandler.error_code_of(ValueError()) == 'UNHANDLED_EXCEPTION'
    assert 'positive semi-definite' in ExperimentErrorHandler.get_user_friendly_message('NOT_PSD')


@pytest.mark.unit
def test_handle_exception_wraps_errors():
    @ExperimentErrorHandler.handle_exception
    def fails(kind):
        if kind == 'covest':
            raise CovestError('broken')
        raise RuntimeError('boom')

    response = fails('covest')
    assert response['success'] is False
    assert response['message'] == 'broken'
    assert fails('other')['error_code'] == 'UNHANDLED_EXCEPTION'
