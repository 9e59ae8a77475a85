import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from covest.models.batch_model import ComplexSampleBatch
from covest.models.matrix_model import HermMatrix
from covest.models.mimo_model import AsfSpec, NnlsProblem, PilotBatch, UlaConfig
from covest.models.rng_model import RngStream
from covest.services.channel_service import ChannelService
from covest.services.error_handling_service import (
    InvalidParameterError, OrderTooLargeError, OutOfRangeError, ZeroMatrixError
)
from covest.services.estimator_service import EstimatorService
from covest.services.mimo_estimation_service import MimoEstimationService
from covest.utils.matrix_utils import is_psd, op_norm


MIXED = AsfSpec(spikes=((0.2, 0.5),), rects=((-0.4, 0.2),), gaussians=((0.5, 0.03),), alpha=0.5)
TWO_SPIKES = AsfSpec(spikes=((-0.3, 0.5), (0.4, 0.5)), alpha=1.0)


@pytest.mark.unit
def test_array_response():
    cfg = UlaConfig(4)
    assert np.allclose(ChannelService.array_response(0.0, cfg), np.ones(4))
    assert np.allclose(np.abs(ChannelService.array_response(0.7, cfg)), 1.0)
    assert ChannelService.array_response(1.0, cfg)[1] == pytest.approx(-1.0)
    with pytest.raises(OutOfRangeError):
        ChannelService.array_response(1.5, cfg)


@pytest.mark.unit
def test_true_covariance_of_spikes():
    cfg = UlaConfig(6)
    sigma = ChannelService.true_covariance(TWO_SPIKES, cfg)
    steering = ChannelService.steering_matrix([-0.3, 0.4], cfg)
    expected = steering @ np.diag([0.5, 0.5]) @ steering.conj().T
    assert isinstance(sigma, HermMatrix)
    assert np.allclose(sigma.entries, expected)


@pytest.mark.unit
def test_true_covariance_has_unit_power():
    cfg = UlaConfig(8)
    sigma = ChannelService.true_covariance(MIXED, cfg)
    assert np.allclose(sigma.diagonal(), 1.0)
    assert is_psd(sigma)

    _, masses = ChannelService.continuous_masses(MIXED, cfg)
    assert masses.sum() == pytest.approx(0.5)
    assert np.all(masses >= 0)


@pytest.mark.unit
def test_continuous_density_integrates_to_continuous_power():
    xi = np.linspace(-1.0, 1.0, 20001)
    density = ChannelService.continuous_density(MIXED, xi)
    assert trapezoid(density, xi) == pytest.approx(0.5, abs=1e-3)
    assert np.all(ChannelService.continuous_density(TWO_SPIKES, xi) == 0.0)


@pytest.mark.unit
def test_random_asf_recipe():
    asf = ChannelService.random_asf(RngStream(3, 0, 3))
    assert asf.alpha == 0.5
    assert len(asf.spikes) == 2
    assert sum(w for _, w in asf.spikes) == pytest.approx(0.5)
    assert len(asf.rects) == 2 and len(asf.gaussians) == 2
    assert -1.0 <= asf.rects[0][0] <= 0.0 <= asf.rects[1][0] <= 1.0

    again = ChannelService.random_asf(RngStream(3, 0, 3))
    assert again == asf

    assert ChannelService.random_asf(RngStream(3), alpha=1.0).rects == ()
    with pytest.raises(InvalidParameterError):
        ChannelService.random_asf(RngStream(3), alpha=0.5, spikes=0)
    with pytest.raises(InvalidParameterError):
        ChannelService.random_asf(RngStream(3), alpha=0.5, rects=0, gaussians=0)


@pytest.mark.unit
def test_noise_power():
    sigma = HermMatrix.identity(4) * 2.0
    assert ChannelService.noise_power(sigma, 10.0) == pytest.approx(0.2)
    assert ChannelService.noise_power(sigma, math.inf) == 0.0


@pytest.mark.unit
def test_simulate_pilots_shape_and_noise():
    cfg = UlaConfig(8)
    pilots = ChannelService.simulate_pilots(MIXED, cfg, 16, 10.0, RngStream(1))
    assert (pilots.N, pilots.M) == (16, 8)
    assert pilots.noise_power == pytest.approx(0.1)

    again = ChannelService.simulate_pilots(MIXED, cfg, 16, 10.0, RngStream(1))
    assert np.array_equal(pilots.samples.values, again.samples.values)

    clean = ChannelService.simulate_pilots(MIXED, cfg, 4, math.inf, RngStream(1))
    assert clean.noise_power == 0.0
    with pytest.raises(InvalidParameterError):
        ChannelService.simulate_pilots(MIXED, cfg, 0, 10.0, RngStream(1))


@pytest.mark.unit
def test_simulated_pilots_have_true_covariance():
    cfg = UlaConfig(4)
    pilots = ChannelService.simulate_pilots(MIXED, cfg, 20000, math.inf, RngStream(2))
    sample = EstimatorService.sample_cov(pilots.samples)
    assert op_norm(sample - ChannelService.true_covariance(MIXED, cfg)) < 0.2


@pytest.mark.unit
def test_periodic_grid():
    assert np.allclose(MimoEstimationService.periodic_grid(4, UlaConfig(4)), [-1.0, -0.5, 0.0, 0.5])
    assert np.allclose(MimoEstimationService.periodic_grid(3, UlaConfig(4, 0.25)), [-1.0, 0.0, 1.0])


@pytest.mark.unit
def test_music_order_gap_rule():
    values = np.array([10.0, 9.0] + [1.0] * 14)
    assert MimoEstimationService.music_order(values, 16) == 2
    assert MimoEstimationService.music_order(np.ones(16), 16) == 0
    # the cap is M // 4
    assert MimoEstimationService.music_order(np.array([9.0, 8.0, 7.0, 1.0]), 4) == 0


@pytest.mark.unit
def test_music_locates_two_spikes():
    cfg = UlaConfig(16)
    pilots = ChannelService.simulate_pilots(TWO_SPIKES, cfg, 200, 20.0, RngStream(4))
    spikes, order = MimoEstimationService.music_spikes(pilots.samples, cfg)
    assert order == 2
    assert spikes[0] == pytest.approx(-0.3, abs=0.02)
    assert spikes[1] == pytest.approx(0.4, abs=0.02)


@pytest.mark.unit
def test_music_explicit_orders():
    cfg = UlaConfig(8)
    pilots = ChannelService.simulate_pilots(MIXED, cfg, 32, 20.0, RngStream(5))
    assert MimoEstimationService.music_spikes(pilots.samples, cfg, order=0) == ([], 0)
    with pytest.raises(OrderTooLargeError):
        MimoEstimationService.music_spikes(pilots.samples, cfg, order=8)


@pytest.mark.unit
@pytest.mark.parametrize('kind', MimoEstimationService.DICTIONARY_KINDS)
def test_dictionary_atoms_have_unit_power(kind):
    cfg = UlaConfig(8)
    dictionary = MimoEstimationService.build_dictionary(kind, 16, cfg, spikes=[0.1])
    assert dictionary.atoms.shape == (8, 17)
    assert dictionary.spike_count == 1
    assert dictionary.locations[-1] == pytest.approx(0.1)
    assert np.allclose(dictionary.atoms[0], 1.0)


@pytest.mark.unit
def test_dictionary_rejects_bad_input():
    cfg = UlaConfig(8)
    with pytest.raises(InvalidParameterError):
        MimoEstimationService.build_dictionary('sinc', 16, cfg)
    with pytest.raises(InvalidParameterError):
        MimoEstimationService.build_dictionary('gaussian', 16, cfg, width=0.0)


@pytest.mark.unit
def test_kernel_masses_are_normalized():
    cfg = UlaConfig(8)
    masses = MimoEstimationService.kernel_masses('laplacian', [-0.5, 0.0, 0.9], 0.2, cfg)
    assert np.allclose(masses.sum(axis=0), 1.0)


@pytest.mark.unit
def test_nnls_recovers_on_grid_spikes_exactly():
    cfg = UlaConfig(8)
    asf = AsfSpec(spikes=((-0.5, 0.6), (0.25, 0.4)), alpha=1.0)
    truth = ChannelService.true_covariance(asf, cfg)

    dictionary = MimoEstimationService.build_dictionary('dirac', 16, cfg)
    problem = NnlsProblem(atoms=dictionary.atoms, target=truth.entries[:, 0])
    result = MimoEstimationService.nnls_solve(problem)
    estimate = MimoEstimationService.assemble_estimate(dictionary, result.u)

    assert result.converged
    assert np.allclose(estimate.entries, truth.entries, atol=1e-8)
    assert MimoEstimationService.metric_enf(truth, estimate) < 1e-8


@pytest.mark.unit
def test_assemble_estimate_validates_weights():
    dictionary = MimoEstimationService.build_dictionary('dirac', 8, UlaConfig(4))
    with pytest.raises(InvalidParameterError):
        MimoEstimationService.assemble_estimate(dictionary, -np.ones(8))


@pytest.mark.unit
def test_sample_and_toeplitz_denoise():
    values = np.array([[1.0 + 1.0j, 0.0], [1.0 - 1.0j, 2.0]])
    pilots = PilotBatch(samples=ComplexSampleBatch(values), noise_power=0.5, snr_db=10.0)
    sample = EstimatorService.sample_cov(pilots.samples)
    estimate = MimoEstimationService.sample_estimate(pilots)
    assert np.allclose(estimate.entries, sample.entries - 0.5 * np.eye(2))

    col = MimoEstimationService.toeplitz_denoise(pilots.samples, 0.5)
    assert col[0] == pytest.approx(np.trace(sample.entries).real / 2 - 0.5)
    assert col[1] == pytest.approx(sample.entries[1, 0])
    with pytest.raises(InvalidParameterError):
        MimoEstimationService.toeplitz_denoise(pilots.samples, -1.0)


@pytest.mark.unit
def test_estimate_nnls_pipeline():
    cfg = UlaConfig(8)
    pilots = ChannelService.simulate_pilots(MIXED, cfg, 16, 20.0, RngStream(6))
    estimate, metadata = MimoEstimationService.estimate_nnls(pilots, cfg, 'gaussian')
    assert isinstance(estimate, HermMatrix)
    assert is_psd(estimate)
    assert metadata['G'] == 16
    assert metadata['dictionary'] == 'gaussian'
    assert metadata['music_rule'] == 'auto'
    assert 0 <= metadata['music_order'] <= 2


@pytest.mark.unit
def test_metrics():
    cfg = UlaConfig(8)
    truth = ChannelService.true_covariance(MIXED, cfg)
    other = HermMatrix.identity(8)

    assert MimoEstimationService.metric_enf(truth, truth) == 0.0
    assert MimoEstimationService.metric_enf(truth, HermMatrix.zeros(8)) == pytest.approx(1.0)
    with pytest.raises(ZeroMatrixError):
        MimoEstimationService.metric_enf(HermMatrix.zeros(8), truth)

    profile = MimoEstimationService.metric_epe_profile(truth, other, [1, 2, 8])
    assert profile[8] == pytest.approx(0.0, abs=1e-12)
    assert all(0.0 <= value <= 1.0 for value in profile.values())
    assert MimoEstimationService.metric_epe(truth, truth, 2) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InvalidParameterError):
        MimoEstimationService.metric_epe(truth, truth, 9)
