import numpy as np
import pytest
from click.testing import CliRunner

from config import Config
from covest import create_cli
from covest.models.covariance_model import const_corr_matrix
from covest.models.experiment_model import ExperimentConfig
from covest.models.matrix_model import SymMatrix
from covest.models.rng_model import RngStream


@pytest.fixture(scope='function')
def rng():
    """Seeded random stream; every test gets the same draws."""
    return RngStream(seed=7, stream_id=0)


@pytest.fixture(scope='function')
def const_corr():
    """4×4 constant-correlation truth with c = 0.5."""
    return SymMatrix(const_corr_matrix(0.5, 4))


@pytest.fixture(scope='function')
def random_sym():
    """Reproducible dense symmetric 6×6 matrix."""
    values = np.random.default_rng(11).standard_normal((6, 6))
    return SymMatrix(values + values.T)


@pytest.fixture(scope='function')
def results_dir(tmp_path, monkeypatch):
    """Point the default result directory at a temporary folder."""
    path = tmp_path / 'results'
    monkeypatch.setattr(Config, 'RESULTS_DIR', str(path))
    return path


@pytest.fixture(scope='function')
def small_config():
    """A quick real-valued sweep: two dimensions, one sample size, three trials."""
    return ExperimentConfig(
        experiment='custom',
        seed=3,
        trials=3,
        dims=(4, 6),
        samples=(50,),
        estimators=('sample', 'sign', 'dithered'),
        metrics=('operator', 'frobenius'),
        record_wall_time=False,
    )


@pytest.fixture(scope='function')
def cli():
    """Command-line group built with the testing configuration."""
    return create_cli('testing')


@pytest.fixture(scope='function')
def runner():
    return CliRunner()


@pytest.fixture(scope='function')
def write_file(tmp_path):
    """Write `text` to tmp_path/name and return the path as a string."""
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding='utf-8')
        return str(path)
    return _write
