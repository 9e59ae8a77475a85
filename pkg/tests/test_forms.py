import pytest

from covest.forms.experiment_forms import load_experiment_config, load_plot_spec
from covest.models.experiment_model import ExperimentConfig, lambda_grid
from covest.services.error_handling_service import ConfigError


CUSTOM = """
# quick banded sweep
EXPERIMENT=custom
SEED=4
TRIALS=5
TRUTH=banded_toeplitz
TRUTH_COL=1,0.5,0.25
DIMS=10,20
SAMPLES=40
ESTIMATORS=sample,toeplitz-threshold
METRICS=operator,frobenius
RECORD_WALL_TIME=false
"""


@pytest.mark.unit
def test_load_custom_config(write_file):
    config = load_experiment_config(write_file('custom.env', CUSTOM))
    assert config.experiment == 'custom'
    assert config.seed == 4
    assert config.trials == 5
    assert config.truth_col == (1.0, 0.5, 0.25)
    assert config.dims == (10, 20)
    assert config.estimators == ('sample', 'toeplitz-threshold')
    assert config.record_wall_time is False
    assert len(config.grid()) == 2


@pytest.mark.unit
def test_keys_are_case_insensitive_and_override_presets(write_file):
    path = write_file('fig4.env', 'experiment=fig4_correlation\nseed=9\n')
    config = load_experiment_config(path)
    preset = ExperimentConfig.preset('fig4_correlation')
    assert config == preset.updated(seed=9)


@pytest.mark.unit
def test_lam_points_expand_to_grid(write_file):
    path = write_file('lam.env', 'EXPERIMENT=custom\nESTIMATORS=dithered\nLAM_POINTS=8\n')
    assert load_experiment_config(path).lam_factors == lambda_grid(8)


@pytest.mark.unit
def test_overrides_apply_after_file(write_file):
    path = write_file('custom.env', CUSTOM)
    config = load_experiment_config(path, {'trials': 2, 'OUTPUT': 'x.csv'})
    assert config.trials == 2
    assert config.output == 'x.csv'


@pytest.mark.unit
@pytest.mark.parametrize('text, field', [
    ('BOGUS=1\n', 'bogus'),
    ('TRIALS=abc\n', 'trials'),
    ('TRIALS=0\n', 'trials'),
    ('ESTIMATORS=sample,magic\n', 'estimators'),
    ('METRICS=loss\n', 'metrics'),
    ('TOEPLITZ_ALPHA=1.5\n', 'toeplitz_alpha'),
    ('TOEPLITZ_C=1\n', 'toeplitz_c'),
    ('MUSIC_ORDER=many\n', 'music_order'),
    ('DIMS=4,x\n', 'dims'),
    ('TRUTH=wishart\n', 'truth'),
    ('EXPERIMENT=fig4_correlation\nESTIMATORS=nnls\n', 'estimators'),
    ('TRUTH=sparse_random\nDIMS=3\nTRUTH_S=5\n', 'truth'),
])
def test_invalid_configs_name_the_field(write_file, text, field):
    path = write_file('bad.env', text)
    with pytest.raises(ConfigError) as excinfo:
        load_experiment_config(path)
    assert excinfo.value.field == field


@pytest.mark.unit
def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError) as excinfo:
        load_experiment_config(str(tmp_path / 'nope.env'))
    assert excinfo.value.field == 'path'


@pytest.mark.unit
def test_load_plot_spec(write_file):
    path = write_file('fig4.plot', 'X=n\nPANEL=c\nMETRIC=operator\nLOGY=true\nLOGX=no\n'
                                   'TITLE=Sign estimator, correlated truth\nESTIMATORS=sample,sign\n')
    spec = load_plot_spec(path)
    assert spec.x == 'n'
    assert spec.panel == 'c'
    assert spec.logy is True
    assert spec.logx is False
    assert spec.title == 'Sign estimator, correlated truth'
    assert spec.estimators == ('sample', 'sign')


@pytest.mark.unit
def test_plot_spec_rejects_unknown_key(write_file):
    with pytest.raises(ConfigError) as excinfo:
        load_plot_spec(write_file('bad.plot', 'X=n\nCOLOR=red\n'))
    assert excinfo.value.field == 'color'
