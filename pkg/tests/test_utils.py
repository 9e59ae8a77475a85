import math

import numpy as np
import pandas as pd
import pytest
from openpyxl import load_workbook
from scipy.optimize import nnls

from config import Config
from covest.forms.experiment_forms import load_experiment_config
from covest.models.batch_model import DitheredBatch, SampleBatch
from covest.models.experiment_model import PRESETS, ExperimentConfig, ResultRow
from covest.models.matrix_model import HermMatrix, Mask, SymMatrix, ToeplitzCol
from covest.services.error_handling_service import (
    DimensionMismatchError, ExportError, InvalidParameterError, MaxIterationsError,
    NonFiniteError, NotPSDError, ZeroMatrixError
)
from covest.utils.config_utils import experiment_file_text, format_value, write_preset_configs
from covest.utils.export_utils import (
    ResultCsvSink, export_summary_to_excel, read_result_rows, summary_path
)
from covest.utils.matrix_io_utils import format_matrix, parse_matrix, read_matrix, write_matrix
from covest.utils.matrix_utils import (
    cholesky, correlation_normalize, eig, eig_herm, eig_sym, hadamard, is_psd, norms,
    psd_project, toeplitz_project
)
from covest.utils.nnls_utils import kkt_satisfied, kkt_violation, lawson_hanson


@pytest.mark.unit
def test_eig_sym_matches_reference(random_sym):
    decomp = eig_sym(random_sym)
    reference = np.sort(np.linalg.eigvalsh(random_sym.entries))[::-1]
    assert np.allclose(decomp.values, reference, atol=1e-9)
    assert np.all(np.diff(decomp.values) <= 0)

    v = decomp.vectors
    assert np.allclose(v.T @ v, np.eye(6), atol=1e-10)
    assert np.allclose(random_sym.entries @ v, v * decomp.values, atol=1e-9)


@pytest.mark.unit
def test_eig_sym_sign_convention(random_sym):
    v = eig_sym(random_sym).vectors
    lead = np.argmax(np.abs(v), axis=0)
    assert np.all(v[lead, np.arange(6)] > 0)


@pytest.mark.unit
def test_eig_herm_matches_reference():
    values = np.random.default_rng(5).standard_normal((5, 5)) + \
        1j * np.random.default_rng(6).standard_normal((5, 5))
    a = HermMatrix(values + values.conj().T)
    decomp = eig_herm(a)
    reference = np.sort(np.linalg.eigvalsh(a.entries))[::-1]
    assert np.allclose(decomp.values, reference, atol=1e-8)
    assert np.allclose(decomp.vectors.conj().T @ decomp.vectors, np.eye(5), atol=1e-8)
    assert np.allclose(decomp.reconstruct(), a.entries, atol=1e-8)


@pytest.mark.unit
def test_eig_herm_repeated_eigenvalues():
    decomp = eig(HermMatrix.identity(3))
    assert np.allclose(decomp.values, 1.0)
    assert np.allclose(decomp.vectors.conj().T @ decomp.vectors, np.eye(3))


@pytest.mark.unit
def test_eig_rejects_non_finite():
    with pytest.raises(NonFiniteError):
        eig_sym(SymMatrix([[1.0, np.nan], [np.nan, 1.0]]))


@pytest.mark.unit
def test_norms_of_diagonal_matrix():
    result = norms(SymMatrix.diag([3.0, -1.0]))
    assert result.op == pytest.approx(3.0)
    assert result.frob == pytest.approx(math.sqrt(10.0))
    assert result.nuclear == pytest.approx(4.0)
    assert result.max == 3.0
    assert result.col12 == 3.0
    assert result.trace == 2.0


@pytest.mark.unit
def test_psd_and_toeplitz_projections():
    projected = psd_project(SymMatrix.diag([2.0, -1.0]))
    assert np.allclose(projected.entries, np.diag([2.0, 0.0]))

    col = toeplitz_project(SymMatrix([[1.0, 2.0], [2.0, 3.0]]))
    assert np.allclose(col.col, [2.0, 2.0])

    truth = ToeplitzCol([1.0, 0.4, 0.1]).expand()
    assert np.allclose(toeplitz_project(truth).col, [1.0, 0.4, 0.1])


@pytest.mark.unit
def test_hadamard_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        hadamard(SymMatrix.identity(3), Mask.ones(2))


@pytest.mark.unit
def test_cholesky_full_and_semidefinite(const_corr):
    low = cholesky(const_corr)
    assert np.allclose(low @ low.T, const_corr.entries)
    assert np.allclose(low, np.tril(low))

    low = cholesky(SymMatrix.ones(3))
    assert np.allclose(low @ low.T, np.ones((3, 3)))

    with pytest.raises(NotPSDError):
        cholesky(SymMatrix.diag([1.0, -1.0]))


@pytest.mark.unit
def test_correlation_normalize():
    corr = correlation_normalize(SymMatrix([[4.0, 1.0], [1.0, 1.0]]))
    assert np.allclose(corr.entries, [[1.0, 0.5], [0.5, 1.0]])
    with pytest.raises(ZeroMatrixError):
        correlation_normalize(SymMatrix.diag([1.0, 0.0]))


@pytest.mark.unit
def test_is_psd(const_corr):
    assert is_psd(const_corr)
    assert not is_psd(SymMatrix.diag([1.0, -0.5]))


@pytest.mark.unit
def test_lawson_hanson_matches_scipy():
    generator = np.random.default_rng(3)
    matrix = generator.standard_normal((20, 8))
    rhs = generator.standard_normal(20)
    result = lawson_hanson(matrix, rhs)
    reference, residual = nnls(matrix, rhs)

    assert result.converged
    assert np.all(result.u >= 0)
    assert np.allclose(result.u, reference, atol=1e-8)
    assert result.residual == pytest.approx(residual, abs=1e-8)
    assert kkt_violation(matrix, rhs, result.u) < 1e-8
    assert kkt_satisfied(matrix, rhs, result.u)


@pytest.mark.unit
def test_kkt_tolerance_defaults_to_config():
    matrix = np.eye(2)
    rhs = np.array([1.0, 1.0])
    u = np.array([1.0, 1.0 - 1e-6])
    violation = kkt_violation(matrix, rhs, u)
    assert violation > Config.NNLS_KKT_TOLERANCE
    assert not kkt_satisfied(matrix, rhs, u)
    assert kkt_satisfied(matrix, rhs, u, tolerance=violation)
    assert kkt_satisfied(matrix, rhs, np.ones(2))


@pytest.mark.unit
def test_lawson_hanson_exact_cone_member():
    generator = np.random.default_rng(4)
    matrix = np.abs(generator.standard_normal((12, 5)))
    rhs = matrix @ np.array([1.0, 0.0, 2.0, 0.0, 0.5])
    result = lawson_hanson(matrix, rhs)
    assert result.residual < 1e-10


@pytest.mark.unit
def test_lawson_hanson_iteration_cap():
    generator = np.random.default_rng(4)
    matrix = np.abs(generator.standard_normal((12, 8)))
    rhs = matrix @ np.ones(8)

    capped = lawson_hanson(matrix, rhs, max_iterations=1)
    assert not capped.converged
    assert capped.iterations == 1
    assert np.all(capped.u >= 0)

    with pytest.raises(MaxIterationsError):
        lawson_hanson(matrix, rhs, max_iterations=0, strict=True)
    with pytest.raises(DimensionMismatchError):
        lawson_hanson(matrix, np.ones(3))


@pytest.mark.unit
def test_matrix_text_format():
    sym = SymMatrix([[1.0, 0.1], [0.1, 2.0 / 3.0]])
    parsed = parse_matrix(format_matrix(sym))
    assert isinstance(parsed, SymMatrix)
    assert np.array_equal(parsed.entries, sym.entries)

    toep = ToeplitzCol([1.0, 0.5 + 0.25j])
    text = format_matrix(toep)
    assert text.splitlines()[0] == 'toep 2'
    assert np.array_equal(parse_matrix(text).col, toep.col)

    bits = DitheredBatch([[1, -1]], [[-1, 1]], 0.5)
    assert format_matrix(bits).splitlines()[0] == 'dbits 1 2 0.5'
    parsed = parse_matrix(format_matrix(bits))
    assert parsed.dither_level == 0.5
    assert np.array_equal(parsed.bits_b, bits.bits_b)


@pytest.mark.unit
def test_matrix_text_format_errors():
    with pytest.raises(InvalidParameterError):
        parse_matrix('')
    with pytest.raises(InvalidParameterError):
        parse_matrix('cube 3\n1 2 3\n')
    with pytest.raises(DimensionMismatchError):
        parse_matrix('sym 2\n1.0 0.0\n')
    with pytest.raises(InvalidParameterError):
        parse_matrix('sym 2\n1.0 0.0,1.0\n0.0,-1.0 1.0\n')
    with pytest.raises(InvalidParameterError):
        parse_matrix('batch 1 2\n1.0 2.0,0.5\n')


@pytest.mark.unit
def test_matrix_files_round_trip_through_disk(tmp_path):
    herm = HermMatrix([[2.0, 0.5j], [-0.5j, 1.0]])
    path = write_matrix(herm, str(tmp_path / 'herm.txt'))
    assert (tmp_path / 'herm.txt').read_text(encoding='utf-8').startswith('herm 2\n')
    assert np.array_equal(read_matrix(path).entries, herm.entries)

    batch = SampleBatch([[0.1, -0.2], [0.3, 0.4], [0.5, 0.6]])
    path = write_matrix(batch, str(tmp_path / 'batch.txt'))
    assert np.array_equal(read_matrix(path).values, batch.values)

    with pytest.raises(ExportError):
        read_matrix(str(tmp_path / 'missing.txt'))


@pytest.mark.unit
def test_result_sink_writes_header_and_rows(tmp_path):
    path = str(tmp_path / 'out' / 'rows.csv')
    rows = [
        ResultRow('custom', 0, 'p=4;n=50', 'sample', 'operator', 0.25),
        ResultRow('custom', 1, 'p=4;n=50', 'sample', 'operator', 0.5),
    ]
    with ResultCsvSink(path) as sink:
        sink.write_rows(rows)

    with open(path, encoding='utf-8') as handle:
        lines = handle.read().splitlines()
    assert lines[0] == ','.join(ResultRow.FIELDS)
    assert len(lines) == 3
    assert read_result_rows(path) == rows


@pytest.mark.unit
def test_read_result_rows_rejects_foreign_csv(tmp_path):
    path = tmp_path / 'other.csv'
    path.write_text('a,b\n1,2\n', encoding='utf-8')
    with pytest.raises(ExportError):
        read_result_rows(str(path))


@pytest.mark.unit
def test_summary_path():
    assert summary_path('results/fig4.csv') == 'results/fig4_summary.csv'
    assert summary_path('results/fig4.csv', '.xlsx') == 'results/fig4_summary.xlsx'


@pytest.mark.unit
def test_export_summary_to_excel_styles_header(tmp_path):
    table = pd.DataFrame({'estimator': ['sample', 'sign'], 'mean': [0.5, 0.25], 'failures': [0, 2]})
    path = export_summary_to_excel(table, str(tmp_path / 'summary.xlsx'), title='fig4')

    ws = load_workbook(path).active
    assert ws.title == 'fig4'
    assert ws['A1'].value == 'estimator'
    assert ws['A1'].font.bold
    assert ws['B3'].value == 0.25


@pytest.mark.unit
def test_format_value():
    assert format_value(True) == 'true'
    assert format_value((0.5, 0.9)) == '0.5,0.9'
    assert format_value(32) == '32'


@pytest.mark.unit
@pytest.mark.parametrize('experiment', [name for name in PRESETS if name != 'custom'])
def test_preset_files_load_back_to_presets(tmp_path, experiment):
    path = tmp_path / f'{experiment}.env'
    path.write_text(experiment_file_text(experiment), encoding='utf-8')
    assert load_experiment_config(str(path)) == ExperimentConfig.preset(experiment)


@pytest.mark.unit
def test_write_preset_configs_keeps_existing(tmp_path):
    results = write_preset_configs(str(tmp_path))
    assert all(written for _, written in results)
    assert (tmp_path / 'fig4_correlation.env').exists()
    assert (tmp_path / 'fig5_dimension.plot').exists()

    again = write_preset_configs(str(tmp_path))
    assert not any(written for _, written in again)
    forced = write_preset_configs(str(tmp_path), force=True)
    assert all(written for _, written in forced)
