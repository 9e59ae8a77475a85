"""
Utils package initialization
Exports utility functions for easy importing
"""

from covest.utils.matrix_utils import *
from covest.utils.nnls_utils import *
from covest.utils.matrix_io_utils import *
from covest.utils.export_utils import *
from covest.utils.config_utils import *

__all__ = [
    # Matrix kernels
    'MatrixNorms',
    'check_finite',
    'eig_sym',
    'eig_herm',
    'eig',
    'norms',
    'op_norm',
    'psd_project',
    'toeplitz_project',
    'hadamard',
    'cholesky',
    'correlation_normalize',
    'is_psd',

    # NNLS
    'nnls_scale',
    'lawson_hanson',
    'kkt_violation',
    'kkt_satisfied',

    # Matrix text format
    'format_matrix',
    'parse_matrix',
    'write_matrix',
    'read_matrix',

    # Export utilities
    'ResultCsvSink',
    'read_result_rows',
    'summary_path',
    'export_summary_to_csv',
    'export_summary_to_excel',
    'read_summary',

    # Preset files
    'format_value',
    'experiment_file_text',
    'plot_spec_text',
    'write_preset_configs'
]
