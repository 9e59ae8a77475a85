"""
Matrix Text Format Utilities for covest
Plain-text dumps of matrices, Toeplitz columns and sample/bit batches

Layout: a header line ("sym p", "herm p", "toep p", "batch n p", "cbatch n p",
"bits n p" or "dbits n p lambda") followed by whitespace-separated rows.
Complex values are written as "re,im"; floats use repr so they read back bit-exactly.
"""

import numpy as np

from covest.models.batch_model import SampleBatch, ComplexSampleBatch, BitBatch, DitheredBatch
from covest.models.matrix_model import SymMatrix, HermMatrix, ToeplitzCol
from covest.services.error_handling_service import DimensionMismatchError, ExportError, InvalidParameterError


def _real(value):
    return repr(float(value))


def _complex(value):
    return f'{float(value.real)!r},{float(value.imag)!r}'


def _rows(values, cell):
    return [' '.join(cell(v) for v in row) for row in np.atleast_2d(values)]


def format_matrix(obj):
    """Serialize a SymMatrix, HermMatrix, ToeplitzCol or batch to text"""
    if isinstance(obj, SymMatrix):
        lines = [f'sym {obj.dim}'] + _rows(obj.entries, _real)
    elif isinstance(obj, HermMatrix):
        lines = [f'herm {obj.dim}'] + _rows(obj.entries, _complex)
    elif isinstance(obj, ToeplitzCol):
        cell = _complex if obj.is_complex else _real
        lines = [f'toep {obj.dim}'] + _rows(obj.col[None, :], cell)
    elif isinstance(obj, SampleBatch):
        lines = [f'batch {obj.n} {obj.p}'] + _rows(obj.values, _real)
    elif isinstance(obj, ComplexSampleBatch):
        lines = [f'cbatch {obj.n} {obj.p}'] + _rows(obj.values, _complex)
    elif isinstance(obj, BitBatch):
        lines = [f'bits {obj.n} {obj.p}'] + _rows(obj.bits, lambda b: f'{int(b):+d}')
    elif isinstance(obj, DitheredBatch):
        lines = [f'dbits {obj.n} {obj.p} {obj.dither_level!r}']
        lines += _rows(obj.bits_a, lambda b: f'{int(b):+d}')
        lines += _rows(obj.bits_b, lambda b: f'{int(b):+d}')
    else:
        raise InvalidParameterError(f'cannot serialize {type(obj).__name__}')
    return '\n'.join(lines) + '\n'


def _parse_cell(token):
    if ',' in token:
        re, im = token.split(',', 1)
        return complex(float(re), float(im))
    return float(token)


def _parse_block(lines, rows, cols, what):
    if len(lines) < rows:
        raise DimensionMismatchError(f'{what}: expected {rows} rows, got {len(lines)}')
    values = [[_parse_cell(t) for t in line.split()] for line in lines[:rows]]
    if any(len(row) != cols for row in values):
        raise DimensionMismatchError(f'{what}: every row needs {cols} values')
    return np.array(values)


def _real_block(block, what):
    if np.iscomplexobj(block):
        raise InvalidParameterError(f'{what}: complex value in a real block')
    return block


def parse_matrix(text):
    """Inverse of format_matrix"""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise InvalidParameterError('empty matrix text')
    header = lines[0].split()
    kind, body = header[0], lines[1:]

    try:
        if kind == 'sym':
            p = int(header[1])
            return SymMatrix(_real_block(_parse_block(body, p, p, 'sym'), 'sym'))
        if kind == 'herm':
            p = int(header[1])
            return HermMatrix(_parse_block(body, p, p, 'herm').astype(complex))
        if kind == 'toep':
            p = int(header[1])
            col = _parse_block(body, 1, p, 'toep')[0]
            return ToeplitzCol(col)
        if kind in ('batch', 'cbatch', 'bits'):
            n, p = int(header[1]), int(header[2])
            block = _parse_block(body, n, p, kind) if n else np.zeros((0, p))
            if kind == 'batch':
                return SampleBatch(_real_block(block, kind))
            if kind == 'cbatch':
                return ComplexSampleBatch(block.astype(complex))
            return BitBatch(_real_block(block, kind).astype(np.int8))
        if kind == 'dbits':
            n, p, lam = int(header[1]), int(header[2]), float(header[3])
            bits_a = _real_block(_parse_block(body, n, p, 'dbits'), kind).astype(np.int8)
            bits_b = _real_block(_parse_block(body[n:], n, p, 'dbits'), kind).astype(np.int8)
            return DitheredBatch(bits_a, bits_b, lam)
    except (IndexError, ValueError) as e:
        raise InvalidParameterError(f'malformed {kind} text: {e}')
    raise InvalidParameterError(f'unknown matrix header {kind!r}')


def write_matrix(obj, path):
    try:
        with open(path, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write(format_matrix(obj))
    except OSError as e:
        raise ExportError(f'cannot write {path}: {e}', path=str(path))
    return path


def read_matrix(path):
    try:
        with open(path, encoding='utf-8') as handle:
            return parse_matrix(handle.read())
    except OSError as e:
        raise ExportError(f'cannot read {path}: {e}', path=str(path))
