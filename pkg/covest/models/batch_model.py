"""
Sample Batch Models for covest
Real and complex sample matrices plus one-bit and dithered bit batches
"""

from dataclasses import dataclass

import numpy as np

from covest.services.error_handling_service import DimensionMismatchError, InvalidParameterError


def _readonly_2d(values, dtype, name):
    arr = np.array(values, dtype=dtype, copy=True)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"{name} needs an n×p array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """n×p real samples, one sample per row"""
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'values', _readonly_2d(self.values, float, 'SampleBatch'))

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def to_dict(self):
        return {'kind': 'batch', 'n': self.n, 'p': self.p, 'values': self.values.tolist()}

    def __repr__(self):
        return f'<SampleBatch n={self.n} p={self.p}>'


@dataclass(frozen=True, eq=False)
class ComplexSampleBatch:
    """N×M complex samples (pilot observations), one sample per row"""
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'values', _readonly_2d(self.values, complex, 'ComplexSampleBatch'))

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def __repr__(self):
        return f'<ComplexSampleBatch N={self.n} M={self.p}>'


def _check_bits(bits):
    if not np.all(np.abs(bits) == 1):
        raise InvalidParameterError('bit batches only hold +1 and -1')


@dataclass(frozen=True, eq=False)
class BitBatch:
    """n×p matrix of one-bit samples in {−1, +1}"""
    bits: np.ndarray

    def __post_init__(self):
        bits = _readonly_2d(self.bits, np.int8, 'BitBatch')
        _check_bits(bits)
        object.__setattr__(self, 'bits', bits)

    @property
    def n(self):
        return self.bits.shape[0]

    @property
    def p(self):
        return self.bits.shape[1]

    def to_dict(self):
        return {'kind': 'bits', 'n': self.n, 'p': self.p, 'bits': self.bits.tolist()}

    def __repr__(self):
        return f'<BitBatch n={self.n} p={self.p}>'


@dataclass(frozen=True, eq=False)
class DitheredBatch:
    """Two n×p bit matrices quantized from the same samples with independent dithers"""
    bits_a: np.ndarray
    bits_b: np.ndarray
    dither_level: float

    def __post_init__(self):
        bits_a = _readonly_2d(self.bits_a, np.int8, 'DitheredBatch')
        bits_b = _readonly_2d(self.bits_b, np.int8, 'DitheredBatch')
        if bits_a.shape != bits_b.shape:
            raise DimensionMismatchError('dithered bit blocks must have equal shapes')
        _check_bits(bits_a)
        _check_bits(bits_b)
        if not self.dither_level > 0:
            raise InvalidParameterError(f'dither level must be positive, got {self.dither_level}')
        object.__setattr__(self, 'bits_a', bits_a)
        object.__setattr__(self, 'bits_b', bits_b)
        object.__setattr__(self, 'dither_level', float(self.dither_level))

    @property
    def n(self):
        return self.bits_a.shape[0]

    @property
    def p(self):
        return self.bits_a.shape[1]

    def to_dict(self):
        return {
            'kind': 'dbits',
            'n': self.n,
            'p': self.p,
            'dither_level': self.dither_level,
            'bits_a': self.bits_a.tolist(),
            'bits_b': self.bits_b.tolist()
        }

    def __repr__(self):
        return f'<DitheredBatch n={self.n} p={self.p} lambda={self.dither_level:.4g}>'
