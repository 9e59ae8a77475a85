"""
Matrix Models for covest
Dense symmetric and Hermitian matrices, Toeplitz columns, masks and eigendecompositions
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from covest.services.error_handling_service import DimensionMismatchError, InvalidParameterError


def _readonly(values, dtype):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _square(values, dtype, name):
    arr = np.array(values, dtype=dtype, copy=True)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DimensionMismatchError(f"{name} needs a non-empty square array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """
    Dense real symmetric p×p matrix.
    Symmetry is exact: the stored entries are (A + Aᵀ)/2 of the input.
    """
    entries: np.ndarray

    def __post_init__(self):
        arr = _square(self.entries, float, 'SymMatrix')
        object.__setattr__(self, 'entries', _readonly(0.5 * (arr + arr.T), float))

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def is_complex(self):
        return False

    @classmethod
    def from_lower(cls, values):
        """Symmetric completion of the lower triangle of `values`"""
        low = np.tril(np.array(values, dtype=float))
        return cls(low + np.tril(low, -1).T)

    @classmethod
    def identity(cls, p):
        return cls(np.eye(p))

    @classmethod
    def zeros(cls, p):
        return cls(np.zeros((p, p)))

    @classmethod
    def ones(cls, p):
        return cls(np.ones((p, p)))

    @classmethod
    def diag(cls, values):
        return cls(np.diag(np.asarray(values, dtype=float)))

    def diagonal(self):
        return self.entries.diagonal().copy()

    def __add__(self, other):
        return SymMatrix(self.entries + _entries_of(other, self.dim))

    def __sub__(self, other):
        return SymMatrix(self.entries - _entries_of(other, self.dim))

    def __mul__(self, scalar):
        return SymMatrix(self.entries * float(scalar))

    __rmul__ = __mul__

    def to_dict(self):
        return {'kind': 'sym', 'dim': self.dim, 'entries': self.entries.tolist()}

    def __repr__(self):
        return f'<SymMatrix p={self.dim}>'


@dataclass(frozen=True, eq=False)
class HermMatrix:
    """
    Dense complex Hermitian M×M matrix.
    Stored as (A + Aᴴ)/2, so the diagonal imaginary parts are exactly zero.
    """
    entries: np.ndarray

    def __post_init__(self):
        arr = _square(self.entries, complex, 'HermMatrix')
        object.__setattr__(self, 'entries', _readonly(0.5 * (arr + arr.conj().T), complex))

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def is_complex(self):
        return True

    @classmethod
    def identity(cls, m):
        return cls(np.eye(m))

    @classmethod
    def zeros(cls, m):
        return cls(np.zeros((m, m)))

    @classmethod
    def diag(cls, values):
        return cls(np.diag(np.asarray(values, dtype=float)))

    def diagonal(self):
        return self.entries.diagonal().real.copy()

    def __add__(self, other):
        return HermMatrix(self.entries + _entries_of(other, self.dim))

    def __sub__(self, other):
        return HermMatrix(self.entries - _entries_of(other, self.dim))

    def __mul__(self, scalar):
        return HermMatrix(self.entries * float(scalar))

    __rmul__ = __mul__

    def to_dict(self):
        return {
            'kind': 'herm',
            'dim': self.dim,
            'real': self.entries.real.tolist(),
            'imag': self.entries.imag.tolist()
        }

    def __repr__(self):
        return f'<HermMatrix M={self.dim}>'


def _entries_of(other, dim):
    values = other.entries if hasattr(other, 'entries') else np.asarray(other)
    if values.shape != (dim, dim):
        raise DimensionMismatchError(f"expected {dim}×{dim} operand, got {values.shape}")
    return values


@dataclass(frozen=True, eq=False)
class ToeplitzCol:
    """First column of a symmetric (or Hermitian) Toeplitz matrix"""
    col: np.ndarray

    def __post_init__(self):
        values = np.array(self.col, copy=True)
        if values.ndim != 1 or values.size < 1:
            raise DimensionMismatchError(f"ToeplitzCol needs a non-empty vector, got shape {values.shape}")
        dtype = complex if np.iscomplexobj(values) else float
        if dtype is complex:
            values = values.astype(complex)
            values[0] = values[0].real
        object.__setattr__(self, 'col', _readonly(values, dtype))

    @property
    def dim(self):
        return self.col.size

    @property
    def is_complex(self):
        return np.iscomplexobj(self.col)

    def expand(self):
        """Full matrix with entry (i, j) = col[i − j] below the diagonal"""
        if self.is_complex:
            return HermMatrix(toeplitz(self.col, self.col.conj()))
        return SymMatrix(toeplitz(self.col))

    def to_dict(self):
        if self.is_complex:
            return {'kind': 'toep', 'dim': self.dim, 'real': self.col.real.tolist(),
                    'imag': self.col.imag.tolist()}
        return {'kind': 'toep', 'dim': self.dim, 'col': self.col.tolist()}

    def __repr__(self):
        return f'<ToeplitzCol p={self.dim} complex={self.is_complex}>'


@dataclass(frozen=True, eq=False)
class Mask:
    """Symmetric p×p weight matrix with entries in [0, 1]"""
    entries: np.ndarray

    def __post_init__(self):
        arr = _square(self.entries, float, 'Mask')
        if not np.array_equal(arr, arr.T):
            raise InvalidParameterError('mask must be symmetric')
        if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
            raise InvalidParameterError('mask entries must lie in [0, 1]')
        object.__setattr__(self, 'entries', _readonly(arr, float))

    @property
    def dim(self):
        return self.entries.shape[0]

    @classmethod
    def ones(cls, p):
        return cls(np.ones((p, p)))

    @classmethod
    def identity(cls, p):
        return cls(np.eye(p))

    @classmethod
    def banded(cls, p, width):
        """Keeps entries with |i − j| + 1 ≤ width"""
        if not 1 <= width <= p:
            raise InvalidParameterError(f'band width must lie in [1, {p}], got {width}')
        offsets = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
        return cls((offsets + 1 <= width).astype(float))

    @classmethod
    def toeplitz(cls, col):
        values = np.asarray(col.col if isinstance(col, ToeplitzCol) else col, dtype=float)
        return cls(toeplitz(values))

    def first_column(self):
        return ToeplitzCol(self.entries[:, 0])

    def to_dict(self):
        return {'kind': 'mask', 'dim': self.dim, 'entries': self.entries.tolist()}

    def __repr__(self):
        return f'<Mask p={self.dim}>'


@dataclass(frozen=True, eq=False)
class EigDecomp:
    """Eigenvalues sorted descending with orthonormal eigenvector columns"""
    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        vectors = np.asarray(self.vectors)
        if vectors.shape != (values.size, values.size):
            raise DimensionMismatchError('eigenvector matrix does not match eigenvalue count')
        dtype = complex if np.iscomplexobj(vectors) else float
        object.__setattr__(self, 'values', _readonly(values, float))
        object.__setattr__(self, 'vectors', _readonly(vectors, dtype))

    @property
    def dim(self):
        return self.values.size

    def top(self, d):
        """Eigenvectors of the d largest eigenvalues"""
        return self.vectors[:, :d]

    def reconstruct(self, values=None):
        """V diag(values) Vᴴ, with the stored eigenvalues by default"""
        lam = self.values if values is None else np.asarray(values, dtype=float)
        return (self.vectors * lam) @ self.vectors.conj().T

    def to_dict(self):
        return {'values': self.values.tolist(), 'dim': self.dim}

    def __repr__(self):
        return f'<EigDecomp p={self.dim} max={self.values[0]:.4g} min={self.values[-1]:.4g}>'
