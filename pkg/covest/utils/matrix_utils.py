"""
Matrix Utilities for covest
Dense linear-algebra kernel: Jacobi eigensolver, norms, projections, Cholesky
"""

import logging
from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np

from config import Config
from covest.models.matrix_model import SymMatrix, HermMatrix, ToeplitzCol, EigDecomp
from covest.services.error_handling_service import (
    NonFiniteError, NoConvergenceError, NotPSDError, DimensionMismatchError, ZeroMatrixError
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MatrixNorms:
    op: float
    frob: float
    nuclear: float
    max: float
    col12: float
    trace: float

    def to_dict(self):
        return asdict(self)


def check_finite(values, what='matrix'):
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f'{what} has NaN or infinite entries')


@lru_cache(maxsize=64)
def _round_robin_schedule(p):
    """
    Disjoint (P, Q) index pairs for the p−1 rounds (p rounded up to even) of a
    round-robin tournament; every off-diagonal pair is visited once per sweep.
    """
    m = p + (p % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        top = players[: m // 2]
        bottom = players[m // 2:][::-1]
        pairs = sorted((min(a, b), max(a, b)) for a, b in zip(top, bottom) if max(a, b) < p)
        if pairs:
            rounds.append((np.array([a for a, _ in pairs]), np.array([b for _, b in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _jacobi(a):
    """Cyclic Jacobi on a real symmetric array; returns (diagonal, V) unsorted"""
    p = a.shape[0]
    a = np.array(a, dtype=float)
    v = np.eye(p)
    scale = np.linalg.norm(a)
    if p == 1 or scale == 0.0:
        return a.diagonal().copy(), v

    stop = Config.JACOBI_OFFDIAG_TOLERANCE * scale
    schedule = _round_robin_schedule(p)
    max_sweeps = Config.JACOBI_SWEEP_FACTOR * p * p

    for _ in range(max_sweeps):
        if np.linalg.norm(a - np.diag(a.diagonal())) <= stop:
            return a.diagonal().copy(), v

        for rows, cols in schedule:
            apq = a[rows, cols]
            active = apq != 0.0
            if not active.any():
                continue
            P, Q, apq = rows[active], cols[active], apq[active]

            theta = (a[Q, Q] - a[P, P]) / (2.0 * apq)
            t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            row_p, row_q = a[P, :].copy(), a[Q, :].copy()
            a[P, :] = c[:, None] * row_p - s[:, None] * row_q
            a[Q, :] = s[:, None] * row_p + c[:, None] * row_q

            col_p, col_q = a[:, P].copy(), a[:, Q].copy()
            a[:, P] = col_p * c - col_q * s
            a[:, Q] = col_p * s + col_q * c
            a[P, Q] = 0.0
            a[Q, P] = 0.0

            vec_p, vec_q = v[:, P].copy(), v[:, Q].copy()
            v[:, P] = vec_p * c - vec_q * s
            v[:, Q] = vec_p * s + vec_q * c

    raise NoConvergenceError(f'Jacobi did not converge in {max_sweeps} sweeps', dim=p)


def _sorted_decomp(values, vectors):
    # stable: equal eigenvalues keep their original index order
    order = np.lexsort((np.arange(values.size), -values))
    vectors = vectors[:, order]
    # sign convention: largest-magnitude entry of each column is positive (real case)
    if not np.iscomplexobj(vectors):
        lead = np.argmax(np.abs(vectors), axis=0)
        signs = np.where(vectors[lead, np.arange(vectors.shape[1])] < 0, -1.0, 1.0)
        vectors = vectors * signs
    return EigDecomp(values[order], vectors)


def eig_sym(a):
    """
    Full eigendecomposition of a SymMatrix by cyclic Jacobi.

    Args:
        a (SymMatrix): symmetric input
    Returns:
        EigDecomp: eigenvalues descending, orthonormal eigenvectors
    Raises:
        NonFiniteError, NoConvergenceError
    """
    entries = a.entries if isinstance(a, SymMatrix) else np.asarray(a, dtype=float)
    check_finite(entries)
    values, vectors = _jacobi(entries)
    return _sorted_decomp(values, vectors)


def _pivoted_complex_basis(candidates, k):
    """k orthonormal complex vectors spanning the columns of `candidates`"""
    residual = candidates.copy()
    basis = []
    for _ in range(k):
        norms = np.linalg.norm(residual, axis=0)
        j = int(np.argmax(norms))
        q = residual[:, j] / norms[j]
        basis.append(q)
        residual = residual - np.outer(q, q.conj() @ residual)
    return np.column_stack(basis)


def eig_herm(a):
    """
    Eigendecomposition of a HermMatrix via the real embedding [[Re, −Im], [Im, Re]].

    Every eigenvalue of the embedding appears twice; each cluster of 2k equal
    values is turned into k orthonormal complex eigenvectors.
    """
    entries = a.entries if isinstance(a, HermMatrix) else np.asarray(a, dtype=complex)
    check_finite(entries)
    m = entries.shape[0]
    re, im = entries.real, entries.imag
    embedded = np.block([[re, -im], [im, re]])
    values, vectors = _jacobi(embedded)

    order = np.lexsort((np.arange(values.size), -values))
    values, vectors = values[order], vectors[:, order]
    complex_vectors = vectors[:m, :] + 1j * vectors[m:, :]

    tol = Config.HERM_PAIR_TOLERANCE * max(1.0, float(np.max(np.abs(values))))
    out_vectors = []
    start = 0
    while start < values.size:
        stop = start + 1
        while stop < values.size and values[start] - values[stop] <= tol:
            stop += 1
        k = max(1, (stop - start) // 2)
        out_vectors.append(_pivoted_complex_basis(complex_vectors[:, start:stop], k))
        start = stop

    basis = np.column_stack(out_vectors)[:, :m]
    if basis.shape[1] < m:
        raise NoConvergenceError('eigenvalue pairing of the real embedding failed', dim=m)
    rayleigh = np.real(np.einsum('ij,ik,kj->j', basis.conj(), entries, basis))
    return _sorted_decomp(rayleigh, basis)


def eig(a):
    """Dispatch to eig_sym or eig_herm"""
    return eig_herm(a) if isinstance(a, HermMatrix) else eig_sym(a)


def norms(a):
    """Operator, Frobenius, nuclear, max, max-column and trace of a Sym/Herm matrix"""
    entries = a.entries
    check_finite(entries)
    values = eig(a).values
    return MatrixNorms(
        op=float(np.max(np.abs(values))),
        frob=float(np.linalg.norm(entries)),
        nuclear=float(np.sum(np.abs(values))),
        max=float(np.max(np.abs(entries))),
        col12=float(np.max(np.linalg.norm(entries, axis=0))),
        trace=float(np.real(np.trace(entries)))
    )


def op_norm(a):
    return norms(a).op


def psd_project(a):
    """Nearest PSD matrix in Frobenius norm: clamp negative eigenvalues to zero"""
    decomp = eig(a)
    projected = decomp.reconstruct(np.maximum(decomp.values, 0.0))
    return HermMatrix(projected) if isinstance(a, HermMatrix) else SymMatrix(projected.real)


def toeplitz_project(a):
    """
    Average along the diagonals: col[r] = mean of entries with i − j = r.

    Sums accumulate in row order (np.bincount), matching a plain loop exactly.
    """
    entries = a.entries
    check_finite(entries)
    p = entries.shape[0]
    offsets = np.subtract.outer(np.arange(p), np.arange(p))
    lower = offsets >= 0
    index = offsets[lower]
    counts = (p - np.arange(p)).astype(float)

    real = np.bincount(index, weights=entries.real[lower], minlength=p) / counts
    if isinstance(a, HermMatrix):
        imag = np.bincount(index, weights=entries.imag[lower], minlength=p) / counts
        col = real + 1j * imag
        col[0] = real[0]
        return ToeplitzCol(col)
    return ToeplitzCol(real)


def hadamard(a, mask):
    """Entrywise product with a Mask, keeping the matrix type"""
    if a.dim != mask.dim:
        raise DimensionMismatchError(f'matrix is {a.dim}×{a.dim}, mask is {mask.dim}×{mask.dim}')
    product = a.entries * mask.entries
    return HermMatrix(product) if isinstance(a, HermMatrix) else SymMatrix(product)


def _semidefinite_cholesky(a):
    """Cholesky that leaves zero columns for zero pivots; None if not PSD"""
    p = a.shape[0]
    low = np.zeros_like(a)
    scale = float(np.max(np.abs(a.diagonal().real))) if p else 0.0
    pivot_tol = Config.CHOLESKY_PIVOT_TOLERANCE * scale
    column_tol = np.sqrt(Config.CHOLESKY_RIDGE) * max(scale, np.finfo(float).tiny)

    for j in range(p):
        done = low[j, :j]
        d = float(np.real(a[j, j]) - np.sum(np.abs(done) ** 2))
        residual = a[j + 1:, j] - low[j + 1:, :j] @ done.conj()
        if d > pivot_tol:
            root = np.sqrt(d)
            low[j, j] = root
            low[j + 1:, j] = residual / root
        elif d >= -pivot_tol and np.all(np.abs(residual) <= column_tol):
            continue
        else:
            return None
    return low


def cholesky(a):
    """
    Lower-triangular L with L Lᴴ = A for PSD A.

    A ridge of CHOLESKY_RIDGE·trace/p is added once if the bare factorization
    fails.
    """
    entries = np.array(a.entries)
    check_finite(entries)
    low = _semidefinite_cholesky(entries)
    if low is not None:
        return low

    p = entries.shape[0]
    ridge = Config.CHOLESKY_RIDGE * float(np.real(np.trace(entries))) / p
    logger.warning(f"Cholesky failed on {p}x{p} matrix, retrying with ridge {ridge:.3g}")
    if ridge > 0:
        low = _semidefinite_cholesky(entries + ridge * np.eye(p))
    if low is None:
        raise NotPSDError('matrix is not positive semi-definite', dim=p)
    return low


def correlation_normalize(a):
    """D^{-1/2} A D^{-1/2}: the correlation matrix of a covariance"""
    diag = a.diagonal()
    if np.any(diag <= 0):
        raise ZeroMatrixError('correlation needs a strictly positive diagonal')
    inv = 1.0 / np.sqrt(diag)
    return SymMatrix(a.entries * np.outer(inv, inv))


def is_psd(a, rel_tol=1e-10):
    decomp = eig(a)
    return decomp.values[-1] >= -rel_tol * max(1.0, float(np.max(np.abs(decomp.values))))
