"""
NNLS Utilities for covest
Lawson–Hanson active-set solver for min ‖Au − b‖ subject to u >= 0
"""

import logging

import numpy as np

from config import Config
from covest.models.mimo_model import NnlsResult
from covest.services.error_handling_service import (
    DimensionMismatchError, MaxIterationsError
)
from covest.utils.matrix_utils import check_finite

logger = logging.getLogger(__name__)


def nnls_scale(matrix, rhs):
    """‖A‖_F·‖b‖, or 1 when either factor vanishes"""
    scale = float(np.linalg.norm(matrix) * np.linalg.norm(rhs))
    return scale if scale > 0.0 else 1.0


def _passive_solve(matrix, rhs, passive):
    z = np.zeros(matrix.shape[1])
    if passive.any():
        z[passive] = np.linalg.lstsq(matrix[:, passive], rhs, rcond=None)[0]
    return z


def lawson_hanson(matrix, rhs, max_iterations=None, strict=False):
    """
    Active-set NNLS on a real system.

    Args:
        matrix (np.ndarray): m×K real matrix A
        rhs (np.ndarray): length-m real vector b
        max_iterations (int): outer-iteration cap, default NNLS_ITERATION_FACTOR·K
        strict (bool): raise MaxIterationsError instead of returning the last iterate
    Returns:
        NnlsResult: u >= 0, residual ‖Au − b‖, iteration count, convergence flag
    """
    matrix = np.asarray(matrix, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if matrix.ndim != 2 or rhs.shape != (matrix.shape[0],):
        raise DimensionMismatchError(
            f'NNLS system is {matrix.shape} with right-hand side {rhs.shape}'
        )
    check_finite(matrix, 'NNLS matrix')
    check_finite(rhs, 'NNLS right-hand side')

    k = matrix.shape[1]
    cap = max_iterations if max_iterations is not None else Config.NNLS_ITERATION_FACTOR * max(k, 1)
    tol = Config.NNLS_DUAL_TOLERANCE * nnls_scale(matrix, rhs)

    u = np.zeros(k)
    passive = np.zeros(k, dtype=bool)
    dual = matrix.T @ (rhs - matrix @ u)
    iterations = 0
    converged = False

    while True:
        free = ~passive
        if not free.any() or np.max(np.where(free, dual, -np.inf)) <= tol:
            converged = True
            break
        if iterations >= cap:
            break
        iterations += 1

        passive[int(np.argmax(np.where(free, dual, -np.inf)))] = True
        z = _passive_solve(matrix, rhs, passive)

        # step back towards the feasible region until all passive coefficients are positive
        while passive.any() and np.any(z[passive] <= 0.0):
            blocking = np.flatnonzero(passive & (z <= 0.0))
            gap = u[blocking] - z[blocking]
            ratios = np.divide(u[blocking], gap, out=np.zeros(blocking.size), where=gap > 0.0)
            step = int(np.argmin(ratios))
            u = u + ratios[step] * (z - u)
            u[blocking[step]] = 0.0
            passive &= u > np.finfo(float).eps * max(1.0, float(np.max(np.abs(u))))
            u[~passive] = 0.0
            z = _passive_solve(matrix, rhs, passive)

        u = z
        dual = matrix.T @ (rhs - matrix @ u)

    residual = float(np.linalg.norm(matrix @ u - rhs))
    if converged and not kkt_satisfied(matrix, rhs, u):
        logger.warning(f"NNLS optimality check failed after {iterations} iterations "
                       f"(violation {kkt_violation(matrix, rhs, u):.3g})")
    if not converged:
        logger.warning(f"NNLS stopped at the iteration cap {cap} (K={k}, residual {residual:.3g})")
        if strict:
            raise MaxIterationsError(f'NNLS did not converge in {cap} iterations',
                                     iterations=cap, residual=residual)

    return NnlsResult(u=u, residual=residual, iterations=iterations, converged=converged)


def kkt_violation(matrix, rhs, u):
    """
    Largest violation of the NNLS optimality conditions, relative to nnls_scale.

    With g = Aᵀ(Au − b): |g_i| for u_i > 0, max(−g_i, 0) for u_i = 0, and max(−u_i, 0).
    """
    matrix = np.asarray(matrix, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    u = np.asarray(u, dtype=float)
    gradient = matrix.T @ (matrix @ u - rhs)
    active = u > 0.0
    violations = np.concatenate([
        np.abs(gradient[active]),
        np.maximum(-gradient[~active], 0.0),
        np.maximum(-u, 0.0)
    ])
    worst = float(np.max(violations)) if violations.size else 0.0
    return worst / nnls_scale(matrix, rhs)


def kkt_satisfied(matrix, rhs, u, tolerance=None):
    limit = Config.NNLS_KKT_TOLERANCE if tolerance is None else tolerance
    return kkt_violation(matrix, rhs, u) <= limit
