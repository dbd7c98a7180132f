"""Matrix splittings and the classical iterative solvers.

These recursions are the reference every quantum backend is checked against.
"""

from __future__ import annotations

import logging
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import numkit
from .errors import DimensionError, SplitError
from .models import IterateTrajectory, SplitSystem

logger = logging.getLogger(__name__)


def fidelity_error(truth: np.ndarray, iterate: np.ndarray) -> float:
    """``1 - |<truth|iterate>|^2`` between unit-normalized vectors."""
    nt = np.linalg.norm(truth)
    ni = np.linalg.norm(iterate)
    if nt == 0 or ni == 0:
        return 0.0 if nt == ni else 1.0
    overlap = abs(np.vdot(truth / nt, iterate / ni)) ** 2
    return float(max(0.0, 1.0 - overlap))


def euclidean_error(truth: np.ndarray, iterate: np.ndarray) -> float:
    """Relative Euclidean error ``‖x - x*‖ / ‖x*‖``."""
    nt = np.linalg.norm(truth)
    diff = np.linalg.norm(np.asarray(iterate) - np.asarray(truth))
    return float(diff / nt) if nt > 0 else float(diff)


def split_jacobi(A, b: np.ndarray, x0: Optional[np.ndarray] = None) -> SplitSystem:
    """Split ``A = D + B + T``; ``x0`` defaults to ``b``."""
    csr = numkit.to_csr(A).astype(float)
    n = numkit.require_square(csr)
    b = np.asarray(b, dtype=float)
    if b.shape != (n,):
        raise DimensionError(f"Right-hand side has shape {b.shape}, expected ({n},)")
    D = csr.diagonal().copy()
    zero_rows = np.flatnonzero(D == 0)
    if zero_rows.size:
        raise SplitError(int(zero_rows[0]))
    R = (csr - sp.diags(D, format="csr")).tocsr()
    R.eliminate_zeros()
    B = sp.tril(R, k=-1, format="csr")
    T = sp.triu(R, k=1, format="csr")
    x0 = b.copy() if x0 is None else np.asarray(x0, dtype=float)
    return SplitSystem(csr, D, 1.0 / D, R, B, T, b, x0)


def _trajectory(
    split: SplitSystem,
    K: int,
    step: Callable[[np.ndarray], np.ndarray],
    truth: Optional[np.ndarray],
    track_errors: bool,
) -> IterateTrajectory:
    if K < 0:
        raise ValueError("K must be non-negative")
    if track_errors and truth is None:
        truth = numkit.solve_direct(split.A, split.b)
    iterates = [split.x0.copy()]
    for _ in range(K):
        iterates.append(step(iterates[-1]))
    errors, euclid = [], []
    if track_errors:
        errors = [fidelity_error(truth, x) for x in iterates]
        euclid = [euclidean_error(truth, x) for x in iterates]
        logger.debug("trajectory K=%d final fidelity error %.3e", K, errors[-1])
    return IterateTrajectory(iterates, errors, euclid)


def jacobi_step(split: SplitSystem, x: np.ndarray) -> np.ndarray:
    return split.D_inv * (split.b - split.R @ x)


def woodbury_omega(split: SplitSystem, v: np.ndarray, L: int) -> np.ndarray:
    """``Σ_{l=0}^{L} (-D^{-1}B)^l v`` by repeated matvec."""
    acc = v.copy()
    term = v
    for _ in range(L):
        term = -split.D_inv * (split.B @ term)
        acc = acc + term
    return acc


def jacobi_iterate(
    split: SplitSystem, K: int, truth: Optional[np.ndarray] = None, track_errors: bool = True
) -> IterateTrajectory:
    return _trajectory(split, K, lambda x: jacobi_step(split, x), truth, track_errors)


def gauss_seidel_iterate(
    split: SplitSystem, K: int, truth: Optional[np.ndarray] = None, track_errors: bool = True
) -> IterateTrajectory:
    lower = (split.B + sp.diags(split.D)).tocsr()

    def step(x: np.ndarray) -> np.ndarray:
        return spla.spsolve_triangular(lower, split.b - split.T @ x, lower=True)

    return _trajectory(split, K, step, truth, track_errors)


def woodbury_gs_iterate(
    split: SplitSystem,
    K: int,
    L: int,
    truth: Optional[np.ndarray] = None,
    track_errors: bool = True,
) -> IterateTrajectory:
    """Gauss-Seidel with ``(D+B)^{-1}`` replaced by the truncated series ``Ω D^{-1}``."""
    if L < 0:
        raise ValueError("L must be non-negative")

    def step(x: np.ndarray) -> np.ndarray:
        return woodbury_omega(split, split.D_inv * (split.b - split.T @ x), L)

    return _trajectory(split, K, step, truth, track_errors)


def iteration_matrix(split: SplitSystem) -> sp.csr_matrix:
    """``D^{-1} R``."""
    return (sp.diags(split.D_inv) @ split.R).tocsr()


def spectral_radius(split: SplitSystem) -> float:
    """Largest eigenvalue magnitude of ``D^{-1} R``."""
    Q = iteration_matrix(split)
    if Q.nnz == 0:
        return 0.0
    if Q.shape[0] <= numkit.DENSE_LIMIT:
        return float(np.abs(scipy.linalg.eigvals(Q.toarray())).max())
    vals = spla.eigs(Q, k=1, which="LM", return_eigenvectors=False, tol=1e-10)
    return float(np.abs(vals).max())


def iterations_to_threshold(
    split: SplitSystem,
    threshold: float,
    truth: Optional[np.ndarray] = None,
    max_iter: int = 10_000,
) -> Optional[int]:
    """Smallest ``k`` whose Jacobi iterate has fidelity error ``<= threshold``."""
    if truth is None:
        truth = numkit.solve_direct(split.A, split.b)
    x = split.x0.copy()
    for k in range(max_iter + 1):
        if fidelity_error(truth, x) <= threshold:
            return k
        x = jacobi_step(split, x)
    logger.warning("Threshold %.1e not reached within %d iterations", threshold, max_iter)
    return None
