"""Dense and sparse linear-algebra kernels shared by every solver module.

Dense matrices are plain 2-D ``numpy.ndarray`` objects. Sparse matrices are
held by :class:`SparseOperator`, a thin CSR wrapper that also carries
structural tags (``tridiagonal``, ``banded``, ``block``, ``diagonal``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, NamedTuple, Sequence, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionError, NotPSDError, SingularMatrixError

logger = logging.getLogger(__name__)

# Above this size sparse inputs are never densified for norms and spectra.
DENSE_LIMIT = 2048


@dataclass(frozen=True)
class SparseOperator:
    """Square sparse matrix with optional structural tags."""

    matrix: sp.csr_matrix
    tags: FrozenSet[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        rows, cols = self.matrix.shape
        if rows != cols:
            raise DimensionError(f"SparseOperator must be square, got {rows}x{cols}")

    @classmethod
    def from_matrix(cls, matrix, tags: Iterable[str] = ()) -> "SparseOperator":
        return cls(sp.csr_matrix(matrix), frozenset(tags))

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def shape(self) -> tuple:
        return self.matrix.shape

    def __matmul__(self, other):
        return self.matrix @ other

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


Matrix = Union[np.ndarray, sp.spmatrix, SparseOperator]


@dataclass(frozen=True)
class GivensRotation:
    """Rotation by ``theta`` in the plane of basis states ``i < j``.

    Acting on the (i, j) coordinates it is ``[[cos, -sin], [sin, cos]]``.
    """

    i: int
    j: int
    theta: float

    def __post_init__(self) -> None:
        if not 0 <= self.i < self.j:
            raise DimensionError(f"Givens indices must satisfy 0 <= i < j, got ({self.i}, {self.j})")

    def matrix(self, dim: int) -> np.ndarray:
        if self.j >= dim:
            raise DimensionError(f"Rotation ({self.i}, {self.j}) outside dimension {dim}")
        g = np.eye(dim)
        c, s = math.cos(self.theta), math.sin(self.theta)
        g[self.i, self.i] = c
        g[self.i, self.j] = -s
        g[self.j, self.i] = s
        g[self.j, self.j] = c
        return g


class GivensQR(NamedTuple):
    rotations: List[GivensRotation]
    residual: np.ndarray
    upper: np.ndarray


def is_sparse(M) -> bool:
    return isinstance(M, SparseOperator) or sp.issparse(M)


def to_csr(M) -> sp.csr_matrix:
    if isinstance(M, SparseOperator):
        return M.matrix
    return sp.csr_matrix(M)


def to_dense(M) -> np.ndarray:
    if isinstance(M, SparseOperator):
        return M.toarray()
    if sp.issparse(M):
        return M.toarray()
    return np.asarray(M)


def require_square(M) -> int:
    shape = M.shape
    if len(shape) != 2 or shape[0] != shape[1]:
        raise DimensionError(f"Expected a square matrix, got shape {shape}")
    return shape[0]


def _require_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise ValueError("Matrix contains non-finite entries")


def _rotate_rows(work: np.ndarray, i: int, j: int, c: float, s: float) -> None:
    """Apply the transpose of a Givens rotation to rows i and j in place."""
    row_i = work[i].copy()
    row_j = work[j].copy()
    work[i] = c * row_i + s * row_j
    work[j] = -s * row_i + c * row_j


def givens_qr(M, zero_tol: float = 1e-14) -> GivensQR:
    """Factor ``M = (G_1 G_2 ... G_m) · diag(residual) · upper``.

    Entries already below ``zero_tol`` are skipped, so banded and diagonal
    inputs emit fewer rotations. ``upper`` has a non-negative diagonal; for an
    orthogonal input it is the identity and ``residual`` holds the signs.
    """
    work = np.array(to_dense(M), dtype=float)
    n = require_square(work)
    _require_finite(work)
    rotations: List[GivensRotation] = []
    for col in range(n - 1):
        for row in range(col + 1, n):
            b = work[row, col]
            if abs(b) <= zero_tol:
                continue
            a = work[col, col]
            theta = math.atan2(b, a)
            _rotate_rows(work, col, row, math.cos(theta), math.sin(theta))
            work[row, col] = 0.0
            rotations.append(GivensRotation(col, row, theta))
    residual = np.where(np.diag(work) < 0, -1.0, 1.0)
    upper = residual[:, None] * work
    logger.debug("givens_qr: %d rotations for %dx%d input", len(rotations), n, n)
    return GivensQR(rotations, residual, upper)


def givens_reduce_vector(v: np.ndarray, zero_tol: float = 1e-14) -> tuple[List[GivensRotation], float]:
    """Rotations with ``(G_1 ... G_m) · (pivot · e_0) = v``.

    Returns the rotations and the signed pivot (``±‖v‖``).
    """
    work = np.array(v, dtype=float).reshape(-1)
    _require_finite(work)
    rotations: List[GivensRotation] = []
    for row in range(1, work.size):
        b = work[row]
        if abs(b) <= zero_tol:
            continue
        a = work[0]
        theta = math.atan2(b, a)
        work[0] = math.hypot(a, b)
        work[row] = 0.0
        rotations.append(GivensRotation(0, row, theta))
    return rotations, float(work[0])


def compose_givens(rotations: Sequence[GivensRotation], dim: int) -> np.ndarray:
    """Dense product ``G_1 G_2 ... G_m``."""
    out = np.eye(dim)
    for rot in rotations:
        out = out @ rot.matrix(dim)
    return out


def psd_sqrt(S, neg_tol: float = 1e-10, zero_tol: float = 1e-12) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in ``[-neg_tol, zero_tol]`` are clamped to zero.
    """
    S = to_dense(S).astype(float)
    require_square(S)
    if not np.allclose(S, S.T, atol=1e-12):
        raise NotPSDError("psd_sqrt requires a symmetric matrix")
    S = (S + S.T) / 2
    w, V = scipy.linalg.eigh(S)
    if w.size and w.min() < -neg_tol:
        raise NotPSDError(f"Matrix has eigenvalue {w.min():.3e} below -{neg_tol}")
    w = np.where(w <= zero_tol, 0.0, w)
    root = (V * np.sqrt(w)) @ V.T
    return (root + root.T) / 2


def spectral_norm(M) -> float:
    """Largest singular value."""
    if is_sparse(M):
        csr = to_csr(M)
        _require_finite(csr.data)
        if csr.nnz == 0:
            return 0.0
        if sp.triu(csr, 1).nnz == 0 and sp.tril(csr, -1).nnz == 0:
            return float(np.abs(csr.diagonal()).max())
        if csr.shape[0] <= DENSE_LIMIT:
            return float(scipy.linalg.norm(csr.toarray(), 2))
        sigma = spla.svds(csr, k=1, return_singular_vectors=False, tol=1e-10)
        return float(sigma[0])
    dense = np.atleast_2d(np.asarray(M))
    _require_finite(dense)
    return float(scipy.linalg.norm(dense, 2))


def singular_values(M) -> np.ndarray:
    dense = to_dense(M)
    _require_finite(dense)
    return scipy.linalg.svdvals(dense)


def condition_number(M) -> float:
    """``σ_max / σ_min`` of a square matrix."""
    require_square(M)
    sigma = singular_values(M)
    s_max, s_min = sigma[0], sigma[-1]
    if s_max == 0 or s_min <= 1e-13 * s_max:
        raise SingularMatrixError("Matrix is numerically singular")
    return float(s_max / s_min)


def solve_direct(A, b: np.ndarray) -> np.ndarray:
    """Solve ``Ax = b`` by LU with partial pivoting."""
    n = require_square(A)
    b = np.asarray(b)
    if b.shape[0] != n:
        raise DimensionError(f"Right-hand side has length {b.shape[0]}, expected {n}")
    if is_sparse(A):
        lu = to_csr(A).tocsc()
        try:
            x = spla.splu(lu).solve(np.asarray(b, dtype=float))
        except RuntimeError as exc:
            raise SingularMatrixError(f"Sparse LU failed: {exc}") from exc
    else:
        dense = np.asarray(A, dtype=float)
        lu, piv = scipy.linalg.lu_factor(dense, check_finite=True)
        pivots = np.abs(np.diag(lu))
        if pivots.min() <= 1e-14 * max(pivots.max(), 1.0):
            raise SingularMatrixError("Matrix is singular to working precision")
        x = scipy.linalg.lu_solve((lu, piv), b)
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("Direct solve produced non-finite values")
    return x


def tridiagonal(n: int, lower: float, diag: float, upper: float) -> SparseOperator:
    """Constant-coefficient tridiagonal matrix ``tridiag(lower, diag, upper)``."""
    matrix = sp.diags(
        [np.full(n - 1, lower), np.full(n, diag), np.full(n - 1, upper)],
        offsets=[-1, 0, 1],
        format="csr",
    )
    return SparseOperator(matrix, frozenset({"tridiagonal", "banded"}))


def next_power_of_two(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


def pad_vector(v: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros(size, dtype=np.asarray(v).dtype)
    out[: len(v)] = v
    return out


def pad_matrix(M: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros((size, size), dtype=M.dtype)
    out[: M.shape[0], : M.shape[1]] = M
    return out
