"""Matrix Market input and output for systems and right-hand sides."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import DimensionError, MissingInputError
from .models import LinearSystem
from .numkit import SparseOperator, to_csr

logger = logging.getLogger(__name__)


def _require_file(path: Path, what: str) -> Path:
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"{what} file not found: {path}")
    return path


def read_matrix(path: Path) -> SparseOperator:
    path = _require_file(path, "Matrix")
    data = scipy.io.mmread(str(path))
    matrix = sp.csr_matrix(data, dtype=float)
    if matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"{path.name}: matrix must be square, got {matrix.shape}")
    logger.info("Read %dx%d matrix with %d nonzeros from %s", *matrix.shape, matrix.nnz, path)
    return SparseOperator(matrix)


def read_vector(path: Path) -> np.ndarray:
    """Dense ``N x 1`` array or a coordinate column; returned flat."""
    path = _require_file(path, "Right-hand side")
    data = scipy.io.mmread(str(path))
    array = data.toarray() if sp.issparse(data) else np.asarray(data)
    if array.ndim == 2 and 1 not in array.shape:
        raise DimensionError(f"{path.name}: expected a vector, got shape {array.shape}")
    return array.astype(float).reshape(-1)


def write_matrix(path: Path, matrix, comment: str = "") -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(str(path), to_csr(matrix).tocoo(), comment=comment)


def write_vector(path: Path, vector: np.ndarray, comment: str = "") -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(str(path), np.asarray(vector, dtype=float).reshape(-1, 1), comment=comment)


def load_system(matrix_path: Path, rhs_path: Optional[Path] = None) -> LinearSystem:
    """System from files; the right-hand side defaults to all ones."""
    A = read_matrix(matrix_path)
    b = read_vector(rhs_path) if rhs_path is not None else np.ones(A.dimension)
    if b.shape != (A.dimension,):
        raise DimensionError(f"Right-hand side has {b.size} entries, matrix has {A.dimension} rows")
    return LinearSystem(A, b)
