"""Dataclasses used throughout the solver pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import scipy.sparse as sp

from .numkit import Matrix


@dataclass
class LinearSystem:
    A: Matrix
    b: np.ndarray

    @property
    def dimension(self) -> int:
        return self.A.shape[0]


@dataclass
class DominanceReport:
    dominant: bool
    worst_row_ratio: float
    zero_diagonal_rows: List[int] = field(default_factory=list)

    @property
    def weak(self) -> bool:
        return self.dominant and np.isclose(self.worst_row_ratio, 1.0)


@dataclass
class SplitSystem:
    """Jacobi / Gauss-Seidel decomposition ``A = D + R = D + B + T``."""

    A: sp.csr_matrix
    D: np.ndarray
    D_inv: np.ndarray
    R: sp.csr_matrix
    B: sp.csr_matrix
    T: sp.csr_matrix
    b: np.ndarray
    x0: np.ndarray

    @property
    def dimension(self) -> int:
        return self.D.shape[0]

    def with_rhs(self, b: np.ndarray, x0: Optional[np.ndarray] = None) -> "SplitSystem":
        """Same matrices, new right-hand side (and initial guess, default ``b``)."""
        b = np.asarray(b, dtype=float)
        x0 = b.copy() if x0 is None else np.asarray(x0, dtype=float)
        return SplitSystem(self.A, self.D, self.D_inv, self.R, self.B, self.T, b, x0)


@dataclass
class IterateTrajectory:
    iterates: List[np.ndarray]
    errors: List[float]
    euclidean_errors: List[float]

    @property
    def K(self) -> int:
        return len(self.iterates) - 1

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]


@dataclass
class ResourceEstimate:
    N: int
    k: int
    mode: str
    width: int
    depth_class: str
    per_encoding_gates: Optional[int] = None


@dataclass
class SolveResult:
    solution: np.ndarray
    raw_norm: float
    success_probability: float
    resources: Dict[str, int]
    k: int
    scheme: str
    backend: str
    error_trace: List[float] = field(default_factory=list)

    @property
    def iterate(self) -> np.ndarray:
        """Unnormalized classical iterate recovered from the state."""
        return self.raw_norm * self.solution


@dataclass
class Table:
    header: List[str]
    rows: List[list] = field(default_factory=list)


@dataclass
class ExperimentResult:
    """CSV tables plus scalar summary values of one command run."""

    name: str
    tables: Dict[str, Table] = field(default_factory=dict)
    summary: Dict[str, object] = field(default_factory=dict)
    arrays: Dict[str, np.ndarray] = field(default_factory=dict)
