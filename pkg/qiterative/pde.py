"""Backward-time centered-space discretizations of the Burgers and linearized Euler problems.

Each timestep becomes one :class:`LinearSystem`; stepping is sequential in ``m``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError
from .models import DominanceReport, LinearSystem
from .numkit import SparseOperator, require_square, to_csr

logger = logging.getLogger(__name__)

BoundaryFn = Callable[[float], float]


@dataclass
class BurgersProblem:
    mu: float
    Lx: float
    T: float
    N: int
    M: int
    g: np.ndarray
    left_bc: BoundaryFn
    right_bc: BoundaryFn

    def __post_init__(self) -> None:
        self.g = np.asarray(self.g, dtype=float)
        if self.mu < 0:
            raise ValueError("mu must be non-negative")
        if self.N < 2 or self.M < 1:
            raise ValueError("Burgers problem needs N >= 2 and M >= 1")
        if self.g.shape != (self.N + 1,):
            raise DimensionError(f"g must be sampled at {self.N + 1} nodes, got {self.g.shape}")

    @property
    def dx(self) -> float:
        return self.Lx / self.N

    @property
    def dt(self) -> float:
        return self.T / self.M

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.Lx, self.N + 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.M + 1)

    @classmethod
    def from_function(
        cls,
        mu: float,
        Lx: float,
        T: float,
        N: int,
        M: int,
        g: Callable[[np.ndarray], np.ndarray],
        left_bc: BoundaryFn,
        right_bc: BoundaryFn,
    ) -> "BurgersProblem":
        return cls(mu, Lx, T, N, M, g(np.linspace(0.0, Lx, N + 1)), left_bc, right_bc)


def burgers_step_system(problem: BurgersProblem, prev_field: np.ndarray, m: int) -> LinearSystem:
    """Tridiagonal system for the interior nodes at timestep ``m``.

    The convective coefficient is lagged at ``prev_field``; Dirichlet values
    at ``t_m`` are folded into the first and last rows of ``b``.
    """
    prev_field = np.asarray(prev_field, dtype=float)
    if prev_field.shape != (problem.N + 1,):
        raise DimensionError(f"prev_field must have {problem.N + 1} entries")
    if not 1 <= m <= problem.M:
        raise ValueError(f"timestep m={m} outside [1, {problem.M}]")
    n = problem.N - 1
    t_m = m * problem.dt
    r = problem.mu * problem.dt / problem.dx**2
    c = problem.dt * prev_field[1:-1] / (2.0 * problem.dx)
    lower = -c - r
    upper = c - r
    A = sp.diags([lower[1:], np.full(n, 1.0 + 2.0 * r), upper[:-1]], offsets=[-1, 0, 1], format="csr")
    b = prev_field[1:-1].copy()
    b[0] -= lower[0] * problem.left_bc(t_m)
    b[-1] -= upper[-1] * problem.right_bc(t_m)
    return LinearSystem(SparseOperator(A, frozenset({"tridiagonal", "banded"})), b)


def burgers_full_field(problem: BurgersProblem, interior: np.ndarray, m: int) -> np.ndarray:
    """Interior values plus the boundary data at ``t_m``."""
    t_m = m * problem.dt
    return np.concatenate(([problem.left_bc(t_m)], np.asarray(interior, dtype=float), [problem.right_bc(t_m)]))


def burgers_defect(problem: BurgersProblem, exact: Callable[[np.ndarray, float], np.ndarray], m: int) -> float:
    """Max-norm residual per unit time of the exact solution inserted into step ``m``."""
    x = problem.nodes
    prev = exact(x, (m - 1) * problem.dt)
    system = burgers_step_system(problem, prev, m)
    current = exact(x, m * problem.dt)[1:-1]
    residual = system.A @ current - system.b
    return float(np.abs(residual).max() / problem.dt)


def default_pressure(omega: float = 2.0) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Gaussian-modulated sinusoid ``cos(2πωr)·exp(-r²)``."""

    def pressure(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        r = np.sqrt(x**2 + y**2)
        return np.cos(2 * np.pi * omega * r) * np.exp(-(r**2))

    return pressure


@dataclass
class Euler2DProblem:
    rho_bar: float = 1.0
    Nx: int = 128
    Ny: int = 128
    x_range: Tuple[float, float] = (-2.0, 2.0)
    y_range: Tuple[float, float] = (-2.0, 2.0)
    M: int = 60
    T: float = 1.0
    init_pressure: Callable[[np.ndarray, np.ndarray], np.ndarray] = default_pressure()
    bc_kind: str = "non-reflective"

    def __post_init__(self) -> None:
        if self.rho_bar <= 0:
            raise ValueError("rho_bar must be positive")
        if self.Nx < 4 or self.Ny < 4:
            raise ValueError("Euler problem needs Nx, Ny >= 4")

    @property
    def n_nodes(self) -> int:
        return self.Nx * self.Ny

    @property
    def dt(self) -> float:
        return self.T / self.M

    @property
    def x(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.Nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(*self.y_range, self.Ny)

    def grid(self) -> Tuple[np.ndarray, np.ndarray]:
        """Meshgrid with shape ``(Ny, Nx)``; x varies fastest in the flat ordering."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    def initial_state(self) -> np.ndarray:
        X, Y = self.grid()
        p = self.init_pressure(X, Y).reshape(-1)
        return np.concatenate([p, np.zeros(self.n_nodes), np.zeros(self.n_nodes)])

    def pressure(self, state: np.ndarray) -> np.ndarray:
        return np.asarray(state)[: self.n_nodes].reshape(self.Ny, self.Nx)

    def energy(self, state: np.ndarray) -> float:
        n = self.n_nodes
        p, u, v = state[:n], state[n : 2 * n], state[2 * n :]
        return float(0.5 * (np.dot(p, p) / self.rho_bar + self.rho_bar * (np.dot(u, u) + np.dot(v, v))))


def _gradient_1d(n: int, h: float) -> sp.csr_matrix:
    """Centered first difference; end rows use a zero-gradient ghost node."""
    G = sp.lil_matrix((n, n))
    for i in range(1, n - 1):
        G[i, i - 1] = -1.0
        G[i, i + 1] = 1.0
    G[0, 0], G[0, 1] = -1.0, 1.0
    G[n - 1, n - 2], G[n - 1, n - 1] = -1.0, 1.0
    return (G / (2.0 * h)).tocsr()


def euler_operator(problem: Euler2DProblem) -> SparseOperator:
    """Implicit-step matrix over the stacked ``(p, u, v)`` state."""
    hx = (problem.x_range[1] - problem.x_range[0]) / (problem.Nx - 1)
    hy = (problem.y_range[1] - problem.y_range[0]) / (problem.Ny - 1)
    Dx = sp.kron(sp.identity(problem.Ny), _gradient_1d(problem.Nx, hx), format="csr")
    Dy = sp.kron(_gradient_1d(problem.Ny, hy), sp.identity(problem.Nx), format="csr")
    rho, dt = problem.rho_bar, problem.dt
    coupling = sp.bmat(
        [
            [None, rho * Dx, rho * Dy],
            [Dx / rho, None, None],
            [Dy / rho, None, None],
        ],
        format="csr",
    )
    A = (sp.identity(3 * problem.n_nodes, format="csr") + dt * coupling).tocsr()
    A.eliminate_zeros()
    return SparseOperator(A, frozenset({"block", "banded"}))


def euler_step_system(
    problem: Euler2DProblem,
    prev_state: np.ndarray,
    m: int,
    operator: Optional[SparseOperator] = None,
) -> LinearSystem:
    prev_state = np.asarray(prev_state, dtype=float)
    if prev_state.shape != (3 * problem.n_nodes,):
        raise DimensionError(f"prev_state must have {3 * problem.n_nodes} entries")
    if not 1 <= m <= problem.M:
        raise ValueError(f"timestep m={m} outside [1, {problem.M}]")
    A = operator if operator is not None else euler_operator(problem)
    return LinearSystem(A, prev_state.copy())


def check_diagonal_dominance(A) -> DominanceReport:
    """Row-wise diagonal dominance; zero diagonals are flagged with ratio ``inf``."""
    csr = to_csr(A)
    require_square(csr)
    diag = np.abs(csr.diagonal())
    off = np.asarray(abs(csr).sum(axis=1)).reshape(-1) - diag
    zero_rows = [int(i) for i in np.flatnonzero(diag == 0)]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(diag == 0, np.inf, off / np.where(diag == 0, 1.0, diag))
    worst = float(ratios.max()) if ratios.size else 0.0
    dominant = not zero_rows and bool(np.all(diag >= off))
    report = DominanceReport(dominant, worst, zero_rows)
    if report.weak:
        logger.warning("Matrix is only weakly diagonally dominant (worst ratio %.6f)", worst)
    return report
