import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from qiterative import iterate, numkit
from qiterative.errors import DimensionError, SplitError

A2 = np.array([[2.0, 1.0], [1.0, 2.0]])
B2 = np.array([3.0, 3.0])


def _demo_split():
    return iterate.split_jacobi(A2, B2, np.zeros(2))


def test_split_jacobi_parts():
    split = _demo_split()
    assert np.array_equal(split.D, [2.0, 2.0])
    assert np.array_equal(split.R.toarray(), [[0.0, 1.0], [1.0, 0.0]])
    assert np.array_equal(split.B.toarray(), [[0.0, 0.0], [1.0, 0.0]])
    assert np.array_equal(split.T.toarray(), [[0.0, 1.0], [0.0, 0.0]])


def test_split_jacobi_diagonal_and_tridiagonal():
    split = iterate.split_jacobi(np.diag([2.0, 3.0]), np.ones(2))
    assert split.R.nnz == 0
    A = numkit.tridiagonal(8, -1.0, 2.0, -1.0)
    split = iterate.split_jacobi(A, np.ones(8))
    assert np.array_equal(split.D, np.full(8, 2.0))
    assert np.array_equal(split.R.toarray() + np.diag(split.D), A.toarray())


def test_split_jacobi_defaults_x0_to_b():
    split = iterate.split_jacobi(A2, B2)
    assert np.array_equal(split.x0, B2)


def test_split_jacobi_rejects_zero_diagonal():
    with pytest.raises(SplitError, match="row 1"):
        iterate.split_jacobi(np.array([[1.0, 2.0], [3.0, 0.0]]), np.ones(2))


def test_split_jacobi_rejects_bad_rhs():
    with pytest.raises(DimensionError):
        iterate.split_jacobi(A2, np.ones(3))


def test_jacobi_demo_values():
    trajectory = iterate.jacobi_iterate(_demo_split(), 3)
    assert np.allclose(trajectory.iterates[1], [1.5, 1.5])
    assert np.allclose(trajectory.iterates[2], [0.75, 0.75])
    assert np.allclose(trajectory.iterates[3], [1.125, 1.125])
    assert trajectory.K == 3


def test_jacobi_diagonal_converges_in_one_step():
    split = iterate.split_jacobi(np.diag([2.0, 4.0, 5.0]), np.array([1.0, 2.0, 3.0]), np.array([9.0, -1.0, 0.5]))
    trajectory = iterate.jacobi_iterate(split, 1)
    assert np.allclose(trajectory.final, [0.5, 0.5, 0.6])
    assert trajectory.errors[1] == pytest.approx(0.0, abs=1e-15)


def test_gauss_seidel_demo_values():
    trajectory = iterate.gauss_seidel_iterate(_demo_split(), 2)
    assert np.allclose(trajectory.iterates[1], [1.5, 0.75])
    assert np.allclose(trajectory.iterates[2], [1.125, 0.9375])


def test_gauss_seidel_beats_jacobi_on_dominant_tridiagonal():
    split = iterate.split_jacobi(numkit.tridiagonal(64, -1.0, 2.5, -1.0), np.ones(64))
    jacobi = iterate.jacobi_iterate(split, 20)
    gs = iterate.gauss_seidel_iterate(split, 20)
    assert gs.euclidean_errors[20] <= jacobi.euclidean_errors[20]


def test_woodbury_l0_drops_lower_part():
    split = _demo_split()
    trajectory = iterate.woodbury_gs_iterate(split, 1, 0)
    expected = split.D_inv * (split.b - split.T @ split.x0)
    assert np.allclose(trajectory.final, expected)


@pytest.mark.parametrize("n", [4, 8, 16, 64])
def test_woodbury_full_series_equals_gauss_seidel(n):
    rng = np.random.default_rng(n)
    A = numkit.tridiagonal(n, -1.0, 3.0, -1.2).toarray() + np.diag(rng.uniform(0, 1, n))
    split = iterate.split_jacobi(A, rng.standard_normal(n))
    woodbury = iterate.woodbury_gs_iterate(split, 10, n - 1)
    gs = iterate.gauss_seidel_iterate(split, 10)
    for a, b in zip(woodbury.iterates, gs.iterates):
        assert np.abs(a - b).max() <= 1e-12 * max(1.0, np.abs(b).max())


def test_woodbury_rejects_negative_order():
    with pytest.raises(ValueError):
        iterate.woodbury_gs_iterate(_demo_split(), 2, -1)


def test_spectral_radius():
    assert iterate.spectral_radius(_demo_split()) == pytest.approx(0.5)
    assert iterate.spectral_radius(iterate.split_jacobi(np.diag([1.0, 2.0]), np.ones(2))) == 0.0
    n = 12
    split = iterate.split_jacobi(numkit.tridiagonal(n, -1.0, 2.0, -1.0), np.ones(n))
    dense = np.abs(scipy.linalg.eigvals(np.diag(split.D_inv) @ split.R.toarray())).max()
    assert iterate.spectral_radius(split) == pytest.approx(dense)
    assert iterate.spectral_radius(split) == pytest.approx(math.cos(math.pi / (n + 1)))


def test_non_dominant_system_diverges():
    split = iterate.split_jacobi(numkit.tridiagonal(16, -1.0, 1.2, -1.0), np.ones(16))
    assert iterate.spectral_radius(split) > 1
    trajectory = iterate.jacobi_iterate(split, 60)
    assert trajectory.euclidean_errors[-1] > trajectory.euclidean_errors[0]


def test_iterations_to_threshold():
    split = iterate.split_jacobi(np.diag([1.0, 2.0, 3.0]), np.ones(3))
    assert iterate.iterations_to_threshold(split, 1e-6) == 1
    tri = iterate.split_jacobi(numkit.tridiagonal(32, -1.0, 2.5, -1.0), np.ones(32))
    strict = iterate.iterations_to_threshold(tri, 1e-6)
    loose = iterate.iterations_to_threshold(tri, 1e-3)
    assert loose < strict


def test_iterations_to_threshold_gives_up():
    split = iterate.split_jacobi(numkit.tridiagonal(16, -1.0, 1.2, -1.0), np.ones(16))
    assert iterate.iterations_to_threshold(split, 1e-12, max_iter=20) is None


def test_error_measures():
    assert iterate.fidelity_error(np.array([1.0, 0.0]), np.array([5.0, 0.0])) == 0.0
    assert iterate.fidelity_error(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(1.0)
    assert iterate.euclidean_error(np.array([2.0, 0.0]), np.array([1.0, 0.0])) == pytest.approx(0.5)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=10), st.integers(min_value=0, max_value=2**31 - 1))
def test_jacobi_matches_closed_form_property(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1, 1, (n, n))
    np.fill_diagonal(A, np.abs(A).sum(axis=1) + 1.0)
    b = rng.standard_normal(n)
    split = iterate.split_jacobi(A, b)
    Q = np.diag(1.0 / np.diag(A)) @ (A - np.diag(np.diag(A)))
    x = b.copy()
    for _ in range(4):
        x = np.diag(1.0 / np.diag(A)) @ b - Q @ x
    assert np.allclose(iterate.jacobi_iterate(split, 4, track_errors=False).final, x)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=3, max_value=12), st.integers(min_value=0, max_value=2**31 - 1))
def test_jacobi_error_contracts_with_spectral_radius(n, seed):
    rng = np.random.default_rng(seed)
    R = rng.uniform(-1, 1, (n, n))
    R = (R + R.T) / 2
    np.fill_diagonal(R, 0.0)
    d = np.abs(R).sum(axis=1).max() + rng.uniform(0.2, 2.0)
    split = iterate.split_jacobi(R + d * np.eye(n), rng.standard_normal(n))
    rho = iterate.spectral_radius(split)
    truth = numkit.solve_direct(split.A, split.b)
    trajectory = iterate.jacobi_iterate(split, 20, truth)
    e0 = np.linalg.norm(split.x0 - truth)
    for k, x in enumerate(trajectory.iterates):
        assert np.linalg.norm(x - truth) <= (rho + 0.05) ** k * e0 + 1e-12


@pytest.mark.parametrize(
    "A",
    [
        numkit.tridiagonal(16, -1.0, 3.0, -1.0),
        np.array([[4.0, -1.0, 0.5], [1.0, 5.0, -2.0], [0.5, 1.0, 3.0]]),
    ],
)
def test_exact_solution_is_a_fixed_point(A):
    n = A.shape[0]
    b = np.linspace(-1.0, 2.0, n)
    truth = numkit.solve_direct(A, b)
    split = iterate.split_jacobi(A, b, truth)
    trajectories = [
        iterate.jacobi_iterate(split, 10, track_errors=False),
        iterate.gauss_seidel_iterate(split, 10, track_errors=False),
        iterate.woodbury_gs_iterate(split, 10, n - 1, track_errors=False),
    ]
    for trajectory in trajectories:
        for x in trajectory.iterates:
            assert np.allclose(x, truth, rtol=0, atol=1e-10)
