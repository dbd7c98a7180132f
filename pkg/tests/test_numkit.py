import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qiterative import numkit
from qiterative.errors import DimensionError, NotPSDError, SingularMatrixError


def _random_orthogonal(n, seed):
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, n)))
    return q


def test_givens_qr_reconstructs_dense_matrix():
    M = np.random.default_rng(3).standard_normal((6, 6))
    qr = numkit.givens_qr(M)
    G = numkit.compose_givens(qr.rotations, 6)
    assert np.allclose(G @ np.diag(qr.residual) @ qr.upper, M, atol=1e-12)
    assert np.allclose(np.tril(qr.upper, -1), 0.0)
    assert np.all(np.diag(qr.upper) >= 0)


def test_givens_qr_of_orthogonal_leaves_signs_only():
    U = _random_orthogonal(8, 11)
    qr = numkit.givens_qr(U)
    assert np.allclose(qr.upper, np.eye(8), atol=1e-10)
    assert set(np.unique(qr.residual)) <= {-1.0, 1.0}


def test_givens_qr_skips_zero_entries():
    assert numkit.givens_qr(np.diag([1.0, -2.0, 3.0, 4.0])).rotations == []
    tri = numkit.tridiagonal(8, -1.0, 2.0, -1.0).toarray()
    # one rotation per subdiagonal entry
    assert len(numkit.givens_qr(tri).rotations) == 7


def test_givens_rotation_matrix_convention():
    g = numkit.GivensRotation(0, 1, math.pi / 6).matrix(2)
    c, s = math.cos(math.pi / 6), math.sin(math.pi / 6)
    assert np.allclose(g, [[c, -s], [s, c]])
    with pytest.raises(DimensionError):
        numkit.GivensRotation(2, 1, 0.1)


def test_givens_reduce_vector():
    v = np.array([0.0, 3.0, 0.0, -4.0])
    rotations, pivot = numkit.givens_reduce_vector(v)
    assert pivot == pytest.approx(5.0)
    e0 = np.zeros(4)
    e0[0] = pivot
    assert np.allclose(numkit.compose_givens(rotations, 4) @ e0, v)


def test_givens_reduce_vector_negative_pivot():
    rotations, pivot = numkit.givens_reduce_vector(np.array([-2.0, 0.0]))
    assert rotations == []
    assert pivot == -2.0


def test_psd_sqrt_squares_back():
    X = np.random.default_rng(5).standard_normal((5, 5))
    S = X @ X.T
    root = numkit.psd_sqrt(S)
    assert np.allclose(root @ root, S, atol=1e-10)
    assert np.allclose(root, root.T)


def test_psd_sqrt_clamps_rounding_noise_and_rejects_negative():
    assert np.allclose(numkit.psd_sqrt(np.diag([4.0, -1e-13])), np.diag([2.0, 0.0]))
    with pytest.raises(NotPSDError):
        numkit.psd_sqrt(np.diag([1.0, -0.5]))
    with pytest.raises(NotPSDError):
        numkit.psd_sqrt(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_spectral_norm_paths_agree():
    dense = numkit.tridiagonal(64, -1.0, 2.0, -1.0)
    expected = 2 + 2 * math.cos(math.pi / 65)
    assert numkit.spectral_norm(dense) == pytest.approx(expected, rel=1e-10)
    assert numkit.spectral_norm(dense.toarray()) == pytest.approx(expected, rel=1e-10)
    assert numkit.spectral_norm(sp.diags([1.0, -7.0, 3.0])) == 7.0
    assert numkit.spectral_norm(sp.csr_matrix((4, 4))) == 0.0


def test_spectral_norm_large_sparse_uses_iterative_solver():
    A = sp.identity(3000, format="lil")
    A[0, 0], A[0, 1], A[1, 1] = 3.0, 4.0, 0.0
    assert numkit.spectral_norm(A.tocsr()) == pytest.approx(5.0, rel=1e-8)


def test_spectral_norm_rejects_non_finite():
    with pytest.raises(ValueError):
        numkit.spectral_norm(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_condition_number():
    assert numkit.condition_number(np.diag([1.0, 4.0])) == pytest.approx(4.0)
    with pytest.raises(SingularMatrixError):
        numkit.condition_number(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_solve_direct_dense_and_sparse():
    A = numkit.tridiagonal(16, -1.0, 4.0, -1.0)
    b = np.arange(16, dtype=float)
    x_sparse = numkit.solve_direct(A, b)
    x_dense = numkit.solve_direct(A.toarray(), b)
    assert np.allclose(A @ x_sparse, b)
    assert np.allclose(x_sparse, x_dense)


def test_solve_direct_errors():
    with pytest.raises(SingularMatrixError):
        numkit.solve_direct(np.zeros((2, 2)), np.ones(2))
    with pytest.raises(DimensionError):
        numkit.solve_direct(np.eye(3), np.ones(2))


def test_sparse_operator_requires_square():
    with pytest.raises(DimensionError):
        numkit.SparseOperator.from_matrix(np.ones((2, 3)))
    op = numkit.SparseOperator.from_matrix(np.eye(3), tags=["diagonal"])
    assert op.dimension == 3
    assert "diagonal" in op.tags
    assert np.allclose(op @ np.ones(3), np.ones(3))


def test_padding_helpers():
    assert numkit.next_power_of_two(1) == 1
    assert numkit.next_power_of_two(5) == 8
    assert numkit.next_power_of_two(8) == 8
    assert np.array_equal(numkit.pad_vector(np.array([1.0, 2.0, 3.0]), 4), [1.0, 2.0, 3.0, 0.0])
    assert numkit.pad_matrix(np.eye(3), 4)[3, 3] == 0.0


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (4, 4), elements=st.floats(-5, 5)))
def test_givens_qr_reconstruction_property(M):
    qr = numkit.givens_qr(M)
    G = numkit.compose_givens(qr.rotations, 4)
    assert np.allclose(G @ np.diag(qr.residual) @ qr.upper, M, atol=1e-9)
    assert np.allclose(G.T @ G, np.eye(4), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.data())
def test_psd_sqrt_fixes_orthogonal_projections(n, data):
    rank = data.draw(st.integers(0, n))
    seed = data.draw(st.integers(0, 2**31 - 1))
    Q = _random_orthogonal(n, seed)[:, :rank]
    P = Q @ Q.T
    assert np.allclose(numkit.psd_sqrt(P), P, atol=1e-9)


finite = st.floats(-5.0, 5.0, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (4, 4), elements=finite), arrays(np.float64, (4, 4), elements=finite))
def test_spectral_norm_is_submultiplicative(A, B):
    assert numkit.spectral_norm(A @ B) <= numkit.spectral_norm(A) * numkit.spectral_norm(B) + 1e-9


@settings(max_examples=30, deadline=None)
@given(
    st.integers(0, 2**31 - 1),
    st.floats(0.01, 100.0, allow_nan=False),
    st.sampled_from([-1.0, 1.0]),
)
def test_condition_number_is_scale_invariant(seed, magnitude, sign):
    M = np.random.default_rng(seed).standard_normal((5, 5)) + 6.0 * np.eye(5)
    c = sign * magnitude
    assert numkit.condition_number(c * M) == pytest.approx(numkit.condition_number(M), rel=1e-9)
