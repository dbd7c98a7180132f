import logging
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qiterative import iterate, lcu, numkit
from qiterative.blockenc import EncodingCache
from qiterative.errors import CapacityError, DegenerateInstanceError, DimensionError


def _tridiag_split(n=4, x0=None):
    A = numkit.tridiagonal(n, -1.0, 3.0, -1.0)
    b = np.arange(1.0, n + 1.0)
    return iterate.split_jacobi(A, b, x0)


def _normalized(x):
    return x / np.linalg.norm(x)


def test_jacobi_emulation_matches_classical():
    split = _tridiag_split(8)
    trajectory = iterate.jacobi_iterate(split, 6, track_errors=False)
    for k in range(7):
        result = lcu.solve(split, k)
        assert np.allclose(result.solution, _normalized(trajectory.iterates[k]), atol=1e-10)
        assert np.allclose(result.iterate, trajectory.iterates[k], atol=1e-10)


@pytest.mark.parametrize("n,k_max", [(2, 3), (4, 2)])
def test_jacobi_gate_matches_classical(n, k_max):
    split = _tridiag_split(n)
    trajectory = iterate.jacobi_iterate(split, k_max, track_errors=False)
    cache = EncodingCache("gate")
    for k in range(k_max + 1):
        gate = lcu.solve(split, k, backend="gate", cache=cache)
        emulated = lcu.solve(split, k)
        assert np.allclose(gate.solution, _normalized(trajectory.iterates[k]), atol=1e-9)
        assert gate.success_probability == pytest.approx(emulated.success_probability, abs=1e-9)
        assert gate.raw_norm == pytest.approx(emulated.raw_norm, rel=1e-9)
        assert gate.resources["gate_count"] > 0
        assert emulated.resources["gate_count"] == 0


def test_gate_width_matches_formula():
    split = _tridiag_split(2)
    program = lcu.assemble_lcu_program(lcu.build_jacobi_expansion(split, 3, "gate"))
    assert program.width == lcu.estimate_resources(2, 3).width == 9
    assert program.circuit.circuit.n_qubits == 9


def test_demo_system_iterates():
    A = numkit.SparseOperator.from_matrix([[2.0, 1.0], [1.0, 2.0]])
    split = iterate.split_jacobi(A, np.array([3.0, 3.0]), np.zeros(2))
    for k, value in [(1, 1.5), (2, 0.75), (3, 1.125)]:
        result = lcu.solve(split, k, backend="gate")
        assert np.allclose(result.iterate, [value, value], atol=1e-9)


def test_gauss_seidel_emulation_matches_woodbury_recursion():
    split = _tridiag_split(8)
    for L in (0, 2, 7):
        trajectory = iterate.woodbury_gs_iterate(split, 4, L, track_errors=False)
        for k in (1, 4):
            result = lcu.solve(split, k, scheme="gauss-seidel", L=L)
            assert np.allclose(result.iterate, trajectory.iterates[k], atol=1e-10)


def test_gauss_seidel_gate_small_instance():
    split = _tridiag_split(2)
    exact = iterate.gauss_seidel_iterate(split, 1, track_errors=False)
    result = lcu.solve(split, 1, scheme="gauss-seidel", backend="gate", L=1)
    assert np.allclose(result.solution, _normalized(exact.iterates[1]), atol=1e-9)
    assert np.allclose(result.iterate, exact.iterates[1], atol=1e-9)


def test_gauss_seidel_gate_limits():
    with pytest.raises(CapacityError) as info:
        lcu.build_gauss_seidel_expansion(_tridiag_split(8), 2, 1, "gate")
    assert info.value.width == 15
    with pytest.raises(CapacityError) as info:
        lcu.build_gauss_seidel_expansion(_tridiag_split(4), 2, 2, "gate")
    assert info.value.width == 20
    with pytest.raises(CapacityError) as info:
        lcu.build_gauss_seidel_expansion(_tridiag_split(2), 2, 3, "gate")
    assert info.value.width == 23


def test_gauss_seidel_gate_width_counts_surviving_terms():
    assert lcu.gauss_seidel_gate_width(_tridiag_split(2), 1, 1) == 7
    assert lcu.gauss_seidel_gate_width(_tridiag_split(2, x0=np.zeros(2)), 1, 1) == 5
    assert lcu.gauss_seidel_gate_width(_tridiag_split(4), 2, 0) == 2 + 4 + 2
    diagonal = iterate.split_jacobi(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
    assert lcu.gauss_seidel_gate_width(diagonal, 3, 2) == 1 + 1


def test_gauss_seidel_gate_at_width_cap():
    split = _tridiag_split(4)
    assert lcu.gauss_seidel_gate_width(split, 2, 1) == 14
    trajectory = iterate.woodbury_gs_iterate(split, 2, 1, track_errors=False)
    result = lcu.solve(split, 2, scheme="gauss-seidel", backend="gate", L=1)
    assert result.resources["width"] == 14
    assert np.allclose(result.iterate, trajectory.iterates[2], atol=1e-9)


def test_gate_program_without_ancillas():
    split = _tridiag_split(2)
    result = lcu.solve(split, 0, backend="gate")
    assert result.success_probability == pytest.approx(1.0)
    assert result.resources["width"] == 1
    assert np.allclose(result.solution, _normalized(split.b), atol=1e-12)
    assert np.allclose(result.iterate, split.b, atol=1e-12)


def test_q_form_matches_jacobi():
    split = _tridiag_split(8)
    trajectory = iterate.jacobi_iterate(split, 5, track_errors=False)
    result = lcu.solve(split, 5, scheme="q-form")
    assert np.allclose(result.iterate, trajectory.iterates[5], atol=1e-10)
    with pytest.raises(ValueError):
        lcu.build_expansion(split, 2, scheme="q-form", backend="gate")


def test_zero_terms_are_pruned(caplog):
    split = _tridiag_split(4, x0=np.zeros(4))
    with caplog.at_level(logging.WARNING):
        expansion = lcu.build_jacobi_expansion(split, 3)
    assert len(expansion.terms) == 3
    assert expansion.pruned == 1
    assert "dropped 1" in caplog.text


def test_all_zero_expansion_is_degenerate():
    split = _tridiag_split(4, x0=np.zeros(4))
    with pytest.raises(DegenerateInstanceError):
        lcu.build_jacobi_expansion(split, 0)
    zero_rhs = iterate.split_jacobi(numkit.tridiagonal(4, -1.0, 3.0, -1.0), np.zeros(4))
    with pytest.raises(DegenerateInstanceError):
        lcu.solve(zero_rhs, 2)


def test_diagonal_system_prunes_coupling_terms():
    split = iterate.split_jacobi(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
    expansion = lcu.build_jacobi_expansion(split, 3)
    assert [t.labels() for t in expansion.terms] == ["Dinvb"]
    assert np.allclose(lcu.execute(lcu.assemble_lcu_program(expansion)).iterate, [1.0, 1.0])


def test_build_coefficients_normalized_and_padded():
    expansion = lcu.build_jacobi_expansion(_tridiag_split(4), 4)
    state = lcu.build_coefficients(expansion)
    assert len(expansion.terms) == 5
    assert state.a == 3
    assert state.padding == 3
    assert np.linalg.norm(state.amplitudes) == pytest.approx(1.0)
    assert state.total == pytest.approx(sum(expansion.coefficients))


def test_term_signs_alternate():
    expansion = lcu.build_jacobi_expansion(_tridiag_split(4), 3)
    assert expansion.signs == [1, -1, 1, -1]


def test_cache_backend_mismatch():
    with pytest.raises(ValueError):
        lcu.build_jacobi_expansion(_tridiag_split(4), 2, "gate", EncodingCache("emulation"))


def test_cache_reuses_encodings_across_k():
    split = _tridiag_split(4)
    cache = EncodingCache("emulation")
    lcu.solve(split, 2, cache=cache)
    entries = len(cache)
    lcu.solve(split, 5, cache=cache)
    assert len(cache) == entries
    assert cache.hits > 0


def test_prior_iterates():
    split = _tridiag_split(4)
    truth = numkit.solve_direct(split.A, split.b)
    results = lcu.prior_iterates(split, 4, reference=truth)
    assert [r.k for r in results] == [0, 1, 2, 3, 4]
    errors = [r.error_trace[0] for r in results]
    assert errors[-1] < errors[0]


def test_expectation_observables():
    result = lcu.solve(_tridiag_split(4), 3)
    probs = result.solution**2
    for i in range(4):
        assert lcu.expectation(result, lcu.grid_point_observable(4, i)) == pytest.approx(probs[i])
    grid = np.linspace(0.0, 1.0, 4)
    assert lcu.expectation(result, lcu.moment_observable(grid)) == pytest.approx(float(grid @ probs))
    with pytest.raises(DimensionError):
        lcu.expectation(result, np.eye(3))
    with pytest.raises(DimensionError):
        lcu.grid_point_observable(4, 4)


def test_estimate_resources():
    estimate = lcu.estimate_resources(128, 80)
    assert estimate.width == 7 + 160 + 7
    assert lcu.estimate_resources(128, 80, "q-form").width == 7 + 4 + 7
    assert lcu.estimate_resources(4, 3, per_encoding_gates=10).depth_class == "k^2*C = 90"
    assert lcu.estimate_resources(4, 3).depth_class == "O(k^2)"
    with pytest.raises(DimensionError):
        lcu.estimate_resources(6, 2)
    with pytest.raises(ValueError):
        lcu.estimate_resources(4, 2, "other")


def test_measured_encoding_gates():
    assert lcu.measured_encoding_gates(numkit.tridiagonal(4, -1.0, 2.0, -1.0)) > 0
    assert lcu.measured_encoding_gates(numkit.tridiagonal(64, -1.0, 2.0, -1.0)) is None


def test_seeded_dominant_systems_match_jacobi():
    rng = np.random.default_rng(2024)
    for trial in range(30):
        n = (4, 8, 16)[trial % 3]
        off = rng.uniform(-1.0, 1.0, size=(n, n)) * (rng.random((n, n)) < 0.4)
        np.fill_diagonal(off, 0.0)
        diag = np.abs(off).sum(axis=1) + rng.uniform(0.5, 2.0, size=n)
        A = off + np.diag(diag * rng.choice([-1.0, 1.0], size=n))
        split = iterate.split_jacobi(A, rng.normal(size=n))
        k = int(rng.integers(1, 11))
        trajectory = iterate.jacobi_iterate(split, k, track_errors=False)
        result = lcu.solve(split, k)
        assert iterate.fidelity_error(trajectory.final, result.solution) <= 1e-10
        assert np.allclose(result.iterate, trajectory.final, atol=1e-9 * max(1.0, np.abs(trajectory.final).max()))


@pytest.mark.parametrize("backend", ["emulation", "gate"])
def test_flipping_any_term_sign_changes_the_state(backend):
    split = _tridiag_split(2 if backend == "gate" else 4)
    expansion = lcu.build_jacobi_expansion(split, 3, backend)
    exact = iterate.jacobi_iterate(split, 3, track_errors=False).final
    assert iterate.fidelity_error(exact, lcu.execute(lcu.assemble_lcu_program(expansion)).solution) < 1e-10
    for j, term in enumerate(expansion.terms):
        terms = list(expansion.terms)
        terms[j] = lcu.LcuTerm(-term.sign, term.factors)
        mutated = lcu.execute(lcu.assemble_lcu_program(replace(expansion, terms=terms)))
        assert iterate.fidelity_error(exact, mutated.solution) > 1e-8, j


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 100.0, allow_nan=False), st.integers(0, 5))
def test_scaling_rhs_and_guess_keeps_state_and_probability(c, k):
    split = _tridiag_split(8)
    scaled = split.with_rhs(c * split.b, c * split.x0)
    base = lcu.solve(split, k)
    result = lcu.solve(scaled, k)
    assert np.allclose(result.solution, base.solution, atol=1e-10)
    assert result.success_probability == pytest.approx(base.success_probability, rel=1e-9)
    assert result.raw_norm == pytest.approx(c * base.raw_norm, rel=1e-9)


def test_scaling_invariance_on_gate_backend():
    split = _tridiag_split(2)
    base = lcu.solve(split, 2, backend="gate")
    result = lcu.solve(split.with_rhs(7.0 * split.b, 7.0 * split.x0), 2, backend="gate")
    assert np.allclose(result.solution, base.solution, atol=1e-9)
    assert result.success_probability == pytest.approx(base.success_probability, abs=1e-9)
