"""Linear-combination-of-unitaries programs for the iterative solvers.

An expansion is a signed sum of block-encoding products whose post-selected
output, scaled by the summed coefficients, is the classical iterate ``x_k``.
Both backends share the same term bookkeeping.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from . import numkit
from .blockenc import (
    BlockEncoding,
    EncodingCache,
    LcuCircuit,
    ProductEncoding,
    apply_products,
    block_encode_matrix,
    block_encode_vector,
    lcu_circuit,
    lcu_encoding,
    multiply_encodings,
)
from .config import BACKENDS, MAX_GATE_QUBITS, SCHEMES
from .errors import CapacityError, DegenerateInstanceError, DimensionError, NormalizationError, PostSelectionError
from .iterate import fidelity_error
from .models import ResourceEstimate, SolveResult, SplitSystem
from .qsim import Statevector, post_select_zeros, run_circuit

logger = logging.getLogger(__name__)

GS_GATE_LIMITS = {"N": 4, "k": 2, "L": 3}


@dataclass(frozen=True)
class LcuTerm:
    sign: int
    factors: Tuple[BlockEncoding, ...]

    @property
    def coefficient(self) -> float:
        return float(np.prod([f.alpha for f in self.factors]))

    def labels(self) -> str:
        return "".join(f.label or "?" for f in self.factors)


@dataclass
class LcuExpansion:
    terms: List[LcuTerm]
    k: int
    scheme: str
    backend: str
    dimension: int
    L: Optional[int] = None
    pruned: int = 0

    @property
    def coefficients(self) -> List[float]:
        return [t.coefficient for t in self.terms]

    @property
    def signs(self) -> List[int]:
        return [t.sign for t in self.terms]


@dataclass
class NormalizationState:
    a: int
    amplitudes: np.ndarray
    coefficients: List[float]

    @property
    def padding(self) -> int:
        return 2**self.a - len(self.coefficients)

    @property
    def total(self) -> float:
        return float(sum(self.coefficients))


@dataclass
class LcuProgram:
    expansion: LcuExpansion
    backend: str
    normalization: NormalizationState
    products: List[ProductEncoding]
    width: int
    circuit: Optional[LcuCircuit] = None
    data_qubits: int = 1
    notes: List[str] = field(default_factory=list)


def _lcu_register_size(terms: int) -> int:
    return math.ceil(math.log2(terms)) if terms > 1 else 0


def _cached(
    cache: Optional[EncodingCache], label: str, source, build: Callable[[], BlockEncoding]
) -> BlockEncoding:
    if cache is None:
        return build()
    hit = cache.lookup(label, source)
    if hit is not None:
        return hit
    return cache.store(label, source, build())


def _check_cache(cache: Optional[EncodingCache], backend: str) -> None:
    if backend not in BACKENDS:
        raise ValueError(f"Unknown backend {backend!r}; expected one of {BACKENDS}")
    if cache is not None and cache.backend != backend:
        raise ValueError(f"Encoding cache is for the {cache.backend} backend, not {backend}")


def _matrix(cache, label: str, source, matrix, backend: str) -> Optional[BlockEncoding]:
    if numkit.to_csr(matrix).nnz == 0:
        return None
    return _cached(cache, label, source, lambda: block_encode_matrix(matrix, backend, label))


def _vector(v: np.ndarray, label: str, backend: str) -> Optional[BlockEncoding]:
    if not np.any(v):
        return None
    return block_encode_vector(v, backend, label)


def _assemble_terms(
    step: Sequence[Optional[BlockEncoding]],
    rhs_head: Sequence[Optional[BlockEncoding]],
    x0: Optional[BlockEncoding],
    k: int,
) -> Tuple[List[LcuTerm], int]:
    """Terms ``(-step)^{j-1} rhs`` for ``j = 1..k`` plus ``(-step)^k x0``.

    Terms containing a zero factor vanish and are dropped.
    """
    candidates = []
    for j in range(1, k + 1):
        candidates.append(((-1) ** (j - 1), list(step) * (j - 1) + list(rhs_head)))
    candidates.append(((-1) ** k, list(step) * k + [x0]))
    terms, pruned = [], 0
    for sign, factors in candidates:
        if any(f is None for f in factors):
            pruned += 1
            continue
        terms.append(LcuTerm(sign, tuple(factors)))
    return terms, pruned


def _finish(terms, pruned, k, scheme, backend, split, L=None) -> LcuExpansion:
    if pruned:
        logger.warning("%s expansion k=%d: dropped %d zero-valued term(s)", scheme, k, pruned)
    if not terms:
        raise DegenerateInstanceError(f"Every term of the {scheme} expansion at k={k} is zero")
    return LcuExpansion(terms, k, scheme, backend, split.dimension, L, pruned)


def build_jacobi_expansion(
    split: SplitSystem, k: int, backend: str = "emulation", cache: Optional[EncodingCache] = None
) -> LcuExpansion:
    """``Σ_{j=1}^{k} (-D⁻¹R)^{j-1} D⁻¹ b + (-D⁻¹R)^k x0`` as encoding products."""
    if k < 0:
        raise ValueError("k must be non-negative")
    _check_cache(cache, backend)
    d_inv = _matrix(cache, "Dinv", split.D_inv, sp.diags(split.D_inv, format="csr"), backend)
    r = _matrix(cache, "R", split.R, split.R, backend)
    b = _vector(split.b, "b", backend)
    x0 = _vector(split.x0, "x0", backend)
    terms, pruned = _assemble_terms([d_inv, r], [d_inv, b], x0, k)
    return _finish(terms, pruned, k, "jacobi", backend, split)


def build_coefficients(expansion: LcuExpansion) -> NormalizationState:
    """Unit-norm amplitudes ``√c_j / √Σc``, zero-padded to ``2^a`` slots."""
    coefficients = expansion.coefficients
    if any(c <= 0 for c in coefficients):
        raise NormalizationError("Every LCU coefficient must be positive")
    a = _lcu_register_size(len(coefficients))
    weights = np.sqrt(np.asarray(coefficients) / sum(coefficients))
    return NormalizationState(a, numkit.pad_vector(weights, 2**a), list(coefficients))


def omega_encoding(
    split: SplitSystem, L: int, backend: str = "emulation", cache: Optional[EncodingCache] = None
) -> Optional[BlockEncoding]:
    """Truncated series ``Σ_{l=0}^{L} (-D⁻¹B)^l`` as a nested LCU; ``None`` when it is the identity."""
    if L < 0:
        raise ValueError("L must be non-negative")
    if L == 0 or split.B.nnz == 0:
        return None

    def build() -> BlockEncoding:
        d_inv = _matrix(cache, "Dinv", split.D_inv, sp.diags(split.D_inv, format="csr"), backend)
        lower = _matrix(cache, "B", split.B, split.B, backend)
        terms = [((-1) ** l, [d_inv, lower] * l, (d_inv.alpha * lower.alpha) ** l) for l in range(L + 1)]
        return lcu_encoding(terms, backend, label="Omega")

    return _cached(cache, f"Omega{L}", split.B, build)


def gauss_seidel_gate_width(split: SplitSystem, k: int, L: int) -> int:
    """Qubits of the gate-level Gauss-Seidel program, counting only surviving terms."""
    d = max(1, math.ceil(math.log2(split.dimension))) if split.dimension > 1 else 1
    omega = 2 * L + _lcu_register_size(L + 1) if L > 0 and split.B.nnz else 0
    step = omega + 2
    coupled = split.T.nnz > 0
    ancillas = []
    if np.any(split.b):
        ancillas += [(j - 1) * step + omega + 1 for j in range(1, k + 1) if j == 1 or coupled]
    if np.any(split.x0) and (k == 0 or coupled):
        ancillas.append(k * step)
    if not ancillas:
        return d
    return d + max(ancillas) + _lcu_register_size(len(ancillas))


def build_gauss_seidel_expansion(
    split: SplitSystem,
    k: int,
    L: int,
    backend: str = "emulation",
    cache: Optional[EncodingCache] = None,
) -> LcuExpansion:
    """Gauss-Seidel terms with ``(D+B)⁻¹`` replaced by ``Ω D⁻¹``."""
    if k < 0 or L < 0:
        raise ValueError("k and L must be non-negative")
    _check_cache(cache, backend)
    if backend == "gate":
        # Nested LCU: only the small box, and only when the surviving terms fit the simulator.
        limits = GS_GATE_LIMITS
        width = gauss_seidel_gate_width(split, k, L)
        inside = split.dimension <= limits["N"] and k <= limits["k"] and L <= limits["L"]
        if not inside or width > MAX_GATE_QUBITS:
            raise CapacityError(
                f"Gate-level Gauss-Seidel at N={split.dimension}, k={k}, L={L} needs {width} qubits; "
                f"allowed up to N={limits['N']}, k={limits['k']}, L={limits['L']} within {MAX_GATE_QUBITS} qubits",
                width,
            )
    omega = omega_encoding(split, L, backend, cache)
    d_inv = _matrix(cache, "Dinv", split.D_inv, sp.diags(split.D_inv, format="csr"), backend)
    upper = _matrix(cache, "T", split.T, split.T, backend)
    b = _vector(split.b, "b", backend)
    x0 = _vector(split.x0, "x0", backend)
    head = [omega] if omega is not None else []
    terms, pruned = _assemble_terms(head + [d_inv, upper], head + [d_inv, b], x0, k)
    return _finish(terms, pruned, k, "gauss-seidel", backend, split, L)


def build_q_form_expansion(
    split: SplitSystem, k: int, cache: Optional[EncodingCache] = None
) -> LcuExpansion:
    """Terms in ``Q = D⁻¹R`` and ``p = D⁻¹b`` formed classically; emulation only."""
    if k < 0:
        raise ValueError("k must be non-negative")
    _check_cache(cache, "emulation")
    Q = (sp.diags(split.D_inv) @ split.R).tocsr()
    q = _matrix(cache, "Q", split.R, Q, "emulation")
    p = _vector(split.D_inv * split.b, "p", "emulation")
    x0 = _vector(split.x0, "x0", "emulation")
    terms, pruned = _assemble_terms([q], [p], x0, k)
    return _finish(terms, pruned, k, "q-form", "emulation", split)


def build_expansion(
    split: SplitSystem,
    k: int,
    scheme: str = "jacobi",
    backend: str = "emulation",
    L: int = 5,
    cache: Optional[EncodingCache] = None,
) -> LcuExpansion:
    if scheme == "jacobi":
        return build_jacobi_expansion(split, k, backend, cache)
    if scheme == "gauss-seidel":
        return build_gauss_seidel_expansion(split, k, L, backend, cache)
    if scheme == "q-form":
        if backend != "emulation":
            raise ValueError("The q-form scheme is only available on the emulation backend")
        return build_q_form_expansion(split, k, cache)
    raise ValueError(f"Unknown scheme {scheme!r}; expected one of {SCHEMES}")


def assemble_lcu_program(
    expansion: LcuExpansion, backend: Optional[str] = None, max_qubits: int = MAX_GATE_QUBITS
) -> LcuProgram:
    """Bind the expansion to a backend: products, coefficient state and (gate) circuit."""
    backend = backend or expansion.backend
    if backend != expansion.backend:
        raise ValueError(f"Expansion was encoded for {expansion.backend}, not {backend}")
    normalization = build_coefficients(expansion)
    products = [multiply_encodings(t.factors, backend) for t in expansion.terms]
    d = products[0].data_qubits
    mult = max(p.ancilla_count for p in products)
    width = d + mult + normalization.a
    program = LcuProgram(expansion, backend, normalization, products, width, None, d)
    if backend == "gate":
        if width > max_qubits:
            raise CapacityError(f"LCU program needs {width} qubits (cap {max_qubits})", width)
        program.circuit = lcu_circuit(products, expansion.signs, expansion.coefficients, max_qubits)
        logger.info(
            "assembled %s gate program k=%d: %d qubits, %d gates",
            expansion.scheme,
            expansion.k,
            width,
            len(program.circuit.circuit),
        )
    return program


def _gate_amplitudes(program: LcuProgram) -> Tuple[np.ndarray, float]:
    built = program.circuit
    state = run_circuit(built.circuit, Statevector.zero(built.circuit.n_qubits))
    if not built.ancillas:
        # Bare state preparation: nothing to post-select.
        return state.amplitudes.real, 1.0
    try:
        data, probability = post_select_zeros(state, built.ancillas)
    except PostSelectionError as exc:
        raise DegenerateInstanceError(str(exc)) from exc
    return data.amplitudes.real * math.sqrt(probability), probability


def _emulated_amplitudes(program: LcuProgram) -> Tuple[np.ndarray, float]:
    expansion = program.expansion
    outputs = apply_products(program.products)
    total = program.normalization.total
    acc = np.zeros(2**program.data_qubits)
    for sign, c, out in zip(expansion.signs, expansion.coefficients, outputs):
        acc += sign * c * np.real(out)
    acc /= total
    return acc, float(np.dot(acc, acc))


def execute(program: LcuProgram, reference: Optional[np.ndarray] = None) -> SolveResult:
    """Run the program and read the normalized iterate off the data register."""
    expansion = program.expansion
    if program.backend == "gate":
        raw, probability = _gate_amplitudes(program)
        gate_count = program.circuit.circuit.gate_count(expand=True)
    else:
        raw, probability = _emulated_amplitudes(program)
        gate_count = 0
    if probability < 1e-14:
        raise DegenerateInstanceError(f"Post-selection probability {probability:.3e} below 1e-14")
    vector = raw[: expansion.dimension]
    solution = vector / np.linalg.norm(vector)
    raw_norm = program.normalization.total * math.sqrt(probability)
    errors = [fidelity_error(reference, solution)] if reference is not None else []
    resources = {"width": program.width, "gate_count": gate_count, "term_count": len(expansion.terms)}
    logger.debug(
        "%s/%s k=%d: p_success=%.6e raw_norm=%.6e", expansion.scheme, program.backend, expansion.k, probability, raw_norm
    )
    return SolveResult(solution, raw_norm, probability, resources, expansion.k, expansion.scheme, program.backend, errors)


def solve(
    split: SplitSystem,
    k: int,
    scheme: str = "jacobi",
    backend: str = "emulation",
    L: int = 5,
    reference: Optional[np.ndarray] = None,
    cache: Optional[EncodingCache] = None,
    max_qubits: int = MAX_GATE_QUBITS,
) -> SolveResult:
    expansion = build_expansion(split, k, scheme, backend, L, cache)
    return execute(assemble_lcu_program(expansion, backend, max_qubits), reference)


def prior_iterates(
    split: SplitSystem,
    k: int,
    scheme: str = "jacobi",
    backend: str = "emulation",
    L: int = 5,
    reference: Optional[np.ndarray] = None,
) -> List[SolveResult]:
    """Results for every ``k' <= k``, each from its own program run."""
    cache = EncodingCache(backend)
    return [solve(split, kk, scheme, backend, L, reference, cache) for kk in range(k + 1)]


def expectation(result: SolveResult, observable) -> float:
    """``<x_k|M|x_k>`` from the amplitudes."""
    x = np.asarray(result.solution)
    shape = observable.shape
    if len(shape) != 2 or shape[0] != shape[1] or shape[0] != x.size:
        raise DimensionError(f"Observable of shape {shape} does not match a register of {x.size}")
    M = numkit.to_csr(observable) if numkit.is_sparse(observable) else np.asarray(observable)
    return float(np.real(np.vdot(x, M @ x)))


def grid_point_observable(N: int, i: int) -> sp.csr_matrix:
    """Projector ``|i><i|``."""
    if not 0 <= i < N:
        raise DimensionError(f"Grid point {i} outside [0, {N})")
    return sp.csr_matrix(([1.0], ([i], [i])), shape=(N, N))


def moment_observable(grid: np.ndarray, power: int = 1) -> sp.csr_matrix:
    """``diag(grid**power)``; its expectation is the ``power``-th moment of ``|x|²``."""
    return sp.diags(np.asarray(grid, dtype=float) ** power, format="csr")


def estimate_resources(
    N: int, k: int, mode: str = "multiplication", per_encoding_gates: Optional[int] = None
) -> ResourceEstimate:
    """Qubit width and depth class of the iterate circuit."""
    if N < 1 or N & (N - 1):
        raise DimensionError(f"N must be a power of two, got {N}")
    if k < 0:
        raise ValueError("k must be non-negative")
    n = int(math.log2(N))
    a = _lcu_register_size(k + 1)
    if mode == "multiplication":
        width = n + 2 * k + a
    elif mode == "q-form":
        width = n + 4 + a
    else:
        raise ValueError(f"Unknown resource mode {mode!r}")
    depth = f"k^2*C = {k * k * per_encoding_gates}" if per_encoding_gates is not None else "O(k^2)"
    return ResourceEstimate(N, k, mode, width, depth, per_encoding_gates)


def measured_encoding_gates(matrix, max_qubits: int = 6) -> Optional[int]:
    """Expanded gate count of one synthesized matrix encoding, if it fits the simulator."""
    n = numkit.require_square(matrix)
    d = max(1, math.ceil(math.log2(n))) if n > 1 else 1
    if d + 1 > max_qubits or numkit.to_csr(matrix).nnz == 0:
        return None
    return block_encode_matrix(matrix, "gate", "probe").circuit.gate_count(expand=True)
