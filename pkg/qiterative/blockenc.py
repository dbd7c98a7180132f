"""Block encodings by unitary dilation and Givens synthesis.

A matrix encoding on ``d`` data qubits and ``a`` ancillas stores ``W / alpha``
in the block where every ancilla is ``|0>``. Local qubit layout is always
data qubits first, ancillas after.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import numkit
from .config import BACKENDS, MAX_DENSE_QUBITS, MAX_GATE_QUBITS, ZERO_ANGLE_TOLERANCE
from .errors import CapacityError, DegenerateEncodingError, DimensionError, NormalizationError
from .qsim import (
    BasisPermutation,
    Circuit,
    MultiControlledRy,
    bits_of,
    circuit_unitary,
    controlled_circuit,
    global_sign_flip,
    phase_flip_on_pattern,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BlockEncoding:
    """Encoding of a matrix (``kind='matrix'``/``'lcu'``) or a state (``kind='vector'``).

    ``block`` is the normalized padded operator (dense, sparse or a
    ``LinearOperator``) or, for vectors, the normalized padded amplitudes.
    ``circuit`` is only present for the gate backend.
    """

    source_dim: int
    alpha: float
    kind: str
    n_qubits: int
    data_qubits: int
    block: object
    circuit: Optional[Circuit] = None
    label: str = ""

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise DegenerateEncodingError(f"Encoding {self.label!r} has non-positive alpha {self.alpha}")

    @property
    def padded_dim(self) -> int:
        return 2**self.data_qubits

    @property
    def ancilla_count(self) -> int:
        return self.n_qubits - self.data_qubits

    @property
    def is_vector(self) -> bool:
        return self.kind == "vector"

    def apply(self, v: np.ndarray) -> np.ndarray:
        """``(W / alpha) v`` on the padded data register."""
        if self.is_vector:
            raise TypeError("A vector encoding has no matrix action")
        v = np.asarray(v)
        if v.shape[0] != self.padded_dim:
            v = numkit.pad_vector(v, self.padded_dim)
        return self.block @ v


@dataclass(frozen=True, eq=False)
class ProductEncoding:
    """``E_1 E_2 ... E_r``; the rightmost factor acts first and may be a state preparation."""

    factors: Tuple[BlockEncoding, ...]
    total_alpha: float
    ancilla_count: int
    data_qubits: int
    circuit: Optional[Circuit] = None
    offsets: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def source_dim(self) -> int:
        return self.factors[0].source_dim

    @property
    def n_qubits(self) -> int:
        return self.data_qubits + self.ancilla_count

    @property
    def prepares_state(self) -> bool:
        return self.factors[-1].is_vector


def _data_qubits(n: int) -> int:
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


def _check_backend(backend: str) -> None:
    if backend not in BACKENDS:
        raise ValueError(f"Unknown backend {backend!r}; expected one of {BACKENDS}")


def dilate(W) -> np.ndarray:
    """Orthogonal ``[[W, √(I-WWᵀ)], [√(I-WᵀW), -Wᵀ]]`` for ``‖W‖₂ <= 1``.

    For symmetric ``W`` both square roots coincide and the lower-right block is ``-W``.
    """
    W = np.asarray(numkit.to_dense(W), dtype=float)
    n = numkit.require_square(W)
    norm = numkit.spectral_norm(W)
    if norm > 1 + 1e-12:
        raise NormalizationError(f"Cannot dilate a matrix with spectral norm {norm:.15g} > 1")
    eye = np.eye(n)
    top = numkit.psd_sqrt(eye - W @ W.T)
    bottom = numkit.psd_sqrt(eye - W.T @ W)
    return np.block([[W, top], [bottom, -W.T]])


def _givens_block(theta: float, i: int, j: int, n: int) -> List:
    """``P(j, last) P(i, last-1) C^{n-1}Ry(2θ) P(i, last-1) P(j, last)``."""
    register = tuple(range(n))
    last = 2**n - 1
    swaps = []
    if j != last:
        swaps.append(BasisPermutation(j, last, register))
    if i != last - 1:
        swaps.append(BasisPermutation(i, last - 1, register))
    rotation = MultiControlledRy(2.0 * theta, tuple(range(n - 1)), n - 1)
    return swaps + [rotation] + swaps[::-1]


def synthesize_circuit(U, n: int) -> Circuit:
    """Givens-rotation circuit whose unitary equals the orthogonal matrix ``U``."""
    U = np.asarray(numkit.to_dense(U), dtype=float)
    dim = numkit.require_square(U)
    if dim != 2**n:
        raise DimensionError(f"Matrix of size {dim} does not fit {n} qubits")
    defect = float(np.abs(U.T @ U - np.eye(dim)).max())
    if defect > 1e-10:
        raise NormalizationError(f"Input is not orthogonal (defect {defect:.3e})")
    qr = numkit.givens_qr(U)
    circuit = Circuit(n)
    for index in np.flatnonzero(qr.residual < 0):
        circuit.extend(phase_flip_on_pattern(range(n), bits_of(int(index), n)))
    kept = 0
    for rot in reversed(qr.rotations):
        if abs(rot.theta) < ZERO_ANGLE_TOLERANCE:
            continue
        circuit.extend(_givens_block(rot.theta, rot.i, rot.j, n))
        kept += 1
    logger.debug("synthesized %d Givens blocks on %d qubits", kept, n)
    return circuit


def block_encode_matrix(W, backend: str = "emulation", label: str = "") -> BlockEncoding:
    """Encode ``W / ‖W‖₂`` in the ancilla-zero block of a one-ancilla unitary."""
    _check_backend(backend)
    n = numkit.require_square(W)
    alpha = numkit.spectral_norm(W)
    if alpha == 0:
        raise DegenerateEncodingError(f"Cannot block encode the zero matrix {label!r}")
    d = _data_qubits(n)
    size = 2**d
    if backend == "emulation":
        if numkit.is_sparse(W):
            block = (numkit.to_csr(W) / alpha).tocsr()
            block.resize((size, size))
        else:
            block = numkit.pad_matrix(np.asarray(W, dtype=float) / alpha, size)
        return BlockEncoding(n, alpha, "matrix", d + 1, d, block, None, label)
    if d + 1 > MAX_GATE_QUBITS:
        raise CapacityError(f"Gate encoding of {label or 'matrix'} needs {d + 1} qubits", d + 1)
    block = numkit.pad_matrix(numkit.to_dense(W).astype(float) / alpha, size)
    local = synthesize_circuit(dilate(block), d + 1)
    # Dilation puts the ancilla on the most significant qubit; move it last.
    mapping = {0: d, **{q: q - 1 for q in range(1, d + 1)}}
    circuit = local.relabel(mapping, d + 1)
    return BlockEncoding(n, alpha, "matrix", d + 1, d, block, circuit, label)


def block_encode_vector(v, backend: str = "emulation", label: str = "") -> BlockEncoding:
    """State preparation ``|0> -> v / ‖v‖``; zero-padded to a power of two, no ancillas."""
    _check_backend(backend)
    v = np.asarray(v, dtype=float).reshape(-1)
    alpha = float(np.linalg.norm(v))
    if alpha == 0:
        raise DegenerateEncodingError(f"Cannot prepare the zero vector {label!r}")
    d = _data_qubits(v.size)
    state = numkit.pad_vector(v / alpha, 2**d)
    circuit = None
    if backend == "gate":
        if d > MAX_GATE_QUBITS:
            raise CapacityError(f"State preparation of {label or 'vector'} needs {d} qubits", d)
        rotations, pivot = numkit.givens_reduce_vector(state)
        circuit = Circuit(d)
        if pivot < 0:
            circuit.extend(phase_flip_on_pattern(range(d), [0] * d))
        for rot in reversed(rotations):
            if abs(rot.theta) >= ZERO_ANGLE_TOLERANCE:
                circuit.extend(_givens_block(rot.theta, rot.i, rot.j, d))
    return BlockEncoding(v.size, alpha, "vector", d, d, state, circuit, label)


def _embed(circuit: Circuit, data_qubits: int, ancillas: Sequence[int], n_qubits: int) -> Circuit:
    """Map a local ``[data][ancillas]`` circuit into a wider register."""
    mapping = {q: q for q in range(data_qubits)}
    mapping.update({data_qubits + i: a for i, a in enumerate(ancillas)})
    return circuit.relabel(mapping, n_qubits)


def multiply_encodings(factors: Sequence[BlockEncoding], backend: str = "emulation") -> ProductEncoding:
    """Product of encodings, each matrix factor on its own fresh ancillas.

    Ancillas are allocated from the rightmost factor outward, so products
    sharing a right suffix share the same ancilla prefix.
    """
    _check_backend(backend)
    factors = tuple(factors)
    if not factors:
        raise ValueError("multiply_encodings needs at least one factor")
    if any(f.is_vector for f in factors[:-1]):
        raise ValueError("Only the rightmost factor may be a state preparation")
    d = factors[0].data_qubits
    for f in factors:
        if f.data_qubits != d or f.source_dim != factors[0].source_dim:
            raise DimensionError(
                f"Encoding {f.label!r} has dimension {f.source_dim}, expected {factors[0].source_dim}"
            )
    total_alpha = float(np.prod([f.alpha for f in factors]))
    offsets: List[int] = []
    cursor = 0
    for f in reversed(factors):
        offsets.append(cursor)
        cursor += f.ancilla_count
    offsets.reverse()
    ancilla_count = cursor
    circuit = None
    if backend == "gate":
        width = d + ancilla_count
        if width > MAX_GATE_QUBITS:
            raise CapacityError(f"Product encoding needs {width} qubits", width)
        if any(f.circuit is None for f in factors):
            raise ValueError("Gate backend product needs gate-level factors")
        circuit = Circuit(width)
        for f, offset in zip(reversed(factors), reversed(offsets)):
            ancillas = [d + offset + i for i in range(f.ancilla_count)]
            circuit.extend(_embed(f.circuit, d, ancillas, width).gates, block=f.label or None)
    return ProductEncoding(factors, total_alpha, ancilla_count, d, circuit, tuple(offsets))


def apply_products(products: Sequence[ProductEncoding], v: Optional[np.ndarray] = None) -> List[np.ndarray]:
    """Post-selected outputs of several products, sharing common right suffixes."""
    memo: Dict[tuple, np.ndarray] = {}
    outputs = []
    for product in products:
        factors = product.factors
        if product.prepares_state:
            start_len = 1
            key: tuple = (id(factors[-1]),)
            state = factors[-1].block
        else:
            if v is None:
                raise ValueError("A matrix-only product needs an input vector")
            start_len = 0
            key = ()
            state = numkit.pad_vector(np.asarray(v), 2**product.data_qubits)
        for depth in range(start_len, len(factors)):
            factor = factors[len(factors) - 1 - depth]
            key = key + (id(factor),)
            cached = memo.get(key)
            if cached is None:
                cached = factor.apply(state)
                memo[key] = cached
            state = cached
        outputs.append(state)
    return outputs


@dataclass
class LcuCircuit:
    circuit: Circuit
    data_qubits: int
    mult_ancillas: int
    lcu_ancillas: int

    @property
    def ancillas(self) -> List[int]:
        return list(range(self.data_qubits, self.circuit.n_qubits))


def lcu_circuit(
    products: Sequence[ProductEncoding],
    signs: Sequence[int],
    coefficients: Sequence[float],
    max_qubits: int = MAX_GATE_QUBITS,
) -> LcuCircuit:
    """Prepare, select and unprepare: ancilla-zero block is ``Σ s_j c_j U_j / Σ c_j``.

    Layout is ``[data][multiplication ancillas][lcu register]``.
    """
    if not products:
        raise ValueError("lcu_circuit needs at least one term")
    d = products[0].data_qubits
    mult = max(p.ancilla_count for p in products)
    a = math.ceil(math.log2(len(products))) if len(products) > 1 else 0
    width = d + mult + a
    if width > max_qubits:
        raise CapacityError(f"LCU program needs {width} qubits (cap {max_qubits})", width)
    if any(p.circuit is None for p in products):
        raise ValueError("Gate-level LCU needs gate-level products")
    lcu_qubits = list(range(d + mult, width))
    circuit = Circuit(width)
    prep = None
    if a:
        weights = np.sqrt(np.asarray(coefficients, dtype=float) / float(np.sum(coefficients)))
        prep = block_encode_vector(numkit.pad_vector(weights, 2**a), "gate", "lcu-prep")
        circuit.extend(prep.circuit.relabel(dict(enumerate(lcu_qubits)), width).gates, block="prepare")
    for j, (product, sign) in enumerate(zip(products, signs)):
        term = product.circuit.relabel({q: q for q in range(product.n_qubits)}, width)
        if a:
            pattern = bits_of(j, a)
            circuit.extend(controlled_circuit(term, lcu_qubits, pattern).gates, block=f"term-{j}")
            if sign < 0:
                circuit.extend(phase_flip_on_pattern(lcu_qubits, pattern))
        else:
            circuit.extend(term.gates, block=f"term-{j}")
            if sign < 0:
                circuit.extend(global_sign_flip(0))
    if prep is not None:
        circuit.extend(prep.circuit.inverse().relabel(dict(enumerate(lcu_qubits)), width).gates, block="unprepare")
    return LcuCircuit(circuit, d, mult, a)


def lcu_encoding(
    terms: Sequence[Tuple[int, Sequence[BlockEncoding], float]],
    backend: str = "emulation",
    label: str = "lcu",
) -> BlockEncoding:
    """Encoding of ``Σ s_j c_j ∏ factors_j`` with ``alpha = Σ c_j``.

    Each term is ``(sign, matrix factors, c_j)`` where ``c_j`` is the product
    of the factor alphas; an empty factor list stands for the identity.
    """
    _check_backend(backend)
    if not terms:
        raise ValueError("lcu_encoding needs at least one term")
    coefficients = [float(c) for _, _, c in terms]
    if min(coefficients) <= 0:
        raise NormalizationError("LCU coefficients must be positive")
    alpha = float(sum(coefficients))
    reference = next(f for _, fs, _ in terms for f in fs)
    d, n = reference.data_qubits, reference.source_dim
    size = 2**d
    products = [multiply_encodings(fs, backend) if fs else None for _, fs, _ in terms]
    signs = [s for s, _, _ in terms]

    def matvec(v: np.ndarray) -> np.ndarray:
        v = np.asarray(v).reshape(-1)
        outs = apply_products([p for p in products if p is not None], v)
        it = iter(outs)
        acc = np.zeros(size, dtype=np.result_type(v, float))
        for sign, product, c in zip(signs, products, coefficients):
            acc += sign * c * (v if product is None else next(it))
        return acc / alpha

    operator = spla.LinearOperator((size, size), matvec=matvec, rmatvec=None, dtype=float)
    if backend == "emulation":
        return BlockEncoding(n, alpha, "lcu", d + 1, d, operator, None, label)
    identity = multiply_encodings([_identity_encoding(reference)], "gate")
    gate_products = [p if p is not None else identity for p in products]
    built = lcu_circuit(gate_products, signs, coefficients)
    return BlockEncoding(n, alpha, "lcu", built.circuit.n_qubits, d, operator, built.circuit, label)


def _identity_encoding(reference: BlockEncoding) -> BlockEncoding:
    d = reference.data_qubits
    return BlockEncoding(reference.source_dim, 1.0, "matrix", d, d, sp.identity(2**d, format="csr"), Circuit(d), "I")


def extract_block(encoding) -> np.ndarray:
    """Ancilla-zero block of the realized unitary, or the prepared state for a vector."""
    if encoding.circuit is None:
        if isinstance(encoding, ProductEncoding):
            raise ValueError("Emulated products have no realized unitary")
        if encoding.is_vector:
            return np.asarray(encoding.block)[: encoding.source_dim]
        dense = numkit.to_dense(encoding.block) if not isinstance(encoding.block, spla.LinearOperator) else (
            encoding.block @ np.eye(encoding.padded_dim)
        )
        return dense[: encoding.source_dim, : encoding.source_dim]
    n = encoding.circuit.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise CapacityError(f"Block extraction limited to {MAX_DENSE_QUBITS} qubits, encoding has {n}", n)
    U = circuit_unitary(encoding.circuit)
    stride = 2 ** (n - encoding.data_qubits)
    rows = U[::stride, ::stride].real
    source_dim = encoding.source_dim
    if isinstance(encoding, BlockEncoding) and encoding.is_vector:
        return U[:source_dim, 0].real
    if isinstance(encoding, ProductEncoding) and encoding.prepares_state:
        return rows[:source_dim, 0]
    return rows[:source_dim, :source_dim]


class EncodingCache:
    """Reuses encodings of the same operator across timesteps and iteration counts."""

    def __init__(self, backend: str = "emulation") -> None:
        _check_backend(backend)
        self.backend = backend
        self._entries: Dict[tuple, Tuple[object, BlockEncoding]] = {}
        self.hits = 0

    def store(self, label: str, source, encoding: BlockEncoding) -> BlockEncoding:
        self._entries[(label, id(source))] = (source, encoding)
        return encoding

    def lookup(self, label: str, source) -> Optional[BlockEncoding]:
        entry = self._entries.get((label, id(source)))
        if entry is not None and entry[0] is source:
            self.hits += 1
            return entry[1]
        return None

    def __len__(self) -> int:
        return len(self._entries)
