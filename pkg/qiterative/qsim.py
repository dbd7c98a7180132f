"""Gate-level statevector simulator for the Givens/LCU circuits.

Qubit 0 is the most significant bit of a basis index. Every gate carries an
optional tuple of extra control qubits (all controlled on ``|1>``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import ClassVar, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .config import MAX_DENSE_QUBITS
from .errors import CapacityError, DimensionError, PostSelectionError, QubitIndexError

logger = logging.getLogger(__name__)

Qubits = Tuple[int, ...]


@dataclass(frozen=True)
class MultiControlledRy:
    """``Ry(θ) = [[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]`` on ``target``."""

    theta: float
    controls: Qubits
    target: int
    kind: ClassVar[str] = "RY"

    @property
    def qubits(self) -> Qubits:
        return self.controls + (self.target,)

    def with_controls(self, extra: Sequence[int]) -> "MultiControlledRy":
        return replace(self, controls=tuple(extra) + self.controls)

    def inverse(self) -> "MultiControlledRy":
        return replace(self, theta=-self.theta)

    def relabel(self, mapping: Mapping[int, int]) -> "MultiControlledRy":
        return MultiControlledRy(self.theta, tuple(mapping[q] for q in self.controls), mapping[self.target])


@dataclass(frozen=True)
class MultiControlledPhaseFlip:
    """``-1`` on the all-ones state of ``controls + (target,)``."""

    controls: Qubits
    target: int
    kind: ClassVar[str] = "PF"

    @property
    def qubits(self) -> Qubits:
        return self.controls + (self.target,)

    def with_controls(self, extra: Sequence[int]) -> "MultiControlledPhaseFlip":
        return replace(self, controls=tuple(extra) + self.controls)

    def inverse(self) -> "MultiControlledPhaseFlip":
        return self

    def relabel(self, mapping: Mapping[int, int]) -> "MultiControlledPhaseFlip":
        return MultiControlledPhaseFlip(tuple(mapping[q] for q in self.controls), mapping[self.target])


@dataclass(frozen=True)
class PauliX:
    target: int
    controls: Qubits = ()
    kind: ClassVar[str] = "X"

    @property
    def qubits(self) -> Qubits:
        return self.controls + (self.target,)

    def with_controls(self, extra: Sequence[int]) -> "PauliX":
        return replace(self, controls=tuple(extra) + self.controls)

    def inverse(self) -> "PauliX":
        return self

    def relabel(self, mapping: Mapping[int, int]) -> "PauliX":
        return PauliX(mapping[self.target], tuple(mapping[q] for q in self.controls))


@dataclass(frozen=True)
class CNOT:
    control: int
    target: int
    kind: ClassVar[str] = "CNOT"

    @property
    def qubits(self) -> Qubits:
        return (self.control, self.target)

    def with_controls(self, extra: Sequence[int]) -> PauliX:
        return PauliX(self.target, tuple(extra) + (self.control,))

    def inverse(self) -> "CNOT":
        return self

    def relabel(self, mapping: Mapping[int, int]) -> "CNOT":
        return CNOT(mapping[self.control], mapping[self.target])


@dataclass(frozen=True)
class SWAP:
    a: int
    b: int
    controls: Qubits = ()
    kind: ClassVar[str] = "SWAP"

    @property
    def qubits(self) -> Qubits:
        return self.controls + (self.a, self.b)

    def with_controls(self, extra: Sequence[int]) -> "SWAP":
        return replace(self, controls=tuple(extra) + self.controls)

    def inverse(self) -> "SWAP":
        return self

    def relabel(self, mapping: Mapping[int, int]) -> "SWAP":
        return SWAP(mapping[self.a], mapping[self.b], tuple(mapping[q] for q in self.controls))


@dataclass(frozen=True)
class BasisPermutation:
    """Transposition of basis states ``i`` and ``j`` of the sub-register ``register``."""

    i: int
    j: int
    register: Qubits
    controls: Qubits = ()
    kind: ClassVar[str] = "PERM"

    @property
    def qubits(self) -> Qubits:
        return self.controls + self.register

    def with_controls(self, extra: Sequence[int]) -> "BasisPermutation":
        return replace(self, controls=tuple(extra) + self.controls)

    def inverse(self) -> "BasisPermutation":
        return self

    def relabel(self, mapping: Mapping[int, int]) -> "BasisPermutation":
        return BasisPermutation(
            self.i, self.j, tuple(mapping[q] for q in self.register), tuple(mapping[q] for q in self.controls)
        )


Gate = Union[MultiControlledRy, MultiControlledPhaseFlip, PauliX, CNOT, SWAP, BasisPermutation]


@dataclass
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.n_qubits < 1:
            raise DimensionError("A statevector needs at least one qubit")
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise DimensionError(f"Expected {2 ** self.n_qubits} amplitudes, got {self.amplitudes.shape}")

    @classmethod
    def zero(cls, n_qubits: int) -> "Statevector":
        return cls.basis(n_qubits, 0)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "Statevector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    def copy(self) -> "Statevector":
        return Statevector(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass
class Circuit:
    n_qubits: int
    gates: List[Gate] = field(default_factory=list)
    blocks: Dict[str, Tuple[int, int]] = field(default_factory=dict)

    def append(self, gate: Gate) -> None:
        _check_gate(gate, self.n_qubits)
        self.gates.append(gate)

    def extend(self, gates: Iterable[Gate], block: Optional[str] = None) -> None:
        start = len(self.gates)
        for gate in gates:
            self.append(gate)
        if block is not None:
            self.blocks[block] = (start, len(self.gates))

    def __len__(self) -> int:
        return len(self.gates)

    def qubits_used(self) -> set:
        used: set = set()
        for gate in self.gates:
            used.update(gate.qubits)
        return used

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, [g.inverse() for g in reversed(self.gates)])

    def relabel(self, mapping: Mapping[int, int], n_qubits: int) -> "Circuit":
        """Move qubit ``q`` to ``mapping[q]`` in a register of ``n_qubits``."""
        out = Circuit(n_qubits)
        out.extend(g.relabel(mapping) for g in self.gates)
        return out

    def expanded(self) -> "Circuit":
        """Replace every BasisPermutation by its X/CNOT gate decomposition."""
        out = Circuit(self.n_qubits)
        for gate in self.gates:
            if isinstance(gate, BasisPermutation):
                local = permutation_to_gates(min(gate.i, gate.j), max(gate.i, gate.j), len(gate.register))
                mapping = dict(enumerate(gate.register))
                for sub in local:
                    moved = sub.relabel(mapping)
                    out.append(moved.with_controls(gate.controls) if gate.controls else moved)
            else:
                out.append(gate)
        return out

    def gate_count(self, expand: bool = True) -> int:
        return len(self.expanded()) if expand else len(self.gates)

    def dumps(self) -> str:
        """One line per gate: ``kind qubits [angle]``."""
        lines = [f"QUBITS {self.n_qubits}"]
        for gate in self.gates:
            lines.append(_dump_gate(gate))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Circuit":
        rows = [line.split() for line in text.splitlines() if line.strip() and not line.startswith("#")]
        if not rows or rows[0][0] != "QUBITS":
            raise ValueError("Circuit dump must start with 'QUBITS <n>'")
        circuit = cls(int(rows[0][1]))
        for row in rows[1:]:
            circuit.append(_load_gate(row))
        return circuit


def _ints(text: str) -> Qubits:
    return tuple(int(t) for t in text.split(",") if t != "")


def _dump_gate(gate: Gate) -> str:
    if isinstance(gate, MultiControlledRy):
        return f"RY c={','.join(map(str, gate.controls))} t={gate.target} theta={gate.theta!r}"
    if isinstance(gate, MultiControlledPhaseFlip):
        return f"PF c={','.join(map(str, gate.controls))} t={gate.target}"
    if isinstance(gate, PauliX):
        return f"X c={','.join(map(str, gate.controls))} t={gate.target}"
    if isinstance(gate, CNOT):
        return f"CNOT c={gate.control} t={gate.target}"
    if isinstance(gate, SWAP):
        return f"SWAP c={','.join(map(str, gate.controls))} t={gate.a},{gate.b}"
    return (
        f"PERM c={','.join(map(str, gate.controls))} t={','.join(map(str, gate.register))} "
        f"i={gate.i} j={gate.j}"
    )


def _load_gate(row: List[str]) -> Gate:
    kind = row[0]
    fields_ = dict(item.split("=", 1) for item in row[1:])
    controls = _ints(fields_.get("c", ""))
    if kind == "RY":
        return MultiControlledRy(float(fields_["theta"]), controls, int(fields_["t"]))
    if kind == "PF":
        return MultiControlledPhaseFlip(controls, int(fields_["t"]))
    if kind == "X":
        return PauliX(int(fields_["t"]), controls)
    if kind == "CNOT":
        return CNOT(controls[0], int(fields_["t"]))
    if kind == "SWAP":
        a, b = _ints(fields_["t"])
        return SWAP(a, b, controls)
    if kind == "PERM":
        return BasisPermutation(int(fields_["i"]), int(fields_["j"]), _ints(fields_["t"]), controls)
    raise ValueError(f"Unknown gate kind {kind!r}")


def _check_gate(gate: Gate, n_qubits: int) -> None:
    qubits = gate.qubits
    if len(set(qubits)) != len(qubits):
        raise QubitIndexError(f"{gate.kind} gate has repeated qubits {qubits}")
    if any(q < 0 or q >= n_qubits for q in qubits):
        raise QubitIndexError(f"{gate.kind} gate qubits {qubits} outside register of {n_qubits}")
    if isinstance(gate, MultiControlledRy) and not math.isfinite(gate.theta):
        raise ValueError("Rotation angle must be finite")
    if isinstance(gate, BasisPermutation):
        dim = 2 ** len(gate.register)
        if not (0 <= gate.i < dim and 0 <= gate.j < dim):
            raise QubitIndexError(f"Permutation ({gate.i}, {gate.j}) outside register of size {dim}")


def _index(n: int, fixed: Mapping[int, int]) -> tuple:
    idx: List[Union[int, slice]] = [slice(None)] * n
    for qubit, value in fixed.items():
        idx[qubit] = value
    return tuple(idx)


def _swap_slices(tensor: np.ndarray, n: int, first: Mapping[int, int], second: Mapping[int, int]) -> None:
    a, b = _index(n, first), _index(n, second)
    tmp = tensor[a].copy()
    tensor[a] = tensor[b]
    tensor[b] = tmp


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    """Apply ``gate`` to ``state`` in place and return it."""
    n = state.n_qubits
    _check_gate(gate, n)
    tensor = state.amplitudes.reshape([2] * n)
    if isinstance(gate, CNOT):
        gate = PauliX(gate.target, (gate.control,))
    ones = {q: 1 for q in gate.controls}
    if isinstance(gate, MultiControlledRy):
        c, s = math.cos(gate.theta / 2), math.sin(gate.theta / 2)
        i0 = _index(n, {**ones, gate.target: 0})
        i1 = _index(n, {**ones, gate.target: 1})
        a0 = tensor[i0].copy()
        a1 = tensor[i1].copy()
        tensor[i0] = c * a0 - s * a1
        tensor[i1] = s * a0 + c * a1
    elif isinstance(gate, MultiControlledPhaseFlip):
        tensor[_index(n, {**ones, gate.target: 1})] *= -1
    elif isinstance(gate, PauliX):
        _swap_slices(tensor, n, {**ones, gate.target: 0}, {**ones, gate.target: 1})
    elif isinstance(gate, SWAP):
        _swap_slices(tensor, n, {**ones, gate.a: 0, gate.b: 1}, {**ones, gate.a: 1, gate.b: 0})
    elif isinstance(gate, BasisPermutation):
        if gate.i != gate.j:
            width = len(gate.register)
            bits_i = {q: (gate.i >> (width - 1 - pos)) & 1 for pos, q in enumerate(gate.register)}
            bits_j = {q: (gate.j >> (width - 1 - pos)) & 1 for pos, q in enumerate(gate.register)}
            _swap_slices(tensor, n, {**ones, **bits_i}, {**ones, **bits_j})
    else:
        raise TypeError(f"Unsupported gate {gate!r}")
    state.amplitudes = tensor.reshape(-1)
    return state


def run_circuit(circuit: Circuit, initial: Statevector, expand_permutations: bool = False) -> Statevector:
    """Apply the circuit's gates in order to a copy of ``initial``.

    With ``expand_permutations`` the literal X/CNOT decomposition of every
    BasisPermutation is executed instead of the direct amplitude swap.
    """
    if circuit.n_qubits != initial.n_qubits:
        raise DimensionError(f"Circuit has {circuit.n_qubits} qubits, state has {initial.n_qubits}")
    source = circuit.expanded() if expand_permutations else circuit
    state = initial.copy()
    for gate in source.gates:
        apply_gate(state, gate)
    return state


def circuit_unitary(circuit: Circuit, expand_permutations: bool = False) -> np.ndarray:
    """Dense unitary assembled column by column."""
    n = circuit.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise CapacityError(f"Dense unitary limited to {MAX_DENSE_QUBITS} qubits, circuit has {n}", n)
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        out[:, col] = run_circuit(circuit, Statevector.basis(n, col), expand_permutations).amplitudes
    return out


def post_select_zeros(state: Statevector, qubit_subset: Sequence[int]) -> Tuple[Statevector, float]:
    """Project ``qubit_subset`` onto ``|0>``.

    Returns the renormalized state of the remaining qubits (original order)
    and the pre-projection weight of the kept amplitudes.
    """
    subset = sorted(set(qubit_subset))
    if not subset:
        raise ValueError("post_select_zeros needs at least one qubit")
    n = state.n_qubits
    if any(q < 0 or q >= n for q in subset):
        raise QubitIndexError(f"Post-selection qubits {subset} outside register of {n}")
    if len(subset) == n:
        raise ValueError("Cannot post-select every qubit; no register would remain")
    tensor = state.amplitudes.reshape([2] * n)
    kept = tensor[_index(n, {q: 0 for q in subset})].reshape(-1)
    probability = float(np.vdot(kept, kept).real)
    if probability < 1e-14:
        raise PostSelectionError(f"Post-selection probability {probability:.3e} below 1e-14")
    return Statevector(n - len(subset), kept / math.sqrt(probability)), probability


def _bits(value: int, n: int) -> List[int]:
    return [(value >> (n - 1 - q)) & 1 for q in range(n)]


def _transposition_gates(a: int, b: int, n: int) -> List[Gate]:
    """Gates swapping basis states ``a`` and ``b`` that differ in exactly one bit."""
    diff = a ^ b
    target = n - 1 - diff.bit_length() + 1
    bits = _bits(a, n)
    controls = tuple(q for q in range(n) if q != target)
    flips = [PauliX(q) for q in controls if bits[q] == 0]
    if not controls:
        core: Gate = PauliX(target)
    elif len(controls) == 1:
        core = CNOT(controls[0], target)
    else:
        core = PauliX(target, controls)
    return flips + [core] + flips


def permutation_to_gates(i: int, j: int, n: int) -> List[Gate]:
    """X / CNOT / multi-controlled-X sequence realizing the transposition ``(i j)``.

    Walks a Gray-code path from ``i`` to ``j`` and back, one bit per step.
    """
    if min(i, j) < 0 or max(i, j) >= 2**n:
        raise QubitIndexError(f"Basis indices ({i}, {j}) outside a {n}-qubit register")
    if i == j:
        return []
    path = [i]
    current = i
    for q in range(n):
        mask = 1 << (n - 1 - q)
        if (current ^ j) & mask:
            current ^= mask
            path.append(current)
    steps = list(zip(path[:-1], path[1:]))
    sequence = steps + steps[-2::-1]
    gates: List[Gate] = []
    for a, b in sequence:
        gates.extend(_transposition_gates(a, b, n))
    return gates


def controlled_circuit(circuit: Circuit, control_qubits: Sequence[int], control_pattern: Sequence[int]) -> Circuit:
    """Condition every gate on ``control_qubits`` being in ``control_pattern``.

    Zero entries of the pattern are realized by X-conjugation.
    """
    controls = tuple(control_qubits)
    pattern = tuple(int(b) for b in control_pattern)
    if len(controls) != len(pattern):
        raise DimensionError("control_pattern length must match control_qubits")
    overlap = set(controls) & circuit.qubits_used()
    if overlap:
        raise QubitIndexError(f"Control qubits {sorted(overlap)} overlap the circuit register")
    n = max([circuit.n_qubits] + [q + 1 for q in controls])
    flips = [PauliX(q) for q, bit in zip(controls, pattern) if bit == 0]
    out = Circuit(n)
    out.extend(flips)
    out.extend(g.with_controls(controls) for g in circuit.gates)
    out.extend(flips)
    return out


def phase_flip_on_pattern(qubits: Sequence[int], pattern: Sequence[int]) -> List[Gate]:
    """Multiply the basis state ``pattern`` of ``qubits`` by ``-1``."""
    qubits = tuple(qubits)
    flips = [PauliX(q) for q, bit in zip(qubits, pattern) if bit == 0]
    return flips + [MultiControlledPhaseFlip(qubits[:-1], qubits[-1])] + flips


def global_sign_flip(qubit: int) -> List[Gate]:
    """``-I`` realized as ``(Z X)^2`` on one qubit."""
    z = MultiControlledPhaseFlip((), qubit)
    return [PauliX(qubit), z, PauliX(qubit), z]


def bits_of(value: int, n: int) -> List[int]:
    return _bits(value, n)
