"""
Pauli-exponential circuit synthesis and CNOT accounting.

Each string rotation exp(-i c theta P) is compiled as a basis change onto Z,
a CNOT ladder collecting the parity on the highest support qubit, one RZ,
and the mirror image.  Multi-term generators are compiled term by term in
(lowest support qubit, label) order.  The circuits are for counting; ansatz
energies never go through them.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import CapacityError, NonHermitianError, SerializationError
from .pauli import PauliSum, basis_indices

logger = logging.getLogger(__name__)

GATE_KINDS = ('CNOT', 'RZ', 'H', 'S', 'SDG')
UNITARY_MAX_QUBITS = 10

_INVERSES = {'H': 'H', 'S': 'SDG', 'SDG': 'S', 'CNOT': 'CNOT'}


@dataclass(frozen=True)
class Gate:
    """CNOT(control, target), RZ(qubit, angle) or a single-qubit Clifford"""

    kind: str
    qubits: Tuple[int, ...]
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate {self.kind!r}")
        arity = 2 if self.kind == 'CNOT' else 1
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind} takes {arity} qubit(s), got {self.qubits}")
        if self.kind == 'CNOT' and self.qubits[0] == self.qubits[1]:
            raise ValueError(f"CNOT control and target coincide on qubit {self.qubits[0]}")

    def to_text(self) -> str:
        if self.kind == 'RZ':
            return f"RZ {self.qubits[0]} {self.angle!r}"
        return ' '.join([self.kind, *map(str, self.qubits)])

    def cancels(self, other: 'Gate') -> bool:
        return (self.kind != 'RZ' and other.kind == _INVERSES[self.kind]
                and other.qubits == self.qubits)


@dataclass
class Circuit:
    """Ordered gate list on n qubits"""

    n: int
    gates: List[Gate] = field(default_factory=list)

    def __post_init__(self):
        for gate in self.gates:
            self._check(gate)

    def _check(self, gate: Gate) -> None:
        if any(q < 0 or q >= self.n for q in gate.qubits):
            raise ValueError(f"gate {gate.to_text()} outside {self.n} qubits")

    def append(self, gate: Gate) -> None:
        self._check(gate)
        self.gates.append(gate)

    def extend(self, other: 'Circuit') -> None:
        if other.n != self.n:
            raise ValueError(f"cannot join circuits on {self.n} and {other.n} qubits")
        self.gates.extend(other.gates)

    def __len__(self) -> int:
        return len(self.gates)

    @property
    def cnot_count(self) -> int:
        return sum(1 for g in self.gates if g.kind == 'CNOT')

    @property
    def rz_count(self) -> int:
        return sum(1 for g in self.gates if g.kind == 'RZ')

    def to_text(self) -> str:
        return '\n'.join(g.to_text() for g in self.gates) + ('\n' if self.gates else '')

    def dump(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_text())
        return path

    @classmethod
    def from_text(cls, text: str, n: int) -> 'Circuit':
        gates = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            parts = raw.split()
            if not parts or parts[0].startswith('#'):
                continue
            try:
                if parts[0] == 'RZ':
                    gates.append(Gate('RZ', (int(parts[1]),), float(parts[2])))
                else:
                    gates.append(Gate(parts[0], tuple(int(p) for p in parts[1:])))
            except (ValueError, IndexError) as e:
                raise SerializationError(f"line {lineno}: malformed gate {raw!r}: {e}")
        try:
            return cls(n, gates)
        except ValueError as e:
            raise SerializationError(str(e))


def cnot_depth(circuit: Circuit) -> int:
    """Longest chain of CNOTs through shared qubits under ASAP scheduling."""
    level = [0] * circuit.n
    for gate in circuit.gates:
        if gate.kind == 'CNOT':
            c, t = gate.qubits
            level[c] = level[t] = max(level[c], level[t]) + 1
    return max(level, default=0)


def _string_circuit(n: int, x_mask: int, z_mask: int, angle: float) -> List[Gate]:
    support = [q for q in range(n) if ((x_mask | z_mask) >> q) & 1]
    if not support:
        return []
    pre, post = [], []
    for q in support:
        x, z = (x_mask >> q) & 1, (z_mask >> q) & 1
        if x and z:
            pre += [Gate('SDG', (q,)), Gate('H', (q,))]
            post += [Gate('H', (q,)), Gate('S', (q,))]
        elif x:
            pre.append(Gate('H', (q,)))
            post.append(Gate('H', (q,)))
    ladder = [Gate('CNOT', (a, b)) for a, b in zip(support, support[1:])]
    return pre + ladder + [Gate('RZ', (support[-1],), angle)] + ladder[::-1] + post


def synthesize_exponential(op: PauliSum, theta: float) -> Circuit:
    """
    Circuit for exp(-i theta O): exact for mutually commuting terms, first
    order in term order otherwise.

    Raises:
        NonHermitianError: If O has complex coefficients
    """
    if not op.is_hermitian():
        raise NonHermitianError("cannot synthesize the exponential of a non-Hermitian operator")
    terms = sorted(op.terms, key=lambda t: (min(t.string.support(), default=-1), t.string.label))
    circuit = Circuit(op.n)
    for term in terms:
        s = term.string
        for gate in _string_circuit(op.n, s.x_mask, s.z_mask, 2.0 * term.coeff.real * theta):
            circuit.append(gate)
    return circuit


def cancel_adjacent(circuit: Circuit) -> Circuit:
    """
    Remove adjacent inverse pairs (identical CNOTs, H H, S SDG) with
    cascading, where adjacency means no other gate touches the same qubits
    in between.
    """
    kept: List[Optional[Gate]] = []
    stacks: List[List[int]] = [[] for _ in range(circuit.n)]
    for gate in circuit.gates:
        tops = {stacks[q][-1] if stacks[q] else None for q in gate.qubits}
        if len(tops) == 1:
            top = tops.pop()
            if top is not None and kept[top].cancels(gate):
                kept[top] = None
                for q in gate.qubits:
                    stacks[q].pop()
                continue
        for q in gate.qubits:
            stacks[q].append(len(kept))
        kept.append(gate)
    return Circuit(circuit.n, [g for g in kept if g is not None])


@dataclass(frozen=True)
class ResourceCount:
    """Gate metrics of a compiled ansatz, raw and after adjacent cancellation"""

    cnot_count: int = 0
    cnot_depth: int = 0
    rz_count: int = 0
    optimized_cnot_count: int = 0
    optimized_cnot_depth: int = 0


def ansatz_circuit(operators: Sequence, thetas: Optional[Iterable[float]] = None) -> Circuit:
    """Concatenated step circuits in ansatz order; operators may be PauliSums or pool operators."""
    ops = [getattr(o, 'op', o) for o in operators]
    thetas = [1.0] * len(ops) if thetas is None else [float(t) for t in thetas]
    if len(thetas) != len(ops):
        raise ValueError(f"{len(ops)} operators but {len(thetas)} angles")
    if not ops:
        return Circuit(0)
    circuit = Circuit(ops[0].n)
    for op, theta in zip(ops, thetas):
        circuit.extend(synthesize_exponential(op, theta))
    return circuit


def ansatz_resources(operators: Sequence, thetas: Optional[Iterable[float]] = None) -> ResourceCount:
    """CNOT count, CNOT depth and RZ count of the ansatz, plus the optimized counts."""
    circuit = ansatz_circuit(operators, thetas)
    optimized = cancel_adjacent(circuit)
    return ResourceCount(
        cnot_count=circuit.cnot_count,
        cnot_depth=cnot_depth(circuit),
        rz_count=circuit.rz_count,
        optimized_cnot_count=optimized.cnot_count,
        optimized_cnot_depth=cnot_depth(optimized),
    )


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """
    Dense unitary of a circuit by applying every gate to the identity.

    Raises:
        CapacityError: Above 10 qubits
    """
    n = circuit.n
    if n > UNITARY_MAX_QUBITS:
        raise CapacityError(f"circuit_unitary limited to {UNITARY_MAX_QUBITS} qubits, got {n}")
    idx = basis_indices(n)
    u = np.eye(1 << n, dtype=np.complex128)
    for gate in circuit.gates:
        q = gate.qubits[0]
        bit = ((idx >> q) & 1)[:, None]
        if gate.kind == 'CNOT':
            c, t = gate.qubits
            u = u[idx ^ (((idx >> c) & 1) << t)]
        elif gate.kind == 'RZ':
            u = u * np.exp(-0.5j * gate.angle * (1 - 2 * bit))
        elif gate.kind == 'H':
            low, high = u[idx & ~(1 << q)], u[idx | (1 << q)]
            u = (low + (1 - 2 * bit) * high) / np.sqrt(2)
        else:
            phase = 1j if gate.kind == 'S' else -1j
            u = np.where(bit == 1, phase * u, u)
    return u
