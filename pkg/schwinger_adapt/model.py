"""
Lattice Schwinger model on 2L staggered sites.

Qubit j is staggered site j (fermions on even j, antifermions on odd j),
|1> is occupied and Z|1> = -|1>.  The staggered vacuum |1010...> has Q = 0
and mass energy -L*m0.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List

import numpy as np

from .exceptions import CapacityError
from .pauli import PauliString, PauliSum, PauliTerm, basis_indices, popcount
from .statevector import Statevector, bitstring_to_index
from .utils import cached, validate_preset_label

logger = logging.getLogger(__name__)

CP_UNITARY_MAX_L = 6

REFERENCE_KINDS = ('staggered_vacuum', 'trs_breaking_psi1', 'trs_preserving_psi2')


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters: L physical sites, lattice spacing a, bare mass m0, coupling g"""

    L: int
    m0: float
    g: float
    a: float = 1.0

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"L must be a positive integer, got {self.L}")
        if not self.a > 0:
            raise ValueError(f"lattice spacing must be positive, got {self.a}")

    @property
    def n_qubits(self) -> int:
        return 2 * self.L

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ModelParams':
        return cls(L=int(data['L']), m0=float(data['m0']), g=float(data['g']), a=float(data.get('a', 1.0)))


@dataclass(frozen=True)
class Preset:
    """Named (m0, g) point; correlation length grows from A to C"""

    label: str
    m0: float
    g: float

    def params(self, L: int, a: float = 1.0) -> ModelParams:
        return ModelParams(L=L, m0=self.m0, g=self.g, a=a)


PRESETS = {
    'A': Preset('A', 0.5, 0.3),
    'B': Preset('B', 0.1, 0.8),
    'C': Preset('C', 0.1, 0.3),
}


def get_preset(label: str) -> Preset:
    return PRESETS[validate_preset_label(label)]


def _z(n: int, *qubits: int) -> PauliString:
    mask = 0
    for q in qubits:
        mask |= 1 << q
    return PauliString(n, 0, mask)


@cached(key_prefix='hamiltonian')
def build_hamiltonian(p: ModelParams) -> PauliSum:
    """
    Schwinger Hamiltonian with hopping, staggered mass and the gauge energy
    of the integrated-out electric field.

    The gauge sum (a g^2 / 8) sum_j (sum_{k<=j} Z_k + c_j)^2, with
    c_j = sum_{k<=j} (-1)^k, is expanded into identity, Z and ZZ terms.  The
    constant term is kept.
    """
    n = p.n_qubits
    terms: List[PauliTerm] = []

    hop = 1.0 / (4.0 * p.a)
    for j in range(n - 1):
        pair = (1 << j) | (1 << (j + 1))
        terms.append(PauliTerm(hop, PauliString(n, pair, 0)))
        terms.append(PauliTerm(hop, PauliString(n, pair, pair)))

    for j in range(n):
        terms.append(PauliTerm(0.5 * p.m0 * (-1) ** j, _z(n, j)))

    gauge = p.a * p.g ** 2 / 8.0
    for j in range(n - 1):
        c_j = 1.0 if j % 2 == 0 else 0.0
        terms.append(PauliTerm(gauge * (j + 1 + c_j ** 2), PauliString.identity(n)))
        for k in range(j + 1):
            if c_j:
                terms.append(PauliTerm(gauge * 2.0 * c_j, _z(n, k)))
            for l in range(k + 1, j + 1):
                terms.append(PauliTerm(gauge * 2.0, _z(n, k, l)))

    hamiltonian = PauliSum(n, terms)
    logger.debug(f"Built Hamiltonian L={p.L} m0={p.m0} g={p.g} a={p.a}: {len(hamiltonian)} terms")
    return hamiltonian


def charge_operator(L: int) -> PauliSum:
    """Q = 1/2 sum_k (Z_k + (-1)^k); the constant vanishes for an even site count."""
    if L < 1:
        raise ValueError(f"L must be at least 1, got {L}")
    n = 2 * L
    terms = [PauliTerm(0.5, _z(n, k)) for k in range(n)]
    terms.append(PauliTerm(0.5 * sum((-1) ** k for k in range(n)), PauliString.identity(n)))
    return PauliSum(n, terms)


def charge_values(L: int) -> np.ndarray:
    """Eigenvalue of Q for every computational basis index."""
    n = 2 * L
    idx = basis_indices(n)
    values = np.zeros(idx.shape, dtype=np.int64)
    for k in range(n):
        occupied = (idx >> k) & 1
        # even site: empty contributes +1; odd site: occupied contributes -1
        values += (1 - occupied) if k % 2 == 0 else -occupied
    return values


def charge_sector_indices(L: int, charge: int) -> np.ndarray:
    return np.flatnonzero(charge_values(L) == charge)


def vacuum_bitstring(L: int) -> str:
    return '10' * L


def flipped_bitstring(L: int) -> str:
    """Vacuum with qubits 3 and 4 flipped (10101010 -> 10110010 at L = 4)."""
    if L < 3:
        raise ValueError(f"the contaminated reference needs L >= 3, got {L}")
    bits = list(vacuum_bitstring(L))
    for q in (3, 4):
        bits[q] = '1' if bits[q] == '0' else '0'
    return ''.join(bits)


def reference_state(L: int, kind: str = 'staggered_vacuum') -> Statevector:
    """
    Reference states for the adaptive runs.

    Args:
        L: Physical sites
        kind: staggered_vacuum, trs_breaking_psi1 or trs_preserving_psi2

    Raises:
        ValueError: For an unknown kind or an L the kind is not defined for
    """
    n = 2 * L
    if kind == 'staggered_vacuum':
        return Statevector.from_bitstring(vacuum_bitstring(L))
    if kind not in REFERENCE_KINDS:
        raise ValueError(f"unknown reference kind {kind!r}; expected one of {REFERENCE_KINDS}")
    relative = -1j if kind == 'trs_breaking_psi1' else -1.0
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[bitstring_to_index(vacuum_bitstring(L))] = 1 / np.sqrt(2)
    amps[bitstring_to_index(flipped_bitstring(L))] = relative / np.sqrt(2)
    return Statevector(amps)


def _reflect_mask(mask: int, n: int) -> int:
    out = 0
    for q in range(n):
        if (mask >> q) & 1:
            out |= 1 << (n - 1 - q)
    return out


def cp_unitary(L: int) -> np.ndarray:
    """
    Dense CP operator: X on every qubit followed by the reflection j -> 2L-1-j.

    It is a real permutation matrix with global sign +1.

    Raises:
        CapacityError: For L above 6
    """
    if L > CP_UNITARY_MAX_L:
        raise CapacityError(f"cp_unitary limited to L <= {CP_UNITARY_MAX_L}, got {L}")
    n = 2 * L
    idx = basis_indices(n)
    flipped = idx ^ ((1 << n) - 1)
    image = np.zeros_like(idx)
    for q in range(n):
        image |= ((flipped >> q) & 1) << (n - 1 - q)
    matrix = np.zeros((1 << n, 1 << n))
    matrix[image, idx] = 1.0
    return matrix


def cp_conjugate(op: PauliSum) -> PauliSum:
    """CP O CP^dagger computed on the strings: reflect and pick up (-1) per Z or Y letter."""
    n = op.n
    terms = []
    for term in op.terms:
        s = term.string
        sign = -1.0 if popcount(s.z_mask) % 2 else 1.0
        terms.append(PauliTerm(sign * term.coeff,
                               PauliString(n, _reflect_mask(s.x_mask, n), _reflect_mask(s.z_mask, n))))
    return PauliSum(n, terms)
