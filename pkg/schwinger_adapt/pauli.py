"""
Sparse Pauli-string algebra.

A PauliString is a phase-free pair of bit masks (x_mask, z_mask) over n
qubits; qubit q carries X if bit q of x_mask is set, Z if bit q of z_mask is
set and Y if both are.  The string denotes i^{y_count} X^x Z^z, which is the
Hermitian tensor product of single-qubit Paulis.  All phases live in the
complex coefficients of PauliTerm / PauliSum.

Printed labels put qubit 0 leftmost, so ``PauliString.from_label("XZZY")``
has X on qubit 0 and Y on qubit 3.  Statevector index bit q is qubit q.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from .exceptions import CapacityError, DimensionError, SerializationError
from .settings import SCHWINGER_SETTINGS

logger = logging.getLogger(__name__)

PRUNE_TOLERANCE = 1e-14
HERMITIAN_TOLERANCE = 1e-12

# i**k for k = 0..3
_I_POWERS = (1 + 0j, 1j, -1 + 0j, -1j)

_LETTER_BITS = {'I': (0, 0), 'X': (1, 0), 'Z': (0, 1), 'Y': (1, 1)}
_BITS_LETTER = {bits: letter for letter, bits in _LETTER_BITS.items()}

Scalar = Union[int, float, complex]


def popcount(value: int) -> int:
    return bin(value).count('1')


@lru_cache(maxsize=32)
def basis_indices(n: int) -> np.ndarray:
    """Read-only array 0 .. 2**n - 1 shared by every kernel on n qubits."""
    idx = np.arange(1 << n, dtype=np.int64)
    idx.setflags(write=False)
    return idx


def z_parity(idx: np.ndarray, z_mask: int) -> np.ndarray:
    """Parity of popcount(idx & z_mask) for every entry of idx."""
    parity = np.zeros(idx.shape, dtype=np.int64)
    q = 0
    while z_mask:
        if z_mask & 1:
            parity ^= (idx >> q) & 1
        z_mask >>= 1
        q += 1
    return parity


@dataclass(frozen=True)
class PauliString:
    """Phase-free Pauli string on n qubits"""

    n: int
    x_mask: int
    z_mask: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"qubit count must be non-negative, got {self.n}")
        limit = 1 << self.n
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise ValueError(f"masks do not fit in {self.n} qubits")

    @classmethod
    def from_label(cls, label: str) -> 'PauliString':
        x_mask = 0
        z_mask = 0
        for q, letter in enumerate(label.upper()):
            try:
                x_bit, z_bit = _LETTER_BITS[letter]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {letter!r} in {label!r}")
            x_mask |= x_bit << q
            z_mask |= z_bit << q
        return cls(len(label), x_mask, z_mask)

    @classmethod
    def identity(cls, n: int) -> 'PauliString':
        return cls(n, 0, 0)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> 'PauliString':
        """One non-identity letter on the given qubit."""
        if not 0 <= qubit < n:
            raise ValueError(f"qubit {qubit} out of range for {n} qubits")
        x_bit, z_bit = _LETTER_BITS[letter.upper()]
        return cls(n, x_bit << qubit, z_bit << qubit)

    @property
    def label(self) -> str:
        return ''.join(self.letter(q) for q in range(self.n))

    def letter(self, qubit: int) -> str:
        return _BITS_LETTER[((self.x_mask >> qubit) & 1, (self.z_mask >> qubit) & 1)]

    @property
    def weight(self) -> int:
        return popcount(self.x_mask | self.z_mask)

    @property
    def y_count(self) -> int:
        return popcount(self.x_mask & self.z_mask)

    def support(self) -> frozenset:
        mask = self.x_mask | self.z_mask
        return frozenset(q for q in range(self.n) if (mask >> q) & 1)

    def commutes_with(self, other: 'PauliString') -> bool:
        _check_same_n(self.n, other.n)
        return (popcount(self.x_mask & other.z_mask) + popcount(self.z_mask & other.x_mask)) % 2 == 0

    def embed(self, n: int, offset: int) -> 'PauliString':
        """Place this string on qubits offset .. offset + self.n - 1 of an n-qubit register."""
        if offset < 0 or offset + self.n > n:
            raise ValueError(f"cannot embed {self.n}-qubit string at offset {offset} in {n} qubits")
        return PauliString(n, self.x_mask << offset, self.z_mask << offset)

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class PauliTerm:
    """Complex-weighted Pauli string"""

    coeff: complex
    string: PauliString

    @property
    def n(self) -> int:
        return self.string.n

    @classmethod
    def from_label(cls, label: str, coeff: Scalar = 1.0) -> 'PauliTerm':
        return cls(complex(coeff), PauliString.from_label(label))


def _check_same_n(n_a: int, n_b: int) -> None:
    if n_a != n_b:
        raise DimensionError(f"qubit count mismatch: {n_a} vs {n_b}")


def multiply(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    """
    Exact product of two Pauli terms.

    Masks combine by XOR; the phase is i^(y_a + y_b - y_ab + 2|z_a & x_b|).

    Raises:
        DimensionError: If the terms act on different qubit counts
    """
    _check_same_n(a.n, b.n)
    sa, sb = a.string, b.string
    x = sa.x_mask ^ sb.x_mask
    z = sa.z_mask ^ sb.z_mask
    exponent = (sa.y_count + sb.y_count - popcount(x & z) + 2 * popcount(sa.z_mask & sb.x_mask)) % 4
    return PauliTerm(a.coeff * b.coeff * _I_POWERS[exponent], PauliString(a.n, x, z))


class PauliSum:
    """
    Immutable complex-weighted sum of Pauli strings.

    Terms are keyed by (x_mask, z_mask); coefficients with magnitude at or
    below 1e-14 are pruned.  Iteration order is by label, so everything derived
    from a PauliSum is deterministic.
    """

    __slots__ = ('n', '_terms', '_plan', '_sparse', '_hash', '_split', '_commuting')

    def __init__(self, n: int, terms: Optional[Iterable[PauliTerm]] = None):
        self.n = int(n)
        merged: Dict[Tuple[int, int], complex] = {}
        for term in terms or ():
            _check_same_n(self.n, term.n)
            key = (term.string.x_mask, term.string.z_mask)
            merged[key] = merged.get(key, 0j) + complex(term.coeff)
        self._terms = {key: c for key, c in merged.items() if abs(c) > PRUNE_TOLERANCE}
        self._plan = None
        self._sparse = None
        self._hash = None
        self._split = None
        self._commuting = None

    @classmethod
    def _from_dict(cls, n: int, terms: Dict[Tuple[int, int], complex]) -> 'PauliSum':
        out = cls(n)
        out._terms = {key: c for key, c in terms.items() if abs(c) > PRUNE_TOLERANCE}
        return out

    @classmethod
    def from_label(cls, label: str, coeff: Scalar = 1.0) -> 'PauliSum':
        return cls(len(label), [PauliTerm.from_label(label, coeff)])

    @classmethod
    def from_terms(cls, items: Iterable[Tuple[Scalar, str]], n: Optional[int] = None) -> 'PauliSum':
        """Build from (coefficient, label) pairs."""
        terms = [PauliTerm.from_label(label, coeff) for coeff, label in items]
        if n is None:
            if not terms:
                raise ValueError("qubit count required for an empty sum")
            n = terms[0].n
        return cls(n, terms)

    @classmethod
    def identity(cls, n: int, coeff: Scalar = 1.0) -> 'PauliSum':
        return cls(n, [PauliTerm(complex(coeff), PauliString.identity(n))])

    @classmethod
    def zero(cls, n: int) -> 'PauliSum':
        return cls(n)

    # -- container protocol ----------------------------------------------------

    @property
    def terms(self) -> List[PauliTerm]:
        items = [PauliTerm(c, PauliString(self.n, x, z)) for (x, z), c in self._terms.items()]
        items.sort(key=lambda t: t.string.label)
        return items

    def __iter__(self) -> Iterator[PauliTerm]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def coefficient(self, label: str) -> complex:
        s = PauliString.from_label(label)
        _check_same_n(self.n, s.n)
        return self._terms.get((s.x_mask, s.z_mask), 0j)

    def items(self) -> List[Tuple[Tuple[int, int], complex]]:
        return list(self._terms.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n == other.n and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n, frozenset(self._terms.items())))
        return self._hash

    def isclose(self, other: 'PauliSum', atol: float = 1e-12) -> bool:
        _check_same_n(self.n, other.n)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0j) - other._terms.get(k, 0j)) <= atol for k in keys)

    def __repr__(self) -> str:
        body = ' + '.join(f"({t.coeff:g}){t.string.label}" for t in self.terms) or '0'
        return f"PauliSum(n={self.n}: {body})"

    # -- arithmetic ------------------------------------------------------------

    def __add__(self, other: 'PauliSum') -> 'PauliSum':
        if not isinstance(other, PauliSum):
            return NotImplemented
        _check_same_n(self.n, other.n)
        merged = dict(self._terms)
        for key, c in other._terms.items():
            merged[key] = merged.get(key, 0j) + c
        return PauliSum._from_dict(self.n, merged)

    def __neg__(self) -> 'PauliSum':
        return PauliSum._from_dict(self.n, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other: 'PauliSum') -> 'PauliSum':
        return self + (-other)

    def scale(self, factor: Scalar) -> 'PauliSum':
        return PauliSum._from_dict(self.n, {k: c * factor for k, c in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(complex(other))
        if not isinstance(other, PauliSum):
            return NotImplemented
        _check_same_n(self.n, other.n)
        merged: Dict[Tuple[int, int], complex] = {}
        for ta in self.terms:
            for tb in other.terms:
                prod = multiply(ta, tb)
                key = (prod.string.x_mask, prod.string.z_mask)
                merged[key] = merged.get(key, 0j) + prod.coeff
        return PauliSum._from_dict(self.n, merged)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(complex(other))
        return NotImplemented

    def dagger(self) -> 'PauliSum':
        return PauliSum._from_dict(self.n, {k: c.conjugate() for k, c in self._terms.items()})

    # -- structure -------------------------------------------------------------

    def is_hermitian(self, tol: float = HERMITIAN_TOLERANCE) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def is_diagonal(self) -> bool:
        return all(x == 0 for x, _ in self._terms)

    def support(self) -> frozenset:
        qubits = set()
        for term in self.terms:
            qubits |= term.string.support()
        return frozenset(qubits)

    def strings(self) -> List[PauliString]:
        return [t.string for t in self.terms]

    def mutually_commuting(self) -> bool:
        if self._commuting is None:
            strings = self.strings()
            self._commuting = all(strings[i].commutes_with(strings[j])
                                  for i in range(len(strings)) for j in range(i + 1, len(strings)))
        return self._commuting

    def split_terms(self) -> List[Tuple[float, 'PauliSum']]:
        """(real coefficient, unit-coefficient single-string sum) per term, in label order."""
        if self._split is None:
            self._split = [(t.coeff.real, PauliSum(self.n, [PauliTerm(1 + 0j, t.string)])) for t in self.terms]
        return self._split

    def embed(self, n: int, offset: int) -> 'PauliSum':
        return PauliSum(n, [PauliTerm(t.coeff, t.string.embed(n, offset)) for t in self.terms])

    def real_part(self) -> 'PauliSum':
        """Drop imaginary parts of the coefficients (for checked-Hermitian sums)."""
        return PauliSum._from_dict(self.n, {k: complex(c.real) for k, c in self._terms.items()})

    # -- numerical views -------------------------------------------------------

    def action_plan(self) -> List[Tuple[int, np.ndarray]]:
        """
        Terms grouped by x_mask with their summed diagonal weights.

        For each distinct x_mask the weight vector is
        d(b) = sum_terms coeff * i^y * (-1)^popcount(b & z), so that
        (S psi)[j] = sum_x d_x[j ^ x] * psi[j ^ x].  Weight vectors are real
        whenever their imaginary parts vanish identically.
        """
        if self._plan is not None:
            return self._plan
        idx = basis_indices(self.n)
        groups: Dict[int, List[Tuple[int, complex]]] = {}
        for (x, z), c in sorted(self._terms.items()):
            groups.setdefault(x, []).append((z, c * _I_POWERS[popcount(x & z) % 4]))
        plan = []
        for x in sorted(groups):
            weights = np.zeros(idx.shape, dtype=np.complex128)
            for z, c in groups[x]:
                if z == 0:
                    weights += c
                else:
                    weights += c * (1 - 2 * z_parity(idx, z))
            if not np.any(weights.imag):
                weights = weights.real.copy()
            plan.append((x, weights))
        if self.n <= SCHWINGER_SETTINGS['PLAN_CACHE_QUBIT_LIMIT']:
            self._plan = plan
        return plan

    def to_sparse(self) -> sparse.csr_matrix:
        """CSR matrix of the operator in the computational basis."""
        if self._sparse is not None:
            return self._sparse
        idx = basis_indices(self.n)
        dim = 1 << self.n
        plan = self.action_plan()
        real = all(np.isrealobj(w) for _, w in plan)
        dtype = np.float64 if real else np.complex128
        if not plan:
            return sparse.csr_matrix((dim, dim), dtype=dtype)
        rows = np.concatenate([idx ^ x for x, _ in plan])
        cols = np.concatenate([idx for _ in plan])
        data = np.concatenate([w.astype(dtype, copy=False) for _, w in plan])
        matrix = sparse.csr_matrix((data, (rows, cols)), shape=(dim, dim))
        if self.n <= SCHWINGER_SETTINGS['PLAN_CACHE_QUBIT_LIMIT']:
            self._sparse = matrix
        return matrix

    # -- text format -----------------------------------------------------------

    def to_text(self) -> str:
        """One line per term: ``<re> <im> <letters>``."""
        return '\n'.join(f"{t.coeff.real!r} {t.coeff.imag!r} {t.string.label}" for t in self.terms)

    @classmethod
    def from_text(cls, text: str, n: Optional[int] = None) -> 'PauliSum':
        """
        Parse the line format written by to_text.

        Raises:
            SerializationError: If a line is malformed or qubit counts disagree
        """
        terms = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise SerializationError(f"line {lineno}: expected '<re> <im> <letters>', got {raw!r}")
            try:
                coeff = complex(float(parts[0]), float(parts[1]))
                term = PauliTerm(coeff, PauliString.from_label(parts[2]))
            except ValueError as e:
                raise SerializationError(f"line {lineno}: {e}")
            if n is None:
                n = term.n
            elif term.n != n:
                raise SerializationError(f"line {lineno}: expected {n} qubits, got {term.n}")
            terms.append(term)
        if n is None:
            raise SerializationError("empty Pauli sum without a qubit count")
        return cls(n, terms)


def as_pauli_sum(value: Union[PauliSum, PauliTerm, PauliString]) -> PauliSum:
    if isinstance(value, PauliSum):
        return value
    if isinstance(value, PauliTerm):
        return PauliSum(value.n, [value])
    if isinstance(value, PauliString):
        return PauliSum(value.n, [PauliTerm(1 + 0j, value)])
    raise TypeError(f"cannot convert {type(value).__name__} to PauliSum")


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """
    ab - ba.

    Only anticommuting string pairs contribute, each with twice their product.
    """
    _check_same_n(a.n, b.n)
    merged: Dict[Tuple[int, int], complex] = {}
    for ta in a.terms:
        for tb in b.terms:
            if ta.string.commutes_with(tb.string):
                continue
            prod = multiply(ta, tb)
            key = (prod.string.x_mask, prod.string.z_mask)
            merged[key] = merged.get(key, 0j) + 2 * prod.coeff
    return PauliSum._from_dict(a.n, merged)


def support(s: Union[PauliString, PauliSum]) -> frozenset:
    return s.support()


def is_time_reversal_odd(s: PauliSum) -> bool:
    """True iff every string has an odd number of Y letters."""
    return len(s) > 0 and all(t.string.y_count % 2 == 1 for t in s.terms)


def to_matrix(s: Union[PauliSum, PauliTerm, PauliString], max_qubits: Optional[int] = None) -> np.ndarray:
    """
    Dense 2^n x 2^n matrix with qubit 0 as the least significant index bit.

    Raises:
        CapacityError: If n exceeds the dense guard
    """
    s = as_pauli_sum(s)
    limit = SCHWINGER_SETTINGS['DENSE_QUBIT_LIMIT'] if max_qubits is None else max_qubits
    if s.n > limit:
        raise CapacityError(f"dense matrix requested for {s.n} qubits (limit {limit})")
    idx = basis_indices(s.n)
    plan = s.action_plan()
    real = all(np.isrealobj(w) for _, w in plan)
    matrix = np.zeros((1 << s.n, 1 << s.n), dtype=np.float64 if real else np.complex128)
    for x, weights in plan:
        matrix[idx ^ x, idx] += weights
    return matrix
