"""
Jordan-Wigner utilities and the reverse transformation.

Mode j is qubit j, |1> is occupied and a_j = Z_0 ... Z_{j-1} sigma^-_j with
sigma^+- = (X -+ iY)/2, so sigma^+|0> = |1>.  Polynomials are kept normal
ordered: creation operators left of annihilation operators, each block in
descending mode order (a3^ a1^ a4 a1).
"""

import logging
from functools import lru_cache
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from .exceptions import CapacityError
from .pauli import PRUNE_TOLERANCE, PauliString, PauliSum, PauliTerm, to_matrix

logger = logging.getLogger(__name__)

REVERSE_JW_QUBIT_LIMIT = 8

# (mode, 1) is a creation operator, (mode, 0) an annihilation operator
Ladder = Tuple[int, int]
Word = Tuple[Ladder, ...]


def _normal_order_word(word: Word, coeff: complex) -> Dict[Word, complex]:
    """Normal order a single ladder word using the canonical anticommutators."""
    ordered: Dict[Word, complex] = {}
    term = list(word)
    for i in range(1, len(term)):
        for j in range(i, 0, -1):
            right = term[j]
            left = term[j - 1]
            if right[1] and not left[1]:
                term[j - 1], term[j] = right, left
                coeff = -coeff
                if right[0] == left[0]:
                    contraction = tuple(term[:j - 1] + term[j + 1:])
                    for key, value in _normal_order_word(contraction, -coeff).items():
                        ordered[key] = ordered.get(key, 0j) + value
            elif right[1] == left[1]:
                if right[0] == left[0]:
                    return ordered
                if right[0] > left[0]:
                    term[j - 1], term[j] = right, left
                    coeff = -coeff
    key = tuple(term)
    ordered[key] = ordered.get(key, 0j) + coeff
    return ordered


class FermionPolynomial:
    """Normal-ordered polynomial in fermionic ladder operators"""

    __slots__ = ('terms',)

    def __init__(self, terms: Optional[Dict[Word, complex]] = None):
        self.terms: Dict[Word, complex] = {
            word: complex(c) for word, c in (terms or {}).items() if abs(c) > PRUNE_TOLERANCE
        }

    @classmethod
    def scalar(cls, value: complex) -> 'FermionPolynomial':
        return cls({(): value})

    @classmethod
    def creation(cls, mode: int) -> 'FermionPolynomial':
        return cls({((mode, 1),): 1.0})

    @classmethod
    def annihilation(cls, mode: int) -> 'FermionPolynomial':
        return cls({((mode, 0),): 1.0})

    @classmethod
    def number(cls, mode: int) -> 'FermionPolynomial':
        return cls({((mode, 1), (mode, 0)): 1.0})

    @classmethod
    def from_words(cls, items: Iterable[Tuple[complex, Word]]) -> 'FermionPolynomial':
        """Build from arbitrary (not necessarily ordered) words."""
        merged: Dict[Word, complex] = {}
        for coeff, word in items:
            for key, value in _normal_order_word(tuple(word), complex(coeff)).items():
                merged[key] = merged.get(key, 0j) + value
        return cls(merged)

    def __add__(self, other: 'FermionPolynomial') -> 'FermionPolynomial':
        merged = dict(self.terms)
        for word, c in other.terms.items():
            merged[word] = merged.get(word, 0j) + c
        return FermionPolynomial(merged)

    def __neg__(self) -> 'FermionPolynomial':
        return FermionPolynomial({w: -c for w, c in self.terms.items()})

    def __sub__(self, other: 'FermionPolynomial') -> 'FermionPolynomial':
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return FermionPolynomial({w: c * other for w, c in self.terms.items()})
        if not isinstance(other, FermionPolynomial):
            return NotImplemented
        return FermionPolynomial.from_words(
            (ca * cb, wa + wb) for wa, ca in self.terms.items() for wb, cb in other.terms.items()
        )

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self * other
        return NotImplemented

    def __len__(self) -> int:
        return len(self.terms)

    def isclose(self, other: 'FermionPolynomial', atol: float = 1e-12) -> bool:
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0j) - other.terms.get(k, 0j)) <= atol for k in keys)

    def is_number_conserving(self) -> bool:
        """Every term has as many creation as annihilation operators."""
        return all(sum(1 if d else -1 for _, d in word) == 0 for word in self.terms)

    def body_counts(self) -> Dict[Word, int]:
        return {word: sum(1 for _, d in word if d) for word in self.terms}

    def to_pauli_sum(self, n: int) -> PauliSum:
        """Forward Jordan-Wigner image on n qubits."""
        total = PauliSum.zero(n)
        for word, coeff in self.terms.items():
            product = PauliSum.identity(n, coeff)
            for mode, dagger in word:
                product = product * (jw_creation(mode, n) if dagger else jw_annihilation(mode, n))
            total = total + product
        return total

    def to_matrix(self, n: int) -> np.ndarray:
        return to_matrix(self.to_pauli_sum(n))

    def __str__(self) -> str:
        if not self.terms:
            return '0'
        parts = []
        for word in sorted(self.terms, key=lambda w: (len(w), w)):
            c = self.terms[word]
            ops = ' '.join(f"a{m}^" if d else f"a{m}" for m, d in word) or '1'
            parts.append(f"({c.real:+g}{c.imag:+g}j) {ops}")
        return ' + '.join(parts)

    __repr__ = __str__


def jw_annihilation(mode: int, n: int) -> PauliSum:
    """a_mode = Z_0 ... Z_{mode-1} (X + iY)/2 on n qubits."""
    if not 0 <= mode < n:
        raise ValueError(f"mode {mode} out of range for {n} qubits")
    z_string = (1 << mode) - 1
    bit = 1 << mode
    return PauliSum(n, [
        PauliTerm(0.5, PauliString(n, bit, z_string)),
        PauliTerm(0.5j, PauliString(n, bit, z_string | bit)),
    ])


def jw_creation(mode: int, n: int) -> PauliSum:
    return jw_annihilation(mode, n).dagger()


@lru_cache(maxsize=None)
def _parity_string(mode: int) -> FermionPolynomial:
    """Fermionic form of Z_0 ... Z_{mode-1}."""
    result = FermionPolynomial.scalar(1.0)
    for k in range(mode):
        result = result * _z_factor(k)
    return result


def _z_factor(mode: int) -> FermionPolynomial:
    return FermionPolynomial.scalar(1.0) - FermionPolynomial.number(mode) * 2.0


def _letter_polynomial(letter: str, mode: int) -> FermionPolynomial:
    if letter == 'I':
        return FermionPolynomial.scalar(1.0)
    if letter == 'Z':
        return _z_factor(mode)
    up = FermionPolynomial.creation(mode)
    down = FermionPolynomial.annihilation(mode)
    if letter == 'X':
        local = up + down
    else:
        local = (up - down) * 1j
    return _parity_string(mode) * local


def reverse_jordan_wigner(s: PauliSum) -> FermionPolynomial:
    """
    Normal-ordered fermionic polynomial whose Jordan-Wigner image is s.

    Raises:
        CapacityError: If s acts on more than 8 qubits
    """
    if s.n > REVERSE_JW_QUBIT_LIMIT:
        raise CapacityError(f"reverse Jordan-Wigner limited to {REVERSE_JW_QUBIT_LIMIT} qubits, got {s.n}")
    total = FermionPolynomial()
    for term in s.terms:
        product = FermionPolynomial.scalar(term.coeff)
        for q in range(s.n):
            letter = term.string.letter(q)
            if letter != 'I':
                product = product * _letter_polynomial(letter, q)
        total = total + product
    logger.debug(f"reverse Jordan-Wigner of {len(s)} strings gave {len(total)} fermionic terms")
    return total
