"""
Dense statevector engine.

Index bit q of an amplitude array is qubit q; printed bitstrings put qubit 0
leftmost, so ``"1010"`` is index 5.  The array kernels (``apply_pauli_sum``,
``apply_exponential``) work on plain numpy arrays and never modify their
input, so a frozen state can be shared by concurrent gradient readers.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import expm_multiply

from .exceptions import CapacityError, ConvergenceError, DimensionError, NonHermitianError
from .pauli import PauliSum, basis_indices, to_matrix
from .settings import SCHWINGER_SETTINGS

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-12
EXPECTATION_IMAG_TOLERANCE = 1e-10
EXPONENTIAL_MODES = ('exact', 'trotter')
AMPLITUDE_DUMP_MAX_QUBITS = 16


def bitstring_to_index(bits: str) -> int:
    """Basis index of a printed bitstring (qubit 0 leftmost)."""
    index = 0
    for q, ch in enumerate(bits):
        if ch == '1':
            index |= 1 << q
        elif ch != '0':
            raise ValueError(f"invalid bitstring {bits!r}")
    return index


def index_to_bitstring(index: int, n: int) -> str:
    return ''.join('1' if (index >> q) & 1 else '0' for q in range(n))


class Statevector:
    """Normalized vector of 2^n complex amplitudes"""

    __slots__ = ('n', 'amps')

    def __init__(self, amps, normalize: bool = False):
        arr = np.array(amps, dtype=np.complex128).reshape(-1)
        dim = arr.shape[0]
        n = dim.bit_length() - 1
        if dim == 0 or (1 << n) != dim:
            raise DimensionError(f"amplitude count {dim} is not a power of two")
        if n > SCHWINGER_SETTINGS['STATE_QUBIT_LIMIT']:
            raise CapacityError(f"statevector on {n} qubits exceeds limit {SCHWINGER_SETTINGS['STATE_QUBIT_LIMIT']}")
        norm = np.linalg.norm(arr)
        if normalize:
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            arr /= norm
        elif abs(norm ** 2 - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"statevector is not normalized (norm^2 = {norm ** 2!r})")
        self.n = n
        self.amps = arr

    @classmethod
    def from_bitstring(cls, bits: str) -> 'Statevector':
        return cls.from_index(bitstring_to_index(bits), len(bits))

    @classmethod
    def from_index(cls, index: int, n: int) -> 'Statevector':
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, real: bool = False) -> 'Statevector':
        amps = rng.standard_normal(1 << n)
        if not real:
            amps = amps + 1j * rng.standard_normal(1 << n)
        return cls(amps, normalize=True)

    def copy(self) -> 'Statevector':
        return Statevector(self.amps.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.amps.imag), initial=0.0) <= tol)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def amplitude(self, bits: str) -> complex:
        return complex(self.amps[bitstring_to_index(bits)])

    def dump(self, path: Union[str, Path]) -> Path:
        """Write the amplitudes as a .npy file (debugging aid)."""
        if self.n > AMPLITUDE_DUMP_MAX_QUBITS:
            raise CapacityError(f"amplitude dump limited to {AMPLITUDE_DUMP_MAX_QUBITS} qubits")
        path = Path(path)
        np.save(path, self.amps)
        return path if path.suffix == '.npy' else path.with_name(path.name + '.npy')

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'Statevector':
        return cls(np.load(Path(path)))

    def __repr__(self) -> str:
        return f"Statevector(n={self.n})"


@dataclass
class GroundStateResult:
    """Lowest eigenpair of a Hamiltonian"""

    energy: float
    state: Statevector
    residual: float
    method: str
    iterations: int = 0
    seed: Optional[int] = None
    extra: dict = field(default_factory=dict)


def _amplitudes(psi: Union[Statevector, np.ndarray]) -> np.ndarray:
    return psi.amps if isinstance(psi, Statevector) else np.asarray(psi)


def _check_dimension(vec: np.ndarray, op: PauliSum) -> None:
    if vec.shape[0] != 1 << op.n:
        raise DimensionError(f"operator on {op.n} qubits applied to vector of length {vec.shape[0]}")


def apply_pauli_sum(vec: np.ndarray, op: PauliSum) -> np.ndarray:
    """S|v> without materializing S."""
    _check_dimension(vec, op)
    idx = basis_indices(op.n)
    plan = op.action_plan()
    dtype = np.result_type(vec.dtype, *(w.dtype for _, w in plan)) if plan else vec.dtype
    out = np.zeros(vec.shape, dtype=dtype)
    for x, weights in plan:
        if x == 0:
            out += weights * vec
        else:
            out += (weights * vec)[idx ^ x]
    return out


def _require_hermitian(op: PauliSum) -> None:
    if not op.is_hermitian():
        raise NonHermitianError("exponential generator must be Hermitian (real coefficients)")


def _string_rotation(vec: np.ndarray, unit: PauliSum, angle: float) -> np.ndarray:
    """exp(-i angle P) v for a single unit-coefficient string P."""
    if angle == 0.0:
        return vec.copy()
    (x, weights), = unit.action_plan()
    idx = basis_indices(unit.n)
    p_vec = weights * vec if x == 0 else (weights * vec)[idx ^ x]
    return np.cos(angle) * vec - 1j * np.sin(angle) * p_vec


def apply_exponential(vec: np.ndarray, op: PauliSum, theta: float, mode: str = 'exact') -> np.ndarray:
    """
    exp(-i theta O) v on a raw amplitude array.

    Mutually commuting terms (including the single-string case) are applied
    as a product of closed-form rotations.  Otherwise the exact action comes
    from scipy's Krylov-type ``expm_multiply`` on the CSR form of O, unless
    ``mode='trotter'`` asks for the first-order product in term order.

    Raises:
        NonHermitianError: If O has complex coefficients
        ConvergenceError: If the result drifts from unit norm by more than 1e-10
    """
    _check_dimension(vec, op)
    _require_hermitian(op)
    if mode not in EXPONENTIAL_MODES:
        raise ValueError(f"unknown exponential mode {mode!r}")
    vec = vec.astype(np.complex128, copy=False)
    if theta == 0.0 or not op:
        return vec.copy()

    if mode == 'trotter' or op.mutually_commuting():
        out = vec
        for coeff, unit in op.split_terms():
            out = _string_rotation(out, unit, coeff * theta)
        return out

    before = np.linalg.norm(vec)
    out = expm_multiply(op.to_sparse() * (-1j * theta), vec)
    drift = abs(np.linalg.norm(out) - before)
    if drift > 1e-10:
        raise ConvergenceError(f"Krylov exponential lost unitarity (norm drift {drift:.2e})")
    return out


def apply_pauli_exponential(psi: Statevector, op: PauliSum, theta: float, mode: str = 'exact') -> Statevector:
    """U(theta) psi with U = exp(-i theta O); O must be Hermitian."""
    out = apply_exponential(psi.amps, op, float(theta), mode)
    return Statevector(out, normalize=True)


def expectation_array(vec: np.ndarray, op: PauliSum) -> float:
    value = np.vdot(vec, apply_pauli_sum(vec, op))
    if abs(value.imag) > EXPECTATION_IMAG_TOLERANCE:
        raise NonHermitianError(f"expectation value has imaginary part {value.imag:.3e}")
    return float(value.real)


def expectation(psi: Union[Statevector, np.ndarray], op: PauliSum) -> float:
    """<psi|S|psi> for Hermitian S."""
    return expectation_array(_amplitudes(psi), op)


def gradient_from_action(h_vec: np.ndarray, vec: np.ndarray, op: PauliSum) -> float:
    """dE/dtheta at 0 for exp(-i theta O) given H|psi> already computed."""
    return 2.0 * float(np.vdot(h_vec, apply_pauli_sum(vec, op)).imag)


def pool_gradient(psi: Union[Statevector, np.ndarray], op: PauliSum, hamiltonian: PauliSum) -> float:
    """
    Derivative of <psi|e^{i theta O} H e^{-i theta O}|psi> at theta = 0.

    Equals 2 Im <H psi|O psi>, that is i<[O, H]>.  The commutator
    expectation <[O, H]> itself is -i times this value.
    """
    vec = _amplitudes(psi)
    return gradient_from_action(apply_pauli_sum(vec, hamiltonian), vec, op)


def fidelity(psi: Union[Statevector, np.ndarray], phi: Union[Statevector, np.ndarray]) -> float:
    """|<psi|phi>|^2"""
    a, b = _amplitudes(psi), _amplitudes(phi)
    if a.shape != b.shape:
        raise DimensionError(f"state dimensions differ: {a.shape[0]} vs {b.shape[0]}")
    return float(min(1.0, max(0.0, abs(np.vdot(a, b)) ** 2)))


def _dense_ground_state(hamiltonian: PauliSum) -> GroundStateResult:
    matrix = to_matrix(hamiltonian)
    evals, evecs = np.linalg.eigh(matrix)
    vec = evecs[:, 0].astype(np.complex128)
    energy = float(evals[0])
    residual = float(np.linalg.norm(matrix @ vec - energy * vec))
    return GroundStateResult(energy=energy, state=Statevector(vec, normalize=True), residual=residual, method='dense')


def _lanczos_ground_state(hamiltonian: PauliSum, seed: int, tol: float,
                          krylov_dim: int, max_restarts: int) -> GroundStateResult:
    """
    Restarted Lanczos with full reorthogonalization.

    Each cycle builds a Krylov basis from the current vector, diagonalizes the
    tridiagonal projection and restarts from the lowest Ritz vector until
    ||H psi - E psi|| <= tol.
    """
    dim = 1 << hamiltonian.n
    real = all(np.isrealobj(w) for _, w in hamiltonian.action_plan())
    dtype = np.float64 if real else np.complex128
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    if not real:
        v = v + 1j * rng.standard_normal(dim)
    v = (v / np.linalg.norm(v)).astype(dtype)

    residual = np.inf
    for restart in range(1, max_restarts + 1):
        basis = np.empty((krylov_dim, dim), dtype=dtype)
        basis[0] = v
        alphas, betas = [], []
        w = apply_pauli_sum(v, hamiltonian)
        for j in range(krylov_dim):
            alpha = float(np.vdot(basis[j], w).real)
            alphas.append(alpha)
            w = w - alpha * basis[j]
            if j > 0:
                w = w - betas[-1] * basis[j - 1]
            block = basis[:j + 1]
            w = w - block.T @ (block.conj() @ w)
            beta = float(np.linalg.norm(w))
            if beta < 1e-13 or j == krylov_dim - 1:
                break
            betas.append(beta)
            basis[j + 1] = w / beta
            w = apply_pauli_sum(basis[j + 1], hamiltonian)

        m = len(alphas)
        if m == 1:
            coeffs = np.ones(1)
        else:
            _, evecs = eigh_tridiagonal(np.array(alphas), np.array(betas))
            coeffs = evecs[:, 0]
        ritz = basis[:m].T @ coeffs
        ritz = ritz / np.linalg.norm(ritz)
        h_ritz = apply_pauli_sum(ritz, hamiltonian)
        energy = float(np.vdot(ritz, h_ritz).real)
        residual = float(np.linalg.norm(h_ritz - energy * ritz))
        logger.debug(f"Lanczos restart {restart}: E={energy:.14f} residual={residual:.2e}")
        if residual <= tol:
            return GroundStateResult(energy=energy, state=Statevector(ritz, normalize=True),
                                     residual=residual, method='lanczos', iterations=restart, seed=seed)
        v = ritz

    raise ConvergenceError(f"Lanczos did not converge after {max_restarts} restarts (residual {residual:.2e})")


def ground_state(hamiltonian: PauliSum, method: str = 'auto', seed: Optional[int] = None,
                 tol: float = 1e-10, krylov_dim: int = 40, max_restarts: int = 200) -> GroundStateResult:
    """
    Lowest eigenpair of a Hermitian Pauli sum.

    Args:
        hamiltonian: Hermitian PauliSum
        method: 'dense' (n <= 14), 'lanczos' (n <= 24) or 'auto'
        seed: RNG seed for the Lanczos start vector
        tol: Residual target for Lanczos

    Raises:
        CapacityError: If n exceeds the method's guard
        ConvergenceError: If Lanczos does not reach tol
    """
    if not hamiltonian.is_hermitian():
        raise NonHermitianError("ground_state requires a Hermitian operator")
    if method == 'auto':
        method = 'dense' if hamiltonian.n <= SCHWINGER_SETTINGS['DENSE_GROUND_STATE_QUBITS'] else 'lanczos'
    if method == 'dense':
        result = _dense_ground_state(hamiltonian)
    elif method == 'lanczos':
        if hamiltonian.n > SCHWINGER_SETTINGS['STATE_QUBIT_LIMIT']:
            raise CapacityError(f"Lanczos limited to {SCHWINGER_SETTINGS['STATE_QUBIT_LIMIT']} qubits")
        if seed is None:
            seed = SCHWINGER_SETTINGS['LANCZOS_SEED']
        krylov_dim = max(2, min(krylov_dim, 1 << hamiltonian.n))
        result = _lanczos_ground_state(hamiltonian, seed, tol, krylov_dim, max_restarts)
    else:
        raise ValueError(f"unknown ground-state method {method!r}")
    logger.info(f"Ground state ({result.method}, n={hamiltonian.n}): E0={result.energy:.12f} "
                f"residual={result.residual:.2e}")
    return result
