"""
Inner variational minimization over all ansatz angles.

The state is psi(theta) = U_k ... U_1 psi_0 with U_j = exp(-i theta_j O_j).
Energies come from one forward sweep; gradients from one extra backward
sweep carrying H psi alongside psi (adjoint differentiation), so a gradient
costs O(k) operator applications.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .exceptions import DimensionError
from .pauli import PauliSum
from .statevector import Statevector, apply_exponential, apply_pauli_sum, expectation_array, gradient_from_action

logger = logging.getLogger(__name__)

GRADIENT_TOLERANCE = 1e-6
MAX_ITERATIONS = 1000
WOLFE_C1 = 1e-4
WOLFE_C2 = 0.9


class ObjectiveHandle:
    """
    E(theta) for a fixed Hamiltonian, reference state and ordered generators.

    Counters only increase: ``n_evaluations`` counts energy calls and
    ``n_gradients`` counts gradient calls.  The forward state of the most
    recent theta is kept so a gradient at the same point skips the forward
    sweep.
    """

    def __init__(self, hamiltonian: PauliSum, reference, operators: Sequence[PauliSum], mode: str = 'exact'):
        self.hamiltonian = hamiltonian
        amps = reference.amps if isinstance(reference, Statevector) else np.asarray(reference)
        if amps.shape[0] != 1 << hamiltonian.n:
            raise DimensionError(f"reference has {amps.shape[0]} amplitudes, Hamiltonian acts on {hamiltonian.n} qubits")
        self.reference = amps.astype(np.complex128)
        self.operators = list(operators)
        for op in self.operators:
            if op.n != hamiltonian.n:
                raise DimensionError(f"generator on {op.n} qubits, Hamiltonian on {hamiltonian.n}")
        self.mode = mode
        self.n_evaluations = 0
        self.n_gradients = 0
        self._layers = self._build_layers()
        self._last_theta: Optional[bytes] = None
        self._last_state: Optional[np.ndarray] = None

    def _build_layers(self) -> List[Tuple[int, PauliSum]]:
        # trotter mode differentiates each term rotation separately
        if self.mode != 'trotter':
            return list(enumerate(self.operators))
        layers = []
        for j, op in enumerate(self.operators):
            layers.extend((j, unit.scale(coeff)) for coeff, unit in op.split_terms())
        return layers

    @property
    def n_parameters(self) -> int:
        return len(self.operators)

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.shape[0] != self.n_parameters:
            raise DimensionError(f"expected {self.n_parameters} angles, got {theta.shape[0]}")
        return theta

    def state(self, theta) -> np.ndarray:
        """Amplitudes of psi(theta); does not touch the counters."""
        theta = self._check(theta)
        key = theta.tobytes()
        if key == self._last_theta:
            return self._last_state
        vec = self.reference
        for j, gen in self._layers:
            vec = apply_exponential(vec, gen, float(theta[j]))
        self._last_theta, self._last_state = key, vec
        return vec

    def evaluate(self, theta) -> float:
        self.n_evaluations += 1
        return expectation_array(self.state(theta), self.hamiltonian)

    def gradient(self, theta) -> np.ndarray:
        theta = self._check(theta)
        self.n_gradients += 1
        phi = self.state(theta)
        lam = apply_pauli_sum(phi, self.hamiltonian)
        grad = np.zeros(self.n_parameters)
        for j, gen in reversed(self._layers):
            grad[j] += gradient_from_action(lam, phi, gen)
            phi = apply_exponential(phi, gen, -float(theta[j]))
            lam = apply_exponential(lam, gen, -float(theta[j]))
        return grad


def evaluate(handle: ObjectiveHandle, theta) -> float:
    """<psi(theta)|H|psi(theta)>; increments the objective counter."""
    return handle.evaluate(theta)


def analytic_gradient(handle: ObjectiveHandle, theta) -> np.ndarray:
    """dE/dtheta_j for every angle by adjoint differentiation."""
    return handle.gradient(theta)


@dataclass
class OptimizationResult:
    """Best point seen during a minimization"""

    theta: np.ndarray
    energy: float
    iterations: int = 0
    n_evaluations: int = 0
    n_gradients: int = 0
    gradient_norm: float = 0.0
    converged: bool = False
    line_search_failed: bool = False
    message: str = ''
    history: List[float] = field(default_factory=list)


def bfgs_minimize(fun: Callable[[np.ndarray], float], jac: Callable[[np.ndarray], np.ndarray], x0,
                  gtol: float = GRADIENT_TOLERANCE, max_iterations: int = MAX_ITERATIONS) -> OptimizationResult:
    """
    BFGS with a strong-Wolfe line search, starting from the identity inverse
    Hessian, stopping when ||grad||_inf <= gtol.

    The returned point is the lowest objective value seen, so the result is
    never worse than x0.  A line-search failure is flagged, not raised.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial point must be finite")
    calls = {'fun': 0, 'jac': 0}
    best = {'f': np.inf, 'x': x0.copy()}
    history: List[float] = []

    def tracked_fun(x):
        calls['fun'] += 1
        f = float(fun(x))
        if f < best['f']:
            best['f'], best['x'] = f, np.array(x, dtype=float)
        return f

    def tracked_jac(x):
        calls['jac'] += 1
        return np.asarray(jac(x), dtype=float)

    if x0.size == 0:
        f0 = tracked_fun(x0)
        return OptimizationResult(theta=x0, energy=f0, n_evaluations=1, converged=True, message='no parameters')

    result = optimize.minimize(
        tracked_fun, x0, jac=tracked_jac, method='BFGS',
        callback=lambda xk: history.append(best['f']),
        options={'gtol': gtol, 'norm': np.inf, 'maxiter': max_iterations,
                 'c1': WOLFE_C1, 'c2': WOLFE_C2},
    )
    line_search_failed = result.status == 2
    if line_search_failed:
        logger.warning(f"BFGS line search failed after {result.nit} iterations: {result.message}")

    final_grad = np.asarray(result.jac, dtype=float) if result.jac is not None else tracked_jac(best['x'])
    if not np.array_equal(best['x'], np.asarray(result.x, dtype=float)):
        final_grad = tracked_jac(best['x'])
    gnorm = float(np.max(np.abs(final_grad))) if final_grad.size else 0.0
    return OptimizationResult(
        theta=best['x'],
        energy=best['f'],
        iterations=int(result.nit),
        n_evaluations=calls['fun'],
        n_gradients=calls['jac'],
        gradient_norm=gnorm,
        converged=gnorm <= gtol,
        line_search_failed=line_search_failed,
        message=str(result.message),
        history=history,
    )


def minimize(handle: ObjectiveHandle, theta0, gtol: float = GRADIENT_TOLERANCE,
             max_iterations: int = MAX_ITERATIONS) -> OptimizationResult:
    """
    Minimize E over all angles of the handle's ansatz.

    Counts in the result are the calls made by this minimization; the
    handle's own counters keep accumulating across calls.
    """
    result = bfgs_minimize(handle.evaluate, handle.gradient, theta0, gtol=gtol, max_iterations=max_iterations)
    logger.debug(f"BFGS: {handle.n_parameters} angles, {result.iterations} iterations, "
                 f"{result.n_evaluations} energy calls, E={result.energy:.12f}")
    return result
