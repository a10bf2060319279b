"""
Accuracy and symmetry metrics for ansatz states.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from .exceptions import ConvergenceError, DimensionError
from .model import reference_state
from .optimizer import ObjectiveHandle, minimize
from .pauli import PauliSum
from .pools import PoolOptions, build_topdown_pool
from .statevector import Statevector, apply_pauli_sum, fidelity, gradient_from_action

logger = logging.getLogger(__name__)

MEAN_FIELD_MAX_LAYERS = 500
MEAN_FIELD_GRADIENT_TOLERANCE = 1e-8
MEAN_FIELD_OPTIMIZER_TOLERANCE = 1e-10


def energy_density_error(energy: float, e0: float, L: int) -> float:
    """(E - E0) / L"""
    if L < 1:
        raise ValueError(f"L must be at least 1, got {L}")
    return (energy - e0) / L


def delta_t(psi: Union[Statevector, np.ndarray]) -> float:
    """
    Time-reversal breaking parameter ||Im psi'|| / ||Re psi'|| with the
    global phase of psi' = e^{i phi} psi chosen to minimize ||Im psi'||.

    The minimum of ||Im psi'||^2 over phi is the smaller eigenvalue of the
    Gram matrix of (Re psi, Im psi).  Returns inf when no phase leaves a
    nonzero real part.
    """
    amps = psi.amps if isinstance(psi, Statevector) else np.asarray(psi)
    re, im = amps.real, amps.imag
    a, b, c = float(re @ re), float(im @ im), float(re @ im)
    smallest = max(0.0, float(np.linalg.eigvalsh(np.array([[a, c], [c, b]]))[0]))
    real_norm2 = a + b - smallest
    if real_norm2 <= 0.0:
        return float('inf')
    return float(np.sqrt(smallest / real_norm2))


def charge_moments(psi: Union[Statevector, np.ndarray], charge: PauliSum) -> Tuple[float, float]:
    """(<Q>, <Q^2> - <Q>^2) for a diagonal charge operator."""
    if not charge.is_diagonal():
        raise ValueError("charge operator must be diagonal in the computational basis")
    amps = psi.amps if isinstance(psi, Statevector) else np.asarray(psi)
    if amps.shape[0] != 1 << charge.n:
        raise DimensionError(f"state has {amps.shape[0]} amplitudes, charge acts on {charge.n} qubits")
    plan = charge.action_plan()
    values = np.real(plan[0][1]) if plan else np.zeros(amps.shape[0])
    probs = np.abs(amps) ** 2
    mean = float(probs @ values)
    variance = max(0.0, float(probs @ values ** 2) - mean ** 2)
    return mean, variance


def infidelity(psi, phi) -> float:
    return 1.0 - fidelity(psi, phi)


@dataclass
class MeanFieldResult:
    """Stationary point of the energy under single fermionic excitations"""

    state: Statevector
    energy: float
    converged: bool
    method: str = 'single_excitation_layers'
    layers: int = 0
    max_gradient: float = 0.0
    operators: List[str] = field(default_factory=list)
    thetas: List[float] = field(default_factory=list)


def mean_field(hamiltonian: PauliSum, L: int, reference: Optional[Statevector] = None,
               tie_break_seed: Optional[int] = None, max_layers: int = MEAN_FIELD_MAX_LAYERS,
               gradient_tolerance: float = MEAN_FIELD_GRADIENT_TOLERANCE) -> MeanFieldResult:
    """
    Minimize the energy over one-body excitations of the reference by
    repeated layers: add the single-excitation generator (Z string kept,
    every distance) with the largest |gradient|, re-optimize all angles,
    and stop once every gradient is at most gradient_tolerance.

    Raises:
        ConvergenceError: If the layer cap is exceeded
    """
    pool = build_topdown_pool('xQZ', L, PoolOptions(distances='all'))
    reference = reference if reference is not None else reference_state(L)
    rng = np.random.default_rng(tie_break_seed) if tie_break_seed is not None else None

    chosen: List = []
    theta = np.zeros(0)
    handle = ObjectiveHandle(hamiltonian, reference, [])
    for layer in range(max_layers + 1):
        state = handle.state(theta)
        h_state = apply_pauli_sum(state, hamiltonian)
        grads = np.array([abs(gradient_from_action(h_state, state, p.op)) for p in pool])
        top = float(grads.max())
        if top <= gradient_tolerance:
            energy = handle.evaluate(theta)
            logger.info(f"Mean-field L={L}: {layer} layers, E={energy:.12f}, max|G|={top:.2e}")
            return MeanFieldResult(state=Statevector(state, normalize=True), energy=energy, converged=True,
                                   layers=layer, max_gradient=top, operators=[p.label for p in chosen],
                                   thetas=[float(t) for t in theta])
        if layer == max_layers:
            break
        rounded = np.round(grads, 10)
        candidates = np.flatnonzero(rounded == rounded.max())
        pick = int(candidates[0] if rng is None else rng.choice(candidates))
        chosen.append(pool.operators[pick])
        handle = ObjectiveHandle(hamiltonian, reference, [p.op for p in chosen])
        result = minimize(handle, np.append(theta, 0.0), gtol=MEAN_FIELD_OPTIMIZER_TOLERANCE)
        theta = result.theta
        logger.debug(f"Mean-field layer {layer + 1}: {chosen[-1].label}, E={result.energy:.12f}")

    raise ConvergenceError(f"mean-field layers did not converge within {max_layers} layers")
