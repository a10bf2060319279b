"""
schwinger_adapt: adaptive variational ground-state preparation for the
lattice Schwinger model on a statevector simulator.
"""

from .utils import get_version

__version__ = get_version()

from .adapt import AdaptConfig, Trajectory, replay, run_adapt
from .exceptions import SchwingerAdaptError
from .model import ModelParams, build_hamiltonian, get_preset, reference_state
from .pauli import PauliString, PauliSum
from .pools import OperatorPool, PoolOptions, build_pool
from .statevector import Statevector, ground_state

__all__ = [
    '__version__',
    'AdaptConfig',
    'ModelParams',
    'OperatorPool',
    'PauliString',
    'PauliSum',
    'PoolOptions',
    'SchwingerAdaptError',
    'Statevector',
    'Trajectory',
    'build_hamiltonian',
    'build_pool',
    'get_preset',
    'ground_state',
    'reference_state',
    'replay',
    'run_adapt',
]
