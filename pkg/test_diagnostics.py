#!/usr/bin/env python3
"""
Tests for accuracy and symmetry diagnostics and the mean-field reference
"""

import unittest

import numpy as np

from schwinger_adapt.diagnostics import charge_moments, delta_t, energy_density_error, infidelity, mean_field
from schwinger_adapt.exceptions import ConvergenceError
from schwinger_adapt.model import build_hamiltonian, charge_operator, get_preset, reference_state
from schwinger_adapt.pauli import PauliSum
from schwinger_adapt.pools import PoolOptions, build_pool
from schwinger_adapt.statevector import Statevector, bitstring_to_index, expectation, ground_state, pool_gradient


class EnergyDensityErrorTest(unittest.TestCase):
    """Test the accuracy metric"""

    def test_per_site(self):
        """Test the error is divided by the physical site count"""
        self.assertAlmostEqual(energy_density_error(-1.0, -1.6, 3), 0.2)
        with self.assertRaises(ValueError):
            energy_density_error(0.0, 0.0, 0)


class DeltaTTest(unittest.TestCase):
    """Test the time-reversal breaking parameter"""

    def test_real_state(self):
        """Test a real state has zero breaking, whatever its global phase"""
        amps = np.array([0.6, 0.0, 0.8, 0.0])
        self.assertEqual(delta_t(amps), 0.0)
        self.assertAlmostEqual(delta_t(np.exp(0.9j) * amps), 0.0, places=7)

    def test_contaminated_references(self):
        """Test the breaking reference has unit breaking and the control none"""
        self.assertAlmostEqual(delta_t(reference_state(3, 'trs_breaking_psi1')), 1.0)
        self.assertAlmostEqual(delta_t(reference_state(3, 'trs_preserving_psi2')), 0.0)

    def test_zero_vector(self):
        """Test a vanishing vector reports infinite breaking"""
        self.assertEqual(delta_t(np.zeros(4)), float('inf'))


class ChargeMomentsTest(unittest.TestCase):
    """Test charge mean and variance"""

    def test_vacuum(self):
        """Test the vacuum is sharp at zero charge"""
        self.assertEqual(charge_moments(reference_state(2), charge_operator(2)), (0.0, 0.0))

    def test_mixed_sectors(self):
        """Test an equal superposition of charges +1 and -1"""
        amps = np.zeros(16)
        amps[bitstring_to_index('0010')] = 1 / np.sqrt(2)
        amps[bitstring_to_index('1110')] = 1 / np.sqrt(2)
        mean, variance = charge_moments(amps, charge_operator(2))
        self.assertAlmostEqual(mean, 0.0)
        self.assertAlmostEqual(variance, 1.0)

    def test_non_diagonal(self):
        """Test a non-diagonal operator is rejected"""
        with self.assertRaises(ValueError):
            charge_moments(reference_state(1), PauliSum.from_label('XI'))

    def test_infidelity(self):
        """Test infidelity of orthogonal and equal states"""
        self.assertEqual(infidelity(Statevector.from_bitstring('10'), Statevector.from_bitstring('01')), 1.0)
        self.assertAlmostEqual(infidelity(reference_state(2), reference_state(2)), 0.0)


class MeanFieldTest(unittest.TestCase):
    """Test the single-excitation mean-field minimization"""

    def test_two_site_is_exact(self):
        """Test mean field is exact when one excitation spans the neutral sector"""
        h = build_hamiltonian(get_preset('A').params(1))
        result = mean_field(h, 1)
        self.assertTrue(result.converged)
        self.assertAlmostEqual(result.energy, ground_state(h).energy, places=9)

    def test_stationary_and_below_reference(self):
        """Test the mean-field state lowers the energy and has vanishing single-excitation gradients"""
        h = build_hamiltonian(get_preset('A').params(2))
        result = mean_field(h, 2)
        self.assertLess(result.energy, expectation(reference_state(2), h))
        self.assertGreaterEqual(result.energy, ground_state(h).energy - 1e-12)
        for p in build_pool('xQZ', 2, PoolOptions(distances='all')):
            self.assertLessEqual(abs(pool_gradient(result.state, p.op, h)), 1e-8)
        self.assertLess(delta_t(result.state), 1e-8)

    def test_layer_cap(self):
        """Test exceeding the layer cap raises ConvergenceError"""
        h = build_hamiltonian(get_preset('C').params(2))
        with self.assertRaises(ConvergenceError):
            mean_field(h, 2, max_layers=0)


if __name__ == '__main__':
    unittest.main()
