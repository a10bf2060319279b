#!/usr/bin/env python3
"""
Tests for the Schwinger model Hamiltonian, charge and reference states
"""

import unittest

import numpy as np

from schwinger_adapt.model import (ModelParams, build_hamiltonian, charge_operator, charge_sector_indices,
                                   charge_values, cp_conjugate, cp_unitary, flipped_bitstring, get_preset,
                                   reference_state, vacuum_bitstring)
from schwinger_adapt.pauli import PauliSum, commutator, to_matrix
from schwinger_adapt.statevector import bitstring_to_index, expectation


class ModelParamsTest(unittest.TestCase):
    """Test parameters and presets"""

    def test_presets(self):
        """Test the three named presets"""
        self.assertEqual((get_preset('A').m0, get_preset('A').g), (0.5, 0.3))
        self.assertEqual((get_preset('b').m0, get_preset('b').g), (0.1, 0.8))
        self.assertEqual((get_preset('C').m0, get_preset('C').g), (0.1, 0.3))
        with self.assertRaises(ValueError):
            get_preset('Z')

    def test_invalid_params(self):
        """Test non-positive sizes and spacings are rejected"""
        with self.assertRaises(ValueError):
            ModelParams(L=0, m0=0.1, g=0.3)
        with self.assertRaises(ValueError):
            ModelParams(L=2, m0=0.1, g=0.3, a=0.0)

    def test_dict_round_trip(self):
        """Test params survive to_dict/from_dict"""
        p = get_preset('B').params(3, 0.5)
        self.assertEqual(ModelParams.from_dict(p.to_dict()), p)


class HamiltonianTest(unittest.TestCase):
    """Test the qubit Hamiltonian"""

    def test_two_qubit_ground_energy(self):
        """Test L=1 preset A against the closed-form two-level result"""
        h = build_hamiltonian(get_preset('A').params(1))
        expected = 0.0225 - np.sqrt(0.5225 ** 2 + 0.25)
        self.assertAlmostEqual(np.linalg.eigvalsh(to_matrix(h))[0], expected, places=12)

    def test_hermitian_and_real(self):
        """Test the Hamiltonian has real coefficients"""
        h = build_hamiltonian(get_preset('C').params(3))
        self.assertTrue(h.is_hermitian())
        self.assertEqual(h.n, 6)

    def test_charge_conserved(self):
        """Test [H, Q] = 0"""
        for L in (1, 2, 3):
            h = build_hamiltonian(get_preset('B').params(L))
            self.assertFalse(commutator(h, charge_operator(L)))

    def test_vacuum_energy(self):
        """Test the staggered vacuum carries energy -L m0 and zero field"""
        for label in 'ABC':
            preset = get_preset(label)
            for L in (2, 3):
                energy = expectation(reference_state(L), build_hamiltonian(preset.params(L)))
                self.assertAlmostEqual(energy, -L * preset.m0, places=12)

    def test_lattice_spacing_scaling(self):
        """Test the hopping scales as 1/a and the gauge term as a"""
        h1 = build_hamiltonian(get_preset('C').params(2, 1.0))
        h2 = build_hamiltonian(get_preset('C').params(2, 2.0))
        self.assertAlmostEqual(h2.coefficient('XXII').real, 0.5 * h1.coefficient('XXII').real)
        self.assertAlmostEqual(h2.coefficient('ZZII').real, 2.0 * h1.coefficient('ZZII').real)

    def test_cached(self):
        """Test repeated construction returns the cached object"""
        p = get_preset('A').params(2)
        self.assertIs(build_hamiltonian(p), build_hamiltonian(p))


class ChargeTest(unittest.TestCase):
    """Test the staggered charge"""

    def test_charge_values_match_operator(self):
        """Test the basis charges equal the diagonal of Q"""
        for L in (1, 2, 3):
            np.testing.assert_allclose(np.diag(to_matrix(charge_operator(L))), charge_values(L))

    def test_vacuum_neutral(self):
        """Test the vacuum has zero charge"""
        self.assertEqual(charge_values(3)[bitstring_to_index(vacuum_bitstring(3))], 0)

    def test_sector_size(self):
        """Test the neutral sector has C(2L, L) states"""
        self.assertEqual(len(charge_sector_indices(3, 0)), 20)


class ReferenceStateTest(unittest.TestCase):
    """Test reference states"""

    def test_vacuum_bitstring(self):
        """Test the vacuum string and its index"""
        self.assertEqual(vacuum_bitstring(2), '1010')
        self.assertEqual(bitstring_to_index('1010'), 5)
        self.assertEqual(reference_state(2).amps[5], 1.0)

    def test_flipped_bitstring(self):
        """Test qubits 3 and 4 are flipped"""
        self.assertEqual(flipped_bitstring(4), '10110010')
        with self.assertRaises(ValueError):
            flipped_bitstring(2)

    def test_contaminated_references(self):
        """Test the relative phases of the two contaminated references"""
        L = 3
        i_vac = bitstring_to_index(vacuum_bitstring(L))
        i_flip = bitstring_to_index(flipped_bitstring(L))
        psi1 = reference_state(L, 'trs_breaking_psi1').amps
        psi2 = reference_state(L, 'trs_preserving_psi2').amps
        self.assertAlmostEqual(psi1[i_flip] / psi1[i_vac], -1j)
        self.assertAlmostEqual(psi2[i_flip] / psi2[i_vac], -1.0)
        self.assertAlmostEqual(np.linalg.norm(psi1), 1.0)

    def test_flipped_reference_is_neutral(self):
        """Test the contaminated references stay in the neutral sector"""
        self.assertEqual(charge_values(3)[bitstring_to_index(flipped_bitstring(3))], 0)

    def test_unknown_kind(self):
        """Test unknown kinds are rejected"""
        with self.assertRaises(ValueError):
            reference_state(3, 'random')


class ChargeParityTest(unittest.TestCase):
    """Test the CP transformation"""

    def test_symbolic_matches_dense(self):
        """Test cp_conjugate agrees with conjugation by the dense CP matrix"""
        u = cp_unitary(2)
        op = PauliSum.from_terms([(0.4, 'XZYI'), (-0.3, 'IIZY'), (0.9, 'ZIIX'), (0.2, 'YYII')])
        np.testing.assert_allclose(to_matrix(cp_conjugate(op)), u @ to_matrix(op) @ u.T, atol=1e-12)

    def test_hamiltonian_symmetric_on_neutral_sector(self):
        """Test CP H CP^dagger = H restricted to Q = 0"""
        for L in (2, 3):
            u = cp_unitary(L)
            h = to_matrix(build_hamiltonian(get_preset('C').params(L)))
            sector = charge_sector_indices(L, 0)
            conjugated = u @ h @ u.T
            np.testing.assert_allclose(conjugated[np.ix_(sector, sector)], h[np.ix_(sector, sector)], atol=1e-12)

    def test_involution(self):
        """Test CP applied twice is the identity"""
        op = PauliSum.from_terms([(0.5, 'XZZY'), (-0.5, 'YZZX')])
        self.assertTrue(cp_conjugate(cp_conjugate(op)).isclose(op))


if __name__ == '__main__':
    unittest.main()
