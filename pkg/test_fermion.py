#!/usr/bin/env python3
"""
Tests for the Jordan-Wigner mapping and its reverse
"""

import unittest

import numpy as np

from schwinger_adapt.exceptions import CapacityError
from schwinger_adapt.fermion import FermionPolynomial, jw_annihilation, jw_creation, reverse_jordan_wigner
from schwinger_adapt.pauli import PauliSum, to_matrix
from schwinger_adapt.pools import exchange_generator, generator


class JordanWignerTest(unittest.TestCase):
    """Test the forward mapping"""

    def test_creation_fills_mode(self):
        """Test a^dagger maps |0> to |1>"""
        m = to_matrix(jw_creation(0, 1))
        np.testing.assert_allclose(m @ np.array([1.0, 0.0]), [0.0, 1.0])

    def test_canonical_anticommutators(self):
        """Test {a_i, a_j^dagger} = delta_ij and {a_i, a_j} = 0 on three modes"""
        n = 3
        identity = PauliSum.identity(n)
        for i in range(n):
            for j in range(n):
                a_i, a_j = jw_annihilation(i, n), jw_annihilation(j, n)
                mixed = a_i * jw_creation(j, n) + jw_creation(j, n) * a_i
                expected = identity if i == j else PauliSum.zero(n)
                self.assertTrue(mixed.isclose(expected), f"{{a{i}, a{j}^}}")
                self.assertFalse(a_i * a_j + a_j * a_i)

    def test_mode_range(self):
        """Test out-of-range modes are rejected"""
        with self.assertRaises(ValueError):
            jw_annihilation(3, 3)


class ReverseJordanWignerTest(unittest.TestCase):
    """Test the reverse mapping"""

    def test_hopping_is_one_body(self):
        """Test XX + YY maps to 2(a0^ a1 + a1^ a0)"""
        hop = PauliSum.from_terms([(1.0, 'XX'), (1.0, 'YY')])
        expected = FermionPolynomial.from_words([(2.0, ((0, 1), (1, 0))), (2.0, ((1, 1), (0, 0)))])
        self.assertTrue(reverse_jordan_wigner(hop).isclose(expected))

    def test_round_trip(self):
        """Test the forward image of the reverse polynomial is the original sum"""
        s = PauliSum.from_terms([(0.3, 'XZYI'), (-0.7, 'IYZX'), (1.1, 'ZIIZ'), (0.2, 'XIII')])
        self.assertTrue(reverse_jordan_wigner(s).to_pauli_sum(4).isclose(s))

    def test_z_string_generators_are_single_excitations(self):
        """Test Z-string generators are one-body and number conserving"""
        for d in (1, 2, 3):
            poly = reverse_jordan_wigner(generator(0, d, True, 2))
            self.assertTrue(poly.is_number_conserving())
            self.assertEqual(set(poly.body_counts().values()), {1})
            exchange = reverse_jordan_wigner(exchange_generator(0, d, True, 2))
            self.assertEqual(set(exchange.body_counts().values()), {1})

    def test_dropped_z_string_is_many_body(self):
        """Test removing the Z string from a distance-3 generator adds higher-body terms"""
        poly = reverse_jordan_wigner(generator(0, 3, False, 2))
        self.assertGreater(max(poly.body_counts().values()), 1)

    def test_single_x_breaks_number(self):
        """Test a lone X is not number conserving"""
        self.assertFalse(reverse_jordan_wigner(PauliSum.from_label('XI')).is_number_conserving())

    def test_capacity_guard(self):
        """Test the reverse map refuses more than eight qubits"""
        with self.assertRaises(CapacityError):
            reverse_jordan_wigner(PauliSum.identity(9))


if __name__ == '__main__':
    unittest.main()
