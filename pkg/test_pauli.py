#!/usr/bin/env python3
"""
Tests for the Pauli string algebra
"""

import unittest

import numpy as np

from schwinger_adapt.exceptions import CapacityError, DimensionError, SerializationError
from schwinger_adapt.pauli import (PauliString, PauliSum, PauliTerm, commutator, is_time_reversal_odd,
                                   multiply, to_matrix)

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)


class PauliStringTest(unittest.TestCase):
    """Test phase-free Pauli strings"""

    def test_label_masks(self):
        """Test qubit 0 is the leftmost letter and bit 0 of the masks"""
        s = PauliString.from_label('XIZY')
        self.assertEqual(s.x_mask, 0b1001)
        self.assertEqual(s.z_mask, 0b1100)
        self.assertEqual(s.label, 'XIZY')
        self.assertEqual(s.weight, 3)
        self.assertEqual(s.y_count, 1)
        self.assertEqual(s.support(), frozenset({0, 2, 3}))

    def test_invalid_letter(self):
        """Test unknown letters are rejected"""
        with self.assertRaises(ValueError):
            PauliString.from_label('XA')

    def test_commutation(self):
        """Test symplectic commutation"""
        self.assertFalse(PauliString.from_label('XI').commutes_with(PauliString.from_label('ZI')))
        self.assertTrue(PauliString.from_label('XX').commutes_with(PauliString.from_label('ZZ')))
        self.assertTrue(PauliString.from_label('XY').commutes_with(PauliString.from_label('YX')))

    def test_embed(self):
        """Test embedding shifts the string"""
        s = PauliString.from_label('XY').embed(5, 2)
        self.assertEqual(s.label, 'IIXYI')
        with self.assertRaises(ValueError):
            PauliString.from_label('XY').embed(3, 2)


class PauliSumAlgebraTest(unittest.TestCase):
    """Test sums, products and commutators"""

    def test_single_qubit_products(self):
        """Test XY = iZ and YX = -iZ"""
        xy = multiply(PauliTerm.from_label('X'), PauliTerm.from_label('Y'))
        self.assertEqual(xy.string.label, 'Z')
        self.assertAlmostEqual(xy.coeff, 1j)
        yx = multiply(PauliTerm.from_label('Y'), PauliTerm.from_label('X'))
        self.assertAlmostEqual(yx.coeff, -1j)

    def test_products_match_matrices(self):
        """Test products against dense matrices on two qubits"""
        a = PauliSum.from_terms([(0.3, 'XZ'), (0.7j, 'YY')])
        b = PauliSum.from_terms([(1.1, 'ZX'), (-0.2, 'IY')])
        np.testing.assert_allclose(to_matrix(a * b), to_matrix(a) @ to_matrix(b), atol=1e-12)

    def test_commutator(self):
        """Test [X, Y] = 2iZ and commuting strings drop out"""
        c = commutator(PauliSum.from_label('X'), PauliSum.from_label('Y'))
        self.assertAlmostEqual(c.coefficient('Z'), 2j)
        self.assertEqual(len(c), 1)
        self.assertFalse(commutator(PauliSum.from_label('XX'), PauliSum.from_label('ZZ')))

    def test_cancellation_prunes(self):
        """Test cancelling terms leave an empty sum"""
        s = PauliSum.from_label('XY') - PauliSum.from_label('XY')
        self.assertEqual(len(s), 0)
        self.assertFalse(s)

    def test_merge_on_construction(self):
        """Test repeated strings are summed"""
        s = PauliSum(2, [PauliTerm.from_label('ZZ', 0.25), PauliTerm.from_label('ZZ', 0.5)])
        self.assertAlmostEqual(s.coefficient('ZZ'), 0.75)

    def test_dimension_mismatch(self):
        """Test combining different qubit counts fails"""
        with self.assertRaises(DimensionError):
            PauliSum.from_label('X') + PauliSum.from_label('XX')

    def test_hermiticity(self):
        """Test Hermitian means real coefficients on Pauli strings"""
        self.assertTrue(PauliSum.from_terms([(0.5, 'XY'), (-0.5, 'YX')]).is_hermitian())
        self.assertFalse(PauliSum.from_terms([(0.5j, 'XY')]).is_hermitian())

    def test_time_reversal_parity(self):
        """Test odd-Y detection"""
        self.assertTrue(is_time_reversal_odd(PauliSum.from_terms([(0.5, 'XY'), (-0.5, 'YX')])))
        self.assertFalse(is_time_reversal_odd(PauliSum.from_terms([(0.5, 'XX'), (0.5, 'YY')])))
        self.assertFalse(is_time_reversal_odd(PauliSum.zero(2)))

    def test_split_terms_label_order(self):
        """Test split terms come out in label order with unit coefficients"""
        parts = PauliSum.from_terms([(-0.5, 'YX'), (0.5, 'XY')]).split_terms()
        self.assertEqual([p.strings()[0].label for _, p in parts], ['XY', 'YX'])
        self.assertEqual([c for c, _ in parts], [0.5, -0.5])
        self.assertAlmostEqual(parts[0][1].coefficient('XY'), 1.0)


class PauliMatrixTest(unittest.TestCase):
    """Test dense and sparse views"""

    def test_little_endian_kron(self):
        """Test qubit 0 is the least significant tensor factor"""
        np.testing.assert_allclose(to_matrix(PauliString.from_label('XZ')), np.kron(Z, X))
        np.testing.assert_allclose(to_matrix(PauliString.from_label('YIX')), np.kron(X, np.kron(I2, Y)))

    def test_sparse_matches_dense(self):
        """Test the CSR view equals the dense matrix"""
        s = PauliSum.from_terms([(0.3, 'XZY'), (-1.2, 'ZZI'), (0.5, 'IYY'), (2.0, 'III')])
        np.testing.assert_allclose(s.to_sparse().toarray(), to_matrix(s), atol=1e-14)

    def test_dense_guard(self):
        """Test the dense guard raises CapacityError"""
        with self.assertRaises(CapacityError):
            to_matrix(PauliSum.identity(6), max_qubits=4)

    def test_diagonal_operator_is_real(self):
        """Test a Z-only sum builds a real diagonal matrix"""
        m = to_matrix(PauliSum.from_terms([(1.0, 'ZI'), (0.5, 'IZ')]))
        self.assertTrue(np.isrealobj(m))
        np.testing.assert_allclose(np.diag(m), [1.5, -0.5, 0.5, -1.5])


class PauliTextTest(unittest.TestCase):
    """Test the line-oriented text format"""

    def test_round_trip(self):
        """Test to_text output parses back to the same sum"""
        s = PauliSum.from_terms([(0.1, 'XZY'), (-0.25j, 'IIZ')])
        self.assertEqual(PauliSum.from_text(s.to_text()), s)

    def test_comments_and_blank_lines(self):
        """Test comments and blank lines are skipped"""
        s = PauliSum.from_text("# header\n\n0.5 0.0 XY\n")
        self.assertAlmostEqual(s.coefficient('XY'), 0.5)

    def test_malformed_lines(self):
        """Test malformed input raises SerializationError"""
        with self.assertRaises(SerializationError):
            PauliSum.from_text("0.5 XY")
        with self.assertRaises(SerializationError):
            PauliSum.from_text("0.5 0.0 XQ")
        with self.assertRaises(SerializationError):
            PauliSum.from_text("0.5 0.0 XY\n1.0 0.0 XYZ")
        with self.assertRaises(SerializationError):
            PauliSum.from_text("")


if __name__ == '__main__':
    unittest.main()
