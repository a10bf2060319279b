#!/usr/bin/env python3
"""
Tests for circuit synthesis and CNOT accounting
"""

import unittest

import numpy as np
from scipy.linalg import expm

from schwinger_adapt.exceptions import CapacityError, NonHermitianError, SerializationError
from schwinger_adapt.pauli import PauliSum, to_matrix
from schwinger_adapt.pools import build_pool, generator
from schwinger_adapt.resources import (Circuit, Gate, ansatz_circuit, ansatz_resources, cancel_adjacent,
                                       circuit_unitary, cnot_depth, synthesize_exponential)


class GateTest(unittest.TestCase):
    """Test gate validation"""

    def test_invalid_gates(self):
        """Test unknown kinds and bad qubit tuples are rejected"""
        with self.assertRaises(ValueError):
            Gate('CZ', (0, 1))
        with self.assertRaises(ValueError):
            Gate('CNOT', (1, 1))
        with self.assertRaises(ValueError):
            Gate('H', (0, 1))
        with self.assertRaises(ValueError):
            Circuit(2, [Gate('H', (2,))])


class SynthesisTest(unittest.TestCase):
    """Test single-generator circuits"""

    def test_ladder_counts(self):
        """Test a weight-w string costs 2(w-1) CNOTs at depth 2(w-1)"""
        for label in ('ZIIIII', 'XYIIII', 'XZZYII', 'YZZZZX'):
            w = sum(1 for c in label if c != 'I')
            circuit = synthesize_exponential(PauliSum.from_label(label, 0.5), 0.3)
            self.assertEqual(circuit.cnot_count, 2 * (w - 1), label)
            self.assertEqual(cnot_depth(circuit), 2 * (w - 1), label)
            self.assertEqual(circuit.rz_count, 1)

    def test_unitary_matches_exponential(self):
        """Test the compiled circuit equals exp(-i theta O) for commuting terms"""
        theta = 0.37
        for op in (generator(0, 3, True, 2), PauliSum.from_terms([(0.5, 'XYII'), (-0.5, 'YXII')]),
                   PauliSum.from_terms([(0.8, 'ZIZI')])):
            expected = expm(-1j * theta * to_matrix(op))
            np.testing.assert_allclose(circuit_unitary(synthesize_exponential(op, theta)), expected, atol=1e-12)

    def test_z_string_cost(self):
        """Test a distance-5 step costs 20 CNOTs with Z strings and 4 without"""
        with_z = build_pool('xQZ', 3)['G5(0)'].op
        without_z = build_pool('xQx', 3)['G5(0)'].op
        self.assertEqual(synthesize_exponential(with_z, 1.0).cnot_count, 20)
        self.assertEqual(synthesize_exponential(without_z, 1.0).cnot_count, 4)

    def test_non_hermitian(self):
        """Test complex coefficients are rejected"""
        with self.assertRaises(NonHermitianError):
            synthesize_exponential(PauliSum.from_terms([(0.5j, 'XY')]), 0.1)


class DepthAndCancellationTest(unittest.TestCase):
    """Test depth scheduling and adjacent cancellation"""

    def test_parallel_cnots(self):
        """Test CNOTs on disjoint qubits share a layer"""
        circuit = Circuit(4, [Gate('CNOT', (0, 1)), Gate('CNOT', (2, 3)), Gate('CNOT', (1, 2))])
        self.assertEqual(cnot_depth(circuit), 2)

    def test_repeated_string_cancels_ladders(self):
        """Test back-to-back rotations of one string drop the inner ladders"""
        op = PauliSum.from_label('XZZY', 0.5)
        resources = ansatz_resources([op, op], [0.2, 0.4])
        self.assertEqual(resources.cnot_count, 12)
        self.assertEqual(resources.optimized_cnot_count, 6)
        self.assertEqual(resources.optimized_cnot_depth, 6)
        self.assertEqual(resources.rz_count, 2)

    def test_cancellation_preserves_unitary(self):
        """Test the cancelled circuit implements the same unitary"""
        ops = [generator(0, 1, True, 2), generator(0, 1, True, 2), generator(1, 2, True, 2)]
        circuit = ansatz_circuit(ops, [0.1, -0.4, 0.9])
        np.testing.assert_allclose(circuit_unitary(cancel_adjacent(circuit)), circuit_unitary(circuit), atol=1e-12)

    def test_blocked_cancellation(self):
        """Test a gate in between on a shared qubit blocks cancellation"""
        circuit = Circuit(2, [Gate('H', (0,)), Gate('CNOT', (0, 1)), Gate('H', (0,))])
        self.assertEqual(len(cancel_adjacent(circuit)), 3)

    def test_angle_count_mismatch(self):
        """Test operators and angles must pair up"""
        with self.assertRaises(ValueError):
            ansatz_circuit([generator(0, 1, True, 2)], [0.1, 0.2])


class CircuitTextTest(unittest.TestCase):
    """Test the circuit dump format"""

    def test_round_trip(self):
        """Test a dumped circuit parses back"""
        circuit = synthesize_exponential(generator(0, 3, True, 2), 0.25)
        self.assertEqual(Circuit.from_text(circuit.to_text(), 4).gates, circuit.gates)

    def test_malformed(self):
        """Test malformed gate lines raise SerializationError"""
        with self.assertRaises(SerializationError):
            Circuit.from_text('RZ 0\n', 2)
        with self.assertRaises(SerializationError):
            Circuit.from_text('CNOT 0 5\n', 2)

    def test_unitary_guard(self):
        """Test the dense unitary is refused above ten qubits"""
        with self.assertRaises(CapacityError):
            circuit_unitary(Circuit(11))


if __name__ == '__main__':
    unittest.main()
