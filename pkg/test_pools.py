#!/usr/bin/env python3
"""
Tests for the top-down operator pools and the pool dump format
"""

import tempfile
import unittest
from pathlib import Path

from schwinger_adapt.exceptions import PoolConstructionError, SerializationError
from schwinger_adapt.model import charge_operator, cp_conjugate
from schwinger_adapt.pauli import commutator, is_time_reversal_odd
from schwinger_adapt.pools import (TOPDOWN_POOLS, OperatorPool, PoolOptions, build_pool, exchange_generator,
                                   full_pauli_pool, generator, split_halves, volume_operator)


class GeneratorTest(unittest.TestCase):
    """Test the single-excitation building blocks"""

    def test_generator_terms(self):
        """Test G_3(0) carries the interior Z string"""
        g = generator(0, 3, True, 2)
        self.assertAlmostEqual(g.coefficient('XZZY'), 0.5)
        self.assertAlmostEqual(g.coefficient('YZZX'), -0.5)
        self.assertEqual(len(g), 2)

    def test_generator_without_z(self):
        """Test with_z=False drops the interior"""
        g = generator(0, 3, False, 2)
        self.assertAlmostEqual(g.coefficient('XIIY'), 0.5)

    def test_invalid_indices(self):
        """Test placements off the lattice are rejected"""
        with self.assertRaises(ValueError):
            generator(2, 2, True, 2)
        with self.assertRaises(ValueError):
            generator(0, 0, True, 2)

    def test_exchange_partner_is_time_reversal_even(self):
        """Test the XX + YY partner has no odd-Y strings"""
        t = exchange_generator(1, 2, True, 2)
        self.assertFalse(is_time_reversal_odd(t))
        self.assertAlmostEqual(t.coefficient('IXZX'), 0.5)
        self.assertAlmostEqual(t.coefficient('IYZY'), 0.5)

    def test_split_halves(self):
        """Test the halves separate X...Y from Y...X"""
        xy, yx = split_halves(generator(1, 1, True, 2))
        self.assertEqual([s.label for s in xy.strings()], ['IXYI'])
        self.assertEqual([s.label for s in yx.strings()], ['IYXI'])

    def test_volume_sign_alternates(self):
        """Test V_d sums placements with alternating signs"""
        v = volume_operator(1, 2, True)
        self.assertAlmostEqual(v.coefficient('XYII'), 0.5)
        self.assertAlmostEqual(v.coefficient('IXYI'), -0.5)
        self.assertAlmostEqual(v.coefficient('IIXY'), 0.5)


class TopDownPoolTest(unittest.TestCase):
    """Test the eight top-down pools"""

    def test_local_pool_sizes(self):
        """Test operator counts of the site-local pools"""
        self.assertEqual(len(build_pool('xQZ', 2)), 4)
        self.assertEqual(len(build_pool('xQZ', 2, PoolOptions(distances='all'))), 6)
        self.assertEqual(len(build_pool('xxZ', 2)), 8)
        self.assertEqual(build_pool('xQZ', 2).labels(), ['G1(0)', 'G1(1)', 'G1(2)', 'G3(0)'])

    def test_longest_surface_duplicates_volume(self):
        """Test the surface operator equal to the volume operator is dropped"""
        self.assertEqual(build_pool('LQZ', 2).labels(), ['V1', 'S1', 'V3'])

    def test_every_operator_hermitian_and_odd(self):
        """Test all pools hold Hermitian time-reversal-odd generators"""
        for pool_id in TOPDOWN_POOLS:
            for p in build_pool(pool_id, 3):
                self.assertTrue(p.op.is_hermitian(), p.label)
                self.assertTrue(is_time_reversal_odd(p.op), f"{pool_id} {p.label}")

    def test_charge_flag(self):
        """Test Q pools commute with the charge and relaxed halves do not"""
        q = charge_operator(3)
        for pool_id in ('LQZ', 'LQx', 'xQZ', 'xQx'):
            self.assertTrue(all(not commutator(p.op, q) for p in build_pool(pool_id, 3)), pool_id)
        for pool_id in ('LxZ', 'Lxx', 'xxZ', 'xxx'):
            self.assertTrue(any(commutator(p.op, q) for p in build_pool(pool_id, 3)), pool_id)

    def test_z_string_flag(self):
        """Test Z pools have weight d+1 strings and x pools weight 2"""
        for p in build_pool('xQZ', 3):
            self.assertEqual({s.weight for s in p.op.strings()}, {p.distance + 1})
        for p in build_pool('Lxx', 3):
            self.assertEqual({s.weight for s in p.op.strings()}, {2})

    def test_paired_surfaces_cp_symmetric(self):
        """Test CP-paired surface operators are CP invariant"""
        for pool_id in ('LQZ', 'LQx'):
            for p in build_pool(pool_id, 3):
                if p.kind == 'surface':
                    self.assertTrue(p.cp_symmetric, p.label)
                    self.assertTrue(cp_conjugate(p.op).isclose(p.op))

    def test_separate_surfaces(self):
        """Test separate mode keeps left and right surfaces"""
        labels = build_pool('LQZ', 3, PoolOptions(surface_mode='separate')).labels()
        self.assertIn('S1L', labels)
        self.assertIn('S1R', labels)
        self.assertIn('S5', labels)

    def test_relaxed_halves_labels(self):
        """Test charge-relaxed Lambda pools split into XY and YX halves"""
        labels = build_pool('LxZ', 2).labels()
        self.assertIn('V1:XY', labels)
        self.assertIn('S1:YX', labels)

    def test_t_relax(self):
        """Test time-reversal relaxation adds exchange partners"""
        pool = build_pool('xQZ', 2, PoolOptions(t_relax=True))
        self.assertEqual(len(pool), 8)
        self.assertFalse(is_time_reversal_odd(pool['T1(0)'].op))
        with self.assertRaises(PoolConstructionError):
            build_pool('LQZ', 2, PoolOptions(t_relax=True))

    def test_z_surface_swap(self):
        """Test the swap puts Z strings on LQx surfaces only"""
        pool = build_pool('LQx', 3, PoolOptions(z_surface_swap=True))
        self.assertEqual({s.weight for s in pool['S3'].op.strings()}, {4})
        self.assertEqual({s.weight for s in pool['V3'].op.strings()}, {2})
        with self.assertRaises(PoolConstructionError):
            build_pool('xQZ', 3, PoolOptions(z_surface_swap=True))

    def test_unknown_pool(self):
        """Test unknown ids are rejected"""
        with self.assertRaises(ValueError):
            build_pool('QQQ', 2)
        with self.assertRaises(KeyError):
            build_pool('xQZ', 2)['V1']

    def test_options_dict(self):
        """Test unknown option keys are rejected"""
        self.assertEqual(PoolOptions.from_dict({'distances': 'all'}).distances, 'all')
        with self.assertRaises(ValueError):
            PoolOptions.from_dict({'distance': 'all'})


class FullPauliPoolTest(unittest.TestCase):
    """Test the full odd-Y pool"""

    def test_size(self):
        """Test (4^n - 2^n)/2 strings"""
        self.assertEqual(len(full_pauli_pool(1)), 6)
        self.assertEqual(len(full_pauli_pool(2)), 120)

    def test_guard(self):
        """Test the pool is refused above eight qubits"""
        with self.assertRaises(PoolConstructionError):
            full_pauli_pool(5)


class PoolDumpTest(unittest.TestCase):
    """Test the pool text format"""

    def test_round_trip(self):
        """Test a dumped pool reloads with the same operators"""
        pool = build_pool('LQZ', 3, PoolOptions(surface_mode='separate'))
        with tempfile.TemporaryDirectory() as tmp:
            loaded = OperatorPool.load(pool.dump(Path(tmp) / 'lqz.pool'))
        self.assertEqual(loaded.labels(), pool.labels())
        self.assertEqual(loaded.options, pool.options)
        for a, b in zip(loaded, pool):
            self.assertTrue(a.op.isclose(b.op))
            self.assertEqual((a.kind, a.distance, a.cp_symmetric), (b.kind, b.distance, b.cp_symmetric))

    def test_header_format(self):
        """Test the first line names the pool and size"""
        self.assertTrue(build_pool('xQZ', 2).to_text().startswith('pool xQZ L=2 options='))

    def test_malformed_dumps(self):
        """Test malformed dumps raise SerializationError"""
        with self.assertRaises(SerializationError):
            OperatorPool.from_text('xQZ L=2\n')
        with self.assertRaises(SerializationError):
            OperatorPool.from_text('pool xQZ L=2 options={}\n0.5 0.0 XYII\n')
        with self.assertRaises(SerializationError):
            OperatorPool.from_text('pool xQZ L=2 options={}\nop G1(0) kind=local\n0.5 0.0 XY\n')
        with self.assertRaises(SerializationError):
            OperatorPool.from_text('pool xQZ L=2 options={}\nop G1(0) kind=local\n0.0 0.5 XYII\n')
        with self.assertRaises(SerializationError):
            OperatorPool.load('/nonexistent/pool.txt')


if __name__ == '__main__':
    unittest.main()
