import json
import tempfile
import time
import unittest
from pathlib import Path

from .config_validator import (ConfigValidator, ConfigurationError, load_and_validate_config,
                               validate_adapt_config, validate_experiment_spec, validate_settings)
from .exceptions import SchwingerAdaptError
from .settings import SCHWINGER_SETTINGS
from .utils import (InMemoryCache, cached, get_version, validate_pool_id, validate_positive_integer,
                    validate_preset_label)


class InMemoryCacheTest(unittest.TestCase):
    """Test in-memory cache functionality"""

    def setUp(self):
        """Set up cache instance"""
        self.cache = InMemoryCache()

    def test_cache_set_and_get(self):
        """Test setting and getting cache values"""
        self.cache.set('test_key', 'test_value')
        self.assertEqual(self.cache.get('test_key'), 'test_value')

    def test_cache_expiration(self):
        """Test cache expiration"""
        self.cache.set('test_key', 'test_value', timeout=0.05)
        time.sleep(0.1)
        self.assertIsNone(self.cache.get('test_key'))

    def test_cache_without_timeout_persists(self):
        """Test entries without a timeout never expire"""
        self.cache.set('test_key', 42)
        self.assertEqual(self.cache.get_stats()['active_entries'], 1)

    def test_cache_delete(self):
        """Test cache deletion"""
        self.cache.set('test_key', 'test_value')
        self.cache.delete('test_key')
        self.assertIsNone(self.cache.get('test_key'))

    def test_cache_clear(self):
        """Test clearing all cache"""
        self.cache.set('key1', 'value1')
        self.cache.set('key2', 'value2')
        self.cache.clear()
        self.assertIsNone(self.cache.get('key1'))
        self.assertEqual(self.cache.get_stats()['total_entries'], 0)


class CachedDecoratorTest(unittest.TestCase):
    """Test the memoizing decorator"""

    def test_repeated_call_hits_cache(self):
        """Test identical arguments run the function once"""
        calls = []

        @cached(key_prefix='test_square')
        def square(x):
            calls.append(x)
            return x * x

        self.assertEqual(square(7), 49)
        self.assertEqual(square(7), 49)
        self.assertEqual(calls, [7])

    def test_different_arguments_miss(self):
        """Test different arguments are cached separately"""
        calls = []

        @cached(key_prefix='test_double')
        def double(x, scale=2):
            calls.append((x, scale))
            return x * scale

        double(3)
        double(3, scale=5)
        self.assertEqual(len(calls), 2)


class ValidationHelpersTest(unittest.TestCase):
    """Test argument validation helpers"""

    def test_positive_integer_accepts_strings(self):
        """Test numeric strings are converted"""
        self.assertEqual(validate_positive_integer('4', 'L'), 4)

    def test_positive_integer_rejects_bool_and_fraction(self):
        """Test booleans and non-integral floats are rejected"""
        with self.assertRaises(ValueError):
            validate_positive_integer(True, 'L')
        with self.assertRaises(ValueError):
            validate_positive_integer(2.5, 'L')

    def test_positive_integer_bounds(self):
        """Test min and max bounds"""
        with self.assertRaises(ValueError):
            validate_positive_integer(0, 'L')
        with self.assertRaises(ValueError):
            validate_positive_integer(11, 'L', max_val=10)

    def test_pool_id(self):
        """Test pool id validation"""
        self.assertEqual(validate_pool_id('LQZ'), 'LQZ')
        with self.assertRaises(ValueError):
            validate_pool_id('lqz')

    def test_preset_label_case_insensitive(self):
        """Test preset labels are normalized to upper case"""
        self.assertEqual(validate_preset_label(' b '), 'B')
        with self.assertRaises(ValueError):
            validate_preset_label('D')

    def test_version_string(self):
        """Test the version is a dotted string"""
        self.assertRegex(get_version(), r'^\d+\.\d+\.\d+')


class ConfigValidatorTest(unittest.TestCase):
    """Test the accumulating validator"""

    def test_errors_accumulate(self):
        """Test every failed check is recorded"""
        validator = ConfigValidator()
        validator.validate_integer('x', 'a')
        validator.validate_float(-1, 'b', positive=True)
        validator.validate_choice('q', ('odd', 'all'), 'c')
        self.assertEqual(len(validator.get_errors()), 3)
        with self.assertRaises(ConfigurationError):
            validator.raise_for_errors()

    def test_configuration_error_is_library_error(self):
        """Test ConfigurationError derives from the library base"""
        self.assertTrue(issubclass(ConfigurationError, SchwingerAdaptError))

    def test_report_lines(self):
        """Test report marks errors and the valid case"""
        validator = ConfigValidator()
        self.assertIn('✓', validator.report())
        validator.validate_boolean('yes', 'tetris')
        self.assertIn('✗', validator.report())

    def test_directory_created(self):
        """Test a missing directory is created on request"""
        with tempfile.TemporaryDirectory() as tmp:
            target = Path(tmp) / 'runs' / 'nested'
            validator = ConfigValidator()
            self.assertTrue(validator.validate_directory_exists(target, create=True))
            self.assertTrue(target.is_dir())

    def test_default_settings_valid(self):
        """Test the default runtime settings pass validation"""
        self.assertFalse(validate_settings(SCHWINGER_SETTINGS).has_errors())

    def test_settings_guard_ordering(self):
        """Test the dense guard may not exceed the statevector guard"""
        settings = dict(SCHWINGER_SETTINGS, DENSE_QUBIT_LIMIT=16, STATE_QUBIT_LIMIT=12)
        self.assertTrue(validate_settings(settings).has_errors())


class ExperimentValidationTest(unittest.TestCase):
    """Test experiment document validation"""

    def test_minimal_document(self):
        """Test a minimal document is valid"""
        validator = validate_experiment_spec({'pools': ['xQZ'], 'L': [2, 3]})
        self.assertFalse(validator.has_errors(), validator.report())

    def test_range_sizes(self):
        """Test the min/max form of L"""
        self.assertFalse(validate_experiment_spec({'pools': ['LQZ'], 'L': {'min': 2, 'max': 4}}).has_errors())
        self.assertTrue(validate_experiment_spec({'pools': ['LQZ'], 'L': {'min': 4, 'max': 2}}).has_errors())

    def test_unknown_pool_rejected(self):
        """Test an unknown pool id is an error"""
        self.assertTrue(validate_experiment_spec({'pools': ['QQQ'], 'L': [2]}).has_errors())

    def test_large_lattice_requires_opt_in(self):
        """Test L >= 8 needs allow_large"""
        self.assertTrue(validate_experiment_spec({'pools': ['xQZ'], 'L': [8]}).has_errors())
        self.assertFalse(validate_experiment_spec({'pools': ['xQZ'], 'L': [8], 'allow_large': True}).has_errors())

    def test_variant_fields_checked(self):
        """Test variant overrides are validated with a prefix"""
        validator = validate_experiment_spec({'pools': ['LQx'], 'L': [3],
                                              'variants': [{'options': {'z_surface_swap': 'yes'}}]})
        self.assertTrue(any(e.startswith('variants[0].') for e in validator.get_errors()))

    def test_run_fields(self):
        """Test run fields are range checked"""
        validator = validate_adapt_config({'epsilon': 0, 'reference': 'vacuum', 'max_iterations': -1})
        self.assertEqual(len(validator.get_errors()), 3)

    def test_load_document(self):
        """Test loading a document from disk"""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'experiment.json'
            path.write_text(json.dumps({'pools': ['xQZ'], 'L': [2], 'output_dir': str(Path(tmp) / 'out')}))
            results = load_and_validate_config(path)
        self.assertTrue(results['valid'], results['errors'])
        self.assertEqual(results['document']['pools'], ['xQZ'])

    def test_unreadable_document(self):
        """Test malformed JSON raises ConfigurationError"""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'broken.json'
            path.write_text('{pools:')
            with self.assertRaises(ConfigurationError):
                load_and_validate_config(path)


if __name__ == '__main__':
    unittest.main()
