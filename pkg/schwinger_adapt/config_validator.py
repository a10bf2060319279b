"""
Configuration validation for schwinger_adapt.

Validates runtime settings, single-run configurations and experiment
documents, collecting every problem before reporting.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

from .exceptions import SchwingerAdaptError
from .utils import POOL_IDS, PRESET_LABELS

logger = logging.getLogger(__name__)

REFERENCES = ('staggered_vacuum', 'trs_breaking_psi1', 'trs_preserving_psi2', 'mean_field')
LARGE_L = 8


class ConfigurationError(SchwingerAdaptError):
    """Raised when configuration validation fails"""
    pass


class ConfigValidator:
    """Validator accumulating errors and warnings"""

    def __init__(self):
        self.errors: List[str] = []
        self.warnings: List[str] = []

    def validate_integer(self, value: Any, name: str = "value",
                         min_val: Optional[int] = None,
                         max_val: Optional[int] = None) -> bool:
        """
        Validate integer value

        Args:
            value: Value to validate
            name: Name for error messages
            min_val: Minimum allowed value
            max_val: Maximum allowed value

        Returns:
            True if valid
        """
        if isinstance(value, bool) or isinstance(value, float) and not value.is_integer():
            self.errors.append(f"{name} must be a valid integer, got: {value}")
            return False
        try:
            int_value = int(value)
        except (TypeError, ValueError):
            self.errors.append(f"{name} must be a valid integer, got: {value}")
            return False

        if min_val is not None and int_value < min_val:
            self.errors.append(f"{name} must be at least {min_val}, got: {int_value}")
            return False

        if max_val is not None and int_value > max_val:
            self.errors.append(f"{name} must be at most {max_val}, got: {int_value}")
            return False

        return True

    def validate_float(self, value: Any, name: str = "value", positive: bool = False) -> bool:
        if isinstance(value, bool):
            self.errors.append(f"{name} must be a number, got: {value}")
            return False
        try:
            number = float(value)
        except (TypeError, ValueError):
            self.errors.append(f"{name} must be a number, got: {value}")
            return False
        if positive and not number > 0:
            self.errors.append(f"{name} must be positive, got: {number}")
            return False
        return True

    def validate_boolean(self, value: Any, name: str = "value") -> bool:
        if isinstance(value, bool):
            return True
        self.errors.append(f"{name} must be true or false, got: {value}")
        return False

    def validate_choice(self, value: Any, choices: Iterable[str], name: str = "value") -> bool:
        choices = tuple(choices)
        if value not in choices:
            self.errors.append(f"{name} must be one of {', '.join(choices)}, got: {value}")
            return False
        return True

    def validate_directory_exists(self, path: Union[str, Path],
                                  name: str = "directory",
                                  create: bool = False) -> bool:
        """
        Validate directory exists

        Args:
            path: Directory path
            name: Name for error messages
            create: Whether to create directory if it doesn't exist

        Returns:
            True if directory exists or was created
        """
        path_obj = Path(path)

        if not path_obj.exists():
            if create:
                try:
                    path_obj.mkdir(parents=True, exist_ok=True)
                    logger.info(f"Created {name}: {path}")
                    return True
                except OSError as e:
                    self.errors.append(f"Failed to create {name} {path}: {e}")
                    return False
            self.warnings.append(f"{name} does not exist: {path}")
            return False

        if not path_obj.is_dir():
            self.errors.append(f"{name} is not a directory: {path}")
            return False

        if not os.access(path_obj, os.W_OK):
            self.errors.append(f"{name} is not writable: {path}")
            return False

        return True

    def get_errors(self) -> List[str]:
        """Get all validation errors"""
        return self.errors

    def get_warnings(self) -> List[str]:
        """Get all validation warnings"""
        return self.warnings

    def has_errors(self) -> bool:
        """Check if there are any validation errors"""
        return len(self.errors) > 0

    def raise_for_errors(self) -> None:
        if self.errors:
            raise ConfigurationError('; '.join(self.errors))

    def report(self) -> str:
        """Generate validation report"""
        report = []

        if self.errors:
            report.append("Configuration Errors:")
            for error in self.errors:
                report.append(f"  ✗ {error}")

        if self.warnings:
            report.append("\nConfiguration Warnings:")
            for warning in self.warnings:
                report.append(f"  ⚠ {warning}")

        if not self.errors and not self.warnings:
            report.append("✓ Configuration is valid")

        return "\n".join(report)


def validate_settings(settings: Dict[str, Any]) -> ConfigValidator:
    """
    Validate runtime settings

    Args:
        settings: Settings dictionary to validate

    Returns:
        ConfigValidator with validation results
    """
    validator = ConfigValidator()

    validator.validate_integer(settings.get('DENSE_QUBIT_LIMIT'), 'DENSE_QUBIT_LIMIT', min_val=2, max_val=16)
    validator.validate_integer(settings.get('STATE_QUBIT_LIMIT'), 'STATE_QUBIT_LIMIT', min_val=2, max_val=30)
    validator.validate_integer(settings.get('DENSE_GROUND_STATE_QUBITS'), 'DENSE_GROUND_STATE_QUBITS',
                               min_val=2, max_val=16)
    validator.validate_integer(settings.get('WORKERS'), 'WORKERS', min_val=1, max_val=256)
    validator.validate_integer(settings.get('JOBS'), 'JOBS', min_val=1, max_val=256)
    validator.validate_choice(str(settings.get('LOG_LEVEL', '')).upper(),
                              ('DEBUG', 'INFO', 'WARNING', 'ERROR'), 'LOG_LEVEL')

    if not validator.has_errors() and settings['DENSE_QUBIT_LIMIT'] > settings['STATE_QUBIT_LIMIT']:
        validator.errors.append('DENSE_QUBIT_LIMIT cannot exceed STATE_QUBIT_LIMIT')
    if settings.get('STATE_QUBIT_LIMIT', 0) > 24:
        validator.warnings.append('STATE_QUBIT_LIMIT above 24 needs more than 256 MiB per statevector')

    return validator


def validate_adapt_config(data: Dict[str, Any], validator: Optional[ConfigValidator] = None,
                          prefix: str = '') -> ConfigValidator:
    """
    Validate the run fields of a configuration document

    Only fields that are present are checked; defaults fill the rest.
    """
    validator = validator or ConfigValidator()

    if 'epsilon' in data:
        validator.validate_float(data['epsilon'], f'{prefix}epsilon', positive=True)
    if 'max_iterations' in data:
        validator.validate_integer(data['max_iterations'], f'{prefix}max_iterations', min_val=0)
    for budget in ('cnot_budget', 'feval_budget'):
        if data.get(budget) is not None:
            validator.validate_integer(data[budget], f'{prefix}{budget}', min_val=0)
    if 'reference' in data:
        validator.validate_choice(data['reference'], REFERENCES, f'{prefix}reference')
    if 'exponential_mode' in data:
        validator.validate_choice(data['exponential_mode'], ('exact', 'trotter'), f'{prefix}exponential_mode')
    if 'lattice_spacing' in data:
        validator.validate_float(data['lattice_spacing'], f'{prefix}lattice_spacing', positive=True)
    if 'workers' in data:
        validator.validate_integer(data['workers'], f'{prefix}workers', min_val=1)
    for flag in ('tetris', 'track_fidelity'):
        if flag in data:
            validator.validate_boolean(data[flag], f'{prefix}{flag}')

    options = data.get('options', {})
    if not isinstance(options, dict):
        validator.errors.append(f'{prefix}options must be an object')
        return validator
    if 'distances' in options:
        validator.validate_choice(options['distances'], ('odd', 'all'), f'{prefix}options.distances')
    if 'surface_mode' in options:
        validator.validate_choice(options['surface_mode'], ('cp_paired', 'separate'),
                                  f'{prefix}options.surface_mode')
    for flag in ('z_surface_swap', 't_relax'):
        if flag in options:
            validator.validate_boolean(options[flag], f'{prefix}options.{flag}')
    for count in ('tile_runs', 'tile_size'):
        if count in options:
            validator.validate_integer(options[count], f'{prefix}options.{count}', min_val=1)

    return validator


def validate_experiment_spec(data: Dict[str, Any]) -> ConfigValidator:
    """
    Validate an experiment document

    Returns:
        ConfigValidator with validation results
    """
    validator = ConfigValidator()

    pools = data.get('pools')
    if not pools:
        validator.errors.append('pools must list at least one pool id')
    else:
        for pool_id in pools:
            validator.validate_choice(pool_id, POOL_IDS, 'pools[]')

    for preset in data.get('presets', ['C']):
        validator.validate_choice(str(preset).upper(), PRESET_LABELS, 'presets[]')

    sizes = data.get('L')
    if sizes is None:
        validator.errors.append('L is required (a list of sizes or {"min": .., "max": ..})')
    else:
        if isinstance(sizes, dict):
            ok = (validator.validate_integer(sizes.get('min'), 'L.min', min_val=1)
                  and validator.validate_integer(sizes.get('max'), 'L.max', min_val=1))
            sizes = list(range(int(sizes['min']), int(sizes['max']) + 1)) if ok else []
            if ok and not sizes:
                validator.errors.append('L.min must not exceed L.max')
        elif isinstance(sizes, list) and sizes:
            sizes = [s for s in sizes if validator.validate_integer(s, 'L[]', min_val=1)]
        else:
            validator.errors.append('L must be a non-empty list or a {"min", "max"} object')
            sizes = []
        if any(int(s) >= LARGE_L for s in sizes) and not data.get('allow_large', False):
            validator.errors.append(f'L >= {LARGE_L} requires "allow_large": true')

    if 'jobs' in data:
        validator.validate_integer(data['jobs'], 'jobs', min_val=1)

    validate_adapt_config(data, validator)
    for i, variant in enumerate(data.get('variants', [])):
        if not isinstance(variant, dict):
            validator.errors.append(f'variants[{i}] must be an object')
            continue
        validate_adapt_config(variant, validator, prefix=f'variants[{i}].')
        for pool_id in variant.get('pools', []):
            validator.validate_choice(pool_id, POOL_IDS, f'variants[{i}].pools[]')

    if 'output_dir' in data:
        validator.validate_directory_exists(data['output_dir'], 'output_dir', create=True)

    return validator


def load_and_validate_config(path: Union[str, Path, None] = None) -> Dict[str, Any]:
    """
    Load and validate settings and, optionally, an experiment document

    Args:
        path: Experiment JSON file

    Returns:
        Dictionary with validation results and the parsed document

    Raises:
        ConfigurationError: If the document cannot be read
    """
    from .settings import SCHWINGER_SETTINGS

    results = {
        'valid': True,
        'errors': [],
        'warnings': [],
        'document': None,
    }

    settings_validator = validate_settings(SCHWINGER_SETTINGS)
    results['errors'].extend(settings_validator.get_errors())
    results['warnings'].extend(settings_validator.get_warnings())

    if path is not None:
        try:
            document = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"cannot read configuration {path}: {e}")
        spec_validator = validate_experiment_spec(document)
        results['errors'].extend(spec_validator.get_errors())
        results['warnings'].extend(spec_validator.get_warnings())
        results['document'] = document

    if results['errors']:
        results['valid'] = False
        logger.error("Configuration validation failed:")
        for error in results['errors']:
            logger.error(f"  ✗ {error}")

    if results['warnings']:
        logger.warning("Configuration warnings:")
        for warning in results['warnings']:
            logger.warning(f"  ⚠ {warning}")

    return results
