"""
Utility functions for schwinger_adapt: in-process caching, argument
validation and version lookup.
"""

import hashlib
import logging
import threading
import time
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, Optional

logger = logging.getLogger(__name__)

POOL_IDS = (
    'LQZ', 'LQx', 'LxZ', 'Lxx',
    'xQZ', 'xQx', 'xxZ', 'xxx',
    'tile_pauli', 'tile_Q', 'tile_L',
    'pauli_full',
)

PRESET_LABELS = ('A', 'B', 'C')


# ========== In-Memory Cache Implementation ==========

class InMemoryCache:
    """Simple in-memory cache for expensive immutable results"""

    def __init__(self) -> None:
        self._cache: Dict[str, Any] = {}
        self._expiry: Dict[str, Optional[float]] = {}
        self._lock = threading.Lock()

    def get(self, key: str) -> Optional[Any]:
        """Get value from cache if not expired"""
        with self._lock:
            if key in self._cache:
                expiry = self._expiry.get(key)
                if expiry is None or time.time() < expiry:
                    logger.debug(f"Cache hit: {key}")
                    return self._cache[key]
                self._cache.pop(key, None)
                self._expiry.pop(key, None)
        logger.debug(f"Cache miss: {key}")
        return None

    def set(self, key: str, value: Any, timeout: Optional[float] = None) -> None:
        """Set value in cache; a timeout of None never expires"""
        with self._lock:
            self._cache[key] = value
            self._expiry[key] = None if timeout is None else time.time() + timeout
        logger.debug(f"Cache set: {key}")

    def delete(self, key: str) -> None:
        """Delete value from cache"""
        with self._lock:
            self._cache.pop(key, None)
            self._expiry.pop(key, None)

    def clear(self) -> None:
        """Clear all cache"""
        with self._lock:
            self._cache.clear()
            self._expiry.clear()
        logger.debug("Cache cleared")

    def get_stats(self) -> Dict[str, int]:
        """Get cache statistics"""
        now = time.time()
        with self._lock:
            active = sum(1 for exp in self._expiry.values() if exp is None or exp > now)
            total = len(self._cache)
        return {
            'total_entries': total,
            'active_entries': active,
            'expired_entries': total - active,
        }


# Global cache instance
_memory_cache = InMemoryCache()


def cached(timeout: Optional[float] = None, key_prefix: str = "") -> Callable:
    """
    Decorator to cache function results in memory

    Results must be treated as immutable by callers.

    Args:
        timeout: Cache timeout in seconds (default: never expires)
        key_prefix: Optional prefix for cache key
    """
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            key_parts = [key_prefix or func.__name__]
            key_parts.extend(repr(arg) for arg in args)
            for k, v in sorted(kwargs.items()):
                key_parts.append(f"{k}={v!r}")

            cache_key = hashlib.md5(":".join(key_parts).encode()).hexdigest()

            result = _memory_cache.get(cache_key)
            if result is not None:
                return result

            result = func(*args, **kwargs)
            _memory_cache.set(cache_key, result, timeout)
            return result

        wrapper.clear_cache = _memory_cache.clear
        wrapper.cache_stats = _memory_cache.get_stats

        return wrapper
    return decorator


# ========== Validation Helpers ==========

def validate_positive_integer(value: Any, name: str = "value", min_val: int = 1,
                              max_val: Optional[int] = None) -> int:
    """
    Validate and convert value to a bounded integer

    Args:
        value: Value to validate
        name: Name of the parameter for error messages
        min_val: Minimum allowed value
        max_val: Maximum allowed value

    Returns:
        Validated integer

    Raises:
        ValueError: If validation fails
    """
    if isinstance(value, bool):
        raise ValueError(f"{name} must be a valid integer")
    try:
        int_value = int(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a valid integer")
    if int_value != value and not isinstance(value, str):
        raise ValueError(f"{name} must be a valid integer")

    if int_value < min_val:
        raise ValueError(f"{name} must be at least {min_val}")

    if max_val is not None and int_value > max_val:
        raise ValueError(f"{name} must be at most {max_val}")

    return int_value


def validate_choice(value: str, choices: Iterable[str], name: str = "value") -> str:
    choices = tuple(choices)
    if value not in choices:
        raise ValueError(f"{name} must be one of {', '.join(choices)}; got {value!r}")
    return value


def validate_pool_id(pool_id: str) -> str:
    """
    Validate an operator pool identifier

    Raises:
        ValueError: If the identifier is unknown
    """
    return validate_choice(pool_id, POOL_IDS, "pool_id")


def validate_preset_label(label: str) -> str:
    """
    Validate a model preset label (case-insensitive)

    Raises:
        ValueError: If the label is unknown
    """
    if not isinstance(label, str):
        raise ValueError("preset must be a string")
    return validate_choice(label.strip().upper(), PRESET_LABELS, "preset")


def get_version() -> str:
    """Read the library version from the VERSION file"""
    try:
        version_file = Path(__file__).resolve().parent.parent / 'VERSION'
        if version_file.exists():
            return version_file.read_text().strip()
    except OSError:
        pass
    return '1.0.0'
