"""
Runtime settings for schwinger_adapt.

Values come from the environment (optionally a .env file in the working
directory) with defaults suitable for desk-scale runs.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

LOG_LEVEL = os.environ.get('SCHWINGER_LOG_LEVEL', 'INFO')

SCHWINGER_SETTINGS = {
    'OUTPUT_DIR': os.environ.get('SCHWINGER_OUTPUT_DIR', 'results'),
    'LOG_FILE': os.environ.get('SCHWINGER_LOG_FILE', 'schwinger_adapt.log'),
    'LOG_LEVEL': LOG_LEVEL,
    # Largest qubit count materialized as a dense matrix
    'DENSE_QUBIT_LIMIT': int(os.environ.get('SCHWINGER_DENSE_QUBIT_LIMIT', '14')),
    # Largest qubit count held as a statevector (L = 10 needs 20)
    'STATE_QUBIT_LIMIT': int(os.environ.get('SCHWINGER_STATE_QUBIT_LIMIT', '24')),
    # Operators on more qubits than this rebuild their diagonal weights per call
    'PLAN_CACHE_QUBIT_LIMIT': int(os.environ.get('SCHWINGER_PLAN_CACHE_QUBIT_LIMIT', '16')),
    # Up to this size ground states use the dense eigensolver by default
    'DENSE_GROUND_STATE_QUBITS': int(os.environ.get('SCHWINGER_DENSE_GROUND_STATE_QUBITS', '12')),
    'WORKERS': int(os.environ.get('SCHWINGER_WORKERS', '1')),
    'JOBS': int(os.environ.get('SCHWINGER_JOBS', '1')),
    'LANCZOS_SEED': int(os.environ.get('SCHWINGER_LANCZOS_SEED', '1234')),
}

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'standard': {
            'format': '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'standard',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'schwinger_adapt': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}
