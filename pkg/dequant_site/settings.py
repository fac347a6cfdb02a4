"""
Django settings for the dequant_site project.

The project hosts a single app, ``dequant``, with the simulation backends,
the certification harness and the ``dequant`` management command. There are
no models and no web surface; Django provides configuration, the command
framework and the test runner, Celery provides the work queue for backend
runs and sampling chunks.

Every DEQUANT_* value can be overridden with an environment variable of the
same name.
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


def _env_float(name, default):
    return float(os.environ.get(name, default))


def _env_int(name, default):
    return int(os.environ.get(name, default))


# Only used by Django internals; nothing is signed.
SECRET_KEY = os.environ.get('DJANGO_SECRET_KEY', 'dequant-local-only')

DEBUG = os.environ.get('DJANGO_DEBUG', '') == '1'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'dequant',
]

# No persistent storage: results are printed, never stored.
DATABASES = {}

TIME_ZONE = 'UTC'

USE_TZ = True


# Simulation settings

DEQUANT_DENSE_MAX_QUBITS = _env_int('DEQUANT_DENSE_MAX_QUBITS', 26)
DEQUANT_NORM_TOLERANCE = _env_float('DEQUANT_NORM_TOLERANCE', 1e-10)
DEQUANT_DISTRIBUTION_TOLERANCE = _env_float('DEQUANT_DISTRIBUTION_TOLERANCE', 1e-9)
DEQUANT_SPLIT_TOLERANCE = _env_float('DEQUANT_SPLIT_TOLERANCE', 1e-10)
DEQUANT_PROBABILITY_CUTOFF = _env_float('DEQUANT_PROBABILITY_CUTOFF', 1e-14)
DEQUANT_DEFAULT_BLOCK_CAP = _env_int('DEQUANT_DEFAULT_BLOCK_CAP', 3)
DEQUANT_DEFAULT_SEED = _env_int('DEQUANT_DEFAULT_SEED', 0)
DEQUANT_SHOT_CHUNK = _env_int('DEQUANT_SHOT_CHUNK', 4096)
DEQUANT_MAX_EXPANDED_QUBITS = _env_int('DEQUANT_MAX_EXPANDED_QUBITS', 26)
DEQUANT_CERTIFICATE_SCHEMA = 1
DEQUANT_LOG_LEVEL = os.environ.get('DEQUANT_LOG_LEVEL', 'WARNING')


# Celery

# Without a broker URL every task runs in-process; point this at Redis
# (e.g. redis://localhost:6379/0) to fan runs out over workers.
CELERY_BROKER_URL = os.environ.get('CELERY_BROKER_URL', 'memory://')
CELERY_RESULT_BACKEND = os.environ.get('CELERY_RESULT_BACKEND', 'cache+memory://')
CELERY_TASK_ALWAYS_EAGER = 'CELERY_BROKER_URL' not in os.environ
CELERY_TASK_EAGER_PROPAGATES = True

CELERY_ACCEPT_CONTENT = ['application/json']
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TASK_SERIALIZER = 'json'
CELERY_TIMEZONE = 'UTC'
