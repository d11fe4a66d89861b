
import os
from pathlib import Path

import psutil
from decouple import config

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='causal-embed-cli-only')
DEBUG = config('DEBUG', default=False, cast=bool)
ALLOWED_HOSTS = [h.strip() for h in config('ALLOWED_HOSTS', default='localhost').split(',')]
ENVIRONMENT = config('ENVIRONMENT', default='development')

INSTALLED_APPS = [
    'rest_framework',
    'apps.common',
    'apps.scm',
    'apps.graphs',
    'apps.embeddings',
    'apps.marginal',
    'apps.merging',
    'apps.fixtures',
    'apps.cli',
]

# The library is file-driven; nothing is persisted.
DATABASES = {}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# ============ NUMERIC TOLERANCES ============
PROBABILITY_TOLERANCE = config('PROBABILITY_TOLERANCE', default=1e-9, cast=float)
CONSISTENCY_TOLERANCE = config('CONSISTENCY_TOLERANCE', default=1e-9, cast=float)
KL_SMOOTHING = config('KL_SMOOTHING', default=1e-9, cast=float)

# ============ PARALLELISM ============
# Caps the worker pool used by the error grid and certification
CAUSAL_EMBED_THREADS = config(
    'CAUSAL_EMBED_THREADS',
    default=psutil.cpu_count(logical=True) or 1,
    cast=int,
)

# ============ DATASET MERGING ============
DEFAULT_BIN_WIDTH = config('DEFAULT_BIN_WIDTH', default=25.0, cast=float)
DEFAULT_BIN_ORIGIN = config('DEFAULT_BIN_ORIGIN', default=0.0, cast=float)
DEFAULT_KNN_K = config('DEFAULT_KNN_K', default=2, cast=int)

# ============ ECOSYSTEM GENERATOR ============
ECOSYSTEM_X1_ROWS = config('ECOSYSTEM_X1_ROWS', default=2000, cast=int)
ECOSYSTEM_X2_ROWS = config('ECOSYSTEM_X2_ROWS', default=4000, cast=int)
ECOSYSTEM_EVAL_ROWS = config('ECOSYSTEM_EVAL_ROWS', default=100000, cast=int)
FIXTURE_SEED = config('FIXTURE_SEED', default=0, cast=int)

# ============ REST FRAMEWORK SETTINGS ============
# Only the serializers are used, to validate model, embedding and problem files
REST_FRAMEWORK = {
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [],
    'UNAUTHENTICATED_USER': None,
}

# ============ LOGGING CONFIGURATION ============
LOG_FILE = config('CAUSAL_EMBED_LOG_FILE', default=str(BASE_DIR / 'logs' / 'causal_embed.log'))
LOG_LEVEL = config('CAUSAL_EMBED_LOG_LEVEL', default='INFO')

try:
    Path(LOG_FILE).parent.mkdir(parents=True, exist_ok=True)
except (PermissionError, OSError):
    # Fallback to current directory if the configured location is not writable
    LOG_FILE = os.path.join('.', 'logs', 'causal_embed.log')
    Path(LOG_FILE).parent.mkdir(parents=True, exist_ok=True)

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'standard': {
            'format': '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        },
    },
    'handlers': {
        'file': {
            'class': 'logging.handlers.RotatingFileHandler',
            'filename': LOG_FILE,
            'maxBytes': 10 * 1024 * 1024,  # 10MB per file
            'backupCount': 5,
            'formatter': 'standard',
        },
        'console': {
            'class': 'logging.StreamHandler',
            'level': 'WARNING',
            'formatter': 'standard',
        },
    },
    'loggers': {
        'apps': {
            'handlers': ['file', 'console'],
            'level': LOG_LEVEL,
            'propagate': True,
        },
    },
}
