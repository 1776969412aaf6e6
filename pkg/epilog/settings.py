"""
Django settings for the epilog project.

Everything tunable comes from the environment (optionally a ``.env`` file).
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# Environment (.env) first, so every getenv below sees it
load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('SECRET_KEY', 'django-insecure-epilog-dev-key')
DEBUG = os.getenv('DEBUG', 'False') == 'True'

ALLOWED_HOSTS = [h.strip() for h in os.getenv('ALLOWED_HOSTS', 'localhost,127.0.0.1').split(',') if h.strip()]

# ==============================================================================
# APPLICATIONS
# ==============================================================================

# epidemic's `shell` command replaces Django's own.
INSTALLED_APPS = [
    'core',
    'epidemic',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.middleware.common.CommonMiddleware',
]

ROOT_URLCONF = 'epilog.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [],
        },
    },
]

WSGI_APPLICATION = 'epilog.wsgi.application'

# No persistence layer: models, graphs and runs live in files.
DATABASES = {}

USE_I18N = False
USE_TZ = True
TIME_ZONE = 'UTC'
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# ==============================================================================
# SIMULATION
# ==============================================================================

EXACT_MAX_COINS = int(os.getenv('EXACT_MAX_COINS', '24'))
EXACT_CHUNK_BITS = int(os.getenv('EXACT_CHUNK_BITS', '16'))
SIMULATION_WORKERS = int(os.getenv('SIMULATION_WORKERS', '1'))
OUTPUT_DIR = os.getenv('OUTPUT_DIR', 'output')

# ==============================================================================
# LOGGING
# ==============================================================================

LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {'format': '%(levelname)s %(name)s: %(message)s'},
    },
    'handlers': {
        'console': {'class': 'logging.StreamHandler', 'formatter': 'simple'},
    },
    'loggers': {
        'epidemic': {'handlers': ['console'], 'level': LOG_LEVEL},
        'core': {'handlers': ['console'], 'level': LOG_LEVEL},
    },
}
