"""
Django settings for rbm_lab project.
"""
import os
import re
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Only used for signing; nothing is served.
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'django-insecure-rbm-lab-dev-key')

DEBUG = os.getenv('DEBUG', 'False').lower() in ('true', '1', 'yes')

ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    'django.contrib.contenttypes',
    # Third party
    'rest_framework',
    # Local apps
    'boltzmann',
]

# Database - PostgreSQL when DATABASE_URL is set, sqlite otherwise
DATABASE_URL = os.getenv('DATABASE_URL', '')

db_match = re.match(r'postgres://([^:]+):([^@]+)@([^:]+):(\d+)/(.+)', DATABASE_URL)
if db_match:
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.postgresql',
            'NAME': db_match.group(5),
            'USER': db_match.group(1),
            'PASSWORD': db_match.group(2),
            'HOST': db_match.group(3),
            'PORT': db_match.group(4),
        }
    }
else:
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.sqlite3',
            'NAME': BASE_DIR / 'db.sqlite3',
        }
    }

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Logging: everything goes to stderr so stdout stays machine-readable
RBM_LOG_LEVEL = os.getenv('RBM_LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'stderr': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'boltzmann': {
            'handlers': ['stderr'],
            'level': RBM_LOG_LEVEL,
            'propagate': False,
        },
    },
    'root': {
        'handlers': ['stderr'],
        'level': 'WARNING',
    },
}

# Celery Configuration
REDIS_URL = os.getenv('REDIS_URL', '')
CELERY_BROKER_URL = REDIS_URL or 'memory://'
CELERY_RESULT_BACKEND = REDIS_URL or 'cache+memory://'
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = 'UTC'
CELERY_TASK_TRACK_STARTED = True
# Without a broker, trials dispatched with --jobs run inline
CELERY_TASK_ALWAYS_EAGER = os.getenv(
    'CELERY_TASK_ALWAYS_EAGER', 'False' if REDIS_URL else 'True'
).lower() in ('true', '1', 'yes')
CELERY_TASK_EAGER_PROPAGATES = False

# Likelihood evaluation
RBM_ENUMERATION_CAP = int(os.getenv('RBM_ENUMERATION_CAP', '25'))
RBM_AIS_PARTICLES = int(os.getenv('RBM_AIS_PARTICLES', '100'))
RBM_AIS_INTERMEDIATE = int(os.getenv('RBM_AIS_INTERMEDIATE', '10000'))

# Experiment outputs
RBM_OUTPUT_DIR = Path(os.getenv('RBM_OUTPUT_DIR', BASE_DIR / 'runs'))
