"""
Django settings for config project.

Generated by 'django-admin startproject' using Django 5.2.8.

For more information on this file, see
https://docs.djangoproject.com/en/5.2/topics/settings/

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# Quick-start development settings - unsuitable for production
# See https://docs.djangoproject.com/en/5.2/howto/deployment/checklist/

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get(
    'DJANGO_SECRET_KEY',
    'django-insecure-c3rt1f1c4c10n-d3s1gu4ld4d3s-p01nc4r3-w1rt1ng3r',
)

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.environ.get('DJANGO_DEBUG', '1') == '1'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',

    'certificacion',
]

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
            ],
        },
    },
]


# Database
# https://docs.djangoproject.com/en/5.2/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.environ.get('CERTIFICACION_DB', str(BASE_DIR / 'certificacion.sqlite3')),
    }
}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = 'es-es'

TIME_ZONE = 'America/Santiago'

USE_I18N = True

USE_TZ = True


# Default primary key field type
# https://docs.djangoproject.com/en/5.2/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Logging
# https://docs.djangoproject.com/en/5.2/topics/logging/

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'certificacion': {
            'handlers': ['console'],
            'level': os.environ.get('CERTIFICACION_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}


# ============================================================
# ⚙️ PARÁMETROS NUMÉRICOS DE LA CERTIFICACIÓN
# ============================================================
# Valores por defecto de solvers y tolerancias. certificacion/conf.py
# los mezcla con sus propios defaults, así que basta declarar los que cambian.

CERTIFICACION = {
    # Transporte exacto: máximo de pares de átomos n_mu * n_nu
    'PAIR_CAP': int(os.environ.get('CERTIFICACION_PAIR_CAP', 250_000)),
    # Sinkhorn con recocido de epsilon
    'ENTROPIC_STAGES': 10,
    'ENTROPIC_EPS_FACTOR': 1e-3,
    'ENTROPIC_ROUNDS': 10_000,
    'ENTROPIC_TOL': 1e-6,
    # Brecha relativa entre el plan redondeado y la cota dual que basta para aceptar
    'ENTROPIC_GAP_RTOL': 5e-3,
    # Restricción |int |phi|^{q-2} phi| <= tol * int |phi|^{q-1}
    'CONSTRAINT_TOL': 1e-8,
    'SHIFT_TOL': 1e-12,
    'MASS_TOL': 1e-12,
    'MARGINAL_TOL': 1e-8,
    'INFEASIBLE_TOL': 1e-10,
    # Autovalor de Neumann para p != 2
    'EIGEN_MAX_ITER': 20_000,
    'EIGEN_STALL_WINDOW': 50,
    'EIGEN_STALL_RTOL': 1e-10,
    'DENSITY_DRIFT_TOL': 1e-6,
    # Tolerancias de los estudios de geodésicas y de cajas delgadas
    'CONVEXITY_TOL': 1e-4,
    'SCALING_RTOL': 0.05,
    'DEFAULT_RESOLUTION': 32,
    'DEFAULT_SOLVER': 'auto',
    'SWEEP_WORKERS': int(os.environ.get('CERTIFICACION_WORKERS', 4)),
}
