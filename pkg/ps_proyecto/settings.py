"""
Django settings for ps_proyecto project.

El proyecto no expone web: solo comandos de gestión (manage.py) que ejecutan
el pipeline de seguridad psicológica sobre corpus de pull requests.
"""

from pathlib import Path
import os

from dotenv import load_dotenv

# Build paths inside the project
BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv(BASE_DIR / ".env")


def _env_list(name, default):
    raw = os.getenv(name)
    if raw is None:
        return list(default)
    return [v.strip() for v in raw.split(",") if v.strip()]


# ==============================
# Seguridad y configuración base
# ==============================
SECRET_KEY = os.getenv("SECRET_KEY", "django-insecure-default-for-dev-only")

DEBUG = os.getenv("DEBUG", "False").lower() in ("1", "true", "yes")

ALLOWED_HOSTS = []

# ==============================
# Aplicaciones instaladas
# ==============================
INSTALLED_APPS = [
    "ps_app.apps.PsAppConfig",
]

# Sin base de datos: todo el estado vive en archivos JSONL/CSV/JSON
DATABASES = {}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# ==============================
# Internacionalización
# ==============================
LANGUAGE_CODE = 'es'
TIME_ZONE = 'UTC'
USE_I18N = True
USE_TZ = True

# ==============================
# Logging
# ==============================
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{asctime} {levelname} {name}: {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "ps_app": {
            "handlers": ["console"],
            "level": os.getenv("PS_LOG_LEVEL", "INFO"),
            "propagate": False,
        },
    },
}

# ==============================
# Celery (descarga paralela de repositorios)
# ==============================
CELERY_BROKER_URL = os.getenv("REDIS_URL", "redis://localhost:6379/0")
CELERY_RESULT_BACKEND = CELERY_BROKER_URL
CELERY_TASK_TIME_LIMIT = 6 * 3600
CELERY_TASK_SOFT_TIME_LIMIT = 6 * 3600 - 300

# ==============================
# GitHub REST v3
# ==============================
PS_GITHUB_API_URL = os.getenv("PS_GITHUB_API_URL", "https://api.github.com")
# Nombre de la variable de entorno que contiene el token (nunca el token)
PS_GITHUB_TOKEN_ENV = os.getenv("PS_GITHUB_TOKEN_ENV", "GITHUB_TOKEN")
PS_FETCH_PAGE_SIZE = int(os.getenv("PS_FETCH_PAGE_SIZE", "100"))
PS_FETCH_MAX_RETRIES = int(os.getenv("PS_FETCH_MAX_RETRIES", "5"))
PS_FETCH_TIMEOUT = float(os.getenv("PS_FETCH_TIMEOUT", "30"))
PS_FETCH_BACKOFF_BASE = float(os.getenv("PS_FETCH_BACKOFF_BASE", "2"))

# ==============================
# Corpus y tamaño de repositorio
# ==============================
# small <= 100 PRs, medium 101-1000, large > 1000
PS_REPO_SIZE_MEDIUM_MIN = int(os.getenv("PS_REPO_SIZE_MEDIUM_MIN", "101"))
PS_REPO_SIZE_LARGE_MIN = int(os.getenv("PS_REPO_SIZE_LARGE_MIN", "1001"))

PS_EMOJI_TABLE = Path(os.getenv("PS_EMOJI_TABLE", BASE_DIR / "ps_app" / "data" / "emoji_table.json"))

# ==============================
# Valores por defecto del estudio
# ==============================
PS_DEFAULTS = {
    "filter": {
        "top_n_by_stars": int(os.getenv("PS_TOP_N_BY_STARS", "200")),
        "excluded_labels": _env_list(
            "PS_EXCLUDED_LABELS",
            ["code-learning", "resource-list", "education", "non-english", "docs-only"],
        ),
    },
    "labeling": {
        "snapshot_date": os.getenv("PS_SNAPSHOT_DATE", "2019-06-30"),
        "window_months": int(os.getenv("PS_WINDOW_MONTHS", "12")),
        "recent_horizon_end": os.getenv("PS_RECENT_HORIZON_END", "2024-12-31"),
        "data_end": os.getenv("PS_DATA_END", "2025-01-01"),
        "censor_margin_months": int(os.getenv("PS_CENSOR_MARGIN_MONTHS", "12")),
        "gap_months": int(os.getenv("PS_GAP_MONTHS", "12")),
        "global_activity": os.getenv("PS_GLOBAL_ACTIVITY", "False").lower() in ("1", "true", "yes"),
    },
    "screening": {
        "skew_threshold": float(os.getenv("PS_SKEW_THRESHOLD", "3.0")),
        "minority_threshold": float(os.getenv("PS_MINORITY_THRESHOLD", "0.05")),
        "skew_type": int(os.getenv("PS_SKEW_TYPE", "3")),
    },
    "index": {
        "threshold_scope": os.getenv("PS_THRESHOLD_SCOPE", "global"),
        "merged_only": os.getenv("PS_MERGED_ONLY", "False").lower() in ("1", "true", "yes"),
    },
    "glm": {
        "tol": float(os.getenv("PS_GLM_TOL", "1e-8")),
        "max_iter": int(os.getenv("PS_GLM_MAX_ITER", "100")),
        "vif_limit": float(os.getenv("PS_VIF_LIMIT", "5.0")),
    },
    "models": [1, 2, 3],
    "unit": os.getenv("PS_UNIT", "pr"),
    "report_formats": ["csv", "json"],
}
