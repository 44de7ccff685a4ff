"""
Aplicación Celery: descarga de repositorios en paralelo (un worker por repo).
Broker y backend en Redis (REDIS_URL).
"""
import logging
import os

from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'ps_proyecto.settings')

logger = logging.getLogger(__name__)

app = Celery('ps_proyecto')
app.config_from_object('django.conf:settings', namespace='CELERY')
app.autodiscover_tasks()


def worker_available(timeout=1.0):
    """True si algún worker responde; sin Redis o sin workers se trabaja en local."""
    try:
        return bool(app.control.inspect(timeout=timeout).active())
    except Exception as e:
        logger.warning(f"Celery no disponible: {e}")
        return False
