from celery import shared_task

from .github_fetch import FetchJob, fetch_repository


@shared_task
def fetch_repository_task(job_data):
    """Descarga un repositorio en un worker; devuelve el FetchReport como dict."""
    job = FetchJob.from_dict(job_data)
    return fetch_repository(job).to_dict()
