import re
from datetime import datetime, time, timezone as dt_timezone

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured
from django.core.management.base import BaseCommand, CommandError
from django.utils.dateparse import parse_date, parse_datetime

from ps_app.github_fetch import FetchError, FetchJob, RepositoryNotFound, fetch_repository
from ps_app.tasks import fetch_repository_task
from ps_proyecto.celery import worker_available

ENV_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
# Prefijos de tokens de GitHub: un valor así es el secreto, no el nombre de la variable
TOKEN_PREFIXES = ("ghp_", "gho_", "ghu_", "ghs_", "ghr_", "github_pat_")


def parse_since(value):
    if not value:
        return None
    dt = parse_datetime(value)
    if dt is None:
        d = parse_date(value)
        if d is None:
            raise ImproperlyConfigured(f"--since inválido: {value!r} (RFC 3339 o AAAA-MM-DD)")
        dt = datetime.combine(d, time.min)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=dt_timezone.utc)
    return dt.astimezone(dt_timezone.utc)


class Command(BaseCommand):
    help = 'Exporta repositorios de GitHub (REST v3) al formato canónico del corpus'

    def add_arguments(self, parser):
        parser.add_argument("--repo", action="append", required=True, dest="repos",
                            help="owner/name (repetible)")
        parser.add_argument("--out", required=True, help="Directorio de salida")
        parser.add_argument("--since", help="Solo PRs creados y commits desde esta fecha")
        parser.add_argument("--token-env", default=settings.PS_GITHUB_TOKEN_ENV,
                            help="NOMBRE de la variable de entorno con el token (nunca el token)")
        parser.add_argument("--page-size", type=int, default=settings.PS_FETCH_PAGE_SIZE)
        parser.add_argument("--category", action="append", default=[], dest="categories",
                            help="Etiqueta de categoría para repos.jsonl (repetible)")
        parser.add_argument("--local", action="store_true",
                            help="No usar Celery aunque haya workers disponibles")

    def handle(self, *args, **options):
        token_env = options["token_env"]
        if not ENV_NAME_RE.match(token_env) or token_env.startswith(TOKEN_PREFIXES):
            raise CommandError(
                "--token-env recibe el nombre de una variable de entorno, no el token.", returncode=2,
            )
        try:
            since = parse_since(options.get("since"))
            jobs = [
                FetchJob(
                    repo_full_name=repo,
                    output_dir=options["out"],
                    since=since,
                    auth_token_source=token_env,
                    page_size=options["page_size"],
                    category_labels=tuple(options["categories"]),
                )
                for repo in options["repos"]
            ]
        except ImproperlyConfigured as e:
            raise CommandError(str(e), returncode=2)

        # Con workers de Celery cada repositorio va a su propia tarea
        if not options["local"] and len(jobs) > 1 and worker_available():
            for job in jobs:
                result = fetch_repository_task.delay(job.to_dict())
                self.stdout.write(self.style.SUCCESS(f"{job.repo_full_name}: enviado a Celery ({result.id})"))
            return

        fallos = []
        for job in jobs:
            try:
                report = fetch_repository(job)
            except (RepositoryNotFound, FetchError) as e:
                fallos.append(f"{job.repo_full_name}: {e}")
                self.stdout.write(self.style.ERROR(f"{job.repo_full_name}: {e}"))
                continue
            self.stdout.write(self.style.SUCCESS(
                f"{job.repo_full_name}: {report.pulls} PRs, {report.comments} comentarios, "
                f"{report.commits} commits, {report.contexts} contextos "
                f"({report.rate_limit_waits} esperas por rate limit) -> {job.repo_dir}"
            ))

        if fallos:
            raise CommandError("; ".join(fallos), returncode=1)
