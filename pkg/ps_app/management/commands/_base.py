"""
Base común de los subcomandos del pipeline.

Códigos de salida: 0 éxito, 1 fallo en una etapa, 2 error de configuración.
"""
import logging

from django.core.exceptions import ImproperlyConfigured
from django.core.management.base import BaseCommand, CommandError

from ps_app.pipeline import load_pipeline_config, run_pipeline

logger = logging.getLogger(__name__)


class PipelineCommand(BaseCommand):
    stage = "report"

    def add_arguments(self, parser):
        parser.add_argument("--config", help="Archivo JSON del estudio")
        parser.add_argument("--corpus", nargs="+", help="Directorio(s) de corpus canónico")
        parser.add_argument("--out", help="Directorio de artefactos")

        parser.add_argument("--top-n", type=int, dest="top_n_by_stars")
        parser.add_argument("--exclude-label", action="append", dest="excluded_labels",
                            help="Etiqueta de categoría excluida (repetible)")

        parser.add_argument("--snapshot-date")
        parser.add_argument("--window-months", type=int)
        parser.add_argument("--recent-horizon-end")
        parser.add_argument("--data-end")
        parser.add_argument("--censor-margin-months", type=int)
        parser.add_argument("--gap-months", type=int)
        parser.add_argument("--global-activity", action="store_true", default=None,
                            help="Actividad de commits en cualquier repositorio del corpus")

        parser.add_argument("--skew-threshold", type=float)
        parser.add_argument("--minority-threshold", type=float)
        parser.add_argument("--skew-type", type=int, choices=[1, 2, 3])

        parser.add_argument("--threshold-scope", choices=["global", "per_repository"])
        parser.add_argument("--merged-only", action="store_true", default=None,
                            help="El bullet de merge solo cuenta PRs aceptados")

        parser.add_argument("--models", nargs="+", type=int, choices=[1, 2, 3])
        parser.add_argument("--unit", choices=["pr", "contributor"])
        parser.add_argument("--report-format", action="append", dest="report_formats",
                            choices=["csv", "json"])

    def overrides(self, options):
        return {
            "corpus": options.get("corpus"),
            "out": options.get("out"),
            "filter": {
                "top_n_by_stars": options.get("top_n_by_stars"),
                "excluded_labels": options.get("excluded_labels"),
            },
            "labeling": {
                "snapshot_date": options.get("snapshot_date"),
                "window_months": options.get("window_months"),
                "recent_horizon_end": options.get("recent_horizon_end"),
                "data_end": options.get("data_end"),
                "censor_margin_months": options.get("censor_margin_months"),
                "gap_months": options.get("gap_months"),
                "global_activity": options.get("global_activity"),
            },
            "screening": {
                "skew_threshold": options.get("skew_threshold"),
                "minority_threshold": options.get("minority_threshold"),
                "skew_type": options.get("skew_type"),
            },
            "index": {
                "threshold_scope": options.get("threshold_scope"),
                "merged_only": options.get("merged_only"),
            },
            "models": options.get("models"),
            "unit": options.get("unit"),
            "report_formats": options.get("report_formats"),
        }

    def handle(self, *args, **options):
        try:
            config = load_pipeline_config(options.get("config"), self.overrides(options))
        except ImproperlyConfigured as e:
            raise CommandError(str(e), returncode=2)

        try:
            run = run_pipeline(config, until=self.stage)
        except ImproperlyConfigured as e:
            raise CommandError(str(e), returncode=2)
        except Exception as e:
            raise CommandError(f"Fallo en el pipeline ({e.__class__.__name__}): {e}", returncode=1)

        for aviso in run.manifest.get("warnings", []):
            self.stdout.write(self.style.WARNING(aviso))
        self.summarize(run)
        self.stdout.write(self.style.SUCCESS(f"Etapas {', '.join(run.manifest['stages_completed'])} -> {config.out}"))

    def summarize(self, run):
        pass
