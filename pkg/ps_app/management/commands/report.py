import json
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from ps_app.pipeline import rerender_report


class Command(BaseCommand):
    help = 'Vuelve a generar las tablas a partir de los artefactos existentes en --out'

    def add_arguments(self, parser):
        parser.add_argument("--config", help="Archivo JSON del estudio (se usa 'out' y 'report_formats')")
        parser.add_argument("--out", help="Directorio de artefactos")
        parser.add_argument("--report-format", action="append", dest="report_formats", choices=["csv", "json"])

    def handle(self, *args, **options):
        out = options.get("out")
        formats = options.get("report_formats")
        if options.get("config"):
            path = Path(options["config"])
            try:
                with open(path, "r", encoding="utf-8") as fh:
                    data = json.load(fh)
            except (OSError, json.JSONDecodeError) as e:
                raise CommandError(f"No se pudo leer {path}: {e}", returncode=2)
            if not out and data.get("out"):
                out = str(path.resolve().parent / data["out"])
            formats = formats or data.get("report_formats")
        if not out:
            raise CommandError("Falta --out (o 'out' en --config).", returncode=2)
        if not Path(out).is_dir():
            raise CommandError(f"No existe el directorio de artefactos: {out}", returncode=2)

        try:
            texto = rerender_report(out, formats or ["csv", "json"])
        except Exception as e:
            raise CommandError(f"No se pudieron generar las tablas: {e}", returncode=1)
        self.stdout.write(texto)
        self.stdout.write(self.style.SUCCESS(f"Tablas regeneradas en {out}"))
