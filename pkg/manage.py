#!/usr/bin/env python
"""Punto de entrada: python manage.py <fetch|ingest|cues|screen|label|index|fit|report|run> ..."""
import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'ps_proyecto.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "No se pudo importar Django. ¿Está instalado (pip install -r requirements.txt) "
            "y activo el entorno virtual?"
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
