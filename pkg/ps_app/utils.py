# utils.py
import hashlib
import json
import math
from datetime import timezone as dt_timezone
from pathlib import Path


# ==========================
# JSONL
# ==========================
def iter_jsonl(path):
    """Itera (número de línea, texto) de un archivo JSONL, saltando líneas en blanco."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line:
                yield lineno, line


def dumps_canonical(obj):
    """JSON determinista: claves ordenadas, UTF-8 sin escapar, separadores fijos."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def write_jsonl(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(dumps_canonical(row))
            fh.write("\n")


def append_jsonl(fh, row):
    fh.write(dumps_canonical(row))
    fh.write("\n")
    fh.flush()


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, sort_keys=True, ensure_ascii=False, indent=2, allow_nan=False)
        fh.write("\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def sha256_of(obj):
    return hashlib.sha256(dumps_canonical(obj).encode("utf-8")).hexdigest()


# ==========================
# Fechas
# ==========================
def format_timestamp(value):
    """datetime aware -> RFC 3339 en UTC con sufijo Z."""
    if value is None:
        return None
    value = value.astimezone(dt_timezone.utc)
    if value.microsecond:
        return value.strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    return value.strftime("%Y-%m-%dT%H:%M:%SZ")


def months_to_days(months):
    """12 meses consecutivos = 365 días; el resto de meses en la misma proporción."""
    return months * 365.0 / 12.0


def clean_float(value):
    """NaN/inf no son JSON válido: se guardan como null."""
    if value is None:
        return None
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        return None
    return value
