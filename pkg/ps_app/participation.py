"""
Líneas de tiempo de actividad (commits) y etiquetas de participación sostenida.
"""
import logging
from collections import defaultdict
from dataclasses import dataclass
from datetime import date, timezone as dt_timezone

import pandas as pd
from django.core.exceptions import ImproperlyConfigured
from django.utils.dateparse import parse_date

from .utils import months_to_days

logger = logging.getLogger(__name__)

SUSTAINED = "sustained"
NOT_SUSTAINED = "not_sustained"
CENSORED = "censored"
EXCLUDED_GAP_RETURN = "excluded_gap_return"

STATUSES = (SUSTAINED, NOT_SUSTAINED, CENSORED, EXCLUDED_GAP_RETURN)


@dataclass(frozen=True)
class ActivityTimeline:
    repo_full_name: str
    author: str
    commit_dates: tuple  # fechas UTC, ordenadas y sin repetir


@dataclass(frozen=True)
class ParticipationLabel:
    status: str
    sustainedp_or_not_12: int | None = None
    recent_sustainedp_or_not: int | None = None

    @property
    def is_labeled(self):
        return self.status in (SUSTAINED, NOT_SUSTAINED)


def _as_date(value, nombre):
    if isinstance(value, date):
        return value
    parsed = parse_date(str(value)) if value is not None else None
    if parsed is None:
        raise ImproperlyConfigured(f"Fecha inválida en '{nombre}': {value!r}")
    return parsed


@dataclass(frozen=True)
class LabelingConfig:
    snapshot_date: date = date(2019, 6, 30)
    window_months: int = 12
    recent_horizon_end: date = date(2024, 12, 31)
    data_end: date = date(2025, 1, 1)
    censor_margin_months: int = 12
    gap_months: int = 12
    global_activity: bool = False

    def __post_init__(self):
        for nombre in ("snapshot_date", "recent_horizon_end", "data_end"):
            object.__setattr__(self, nombre, _as_date(getattr(self, nombre), nombre))
        if self.window_months <= 0 or self.censor_margin_months <= 0 or self.gap_months <= 0:
            raise ImproperlyConfigured("window_months, censor_margin_months y gap_months deben ser > 0.")
        if self.snapshot_date >= self.data_end:
            raise ImproperlyConfigured(
                f"snapshot_date ({self.snapshot_date}) debe ser anterior a data_end ({self.data_end})."
            )
        if self.recent_horizon_end <= self.snapshot_date:
            raise ImproperlyConfigured("recent_horizon_end debe ser posterior a snapshot_date.")
        if (self.data_end - self.snapshot_date).days < self.window_days:
            raise ImproperlyConfigured(
                f"La ventana de {self.window_months} meses desde {self.snapshot_date} "
                f"supera data_end ({self.data_end})."
            )

    @property
    def window_days(self):
        return months_to_days(self.window_months)

    @property
    def censor_margin_days(self):
        return months_to_days(self.censor_margin_months)

    @classmethod
    def from_dict(cls, data):
        conocidos = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**conocidos)

    def to_dict(self):
        return {
            "snapshot_date": self.snapshot_date.isoformat(),
            "window_months": self.window_months,
            "recent_horizon_end": self.recent_horizon_end.isoformat(),
            "data_end": self.data_end.isoformat(),
            "censor_margin_months": self.censor_margin_months,
            "gap_months": self.gap_months,
            "global_activity": self.global_activity,
        }


# ==========================
# Líneas de tiempo
# ==========================
def _utc_day(instant):
    return instant.astimezone(dt_timezone.utc).date()


def build_timeline(commits, repo, author, global_activity=False):
    """None si el par no tiene commits (el contribuidor queda sin etiqueta)."""
    dias = {
        _utc_day(c.committed_at)
        for c in commits
        if c.author == author and (global_activity or c.repo_full_name == repo)
    }
    if not dias:
        return None
    return ActivityTimeline(repo, author, tuple(sorted(dias)))


def build_timelines(commits, pairs, global_activity=False):
    """Agrupa los commits una sola vez para todos los pares (repo, autor)."""
    por_par = defaultdict(set)
    por_autor = defaultdict(set)
    for c in commits:
        dia = _utc_day(c.committed_at)
        por_par[(c.repo_full_name, c.author)].add(dia)
        por_autor[c.author].add(dia)

    timelines = {}
    for repo, author in pairs:
        dias = por_autor.get(author) if global_activity else por_par.get((repo, author))
        if dias:
            timelines[(repo, author)] = ActivityTimeline(repo, author, tuple(sorted(dias)))
    return timelines


# ==========================
# Etiquetado
# ==========================
def detect_gap_return(timeline, gap_months, before=None):
    """True si dos commits consecutivos están separados por más de gap_months."""
    fechas = timeline.commit_dates
    if before is not None:
        fechas = [d for d in fechas if d <= before]
    limite = months_to_days(gap_months)
    return any((b - a).days > limite for a, b in zip(fechas, fechas[1:]))


def label_participation(timeline, config):
    snapshot = config.snapshot_date

    if detect_gap_return(timeline, config.gap_months, before=snapshot):
        return ParticipationLabel(EXCLUDED_GAP_RETURN)

    posteriores = [(d - snapshot).days for d in timeline.commit_dates if d > snapshot]
    horizonte = (config.recent_horizon_end - snapshot).days
    recent = int(any(delta <= horizonte for delta in posteriores))

    if any(delta <= config.window_days for delta in posteriores):
        return ParticipationLabel(SUSTAINED, 1, recent)

    ultimo = timeline.commit_dates[-1]
    if (config.data_end - ultimo).days <= config.censor_margin_days:
        return ParticipationLabel(CENSORED)

    return ParticipationLabel(NOT_SUSTAINED, 0, recent)


def label_contributors(corpus, config):
    """
    Etiqueta cada autor de PR por repositorio. Devuelve (labels, sin_timeline)
    donde sin_timeline son los pares sin ningún commit.
    """
    pairs = corpus.contributors()
    timelines = build_timelines(corpus.commits, pairs, config.global_activity)
    labels = {}
    sin_timeline = []
    for pair in pairs:
        timeline = timelines.get(pair)
        if timeline is None:
            sin_timeline.append(pair)
            continue
        labels[pair] = label_participation(timeline, config)

    if sin_timeline:
        logger.warning(f"{len(sin_timeline)} contribuidores sin commits quedan sin etiqueta")
    return labels, sin_timeline


def status_counts(labels):
    conteo = {s: 0 for s in STATUSES}
    for label in labels.values():
        conteo[label.status] += 1
    return conteo


def labels_to_frame(labels):
    filas = [
        (repo, author, l.status, l.sustainedp_or_not_12, l.recent_sustainedp_or_not)
        for (repo, author), l in labels.items()
    ]
    frame = pd.DataFrame(filas, columns=[
        "repo", "author", "status", "sustainedp_or_not_12", "recent_sustainedp_or_not",
    ])
    return frame.astype({"sustainedp_or_not_12": "Int64", "recent_sustainedp_or_not": "Int64"})


def write_labels_csv(labels, path):
    frame = labels_to_frame(labels)
    frame.to_csv(path, index=False, lineterminator="\n")
    return len(frame)
