"""
Índice de seguridad psicológica (0-10): PR -> contribuidor -> repositorio.
"""
import logging
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from django.core.exceptions import ImproperlyConfigured

from .participation import SUSTAINED, NOT_SUSTAINED

logger = logging.getLogger(__name__)

GLOBAL = "global"
PER_REPOSITORY = "per_repository"
SCOPES = (GLOBAL, PER_REPOSITORY)

COUNT_CUES = ("pr_comment_num", "num_comments_con", "num_participant")

# (bullet, cue, condición); "high" se resuelve contra CueThresholds
BULLETS = (
    (1, "merged_or_not", "any"),
    (2, "pr_comment_num", "high"),
    (3, "has_exchange", "flag"),
    (4, "contrib_comment", "flag"),
    (5, "num_comments_con", "high"),
    (6, "inte_comment", "flag"),
    (7, "reviewer_comment", "flag"),
    (8, "other_comment", "flag"),
    (9, "num_participant", "high"),
    (10, "at_tag", "flag"),
)

COUPLING_WARNING = (
    "El score de PR solo es distinto de cero para contribuidores sostenidos: el índice PS "
    "depende del mismo resultado que los modelos intentan explicar."
)


@dataclass(frozen=True)
class CueThresholds:
    scope: str
    global_values: dict
    per_repository: dict = field(default_factory=dict)

    def value(self, cue, repo=None):
        if self.scope == PER_REPOSITORY:
            try:
                return self.per_repository[repo][cue]
            except KeyError:
                raise KeyError(f"Sin umbral de '{cue}' para el repositorio {repo!r}")
        return self.global_values[cue]

    def is_high(self, cue, count, repo=None):
        # estrictamente mayor: un empate con la mediana no es "high"
        return count > self.value(cue, repo)

    def to_dict(self):
        return {
            "scope": self.scope,
            "global": dict(self.global_values),
            "per_repository": {r: dict(v) for r, v in sorted(self.per_repository.items())},
        }


def _medians(vectors):
    return {
        cue: float(np.median([getattr(cv, cue) for cv in vectors]))
        for cue in COUNT_CUES
    }


def compute_thresholds(cue_map, scope=GLOBAL):
    """Mediana de cada cue de conteo sobre los PRs del ámbito."""
    if scope not in SCOPES:
        raise ImproperlyConfigured(f"threshold_scope desconocido: {scope!r}")
    if not cue_map:
        raise ValueError("No hay PRs para calcular umbrales.")

    global_values = _medians(list(cue_map.values()))
    per_repo = {}
    if scope == PER_REPOSITORY:
        grupos = defaultdict(list)
        for (repo, _), cv in cue_map.items():
            grupos[repo].append(cv)
        per_repo = {repo: _medians(vs) for repo, vs in grupos.items()}
    return CueThresholds(scope=scope, global_values=global_values, per_repository=per_repo)


# ==========================
# Scores
# ==========================
def score_pr(cues, label, thresholds, repo=None, merged_only=False, active_bullets=None):
    """
    Devuelve None (marca de omisión) si el contribuidor está censurado,
    excluido o sin etiqueta; 0 si no es sostenido; si no, el número de
    condiciones cumplidas.
    """
    if label is None or label.status not in (SUSTAINED, NOT_SUSTAINED):
        return None
    if label.status != SUSTAINED:
        return 0

    score = 0
    for bullet, cue, condicion in BULLETS:
        if active_bullets is not None and bullet not in active_bullets:
            continue
        valor = getattr(cues, cue)
        if condicion == "any":
            ok = valor == 1 if merged_only else valor in (0, 1)
        elif condicion == "high":
            ok = thresholds.is_high(cue, valor, repo)
        else:
            ok = valor == 1
        score += int(ok)
    return score


def contributor_index(scores):
    """Media de los scores; None si no hay ninguno."""
    scores = list(scores)
    if not scores:
        return None
    return sum(scores) / len(scores)


def repository_index(indices):
    indices = list(indices)
    if not indices:
        raise ValueError("Se necesita al menos un índice de contribuidor.")
    return sum(indices) / len(indices)


def active_bullets_for(retained_cues):
    """Bullets cuyo cue no fue excluido en el cribado."""
    retained = set(retained_cues)
    return frozenset(b for b, cue, _ in BULLETS if cue in retained)


@dataclass(frozen=True)
class PsSummary:
    pr_scores: dict
    contributor_index: dict
    repository_index: dict
    skipped_prs: tuple = ()
    omitted_contributors: tuple = ()

    def counts(self):
        return {
            "scored_prs": len(self.pr_scores),
            "skipped_prs": len(self.skipped_prs),
            "contributors": len(self.contributor_index),
            "omitted_contributors": len(self.omitted_contributors),
            "repositories": len(self.repository_index),
        }


def build_summary(corpus, cue_map, labels, thresholds, merged_only=False, active_bullets=None):
    pr_scores = {}
    skipped = []
    por_contribuidor = defaultdict(list)
    for pr in corpus.pulls:
        pair = (pr.repo_full_name, pr.author)
        score = score_pr(
            cue_map[pr.key], labels.get(pair), thresholds,
            repo=pr.repo_full_name, merged_only=merged_only, active_bullets=active_bullets,
        )
        if score is None:
            skipped.append(pr.key)
            continue
        pr_scores[pr.key] = score
        por_contribuidor[pair].append(score)

    contrib = {}
    omitidos = []
    for pair in corpus.contributors():
        idx = contributor_index(por_contribuidor.get(pair, ()))
        if idx is None:
            omitidos.append(pair)
        else:
            contrib[pair] = idx

    por_repo = defaultdict(list)
    for (repo, _), idx in contrib.items():
        por_repo[repo].append(idx)
    repos = {repo: repository_index(v) for repo, v in por_repo.items()}

    if omitidos:
        logger.info(f"{len(omitidos)} contribuidores sin PRs puntuables se omiten del índice")
    logger.warning(COUPLING_WARNING)
    return PsSummary(
        pr_scores=pr_scores,
        contributor_index=contrib,
        repository_index=repos,
        skipped_prs=tuple(skipped),
        omitted_contributors=tuple(omitidos),
    )


# ==========================
# Artefactos
# ==========================
def repository_index_frame(repository_index_map):
    """Orden de la tabla: índice descendente, empates por nombre."""
    filas = sorted(repository_index_map.items(), key=lambda kv: (-kv[1], kv[0]))
    return pd.DataFrame(filas, columns=["repo", "ps_index"])


def write_repository_index_csv(repository_index_map, path):
    frame = repository_index_frame(repository_index_map)
    frame["ps_index"] = frame["ps_index"].map(lambda v: f"{v:.3f}")
    frame.to_csv(path, index=False, lineterminator="\n")
    return len(frame)


def write_contributor_index_csv(summary, path):
    filas = [
        (repo, author, f"{idx:.6f}")
        for (repo, author), idx in summary.contributor_index.items()
    ]
    frame = pd.DataFrame(filas, columns=["repo", "author", "ps_index"])
    frame.to_csv(path, index=False, lineterminator="\n")
    return len(frame)


def read_repository_index_csv(path):
    frame = pd.read_csv(path, dtype={"repo": str, "ps_index": float})
    return dict(zip(frame["repo"], frame["ps_index"]))
