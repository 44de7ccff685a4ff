"""
Carga, validación, filtrado y persistencia del corpus canónico (JSONL).

Archivos de un directorio de corpus:
    pulls.jsonl                 (obligatorio; comentarios embebidos opcionales)
    comments.jsonl              (opcional; clave repo_full_name + pr_number)
    commits.jsonl               (obligatorio)
    contributor_context.jsonl   (opcional)
    repos.jsonl                 (obligatorio)
"""
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .forms import (
    CommentForm, SeparateCommentForm, PullRequestForm, CommitForm,
    ContributorContextForm, RepoMetaForm, repo_size_for,
)
from .records import (
    CommentRecord, PullRequestRecord, CommitEvent, ContributorContext, RepoMeta,
    IngestError, Corpus, CONTRIBUTOR, INTEGRATOR, REVIEWER, OTHER,
)
from .utils import iter_jsonl, write_jsonl, format_timestamp

logger = logging.getLogger(__name__)

PULLS_FILE = "pulls.jsonl"
COMMENTS_FILE = "comments.jsonl"
COMMITS_FILE = "commits.jsonl"
CONTEXT_FILE = "contributor_context.jsonl"
REPOS_FILE = "repos.jsonl"
ERRORS_FILE = "ingest_errors.jsonl"

REQUIRED_FILES = (PULLS_FILE, COMMITS_FILE, REPOS_FILE)

# Asociaciones de GitHub que cuentan como integrador
INTEGRATOR_ASSOCIATIONS = {"OWNER", "MEMBER"}

# La regla de roles es nuestra: el dataset original ya traía los roles calculados
ROLE_RULE_NOTE = (
    "Roles derivados cuando faltan: contributor = autor del PR; integrator = quien "
    "hizo merge/cierre o asociación OWNER/MEMBER; reviewer = autor de una review "
    "formal; other = el resto. Regla propia, no tomada del dataset original."
)


class CorpusError(Exception):
    """Falta un archivo obligatorio del corpus."""


@dataclass(frozen=True)
class FilterConfig:
    top_n_by_stars: int = 200
    excluded_labels: frozenset = field(default_factory=frozenset)


# ==========================
# Roles
# ==========================
def derive_comment_role(comment_author, pr_author, author_association=None,
                        integrators=(), reviewers=()):
    if comment_author == pr_author:
        return CONTRIBUTOR
    if comment_author in integrators or (author_association or "").upper() in INTEGRATOR_ASSOCIATIONS:
        return INTEGRATOR
    if comment_author in reviewers:
        return REVIEWER
    return OTHER


# ==========================
# Carga
# ==========================
def _validate_lines(path, form_class, errors):
    """Valida cada línea con su formulario; devuelve (línea, cleaned_data, datos crudos)."""
    nombre = path.name
    for lineno, line in iter_jsonl(path):
        try:
            data = json.loads(line)
        except json.JSONDecodeError as e:
            errors.append(IngestError(nombre, lineno, "__line__", f"JSON inválido: {e.msg}"))
            continue
        if not isinstance(data, dict):
            errors.append(IngestError(nombre, lineno, "__line__", "Se esperaba un objeto JSON."))
            continue
        form = form_class(data=data)
        if not form.is_valid():
            for campo, mensajes in sorted(form.errors.items()):
                for msg in mensajes:
                    errors.append(IngestError(nombre, lineno, campo, msg))
            continue
        yield lineno, form.cleaned_data, data


def _comment_from(cleaned, pr_author, integrators, reviewers):
    role = cleaned.get("role") or derive_comment_role(
        cleaned["author"], pr_author, cleaned.get("author_association"), integrators, reviewers,
    )
    return CommentRecord(
        author=cleaned["author"],
        role=role,
        body=cleaned.get("body") or "",
        created_at=cleaned["created_at"],
    )


def load_corpus(path):
    """
    Carga y valida un directorio de corpus. Las líneas inválidas quedan en
    corpus.errors (archivo, línea, campo) y el resto se carga.
    """
    path = Path(path)
    for nombre in REQUIRED_FILES:
        if not (path / nombre).is_file():
            raise CorpusError(f"Falta el archivo obligatorio {path / nombre}")

    errors = []

    # 1) Pull requests (con comentarios embebidos)
    pr_rows = []
    vistos = set()
    for lineno, cleaned, data in _validate_lines(path / PULLS_FILE, PullRequestForm, errors):
        key = (cleaned["repo_full_name"], cleaned["pr_number"])
        if key in vistos:
            errors.append(IngestError(PULLS_FILE, lineno, "pr_number", f"PR duplicado {key[0]}#{key[1]}."))
            continue

        integrators = {u for u in (cleaned.get("merged_by"), cleaned.get("closed_by")) if u}
        reviewers = set(cleaned.get("reviewers") or [])
        embebidos = data.get("comments") or []
        if not isinstance(embebidos, list):
            errors.append(IngestError(PULLS_FILE, lineno, "comments", "Se esperaba una lista de comentarios."))
            continue
        comentarios = []
        invalido = False
        for i, c in enumerate(embebidos):
            form = CommentForm(data=c if isinstance(c, dict) else {})
            if not form.is_valid():
                for campo, mensajes in sorted(form.errors.items()):
                    for msg in mensajes:
                        errors.append(IngestError(PULLS_FILE, lineno, f"comments[{i}].{campo}", msg))
                invalido = True
                continue
            comentarios.append(_comment_from(form.cleaned_data, cleaned["author"], integrators, reviewers))
        if invalido:
            continue

        vistos.add(key)
        pr_rows.append((cleaned, comentarios, integrators, reviewers))

    # 2) Comentarios separados
    por_pr = {(c["repo_full_name"], c["pr_number"]): (c, coms, i, r) for c, coms, i, r in pr_rows}
    if (path / COMMENTS_FILE).is_file():
        for lineno, cleaned, _ in _validate_lines(path / COMMENTS_FILE, SeparateCommentForm, errors):
            key = (cleaned["repo_full_name"], cleaned["pr_number"])
            destino = por_pr.get(key)
            if destino is None:
                errors.append(IngestError(COMMENTS_FILE, lineno, "pr_number", f"PR desconocido {key[0]}#{key[1]}."))
                continue
            pr_cleaned, coms, integrators, reviewers = destino
            coms.append(_comment_from(cleaned, pr_cleaned["author"], integrators, reviewers))

    pulls = tuple(
        PullRequestRecord(
            repo_full_name=c["repo_full_name"],
            pr_number=c["pr_number"],
            author=c["author"],
            created_at=c["created_at"],
            merged=c["merged"],
            closed_at=c.get("closed_at"),
            reopen_count=c["reopen_count"],
            # orden estable por timestamp
            comments=tuple(sorted(coms, key=lambda x: x.created_at)),
        )
        for c, coms, _, _ in pr_rows
    )

    # 3) Commits
    commits = tuple(
        CommitEvent(c["repo_full_name"], c["author"], c["committed_at"])
        for _, c, _ in _validate_lines(path / COMMITS_FILE, CommitForm, errors)
    )

    # 4) Contexto de contribuidores
    contexts = []
    if (path / CONTEXT_FILE).is_file():
        claves = set()
        for lineno, c, _ in _validate_lines(path / CONTEXT_FILE, ContributorContextForm, errors):
            key = (c["repo_full_name"], c["author"])
            if key in claves:
                errors.append(IngestError(CONTEXT_FILE, lineno, "author", f"Contexto duplicado {key[0]}/{key[1]}."))
                continue
            claves.add(key)
            contexts.append(ContributorContext(
                repo_full_name=c["repo_full_name"],
                author=c["author"],
                core_member=c["core_member"],
                contrib_rate_author=c["contrib_rate_author"],
                followers=c["followers"],
                num_languages=c["num_languages"],
                contrib_follow_integrator=c["contrib_follow_integrator"],
                social_strength=c["social_strength"],
            ))

    # 5) Repositorios
    prs_por_repo = Counter(pr.repo_full_name for pr in pulls)
    repos = []
    nombres = set()
    for lineno, c, _ in _validate_lines(path / REPOS_FILE, RepoMetaForm, errors):
        nombre = c["repo_full_name"]
        if nombre in nombres:
            errors.append(IngestError(REPOS_FILE, lineno, "repo_full_name", f"Repositorio duplicado {nombre}."))
            continue
        nombres.add(nombre)
        pr_count = c["pr_count"] if c.get("pr_count") is not None else prs_por_repo.get(nombre, 0)
        repos.append(RepoMeta(
            repo_full_name=nombre,
            stars=c["stars"],
            category_labels=frozenset(c.get("category_labels") or ()),
            pr_count=pr_count,
            repo_size=c.get("repo_size") or repo_size_for(pr_count),
        ))

    corpus = Corpus(
        pulls=pulls,
        commits=commits,
        contexts=tuple(contexts),
        repos=tuple(repos),
        errors=tuple(errors),
    )
    if errors:
        logger.warning(f"{path}: {len(errors)} líneas rechazadas durante la carga")
    logger.info(f"{path}: {corpus.counts()}")
    return corpus


def merge_corpora(*corpora):
    """Une varios corpus (p. ej. un directorio por repositorio descargado)."""
    if len(corpora) == 1:
        return corpora[0]
    pulls, commits, contexts, repos, errors = [], [], [], [], []
    vistos_pr, vistos_ctx, vistos_repo = set(), set(), set()
    for c in corpora:
        for pr in c.pulls:
            if pr.key not in vistos_pr:
                vistos_pr.add(pr.key)
                pulls.append(pr)
        commits.extend(c.commits)
        for ctx in c.contexts:
            if ctx.key not in vistos_ctx:
                vistos_ctx.add(ctx.key)
                contexts.append(ctx)
        for r in c.repos:
            if r.repo_full_name not in vistos_repo:
                vistos_repo.add(r.repo_full_name)
                repos.append(r)
        errors.extend(c.errors)
    return Corpus(tuple(pulls), tuple(commits), tuple(contexts), tuple(repos), tuple(errors))


# ==========================
# Persistencia
# ==========================
def _pull_to_dict(pr):
    return {
        "repo_full_name": pr.repo_full_name,
        "pr_number": pr.pr_number,
        "author": pr.author,
        "created_at": format_timestamp(pr.created_at),
        "merged": pr.merged,
        "closed_at": format_timestamp(pr.closed_at),
        "reopen_count": pr.reopen_count,
        "comments": [
            {
                "author": c.author,
                "role": c.role,
                "body": c.body,
                "created_at": format_timestamp(c.created_at),
            }
            for c in pr.comments
        ],
    }


def save_corpus(corpus, path):
    """Escribe los archivos canónicos; load_corpus(save_corpus(c)) == c."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    write_jsonl(path / PULLS_FILE, (_pull_to_dict(pr) for pr in corpus.pulls))
    write_jsonl(path / COMMITS_FILE, (
        {"repo_full_name": c.repo_full_name, "author": c.author, "committed_at": format_timestamp(c.committed_at)}
        for c in corpus.commits
    ))
    write_jsonl(path / CONTEXT_FILE, (
        {
            "repo_full_name": c.repo_full_name,
            "author": c.author,
            "core_member": c.core_member,
            "contrib_rate_author": c.contrib_rate_author,
            "followers": c.followers,
            "num_languages": c.num_languages,
            "contrib_follow_integrator": c.contrib_follow_integrator,
            "social_strength": c.social_strength,
        }
        for c in corpus.contexts
    ))
    write_jsonl(path / REPOS_FILE, (
        {
            "repo_full_name": r.repo_full_name,
            "stars": r.stars,
            "category_labels": sorted(r.category_labels),
            "pr_count": r.pr_count,
            "repo_size": r.repo_size,
        }
        for r in corpus.repos
    ))
    # Los comentarios van embebidos; un comments.jsonl viejo duplicaría registros
    (path / COMMENTS_FILE).unlink(missing_ok=True)
    return path


def write_ingest_errors(errors, path):
    write_jsonl(Path(path), (e.to_dict() for e in errors))


# ==========================
# Filtrado
# ==========================
def filter_repositories(corpus, filter_config):
    """
    Top-N por estrellas (los empates en el corte entran todos) y luego se
    descartan los repositorios con alguna etiqueta excluida. Solo se quitan
    rebanadas completas de repositorio; los registros que quedan no cambian.
    """
    ordenados = sorted(corpus.repos, key=lambda r: (-r.stars, r.repo_full_name))
    n = filter_config.top_n_by_stars
    if n <= 0:
        top = []
    elif len(ordenados) <= n:
        top = ordenados
    else:
        corte = ordenados[n - 1].stars
        top = [r for r in ordenados if r.stars >= corte]

    excluidas = frozenset(filter_config.excluded_labels)
    conservados = {r.repo_full_name for r in top if not (r.category_labels & excluidas)}

    descartados = len(corpus.repos) - len(conservados)
    if descartados:
        logger.info(f"Filtro de repositorios: {len(conservados)} conservados, {descartados} descartados")

    return Corpus(
        pulls=tuple(pr for pr in corpus.pulls if pr.repo_full_name in conservados),
        commits=tuple(c for c in corpus.commits if c.repo_full_name in conservados),
        contexts=tuple(c for c in corpus.contexts if c.repo_full_name in conservados),
        repos=tuple(r for r in corpus.repos if r.repo_full_name in conservados),
        errors=corpus.errors,
    )


def corpus_dirs(path):
    """El propio directorio, o sus subdirectorios con pulls.jsonl (salida de fetch)."""
    path = Path(path)
    if (path / PULLS_FILE).is_file():
        return [path]
    hijos = sorted(p for p in path.iterdir() if p.is_dir() and (p / PULLS_FILE).is_file())
    return hijos or [path]
