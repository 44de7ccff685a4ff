"""
Exportación de un repositorio de GitHub (REST v3) al formato canónico del corpus.

Cada repositorio se escribe en <output_dir>/<owner>__<name>/ con su propio
fetch_cursor.json; los archivos se escriben línea a línea y una nueva
ejecución continúa donde quedó sin duplicar PRs ni commits.
"""
import json
import logging
import os
import time
from collections import Counter, defaultdict
from dataclasses import dataclass, field, asdict
from datetime import datetime, timedelta, timezone as dt_timezone
from pathlib import Path

import requests
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured, ValidationError
from django.utils.dateparse import parse_datetime

from .corpus import (
    PULLS_FILE, COMMITS_FILE, CONTEXT_FILE, REPOS_FILE, derive_comment_role,
)
from .forms import repo_name_validator, repo_size_for
from .records import INTEGRATOR
from .utils import iter_jsonl, append_jsonl, write_jsonl, write_json, read_json, format_timestamp

logger = logging.getLogger(__name__)

CURSOR_FILE = "fetch_cursor.json"
GHOST = "ghost"
CORE_ASSOCIATIONS = {"OWNER", "MEMBER", "COLLABORATOR"}
SOCIAL_WINDOW_DAYS = 90


class RepositoryNotFound(Exception):
    pass


class FetchError(Exception):
    pass


# ==========================
# Trabajo y reporte
# ==========================
@dataclass(frozen=True)
class FetchJob:
    repo_full_name: str
    output_dir: Path
    since: datetime | None = None
    auth_token_source: str = "GITHUB_TOKEN"
    page_size: int = 100
    category_labels: tuple = ()

    def __post_init__(self):
        try:
            repo_name_validator(self.repo_full_name)
        except ValidationError:
            raise ImproperlyConfigured(f"Repositorio inválido: {self.repo_full_name!r} (se espera owner/name)")
        if not 1 <= int(self.page_size) <= 100:
            raise ImproperlyConfigured(f"page_size debe estar entre 1 y 100 (recibido {self.page_size}).")
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        object.__setattr__(self, "category_labels", tuple(sorted(set(self.category_labels))))

    @property
    def repo_dir(self):
        return self.output_dir / self.repo_full_name.replace("/", "__")

    def to_dict(self):
        return {
            "repo_full_name": self.repo_full_name,
            "output_dir": str(self.output_dir),
            "since": format_timestamp(self.since),
            "auth_token_source": self.auth_token_source,
            "page_size": self.page_size,
            "category_labels": list(self.category_labels),
        }

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if data.get("since"):
            data["since"] = parse_datetime(data["since"])
        data["category_labels"] = tuple(data.get("category_labels") or ())
        return cls(**data)


@dataclass
class FetchReport:
    repo_full_name: str
    pulls: int = 0
    comments: int = 0
    commits: int = 0
    contexts: int = 0
    requests: int = 0
    rate_limit_waits: int = 0
    retries: int = 0
    failures: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


# ==========================
# Cliente HTTP
# ==========================
class GitHubClient:
    """requests.Session con espera por rate limit, reintentos y paginación por Link."""

    def __init__(self, token=None, base_url=None, session=None, sleep=time.sleep, clock=time.time,
                 max_retries=None, timeout=None, backoff_base=None):
        self.base_url = (base_url or settings.PS_GITHUB_API_URL).rstrip("/")
        self.session = session or requests.Session()
        self.session.headers.update({
            "Accept": "application/vnd.github+json",
            "X-GitHub-Api-Version": "2022-11-28",
        })
        if token:
            self.session.headers["Authorization"] = f"Bearer {token}"
        self.sleep = sleep
        self.clock = clock
        self.max_retries = settings.PS_FETCH_MAX_RETRIES if max_retries is None else max_retries
        self.timeout = settings.PS_FETCH_TIMEOUT if timeout is None else timeout
        self.backoff_base = settings.PS_FETCH_BACKOFF_BASE if backoff_base is None else backoff_base
        self.requests = 0
        self.rate_limit_waits = 0
        self.retries = 0

    def url(self, path):
        return path if path.startswith("http") else f"{self.base_url}/{path.lstrip('/')}"

    def _rate_limited(self, response):
        if response.status_code not in (403, 429):
            return False
        return response.headers.get("X-RateLimit-Remaining") == "0" or "Retry-After" in response.headers

    def _rate_limit_wait(self, response, attempt):
        if "Retry-After" in response.headers:
            base = float(response.headers["Retry-After"])
        else:
            reset = float(response.headers.get("X-RateLimit-Reset", "0"))
            base = max(reset - self.clock(), 0.0)
        return base + self.backoff_base ** attempt

    def request(self, path, params=None, allow_404=False):
        url = self.url(path)
        attempt = 0
        while True:
            try:
                response = self.session.get(url, params=params, timeout=self.timeout)
            except (requests.Timeout, requests.ConnectionError) as e:
                attempt += 1
                self.retries += 1
                if attempt > self.max_retries:
                    raise FetchError(f"{url}: {e.__class__.__name__} tras {self.max_retries} reintentos")
                logger.warning(f"{url}: {e.__class__.__name__}, reintento {attempt}")
                self.sleep(self.backoff_base ** attempt)
                continue

            self.requests += 1
            if self._rate_limited(response):
                attempt += 1
                if attempt > self.max_retries:
                    raise FetchError(f"{url}: límite de peticiones agotado tras {self.max_retries} esperas")
                espera = self._rate_limit_wait(response, attempt)
                self.rate_limit_waits += 1
                logger.warning(f"Rate limit de GitHub: esperando {espera:.0f} s")
                self.sleep(espera)
                continue
            if response.status_code == 404:
                if allow_404:
                    return response
                raise RepositoryNotFound(f"No encontrado: {url}")
            if response.status_code >= 500:
                attempt += 1
                self.retries += 1
                if attempt > self.max_retries:
                    raise FetchError(f"{url}: HTTP {response.status_code} tras {self.max_retries} reintentos")
                self.sleep(self.backoff_base ** attempt)
                continue
            try:
                response.raise_for_status()
            except requests.HTTPError as e:
                raise FetchError(f"{url}: {e}")
            return response

    def get_json(self, path, params=None, allow_404=False):
        response = self.request(path, params=params, allow_404=allow_404)
        if response.status_code == 404:
            return None
        return response.json()

    def pages(self, path, params=None):
        """Itera (url, items, next_url) siguiendo la cabecera Link."""
        url, page_params = self.url(path), params
        while url:
            response = self.request(url, params=page_params)
            next_url = response.links.get("next", {}).get("url")
            yield url, response.json(), next_url
            url, page_params = next_url, None

    def get_all(self, path, params=None):
        items = []
        for _, page, _ in self.pages(path, params):
            items.extend(page)
        return items

    def follows(self, login, target):
        response = self.request(f"users/{login}/following/{target}", allow_404=True)
        return response.status_code == 204


def client_for(job, **kwargs):
    token = os.getenv(job.auth_token_source)
    if not token:
        logger.warning(f"Variable {job.auth_token_source} vacía: acceso sin autenticar (límite reducido)")
    return GitHubClient(token=token, **kwargs)


# ==========================
# Conversión a registros canónicos
# ==========================
def _login(user):
    return (user or {}).get("login") or GHOST


def _pr_events(events):
    reopen = sum(1 for e in events if e.get("event") == "reopened")
    merged_by = closed_by = None
    for e in events:
        if e.get("event") == "merged":
            merged_by = _login(e.get("actor"))
        elif e.get("event") == "closed":
            closed_by = _login(e.get("actor"))
    return reopen, merged_by, closed_by


def pull_line(repo, pr, issue_comments, review_comments, reviews, events):
    author = _login(pr.get("user"))
    reopen, merged_by, closed_by = _pr_events(events)
    integrators = {u for u in (merged_by, closed_by) if u}
    reviewers = sorted({_login(r.get("user")) for r in reviews if r.get("submitted_at")})

    raw = [(c, c.get("created_at")) for c in issue_comments + review_comments]
    raw += [(r, r.get("submitted_at")) for r in reviews if r.get("submitted_at") and r.get("body")]
    comments = []
    for c, created in raw:
        login = _login(c.get("user"))
        comments.append({
            "author": login,
            "role": derive_comment_role(
                login, author, c.get("author_association"), integrators, reviewers,
            ),
            "body": c.get("body") or "",
            "created_at": created,
        })
    comments.sort(key=lambda c: c["created_at"])

    return {
        "repo_full_name": repo,
        "pr_number": pr["number"],
        "author": author,
        "author_association": pr.get("author_association"),
        "created_at": pr["created_at"],
        "merged": bool(pr.get("merged_at")),
        "closed_at": pr.get("closed_at"),
        "reopen_count": reopen,
        "merged_by": merged_by,
        "closed_by": closed_by,
        "reviewers": reviewers,
        "comments": comments,
    }


def commit_line(repo, commit):
    login = (commit.get("author") or {}).get("login")
    if not login:
        return None
    return {
        "repo_full_name": repo,
        "sha": commit["sha"],
        "author": login,
        "committed_at": commit["commit"]["author"]["date"],
    }


# ==========================
# Cursor
# ==========================
def _load_cursor(path, since):
    if path.is_file():
        cursor = read_json(path)
        if cursor.get("since") == since:
            return cursor
        logger.info(f"{path}: 'since' distinto, se reinicia el cursor")
    return {"since": since, "pulls": {}, "commits": {}}


def _repair_tail(path):
    """Una escritura interrumpida deja la última línea a medias: se recorta antes de continuar."""
    data = path.read_bytes()
    if not data:
        return
    inicio = data.rfind(b"\n", 0, len(data) - 1) + 1
    try:
        json.loads(data[inicio:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        logger.warning(f"{path}: última línea incompleta descartada ({len(data) - inicio} bytes)")
        with open(path, "r+b") as fh:
            fh.truncate(inicio)
        return
    if not data.endswith(b"\n"):
        with open(path, "ab") as fh:
            fh.write(b"\n")


def _existing(path, key):
    if not path.is_file():
        return set()
    _repair_tail(path)
    return {key(json.loads(line)) for _, line in iter_jsonl(path)}


# ==========================
# Contexto de contribuidores
# ==========================
def _parse(ts):
    return parse_datetime(ts).astimezone(dt_timezone.utc)


def build_contexts(repo, pulls, commits, client):
    """Controles por (repo, autor) a partir de los PRs y commits exportados."""
    commits_por_autor = Counter(c["author"] for c in commits)
    total_commits = sum(commits_por_autor.values())
    integradores_repo = set()
    for pr in pulls:
        integradores_repo.update(u for u in (pr.get("merged_by"), pr.get("closed_by")) if u)
        integradores_repo.update(c["author"] for c in pr["comments"] if c["role"] == INTEGRATOR)

    por_autor = defaultdict(list)
    for pr in pulls:
        por_autor[pr["author"]].append(pr)

    usuarios = {}

    def usuario(login):
        if login not in usuarios:
            datos = client.get_json(f"users/{login}", allow_404=True) or {}
            lenguajes = set()
            if datos:
                for r in client.get_all(f"users/{login}/repos", {"per_page": 100}):
                    if r.get("language"):
                        lenguajes.add(r["language"])
            usuarios[login] = (int(datos.get("followers") or 0), max(1, len(lenguajes)))
        return usuarios[login]

    contexts = []
    for author in sorted(por_autor):
        prs = por_autor[author]
        core = any((pr.get("author_association") or "").upper() in CORE_ASSOCIATIONS for pr in prs)
        followers, num_languages = usuario(author)

        suyos = {u for pr in prs for u in (pr.get("merged_by"), pr.get("closed_by")) if u and u != author}
        follow = any(client.follows(author, integ) for integ in sorted(suyos)) if author != GHOST else False

        ultimo = max(_parse(pr["created_at"]) for pr in prs)
        desde = ultimo - timedelta(days=SOCIAL_WINDOW_DAYS)
        compartidos = set()
        for pr in pulls:
            if not desde <= _parse(pr["created_at"]) <= ultimo:
                continue
            participantes = {pr["author"]} | {c["author"] for c in pr["comments"]}
            if author not in participantes:
                continue
            participantes |= {u for u in (pr.get("merged_by"), pr.get("closed_by")) if u}
            compartidos |= participantes & integradores_repo
        otros = integradores_repo - {author}
        social = len(compartidos - {author}) / len(otros) if otros else 0.0

        contexts.append({
            "repo_full_name": repo,
            "author": author,
            "core_member": core,
            "contrib_rate_author": commits_por_autor.get(author, 0) / total_commits if total_commits else 0.0,
            "followers": followers,
            "num_languages": num_languages,
            "contrib_follow_integrator": follow,
            "social_strength": social,
        })
    return contexts


# ==========================
# Exportación
# ==========================
def fetch_repository(job, client=None):
    client = client or client_for(job)
    repo = job.repo_full_name
    out = job.repo_dir
    out.mkdir(parents=True, exist_ok=True)
    report = FetchReport(repo_full_name=repo)
    since = format_timestamp(job.since)

    meta = client.get_json(f"repos/{repo}")

    for nombre in (PULLS_FILE, COMMITS_FILE, CONTEXT_FILE, REPOS_FILE):
        (out / nombre).touch()

    cursor_path = out / CURSOR_FILE
    cursor = _load_cursor(cursor_path, since)

    # 1) Pull requests, en orden de creación
    vistos = _existing(out / PULLS_FILE, lambda d: d["pr_number"])
    estado = cursor["pulls"]
    inicio = estado.get("next_url") or estado.get("last_url") or f"repos/{repo}/pulls"
    params = None if inicio.startswith("http") else {
        "state": "all", "sort": "created", "direction": "asc", "per_page": job.page_size,
    }
    with open(out / PULLS_FILE, "a", encoding="utf-8", newline="\n") as fh:
        for url, page, next_url in client.pages(inicio, params):
            for pr in page:
                if pr["number"] in vistos:
                    continue
                if job.since and _parse(pr["created_at"]) < job.since:
                    continue
                n = pr["number"]
                linea = pull_line(
                    repo, pr,
                    client.get_all(f"repos/{repo}/issues/{n}/comments", {"per_page": job.page_size}),
                    client.get_all(f"repos/{repo}/pulls/{n}/comments", {"per_page": job.page_size}),
                    client.get_all(f"repos/{repo}/pulls/{n}/reviews", {"per_page": job.page_size}),
                    client.get_all(f"repos/{repo}/issues/{n}/events", {"per_page": job.page_size}),
                )
                append_jsonl(fh, linea)
                vistos.add(n)
                report.pulls += 1
                report.comments += len(linea["comments"])
            cursor["pulls"] = {"next_url": next_url, "last_url": url}
            write_json(cursor_path, cursor)

    # 2) Commits (el API los devuelve del más reciente al más antiguo)
    shas = _existing(out / COMMITS_FILE, lambda d: d["sha"])
    estado = cursor["commits"]
    inicio = estado.get("next_url") or f"repos/{repo}/commits"
    params = None if inicio.startswith("http") else {"per_page": job.page_size, **({"since": since} if since else {})}
    with open(out / COMMITS_FILE, "a", encoding="utf-8", newline="\n") as fh:
        for url, page, next_url in client.pages(inicio, params):
            for commit in page:
                if commit["sha"] in shas:
                    continue
                linea = commit_line(repo, commit)
                if linea is None:
                    continue
                append_jsonl(fh, linea)
                shas.add(commit["sha"])
                report.commits += 1
            cursor["commits"] = {"next_url": next_url}
            write_json(cursor_path, cursor)

    # 3) Contexto y metadatos del repositorio (se recalculan completos)
    pulls = [json.loads(line) for _, line in iter_jsonl(out / PULLS_FILE)]
    commits = [json.loads(line) for _, line in iter_jsonl(out / COMMITS_FILE)]
    contexts = build_contexts(repo, pulls, commits, client)
    write_jsonl(out / CONTEXT_FILE, contexts)
    report.contexts = len(contexts)

    write_jsonl(out / REPOS_FILE, [{
        "repo_full_name": repo,
        "stars": int(meta.get("stargazers_count") or 0),
        "category_labels": list(job.category_labels),
        "pr_count": len(pulls),
        "repo_size": repo_size_for(len(pulls)),
    }])

    report.requests = client.requests
    report.rate_limit_waits = client.rate_limit_waits
    report.retries = client.retries
    logger.info(f"{repo}: {report.pulls} PRs, {report.commits} commits nuevos")
    return report
