"""
Corpus sintéticos para las pruebas (generados con semilla fija).
"""
from datetime import datetime, timedelta, timezone as dt_timezone
from pathlib import Path

import numpy as np

from ps_app.corpus import save_corpus
from ps_app.forms import repo_size_for
from ps_app.records import (
    CommentRecord, CommitEvent, ContributorContext, Corpus, PullRequestRecord, RepoMeta,
    CONTRIBUTOR, INTEGRATOR, REVIEWER, OTHER,
)
from ps_app.utils import format_timestamp, write_jsonl

UTC = dt_timezone.utc
FIXTURES = Path(__file__).resolve().parent / "fixtures"
HAND_CORPUS = FIXTURES / "corpus"

SNAPSHOT = datetime(2019, 6, 30, tzinfo=UTC)

# nombre, estrellas, PRs del repositorio
SYNTHETIC_REPOS = (
    ("synth/alpha", 9000, 1500),
    ("synth/bravo", 7000, 1200),
    ("synth/charlie", 5000, 600),
    ("synth/delta", 4000, 300),
    ("synth/echo", 3000, 150),
    ("synth/foxtrot", 2000, 80),
    ("synth/golf", 1000, 50),
    ("synth/hotel", 500, 30),
)

BODIES = (
    "LGTM",
    "Looks good 👍",
    "Can you add tests?",
    "Thanks @{other}",
    "There is a merge conflict",
    "Fixed",
    "🎉 merged",
    "Please rebase",
    "`@property` is fine here",
    "Any update?",
    "+1",
)

# Conteos de PRs por repositorio del estudio original (26 repos, 60684 PRs)
TABLE_I = (
    ("python/cpython", 12317),
    ("nodejs/node", 12057),
    ("facebook/react", 7445),
    ("mrdoob/three.js", 7123),
    ("grafana/grafana", 4531),
    ("spring-projects/spring-boot", 3215),
    ("Zeit/next.js", 2902),
    ("tensorflow/models", 2102),
    ("pytorch/pytorch", 1923),
    ("storybooks/storybook", 1713),
    ("keras-team/keras", 1203),
    ("gin-gonic/gin", 715),
    ("pallets/flask", 699),
    ("TheAlgorithms/Java", 587),
    ("golang/go", 553),
    ("nvbn/thefuck", 417),
    ("exercism/go", 397),
    ("expressjs/express", 215),
    ("axios/axios", 147),
    ("tiangolo/fastapi", 107),
    ("ytdl-org/youtube-dl", 83),
    ("pubnub/go", 57),
    ("swisskyrepo/PayloadsAllTheThings", 53),
    ("d2l-ai/d2l-zh", 52),
    ("appscode/go", 37),
    ("adam-p/markdown-here", 35),
)
TABLE_I_TOTAL = 60684


def _instant(rng, start, end):
    span = int((end - start).total_seconds())
    return start + timedelta(seconds=int(rng.integers(0, span)))


def _commit_dates(rng, status):
    """Fechas de commit que producen la etiqueta pedida con la configuración por defecto."""
    antes = _instant(rng, datetime(2018, 9, 1, tzinfo=UTC), SNAPSHOT - timedelta(days=5))
    if status == "sustained":
        return [antes, SNAPSHOT + timedelta(days=int(rng.integers(1, 360)))]
    if status == "not_sustained_recent":
        return [antes, _instant(rng, datetime(2021, 1, 1, tzinfo=UTC), datetime(2023, 6, 30, tzinfo=UTC))]
    if status == "not_sustained":
        return [antes]
    if status == "censored":
        return [antes, _instant(rng, datetime(2024, 3, 1, tzinfo=UTC), datetime(2024, 11, 30, tzinfo=UTC))]
    # vuelve tras más de un año sin commits
    return [datetime(2016, 1, 4, tzinfo=UTC), datetime(2018, 6, 1, tzinfo=UTC)]


def _comments(rng, author, created, integrators, reviewers, outsiders):
    comments = []
    momento = created
    for _ in range(int(rng.integers(0, 7))):
        momento = momento + timedelta(hours=int(rng.integers(1, 48)))
        quien = rng.choice(4, p=[0.35, 0.25, 0.2, 0.2])
        if quien == 0:
            login, role = author, CONTRIBUTOR
        elif quien == 1:
            login, role = str(rng.choice(integrators)), INTEGRATOR
        elif quien == 2:
            login, role = str(rng.choice(reviewers)), REVIEWER
        else:
            login, role = str(rng.choice(outsiders)), OTHER
        body = str(rng.choice(BODIES)).format(other=author)
        comments.append(CommentRecord(login, role, body, momento))
    return tuple(comments)


def synthetic_corpus(seed=20190630, contributors_per_repo=14):
    """
    Ocho repositorios de tamaños mixtos con contribuidores sostenidos, no
    sostenidos (con y sin actividad reciente), censurados, con hueco y uno
    sin commits. Suficiente variación para ajustar los modelos 1 y 2.
    """
    rng = np.random.default_rng(seed)
    estados = ("sustained", "not_sustained_recent", "not_sustained", "censored", "gap")
    pesos = (0.45, 0.22, 0.23, 0.05, 0.05)
    outsiders = [f"passerby{i}" for i in range(6)]

    pulls, commits, contexts, repos = [], [], [], []
    for r, (repo, stars, pr_count) in enumerate(SYNTHETIC_REPOS):
        corto = repo.split("/")[1]
        integrators = [f"{corto}-maint1", f"{corto}-maint2"]
        reviewers = [f"{corto}-rev1", f"{corto}-rev2"]
        repos.append(RepoMeta(repo, stars, frozenset(), pr_count, repo_size_for(pr_count)))

        autores = [f"{corto}-dev{i:02d}" for i in range(contributors_per_repo)]
        if r == 0:
            autores.append(f"{corto}-nocommits")
        numero = 1
        for author in autores:
            if not author.endswith("nocommits"):
                status = estados[int(rng.choice(len(estados), p=pesos))]
                for fecha in _commit_dates(rng, status):
                    commits.append(CommitEvent(repo, author, fecha))
                contexts.append(ContributorContext(
                    repo_full_name=repo,
                    author=author,
                    core_member=bool(rng.random() < 0.3),
                    contrib_rate_author=round(float(rng.uniform(0.01, 0.6)), 4),
                    followers=int(rng.lognormal(3.0, 1.2)),
                    num_languages=int(rng.integers(1, 9)),
                    contrib_follow_integrator=bool(rng.random() < 0.4),
                    social_strength=round(float(rng.uniform(0.0, 1.0)), 4),
                ))
            for _ in range(int(rng.integers(1, 5))):
                created = _instant(rng, datetime(2018, 7, 1, tzinfo=UTC), SNAPSHOT - timedelta(days=10))
                pulls.append(PullRequestRecord(
                    repo_full_name=repo,
                    pr_number=numero,
                    author=author,
                    created_at=created,
                    merged=bool(rng.random() < 0.65),
                    closed_at=created + timedelta(days=int(rng.integers(1, 9))),
                    reopen_count=int(rng.random() < 0.1),
                    comments=_comments(rng, author, created, integrators, reviewers, outsiders),
                ))
                numero += 1

    return Corpus(tuple(pulls), tuple(commits), tuple(contexts), tuple(repos))


def write_synthetic_corpus(path, **kwargs):
    corpus = synthetic_corpus(**kwargs)
    save_corpus(corpus, path)
    return corpus


def write_scale_corpus(path, contributors_per_repo=25):
    """
    Corpus con los conteos de PRs por repositorio del estudio: PRs mínimos,
    un comentario cada dos PRs, contexto para cada contribuidor y commits
    que reparten las etiquetas entre sostenidos, no sostenidos con actividad
    posterior y no sostenidos sin ella. Ningún contribuidor queda censurado.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(60684)

    def pulls():
        for repo, total in TABLE_I:
            for n in range(1, total + 1):
                author = f"user{n % contributors_per_repo}"
                created = datetime(2018, 7, 1, tzinfo=UTC) + timedelta(minutes=n)
                comments = []
                if n % 2 == 0:
                    comments.append({
                        "author": "maintainer",
                        "role": INTEGRATOR,
                        "body": "Thanks 👍",
                        "created_at": format_timestamp(created + timedelta(hours=1)),
                    })
                yield {
                    "repo_full_name": repo,
                    "pr_number": n,
                    "author": author,
                    "created_at": format_timestamp(created),
                    "merged": n % 3 != 0,
                    "closed_at": format_timestamp(created + timedelta(days=1)),
                    "reopen_count": 0,
                    "comments": comments,
                }

    def commits():
        for repo, total in TABLE_I:
            for i in range(min(total, contributors_per_repo)):
                author = f"user{i}"
                yield {"repo_full_name": repo, "author": author, "committed_at": "2019-03-01T12:00:00Z"}
                tipo = int(rng.choice(3, p=[0.45, 0.25, 0.30]))
                if tipo == 2:
                    continue
                dias = int(rng.integers(1, 360)) if tipo == 0 else int(rng.integers(400, 1200))
                despues = SNAPSHOT + timedelta(days=dias)
                yield {"repo_full_name": repo, "author": author, "committed_at": format_timestamp(despues)}

    def contexts():
        for repo, total in TABLE_I:
            for i in range(min(total, contributors_per_repo)):
                yield {
                    "repo_full_name": repo,
                    "author": f"user{i}",
                    "core_member": bool(rng.random() < 0.3),
                    "contrib_rate_author": round(float(rng.uniform(0.01, 0.6)), 4),
                    "followers": int(rng.lognormal(3.0, 1.2)),
                    "num_languages": int(rng.integers(1, 9)),
                    "contrib_follow_integrator": bool(rng.random() < 0.4),
                    "social_strength": round(float(rng.uniform(0.0, 1.0)), 4),
                }

    write_jsonl(path / "pulls.jsonl", pulls())
    write_jsonl(path / "commits.jsonl", commits())
    write_jsonl(path / "contributor_context.jsonl", contexts())
    write_jsonl(path / "repos.jsonl", (
        {"repo_full_name": repo, "stars": 100000 - i, "category_labels": [], "pr_count": total}
        for i, (repo, total) in enumerate(TABLE_I)
    ))
    return path


def write_two_pull_corpus(path):
    """Un repositorio con dos PRs de un mismo contribuidor sostenido."""
    repo = "tiny/repo"
    created = datetime(2019, 2, 1, tzinfo=UTC)
    pulls = tuple(
        PullRequestRecord(
            repo_full_name=repo,
            pr_number=n,
            author="solo",
            created_at=created + timedelta(days=n),
            merged=n == 1,
            closed_at=created + timedelta(days=n + 1),
            reopen_count=0,
            comments=(CommentRecord("tiny-maint", INTEGRATOR, "Thanks @solo 👍", created + timedelta(days=n, hours=2)),),
        )
        for n in (1, 2)
    )
    commits = (
        CommitEvent(repo, "solo", datetime(2019, 3, 1, 12, tzinfo=UTC)),
        CommitEvent(repo, "solo", datetime(2019, 9, 1, 12, tzinfo=UTC)),
    )
    contexts = (ContributorContext(
        repo_full_name=repo, author="solo", core_member=False, contrib_rate_author=0.2,
        followers=12, num_languages=3, contrib_follow_integrator=True, social_strength=0.5,
    ),)
    repos = (RepoMeta(repo, 800, frozenset(), 2, repo_size_for(2)),)
    corpus = Corpus(pulls, commits, contexts, repos)
    save_corpus(corpus, path)
    return corpus
