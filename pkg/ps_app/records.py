"""
Tipos inmutables del corpus.

Todos los registros son dataclasses congeladas y las colecciones son tuplas:
un Corpus cargado se puede compartir entre workers sin copias.
"""
from dataclasses import dataclass, field
from datetime import datetime

# Roles de comentario (exactamente uno por comentario)
CONTRIBUTOR = "contributor"
INTEGRATOR = "integrator"
REVIEWER = "reviewer"
OTHER = "other"

ROLES = (CONTRIBUTOR, INTEGRATOR, REVIEWER, OTHER)

SMALL = "small"
MEDIUM = "medium"
LARGE = "large"

REPO_SIZES = (SMALL, MEDIUM, LARGE)


@dataclass(frozen=True)
class CommentRecord:
    author: str
    role: str
    body: str
    created_at: datetime


@dataclass(frozen=True)
class PullRequestRecord:
    repo_full_name: str
    pr_number: int
    author: str
    created_at: datetime
    merged: bool
    closed_at: datetime | None
    reopen_count: int
    comments: tuple[CommentRecord, ...] = ()

    @property
    def key(self):
        return (self.repo_full_name, self.pr_number)


@dataclass(frozen=True)
class CommitEvent:
    repo_full_name: str
    author: str
    committed_at: datetime


@dataclass(frozen=True)
class ContributorContext:
    repo_full_name: str
    author: str
    core_member: bool
    contrib_rate_author: float
    followers: int
    num_languages: int
    contrib_follow_integrator: bool
    social_strength: float

    @property
    def key(self):
        return (self.repo_full_name, self.author)


@dataclass(frozen=True)
class RepoMeta:
    repo_full_name: str
    stars: int
    category_labels: frozenset[str]
    pr_count: int
    repo_size: str


@dataclass(frozen=True)
class IngestError:
    """Una línea rechazada durante la carga (archivo, línea, campo, motivo)."""
    file: str
    line: int
    field: str
    message: str

    def to_dict(self):
        return {"file": self.file, "line": self.line, "field": self.field, "message": self.message}


@dataclass(frozen=True)
class Corpus:
    pulls: tuple[PullRequestRecord, ...] = ()
    commits: tuple[CommitEvent, ...] = ()
    contexts: tuple[ContributorContext, ...] = ()
    repos: tuple[RepoMeta, ...] = ()
    errors: tuple[IngestError, ...] = field(default=(), compare=False)

    def repo_names(self):
        return {r.repo_full_name for r in self.repos}

    def contributors(self):
        """Pares (repo, autor) de quienes abrieron al menos un PR, en orden de aparición."""
        vistos = {}
        for pr in self.pulls:
            vistos.setdefault((pr.repo_full_name, pr.author), None)
        return list(vistos)

    def counts(self):
        return {
            "pulls": len(self.pulls),
            "comments": sum(len(pr.comments) for pr in self.pulls),
            "commits": len(self.commits),
            "contexts": len(self.contexts),
            "repos": len(self.repos),
            "contributors": len({pr.author for pr in self.pulls}),
            "ingest_errors": len(self.errors),
        }
