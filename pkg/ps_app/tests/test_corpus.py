import json
import shutil
import tempfile
from datetime import datetime, timezone as dt_timezone
from pathlib import Path

from django.test import SimpleTestCase

from ps_app.corpus import (
    COMMENTS_FILE, CorpusError, FilterConfig, corpus_dirs, derive_comment_role,
    filter_repositories, load_corpus, merge_corpora, save_corpus,
)
from ps_app.forms import CommitForm, RepoMetaForm, repo_size_for
from ps_app.records import (
    Corpus, PullRequestRecord, RepoMeta, CommitEvent, CONTRIBUTOR, INTEGRATOR, REVIEWER, OTHER,
)

from .factories import HAND_CORPUS

UTC = dt_timezone.utc


def _tmpdir(test):
    path = Path(tempfile.mkdtemp())
    test.addCleanup(shutil.rmtree, path, ignore_errors=True)
    return path


def _write(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


class LoadCorpusTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.corpus = load_corpus(HAND_CORPUS)

    def pr(self, repo, number):
        return next(p for p in self.corpus.pulls if p.key == (repo, number))

    def test_counts(self):
        counts = self.corpus.counts()
        self.assertEqual(counts["pulls"], 12)
        self.assertEqual(counts["contributors"], 4)
        self.assertEqual(counts["repos"], 2)
        self.assertEqual(counts["comments"], 23)
        self.assertEqual(counts["commits"], 14)
        self.assertEqual(counts["contexts"], 5)
        self.assertEqual(counts["ingest_errors"], 0)

    def test_timestamps_are_utc(self):
        pr = self.pr("acme/widgets", 1)
        self.assertEqual(pr.created_at, datetime(2019, 3, 1, 10, 0, tzinfo=UTC))
        self.assertEqual(pr.created_at.utcoffset().total_seconds(), 0)

    def test_comments_ordered_by_creation(self):
        pr = self.pr("acme/widgets", 3)
        self.assertEqual([c.author for c in pr.comments], ["outsider", "alice", "alice", "maint2"])

    def test_separate_comments_file_attached_to_pull(self):
        self.assertEqual(len(self.pr("acme/gadgets", 3).comments), 5)
        self.assertEqual(len(self.pr("acme/gadgets", 5).comments), 2)

    def test_missing_roles_are_derived(self):
        roles = {c.author: c.role for c in self.pr("acme/gadgets", 1).comments}
        self.assertEqual(roles, {"carol": CONTRIBUTOR, "maint2": INTEGRATOR, "outsider": OTHER})
        roles = {c.author: c.role for c in self.pr("acme/gadgets", 3).comments}
        self.assertEqual(roles, {"rev1": REVIEWER, "carol": CONTRIBUTOR, "maint1": INTEGRATOR})

    def test_repo_size_derived_from_pr_count(self):
        repos = {r.repo_full_name: r for r in self.corpus.repos}
        self.assertEqual(repos["acme/gadgets"].repo_size, "medium")
        self.assertEqual(repos["acme/widgets"].repo_size, "large")

    def test_contributors_in_order_of_appearance(self):
        self.assertEqual(self.corpus.contributors(), [
            ("acme/widgets", "alice"),
            ("acme/widgets", "bob"),
            ("acme/widgets", "carol"),
            ("acme/gadgets", "carol"),
            ("acme/gadgets", "dave"),
        ])


class InvalidLinesTests(SimpleTestCase):

    def setUp(self):
        self.dir = _tmpdir(self)
        _write(self.dir / "pulls.jsonl", [
            '{"repo_full_name":"o/r","pr_number":1,"author":"a","created_at":"2019-01-01T00:00:00Z","merged":true,"reopen_count":0}',
            '{"repo_full_name":"o/r","pr_number":2,"created_at":"2019-01-01T00:00:00Z","merged":true,"reopen_count":0}',
            '{"repo_full_name":"o/r","pr_number":3,"author":"a","created_at":"ayer","merged":true,"reopen_count":0}',
            '{"repo_full_name":"o/r","pr_number":4,"author":"a","created_at":"2019-01-01T00:00:00Z","merged":"yes","reopen_count":0}',
            '{"repo_full_name":"o/r","pr_number":1,"author":"b","created_at":"2019-01-02T00:00:00Z","merged":false,"reopen_count":0}',
            'no es json',
            '{"repo_full_name":"o/r","pr_number":5,"author":"a","created_at":"2019-01-01T00:00:00Z","merged":false,"reopen_count":0,'
            '"comments":[{"author":"x","role":"boss","body":"hi","created_at":"2019-01-01T01:00:00Z"}]}',
        ])
        _write(self.dir / "commits.jsonl", [
            '{"repo_full_name":"o/r","author":"a","committed_at":"2019-01-01T00:00:00+02:00"}',
            '{"repo_full_name":"sin-barra","author":"a","committed_at":"2019-01-01T00:00:00Z"}',
        ])
        _write(self.dir / "repos.jsonl", [
            '{"repo_full_name":"o/r","stars":10,"pr_count":50,"repo_size":"large"}',
            '{"repo_full_name":"o/s","stars":3}',
        ])

    def test_rejected_lines_are_reported_and_the_rest_loaded(self):
        corpus = load_corpus(self.dir)
        errores = {(e.file, e.line, e.field) for e in corpus.errors}
        self.assertEqual(errores, {
            ("pulls.jsonl", 2, "author"),
            ("pulls.jsonl", 3, "created_at"),
            ("pulls.jsonl", 4, "merged"),
            ("pulls.jsonl", 5, "pr_number"),
            ("pulls.jsonl", 6, "__line__"),
            ("pulls.jsonl", 7, "comments[0].role"),
            ("commits.jsonl", 2, "repo_full_name"),
            ("repos.jsonl", 1, "repo_size"),
        })
        self.assertEqual([pr.key for pr in corpus.pulls], [("o/r", 1)])
        self.assertEqual(corpus.commits[0].committed_at, datetime(2018, 12, 31, 22, 0, tzinfo=UTC))
        self.assertEqual([r.repo_full_name for r in corpus.repos], ["o/s"])
        self.assertEqual(corpus.repos[0].pr_count, 0)
        self.assertEqual(corpus.repos[0].repo_size, "small")

    def test_missing_required_file(self):
        (self.dir / "commits.jsonl").unlink()
        with self.assertRaises(CorpusError):
            load_corpus(self.dir)

    def test_unknown_pull_in_comments_file(self):
        _write(self.dir / COMMENTS_FILE, [
            '{"repo_full_name":"o/r","pr_number":99,"author":"x","body":"?","created_at":"2019-01-01T00:00:00Z"}',
        ])
        corpus = load_corpus(self.dir)
        self.assertIn(("comments.jsonl", 1, "pr_number"), {(e.file, e.line, e.field) for e in corpus.errors})


class SaveCorpusTests(SimpleTestCase):

    def test_save_then_load_gives_the_same_corpus(self):
        original = load_corpus(HAND_CORPUS)
        out = _tmpdir(self) / "copia"
        save_corpus(original, out)
        self.assertFalse((out / COMMENTS_FILE).exists())
        self.assertEqual(load_corpus(out), original)

    def test_stale_comments_file_is_removed(self):
        out = _tmpdir(self)
        shutil.copytree(HAND_CORPUS, out, dirs_exist_ok=True)
        save_corpus(load_corpus(HAND_CORPUS), out)
        self.assertEqual(load_corpus(out).counts()["comments"], 23)

    def test_saved_lines_are_canonical(self):
        out = _tmpdir(self)
        save_corpus(load_corpus(HAND_CORPUS), out)
        primera = (out / "pulls.jsonl").read_text(encoding="utf-8").splitlines()[0]
        data = json.loads(primera)
        self.assertEqual(list(data), sorted(data))
        self.assertEqual(data["created_at"], "2019-03-01T10:00:00Z")
        self.assertIn("👍", primera)


def _pr(repo, number=1, author="a"):
    return PullRequestRecord(repo, number, author, datetime(2019, 1, 1, tzinfo=UTC), True, None, 0)


def _repo(name, stars, labels=()):
    return RepoMeta(name, stars, frozenset(labels), 10, "small")


class FilterRepositoriesTests(SimpleTestCase):

    def setUp(self):
        self.corpus = Corpus(
            pulls=tuple(_pr(r) for r in ("o/a", "o/b", "o/c", "o/d")),
            commits=(CommitEvent("o/d", "a", datetime(2019, 1, 1, tzinfo=UTC)),),
            repos=(_repo("o/a", 10), _repo("o/b", 8, ["education"]), _repo("o/c", 8), _repo("o/d", 5)),
        )

    def test_ties_at_the_cut_are_kept(self):
        filtrado = filter_repositories(self.corpus, FilterConfig(top_n_by_stars=2))
        self.assertEqual(filtrado.repo_names(), {"o/a", "o/b", "o/c"})
        self.assertEqual(filtrado.commits, ())

    def test_excluded_labels_after_top_n(self):
        filtrado = filter_repositories(
            self.corpus, FilterConfig(top_n_by_stars=2, excluded_labels=frozenset({"education"})),
        )
        self.assertEqual(filtrado.repo_names(), {"o/a", "o/c"})
        self.assertEqual({pr.repo_full_name for pr in filtrado.pulls}, {"o/a", "o/c"})

    def test_surviving_records_are_unchanged(self):
        filtrado = filter_repositories(self.corpus, FilterConfig(top_n_by_stars=10))
        self.assertEqual(filtrado, self.corpus)


class MergeAndLayoutTests(SimpleTestCase):

    def test_first_occurrence_wins(self):
        a = Corpus(pulls=(_pr("o/a", author="x"),), repos=(_repo("o/a", 1),))
        b = Corpus(pulls=(_pr("o/a", author="y"), _pr("o/b")), repos=(_repo("o/a", 99), _repo("o/b", 2)))
        merged = merge_corpora(a, b)
        self.assertEqual([pr.author for pr in merged.pulls], ["x", "a"])
        self.assertEqual([r.stars for r in merged.repos], [1, 2])

    def test_corpus_dirs_finds_fetch_subdirectories(self):
        base = _tmpdir(self)
        for nombre in ("o__b", "o__a"):
            (base / nombre).mkdir()
            (base / nombre / "pulls.jsonl").touch()
        (base / "vacio").mkdir()
        self.assertEqual(corpus_dirs(base), [base / "o__a", base / "o__b"])
        self.assertEqual(corpus_dirs(HAND_CORPUS), [HAND_CORPUS])


class RoleAndSizeRulesTests(SimpleTestCase):

    def test_derive_comment_role(self):
        self.assertEqual(derive_comment_role("a", "a", "MEMBER"), CONTRIBUTOR)
        self.assertEqual(derive_comment_role("m", "a", "MEMBER"), INTEGRATOR)
        self.assertEqual(derive_comment_role("m", "a", integrators={"m"}), INTEGRATOR)
        self.assertEqual(derive_comment_role("r", "a", "CONTRIBUTOR", reviewers={"r"}), REVIEWER)
        self.assertEqual(derive_comment_role("z", "a", "NONE"), OTHER)

    def test_repo_size_boundaries(self):
        self.assertEqual(repo_size_for(0), "small")
        self.assertEqual(repo_size_for(100), "small")
        self.assertEqual(repo_size_for(101), "medium")
        self.assertEqual(repo_size_for(1000), "medium")
        self.assertEqual(repo_size_for(1001), "large")

    def test_repo_size_must_match_pr_count(self):
        form = RepoMetaForm(data={"repo_full_name": "o/r", "stars": 1, "pr_count": 500, "repo_size": "small"})
        self.assertFalse(form.is_valid())
        self.assertIn("repo_size", form.errors)

    def test_timestamps_need_time_and_zone(self):
        def commit(valor):
            return CommitForm(data={"repo_full_name": "o/r", "author": "a", "committed_at": valor})

        for valor in ("2019-01-01", "2019-01-01T10:00:00", "2019-01-01 10:00", "ayer", "2019-13-01T10:00:00Z"):
            with self.subTest(valor=valor):
                form = commit(valor)
                self.assertFalse(form.is_valid())
                self.assertIn("committed_at", form.errors)

        form = commit("2019-01-01T10:00:00.5+02:00")
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.cleaned_data["committed_at"], datetime(2019, 1, 1, 8, 0, 0, 500000, tzinfo=UTC))
        self.assertTrue(commit("2019-01-01T10:00:00Z").is_valid())
