import shutil
import tempfile
from datetime import datetime, timezone as dt_timezone
from pathlib import Path

import numpy as np
from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase

from ps_app.corpus import load_corpus
from ps_app.cues import (
    CUE_KINDS, CUE_NAMES, EmojiTable, count_emojis, cues_to_frame, extract_corpus_cues,
    extract_cues, has_conflict_keyword, has_mention, load_emoji_table, write_cues_csv,
)
from ps_app.diagnostics import BINARY
from ps_app.records import CommentRecord, PullRequestRecord, CONTRIBUTOR, INTEGRATOR

from .factories import HAND_CORPUS

UTC = dt_timezone.utc

# Valores calculados a mano para el corpus de ejemplo, en el orden de CUE_NAMES
EXPECTED = {
    ("acme/widgets", 1): (1, 3, 0, 1, 0, 1, 1, 1, 1, 0, 3, 1, 1),
    ("acme/widgets", 2): (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    ("acme/widgets", 3): (1, 4, 1, 1, 1, 1, 2, 1, 0, 1, 3, 0, 2),
    ("acme/widgets", 4): (1, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 1, 0),
    ("acme/widgets", 5): (0, 2, 0, 0, 0, 1, 2, 0, 0, 0, 1, 0, 0),
    ("acme/widgets", 6): (1, 1, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 1),
    ("acme/widgets", 7): (1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    ("acme/gadgets", 1): (1, 3, 0, 1, 0, 1, 1, 1, 0, 1, 3, 1, 1),
    ("acme/gadgets", 2): (0, 1, 0, 0, 0, 1, 1, 0, 0, 0, 1, 0, 0),
    ("acme/gadgets", 3): (1, 5, 0, 1, 1, 1, 2, 1, 1, 0, 3, 1, 0),
    ("acme/gadgets", 4): (1, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0),
    ("acme/gadgets", 5): (0, 2, 0, 0, 0, 1, 1, 0, 0, 1, 2, 0, 0),
}

EMOJI_TOKENS = (
    "👍", "🎉", "✅", "😀", "🇪🇸", "👍🏽", "❤️", "1️⃣", "🧑‍💻", "👨‍👩‍👧‍👦",
)
TEXT_TOKENS = ("hola", " ", "LGTM", "\n", "ok", "see PR", "-->")


def _pr(bodies, merged=True):
    created = datetime(2019, 1, 1, tzinfo=UTC)
    comments = tuple(CommentRecord(a, r, b, created) for a, r, b in bodies)
    return PullRequestRecord("o/r", 1, "author", created, merged, None, 0, comments)


class HandCorpusCuesTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.table = load_emoji_table()
        cls.cue_map = extract_corpus_cues(load_corpus(HAND_CORPUS), cls.table)

    def test_every_cue_of_every_pull_request(self):
        self.assertEqual(list(self.cue_map), list(EXPECTED))
        for key, esperado in EXPECTED.items():
            with self.subTest(pr=key):
                self.assertEqual(self.cue_map[key].as_row(), esperado)

    def test_frame_and_csv(self):
        frame = cues_to_frame(self.cue_map)
        self.assertEqual(list(frame.columns), ["repo_full_name", "pr_number", *CUE_NAMES])
        self.assertTrue(all(str(frame[c].dtype) == "int64" for c in CUE_NAMES))

        out = Path(tempfile.mkdtemp())
        self.addCleanup(shutil.rmtree, out, ignore_errors=True)
        self.assertEqual(write_cues_csv(self.cue_map, out / "cues.csv"), 12)
        lineas = (out / "cues.csv").read_text(encoding="utf-8").splitlines()
        self.assertEqual(lineas[0], ",".join(CUE_NAMES))
        self.assertEqual(lineas[1], "1,3,0,1,0,1,1,1,1,0,3,1,1")

    def test_kinds(self):
        self.assertEqual(set(CUE_KINDS), set(CUE_NAMES))
        self.assertEqual(CUE_KINDS["merged_or_not"], BINARY)


class CueRulesTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.table = load_emoji_table()

    def test_pull_request_without_comments(self):
        cues = extract_cues(_pr([], merged=False), self.table)
        self.assertEqual(cues.as_row(), (0,) * 13)

    def test_exchange_needs_contributor_and_integrator(self):
        solo = extract_cues(_pr([("author", CONTRIBUTOR, "x"), ("author", CONTRIBUTOR, "y")]), self.table)
        self.assertEqual((solo.has_exchange, solo.num_comments_con, solo.num_participant), (0, 2, 1))
        ambos = extract_cues(_pr([("author", CONTRIBUTOR, "x"), ("m", INTEGRATOR, "y")]), self.table)
        self.assertEqual(ambos.has_exchange, 1)

    def test_mentions(self):
        self.assertTrue(has_mention("cc @bob"))
        self.assertTrue(has_mention("@octo-cat please look"))
        self.assertFalse(has_mention("mail me at dev@example.com"))
        self.assertFalse(has_mention("use `@property` here"))
        self.assertFalse(has_mention("```python\n@pytest.fixture\ndef f(): pass\n```"))
        self.assertFalse(has_mention("~~~\n@decorator\n"))
        self.assertFalse(has_mention("@-nope"))

    def test_conflict_keyword(self):
        self.assertTrue(has_conflict_keyword("Merge CONFLICT in setup.py"))
        self.assertTrue(has_conflict_keyword("fixed the conflicts"))
        self.assertFalse(has_conflict_keyword("deconflicted the names"))
        self.assertFalse(has_conflict_keyword("all good"))


class EmojiCountTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.table = load_emoji_table()

    def test_longest_sequence_wins(self):
        self.assertEqual(count_emojis("🧑‍💻", self.table), 1)
        self.assertEqual(count_emojis("👨‍👩‍👧‍👦", self.table), 1)
        self.assertEqual(count_emojis("👍🏽👍", self.table), 2)
        self.assertEqual(count_emojis("🇪🇸🇫🇷", self.table), 2)
        self.assertEqual(count_emojis("", self.table), 0)
        self.assertEqual(count_emojis("plain text 123", self.table), 0)

    def test_text_symbols_need_the_variation_selector(self):
        self.assertEqual(count_emojis("© 2024 Acme™ ↔ ®", self.table), 0)
        self.assertEqual(count_emojis("\u00a9\ufe0f", self.table), 1)
        self.assertEqual(count_emojis("\u2764", self.table), 0)
        self.assertEqual(count_emojis("\u2764\ufe0f", self.table), 1)
        self.assertEqual(count_emojis("\u26a1 \u2705", self.table), 2)

    def test_random_token_strings(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            n = int(rng.integers(0, 12))
            esperado = 0
            partes = []
            for _ in range(n):
                if rng.random() < 0.5:
                    partes.append(EMOJI_TOKENS[int(rng.integers(len(EMOJI_TOKENS)))])
                    esperado += 1
                else:
                    partes.append(TEXT_TOKENS[int(rng.integers(len(TEXT_TOKENS)))])
            texto = "".join(partes)
            with self.subTest(texto=texto):
                self.assertEqual(count_emojis(texto, self.table), esperado)

    def test_small_table(self):
        table = EmojiTable.from_sequences(["a", "ab"])
        self.assertEqual(count_emojis("aab", table), 2)
        self.assertEqual(count_emojis("bbb", table), 0)

    def test_table_errors(self):
        with self.assertRaises(ImproperlyConfigured):
            load_emoji_table("/no/existe/emoji.json")
        with self.assertRaises(ImproperlyConfigured):
            EmojiTable.from_sequences([])

    def test_table_version(self):
        self.assertTrue(self.table.version.startswith("ps-emoji"))
        self.assertIn("✅", self.table.sequences)
