"""
Señales observables de seguridad psicológica por pull request (13 cues).
"""
import json
import logging
import re
from dataclasses import dataclass, astuple, fields
from pathlib import Path

import pandas as pd
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

from .diagnostics import BINARY, CONTINUOUS
from .records import CONTRIBUTOR, INTEGRATOR, REVIEWER, OTHER

logger = logging.getLogger(__name__)

# Orden de las columnas de cues.csv
CUE_NAMES = (
    "merged_or_not",
    "pr_comment_num",
    "reopen_num",
    "has_exchange",
    "comment_conflict",
    "contrib_comment",
    "num_comments_con",
    "inte_comment",
    "reviewer_comment",
    "other_comment",
    "num_participant",
    "at_tag",
    "emoji_count",
)

CUE_KINDS = {
    "merged_or_not": BINARY,
    "pr_comment_num": CONTINUOUS,
    "reopen_num": CONTINUOUS,
    "has_exchange": BINARY,
    "comment_conflict": BINARY,
    "contrib_comment": BINARY,
    "num_comments_con": CONTINUOUS,
    "inte_comment": BINARY,
    "reviewer_comment": BINARY,
    "other_comment": BINARY,
    "num_participant": CONTINUOUS,
    "at_tag": BINARY,
    "emoji_count": CONTINUOUS,
}

# Bloques de código (``` o ~~~) y código en línea
FENCED_CODE_RE = re.compile(r"(```|~~~).*?(?:\1|\Z)", re.DOTALL)
INLINE_CODE_RE = re.compile(r"`[^`\n]*`")
# Login de GitHub: alfanumérico y guiones simples, hasta 39 caracteres
MENTION_RE = re.compile(r"(?<![\w@/.])@[A-Za-z0-9](?:[A-Za-z0-9]|-(?=[A-Za-z0-9])){0,38}")
CONFLICT_RE = re.compile(r"\bconflict", re.IGNORECASE)


@dataclass(frozen=True)
class CueVector:
    merged_or_not: int
    pr_comment_num: int
    reopen_num: int
    has_exchange: int
    comment_conflict: int
    contrib_comment: int
    num_comments_con: int
    inte_comment: int
    reviewer_comment: int
    other_comment: int
    num_participant: int
    at_tag: int
    emoji_count: int

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def as_row(self):
        return astuple(self)


# ==========================
# Tabla de emojis
# ==========================
@dataclass(frozen=True)
class EmojiTable:
    version: str
    sequences: frozenset
    max_len: int
    first_codepoints: frozenset

    @classmethod
    def from_sequences(cls, sequences, version="ad-hoc"):
        sequences = frozenset(s for s in sequences if s)
        if not sequences:
            raise ImproperlyConfigured("La tabla de emojis está vacía.")
        return cls(
            version=version,
            sequences=sequences,
            max_len=max(len(s) for s in sequences),
            first_codepoints=frozenset(s[0] for s in sequences),
        )

    def __len__(self):
        return len(self.sequences)


def _hex_seq(text):
    return "".join(chr(int(cp, 16)) for cp in text.split())


def _expand_ranges(ranges):
    for start, end in ranges:
        for cp in range(int(start, 16), int(end, 16) + 1):
            yield chr(cp)


def load_emoji_table(path=None):
    """
    Lee el archivo versionado de emojis:
      ranges                   codepoints con presentación emoji por defecto
      text_ranges              presentación de texto (©, ®, ™, flechas): solo cuentan con FE0F
      variation_selector       cada codepoint de los rangos también con FE0F
      regional_indicator_pairs banderas (pares de indicadores regionales)
      modifiers/modifier_bases tonos de piel sobre las bases indicadas
      sequences                secuencias explícitas (ZWJ, keycaps)
    """
    path = Path(path or settings.PS_EMOJI_TABLE)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ImproperlyConfigured(f"No existe la tabla de emojis {path}")

    singles = list(_expand_ranges(data.get("ranges", [])))
    sequences = set(singles)

    selector = data.get("variation_selector")
    if selector:
        vs = _hex_seq(selector)
        sequences.update(s + vs for s in singles)
        texto = set(_expand_ranges(data.get("text_ranges", []))) - sequences
        sequences.update(s + vs for s in texto)

    if data.get("regional_indicator_pairs"):
        indicadores = [chr(cp) for cp in range(0x1F1E6, 0x1F1FF + 1)]
        sequences.update(a + b for a in indicadores for b in indicadores)

    modifiers = [_hex_seq(m) for m in data.get("modifiers", [])]
    for base in _expand_ranges(data.get("modifier_bases", [])):
        sequences.update(base + m for m in modifiers)

    sequences.update(_hex_seq(s) for s in data.get("sequences", []))

    table = EmojiTable.from_sequences(sequences, version=data.get("version", path.name))
    logger.debug(f"Tabla de emojis {table.version}: {len(table)} secuencias")
    return table


def count_emojis(text, table):
    """Ocurrencias sin solape, de izquierda a derecha, probando primero la secuencia más larga."""
    if not text:
        return 0
    total = 0
    i = 0
    n = len(text)
    while i < n:
        if text[i] not in table.first_codepoints:
            i += 1
            continue
        for length in range(min(table.max_len, n - i), 0, -1):
            if text[i:i + length] in table.sequences:
                total += 1
                i += length
                break
        else:
            i += 1
    return total


# ==========================
# Extracción
# ==========================
def strip_code(body):
    return INLINE_CODE_RE.sub(" ", FENCED_CODE_RE.sub(" ", body))


def has_mention(body):
    return MENTION_RE.search(strip_code(body)) is not None


def has_conflict_keyword(body):
    return CONFLICT_RE.search(body) is not None


def extract_cues(pr, table):
    comments = pr.comments
    roles = {c.role for c in comments}
    num_con = sum(1 for c in comments if c.role == CONTRIBUTOR)
    contrib = int(num_con >= 1)
    inte = int(INTEGRATOR in roles)
    return CueVector(
        merged_or_not=int(pr.merged),
        pr_comment_num=len(comments),
        reopen_num=pr.reopen_count,
        has_exchange=int(contrib and inte),
        comment_conflict=int(any(has_conflict_keyword(c.body) for c in comments)),
        contrib_comment=contrib,
        num_comments_con=num_con,
        inte_comment=inte,
        reviewer_comment=int(REVIEWER in roles),
        other_comment=int(OTHER in roles),
        num_participant=len({c.author for c in comments}),
        at_tag=int(any(has_mention(c.body) for c in comments)),
        emoji_count=sum(count_emojis(c.body, table) for c in comments),
    )


def extract_corpus_cues(corpus, table):
    """{(repo, pr_number): CueVector} en el orden del corpus."""
    return {pr.key: extract_cues(pr, table) for pr in corpus.pulls}


def cues_to_frame(cue_map):
    """DataFrame con repo_full_name, pr_number y las 13 columnas de cues."""
    filas = [(repo, number, *cv.as_row()) for (repo, number), cv in cue_map.items()]
    frame = pd.DataFrame(filas, columns=["repo_full_name", "pr_number", *CUE_NAMES])
    return frame.astype({name: "int64" for name in CUE_NAMES})


def write_cues_csv(cue_map, path):
    frame = cues_to_frame(cue_map)[list(CUE_NAMES)]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return len(frame)
