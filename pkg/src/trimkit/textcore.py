"""Tokenization, detokenization, lexicons, and corpus ingestion.

Everything downstream works on :class:`TokenSeq`. The tokenizer is
deliberately simple: a word token is a maximal run of letters, digits,
and apostrophes (so "don't" stays one token), and every other non-space
character is a single punctuation token. Matching against lexicons is
case-insensitive via ``Token.norm``; surfaces are preserved for output.

Token counts reported elsewhere (saved-token percentages in particular)
are counts of these word/punctuation tokens, not subword billing units.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import CorpusError, LexiconError
from ._wordlists import BUILTIN_LEXICONS

logger = logging.getLogger(__name__)

WORD = "word"
PUNCTUATION = "punctuation"

# A word is a maximal run of letters/digits/apostrophes; any other
# non-space character stands alone as punctuation.
_TOKEN_RE = re.compile(r"(?:[^\W_]|['’])+|\S")
_WORD_RE = re.compile(r"(?:[^\W_]|['’])+\Z")


@dataclass(frozen=True)
class Token:
    """One surface token; ``norm`` is the lowercased surface."""

    surface: str
    norm: str
    kind: str

    @classmethod
    def from_surface(cls, surface: str) -> "Token":
        kind = WORD if _WORD_RE.match(surface) else PUNCTUATION
        return cls(surface=surface, norm=surface.lower(), kind=kind)

    @property
    def is_word(self) -> bool:
        return self.kind == WORD


@dataclass(frozen=True)
class TokenSeq:
    """Immutable ordered token sequence."""

    tokens: tuple[Token, ...]

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return TokenSeq(self.tokens[index])
        return self.tokens[index]

    def norms(self) -> tuple[str, ...]:
        return tuple(t.norm for t in self.tokens)

    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)

    def word_count(self) -> int:
        return sum(1 for t in self.tokens if t.is_word)

    @classmethod
    def from_tokens(cls, tokens: Iterable[Token]) -> "TokenSeq":
        return cls(tuple(tokens))


@dataclass(frozen=True)
class Lexicon:
    """Ordered, case-insensitive word set. Entries are lowercase and unique."""

    words: tuple[str, ...]
    name: str = "anonymous"

    def __post_init__(self):
        object.__setattr__(self, "_index", frozenset(self.words))

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self) -> Iterator[str]:
        return iter(self.words)

    def __contains__(self, norm: str) -> bool:
        return norm in self._index

    def head(self, n: int, name: str | None = None) -> "Lexicon":
        return Lexicon(self.words[:n], name or self.name)

    @classmethod
    def from_words(cls, words: Iterable[str], name: str = "anonymous") -> "Lexicon":
        seen: dict[str, None] = {}
        for w in words:
            seen.setdefault(w.strip().lower(), None)
        seen.pop("", None)
        return cls(tuple(seen), name)


@dataclass(frozen=True)
class Paragraph:
    """One corpus fragment. ``id`` is the position in file order."""

    id: int
    text: str
    source_id: object = None


@dataclass(frozen=True)
class Corpus:
    fragments: tuple[Paragraph, ...]
    name: str = "anonymous"

    def __len__(self) -> int:
        return len(self.fragments)

    def __iter__(self) -> Iterator[Paragraph]:
        return iter(self.fragments)

    @classmethod
    def from_texts(cls, texts: Iterable[str], name: str = "anonymous") -> "Corpus":
        frags = tuple(Paragraph(i, t) for i, t in enumerate(texts))
        return cls(frags, name)


def tokenize(text: str) -> TokenSeq:
    """Split raw text into word and punctuation tokens.

    Deterministic: identical input yields an identical sequence. Empty
    input yields an empty sequence.
    """
    return TokenSeq(tuple(Token.from_surface(m.group(0)) for m in _TOKEN_RE.finditer(text)))


def detokenize(seq: TokenSeq) -> str:
    """Render tokens back to text.

    Words are joined by single spaces and punctuation attaches to the
    preceding token, so removing tokens never leaves doubled spaces.
    """
    parts: list[str] = []
    for token in seq:
        if parts and token.kind == WORD:
            parts.append(" ")
        parts.append(token.surface)
    return "".join(parts)


def load_lexicon(source: str | Path) -> Lexicon:
    """Load a lexicon from a builtin name or a one-word-per-line file.

    Lines starting with ``#`` are comments. Entries are lowercased and
    deduplicated preserving first occurrence.
    """
    name = str(source)
    if name in BUILTIN_LEXICONS:
        return Lexicon(tuple(BUILTIN_LEXICONS[name]), name=name)

    path = Path(source)
    if not path.is_file():
        raise LexiconError(f"lexicon not found: no builtin or file named {name!r}")

    words: dict[str, None] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        entry = line.strip()
        if not entry or entry.startswith("#"):
            continue
        norm = entry.lower()
        seq = tokenize(norm)
        if len(seq) != 1 or seq[0].kind != WORD or seq[0].norm != norm:
            raise LexiconError(f"{path}:{lineno}: not a single word entry: {entry!r}")
        words.setdefault(norm, None)
    if not words:
        raise LexiconError(f"{path}: empty lexicon")
    return Lexicon(tuple(words), name=path.stem)


def _iter_plain_paragraphs(text: str) -> Iterator[str]:
    block: list[str] = []
    for line in text.splitlines():
        if line.strip():
            block.append(line)
        elif block:
            yield "\n".join(block)
            block = []
    if block:
        yield "\n".join(block)


def load_corpus(path: str | Path, format: str = "plain", strict: bool = True) -> Corpus:
    """Load a corpus file.

    ``plain`` splits paragraphs on one or more blank lines. ``jsonl``
    expects one JSON object per line with a required ``text`` key and an
    optional ``id`` key (kept as ``source_id``; fragment ids are always
    assigned 0..m-1 in file order). Malformed jsonl lines raise under
    ``strict`` and are logged and skipped otherwise.
    """
    path = Path(path)
    if not path.is_file():
        raise CorpusError(f"corpus file not found: {path}")
    raw = path.read_text(encoding="utf-8")

    fragments: list[Paragraph] = []
    if format == "plain":
        for text in _iter_plain_paragraphs(raw):
            fragments.append(Paragraph(len(fragments), text))
    elif format == "jsonl":
        for lineno, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                if not isinstance(record, dict) or "text" not in record:
                    raise ValueError("record must be an object with a 'text' key")
                text = record["text"]
                if not isinstance(text, str):
                    raise ValueError("'text' must be a string")
            except ValueError as exc:
                if strict:
                    raise CorpusError(f"{path}:{lineno}: malformed jsonl record: {exc}") from exc
                logger.warning("%s:%d: skipping malformed jsonl record: %s", path, lineno, exc)
                continue
            fragments.append(Paragraph(len(fragments), text, source_id=record.get("id")))
    else:
        raise CorpusError(f"unknown corpus format: {format!r}")
    return Corpus(tuple(fragments), name=path.name)


def count_lexicon_terms(seq: TokenSeq, lex: Lexicon) -> int:
    """Number of tokens whose norm is in the lexicon."""
    return sum(1 for t in seq if t.norm in lex)
