"""Remove an inferable term set from text and build instruction prompts.

Distillation deletes every token whose norm is in the term set and
records the deleted positions, so the original can always be rebuilt
exactly (the "perfect oracle" upper bound for any reconstructor).
Surfaces are never altered: "The cat" with {the} distills to "cat",
not "Cat".
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

from .errors import TemplateError, TrimkitError
from .textcore import Corpus, Lexicon, Token, TokenSeq, detokenize, tokenize

BUILTIN_TEMPLATES = ("plain", "distilled")

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


@dataclass(frozen=True)
class TermSet:
    """A removal lexicon plus where it came from."""

    lexicon: Lexicon
    source: str = "manual"

    def __post_init__(self):
        if len(self.lexicon) == 0:
            raise TrimkitError("term set must be non-empty")

    def __contains__(self, norm: str) -> bool:
        return norm in self.lexicon

    def words(self) -> tuple[str, ...]:
        return self.lexicon.words

    @classmethod
    def from_words(cls, words: Iterable[str], source: str = "manual") -> "TermSet":
        return cls(Lexicon.from_words(words, name=source), source=source)


@dataclass(frozen=True)
class DistilledPair:
    """An original sequence, its distilled form, and the deleted positions."""

    original: TokenSeq
    distilled: TokenSeq
    removed_positions: tuple[int, ...]
    id: int | None = None

    @property
    def no_removal(self) -> bool:
        return not self.removed_positions


def distill_seq(seq: TokenSeq, s: TermSet, pair_id: int | None = None) -> DistilledPair:
    """Delete every token whose norm is in the term set."""
    kept: list[Token] = []
    removed: list[int] = []
    for i, token in enumerate(seq):
        if token.norm in s:
            removed.append(i)
        else:
            kept.append(token)
    return DistilledPair(seq, TokenSeq(tuple(kept)), tuple(removed), id=pair_id)


def reinsert_removed(pair: DistilledPair) -> TokenSeq:
    """Rebuild the original by reinserting the recorded removals.

    Works purely from the distilled tokens and the (position, token)
    records, so it doubles as a check that the pair is self-consistent.
    """
    tokens = list(pair.distilled.tokens)
    for position in pair.removed_positions:
        if not (0 <= position <= len(tokens) and position < len(pair.original)):
            raise TrimkitError(f"removed position {position} out of range")
        tokens.insert(position, pair.original[position])
    return TokenSeq(tuple(tokens))


def make_pairs(corpus: Corpus, s: TermSet) -> Iterator[DistilledPair]:
    """One distilled pair per fragment, in fragment order.

    Fragments with nothing to remove still yield a pair; check
    ``pair.no_removal``.
    """
    for fragment in corpus:
        yield distill_seq(tokenize(fragment.text), s, pair_id=fragment.id)


def saved_tokens_pct(pair: DistilledPair) -> float:
    """Percent of tokens removed, punctuation tokens included."""
    n = len(pair.original)
    if n == 0:
        raise TrimkitError("saved_tokens_pct needs a non-empty original")
    return 100.0 * (n - len(pair.distilled)) / n


def saved_tokens_pct_words_only(pair: DistilledPair) -> float:
    """Percent of word tokens removed; 0 when the original has no words."""
    n = pair.original.word_count()
    if n == 0:
        return 0.0
    return 100.0 * (n - pair.distilled.word_count()) / n


def _load_template(template: str | Path) -> str:
    name = str(template)
    if name in BUILTIN_TEMPLATES:
        text = resources.files("trimkit.templates").joinpath(f"{name}.txt").read_text("utf-8")
    else:
        path = Path(template)
        if not path.is_file():
            raise TemplateError(f"unknown template: {name!r}")
        text = path.read_text(encoding="utf-8")
    # Templates are single prompt lines; tolerate a final newline added
    # by text editors.
    return text[:-1] if text.endswith("\n") else text


def build_prompt(s: TermSet, question: str, template: str | Path = "distilled") -> str:
    """Fill a prompt template with the term list and the question."""
    if not question.strip():
        raise TemplateError("question must be non-empty")
    text = _load_template(template)
    filled = text.replace("{list_of_terms}", ", ".join(s.words()))
    filled = filled.replace("{knowledge_question}", question)
    leftover = _PLACEHOLDER_RE.search(filled)
    if leftover:
        raise TemplateError(f"unresolved placeholder {leftover.group(0)!r} in template {template!r}")
    return filled


# ---------------------------------------------------------------------------
# Pair files (JSONL)
# ---------------------------------------------------------------------------

def pair_record(pair: DistilledPair) -> dict:
    return {
        "id": pair.id,
        "original": detokenize(pair.original),
        "distilled": detokenize(pair.distilled),
        "removed_positions": list(pair.removed_positions),
        "saved_pct": saved_tokens_pct(pair) if len(pair.original) else 0.0,
        "saved_pct_words_only": saved_tokens_pct_words_only(pair),
    }


def write_pairs(pairs: Iterable[DistilledPair], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair_record(pair), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_pairs(path: str | Path) -> list[DistilledPair]:
    pairs: list[DistilledPair] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TrimkitError(f"{path}:{lineno}: malformed pair record: {exc}") from exc
            original = tokenize(record["original"])
            distilled = tokenize(record["distilled"])
            removed = tuple(record["removed_positions"])
            pair = DistilledPair(original, distilled, removed, id=record.get("id"))
            if reinsert_removed(pair).surfaces() != original.surfaces():
                raise TrimkitError(f"{path}:{lineno}: removed_positions do not match the texts")
            pairs.append(pair)
    return pairs
