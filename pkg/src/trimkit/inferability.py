"""Rank candidate function words by how predictable they are in context.

For every occurrence of every candidate word in the corpus, the masked
scorer produces a probability gap (actual word versus best alternative);
the per-word mean of those gaps orders the words from most to least
inferable. Prefixes of that ordering ("level sets") are the removal sets
the rest of the pipeline operates on.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import ScorerError, TrimkitError
from .lmscore import delta_p
from .textcore import Corpus, Lexicon, TokenSeq, tokenize

DEFAULT_STEP = 5
DEFAULT_MIN_OCCURRENCES = 10
DEFAULT_WINDOW = 64

FLAG_OK = "ok"
FLAG_LOW_CONFIDENCE = "low_confidence"


@dataclass(frozen=True)
class InferabilityEntry:
    word: str
    mean_delta_p: float
    occurrences: int
    flag: str = FLAG_OK


@dataclass(frozen=True)
class InferabilityReport:
    """Words sorted by mean probability gap, descending; ties break on the word."""

    entries: tuple[InferabilityEntry, ...]
    skipped: tuple[str, ...]
    corpus_id: str = ""
    scorer_id: str = ""

    def __len__(self) -> int:
        return len(self.entries)

    def words(self) -> tuple[str, ...]:
        return tuple(e.word for e in self.entries)


def _window(seq: TokenSeq, position: int, radius: int) -> tuple[TokenSeq, int]:
    lo = max(0, position - radius)
    hi = min(len(seq), position + radius + 1)
    return seq[lo:hi], position - lo


def rank_terms(corpus: Corpus, wordset: Lexicon, scorer,
               window: int = DEFAULT_WINDOW,
               per_fragment_average: bool = False,
               min_occurrences: int = DEFAULT_MIN_OCCURRENCES) -> InferabilityReport:
    """Score every occurrence of every candidate word and sort by mean gap.

    By default the mean is over all scored occurrences. With
    ``per_fragment_average`` the occurrences inside one fragment are
    averaged first and the per-fragment means are then averaged, which
    weights fragments equally regardless of how often the word repeats.
    Long fragments are windowed to ``window`` tokens either side of the
    masked position before scoring. Words with fewer than
    ``min_occurrences`` scored positions are kept but flagged: their mean
    gap is noisy.
    """
    if len(corpus) == 0:
        raise TrimkitError("rank_terms needs a non-empty corpus")
    if len(wordset) == 0:
        raise TrimkitError("rank_terms needs a non-empty word set")

    sums: dict[str, float] = {w: 0.0 for w in wordset}
    counts: dict[str, int] = {w: 0 for w in wordset}
    frag_sums: dict[str, float] = {w: 0.0 for w in wordset}
    frag_counts: dict[str, int] = {w: 0 for w in wordset}

    for fragment in corpus:
        seq = tokenize(fragment.text)
        local: dict[str, tuple[float, int]] = {}
        for position, token in enumerate(seq):
            if not token.is_word or token.norm not in wordset:
                continue
            ctx, mask_index = _window(seq, position, window)
            try:
                gap = delta_p(scorer, ctx, mask_index)
            except ScorerError as exc:
                raise ScorerError(
                    f"scorer failed on fragment {fragment.id} position {position}: {exc}"
                ) from exc
            s, c = local.get(token.norm, (0.0, 0))
            local[token.norm] = (s + gap, c + 1)
        for word, (s, c) in local.items():
            sums[word] += s
            counts[word] += c
            frag_sums[word] += s / c
            frag_counts[word] += 1

    entries = []
    skipped = []
    for word in wordset:
        if counts[word] == 0:
            skipped.append(word)
            continue
        if per_fragment_average:
            mean = frag_sums[word] / frag_counts[word]
        else:
            mean = sums[word] / counts[word]
        flag = FLAG_OK if counts[word] >= min_occurrences else FLAG_LOW_CONFIDENCE
        entries.append(InferabilityEntry(word, mean, counts[word], flag))

    entries.sort(key=lambda e: (-e.mean_delta_p, e.word))
    return InferabilityReport(tuple(entries), tuple(sorted(skipped)),
                              corpus_id=corpus.name,
                              scorer_id=getattr(scorer, "scorer_id", ""))


def level_set(report: InferabilityReport, level: int, step: int = DEFAULT_STEP) -> Lexicon:
    """Top ``level * step`` words of the report as a removal lexicon."""
    if level < 1:
        raise TrimkitError(f"level must be >= 1, got {level}")
    size = level * step
    if size > len(report.entries):
        raise TrimkitError(
            f"level {level} (set size {size}) exceeds the {len(report.entries)}-entry report")
    return Lexicon(report.words()[:size], name=f"level-{level}")


def write_report(report: InferabilityReport, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["word", "mean_delta_p", "occurrences", "flag"])
        for e in report.entries:
            writer.writerow([e.word, repr(e.mean_delta_p), e.occurrences, e.flag])


def read_report(path: str | Path) -> InferabilityReport:
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "word" not in reader.fieldnames:
            raise TrimkitError(f"{path}: not an inferability report (missing header)")
        for row in reader:
            entries.append(InferabilityEntry(row["word"], float(row["mean_delta_p"]),
                                             int(row["occurrences"]),
                                             row.get("flag") or FLAG_OK))
    return InferabilityReport(tuple(entries), skipped=())
