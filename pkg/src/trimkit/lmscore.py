"""Masked-position and sequence scoring with an add-k n-gram model.

This is the desk-scale stand-in for a neural masked LM: deterministic,
dependency-free, trained in seconds. A masked position is scored by
factorizing both directions around the gap,

    score(w) = p(w | left context) * p(right token | context ending in w)

and normalizing over the candidate set. The backoff rule is "longest
observed context suffix", and every conditional uses add-k smoothing

    p(w | ctx) = (count(ctx, w) + k) / (count(ctx) + k * |vocab|).

Real neural scorers plug in through the wire protocol at the bottom of
the module (`HttpScorer`, `LineStreamScorer`).
"""

from __future__ import annotations

import gzip
import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol

import requests

from .errors import ScorerError
from .textcore import Corpus, TokenSeq, tokenize

BOS = "<s>"
EOS = "</s>"

MODEL_FORMAT = "trimkit-ngram"
MODEL_VERSION = 1

DEFAULT_ORDER = 3
DEFAULT_SMOOTHING_K = 0.01

_DELTA_P_CACHE_CAP = 1 << 16


@dataclass(frozen=True)
class MaskedQuery:
    """A token sequence with one position treated as masked."""

    context: TokenSeq
    position: int

    def __post_init__(self):
        if not 0 <= self.position < len(self.context):
            raise ScorerError(
                f"mask position {self.position} out of range for context of length {len(self.context)}"
            )


@dataclass(frozen=True)
class ScoreDistribution:
    """Probabilities per candidate word, normalized over the candidates."""

    probs: Mapping[str, float]

    def top(self) -> tuple[str, float]:
        return max(self.probs.items(), key=lambda kv: (kv[1], kv[0]))

    def __getitem__(self, word: str) -> float:
        return self.probs[word]


class NGramModel:
    """Immutable add-k n-gram model with backoff tables for every order."""

    def __init__(self, order: int, smoothing_k: float,
                 counts: dict[tuple[str, ...], dict[str, int]],
                 vocab: frozenset[str]):
        self.order = order
        self.smoothing_k = smoothing_k
        self.counts = counts
        self.vocab = vocab
        self.totals = {ctx: sum(words.values()) for ctx, words in counts.items()}
        # Full-vocab candidate pool: real words only, boundary markers are
        # context-only and never offered as alternatives.
        self.candidate_vocab = tuple(sorted(vocab - {BOS, EOS}))

    def prob(self, word: str, context: tuple[str, ...]) -> float:
        """Smoothed p(word | context), backing off to the longest observed suffix."""
        ctx = context[-(self.order - 1):] if self.order > 1 else ()
        while ctx and ctx not in self.counts:
            ctx = ctx[1:]
        words = self.counts.get(ctx, {})
        total = self.totals.get(ctx, 0)
        k = self.smoothing_k
        return (words.get(word, 0) + k) / (total + k * len(self.vocab))

    def __eq__(self, other) -> bool:
        if not isinstance(other, NGramModel):
            return NotImplemented
        return (self.order == other.order and self.smoothing_k == other.smoothing_k
                and self.counts == other.counts and self.vocab == other.vocab)

    @property
    def scorer_id(self) -> str:
        return f"ngram-order{self.order}-k{self.smoothing_k:g}"


def train_ngram(corpus: Corpus, order: int = DEFAULT_ORDER,
                smoothing_k: float = DEFAULT_SMOOTHING_K) -> NGramModel:
    """Count n-grams of every length 1..order with per-fragment boundary padding."""
    if order < 2:
        raise ScorerError(f"order must be >= 2, got {order}")
    if not smoothing_k > 0:
        raise ScorerError(f"smoothing_k must be > 0, got {smoothing_k}")
    if len(corpus) == 0:
        raise ScorerError("cannot train on an empty corpus")

    counts: dict[tuple[str, ...], dict[str, int]] = {}
    vocab: set[str] = {BOS, EOS}
    for fragment in corpus:
        norms = tokenize(fragment.text).norms()
        vocab.update(norms)
        padded = (BOS,) * (order - 1) + norms + (EOS,)
        for i in range(order - 1, len(padded)):
            word = padded[i]
            for clen in range(order):
                ctx = padded[i - clen:i]
                table = counts.setdefault(ctx, {})
                table[word] = table.get(word, 0) + 1
    return NGramModel(order, smoothing_k, counts, frozenset(vocab))


def _candidate_pool(model: NGramModel, actual: str | None) -> tuple[str, ...]:
    if actual is None or actual in model.vocab:
        return model.candidate_vocab
    return tuple(sorted(set(model.candidate_vocab) | {actual}))


def _gap_factors(model: NGramModel, norms: tuple[str, ...], position: int):
    """Left context and, when present, the token to the right of the gap."""
    lo = max(0, position - (model.order - 1))
    left = norms[lo:position]
    right = norms[position + 1] if position + 1 < len(norms) else None
    return left, right


def _gap_score(model: NGramModel, left: tuple[str, ...], right: str | None, word: str) -> float:
    s = model.prob(word, left)
    if right is not None:
        s *= model.prob(right, (left + (word,))[-(model.order - 1):])
    return s


def _predict_over_norms(model: NGramModel, norms: tuple[str, ...], position: int,
                        candidates: Iterable[str] | None) -> dict[str, float]:
    left, right = _gap_factors(model, norms, position)
    if candidates is None:
        pool = _candidate_pool(model, norms[position])
    else:
        pool = tuple(sorted({w.lower() for w in candidates}))
        if not pool:
            raise ScorerError("candidate set is empty")
    scores = [_gap_score(model, left, right, w) for w in pool]
    z = sum(scores)
    if z <= 0:
        raise ScorerError("degenerate score mass at masked position")
    return {w: s / z for w, s in zip(pool, scores)}


def masked_predict(model: NGramModel, query: MaskedQuery,
                   candidates: Iterable[str] | None = None) -> ScoreDistribution:
    """Score candidates for the masked position and normalize over them.

    ``candidates=None`` selects full-vocab mode: every trained word plus
    the queried word itself when it is out of vocabulary.
    """
    return ScoreDistribution(
        _predict_over_norms(model, query.context.norms(), query.position, candidates))


@dataclass
class SequenceScore:
    logprob: float
    perplexity: float
    n_predicted: int


def sequence_logprob(model: NGramModel, seq: TokenSeq) -> SequenceScore:
    """Chain-rule log probability of the sequence, end boundary included."""
    if len(seq) == 0:
        raise ScorerError("cannot score an empty sequence")
    ctx = (BOS,) * (model.order - 1)
    logprob = 0.0
    for norm in seq.norms() + (EOS,):
        logprob += math.log(model.prob(norm, ctx))
        ctx = (ctx + (norm,))[-(model.order - 1):]
    n = len(seq) + 1
    return SequenceScore(logprob=logprob, perplexity=math.exp(-logprob / n), n_predicted=n)


class MaskedScorer(Protocol):
    """Anything that can score a masked position over candidate words."""

    scorer_id: str

    def predict(self, context: list[str], mask_index: int,
                candidates: list[str] | None) -> dict[str, float]:
        ...


class NGramScorer:
    """MaskedScorer facade over an :class:`NGramModel`.

    ``delta_p_at`` keeps a bounded memo of per-gap summary statistics
    (normalizer and top-2 scores); the memo only short-circuits repeated
    gaps and never changes a result.
    """

    def __init__(self, model: NGramModel):
        self.model = model
        self.scorer_id = model.scorer_id
        self._gap_cache: dict[tuple, tuple[float, str, float, float]] = {}

    def predict(self, context: list[str], mask_index: int,
                candidates: list[str] | None = None) -> dict[str, float]:
        if not 0 <= mask_index < len(context):
            raise ScorerError(f"mask index {mask_index} out of range")
        return _predict_over_norms(self.model, tuple(context), mask_index, candidates)

    def delta_p_at(self, norms: tuple[str, ...], position: int) -> float:
        actual = norms[position]
        model = self.model
        left, right = _gap_factors(model, norms, position)
        in_vocab = actual in model.vocab

        key = (left, right)
        cached = self._gap_cache.get(key) if in_vocab else None
        if cached is None:
            pool = _candidate_pool(model, actual)
            best_w, best_s, second_s, z = "", -1.0, -1.0, 0.0
            for w in pool:
                s = _gap_score(model, left, right, w)
                z += s
                if s > best_s or (s == best_s and w < best_w):
                    best_w, best_s, second_s = w, s, best_s
                elif s > second_s:
                    second_s = s
            if in_vocab:
                if len(self._gap_cache) >= _DELTA_P_CACHE_CAP:
                    self._gap_cache.clear()
                self._gap_cache[key] = (z, best_w, best_s, second_s)
        else:
            z, best_w, best_s, second_s = cached

        s_act = _gap_score(model, left, right, actual)
        alt = second_s if best_w == actual else best_s
        return (s_act - alt) / z


def delta_p(scorer, context: TokenSeq, position: int) -> float:
    """P(actual word) minus P(best alternative) at a masked position.

    Positive iff the actual word is the scorer's top choice; always in
    [-1, 1]. Ties among alternatives do not change the value (the
    alternative probability is the max over non-actual candidates).
    """
    if not 0 <= position < len(context):
        raise ScorerError(f"position {position} out of range")
    token = context[position]
    if not token.is_word:
        raise ScorerError(f"cannot score punctuation token {token.surface!r}")
    if isinstance(scorer, NGramScorer):
        return scorer.delta_p_at(context.norms(), position)
    probs = scorer.predict(list(context.norms()), position, None)
    p_actual = probs.get(token.norm, 0.0)
    p_alt = max((p for w, p in probs.items() if w != token.norm), default=0.0)
    return p_actual - p_alt


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save_model(model: NGramModel, path: str | Path) -> None:
    """Serialize to a gzipped, version-tagged JSON file.

    The byte layout is canonical (sorted keys, zeroed gzip mtime), so
    save -> load -> save round-trips bit-identically.
    """
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "order": model.order,
        "smoothing_k": model.smoothing_k,
        "vocab": sorted(model.vocab),
        # Context tuples joined on a space: token norms never contain
        # whitespace, so the encoding is unambiguous.
        "counts": {" ".join(ctx): dict(sorted(words.items()))
                   for ctx, words in sorted(model.counts.items())},
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        with gzip.GzipFile(fileobj=fh, mode="wb", mtime=0, filename="") as gz:
            gz.write(blob)


def load_model(path: str | Path) -> NGramModel:
    with gzip.open(path, "rb") as gz:
        payload = json.loads(gz.read().decode("utf-8"))
    if payload.get("format") != MODEL_FORMAT:
        raise ScorerError(f"{path}: not a {MODEL_FORMAT} file")
    if payload.get("version") != MODEL_VERSION:
        raise ScorerError(f"{path}: unsupported model version {payload.get('version')!r}")
    counts = {tuple(ctx.split(" ")) if ctx else (): words
              for ctx, words in payload["counts"].items()}
    return NGramModel(payload["order"], payload["smoothing_k"], counts,
                      frozenset(payload["vocab"]))


# ---------------------------------------------------------------------------
# External scorer wire protocol
# ---------------------------------------------------------------------------

def _scorer_request(context: list[str], mask_index: int,
                    candidates: list[str] | None) -> dict:
    return {"context": list(context), "mask_index": mask_index,
            "candidates": list(candidates) if candidates is not None else None}


def _parse_scorer_response(payload: dict) -> dict[str, float]:
    if not isinstance(payload, dict) or "probs" not in payload:
        raise ScorerError("scorer response missing 'probs'")
    probs = payload["probs"]
    if not isinstance(probs, dict):
        raise ScorerError("'probs' must be an object of word -> probability")
    return {str(w): float(p) for w, p in probs.items()}


class HttpScorer:
    """Masked scorer backed by an HTTP endpoint.

    Each prediction is one POST; calls are independent, so any number of
    requests may be in flight concurrently.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0, retries: int = 2):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.scorer_id = f"http:{endpoint}"

    def predict(self, context: list[str], mask_index: int,
                candidates: list[str] | None = None) -> dict[str, float]:
        body = _scorer_request(context, mask_index, candidates)
        last_error: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(self.endpoint, json=body, timeout=self.timeout)
                resp.raise_for_status()
                return _parse_scorer_response(resp.json())
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
        raise ScorerError(f"scorer endpoint {self.endpoint} failed: {last_error}") from last_error


class LineStreamScorer:
    """Masked scorer over a line-delimited JSON request/response stream.

    Requests and responses are matched by strict ordering on the stream;
    a lock serializes each write/read pair so the scorer is safe to share
    between worker threads.
    """

    def __init__(self, reader, writer, scorer_id: str = "stream"):
        self._reader = reader
        self._writer = writer
        self._lock = threading.Lock()
        self.scorer_id = scorer_id

    def predict(self, context: list[str], mask_index: int,
                candidates: list[str] | None = None) -> dict[str, float]:
        line = json.dumps(_scorer_request(context, mask_index, candidates))
        with self._lock:
            self._writer.write(line + "\n")
            self._writer.flush()
            reply = self._reader.readline()
        if not reply:
            raise ScorerError("scorer stream closed")
        try:
            return _parse_scorer_response(json.loads(reply))
        except json.JSONDecodeError as exc:
            raise ScorerError(f"malformed scorer reply: {reply!r}") from exc
