"""Alignment-based function-word metrics and the standard text suite.

The theta metrics grade only the function-word positions of a
reconstruction: the original and reconstructed token sequences are
globally aligned (Needleman-Wunsch), and each aligned column touching a
lexicon word is classified as a match, omission, insertion, or
substitution. Matches are true positives, insertions and substitutions
are false positives, omissions and substitutions are false negatives.

The rest of the suite is deliberately self-contained: plain BLEU with
add-one smoothing on higher orders, unigram/LCS ROUGE F1, an
exact-match METEOR variant (no stems or synonyms, hence "lite"), TF-IDF
cosine similarity, and n-gram perplexity. Values are comparable within a
run of this toolkit, not across papers or reference implementations.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import requests

from .errors import ScorerError, TrimkitError
from .lmscore import NGramModel, sequence_logprob
from .textcore import Corpus, Lexicon, TokenSeq, detokenize, tokenize

logger = logging.getLogger(__name__)

MATCH = "match"
OMISSION = "omission"
INSERTION = "insertion"
SUBSTITUTION = "substitution"

THETA_MODE_FULL = "full"
THETA_MODE_FILTERED = "filtered"


@dataclass(frozen=True)
class AlignmentOp:
    kind: str
    original_word: str | None = None
    reconstructed_word: str | None = None


@dataclass(frozen=True)
class NwScoring:
    match: float = 1.0
    mismatch: float = -1.0
    gap: float = -1.0


def nw_align(a: TokenSeq, b: TokenSeq, scoring: NwScoring = NwScoring()) -> list[AlignmentOp]:
    """Global alignment of two token sequences by norm, maximizing score.

    Traceback prefers diagonal over up (omission, gap in ``b``) over left
    (insertion, gap in ``a``), which makes the op list deterministic.
    """
    xs, ys = a.norms(), b.norms()
    n, m = len(xs), len(ys)
    score = [[0.0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        score[i][0] = score[i - 1][0] + scoring.gap
    for j in range(1, m + 1):
        score[0][j] = score[0][j - 1] + scoring.gap
    for i in range(1, n + 1):
        row, prev = score[i], score[i - 1]
        xi = xs[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (scoring.match if xi == ys[j - 1] else scoring.mismatch)
            up = prev[j] + scoring.gap
            left = row[j - 1] + scoring.gap
            row[j] = max(diag, up, left)

    ops: list[AlignmentOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            step = scoring.match if xs[i - 1] == ys[j - 1] else scoring.mismatch
            if score[i][j] == score[i - 1][j - 1] + step:
                kind = MATCH if xs[i - 1] == ys[j - 1] else SUBSTITUTION
                ops.append(AlignmentOp(kind, xs[i - 1], ys[j - 1]))
                i, j = i - 1, j - 1
                continue
        if i > 0 and score[i][j] == score[i - 1][j] + scoring.gap:
            ops.append(AlignmentOp(OMISSION, original_word=xs[i - 1]))
            i -= 1
            continue
        ops.append(AlignmentOp(INSERTION, reconstructed_word=ys[j - 1]))
        j -= 1
    ops.reverse()
    return ops


@dataclass(frozen=True)
class ThetaCounts:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "ThetaCounts":
        precision = tp / (tp + fp) if tp + fp else 1.0
        recall = tp / (tp + fn) if tp + fn else 1.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(tp, fp, fn, precision, recall, f1)


def _filter_to_lexicon(seq: TokenSeq, lexicon: Lexicon) -> TokenSeq:
    return TokenSeq(tuple(t for t in seq if t.norm in lexicon))


def theta_ops(original: TokenSeq, reconstructed: TokenSeq, lexicon: Lexicon,
              scoring: NwScoring = NwScoring(),
              mode: str = THETA_MODE_FULL) -> list[AlignmentOp]:
    """Alignment ops at the lexicon-word columns.

    ``full`` aligns the complete sequences and keeps the columns where
    either side is a lexicon word; content words anchor the alignment,
    which is what lets a shifted function word show up as an insertion
    next to a substitution rather than sliding into a spurious match.
    ``filtered`` strips both sequences down to lexicon words before
    aligning, which scores only the relative order of the set words.
    """
    if mode == THETA_MODE_FULL:
        ops = nw_align(original, reconstructed, scoring)
        return [op for op in ops
                if (op.original_word is not None and op.original_word in lexicon)
                or (op.reconstructed_word is not None and op.reconstructed_word in lexicon)]
    if mode == THETA_MODE_FILTERED:
        return nw_align(_filter_to_lexicon(original, lexicon),
                        _filter_to_lexicon(reconstructed, lexicon), scoring)
    raise TrimkitError(f"unknown theta mode: {mode!r}")


def theta_metrics(original: TokenSeq, reconstructed: TokenSeq, lexicon: Lexicon,
                  scoring: NwScoring = NwScoring(),
                  mode: str = THETA_MODE_FULL) -> ThetaCounts:
    """Precision/recall/F1 over function-word positions."""
    tp = fp = fn = 0
    for op in theta_ops(original, reconstructed, lexicon, scoring, mode):
        if op.kind == MATCH:
            tp += 1
        elif op.kind == OMISSION:
            fn += 1
        elif op.kind == INSERTION:
            fp += 1
        else:
            if op.reconstructed_word in lexicon:
                fp += 1
            if op.original_word in lexicon:
                fn += 1
    return ThetaCounts.from_counts(tp, fp, fn)


# ---------------------------------------------------------------------------
# N-gram overlap metrics
# ---------------------------------------------------------------------------

def _ngram_counts(norms: Sequence[str], n: int) -> dict[tuple[str, ...], int]:
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(norms) - n + 1):
        gram = tuple(norms[i:i + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def bleu(candidate: TokenSeq, reference: TokenSeq) -> float:
    """1-4 gram BLEU with add-one smoothing on zero higher-order precisions.

    The brevity penalty exp(1 - |ref| / |cand|) applies when the candidate
    is shorter than the reference. A zero unigram precision stays zero
    (no smoothing at n=1), so disjoint texts score 0.
    """
    if len(reference) == 0:
        raise TrimkitError("bleu needs a non-empty reference")
    if len(candidate) == 0:
        return 0.0
    cand, ref = candidate.norms(), reference.norms()
    log_sum, orders = 0.0, 0
    for n in range(1, 5):
        total = len(cand) - n + 1
        if total <= 0:
            continue
        ref_counts = _ngram_counts(ref, n)
        matched = 0
        for gram, count in _ngram_counts(cand, n).items():
            matched += min(count, ref_counts.get(gram, 0))
        if matched == 0:
            if n == 1:
                return 0.0
            precision = 1.0 / (total + 1.0)
        else:
            precision = matched / total
        log_sum += math.log(precision)
        orders += 1
    geo_mean = math.exp(log_sum / orders)
    bp = math.exp(1.0 - len(ref) / len(cand)) if len(cand) < len(ref) else 1.0
    return 100.0 * geo_mean * bp


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


def _lcs_length(xs: Sequence[str], ys: Sequence[str]) -> int:
    prev = [0] * (len(ys) + 1)
    for x in xs:
        row = [0]
        for j, y in enumerate(ys, start=1):
            row.append(prev[j - 1] + 1 if x == y else max(prev[j], row[j - 1]))
        prev = row
    return prev[-1]


@dataclass(frozen=True)
class RougeScores:
    rouge1_pct: float
    rougeL_pct: float


def rouge(candidate: TokenSeq, reference: TokenSeq) -> RougeScores:
    """Unigram-overlap F1 and LCS F1, on norms; zero when either side is empty."""
    if len(candidate) == 0 or len(reference) == 0:
        return RougeScores(0.0, 0.0)
    cand, ref = candidate.norms(), reference.norms()
    ref_counts = _ngram_counts(ref, 1)
    overlap = sum(min(c, ref_counts.get(g, 0)) for g, c in _ngram_counts(cand, 1).items())
    r1 = _f1(overlap / len(cand), overlap / len(ref))
    lcs = _lcs_length(cand, ref)
    rl = _f1(lcs / len(cand), lcs / len(ref))
    return RougeScores(100.0 * r1, 100.0 * rl)


def meteor_lite(candidate: TokenSeq, reference: TokenSeq) -> float:
    """Exact-match METEOR: recall-weighted F-mean times a fragmentation penalty.

    Alignment is greedy left to right, one to one, on norms. With m
    matched words in ch chunks the penalty is 0.5 * (ch / m)^3, so even
    identical texts score slightly below 100 (exactly 50 for one-word
    texts); that is the standard formula, not a bug.
    """
    if len(candidate) == 0 or len(reference) == 0:
        return 0.0
    cand, ref = candidate.norms(), reference.norms()
    used = [False] * len(ref)
    pairs: list[tuple[int, int]] = []
    for i, norm in enumerate(cand):
        for j, r in enumerate(ref):
            if not used[j] and r == norm:
                used[j] = True
                pairs.append((i, j))
                break
    if not pairs:
        return 0.0
    matches = len(pairs)
    chunks = 1
    for (i0, j0), (i1, j1) in zip(pairs, pairs[1:]):
        if i1 != i0 + 1 or j1 != j0 + 1:
            chunks += 1
    p, r = matches / len(cand), matches / len(ref)
    fmean = p * r / (0.9 * p + 0.1 * r)
    penalty = 0.5 * (chunks / matches) ** 3
    return 100.0 * fmean * (1.0 - penalty)


# ---------------------------------------------------------------------------
# Embeddings and cosine similarity
# ---------------------------------------------------------------------------

class TfidfEmbedder:
    """L2-normalized TF-IDF bag embeddings.

    Document frequencies are smoothed and term frequency is sublinear
    (1 + ln tf), so a function word repeated eight times in a paragraph
    does not carry sixty-four times the squared mass of a content word.
    """

    def __init__(self, idf: dict[str, float], n_documents: int):
        self.idf = idf
        self.n_documents = n_documents
        self._default_idf = math.log((1.0 + n_documents) / 1.0) + 1.0

    @classmethod
    def fit(cls, corpus: Corpus) -> "TfidfEmbedder":
        if len(corpus) == 0:
            raise TrimkitError("cannot fit an embedder on an empty corpus")
        df: dict[str, int] = {}
        for fragment in corpus:
            for norm in set(tokenize(fragment.text).norms()):
                df[norm] = df.get(norm, 0) + 1
        n = len(corpus)
        idf = {w: math.log((1.0 + n) / (1.0 + d)) + 1.0 for w, d in df.items()}
        return cls(idf, n)

    @classmethod
    def fit_sequences(cls, sequences: Iterable[TokenSeq]) -> "TfidfEmbedder":
        df: dict[str, int] = {}
        n = 0
        for seq in sequences:
            n += 1
            for norm in set(seq.norms()):
                df[norm] = df.get(norm, 0) + 1
        if n == 0:
            raise TrimkitError("cannot fit an embedder on an empty corpus")
        idf = {w: math.log((1.0 + n) / (1.0 + d)) + 1.0 for w, d in df.items()}
        return cls(idf, n)

    def embed(self, seq: TokenSeq) -> dict[str, float]:
        weights: dict[str, float] = {}
        for norm, count in _ngram_counts(seq.norms(), 1).items():
            tf = 1.0 + math.log(count)
            weights[norm[0]] = tf * self.idf.get(norm[0], self._default_idf)
        scale = math.sqrt(sum(v * v for v in weights.values()))
        if scale == 0.0:
            return {}
        return {w: v / scale for w, v in weights.items()}


class HttpEmbedder:
    """Embedding client for the {"text": ...} -> {"vector": [...]} protocol."""

    def __init__(self, endpoint: str, timeout: float = 10.0, retries: int = 2):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries

    def embed(self, seq: TokenSeq) -> list[float]:
        body = {"text": detokenize(seq)}
        last_error: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(self.endpoint, json=body, timeout=self.timeout)
                resp.raise_for_status()
                payload = resp.json()
                return [float(x) for x in payload["vector"]]
            except (requests.RequestException, ValueError, KeyError) as exc:
                last_error = exc
        raise ScorerError(f"embedding endpoint {self.endpoint} failed: {last_error}") from last_error


def _cosine(a, b) -> float:
    if isinstance(a, dict):
        dot = sum(v * b.get(w, 0.0) for w, v in a.items())
        na = math.sqrt(sum(v * v for v in a.values()))
        nb = math.sqrt(sum(v * v for v in b.values()))
    else:
        if len(a) != len(b):
            raise TrimkitError("embedding vectors differ in dimension")
        dot = sum(x * y for x, y in zip(a, b))
        na = math.sqrt(sum(x * x for x in a))
        nb = math.sqrt(sum(y * y for y in b))
    if na == 0.0 or nb == 0.0:
        logger.warning("cosine against a zero vector, reporting 0")
        return 0.0
    return dot / (na * nb)


def cosine_similarity(a: TokenSeq, b: TokenSeq, embedder) -> float:
    """Cosine of the two embeddings, as a percentage.

    Identical embeddings short-circuit to exactly 100. A zero vector on
    either side yields 0 (logged).
    """
    ea, eb = embedder.embed(a), embedder.embed(b)
    if ea == eb:
        if not ea:
            logger.warning("cosine of two empty embeddings, reporting 0")
            return 0.0
        return 100.0
    return 100.0 * _cosine(ea, eb)


# ---------------------------------------------------------------------------
# Report assembly and aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricReport:
    theta: ThetaCounts
    sacrebleu_pct: float
    meteor_pct: float
    rouge1_pct: float
    rougeL_pct: float
    cosine_pct: float
    perplexity: float
    perplexity_original: float
    saved_tokens_pct: float
    original_tokens: int = 0
    distilled_tokens: int = 0
    pair_id: int | None = None


def evaluate_pair(original: TokenSeq, reconstructed: TokenSeq, distilled: TokenSeq,
                  lexicon: Lexicon, lm: NGramModel, embedder,
                  theta_mode: str = THETA_MODE_FULL,
                  pair_id: int | None = None) -> MetricReport:
    """All metrics for one (original, distilled, reconstructed) triple."""
    if len(original) == 0:
        raise TrimkitError("evaluate_pair needs a non-empty original")
    rouge_scores = rouge(reconstructed, original)
    return MetricReport(
        theta=theta_metrics(original, reconstructed, lexicon, mode=theta_mode),
        sacrebleu_pct=bleu(reconstructed, original),
        meteor_pct=meteor_lite(reconstructed, original),
        rouge1_pct=rouge_scores.rouge1_pct,
        rougeL_pct=rouge_scores.rougeL_pct,
        cosine_pct=cosine_similarity(original, reconstructed, embedder),
        perplexity=sequence_logprob(lm, reconstructed).perplexity,
        perplexity_original=sequence_logprob(lm, original).perplexity,
        saved_tokens_pct=100.0 * (len(original) - len(distilled)) / len(original),
        original_tokens=len(original),
        distilled_tokens=len(distilled),
        pair_id=pair_id,
    )


class RunningStats:
    """Single-pass mean and population standard deviation (Welford)."""

    def __init__(self):
        self.n = 0
        self._mean = 0.0
        self._m2 = 0.0

    def add(self, value: float) -> None:
        self.n += 1
        delta = value - self._mean
        self._mean += delta / self.n
        self._m2 += delta * (value - self._mean)

    @property
    def mean(self) -> float:
        if self.n == 0:
            raise TrimkitError("no values accumulated")
        return self._mean

    @property
    def std(self) -> float:
        if self.n == 0:
            raise TrimkitError("no values accumulated")
        return math.sqrt(self._m2 / self.n)


METRIC_COLUMNS = (
    "theta_tp", "theta_fp", "theta_fn",
    "theta_precision_pct", "theta_recall_pct", "theta_f1_pct",
    "sacrebleu_pct", "meteor_pct", "rouge1_pct", "rougeL_pct", "cosine_pct",
    "perplexity", "perplexity_original", "saved_tokens_pct",
    "original_tokens", "distilled_tokens",
)


def report_row(report: MetricReport) -> dict[str, float]:
    return {
        "theta_tp": report.theta.tp,
        "theta_fp": report.theta.fp,
        "theta_fn": report.theta.fn,
        "theta_precision_pct": 100.0 * report.theta.precision,
        "theta_recall_pct": 100.0 * report.theta.recall,
        "theta_f1_pct": 100.0 * report.theta.f1,
        "sacrebleu_pct": report.sacrebleu_pct,
        "meteor_pct": report.meteor_pct,
        "rouge1_pct": report.rouge1_pct,
        "rougeL_pct": report.rougeL_pct,
        "cosine_pct": report.cosine_pct,
        "perplexity": report.perplexity,
        "perplexity_original": report.perplexity_original,
        "saved_tokens_pct": report.saved_tokens_pct,
        "original_tokens": report.original_tokens,
        "distilled_tokens": report.distilled_tokens,
    }


def summarize(reports: Iterable[MetricReport]) -> dict[str, tuple[float, float]]:
    """Per-column (mean, population std) over the reports."""
    stats = {col: RunningStats() for col in METRIC_COLUMNS}
    for report in reports:
        for col, value in report_row(report).items():
            stats[col].add(value)
    if next(iter(stats.values())).n == 0:
        raise TrimkitError("cannot summarize zero reports")
    return {col: (s.mean, s.std) for col, s in stats.items()}


def write_metrics_csv(reports: Sequence[MetricReport], path: str | Path) -> None:
    """Per-pair rows plus a mean/std summary block."""
    summary = summarize(reports)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("id",) + METRIC_COLUMNS)
        for report in reports:
            row = report_row(report)
            writer.writerow([report.pair_id] + [repr(float(row[c])) for c in METRIC_COLUMNS])
        writer.writerow(["mean"] + [repr(summary[c][0]) for c in METRIC_COLUMNS])
        writer.writerow(["std"] + [repr(summary[c][1]) for c in METRIC_COLUMNS])
