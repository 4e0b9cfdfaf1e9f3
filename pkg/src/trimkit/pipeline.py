"""Experiment orchestration: counting studies, level sweeps, batch
evaluation, and the live distill-generate-reconstruct flow.

Everything here is deterministic for fixed inputs: pair-level work can
fan out over a thread pool, but results are collected in pair order and
aggregated in one thread, so the worker count never changes an output
byte.
"""

from __future__ import annotations

import csv
import json
import os
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import requests

from .costmodel import UsageProfile
from .distill import DistilledPair, TermSet, build_prompt, distill_seq, make_pairs, reinsert_removed
from .errors import ConfigError, GenerationError, TrimkitError
from .inferability import InferabilityReport, level_set
from .lmscore import NGramModel, sequence_logprob
from .metrics import (MetricReport, RunningStats, TfidfEmbedder, evaluate_pair,
                      summarize)
from .reconstruct import ReconstructionConfig, reconstruct
from .textcore import Corpus, Lexicon, TokenSeq, count_lexicon_terms, detokenize, tokenize

ENV_CONFIG = "TRIMKIT_CONFIG"

RECONSTRUCTOR_BEAM = "beam"
RECONSTRUCTOR_IDENTITY = "identity"
RECONSTRUCTOR_ORACLE = "oracle"


def exploratory_count(answers: Corpus, lexicon: Lexicon) -> tuple[float, float]:
    """Mean and population std of lexicon-term counts per fragment."""
    if len(answers) == 0:
        raise TrimkitError("exploratory_count needs a non-empty corpus")
    stats = RunningStats()
    for fragment in answers:
        stats.add(count_lexicon_terms(tokenize(fragment.text), lexicon))
    return stats.mean, stats.std


def _reconstructed_for(pair: DistilledPair, s, recon_cfg: ReconstructionConfig,
                       reconstructor: str) -> TokenSeq:
    if reconstructor == RECONSTRUCTOR_BEAM:
        return reconstruct(pair.distilled, s, recon_cfg).output
    if reconstructor == RECONSTRUCTOR_IDENTITY:
        return pair.distilled
    if reconstructor == RECONSTRUCTOR_ORACLE:
        return reinsert_removed(pair)
    raise TrimkitError(f"unknown reconstructor: {reconstructor!r}")


def _evaluate_pairs(pairs: Sequence[DistilledPair], s, recon_cfg: ReconstructionConfig,
                    lexicon: Lexicon, lm: NGramModel, embedder,
                    reconstructor: str, workers: int) -> list[MetricReport]:
    def one(pair: DistilledPair) -> MetricReport:
        try:
            output = _reconstructed_for(pair, s, recon_cfg, reconstructor)
            return evaluate_pair(pair.original, output, pair.distilled, lexicon,
                                 lm, embedder, pair_id=pair.id)
        except TrimkitError as exc:
            raise TrimkitError(f"pair {pair.id}: {exc}") from exc

    if workers <= 1:
        return [one(p) for p in pairs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, pairs))


def run_offline_eval(pairs: Iterable[DistilledPair], recon_cfg: ReconstructionConfig,
                     lexicon: Lexicon, lm: NGramModel, embedder=None,
                     reconstructor: str = RECONSTRUCTOR_BEAM,
                     workers: int = 1) -> tuple[list[MetricReport], dict]:
    """Reconstruct and evaluate every pair; returns per-pair reports and
    the per-metric (mean, std) summary."""
    pairs = list(pairs)
    if not pairs:
        raise TrimkitError("run_offline_eval needs at least one pair")
    if embedder is None:
        embedder = TfidfEmbedder.fit_sequences(p.original for p in pairs)
    s = TermSet(lexicon, source=lexicon.name)
    reports = _evaluate_pairs(pairs, s, recon_cfg, lexicon, lm, embedder,
                              reconstructor, workers)
    return reports, summarize(reports)


@dataclass(frozen=True)
class LevelSweepRow:
    level: int
    set_size: int
    mean_saved_pct: float
    mean_bleu: float
    mean_rouge1: float
    mean_rougeL: float
    mean_meteor: float
    mean_cosine: float
    mean_perplexity: float
    mean_theta_f1: float
    n_pairs: int


SWEEP_COLUMNS = ("level", "set_size", "mean_saved_pct", "mean_bleu", "mean_rouge1",
                 "mean_rougeL", "mean_meteor", "mean_cosine", "mean_perplexity",
                 "mean_theta_f1", "n_pairs")


def run_level_sweep(corpus: Corpus, report: InferabilityReport, max_level: int,
                    step: int, recon_cfg: ReconstructionConfig, lm: NGramModel,
                    embedder=None, workers: int = 1,
                    reconstructor: str = RECONSTRUCTOR_BEAM) -> list[LevelSweepRow]:
    """Evaluate the whole pipeline at every removal-set size.

    Level k removes the top k*step ranked words. One scorer and one
    reconstructor configuration are reused across levels; the sweep's job
    is the shape of the quality-versus-savings curve, not absolute values.
    ``reconstructor="oracle"`` is the self-test mode: reinserting the
    recorded removals must score a perfect theta F1 at every level.
    """
    if max_level < 1:
        raise TrimkitError("max_level must be >= 1")
    if max_level * step > len(report.entries):
        raise TrimkitError(
            f"sweep needs {max_level * step} ranked words, report has {len(report.entries)}")
    if len(corpus) == 0:
        raise TrimkitError("run_level_sweep needs a non-empty corpus")
    if embedder is None:
        embedder = TfidfEmbedder.fit(corpus)

    rows = []
    for lvl in range(1, max_level + 1):
        lexicon = level_set(report, lvl, step)
        s = TermSet(lexicon, source=f"{report.corpus_id}:{lexicon.name}")
        pairs = list(make_pairs(corpus, s))
        reports = _evaluate_pairs(pairs, s, recon_cfg, lexicon, lm, embedder,
                                  reconstructor, workers)
        agg = {name: RunningStats() for name in
               ("saved", "bleu", "r1", "rl", "meteor", "cos", "ppl", "f1")}
        for rep in reports:
            agg["saved"].add(rep.saved_tokens_pct)
            agg["bleu"].add(rep.sacrebleu_pct)
            agg["r1"].add(rep.rouge1_pct)
            agg["rl"].add(rep.rougeL_pct)
            agg["meteor"].add(rep.meteor_pct)
            agg["cos"].add(rep.cosine_pct)
            agg["ppl"].add(rep.perplexity)
            agg["f1"].add(100.0 * rep.theta.f1)
        rows.append(LevelSweepRow(
            level=lvl, set_size=lvl * step,
            mean_saved_pct=agg["saved"].mean, mean_bleu=agg["bleu"].mean,
            mean_rouge1=agg["r1"].mean, mean_rougeL=agg["rl"].mean,
            mean_meteor=agg["meteor"].mean, mean_cosine=agg["cos"].mean,
            mean_perplexity=agg["ppl"].mean, mean_theta_f1=agg["f1"].mean,
            n_pairs=len(reports)))
    return rows


def write_sweep_csv(rows: Sequence[LevelSweepRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([row.level, row.set_size,
                             repr(row.mean_saved_pct), repr(row.mean_bleu),
                             repr(row.mean_rouge1), repr(row.mean_rougeL),
                             repr(row.mean_meteor), repr(row.mean_cosine),
                             repr(row.mean_perplexity), repr(row.mean_theta_f1),
                             row.n_pairs])


# ---------------------------------------------------------------------------
# Live generation flow
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    temperature: float
    session_id: str


@dataclass(frozen=True)
class GenerationResponse:
    text: str
    input_tokens: int
    output_tokens: int


class HttpGenerationClient:
    """Chat-completion style client for the generation endpoint.

    POSTs {"prompt", "temperature"} and expects {"text", "input_tokens",
    "output_tokens"}. Requests within one session are serialized; a
    semaphore caps concurrent requests across sessions.
    """

    def __init__(self, base_url: str, auth_header: str | None = None,
                 auth_value: str | None = None, timeout: float = 30.0,
                 retries: int = 2, temperature: float = 0.0,
                 max_concurrency: int = 4):
        self.base_url = base_url
        self.timeout = timeout
        self.retries = retries
        self.temperature = temperature
        self.session_id = uuid.uuid4().hex
        self._headers = {auth_header: auth_value} if auth_header and auth_value else {}
        self._session_lock = threading.Lock()
        self._slots = threading.Semaphore(max_concurrency)

    def generate(self, prompt: str) -> GenerationResponse:
        request_id = uuid.uuid4().hex[:12]
        body = {"prompt": prompt, "temperature": self.temperature}
        last_error: Exception | None = None
        with self._slots, self._session_lock:
            for _ in range(self.retries + 1):
                try:
                    resp = requests.post(self.base_url, json=body,
                                         headers=self._headers, timeout=self.timeout)
                    resp.raise_for_status()
                    payload = resp.json()
                    text = payload.get("text", "")
                    if not isinstance(text, str) or not text.strip():
                        raise GenerationError(
                            f"empty answer from {self.base_url} (request {request_id})",
                            request_id=request_id)
                    return GenerationResponse(
                        text=text,
                        input_tokens=int(payload.get("input_tokens", 0)),
                        output_tokens=int(payload.get("output_tokens", 0)))
                except GenerationError:
                    raise
                except (requests.RequestException, ValueError) as exc:
                    last_error = exc
        raise GenerationError(
            f"generation endpoint {self.base_url} failed (request {request_id}): {last_error}",
            request_id=request_id)


class SimulatedGenerationClient:
    """Offline stand-in for the generation model.

    Distillation itself plays the generator: the canned answer (a fixed
    text or a question-to-answer callable) is distilled with the term
    set, exactly what a cooperative generator would have produced.
    """

    def __init__(self, answer: str | Callable[[str], str], s: TermSet,
                 temperature: float = 0.0):
        self._answer = answer
        self._termset = s
        self.temperature = temperature
        self.session_id = "simulated"

    def generate(self, prompt: str) -> GenerationResponse:
        answer = self._answer(prompt) if callable(self._answer) else self._answer
        distilled = distill_seq(tokenize(answer), self._termset).distilled
        return GenerationResponse(text=detokenize(distilled),
                                  input_tokens=len(tokenize(prompt)),
                                  output_tokens=len(distilled))


@dataclass(frozen=True)
class TrimResult:
    prompt: str
    distilled: str
    reconstructed: str | None
    usage: GenerationResponse
    lexicon_count: int
    perplexity: float | None
    recon_error: str | None = None


def run_trim(question: str, s: TermSet, gen_client,
             recon_cfg: ReconstructionConfig | None = None,
             lm: NGramModel | None = None,
             template: str = "distilled") -> TrimResult:
    """Distilled generation against an endpoint, then local reconstruction.

    Live runs have no ground-truth original, so the only quality signals
    reported are the residual lexicon-term count and, when a model is
    available, the perplexity of the reconstruction. Endpoint failures
    raise; a reconstruction failure still returns the distilled answer.
    """
    prompt = build_prompt(s, question, template=template)
    response = gen_client.generate(prompt)
    distilled_seq = tokenize(response.text)

    reconstructed = None
    recon_error = None
    perplexity = None
    if recon_cfg is not None:
        try:
            output = reconstruct(distilled_seq, s, recon_cfg).output
            reconstructed = detokenize(output)
            if lm is not None and len(output) > 0:
                perplexity = sequence_logprob(lm, output).perplexity
        except TrimkitError as exc:
            recon_error = str(exc)

    return TrimResult(prompt=prompt, distilled=response.text,
                      reconstructed=reconstructed, usage=response,
                      lexicon_count=count_lexicon_terms(distilled_seq, s.lexicon),
                      perplexity=perplexity, recon_error=recon_error)


def usage_profile_from_result(result: TrimResult, plain_prompt_tokens: int,
                              token_factor: float = 1.0) -> UsageProfile:
    """Cost-model profile for one live query.

    extra_input is the instruction overhead versus the plain prompt;
    gained_output is the reconstruction growth (tokens the generator did
    not have to produce).
    """
    distilled_tokens = len(tokenize(result.distilled))
    full_tokens = (len(tokenize(result.reconstructed))
                   if result.reconstructed is not None else distilled_tokens)
    prompt_tokens = len(tokenize(result.prompt))
    return UsageProfile(
        extra_input=max(0, prompt_tokens - plain_prompt_tokens),
        gained_output=max(0, full_tokens - distilled_tokens),
        recon_input=distilled_tokens,
        recon_output=full_tokens,
    ).scaled(token_factor)


# ---------------------------------------------------------------------------
# Shared configuration
# ---------------------------------------------------------------------------

DEFAULT_CONFIG: dict = {
    "corpus": None,
    "corpus_format": "plain",
    "lexicon": "extended",
    "lm_path": None,
    "report": None,
    "level": 5,
    "step": 5,
    "order": 3,
    "smoothing_k": 0.01,
    "beam_width": 8,
    "max_consecutive_insertions": 2,
    "insertion_penalty": 0.5,
    "theta_mode": "full",
    "workers": None,
    "endpoint": {
        "base_url": None,
        "auth_header": None,
        "auth_value": None,
        "timeout": 30.0,
        "retries": 2,
        "temperature": 0.0,
        "concurrency": 4,
    },
    "pricing": None,
    "token_factor": 1.0,
}


def load_config(path: str | Path | None = None) -> dict:
    """Merge a JSON config file over the defaults.

    With no explicit path the TRIMKIT_CONFIG environment variable is
    consulted; if neither names a file the defaults are returned.
    Unknown keys are rejected so typos fail loudly.
    """
    config = json.loads(json.dumps(DEFAULT_CONFIG))
    if path is None:
        path = os.environ.get(ENV_CONFIG) or None
    if path is None:
        return config
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        overrides = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed config JSON: {exc}") from exc
    if not isinstance(overrides, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    for key, value in overrides.items():
        if key not in config:
            raise ConfigError(f"{path}: unknown config key {key!r}")
        if key == "endpoint":
            if not isinstance(value, dict):
                raise ConfigError(f"{path}: 'endpoint' must be an object")
            for sub, subval in value.items():
                if sub not in config["endpoint"]:
                    raise ConfigError(f"{path}: unknown endpoint key {sub!r}")
                config["endpoint"][sub] = subval
        else:
            config[key] = value
    return config
