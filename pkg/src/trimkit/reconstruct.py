"""Rebuild full text from distilled text by inserting removal-set words.

The reconstructor is an explicit left-to-right search: at every gap
(before each input token and at the end) it may insert a bounded run of
words from the removal set, and each hypothesis is scored by the n-gram
chain log-probability minus a per-insertion penalty. The input therefore
stays an exact subsequence of the output and only set words are ever
added; there is no marker telling the search where words were removed,
which is exactly the constraint the search structure encodes.

`exhaustive_reconstruct` enumerates every legal insertion pattern with
the same arithmetic and is the test oracle for the beam: with a beam at
least as wide as the number of distinct search states, the two agree
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import SearchSpaceError, TrimkitError
from .lmscore import BOS, EOS, NGramModel
from .distill import TermSet
from .textcore import Lexicon, Token, TokenSeq, WORD

DEFAULT_BEAM_WIDTH = 8
DEFAULT_MAX_CONSECUTIVE = 2
DEFAULT_INSERTION_PENALTY = 0.5


@dataclass(frozen=True)
class ReconstructionConfig:
    beam_width: int = DEFAULT_BEAM_WIDTH
    max_consecutive_insertions: int = DEFAULT_MAX_CONSECUTIVE
    insertion_penalty: float = DEFAULT_INSERTION_PENALTY
    model: NGramModel | None = None

    def __post_init__(self):
        if self.beam_width < 1:
            raise TrimkitError(f"beam_width must be >= 1, got {self.beam_width}")
        if self.max_consecutive_insertions < 0:
            raise TrimkitError("max_consecutive_insertions must be >= 0")
        if self.insertion_penalty < 0:
            raise TrimkitError("insertion_penalty must be >= 0")


@dataclass(frozen=True)
class Reconstruction:
    output: TokenSeq
    inserted_positions: tuple[int, ...]
    score: float


def _term_words(s) -> tuple[str, ...]:
    if isinstance(s, TermSet):
        return tuple(sorted(s.lexicon.words))
    if isinstance(s, Lexicon):
        return tuple(sorted(s.words))
    return tuple(sorted({w.lower() for w in s}))


def _final_score(logprob: float, penalty: float, insertions: int) -> float:
    # Guards inf * 0 when the penalty is infinite and nothing was inserted.
    return logprob - penalty * insertions if insertions else logprob


@dataclass(frozen=True)
class _Hyp:
    norms: tuple[str, ...]
    ctx: tuple[str, ...]
    logprob: float
    insertions: int
    tokens: tuple[Token, ...]
    inserted_positions: tuple[int, ...]


def _hyp_key(h: _Hyp, penalty: float):
    return (-_final_score(h.logprob, penalty, h.insertions), h.insertions, h.norms)


def _extend(model: NGramModel, h: _Hyp, token: Token, inserted: bool,
            penalty: float) -> _Hyp | None:
    lp = model.prob(token.norm, h.ctx)
    logprob = h.logprob + math.log(lp)
    if inserted and math.isinf(penalty):
        return None
    return _Hyp(
        norms=h.norms + (token.norm,),
        ctx=(h.ctx + (token.norm,))[-(model.order - 1):],
        logprob=logprob,
        insertions=h.insertions + (1 if inserted else 0),
        tokens=h.tokens + (token,),
        inserted_positions=h.inserted_positions + ((len(h.norms),) if inserted else ()),
    )


def _merge_and_prune(hyps: list[_Hyp], beam_width: int, penalty: float) -> list[_Hyp]:
    # One survivor per language-model context: future score increments
    # depend only on the context, so the best-keyed hypothesis dominates.
    best: dict[tuple[str, ...], _Hyp] = {}
    for h in hyps:
        cur = best.get(h.ctx)
        if cur is None or _hyp_key(h, penalty) < _hyp_key(cur, penalty):
            best[h.ctx] = h
    survivors = sorted(best.values(), key=lambda h: _hyp_key(h, penalty))
    return survivors[:beam_width]


def _insert_token(word: str) -> Token:
    return Token(surface=word, norm=word, kind=WORD)


def _finish_output(winner: _Hyp, penalty: float) -> Reconstruction:
    tokens = list(winner.tokens)
    # Readability touch-up: a sequence-initial insertion is capitalized
    # when the word it precedes is lowercase.
    if winner.inserted_positions and winner.inserted_positions[0] == 0 and len(tokens) > 1:
        follower = tokens[1]
        if follower.kind == WORD and follower.surface[:1].islower():
            first = tokens[0]
            tokens[0] = Token(surface=first.surface[:1].upper() + first.surface[1:],
                              norm=first.norm, kind=first.kind)
    return Reconstruction(TokenSeq(tuple(tokens)), winner.inserted_positions,
                          _final_score(winner.logprob, penalty, winner.insertions))


def reconstruct(distilled: TokenSeq, s, cfg: ReconstructionConfig) -> Reconstruction:
    """Beam-search the best insertion pattern for the distilled sequence.

    Ties break toward fewer insertions, then the lexicographically
    smaller output. ``s`` may be a TermSet, a Lexicon, or any iterable of
    words; an empty set leaves the input unchanged.
    """
    model = cfg.model
    if model is None:
        raise TrimkitError("ReconstructionConfig.model is required")
    words = _term_words(s)
    penalty = cfg.insertion_penalty

    start = _Hyp(norms=(), ctx=(BOS,) * (model.order - 1), logprob=0.0,
                 insertions=0, tokens=(), inserted_positions=())
    layer = [start]

    def expand_insertions(hyps: list[_Hyp]) -> list[_Hyp]:
        collected = list(hyps)
        frontier = hyps
        for _ in range(cfg.max_consecutive_insertions):
            if not words or not frontier:
                break
            children = []
            for h in frontier:
                for w in words:
                    child = _extend(model, h, _insert_token(w), True, penalty)
                    if child is not None:
                        children.append(child)
            frontier = _merge_and_prune(children, cfg.beam_width, penalty)
            collected.extend(frontier)
        return collected

    for token in distilled:
        expanded = expand_insertions(layer)
        advanced = [_extend(model, h, token, False, penalty) for h in expanded]
        layer = _merge_and_prune([h for h in advanced if h is not None],
                                 cfg.beam_width, penalty)

    finals = []
    for h in expand_insertions(layer):
        done = _Hyp(h.norms, h.ctx, h.logprob + math.log(model.prob(EOS, h.ctx)),
                    h.insertions, h.tokens, h.inserted_positions)
        finals.append(done)
    winner = min(finals, key=lambda h: _hyp_key(h, penalty))
    return _finish_output(winner, penalty)


def count_insertion_patterns(n_tokens: int, n_words: int, max_consecutive: int) -> int:
    """Closed-form size of the full insertion search space."""
    per_gap = sum(n_words ** j for j in range(max_consecutive + 1))
    return per_gap ** (n_tokens + 1)


def exhaustive_reconstruct(distilled: TokenSeq, s, cfg: ReconstructionConfig,
                           max_states: int = 200_000) -> Reconstruction:
    """Enumerate every legal insertion pattern and return the true optimum.

    Shares the scoring arithmetic with :func:`reconstruct` so the two are
    comparable exactly. Refuses instances whose pattern count exceeds
    ``max_states``.
    """
    model = cfg.model
    if model is None:
        raise TrimkitError("ReconstructionConfig.model is required")
    words = _term_words(s)
    penalty = cfg.insertion_penalty

    n_patterns = count_insertion_patterns(len(distilled), len(words),
                                          cfg.max_consecutive_insertions)
    if n_patterns > max_states:
        raise SearchSpaceError(
            f"{n_patterns} insertion patterns exceed the budget of {max_states}")

    start = _Hyp(norms=(), ctx=(BOS,) * (model.order - 1), logprob=0.0,
                 insertions=0, tokens=(), inserted_positions=())
    best: list[_Hyp | None] = [None]

    def visit(h: _Hyp, gap: int, consecutive: int) -> None:
        if gap == len(distilled):
            done = _Hyp(h.norms, h.ctx, h.logprob + math.log(model.prob(EOS, h.ctx)),
                        h.insertions, h.tokens, h.inserted_positions)
            if best[0] is None or _hyp_key(done, penalty) < _hyp_key(best[0], penalty):
                best[0] = done
        else:
            advanced = _extend(model, h, distilled[gap], False, penalty)
            visit(advanced, gap + 1, 0)
        if consecutive < cfg.max_consecutive_insertions:
            for w in words:
                child = _extend(model, h, _insert_token(w), True, penalty)
                if child is not None:
                    visit(child, gap, consecutive + 1)

    visit(start, 0, 0)
    return _finish_output(best[0], penalty)
