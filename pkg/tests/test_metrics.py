from __future__ import annotations

import math
import random
import statistics

import pytest

from trimkit.distill import TermSet, distill_seq
from trimkit.errors import TrimkitError
from trimkit.lmscore import train_ngram
from trimkit.metrics import (INSERTION, MATCH, OMISSION, SUBSTITUTION,
                             MetricReport, NwScoring, RunningStats,
                             TfidfEmbedder, ThetaCounts, bleu,
                             cosine_similarity, evaluate_pair, meteor_lite,
                             nw_align, rouge, summarize, theta_metrics,
                             theta_ops, write_metrics_csv)
from trimkit.sampletext import sample_corpus
from trimkit.textcore import Corpus, Lexicon, tokenize

ORIGINAL = "The history of art is the fascinating subject of human culture."
RECONSTRUCTED = "History of the art is a fascinating subject of human culture."
ARTICLE_LEX = Lexicon(("the", "a", "an", "of"), name="articles")


def brute_force_best_score(xs, ys, scoring):
    """Max score over every global alignment, by full tree exploration."""
    def best(i, j):
        if i == len(xs) and j == len(ys):
            return 0.0
        options = []
        if i < len(xs) and j < len(ys):
            step = scoring.match if xs[i] == ys[j] else scoring.mismatch
            options.append(step + best(i + 1, j + 1))
        if i < len(xs):
            options.append(scoring.gap + best(i + 1, j))
        if j < len(ys):
            options.append(scoring.gap + best(i, j + 1))
        return max(options)

    return best(0, 0)


def alignment_score(ops, scoring):
    total = 0.0
    for op in ops:
        if op.kind == MATCH:
            total += scoring.match
        elif op.kind == SUBSTITUTION:
            total += scoring.mismatch
        else:
            total += scoring.gap
    return total


class TestNwAlign:
    def test_identity_is_all_match(self):
        ops = nw_align(tokenize("a b c"), tokenize("a b c"))
        assert [op.kind for op in ops] == [MATCH] * 3

    def test_disjoint_short_vs_long(self):
        ops = nw_align(tokenize(""), tokenize("a b"))
        assert [op.kind for op in ops] == [INSERTION] * 2
        ops = nw_align(tokenize("a b"), tokenize(""))
        assert [op.kind for op in ops] == [OMISSION] * 2

    def test_prefers_matches_over_substitution_on_filtered_sequences(self):
        # On the pre-filtered function-word sequences the optimal alignment
        # pairs both "the" tokens; the substitution reading is suboptimal
        # and only appears when content words anchor a full alignment.
        ops = nw_align(tokenize("The of the of"), tokenize("of the a of"))
        assert [op.kind for op in ops] == [OMISSION, MATCH, MATCH, INSERTION, MATCH]

    def test_op_count_identities(self):
        rng = random.Random(99)
        alphabet = ["a", "b", "c", "d"]
        for _ in range(100):
            xs = tokenize(" ".join(rng.choices(alphabet, k=rng.randint(0, 8))))
            ys = tokenize(" ".join(rng.choices(alphabet, k=rng.randint(0, 8))))
            ops = nw_align(xs, ys)
            kinds = [op.kind for op in ops]
            matches, subs = kinds.count(MATCH), kinds.count(SUBSTITUTION)
            omissions, insertions = kinds.count(OMISSION), kinds.count(INSERTION)
            assert len(ops) == matches + subs + omissions + insertions
            assert len(xs) == matches + subs + omissions
            assert len(ys) == matches + subs + insertions

    def test_dp_score_is_brute_force_optimum(self):
        rng = random.Random(7)
        scoring = NwScoring()
        alphabet = ["a", "b", "c", "d"]
        for _ in range(120):
            xs = tuple(rng.choices(alphabet, k=rng.randint(0, 6)))
            ys = tuple(rng.choices(alphabet, k=rng.randint(0, 6)))
            ops = nw_align(tokenize(" ".join(xs)), tokenize(" ".join(ys)), scoring)
            assert alignment_score(ops, scoring) == brute_force_best_score(xs, ys, scoring)

    def test_match_words_equal_substitution_words_differ(self):
        for op in nw_align(tokenize("a b"), tokenize("a c")):
            if op.kind == MATCH:
                assert op.original_word == op.reconstructed_word
            if op.kind == SUBSTITUTION:
                assert op.original_word != op.reconstructed_word


class TestTheta:
    def test_worked_example_ops(self):
        ops = theta_ops(tokenize(ORIGINAL), tokenize(RECONSTRUCTED), ARTICLE_LEX)
        assert [op.kind for op in ops] == [OMISSION, MATCH, INSERTION, SUBSTITUTION, MATCH]

    def test_worked_example_counts(self):
        counts = theta_metrics(tokenize(ORIGINAL), tokenize(RECONSTRUCTED), ARTICLE_LEX)
        assert (counts.tp, counts.fp, counts.fn) == (2, 2, 2)
        assert counts.precision == counts.recall == counts.f1 == 0.5

    def test_identity_is_perfect(self):
        seq = tokenize(ORIGINAL)
        counts = theta_metrics(seq, seq, ARTICLE_LEX)
        assert counts.precision == counts.recall == counts.f1 == 1.0

    def test_fully_distilled_has_zero_recall_full_precision(self):
        original = tokenize("I went to the marathon in the city center")
        s = TermSet(Lexicon(("i", "to", "the", "in")))
        distilled = distill_seq(original, s).distilled
        counts = theta_metrics(original, distilled, s.lexicon)
        assert counts.tp == 0 and counts.fp == 0
        assert counts.precision == 1.0
        assert counts.recall == 0.0
        assert counts.f1 == 0.0

    def test_substitution_against_content_word_counts_fn_only(self):
        counts = theta_metrics(tokenize("the cat sat"), tokenize("dog cat sat"),
                               Lexicon(("the",)))
        assert (counts.tp, counts.fp, counts.fn) == (0, 0, 1)

    def test_filtered_mode_uses_set_words_only(self):
        ops = theta_ops(tokenize(ORIGINAL), tokenize(RECONSTRUCTED), ARTICLE_LEX,
                        mode="filtered")
        assert [op.kind for op in ops] == [OMISSION, MATCH, MATCH, INSERTION, MATCH]

    def test_unknown_mode_rejected(self):
        with pytest.raises(TrimkitError):
            theta_ops(tokenize("a"), tokenize("a"), ARTICLE_LEX, mode="sideways")

    def test_empty_convention(self):
        counts = theta_metrics(tokenize("plain words"), tokenize("plain words"),
                               Lexicon(("the",)))
        assert counts.precision == 1.0 and counts.recall == 1.0 and counts.f1 == 1.0

    def test_f1_between_components(self):
        rng = random.Random(13)
        words = ["the", "a", "of", "cat", "dog", "sat"]
        lex = Lexicon(("the", "a", "of"))
        for _ in range(200):
            a = tokenize(" ".join(rng.choices(words, k=rng.randint(1, 10))))
            b = tokenize(" ".join(rng.choices(words, k=rng.randint(1, 10))))
            c = theta_metrics(a, b, lex)
            if c.precision > 0 and c.recall > 0:
                assert min(c.precision, c.recall) - 1e-12 <= c.f1 <= max(c.precision, c.recall) + 1e-12


class TestBleu:
    def test_identity_is_hundred(self):
        seq = tokenize("the cat sat on the mat")
        assert bleu(seq, seq) == 100.0

    def test_disjoint_is_zero(self):
        assert bleu(tokenize("alpha beta"), tokenize("gamma delta")) == 0.0

    def test_pinned_short_candidate(self):
        cand = tokenize("the cat sat .")
        ref = tokenize("the cat sat on the mat .")
        # Independent hand computation of the four modified precisions:
        # p1 = 4/4, p2 = 2/3, p3 = 1/2, p4 = 0 -> smoothed 1/2.
        geo = math.exp((math.log(1.0) + math.log(2 / 3)
                        + math.log(1 / 2) + math.log(1 / 2)) / 4)
        expected = 100.0 * geo * math.exp(1 - 7 / 4)
        assert bleu(cand, ref) == pytest.approx(expected, abs=1e-9)
        assert bleu(cand, ref) == pytest.approx(30.1815, abs=1e-3)

    def test_empty_reference_rejected(self):
        with pytest.raises(TrimkitError):
            bleu(tokenize("a"), tokenize(""))

    def test_empty_candidate_is_zero(self):
        assert bleu(tokenize(""), tokenize("a b")) == 0.0

    def test_case_invariant(self):
        assert bleu(tokenize("The Cat"), tokenize("the cat")) == 100.0


class TestRouge:
    def test_derived_f1(self):
        scores = rouge(tokenize("cat sat"), tokenize("the cat sat"))
        assert scores.rouge1_pct == pytest.approx(80.0)
        assert scores.rougeL_pct == pytest.approx(80.0)

    def test_identity(self):
        seq = tokenize("a b c d")
        scores = rouge(seq, seq)
        assert scores.rouge1_pct == 100.0 and scores.rougeL_pct == 100.0

    def test_disjoint(self):
        scores = rouge(tokenize("x y"), tokenize("p q"))
        assert scores.rouge1_pct == 0.0 and scores.rougeL_pct == 0.0

    def test_empty_side_is_zero(self):
        assert rouge(tokenize(""), tokenize("a")).rouge1_pct == 0.0

    def test_lcs_respects_order(self):
        scores = rouge(tokenize("c b a"), tokenize("a b c"))
        assert scores.rouge1_pct == 100.0
        assert scores.rougeL_pct == pytest.approx(100.0 / 3)


class TestMeteorLite:
    def test_single_word_identity_is_fifty(self):
        assert meteor_lite(tokenize("cat"), tokenize("cat")) == pytest.approx(50.0)

    def test_identity_approaches_hundred(self):
        for n in (2, 5, 20):
            seq = tokenize(" ".join(f"w{i}" for i in range(n)))
            expected = 100.0 * (1 - 0.5 * (1 / n) ** 3)
            assert meteor_lite(seq, seq) == pytest.approx(expected, abs=1e-9)

    def test_no_common_words_is_zero(self):
        assert meteor_lite(tokenize("x y"), tokenize("p q")) == 0.0

    def test_pinned_scrambled_pair(self):
        # 4 matches in 4 chunks: fmean 1, penalty 0.5.
        assert meteor_lite(tokenize("a c b d"), tokenize("a b c d")) == pytest.approx(50.0)

    def test_case_invariant(self):
        a, b = tokenize("The Cat Sat"), tokenize("the cat sat")
        assert meteor_lite(a, b) == meteor_lite(b, b)


@pytest.fixture(scope="module")
def embedder():
    return TfidfEmbedder.fit(sample_corpus(150, seed=3))


class TestCosine:
    def test_identity_is_exactly_hundred(self, embedder):
        seq = tokenize("the museum of the city")
        assert cosine_similarity(seq, seq, embedder) == 100.0

    def test_orthogonal_vocab_is_zero(self, embedder):
        assert cosine_similarity(tokenize("alpha beta"), tokenize("gamma delta"),
                                 embedder) == pytest.approx(0.0, abs=1e-12)

    def test_zero_vector_reports_zero(self, embedder):
        assert cosine_similarity(tokenize(""), tokenize("the cat"), embedder) == 0.0

    def test_function_word_removal_keeps_high_similarity(self, embedder):
        corpus = sample_corpus(60, seed=4)
        s = TermSet(Lexicon(("the", "a", "an", "of", "in", "and", "was", "by",
                             "its", "to", "for", "on", "with", "from")))
        values = []
        for fragment in corpus:
            pair = distill_seq(tokenize(fragment.text), s)
            values.append(cosine_similarity(pair.original, pair.distilled, embedder))
        assert sum(values) / len(values) > 95.0
        assert min(values) > 90.0

    def test_external_embedder_protocol(self):
        from mockserver import MockEndpoint
        from trimkit.metrics import HttpEmbedder

        def handler(path, payload):
            value = 1.0 if "cat" in payload["text"] else 0.5
            return {"vector": [value, 0.25]}

        with MockEndpoint(handler) as url:
            emb = HttpEmbedder(url)
            same = cosine_similarity(tokenize("cat"), tokenize("cat here"), emb)
            assert same == 100.0


@pytest.fixture(scope="module")
def parts():
    corpus = Corpus.from_texts(["The cat sat on the mat.",
                                "A dog ran in the park."] * 10)
    lm = train_ngram(corpus)
    fitted = TfidfEmbedder.fit(corpus)
    lex = Lexicon(("the", "a", "on", "in"))
    return lm, fitted, lex


class TestEvaluatePair:
    def test_identity_row(self, parts):
        lm, embedder, lex = parts
        original = tokenize("The cat sat on the mat.")
        s = TermSet(lex)
        distilled = distill_seq(original, s).distilled
        report = evaluate_pair(original, original, distilled, lex, lm, embedder)
        assert report.theta.f1 == 1.0
        assert report.sacrebleu_pct == 100.0
        assert report.rouge1_pct == 100.0 and report.rougeL_pct == 100.0
        assert report.cosine_pct == 100.0
        assert report.saved_tokens_pct > 0

    def test_degenerate_reconstruction_row(self, parts):
        lm, embedder, lex = parts
        original = tokenize("The cat sat on the mat.")
        s = TermSet(lex)
        distilled = distill_seq(original, s).distilled
        report = evaluate_pair(original, distilled, distilled, lex, lm, embedder)
        assert report.theta.recall == 0.0
        assert report.theta.precision == 1.0
        assert report.saved_tokens_pct == pytest.approx(
            100.0 * 3 / len(original))
        assert report.perplexity > report.perplexity_original

    def test_empty_original_rejected(self, parts):
        lm, embedder, lex = parts
        with pytest.raises(TrimkitError):
            evaluate_pair(tokenize(""), tokenize("a"), tokenize(""), lex, lm, embedder)


class TestAggregation:
    def test_running_stats_matches_two_pass(self):
        rng = random.Random(31)
        values = [rng.uniform(-50, 150) for _ in range(500)]
        stats = RunningStats()
        for v in values:
            stats.add(v)
        assert stats.mean == pytest.approx(statistics.fmean(values), rel=1e-12)
        assert stats.std == pytest.approx(statistics.pstdev(values), rel=1e-9)

    def test_summary_is_unweighted_mean(self, tmp_path):
        theta = ThetaCounts.from_counts(1, 1, 1)
        reports = [
            MetricReport(theta, 10.0, 20.0, 30.0, 40.0, 50.0, 2.0, 1.5, 25.0,
                         original_tokens=8, distilled_tokens=6, pair_id=0),
            MetricReport(theta, 30.0, 40.0, 50.0, 60.0, 70.0, 4.0, 2.5, 35.0,
                         original_tokens=12, distilled_tokens=8, pair_id=1),
        ]
        summary = summarize(reports)
        assert summary["sacrebleu_pct"][0] == pytest.approx(20.0)
        assert summary["saved_tokens_pct"][0] == pytest.approx(30.0)
        assert summary["sacrebleu_pct"][1] == pytest.approx(10.0)

        path = tmp_path / "out.csv"
        write_metrics_csv(reports, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 1 + 2 + 2
        assert lines[-2].startswith("mean,")
        assert lines[-1].startswith("std,")

    def test_summarize_empty_rejected(self):
        with pytest.raises(TrimkitError):
            summarize([])
