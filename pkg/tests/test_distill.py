from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trimkit.distill import (TermSet, build_prompt, distill_seq, make_pairs,
                             read_pairs, reinsert_removed, saved_tokens_pct,
                             saved_tokens_pct_words_only, write_pairs)
from trimkit.errors import TemplateError, TrimkitError
from trimkit.textcore import Corpus, Lexicon, count_lexicon_terms, detokenize, tokenize

S_DEMO = TermSet.from_words(["i", "to", "the", "in"])


class TestDistillSeq:
    def test_worked_example(self):
        pair = distill_seq(tokenize("I went to the marathon in the city center"), S_DEMO)
        assert detokenize(pair.distilled) == "went marathon city center"
        assert pair.removed_positions == (0, 2, 3, 5, 6)

    def test_disjoint_set_is_noop(self):
        seq = tokenize("copper and tin")
        pair = distill_seq(seq, TermSet.from_words(["zebra"]))
        assert pair.distilled == seq
        assert pair.removed_positions == ()
        assert pair.no_removal

    def test_total_removal(self):
        pair = distill_seq(tokenize("the the the"), TermSet.from_words(["the"]))
        assert len(pair.distilled) == 0
        assert pair.removed_positions == (0, 1, 2)

    def test_surfaces_untouched_no_recapitalization(self):
        pair = distill_seq(tokenize("The cat sat"), TermSet.from_words(["the"]))
        assert detokenize(pair.distilled) == "cat sat"

    def test_idempotent(self):
        pair = distill_seq(tokenize("I went to the marathon in the city center"), S_DEMO)
        again = distill_seq(pair.distilled, S_DEMO)
        assert again.removed_positions == ()
        assert again.distilled == pair.distilled

    def test_no_set_word_survives(self):
        pair = distill_seq(tokenize("The cat in the hat is back in town"), S_DEMO)
        assert count_lexicon_terms(pair.distilled, S_DEMO.lexicon) == 0

    @given(st.lists(st.sampled_from(["the", "cat", "in", "hat", "I", "to", "ran"]),
                    max_size=30))
    @settings(max_examples=150)
    def test_reinsertion_rebuilds_original(self, words):
        seq = tokenize(" ".join(words))
        pair = distill_seq(seq, S_DEMO)
        assert reinsert_removed(pair).surfaces() == seq.surfaces()

    def test_monotone_in_set_size(self):
        seq = tokenize("The cat in the hat is back in town.")
        small = distill_seq(seq, TermSet.from_words(["the"]))
        large = distill_seq(seq, TermSet.from_words(["the", "in", "is"]))
        assert saved_tokens_pct(large) >= saved_tokens_pct(small)

    def test_empty_termset_rejected(self):
        with pytest.raises(TrimkitError):
            TermSet(Lexicon(()))


class TestSavedTokensPct:
    def test_no_removal_is_zero(self):
        pair = distill_seq(tokenize("copper and tin"), TermSet.from_words(["zebra"]))
        assert saved_tokens_pct(pair) == 0.0

    def test_total_removal_is_hundred(self):
        pair = distill_seq(tokenize("the the the"), TermSet.from_words(["the"]))
        assert saved_tokens_pct(pair) == 100.0

    def test_pinned_tokenizer_counts_with_and_without_punctuation(self):
        # 10 tokens with the final period, 9 words without it; the set
        # {to, the, in} removes 4.
        seq = tokenize("I went to the marathon in the city center.")
        assert len(seq) == 10
        pair = distill_seq(seq, TermSet.from_words(["to", "the", "in"]))
        assert len(pair.removed_positions) == 4
        assert saved_tokens_pct(pair) == pytest.approx(40.0)
        assert saved_tokens_pct_words_only(pair) == pytest.approx(100.0 * 4 / 9)

    def test_empty_original_rejected(self):
        pair = distill_seq(tokenize(""), S_DEMO)
        with pytest.raises(TrimkitError):
            saved_tokens_pct(pair)


class TestBuildPrompt:
    def test_plain_template(self):
        out = build_prompt(S_DEMO, "What is X?", template="plain")
        assert out == "Respond just in a paragraph. What is X?"

    def test_distilled_template_lists_every_word_once(self):
        s = TermSet.from_words(["the", "a", "an"])
        out = build_prompt(s, "What is X?", template="distilled")
        assert "the, a, an" in out
        assert out.endswith("What is X?")
        for word in s.words():
            assert out.count(f" {word},") + out.count(f", {word}") >= 1

    def test_empty_question_rejected(self):
        with pytest.raises(TemplateError):
            build_prompt(S_DEMO, "   ", template="plain")

    def test_unknown_template(self):
        with pytest.raises(TemplateError):
            build_prompt(S_DEMO, "Q?", template="mystery")

    def test_unresolved_placeholder(self, tmp_path):
        path = tmp_path / "odd.txt"
        path.write_text("Answer {knowledge_question} with {made_up_slot}.")
        with pytest.raises(TemplateError, match="made_up_slot"):
            build_prompt(S_DEMO, "Q?", template=path)

    def test_custom_template_file(self, tmp_path):
        path = tmp_path / "mine.txt"
        path.write_text("Skip these: {list_of_terms}. Now: {knowledge_question}\n")
        out = build_prompt(S_DEMO, "Why?", template=path)
        assert out == "Skip these: i, to, the, in. Now: Why?"


class TestMakePairs:
    def test_one_pair_per_fragment_in_order(self):
        corpus = Corpus.from_texts(["The cat.", "A dog.", "No set words."])
        pairs = list(make_pairs(corpus, TermSet.from_words(["the", "a"])))
        assert [p.id for p in pairs] == [0, 1, 2]
        assert [p.no_removal for p in pairs] == [False, False, True]

    def test_jsonl_round_trip(self, tmp_path):
        corpus = Corpus.from_texts(["The cat in the hat.", "Plain words only."])
        pairs = list(make_pairs(corpus, S_DEMO))
        path = tmp_path / "pairs.jsonl"
        assert write_pairs(pairs, path) == 2
        loaded = read_pairs(path)
        assert len(loaded) == 2
        for a, b in zip(loaded, pairs):
            assert a.id == b.id
            assert a.original.surfaces() == b.original.surfaces()
            assert a.distilled.surfaces() == b.distilled.surfaces()
            assert a.removed_positions == b.removed_positions

    def test_jsonl_records_carry_both_percentages(self, tmp_path):
        corpus = Corpus.from_texts(["The cat in the hat."])
        path = tmp_path / "pairs.jsonl"
        write_pairs(make_pairs(corpus, S_DEMO), path)
        record = json.loads(path.read_text().splitlines()[0])
        assert set(record) == {"id", "original", "distilled", "removed_positions",
                               "saved_pct", "saved_pct_words_only"}

    def test_corrupt_positions_rejected(self, tmp_path):
        path = tmp_path / "pairs.jsonl"
        record = {"id": 0, "original": "the cat", "distilled": "cat",
                  "removed_positions": [1], "saved_pct": 50.0}
        path.write_text(json.dumps(record) + "\n")
        with pytest.raises(TrimkitError):
            read_pairs(path)
