from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trimkit.errors import CorpusError, LexiconError
from trimkit.textcore import (Lexicon, count_lexicon_terms, detokenize,
                              load_corpus, load_lexicon, tokenize)


class TestTokenize:
    def test_words_and_punctuation(self):
        seq = tokenize("The history of art.")
        assert seq.surfaces() == ("The", "history", "of", "art", ".")
        assert [t.kind for t in seq] == ["word"] * 4 + ["punctuation"]

    def test_empty(self):
        assert len(tokenize("")) == 0

    def test_apostrophe_stays_inside_word(self):
        assert tokenize("don't stop").surfaces() == ("don't", "stop")

    def test_norm_is_lowercased_surface(self):
        for token in tokenize("The CAT, don't!"):
            assert token.norm == token.surface.lower()

    def test_punctuation_tokens_have_no_letters_or_digits(self):
        for token in tokenize("a1, b2; x-y (z)"):
            if token.kind == "punctuation":
                assert not any(c.isalnum() for c in token.surface)

    def test_deterministic(self):
        text = "Some text, with 3 tokens' worth of punctuation!"
        assert tokenize(text) == tokenize(text)

    @given(st.text(max_size=200))
    @settings(max_examples=200)
    def test_roundtrip_property(self, text):
        once = tokenize(text)
        again = tokenize(detokenize(once))
        assert once.surfaces() == again.surfaces()


class TestDetokenize:
    def test_punctuation_attaches_left(self):
        assert detokenize(tokenize("The cat .")) == "The cat."

    def test_empty(self):
        assert detokenize(tokenize("")) == ""

    def test_removal_leaves_single_spaces(self):
        assert detokenize(tokenize("went marathon city center")) == "went marathon city center"


class TestLexicon:
    def test_builtin_exploratory(self):
        lex = load_lexicon("exploratory23")
        assert len(lex) == 23
        assert lex.words[:3] == ("the", "a", "an")

    def test_builtin_extended(self):
        lex = load_lexicon("extended")
        assert len(lex) == 127
        assert set(load_lexicon("exploratory23").words) <= set(lex.words)

    def test_file_dedup_and_lowercase(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text("The\nthe\nand\n# a comment\n\n")
        lex = load_lexicon(path)
        assert lex.words == ("the", "and")

    def test_multiword_entry_rejected(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text("a b\n")
        with pytest.raises(LexiconError):
            load_lexicon(path)

    def test_punctuation_entry_rejected(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text("the\n...\n")
        with pytest.raises(LexiconError):
            load_lexicon(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(LexiconError):
            load_lexicon(tmp_path / "nope.txt")

    def test_empty_lexicon_rejected(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text("# only comments\n")
        with pytest.raises(LexiconError):
            load_lexicon(path)


class TestCorpus:
    def test_plain_blank_line_split(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("A.\n\nB.")
        corpus = load_corpus(path, format="plain")
        assert [f.text for f in corpus] == ["A.", "B."]
        assert [f.id for f in corpus] == [0, 1]

    def test_plain_multiple_blank_lines(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("A.\n\n   \n\nB.\nstill B.\n")
        corpus = load_corpus(path)
        assert len(corpus) == 2
        assert corpus.fragments[1].text == "B.\nstill B."

    def test_jsonl_ids_in_file_order(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"text": "one"}\n{"text": "two", "id": "k7"}\n{"text": "three"}\n')
        corpus = load_corpus(path, format="jsonl")
        assert [f.id for f in corpus] == [0, 1, 2]
        assert corpus.fragments[1].source_id == "k7"

    def test_jsonl_bad_line_lenient(self, tmp_path, caplog):
        path = tmp_path / "c.jsonl"
        path.write_text('{"text": "ok"}\nnot json\n{"text": "fine"}\n')
        with caplog.at_level("WARNING"):
            corpus = load_corpus(path, format="jsonl", strict=False)
        assert len(corpus) == 2
        assert len(caplog.records) == 1

    def test_jsonl_bad_line_strict(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"no_text": 1}\n')
        with pytest.raises(CorpusError, match=":1:"):
            load_corpus(path, format="jsonl", strict=True)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CorpusError):
            load_corpus(tmp_path / "nope.txt")

    def test_unknown_format(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("hi")
        with pytest.raises(CorpusError):
            load_corpus(path, format="xml")

    def test_fragment_token_counts_are_independent(self, tmp_path):
        texts = ["The cat sat.", "A dog, barking loudly!", "Third fragment here"]
        path = tmp_path / "c.txt"
        path.write_text("\n\n".join(texts))
        corpus = load_corpus(path)
        total = sum(len(tokenize(f.text)) for f in corpus)
        assert total == sum(len(tokenize(t)) for t in texts)


class TestCountLexiconTerms:
    def test_direct_count(self):
        lex = Lexicon(("the", "and"))
        assert count_lexicon_terms(tokenize("The cat and the dog"), lex) == 3

    def test_disjoint_is_zero(self):
        lex = Lexicon(("zebra",))
        assert count_lexicon_terms(tokenize("The cat and the dog"), lex) == 0

    def test_case_insensitive(self):
        lex = Lexicon(("the",))
        assert count_lexicon_terms(tokenize("THE the The"), lex) == 3
