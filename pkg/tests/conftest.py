from __future__ import annotations

import pytest

from trimkit.lmscore import train_ngram
from trimkit.textcore import Corpus

# A small memorizable corpus with a natural function-word mix; every
# sentence keeps at least one content word outside any removal set.
TOY_SENTENCES = (
    "I went to the marathon in the city center.",
    "The museum of the city was closed for repairs.",
    "She walked along the river to the old harbor.",
    "The students studied maps of the region in the library.",
    "A merchant sold copper and tin at the spring market.",
    "The bridge over the canal was rebuilt by local masons.",
    "He wrote a letter about the festival to his brother.",
    "The archive keeps records of trade between the towns.",
    "Workers restored the roof of the cathedral last summer.",
    "The garden behind the theater attracts many visitors.",
)


@pytest.fixture(scope="session")
def toy_corpus() -> Corpus:
    return Corpus.from_texts(TOY_SENTENCES, name="toy")


@pytest.fixture(scope="session")
def memorized_corpus() -> Corpus:
    # Heavy repetition makes the trigram scorer near-deterministic.
    return Corpus.from_texts(TOY_SENTENCES * 20, name="memorized")


@pytest.fixture(scope="session")
def toy_model(memorized_corpus):
    return train_ngram(memorized_corpus, order=3, smoothing_k=0.01)
