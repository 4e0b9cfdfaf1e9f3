"""Deterministic English-like sample corpus for demos and tests.

Paragraphs are assembled from encyclopedic sentence templates with
seeded slot fillers, which gives text with a natural function-word
profile (articles, prepositions, auxiliaries in ordinary positions)
without shipping a large data file. Same seed, same corpus.
"""

from __future__ import annotations

import random

from .textcore import Corpus

_TOPICS = (
    "museum", "harbor", "library", "bridge", "observatory", "cathedral",
    "festival", "railway", "market", "garden", "theater", "canal",
    "monastery", "fortress", "aqueduct", "archive", "workshop", "lighthouse",
)

_PLACES = (
    "Ravenna", "Lisbon", "Kyoto", "Tallinn", "Bologna", "Cusco", "Bruges",
    "Fez", "Valparaiso", "Leiden", "Heidelberg", "Aleppo", "Sarajevo",
    "Galway", "Trieste", "Bergen",
)

_FIELDS = (
    "astronomy", "cartography", "metallurgy", "navigation", "printing",
    "medicine", "irrigation", "glassmaking", "banking", "weaving",
    "shipbuilding", "surveying",
)

_ADJECTIVES = (
    "remarkable", "influential", "celebrated", "ancient", "prosperous",
    "distinctive", "elaborate", "modest", "renowned", "fragile",
    "monumental", "practical",
)

_NAMES = (
    "Aldrovandi", "Mercator", "Ibn Battuta", "Brunelleschi", "Halley",
    "Vesalius", "Agricola", "Snell", "Huygens", "Palladio",
)

_VERBS_PAST = (
    "founded", "completed", "restored", "documented", "expanded",
    "commissioned", "rebuilt", "surveyed", "catalogued", "endowed",
)

_GOODS = (
    "copper", "tin", "salt", "amber", "silk", "parchment", "dyes",
    "timber", "glass", "wool", "spices", "grain",
)

_PROFESSIONS = (
    "masons", "merchants", "scribes", "engineers", "apprentices",
    "cartographers", "printers", "astronomers", "weavers", "surveyors",
)

_YEARS = ("1481", "1523", "1594", "1612", "1648", "1701", "1756", "1792",
          "1803", "1842", "1867", "1889")

_NUMBERS = ("twelve", "twenty", "forty", "sixty", "ninety", "two hundred")

_SENTENCES = ("Construction records dated {year} credit {name} with the design, "
    "listing {number} {profession} hired over {number} seasons.",
    "{place} depended on its {topic} for {goods}, {goods2}, and {goods3}, "
    "traded along routes linking {place2} and distant river ports.",
    "The {topic} of {place} was {verb} in {year} and remains a {adj} "
    "landmark visible far beyond the city walls.",
    "Local chronicles describe how {profession} {verb} the {topic}, "
    "spending {number} years cutting stone shipped from {place2}.",
    "A {adj} treatise on {field}, printed in {place} in {year}, mentions "
    "the {topic} alongside diagrams of {goods} production.",
    "When {name} visited {place}, he sketched the {topic} and noted "
    "{number} workshops producing {goods} nearby.",
    "Guild registers from {year} show {profession} paying annual dues, "
    "funding repairs after storms damaged the {topic}.",
    "Because {field} flourished there, {place} attracted {profession} "
    "from {place2}, many settling near the {topic}.",
    "{name} catalogued {number} instruments kept inside the {topic}, "
    "tools that advanced {field} across {place} and {place2}.",
    "The {topic} later housed a school of {field}, where students copied "
    "charts, ground lenses, and bound volumes of travel accounts.",
    "Fires in {year} destroyed warehouses holding {goods} and {goods2}, "
    "yet the {topic} survived with only a scorched gate.",
    "Scholars compare the {adj} stonework of the {topic} with buildings "
    "in {place2}, tracing both to {profession} trained by {name}.",
    "Tax rolls list {goods}, {goods2}, and candle wax among supplies "
    "bought for the {topic} during {year}.",
    "Its {adj} hall seats {number} visitors, and exhibitions on {field} "
    "draw crowds each spring festival.",
)


def _fill(template: str, rng: random.Random) -> str:
    goods = rng.sample(_GOODS, 3)
    places = rng.sample(_PLACES, 2)
    return template.format(
        topic=rng.choice(_TOPICS),
        place=places[0],
        place2=places[1],
        field=rng.choice(_FIELDS),
        adj=rng.choice(_ADJECTIVES),
        name=rng.choice(_NAMES),
        verb=rng.choice(_VERBS_PAST),
        year=rng.choice(_YEARS),
        number=rng.choice(_NUMBERS),
        profession=rng.choice(_PROFESSIONS),
        goods=goods[0],
        goods2=goods[1],
        goods3=goods[2],
    )


def sample_paragraph(rng: random.Random, n_sentences: int | None = None) -> str:
    n = n_sentences or rng.randint(2, 4)
    return " ".join(_fill(rng.choice(_SENTENCES), rng) for _ in range(n))


def sample_corpus(n_paragraphs: int, seed: int = 0, name: str = "sample") -> Corpus:
    rng = random.Random(seed)
    return Corpus.from_texts(
        (sample_paragraph(rng) for _ in range(n_paragraphs)), name=name)
