"""Built-in lexicons.

``EXPLORATORY_23`` is the small determiner/conjunction set used by the
exploratory counting study. ``EXTENDED_127`` is an approximation of a
standard English function-word inventory assembled from the usual
grammatical classes (articles, determiners, quantifiers, conjunctions,
prepositions, pronouns, auxiliaries). There is no canonical 127-word
list; this one is ours and callers who need a different inventory should
load their own file.
"""

EXPLORATORY_23 = (
    "the", "a", "an", "as", "though", "because", "before", "even", "if",
    "that", "since", "so", "than", "unless", "until", "when", "whenever",
    "where", "whereas", "wherever", "while", "and", "but",
)

_ARTICLES_DETERMINERS = (
    "the", "a", "an", "this", "that", "these", "those", "each", "every",
    "either", "neither",
)

_QUANTIFIERS = (
    "all", "any", "both", "some", "few", "many", "much", "more", "most",
    "several", "enough", "no",
)

_CONJUNCTIONS = (
    "and", "but", "or", "so", "yet", "as", "because", "although", "though",
    "if", "since", "than", "unless", "until", "when", "whenever", "where",
    "whereas", "wherever", "while", "even",
)

_PREPOSITIONS = (
    "of", "in", "to", "for", "with", "on", "at", "by", "from", "up", "down",
    "about", "into", "over", "under", "above", "below", "across", "through",
    "during", "before", "after", "between", "among", "against", "without",
    "within", "along", "around", "behind", "beyond", "near", "off", "toward",
    "out",
)

_PRONOUNS = (
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us",
    "them", "my", "your", "his", "its", "our", "their", "who", "whom",
    "whose", "which", "what",
)

_AUXILIARIES = (
    "am", "is", "are", "was", "were", "be", "been", "being", "do", "does",
    "did", "have", "has", "had", "will", "would", "shall", "should", "may",
    "might", "must", "can", "could",
)

_PARTICLES = ("not", "there")


def _dedup(*groups: tuple[str, ...]) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for group in groups:
        for word in group:
            seen.setdefault(word, None)
    return tuple(seen)


EXTENDED_127 = _dedup(
    _ARTICLES_DETERMINERS,
    _QUANTIFIERS,
    _CONJUNCTIONS,
    _PREPOSITIONS,
    _PRONOUNS,
    _AUXILIARIES,
    _PARTICLES,
)

assert len(EXTENDED_127) == 127, len(EXTENDED_127)
assert set(EXPLORATORY_23) <= set(EXTENDED_127)

BUILTIN_LEXICONS = {
    "exploratory23": EXPLORATORY_23,
    "extended": EXTENDED_127,
    "extended127": EXTENDED_127,
}
