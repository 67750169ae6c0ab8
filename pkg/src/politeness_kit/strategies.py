"""The twenty politeness-strategy detectors.

Each strategy is a lexical or dependency-structural pattern matched against a
parsed request.  Matching is case-insensitive; "sentence-initial" means the
first token of a sentence (either sentence of a request).  A strategy fires
for a request if it matches in any of its sentences.

Only the hedge detector has a fully pinned definition (a nominal-subject
dependency edge pointing out of a hedge verb).  The remaining detectors are
reconstructions from each strategy's canonical example; their definitions are
kept declarative in ``CATALOG`` so an individual matcher can be swapped
without touching the rest.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from .lexicons import Lexicon, LexiconName, LexiconSet, REQUIRED_LEXICONS
from .model import ParsedRequest, ParsedSentence

#: Canonical strategy order: positive politeness first, then negative.
STRATEGIES: tuple[str, ...] = (
    "gratitude",
    "deference",
    "greeting",
    "positive_lexicon",
    "negative_lexicon",
    "apologizing",
    "please",
    "please_start",
    "indirect_btw",
    "direct_question",
    "direct_start",
    "counterfactual_modal",
    "indicative_modal",
    "first_person_start",
    "first_person_plural",
    "first_person",
    "second_person",
    "second_person_start",
    "hedges",
    "factuality",
)

DISPLAY_NAMES: dict[str, str] = {
    "gratitude": "Gratitude",
    "deference": "Deference",
    "greeting": "Greeting",
    "positive_lexicon": "Positive lexicon",
    "negative_lexicon": "Negative lexicon",
    "apologizing": "Apologizing",
    "please": "Please",
    "please_start": "Please start",
    "indirect_btw": "Indirect (btw)",
    "direct_question": "Direct question",
    "direct_start": "Direct start",
    "counterfactual_modal": "Counterfactual modal",
    "indicative_modal": "Indicative modal",
    "first_person_start": "1st person start",
    "first_person_plural": "1st person pl.",
    "first_person": "1st person",
    "second_person": "2nd person",
    "second_person_start": "2nd person start",
    "hedges": "Hedges",
    "factuality": "Factuality",
}


@dataclass(frozen=True)
class StrategyProfile:
    """Which of the twenty strategies a request exhibits."""

    gratitude: bool = False
    deference: bool = False
    greeting: bool = False
    positive_lexicon: bool = False
    negative_lexicon: bool = False
    apologizing: bool = False
    please: bool = False
    please_start: bool = False
    indirect_btw: bool = False
    direct_question: bool = False
    direct_start: bool = False
    counterfactual_modal: bool = False
    indicative_modal: bool = False
    first_person_start: bool = False
    first_person_plural: bool = False
    first_person: bool = False
    second_person: bool = False
    second_person_start: bool = False
    hedges: bool = False
    factuality: bool = False

    def __getitem__(self, name: str) -> bool:
        if name not in STRATEGIES:
            raise KeyError(name)
        return getattr(self, name)

    def as_dict(self) -> dict[str, bool]:
        return {name: getattr(self, name) for name in STRATEGIES}

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in STRATEGIES], dtype=float)

    def fired(self) -> tuple[str, ...]:
        return tuple(name for name in STRATEGIES if getattr(self, name))


assert tuple(f.name for f in fields(StrategyProfile)) == STRATEGIES


@dataclass(frozen=True)
class MatchConfig:
    """Knobs for parse-scheme differences across dependency label sets."""

    nominal_subject_prefix: str = "nsubj"

    def is_nominal_subject(self, relation: str) -> bool:
        return relation.lower().startswith(self.nominal_subject_prefix)


DEFAULT_CONFIG = MatchConfig()

# Word and phrase inventories for the reconstructed matchers.  Membership is
# tested against both the lowercased surface and the lemma of a token.
DEFERENCE_INITIAL = frozenset({"great", "good", "nice", "interesting", "cool", "excellent", "awesome"})
DEFERENCE_BIGRAM_FIRST = frozenset({"good", "nice", "great"})
DEFERENCE_BIGRAM_SECOND = frozenset({"job", "work"})
GREETINGS = frozenset({"hey", "hi", "hello", "greetings"})
APOLOGY_TOKENS = frozenset({"sorry", "apologize", "oops", "whoops"})
APOLOGY_PHRASES = ("excuse me", "forgive me", "i apologize")
BTW_PHRASE = "by the way"
QUESTION_WORDS = frozenset({"what", "why", "who", "how", "which", "where", "when"})
DIRECT_STARTERS = frozenset({"so", "then", "and", "but", "or"})
COUNTERFACTUAL_MODALS = frozenset({"could", "would"})
INDICATIVE_MODALS = frozenset({"can", "will"})
FIRST_PERSON = frozenset({"i", "my", "mine", "myself"})
FIRST_PERSON_PLURAL = frozenset({"we", "us", "our", "ours", "ourselves"})
SECOND_PERSON = frozenset({"you", "your", "yours", "yourself"})
GRATITUDE_VERB = "appreciate"
GRATITUDE_SUBJECTS = frozenset({"i", "we"})
FACTUALITY_PHRASES = ("in fact", "the point", "the reality", "the truth")
FACTUALITY_TOKENS = frozenset({"really", "actually", "honestly", "surely"})


def _token_terms(sentence: ParsedSentence) -> list[frozenset[str]]:
    return [frozenset((t.surface.lower(), t.lemma)) for t in sentence.tokens]


def _has_token(sentence: ParsedSentence, words: frozenset[str], position: str) -> bool:
    terms = _token_terms(sentence)
    if not terms:
        return False
    if position == "initial":
        return bool(terms[0] & words)
    if position == "non_initial":
        return any(t & words for t in terms[1:])
    return any(t & words for t in terms)


def _has_phrase(sentence: ParsedSentence, phrase: str, initial_only: bool = False) -> bool:
    words = phrase.split()
    surfaces = [t.surface.lower() for t in sentence.tokens]
    if len(surfaces) < len(words):
        return False
    starts = (0,) if initial_only else range(len(surfaces) - len(words) + 1)
    return any(surfaces[s : s + len(words)] == words for s in starts)


def _has_lemma_bigram(
    sentence: ParsedSentence, first: frozenset[str], second: frozenset[str]
) -> bool:
    lemmas = [t.lemma for t in sentence.tokens]
    return any(a in first and b in second for a, b in zip(lemmas, lemmas[1:]))


def _lemma_in_lexicon(sentence: ParsedSentence, lexicon: Lexicon) -> bool:
    return any(t.lemma in lexicon for t in sentence.tokens)


def match_hedges(
    sentence: ParsedSentence,
    hedge_lexicon: Lexicon,
    config: MatchConfig = DEFAULT_CONFIG,
) -> bool:
    """True iff a nominal-subject edge points out of a hedge-verb token."""
    if not sentence.tokens:
        return False
    lemma_by_index = {t.index: t.lemma for t in sentence.tokens}
    for edge in sentence.edges:
        if edge.head == 0 or not config.is_nominal_subject(edge.relation):
            continue
        head_lemma = lemma_by_index.get(edge.head)
        if head_lemma is not None and head_lemma in hedge_lexicon:
            return True
    return False


def _match_gratitude(sentence: ParsedSentence, lexicons: LexiconSet, config: MatchConfig) -> bool:
    if _has_token(sentence, frozenset({"thank"}), "any"):
        return True
    lemma_by_index = {t.index: t.lemma for t in sentence.tokens}
    for edge in sentence.edges:
        if edge.head == 0 or not config.is_nominal_subject(edge.relation):
            continue
        if (
            lemma_by_index.get(edge.head) == GRATITUDE_VERB
            and lemma_by_index.get(edge.dependent) in GRATITUDE_SUBJECTS
        ):
            return True
    return False


def _match_deference(sentence: ParsedSentence, lexicons: LexiconSet, config: MatchConfig) -> bool:
    if _has_token(sentence, DEFERENCE_INITIAL, "initial"):
        return True
    terms = _token_terms(sentence)
    return (
        len(terms) >= 2
        and bool(terms[0] & DEFERENCE_BIGRAM_FIRST)
        and bool(terms[1] & DEFERENCE_BIGRAM_SECOND)
    )


def _match_apologizing(sentence: ParsedSentence, lexicons: LexiconSet, config: MatchConfig) -> bool:
    if _has_token(sentence, APOLOGY_TOKENS, "any"):
        return True
    return any(_has_phrase(sentence, phrase) for phrase in APOLOGY_PHRASES)


def _match_factuality(sentence: ParsedSentence, lexicons: LexiconSet, config: MatchConfig) -> bool:
    if _has_token(sentence, FACTUALITY_TOKENS, "any"):
        return True
    return any(_has_phrase(sentence, phrase) for phrase in FACTUALITY_PHRASES)


_MATCHERS = {
    "gratitude": _match_gratitude,
    "deference": _match_deference,
    "greeting": lambda s, lx, c: _has_token(s, GREETINGS, "initial"),
    "positive_lexicon": lambda s, lx, c: _lemma_in_lexicon(s, lx[LexiconName.POSITIVE_SENTIMENT]),
    "negative_lexicon": lambda s, lx, c: _lemma_in_lexicon(s, lx[LexiconName.NEGATIVE_SENTIMENT]),
    "apologizing": _match_apologizing,
    "please": lambda s, lx, c: _has_token(s, frozenset({"please"}), "non_initial"),
    "please_start": lambda s, lx, c: _has_token(s, frozenset({"please"}), "initial"),
    "indirect_btw": lambda s, lx, c: _has_phrase(s, BTW_PHRASE, initial_only=True),
    "direct_question": lambda s, lx, c: _has_token(s, QUESTION_WORDS, "initial"),
    "direct_start": lambda s, lx, c: _has_token(s, DIRECT_STARTERS, "initial"),
    "counterfactual_modal": lambda s, lx, c: _has_lemma_bigram(s, COUNTERFACTUAL_MODALS, frozenset({"you"})),
    "indicative_modal": lambda s, lx, c: _has_lemma_bigram(s, INDICATIVE_MODALS, frozenset({"you"})),
    "first_person_start": lambda s, lx, c: _has_token(s, FIRST_PERSON, "initial"),
    "first_person_plural": lambda s, lx, c: _has_token(s, FIRST_PERSON_PLURAL, "any"),
    "first_person": lambda s, lx, c: _has_token(s, FIRST_PERSON, "non_initial"),
    "second_person": lambda s, lx, c: _has_token(s, SECOND_PERSON, "non_initial"),
    "second_person_start": lambda s, lx, c: _has_token(s, SECOND_PERSON, "initial"),
    "hedges": lambda s, lx, c: match_hedges(s, lx[LexiconName.HEDGE_VERBS], c),
    "factuality": _match_factuality,
}

assert set(_MATCHERS) == set(STRATEGIES)


def detect_strategies(
    request: ParsedRequest,
    lexicons: LexiconSet,
    config: MatchConfig = DEFAULT_CONFIG,
) -> StrategyProfile:
    """Compute the strategy profile of a request (OR over its sentences)."""
    for name in REQUIRED_LEXICONS:
        if name not in lexicons:
            raise KeyError(f"missing required lexicon {name.value!r}")
    flags = {}
    for name in STRATEGIES:
        matcher = _MATCHERS[name]
        flags[name] = any(matcher(s, lexicons, config) for s in request.sentences)
    return StrategyProfile(**flags)


def detect_all(
    requests: Iterable[ParsedRequest],
    lexicons: LexiconSet,
    config: MatchConfig = DEFAULT_CONFIG,
) -> dict[str, StrategyProfile]:
    return {r.id: detect_strategies(r, lexicons, config) for r in requests}


def strategy_cooccurrence(profiles: Sequence[StrategyProfile]) -> np.ndarray:
    """20x20 co-occurrence count matrix in ``STRATEGIES`` order.

    Cell (i, j) counts requests exhibiting both strategy i and strategy j;
    the diagonal holds per-strategy totals.
    """
    if not profiles:
        raise ValueError("need at least one profile")
    flags = np.array([p.as_vector() for p in profiles])
    return (flags.T @ flags).astype(int)


def catalog() -> dict[str, dict]:
    """Machine-readable description of every matcher, for docs and tests."""
    def token_rule(words: Iterable[str], position: str) -> dict:
        return {"kind": "token_in_set", "position": position, "terms": sorted(words)}

    def phrase_rule(phrases: Iterable[str], position: str) -> dict:
        return {"kind": "phrase_in_set", "position": position, "phrases": sorted(phrases)}

    return {
        "gratitude": {
            "any_of": [
                token_rule({"thank"}, "any"),
                {
                    "kind": "dependency_edge",
                    "relation_prefix": DEFAULT_CONFIG.nominal_subject_prefix,
                    "head_lemma": GRATITUDE_VERB,
                    "dependent_lemma_in": sorted(GRATITUDE_SUBJECTS),
                },
            ]
        },
        "deference": {
            "any_of": [
                token_rule(DEFERENCE_INITIAL, "initial"),
                {
                    "kind": "initial_bigram",
                    "first": sorted(DEFERENCE_BIGRAM_FIRST),
                    "second": sorted(DEFERENCE_BIGRAM_SECOND),
                },
            ]
        },
        "greeting": token_rule(GREETINGS, "initial"),
        "positive_lexicon": {"kind": "lexicon_lemma", "lexicon": "positive_sentiment"},
        "negative_lexicon": {"kind": "lexicon_lemma", "lexicon": "negative_sentiment"},
        "apologizing": {
            "any_of": [token_rule(APOLOGY_TOKENS, "any"), phrase_rule(APOLOGY_PHRASES, "any")]
        },
        "please": token_rule({"please"}, "non_initial"),
        "please_start": token_rule({"please"}, "initial"),
        "indirect_btw": phrase_rule({BTW_PHRASE}, "initial"),
        "direct_question": token_rule(QUESTION_WORDS, "initial"),
        "direct_start": token_rule(DIRECT_STARTERS, "initial"),
        "counterfactual_modal": {
            "kind": "lemma_bigram",
            "first": sorted(COUNTERFACTUAL_MODALS),
            "second": ["you"],
        },
        "indicative_modal": {
            "kind": "lemma_bigram",
            "first": sorted(INDICATIVE_MODALS),
            "second": ["you"],
        },
        "first_person_start": token_rule(FIRST_PERSON, "initial"),
        "first_person_plural": token_rule(FIRST_PERSON_PLURAL, "any"),
        "first_person": token_rule(FIRST_PERSON, "non_initial"),
        "second_person": token_rule(SECOND_PERSON, "non_initial"),
        "second_person_start": token_rule(SECOND_PERSON, "initial"),
        "hedges": {
            "kind": "dependency_edge",
            "relation_prefix": DEFAULT_CONFIG.nominal_subject_prefix,
            "head_lemma_in_lexicon": "hedge_verbs",
        },
        "factuality": {
            "any_of": [token_rule(FACTUALITY_TOKENS, "any"), phrase_rule(FACTUALITY_PHRASES, "any")]
        },
    }
