"""Detect responses that ask the user to speak personal information.

A keyword alone is not enough: the sentence containing it must be a question
or a request, and the keyword must name the user's own attribute ("your
name", "your home address") or be part of a phrase that can only be asked of
the listener ("how old are you").
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..respclass import SentenceKind, default_classifier
from ..respclass.postag import TaggedToken

PII_KEYWORDS: tuple[str, ...] = (
    "name", "age", "address", "phone number", "social security number", "passport number",
    "driver's license number", "taxpayer id number", "patient id number",
    "financial account number", "credit card number", "date of birth", "zipcode",
)

# surface phrase -> canonical keyword
ALIASES: dict[str, str] = {
    "birthday": "date of birth",
    "zip code": "zipcode",
    "postal code": "zipcode",
    "credit card": "credit card number",
    "telephone number": "phone number",
    "mobile number": "phone number",
    "ssn": "social security number",
    "driver's license": "driver's license number",
}

# phrases that can only be asked of the listener
SECOND_PERSON_ALIASES: dict[str, str] = {
    "how old are you": "age",
    "how old you are": "age",
    "when were you born": "date of birth",
    "where do you live": "address",
    "where you live": "address",
    "what should i call you": "name",
    "what can i call you": "name",
    "what do i call you": "name",
}

# words allowed between "your" and the keyword ("your full name", "your home address")
MODIFIERS = frozenset({"first", "last", "full", "middle", "real", "given", "family", "home",
                       "mailing", "street", "current", "exact", "legal", "own", "mobile", "cell",
                       "email", "whole"})
REQUEST_VERBS = frozenset({"tell", "give", "provide", "enter", "say", "state", "spell", "share",
                           "type", "write", "send", "confirm", "input", "know", "repeat",
                           "telling", "saying"})
SCOPE_WINDOW = 3


@dataclass(frozen=True)
class PiiMatch:
    keyword: str
    evidence: str
    sentence_kind: SentenceKind


class PiiLexicon:
    def __init__(self, keywords: Iterable[str] = PII_KEYWORDS,
                 aliases: dict[str, str] | None = None,
                 second_person: dict[str, str] | None = None):
        self.keywords = tuple(keywords)
        missing = set(PII_KEYWORDS) - set(self.keywords)
        if missing:
            raise ValueError(f"keyword list may only be extended; missing {sorted(missing)}")
        table = {k: k for k in self.keywords}
        table.update(ALIASES if aliases is None else aliases)
        self.phrases = sorted(((tuple(p.split()), k) for p, k in table.items()),
                              key=lambda e: -len(e[0]))
        sp = SECOND_PERSON_ALIASES if second_person is None else second_person
        self.second_person = sorted(((tuple(p.split()), k) for p, k in sp.items()),
                                    key=lambda e: -len(e[0]))

    def extended(self, extra_keywords: Iterable[str]) -> "PiiLexicon":
        return PiiLexicon(tuple(self.keywords) + tuple(k for k in extra_keywords
                                                       if k not in self.keywords))

    def mentions(self, words: Sequence[str]) -> list[tuple[int, int, str, bool]]:
        """(start, end, keyword, second_person) for every phrase occurrence."""
        out = []
        i = 0
        while i < len(words):
            hit = None
            for table, sp in ((self.second_person, True), (self.phrases, False)):
                for seq, kw in table:
                    if tuple(words[i:i + len(seq)]) == seq:
                        hit = (i, i + len(seq), kw, sp)
                        break
                if hit:
                    break
            if hit:
                out.append(hit)
                i = hit[1]
            else:
                i += 1
        return out

    def any_mention(self, text: str) -> bool:
        words = re.findall(r"[a-z0-9']+", text.lower())
        return bool(self.mentions(words))


DEFAULT_LEXICON = PiiLexicon()


def _in_scope(words: Sequence[str], start: int) -> int | None:
    """Index of the governing "your", if the keyword is the user's own attribute."""
    for j in range(start - 1, max(-1, start - 1 - SCOPE_WINDOW), -1):
        if words[j] == "your":
            return j
        if words[j] not in MODIFIERS:
            return None
    return None


def _surface(text: str, words: Sequence[str]) -> str:
    pattern = r"(?<![\w'])" + r"[\W_]+".join(re.escape(w) for w in words) + r"(?![\w'])"
    m = re.search(pattern, text, re.IGNORECASE)
    return m.group(0) if m else " ".join(words)


def match_sentence(tokens: Sequence[TaggedToken], kind: SentenceKind,
                   lexicon: PiiLexicon = DEFAULT_LEXICON) -> tuple[str, tuple[str, ...]] | None:
    if kind is SentenceKind.INFORMATIVE:
        return None
    words = [t.lower for t in tokens if t.tag != "PUNCT"]
    for start, end, keyword, second_person in lexicon.mentions(words):
        if second_person:
            if kind.is_question or any(w in REQUEST_VERBS for w in words[:start]):
                return keyword, tuple(words[start:end])
            continue
        owner = _in_scope(words, start)
        if owner is None:
            continue
        if kind.is_question or any(w in REQUEST_VERBS for w in words[:owner]):
            return keyword, tuple(words[start:end])
    return None


def pii_request_match(text: str, lexicon: PiiLexicon = DEFAULT_LEXICON) -> PiiMatch | None:
    """First sentence of ``text`` that asks for a PII keyword, if any."""
    clf = default_classifier()
    for analysis in clf.analyze(text):
        hit = match_sentence(analysis.tokens, analysis.kind, lexicon)
        if hit:
            keyword, words = hit
            return PiiMatch(keyword, _surface(text, words), analysis.kind)
    return None
