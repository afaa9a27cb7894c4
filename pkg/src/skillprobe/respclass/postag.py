"""Deterministic lexicon-plus-suffix part-of-speech tagger.

Only the distinctions the response rules need are made reliably: auxiliaries
(plain and negated), modals, WH words, pronouns and determiners come from a
closed-class lexicon; open-class words fall back to suffix heuristics.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .tokenize import quoted_content

TAGS = frozenset({
    "AUX", "AUX-NEG", "MD", "VB", "VBD", "VBG", "VBN", "VBZ", "VBP", "NN", "NNS", "NNP",
    "PRP", "WDT", "WP", "WP$", "WRB", "IN", "TO", "DT", "JJ", "RB", "CD", "PUNCT", "OTHER",
})
WH_TAGS = frozenset({"WDT", "WP", "WP$", "WRB"})
AUX_TAGS = frozenset({"AUX", "AUX-NEG", "MD"})
POSSESSIVES = frozenset({"my", "your", "his", "her", "its", "our", "their"})


@dataclass(frozen=True)
class TaggedToken:
    text: str
    tag: str

    @property
    def lower(self) -> str:
        return self.text.lower()


def read_tsv(path: str | Path | None, default_name: str) -> list[tuple[str, str]]:
    """Read ``key<TAB>value`` lines, skipping blanks and ``#`` comments."""
    if path is None:
        raw = resources.files("skillprobe.respclass").joinpath("data", default_name).read_text("utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    rows = []
    for line in raw.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        key, _, value = line.partition("\t")
        rows.append((key.strip().lower(), value.strip()))
    return rows


@lru_cache(maxsize=8)
def load_lexicon(path: str | None = None) -> dict[str, str]:
    lexicon = {}
    for word, tag in read_tsv(path, "lexicon.tsv"):
        if tag not in TAGS:
            raise ValueError(f"lexicon tag {tag!r} for {word!r} is not a known tag")
        lexicon.setdefault(word, tag)
    return lexicon


_ADJ_SUFFIXES = ("ful", "ous", "ive", "able", "ible", "less", "ish", "ic", "ical", "est")


def _open_class(word: str, lexicon: dict[str, str], first: bool, original: str) -> str:
    if word[0].isdigit():
        return "CD"
    if word.endswith("ly") and len(word) > 4:
        return "RB"
    if word.endswith("ing") and len(word) > 5:
        return "VBG"
    if word.endswith("ed") and len(word) > 4:
        return "VBD"
    if word.endswith(_ADJ_SUFFIXES) and len(word) > 5:
        return "JJ"
    for stem in (word[:-1], word[:-2]):
        if word.endswith("s") and lexicon.get(stem) == "VB":
            return "VBZ"
    if not first and original[0].isupper():
        return "NNP"
    if word.endswith("s") and not word.endswith(("ss", "us", "is")) and len(word) > 3:
        return "NNS"
    return "NN"


def pos_tag(tokens: list[str], lexicon: dict[str, str] | None = None) -> list[TaggedToken]:
    lexicon = lexicon if lexicon is not None else load_lexicon()
    tags = []
    for i, tok in enumerate(tokens):
        if quoted_content(tok) is not None:
            tags.append("NNP")
            continue
        if not tok[0].isalnum():
            tags.append("PUNCT")
            continue
        word = tok.lower()
        tag = lexicon.get(word)
        if tag is None and "'" in word:
            head, _, clitic = word.partition("'")
            tag = lexicon.get(head, "NN") if clitic == "s" else lexicon.get(word)
        if tag is None:
            tag = _open_class(word, lexicon, i == 0, tok)
        tags.append(tag)

    for i, tok in enumerate(tokens):
        if tok.lower() not in ("what", "which") or i + 1 >= len(tokens):
            continue
        # "which state do you ..." : the word after the WH determiner is nominal
        if tags[i + 1] == "VB" and i + 2 < len(tokens) and tags[i + 2] in ("AUX", "AUX-NEG", "MD"):
            tags[i + 1] = "NN"
        # "what"/"which" before a noun or adjective act as determiners
        if tags[i + 1] in ("NN", "NNS", "JJ"):
            tags[i] = "WDT"
    return [TaggedToken(t, g) for t, g in zip(tokens, tags)]
