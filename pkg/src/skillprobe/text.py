"""Small text helpers shared by the catalog, host and analysis modules."""

import re

_PUNCT = re.compile(r"[^\w\s']|_")
_EDGE_APOS = re.compile(r"(?<!\w)'|'(?!\w)")
_WS = re.compile(r"\s+")

WAKE_WORD = "alexa"


def collapse_ws(text: str) -> str:
    return _WS.sub(" ", text).strip()


def normalize_utterance(text: str) -> str:
    """Lowercase, drop punctuation and collapse whitespace.

    Intra-word apostrophes survive (``santa's``, ``don't``); quote-like
    apostrophes at word edges do not.
    """
    text = text.lower().replace("’", "'").replace("‘", "'")
    text = _PUNCT.sub(" ", text)
    text = _EDGE_APOS.sub(" ", text)
    return collapse_ws(text)


def strip_wake_word(text: str) -> str:
    """Remove a leading wake word from an already-normalized utterance."""
    if text == WAKE_WORD:
        return ""
    if text.startswith(WAKE_WORD + " "):
        return text[len(WAKE_WORD) + 1:]
    return text


def contains_token_seq(haystack: list[str], needle: list[str]) -> bool:
    n = len(needle)
    if n == 0:
        return False
    return any(haystack[i:i + n] == needle for i in range(len(haystack) - n + 1))
