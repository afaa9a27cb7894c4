"""Quote-aware sentence splitting and word tokenization for skill responses."""

from __future__ import annotations

import re

_CURLY = str.maketrans({"“": '"', "”": '"', "‘": "'", "’": "'", "`": "'"})

# '' pairs first, then double quotes, then single quotes that are not apostrophes
_QUOTED = re.compile(
    r"''(?P<a>[^'\n]+?)''"
    r"|\"(?P<b>[^\"\n]+?)\""
    r"|(?<![\w'])'(?P<c>[^'\n]+?)'(?![\w'])"
)
_TERMINATOR = re.compile(r"[.!?]+")
_TOKEN = re.compile(
    r"\x00\d+\x00"                                     # protected quoted span
    r"|\d+(?:[.,:]\d+)*(?:st|nd|rd|th)?"                 # numbers, times, ordinals
    r"|[A-Za-z]+(?:'[A-Za-z]+)*(?:-[A-Za-z]+)*'?"        # words, clitics, hyphenation
    r"|\.{2,}|[^\w\s]"                                   # ellipsis or single punctuation
)
_PLACEHOLDER = re.compile(r"\x00(\d+)\x00")


def _protect_quotes(text: str) -> tuple[str, list[str]]:
    spans: list[str] = []

    def repl(m: re.Match) -> str:
        spans.append(m.group(0))
        return f"\x00{len(spans) - 1}\x00"

    return _QUOTED.sub(repl, text), spans


def _split(protected: str) -> list[str]:
    sentences = []
    start = 0
    for m in _TERMINATOR.finditer(protected):
        end = m.end()
        nxt = protected[end:end + 1]
        # "3.5" is not a boundary; "Says!Let's" and "curious...how" are
        if nxt and not (nxt.isspace() or nxt.isalpha() or nxt in "\x00\"')"):
            continue
        if nxt.isalpha() and m.group(0) == "." and protected[m.start() - 1:m.start()].isdigit():
            continue
        sentences.append(protected[start:end])
        start = end
    sentences.append(protected[start:])
    return [s.strip() for s in sentences if s.strip()]


def quoted_content(token: str) -> str | None:
    """Inner text of a quoted token, or None for ordinary tokens."""
    if len(token) >= 4 and token.startswith("''") and token.endswith("''"):
        return token[2:-2]
    if len(token) >= 2 and token[0] == token[-1] and token[0] in "\"'":
        return token[1:-1]
    return None


def tokenize_sentences(text: str) -> list[list[str]]:
    """Split ``text`` into sentences of tokens.

    Quoted spans stay whole (``'1'`` is one token) and never end a sentence.
    Negative contractions such as ``don't`` stay one token. Sentences with no
    word tokens (a stray ``...``) are dropped.
    """
    protected, spans = _protect_quotes(text.translate(_CURLY))
    out = []
    for sentence in _split(protected):
        tokens = [_PLACEHOLDER.sub(lambda m: spans[int(m.group(1))], t)
                  for t in _TOKEN.findall(sentence)]
        tokens = [t[:-1] if t.endswith("'") and quoted_content(t) is None and len(t) > 1 else t
                  for t in tokens]
        if any(t[0].isalnum() or quoted_content(t) is not None for t in tokens):
            out.append(tokens)
    return out
