"""Wordlist moderation with token boundaries and leetspeak folding."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable

_TOKEN = re.compile(r"[\w@$!*']+")
_LEET = str.maketrans({"0": "o", "1": "i", "3": "e", "4": "a", "5": "s", "7": "t",
                       "@": "a", "$": "s", "!": "i"})
_EDGE = "!'*_"
_SUFFIXES = ("ing", "es", "ed", "s", "y")


@dataclass(frozen=True)
class TermMatch:
    term: str
    start: int
    end: int
    surface: str


def read_data_lines(name: str, path: str | Path | None = None) -> list[str]:
    if path is None:
        raw = resources.files("skillprobe.riskscan").joinpath("data", name).read_text("utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    return [line for line in raw.splitlines() if line.strip() and not line.startswith("#")]


def _fold(token: str) -> str:
    word = token.strip(_EDGE).lower()
    if word.endswith("'s"):
        word = word[:-2]
    if any(c.isalpha() for c in word) and any(not c.isalpha() for c in word):
        word = word.translate(_LEET)
    return word


def _variants(word: str) -> list[str]:
    out = [word]
    for suffix in _SUFFIXES:
        if word.endswith(suffix) and len(word) - len(suffix) >= 3:
            stem = word[:-len(suffix)]
            out.append(stem)
            if len(stem) >= 4 and stem[-1] == stem[-2] and stem[-1] not in "aeiou":
                out.append(stem[:-1])  # crappy -> crapp -> crap
    return out


class Wordlist:
    """Case-insensitive term matcher; entries are single words or word sequences."""

    def __init__(self, terms: Iterable[str]):
        self.terms = frozenset(" ".join(t.lower().split()) for t in terms if t.strip())
        self._single = {t for t in self.terms if " " not in t}
        self._multi = sorted((tuple(t.split()) for t in self.terms if " " in t), key=len, reverse=True)

    @classmethod
    def bundled(cls) -> "Wordlist":
        return _bundled()

    @classmethod
    def from_file(cls, path: str | Path) -> "Wordlist":
        return cls(read_data_lines("wordlist.txt", path))

    def extended(self, extra: Iterable[str]) -> "Wordlist":
        return Wordlist(self.terms | set(extra))

    def find(self, text: str) -> list[TermMatch]:
        tokens = []
        for m in _TOKEN.finditer(text):
            raw = m.group(0)
            lead = len(raw) - len(raw.lstrip(_EDGE))
            surface = raw.strip(_EDGE)
            if surface:
                start = m.start() + lead
                tokens.append((_fold(raw), start, start + len(surface)))
        found: list[TermMatch] = []
        i = 0
        while i < len(tokens):
            hit = None
            for seq in self._multi:
                window = tokens[i:i + len(seq)]
                if len(window) == len(seq) and all(
                        seq[k] in _variants(window[k][0]) for k in range(len(seq))):
                    hit = (" ".join(seq), len(seq))
                    break
            if hit is None:
                term = next((v for v in _variants(tokens[i][0]) if v in self._single), None)
                if term is not None:
                    hit = (term, 1)
            if hit is None:
                i += 1
                continue
            term, width = hit
            start, end = tokens[i][1], tokens[i + width - 1][2]
            found.append(TermMatch(term, start, end, text[start:end]))
            i += width
        return found


@lru_cache(maxsize=1)
def _bundled() -> Wordlist:
    return Wordlist(read_data_lines("wordlist.txt"))
