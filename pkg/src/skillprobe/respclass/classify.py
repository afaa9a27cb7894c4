"""Rule-based classification of skill responses.

A response is split into sentences; each sentence is tagged and labelled as a
yes/no question, a WH question, a directive (asks for input or offers phrases
to say) or an informative statement. The response takes the label of its most
reply-demanding sentence: WH > yes/no > directive > informative.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

from ..text import normalize_utterance
from .postag import AUX_TAGS, POSSESSIVES, WH_TAGS, TaggedToken, load_lexicon, pos_tag, read_tsv
from .tokenize import quoted_content, tokenize_sentences


class SentenceKind(str, enum.Enum):
    YES_NO = "yes_no"
    WH = "wh"
    DIRECTIVE = "directive"
    INFORMATIVE = "informative"

    @property
    def is_question(self) -> bool:
        return self in (SentenceKind.YES_NO, SentenceKind.WH)


PRIORITY = {SentenceKind.WH: 3, SentenceKind.YES_NO: 2, SentenceKind.DIRECTIVE: 1,
            SentenceKind.INFORMATIVE: 0}


class Theme(str, enum.Enum):
    ABBR = "ABBR"
    ENTY = "ENTY"
    DESC = "DESC"
    HUM = "HUM"
    LOC = "LOC"
    NUM = "NUM"

    @property
    def label(self) -> str:
        return _THEME_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "Theme":
        return _LABEL_THEMES[label]


_THEME_LABELS = {Theme.ABBR: "abbreviation", Theme.ENTY: "entity", Theme.DESC: "description",
                 Theme.HUM: "human", Theme.LOC: "location", Theme.NUM: "numeric"}
_LABEL_THEMES = {v: k for k, v in _THEME_LABELS.items()}

GENERAL = (Theme.DESC, "other")


@dataclass(frozen=True)
class ResponseClass:
    kind: SentenceKind
    theme: Theme | None = None
    subtheme: str | None = None
    suggested_phrases: tuple[str, ...] = ()
    asked_for: str | None = None

    @property
    def answer_key(self) -> str | None:
        """Answer-dictionary key such as ``human:age``."""
        if self.theme is None:
            return None
        return f"{self.theme.label}:{self.subtheme}"

    @property
    def coarse(self) -> str:
        """Three-way label: ``yes_no``, ``wh`` or ``non_question``."""
        return self.kind.value if self.kind.is_question else "non_question"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "theme": self.theme.value if self.theme else None,
            "subtheme": self.subtheme,
            "suggested_phrases": list(self.suggested_phrases),
            "asked_for": self.asked_for,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResponseClass":
        return cls(SentenceKind(d["kind"]), Theme(d["theme"]) if d.get("theme") else None,
                   d.get("subtheme"), tuple(d.get("suggested_phrases", ())), d.get("asked_for"))


@dataclass
class SentenceAnalysis:
    tokens: list[TaggedToken]
    kind: SentenceKind
    wh_index: int | None = None
    phrases: list[str] = field(default_factory=list)
    theme: tuple[Theme, str] | None = None
    asked_for: str | None = None

    @property
    def text(self) -> str:
        return " ".join(t.text for t in self.tokens)


CLAUSE_BREAKS = frozenset({",", ";", ":", "...", "-", "(", "—"})
DISCOURSE = frozenset({
    "so", "and", "but", "or", "ok", "okay", "oh", "well", "now", "alright", "great", "awesome",
    "first", "then", "also", "please", "hey", "hi", "hello", "yes", "no", "sure", "cool", "wow",
    "um", "uh", "hmm", "just", "simply", "anyway", "next", "finally", "perfect", "excellent",
    "good", "nice", "fantastic", "wonderful", "amazing", "sorry", "again", "right", "yay",
})
WH_CONTRACTIONS = frozenset({"what's", "who's", "where's", "when's", "how's", "why's"})
IMPERATIVE_VERBS = frozenset({
    "say", "tell", "press", "choose", "select", "pick", "ask", "try", "give", "provide", "enter",
    "repeat", "answer", "guess", "spell", "introduce", "state", "let", "shout", "speak", "reply",
    "respond", "name", "share", "listen", "think", "remember", "imagine", "pretend", "count",
    "sing", "clap", "jump", "dance", "find", "write", "draw", "go", "come", "look", "check", "keep",
    "stop", "continue", "open", "start", "play", "make", "take", "put", "turn", "use", "wait",
    "call", "close", "visit", "hold", "touch", "tap", "shake", "spin", "stand", "sit", "give",
    "send", "get", "pick", "describe", "explain", "complete", "fill", "hop", "wave",
})
# verbs whose object is a literal phrase to speak
PHRASE_VERBS = frozenset({"say", "press", "choose", "select", "pick", "saying", "pressing"})
# verbs whose object names something the user should supply
REQUEST_VERBS = frozenset({"tell", "give", "provide", "enter", "state", "spell", "name", "share",
                           "say", "introduce", "saying", "telling"})
REQUEST_OBJECT_SKIP = frozenset({"me", "us", "to", "alexa", "again", "please", "now", "just", "also"})
WANT_TO_KNOW = frozenset({"know", "hear", "learn"})
MODAL_LIKE = frozenset({"can", "could", "may", "might", "must", "should", "will", "would", "need",
                        "have", "'ll", "also", "just", "then", "now", "simply"})
SECOND_PERSON = frozenset({"you", "you'll", "you'd"})
PHRASE_STOPS = frozenset({"to", "for", "if", "when", "so", "because", "at", "in", "on", "after",
                          "before", "while", "with", "that", "which", "until", "anytime",
                          "any", "whenever", "instead"})
LITERAL_INTROS = (("the", "word"), ("the", "phrase"), ("the", "number"), ("the", "letter"),
                  ("the", "words"))
SUBJECT_WORDS = frozenset({"there", "that", "this", "it", "these", "those"})
FOCUS_SKIP = frozenset({"kind", "type", "sort", "of", "favorite", "favourite", "best", "first",
                        "last", "most", "least", "your", "the", "a", "an", "one", "s", "'s"})
ABBR_CUES = frozenset({"abbreviation", "abbreviated", "acronym", "initials"})
MONEY_CUES = frozenset({"cost", "costs", "pay", "money", "dollars", "price", "spend"})
HOW_ADJ = {
    "old": (Theme.HUM, "age"), "many": (Theme.NUM, "count"), "long": (Theme.NUM, "period"),
    "far": (Theme.NUM, "distance"), "tall": (Theme.NUM, "size"), "high": (Theme.NUM, "size"),
    "big": (Theme.NUM, "size"), "large": (Theme.NUM, "size"), "small": (Theme.NUM, "size"),
    "heavy": (Theme.NUM, "weight"), "fast": (Theme.NUM, "speed"), "hot": (Theme.NUM, "temp"),
    "cold": (Theme.NUM, "temp"), "warm": (Theme.NUM, "temp"), "often": (Theme.NUM, "period"),
}
ARITHMETIC = frozenset({"plus", "minus", "times", "divided", "multiplied", "add", "subtract"})
NOUN_TAGS = frozenset({"NN", "NNS", "NNP"})
VERB_TAGS = frozenset({"VB", "VBD", "VBG", "VBN", "VBZ", "VBP"})


def _is_subject(tokens: Sequence[TaggedToken], j: int) -> bool:
    if j >= len(tokens):
        return False
    tok = tokens[j]
    if tok.lower in ("not", "n't"):
        return False
    return tok.tag in ("PRP", "DT", "CD") or tok.tag in NOUN_TAGS or tok.lower in SUBJECT_WORDS


def _is_strong_subject(tokens: Sequence[TaggedToken], j: int) -> bool:
    if j >= len(tokens):
        return False
    tok = tokens[j]
    return (tok.tag == "PRP" and tok.lower not in POSSESSIVES) or tok.lower in SUBJECT_WORDS


def _clause_heads(tokens: Sequence[TaggedToken]) -> list[int]:
    heads = []
    n = len(tokens)
    for i in range(n):
        if i and tokens[i - 1].text not in CLAUSE_BREAKS:
            continue
        j = i
        while j < n and (tokens[j].lower in DISCOURSE or tokens[j].tag == "PUNCT"):
            j += 1
        if j < n and (not heads or heads[-1] != j):
            heads.append(j)
    return heads


def _kind_of(tokens: Sequence[TaggedToken], j: int) -> bool:
    """The 'of' in "what kind of", "which one of"."""
    return tokens[j].lower == "of" and j >= 1 and tokens[j - 1].lower in ("kind", "type", "sort", "one")


def _wh_head(tokens: Sequence[TaggedToken], h: int) -> int | None:
    """Index of the WH word if a WH question clause starts at ``h``."""
    w = h
    if tokens[h].tag in ("IN", "TO") and h + 1 < len(tokens) and tokens[h + 1].tag in WH_TAGS:
        w = h + 1  # pied-piping: "to whom", "in which"
    if tokens[w].tag not in WH_TAGS:
        return None
    if tokens[w].lower in WH_CONTRACTIONS:
        return w
    j = w + 1
    skipped = 0
    while j < len(tokens) and skipped < 4 and (tokens[j].tag in ("NN", "NNS", "JJ", "RB", "CD")
                                               or _kind_of(tokens, j)) \
            and tokens[j].lower not in ("not",):
        j += 1
        skipped += 1
    if j >= len(tokens) or tokens[j].tag == "PUNCT":
        return w
    if tokens[j].tag in AUX_TAGS or tokens[j].tag in VERB_TAGS:
        return w
    return None


def _wh_strict(tokens: Sequence[TaggedToken], w: int) -> bool:
    """WH + (focus words) + auxiliary + subject: a question even without '?'."""
    if tokens[w].lower in WH_CONTRACTIONS:
        return _is_subject(tokens, w + 1)
    j = w + 1
    while j < len(tokens) and (tokens[j].tag in ("NN", "NNS", "JJ", "RB", "CD") or _kind_of(tokens, j)):
        j += 1
    return j < len(tokens) and tokens[j].tag in AUX_TAGS and _is_subject(tokens, j + 1)


def _inversion(tokens: Sequence[TaggedToken], h: int) -> bool:
    return tokens[h].tag in AUX_TAGS and _is_subject(tokens, h + 1)


def _is_imperative_head(tokens: Sequence[TaggedToken], h: int) -> bool:
    tok = tokens[h]
    if tok.lower not in IMPERATIVE_VERBS:
        return False
    nxt = tokens[h + 1] if h + 1 < len(tokens) else None
    # "Play continues until ..." / "State capitals are ..." are declaratives
    return nxt is None or nxt.tag not in ("VBZ", "VBD", "AUX", "AUX-NEG", "MD")


def _has_request_frame(tokens: Sequence[TaggedToken]) -> bool:
    """'you can say ...', 'you must write ...', 'I'd like to know your ...'."""
    low = [t.lower for t in tokens]
    for i, word in enumerate(low):
        if word in SECOND_PERSON:
            j = i + 1
            steps = 0
            while j < len(low) and steps < 3 and (low[j] in MODAL_LIKE or low[j] == "to"):
                j += 1
                steps += 1
            if steps and j < len(low) and low[j] in IMPERATIVE_VERBS:
                return True
        if word in ("know", "hear", "learn") and i >= 2 and low[i - 1] == "to" \
                and low[i - 2] in ("like", "want", "need", "love"):
            if any(t in POSSESSIVES for t in low[i + 1:i + 4]):
                return True
    return False


def _noun_chain(tokens: Sequence[TaggedToken], j: int) -> list[str]:
    chain = []
    while j < len(tokens) and len(chain) < 3 and (tokens[j].tag in NOUN_TAGS or tokens[j].tag == "JJ"):
        chain.append(tokens[j].lower)
        j += 1
    return chain


def _possessive_target(tokens: Sequence[TaggedToken], start: int) -> str | None:
    """Noun phrase after the first 'your' at or after ``start``."""
    for j in range(start, len(tokens)):
        if tokens[j].lower == "your":
            chain = _noun_chain(tokens, j + 1)
            return " ".join(chain) if chain else None
        if tokens[j].tag == "PUNCT" and tokens[j].text in ".!?":
            break
    return None


class ResponseClassifier:
    """Holds the lexicon and theme dictionaries; stateless otherwise."""

    def __init__(self, lexicon_path: str | None = None, subtheme_path: str | None = None):
        self.lexicon = load_lexicon(lexicon_path)
        self.subthemes: dict[str, tuple[Theme, str]] = {}
        for noun, key in read_tsv(subtheme_path, "subthemes.tsv"):
            label, _, sub = key.partition(":")
            self.subthemes[noun] = (Theme.from_label(label), sub)

    # tagging -------------------------------------------------------------

    def tag_sentences(self, text: str) -> list[list[TaggedToken]]:
        return [pos_tag(s, self.lexicon) for s in tokenize_sentences(text)]

    # themes ----------------------------------------------------------------

    def _lookup_focus(self, word: str) -> tuple[Theme, str] | None:
        for cand in (word, word[:-1] if word.endswith("s") else None,
                     word[:-2] if word.endswith("es") else None):
            if cand and cand in self.subthemes:
                return self.subthemes[cand]
        return None

    def theme_of(self, tokens: Sequence[TaggedToken], w: int) -> tuple[Theme, str]:
        low = [t.lower for t in tokens if t.tag != "PUNCT"]
        joined = " ".join(low)
        if ABBR_CUES & set(low):
            return Theme.ABBR, "abbreviation"
        if " stand for" in joined or " short for" in joined:
            return Theme.ABBR, "expansion"
        wh = tokens[w].lower.split("'")[0]
        rest = [t for t in tokens[w + 1:] if t.tag != "PUNCT"]
        nxt = rest[0].lower if rest else ""
        if wh == "how":
            if nxt == "much":
                if MONEY_CUES & set(low):
                    return Theme.NUM, "money"
                if "weigh" in low:
                    return Theme.NUM, "weight"
                return Theme.NUM, "count"
            return HOW_ADJ.get(nxt, (Theme.DESC, "manner"))
        if wh == "when":
            return Theme.NUM, "date"
        if wh == "where":
            return Theme.LOC, "other"
        if wh == "why":
            return Theme.DESC, "reason"
        if wh in ("who", "whom", "whose", "whoever"):
            return Theme.HUM, "individual"
        if wh not in ("what", "which", "whatever", "whichever"):
            return GENERAL
        if "your name" in joined or "call you" in joined:
            return Theme.HUM, "name"
        for tok in rest:
            if tok.tag in AUX_TAGS or tok.tag in ("DT", "PRP", "JJ", "RB") or tok.lower in FOCUS_SKIP:
                continue
            if tok.tag in NOUN_TAGS or tok.tag == "VB":
                hit = self._lookup_focus(tok.lower)
                if hit:
                    return hit
            break
        if low and low[-1] in ("do", "mean", "means"):
            return Theme.DESC, "definition"
        if ARITHMETIC & set(low):
            return Theme.NUM, "count"
        if len(rest) >= 2 and rest[0].lower in ("is", "are", "was") and rest[1].lower in ("a", "an"):
            return Theme.DESC, "definition"
        return GENERAL

    def _request_target(self, tokens: Sequence[TaggedToken]) -> tuple[tuple[Theme, str] | None, str | None]:
        """Theme and hint for a directive that paraphrases a WH question."""
        low = [t.lower for t in tokens]
        for i, word in enumerate(low):
            is_let_know = word in WANT_TO_KNOW and i >= 1 and low[i - 1] in ("me", "us", "to")
            if word not in REQUEST_VERBS and not is_let_know:
                continue
            j = i + 1
            while j < len(tokens) and low[j] in REQUEST_OBJECT_SKIP:
                j += 1
            if j >= len(tokens) or quoted_content(tokens[j].text) is not None:
                continue
            if tuple(low[j:j + 2]) in LITERAL_INTROS:
                continue
            if low[j] not in POSSESSIVES and tokens[j].tag != "DT" and low[j] not in ("one",):
                continue
            chain = _noun_chain(tokens, j + 1)
            if not chain:
                continue
            asked = " ".join(chain) if low[j] == "your" else None
            for noun in chain:
                hit = self._lookup_focus(noun)
                if hit:
                    return hit, asked
            return GENERAL, asked
        return None, None

    # directive phrases -------------------------------------------------------

    def directive_phrases(self, tokens: Sequence[TaggedToken]) -> list[str]:
        found: list[tuple[int, str]] = []
        n = len(tokens)
        for i, tok in enumerate(tokens):
            inner = quoted_content(tok.text)
            if inner is not None:
                phrase = normalize_utterance(inner)
                if phrase:
                    found.append((i, phrase))
        for i, tok in enumerate(tokens):
            if tok.lower not in PHRASE_VERBS:
                continue
            j = i + 1
            if j < n and tokens[j].text == ":":
                found.extend(self._colon_list(tokens, j + 1))
                continue
            if j >= n or quoted_content(tokens[j].text) is not None:
                continue
            if tuple(t.lower for t in tokens[j:j + 2]) in LITERAL_INTROS:
                j += 2
            elif tokens[j].lower in POSSESSIVES or tokens[j].tag in ("DT", "PRP", "IN", "TO"):
                if tokens[j].lower in ("one", "any") and ":" in [t.text for t in tokens[j:]]:
                    found.extend(self._colon_list(tokens, [t.text for t in tokens].index(":", j) + 1))
                continue
            found.extend(self._unquoted_objects(tokens, j))
        found.sort(key=lambda f: f[0])
        out: list[str] = []
        for _, phrase in found:
            if phrase not in out:
                out.append(phrase)
        return out

    def _colon_list(self, tokens: Sequence[TaggedToken], j: int) -> list[tuple[int, str]]:
        items, cur, pos = [], [], j
        for k in range(j, len(tokens)):
            tok = tokens[k]
            if tok.lower in ("or", "and") or tok.text == ",":
                if cur:
                    items.append((pos, " ".join(cur)))
                cur = []
                continue
            if tok.tag == "PUNCT":
                break
            if not cur:
                pos = k
            inner = quoted_content(tok.text)
            cur.append(normalize_utterance(inner) if inner is not None else tok.lower)
        if cur:
            items.append((pos, " ".join(cur)))
        return [(p, normalize_utterance(s)) for p, s in items if normalize_utterance(s)]

    def _unquoted_objects(self, tokens: Sequence[TaggedToken], j: int) -> list[tuple[int, str]]:
        items: list[tuple[int, str]] = []
        cur: list[str] = []
        pos = j
        skipping = False
        while j < len(tokens):
            tok = tokens[j]
            low = tok.lower
            if tok.tag == "PUNCT" and tok.text != ",":
                break
            if low == "or" or tok.text == ",":
                if cur:
                    items.append((pos, " ".join(cur)))
                cur = []
                skipping = False
                j += 1
                if j < len(tokens) and (tokens[j].lower in PHRASE_VERBS or tokens[j].lower in POSSESSIVES
                                        or tokens[j].tag in ("PRP", "DT")):
                    break
                continue
            if skipping:
                j += 1
                continue
            if low in PHRASE_STOPS or quoted_content(tok.text) is not None or len(cur) >= 4:
                if cur:
                    items.append((pos, " ".join(cur)))
                cur = []
                skipping = True
                j += 1
                continue
            if not cur:
                pos = j
            cur.append(low)
            j += 1
        if cur:
            items.append((pos, " ".join(cur)))
        return [(p, normalize_utterance(s)) for p, s in items if normalize_utterance(s)]

    # sentences ---------------------------------------------------------------

    def analyze_sentence(self, tokens: list[TaggedToken]) -> SentenceAnalysis:
        trailing = []
        for tok in reversed(tokens):
            if tok.tag != "PUNCT":
                break
            trailing.append(tok.text)
        qmark = any("?" in t for t in trailing)
        declarative_mark = not qmark and any(t in (".", "...", "!") or "!" in t for t in trailing)
        exclaim = not qmark and any("!" in t for t in trailing)
        has_comma = any(t.text == "," for t in tokens)

        heads = _clause_heads(tokens)
        found: tuple[SentenceKind, int | None] | None = None
        strict = False
        for h in heads:
            w = _wh_head(tokens, h)
            if w is not None:
                found = (SentenceKind.WH, w)
                strict = _wh_strict(tokens, w)
                break
            if _inversion(tokens, h):
                found = (SentenceKind.YES_NO, None)
                strict = _is_strong_subject(tokens, h + 1) and not has_comma
                break

        if qmark:
            interrogative = True
        elif exclaim:
            interrogative = False
        elif declarative_mark:
            interrogative = found is not None and strict
        else:
            interrogative = found is not None

        if interrogative:
            if found is not None and found[0] is SentenceKind.WH:
                w = found[1]
                theme = self.theme_of(tokens, w)
                asked = _possessive_target(tokens, w)
                if theme == (Theme.HUM, "age") and asked is None:
                    asked = "age"
                return SentenceAnalysis(tokens, SentenceKind.WH, w, theme=theme, asked_for=asked)
            return SentenceAnalysis(tokens, SentenceKind.YES_NO, asked_for=_possessive_target(tokens, 0))

        directive = any(_is_imperative_head(tokens, h) for h in heads) or _has_request_frame(tokens)
        if directive:
            phrases = self.directive_phrases(tokens)
            theme, asked = self._request_target(tokens)
            if asked is None:
                asked = _possessive_target(tokens, 0) if theme else None
            return SentenceAnalysis(tokens, SentenceKind.DIRECTIVE, phrases=phrases,
                                    theme=theme, asked_for=asked)
        return SentenceAnalysis(tokens, SentenceKind.INFORMATIVE)

    def analyze(self, text: str) -> list[SentenceAnalysis]:
        return [self.analyze_sentence(s) for s in self.tag_sentences(text)]

    def classify(self, text: str) -> ResponseClass:
        sentences = self.analyze(text)
        if not sentences:
            return ResponseClass(SentenceKind.INFORMATIVE)
        top = max(PRIORITY[s.kind] for s in sentences)
        # the last sentence of the winning kind usually carries the turn
        lead = [s for s in sentences if PRIORITY[s.kind] == top][-1]
        if lead.kind is SentenceKind.WH:
            theme, sub = lead.theme
            return ResponseClass(SentenceKind.WH, theme, sub, (), lead.asked_for)
        if lead.kind is SentenceKind.YES_NO:
            return ResponseClass(SentenceKind.YES_NO, asked_for=lead.asked_for)
        if lead.kind is SentenceKind.DIRECTIVE:
            directives = [s for s in sentences if s.kind is SentenceKind.DIRECTIVE]
            phrases: list[str] = []
            for s in directives:
                phrases += [p for p in s.phrases if p not in phrases]
            paraphrase = next((s for s in reversed(directives) if s.theme is not None), None)
            theme, sub = paraphrase.theme if paraphrase else (None, None)
            asked = paraphrase.asked_for if paraphrase else None
            return ResponseClass(SentenceKind.DIRECTIVE, theme, sub, tuple(phrases), asked)
        return ResponseClass(SentenceKind.INFORMATIVE)

    def wh_theme(self, sentence: str) -> tuple[Theme, str]:
        for tokens in self.tag_sentences(sentence):
            for h in _clause_heads(tokens):
                w = _wh_head(tokens, h)
                if w is not None:
                    return self.theme_of(tokens, w)
            theme, _ = self._request_target(tokens)
            if theme is not None:
                return theme
        return GENERAL


@lru_cache(maxsize=1)
def default_classifier() -> ResponseClassifier:
    return ResponseClassifier()


def classify_response(text: str) -> ResponseClass:
    return default_classifier().classify(text)


def classify_wh_theme(sentence: str) -> tuple[Theme, str]:
    """Theme and subtheme of a WH question (or a directive paraphrasing one).

    Unmapped questions land in the general ``(DESC, "other")`` bucket.
    """
    return default_classifier().wh_theme(sentence)


def extract_directive_phrases(sentence: str) -> list[str]:
    clf = default_classifier()
    out: list[str] = []
    for tokens in clf.tag_sentences(sentence):
        analysis = clf.analyze_sentence(tokens)
        if analysis.kind is SentenceKind.DIRECTIVE:
            out += [p for p in analysis.phrases if p not in out]
    return out
