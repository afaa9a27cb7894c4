"""Skill catalog parsing and candidate-utterance extraction."""

from __future__ import annotations

import enum
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .text import contains_token_seq, normalize_utterance, strip_wake_word

logger = logging.getLogger(__name__)

MAX_SAMPLE_UTTERANCES = 3
OPENING_WORDS = frozenset({"open", "launch", "start", "ask", "play", "begin", "talk"})
QUOTE_MIN_TOKENS = 2
QUOTE_MAX_TOKENS = 12
KIDS_CATEGORY = "kids"


class CatalogError(Exception):
    """Fatal catalog problem (unreadable file, malformed document, duplicate ids)."""


class UtteranceError(ValueError):
    """Raised when an utterance normalizes to nothing."""


class UtteranceKind(str, enum.Enum):
    OPENING = "opening"
    IN_SKILL = "in_skill"


class UtteranceSource(str, enum.Enum):
    SAMPLE_LIST = "sample_list"
    ADDITIONAL_INSTRUCTIONS = "additional_instructions"
    DESCRIPTION_QUOTE = "description_quote"
    DESCRIPTION_INVOCATION_SENTENCE = "description_invocation_sentence"
    GENERATED = "generated"


@dataclass(frozen=True)
class SkillRecord:
    skill_id: str
    name: str
    invocation_name: str
    sample_utterances: tuple[str, ...] = ()
    additional_instructions: tuple[str, ...] = ()
    description: str = ""
    category: str = "misc"
    permissions: tuple[str, ...] = ()
    icon_digest: str = ""
    mature_content: bool = False

    @property
    def is_kids(self) -> bool:
        return self.category == KIDS_CATEGORY

    def to_dict(self) -> dict[str, Any]:
        return {
            "skill_id": self.skill_id,
            "name": self.name,
            "invocation_name": self.invocation_name,
            "sample_utterances": list(self.sample_utterances),
            "additional_instructions": list(self.additional_instructions),
            "description": self.description,
            "category": self.category,
            "permissions": list(self.permissions),
            "icon_digest": self.icon_digest,
            "mature_content": self.mature_content,
        }


@dataclass(frozen=True)
class Utterance:
    text: str
    kind: UtteranceKind
    source: UtteranceSource = UtteranceSource.GENERATED


@dataclass(frozen=True)
class CatalogIssue:
    index: int
    message: str
    skill_id: str | None = None


@dataclass
class ParsedCatalog:
    records: list[SkillRecord] = field(default_factory=list)
    issues: list[CatalogIssue] = field(default_factory=list)


def _str_list(entry: dict, key: str) -> tuple[str, ...]:
    value = entry.get(key, [])
    if value is None:
        return ()
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ValueError(f"{key} must be a list of strings")
    return tuple(value)


def record_from_dict(entry: Any) -> SkillRecord:
    """Validate one catalog entry. Unknown keys are ignored."""
    if not isinstance(entry, dict):
        raise ValueError("entry is not an object")
    skill_id = entry.get("skill_id")
    if not isinstance(skill_id, str) or not skill_id.strip():
        raise ValueError("skill_id missing or empty")
    invocation = entry.get("invocation_name")
    if not isinstance(invocation, str) or not invocation.strip():
        raise ValueError("invocation_name missing or empty")
    category = entry.get("category")
    if not isinstance(category, str) or not category.strip():
        raise ValueError("category missing or empty")
    samples = _str_list(entry, "sample_utterances")
    if len(samples) > MAX_SAMPLE_UTTERANCES:
        raise ValueError(f"{len(samples)} sample utterances (max {MAX_SAMPLE_UTTERANCES})")
    mature = entry.get("mature_content", False)
    if not isinstance(mature, bool):
        raise ValueError("mature_content must be a boolean")
    for key in ("name", "description", "icon_digest"):
        if not isinstance(entry.get(key, ""), str):
            raise ValueError(f"{key} must be a string")
    return SkillRecord(
        skill_id=skill_id.strip(),
        name=entry.get("name", "") or skill_id,
        invocation_name=" ".join(invocation.lower().split()),
        sample_utterances=samples,
        additional_instructions=_str_list(entry, "additional_instructions"),
        description=entry.get("description", ""),
        category=category.strip().lower(),
        permissions=_str_list(entry, "permissions"),
        icon_digest=entry.get("icon_digest", ""),
        mature_content=mature,
    )


def parse_catalog_document(doc: Any) -> ParsedCatalog:
    if isinstance(doc, dict) and "skills" in doc:
        doc = doc["skills"]
    if not isinstance(doc, list):
        raise CatalogError("catalog document must be an array of entries")
    out = ParsedCatalog()
    for index, entry in enumerate(doc):
        try:
            out.records.append(record_from_dict(entry))
        except ValueError as exc:
            sid = entry.get("skill_id") if isinstance(entry, dict) else None
            logger.warning("catalog entry %d skipped: %s", index, exc)
            out.issues.append(CatalogIssue(index, str(exc), sid if isinstance(sid, str) else None))
    seen: dict[str, int] = {}
    for rec in out.records:
        seen[rec.skill_id] = seen.get(rec.skill_id, 0) + 1
    dupes = sorted(sid for sid, n in seen.items() if n > 1)
    if dupes:
        raise CatalogError(f"duplicate skill_id(s): {', '.join(dupes)}")
    return out


def parse_catalog(path: str | Path, issues: list[CatalogIssue] | None = None) -> list[SkillRecord]:
    """Read a catalog file and return one record per valid entry.

    Invalid entries are skipped; pass ``issues`` to collect them.
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CatalogError(f"cannot read catalog {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"malformed catalog {path}: {exc}") from exc
    parsed = parse_catalog_document(doc)
    if issues is not None:
        issues.extend(parsed.issues)
    return parsed.records


def write_catalog(records: Iterable[SkillRecord], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps([r.to_dict() for r in records], indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def classify_utterance(raw: str, record: SkillRecord,
                       source: UtteranceSource = UtteranceSource.GENERATED) -> Utterance:
    text = strip_wake_word(normalize_utterance(raw))
    if not text:
        raise UtteranceError(f"utterance {raw!r} is empty after normalization")
    tokens = text.split()
    is_opening = tokens[0] in OPENING_WORDS or contains_token_seq(
        tokens, normalize_utterance(record.invocation_name).split())
    kind = UtteranceKind.OPENING if is_opening else UtteranceKind.IN_SKILL
    return Utterance(text, kind, source)


# double quotes, curly quotes, LaTeX-ish ''...'' and plain single quotes
_QUOTE_RE = re.compile(
    r"\"([^\"]+)\""
    r"|“([^”]+)”"
    r"|‘([^’]+)’"
    r"|''(.+?)''"
    r"|(?<![\w'])'([^'\n]+?)'(?![\w'])"
)
_SENTENCE_RE = re.compile(r"[^.!?\n]+")
_LEADING_JUNK = " \t-*•\"“‘'("


def _description_candidates(description: str) -> list[tuple[int, str, UtteranceSource]]:
    found = []
    for m in _SENTENCE_RE.finditer(description):
        sentence = m.group(0)
        stripped = sentence.lstrip(_LEADING_JUNK)
        if stripped.lower().startswith("alexa,"):
            offset = m.start() + (len(sentence) - len(stripped))
            found.append((offset, stripped[len("alexa,"):],
                          UtteranceSource.DESCRIPTION_INVOCATION_SENTENCE))
    for m in _QUOTE_RE.finditer(description):
        phrase = next(g for g in m.groups() if g is not None)
        n_tokens = len(strip_wake_word(normalize_utterance(phrase)).split())
        if QUOTE_MIN_TOKENS <= n_tokens <= QUOTE_MAX_TOKENS:
            found.append((m.start(), phrase, UtteranceSource.DESCRIPTION_QUOTE))
    found.sort(key=lambda c: c[0])
    return found


def extract_utterances(record: SkillRecord, add_generated: bool = False) -> list[Utterance]:
    """Collect candidate utterances for a skill, deduplicated after normalization.

    Sources are consulted in order: sample list, additional instructions, then
    the description in textual order (``Alexa, ...`` sentences and quoted
    phrases). The first occurrence of a normalized text keeps its source tag.
    With ``add_generated`` an ``open <invocation name>`` utterance is appended.
    """
    candidates: list[tuple[str, UtteranceSource]] = []
    candidates += [(s, UtteranceSource.SAMPLE_LIST) for s in record.sample_utterances]
    candidates += [(s, UtteranceSource.ADDITIONAL_INSTRUCTIONS)
                   for s in record.additional_instructions]
    candidates += [(text, src) for _, text, src in _description_candidates(record.description)]
    if add_generated:
        candidates.append((f"open {record.invocation_name}", UtteranceSource.GENERATED))

    out: list[Utterance] = []
    seen: set[str] = set()
    for raw, source in candidates:
        text = strip_wake_word(normalize_utterance(raw))
        if not text or text in seen:
            continue
        seen.add(text)
        out.append(classify_utterance(text, record, source))
    return out


def opening_utterances(utterances: Iterable[Utterance]) -> list[Utterance]:
    return [u for u in utterances if u.kind is UtteranceKind.OPENING]
