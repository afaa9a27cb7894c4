"""Skill definitions: the dialogue state machines the simulator executes."""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from ..catalog import KIDS_CATEGORY, SkillRecord
from ..text import normalize_utterance

logger = logging.getLogger(__name__)


class DefinitionError(ValueError):
    """One or more skill definitions failed validation."""


class ResponseKind(str, enum.Enum):
    SPEECH = "speech"
    AUDIO = "audio"
    EMPTY = "empty"
    ERROR = "error"


class MatcherKind(str, enum.Enum):
    EXACT = "exact"
    ANY_OF = "any_of"
    FALLBACK = "fallback"


@dataclass(frozen=True)
class Transition:
    kind: MatcherKind
    phrases: frozenset[str]
    target: str

    def matches(self, utterance: str) -> bool:
        if self.kind is MatcherKind.FALLBACK:
            return True
        return utterance in self.phrases

    def to_dict(self) -> dict[str, Any]:
        if self.kind is MatcherKind.EXACT:
            return {"exact": next(iter(self.phrases)), "next": self.target}
        if self.kind is MatcherKind.ANY_OF:
            return {"any_of": sorted(self.phrases), "next": self.target}
        return {"fallback": True, "next": self.target}


@dataclass(frozen=True)
class StateSpec:
    response_text: str
    response_kind: ResponseKind = ResponseKind.SPEECH
    transitions: tuple[Transition, ...] = ()

    @property
    def keeps_session(self) -> bool:
        # A speech state with nowhere to go ends the skill session.
        return self.response_kind is ResponseKind.SPEECH and bool(self.transitions)

    def next_state(self, utterance: str) -> str | None:
        """Exact matchers first, then AnyOf, then the fallback; definition order within each."""
        for kind in (MatcherKind.EXACT, MatcherKind.ANY_OF, MatcherKind.FALLBACK):
            for tr in self.transitions:
                if tr.kind is kind and tr.matches(utterance):
                    return tr.target
        return None


@dataclass(frozen=True)
class SkillDefinition:
    skill_id: str
    states: Mapping[str, StateSpec]
    initial_transitions: Mapping[str, str]
    category: str = "misc"
    mature_content: bool = False

    @property
    def is_kids(self) -> bool:
        return self.category == KIDS_CATEGORY

    def to_dict(self) -> dict[str, Any]:
        return {
            "skill_id": self.skill_id,
            "category": self.category,
            "mature_content": self.mature_content,
            "initial_transitions": dict(self.initial_transitions),
            "states": {
                sid: {
                    "response_text": st.response_text,
                    "response_kind": st.response_kind.value,
                    "transitions": [t.to_dict() for t in st.transitions],
                }
                for sid, st in self.states.items()
            },
        }


@dataclass(frozen=True)
class DefinitionIssue:
    skill_id: str | None
    message: str


def _parse_transition(raw: Any, where: str) -> Transition:
    if not isinstance(raw, dict) or "next" not in raw:
        raise DefinitionError(f"{where}: transition needs a 'next' state")
    target = raw["next"]
    if "exact" in raw:
        phrase = normalize_utterance(str(raw["exact"]))
        if not phrase:
            raise DefinitionError(f"{where}: empty exact phrase")
        return Transition(MatcherKind.EXACT, frozenset([phrase]), target)
    if "any_of" in raw:
        phrases = frozenset(normalize_utterance(str(p)) for p in raw["any_of"]) - {""}
        if not phrases:
            raise DefinitionError(f"{where}: empty any_of phrase set")
        return Transition(MatcherKind.ANY_OF, phrases, target)
    if raw.get("fallback"):
        return Transition(MatcherKind.FALLBACK, frozenset(), target)
    raise DefinitionError(f"{where}: unknown matcher {sorted(raw)}")


def definition_from_dict(raw: Any) -> SkillDefinition:
    if not isinstance(raw, dict):
        raise DefinitionError("definition is not an object")
    skill_id = raw.get("skill_id")
    if not isinstance(skill_id, str) or not skill_id:
        raise DefinitionError("definition without skill_id")
    raw_states = raw.get("states") or {}
    if not isinstance(raw_states, dict):
        raise DefinitionError(f"{skill_id}: states must be an object")
    states: dict[str, StateSpec] = {}
    for state_id, spec in raw_states.items():
        where = f"{skill_id}/{state_id}"
        try:
            kind = ResponseKind(spec.get("response_kind", "speech"))
        except ValueError:
            raise DefinitionError(f"{where}: bad response_kind {spec.get('response_kind')!r}")
        text = spec.get("response_text", "")
        if kind in (ResponseKind.AUDIO, ResponseKind.EMPTY) and text:
            raise DefinitionError(f"{where}: {kind.value} responses carry no text")
        if kind in (ResponseKind.SPEECH, ResponseKind.ERROR) and not text:
            raise DefinitionError(f"{where}: {kind.value} response needs text")
        transitions = tuple(_parse_transition(t, where) for t in spec.get("transitions", []))
        if sum(t.kind is MatcherKind.FALLBACK for t in transitions) > 1:
            raise DefinitionError(f"{where}: more than one fallback matcher")
        states[state_id] = StateSpec(text, kind, transitions)

    initial = {}
    for utt, target in (raw.get("initial_transitions") or {}).items():
        key = normalize_utterance(utt)
        if key:
            initial[key] = target
    if not initial:
        raise DefinitionError(f"{skill_id}: missing initial transition")

    for utt, target in initial.items():
        if target not in states:
            raise DefinitionError(f"{skill_id}: initial transition {utt!r} targets undefined state {target!r}")
    for state_id, st in states.items():
        for tr in st.transitions:
            if tr.target not in states:
                raise DefinitionError(f"{skill_id}/{state_id}: transition to undefined state {tr.target!r}")

    reachable: set[str] = set()
    stack = list(initial.values())
    while stack:
        sid = stack.pop()
        if sid in reachable:
            continue
        reachable.add(sid)
        stack.extend(t.target for t in states[sid].transitions)
    unreachable = sorted(set(states) - reachable)
    if unreachable:
        raise DefinitionError(f"{skill_id}: unreachable state(s) {', '.join(unreachable)}")

    return SkillDefinition(
        skill_id=skill_id,
        states=states,
        initial_transitions=initial,
        category=str(raw.get("category", "misc")).lower(),
        mature_content=bool(raw.get("mature_content", False)),
    )


def parse_definitions(doc: Any, catalog: Iterable[SkillRecord] | None = None,
                      issues: list[DefinitionIssue] | None = None) -> dict[str, SkillDefinition]:
    """Validate a definitions document.

    Without ``issues`` the first batch of problems raises :class:`DefinitionError`;
    with it, invalid definitions are recorded there and skipped.
    """
    if isinstance(doc, dict) and "definitions" in doc:
        doc = doc["definitions"]
    if not isinstance(doc, list):
        raise DefinitionError("definitions document must be an array")
    records = {r.skill_id: r for r in catalog} if catalog is not None else None
    found: list[DefinitionIssue] = []
    out: dict[str, SkillDefinition] = {}
    for raw in doc:
        sid = raw.get("skill_id") if isinstance(raw, dict) else None
        try:
            d = definition_from_dict(raw)
            if d.skill_id in out:
                raise DefinitionError(f"{d.skill_id}: defined twice")
            if records is not None:
                rec = records.get(d.skill_id)
                if rec is None:
                    raise DefinitionError(f"{d.skill_id}: not in catalog")
                d = SkillDefinition(d.skill_id, d.states, d.initial_transitions,
                                    rec.category, rec.mature_content)
            out[d.skill_id] = d
        except DefinitionError as exc:
            found.append(DefinitionIssue(sid if isinstance(sid, str) else None, str(exc)))
    if found:
        if issues is None:
            raise DefinitionError("; ".join(i.message for i in found))
        for issue in found:
            logger.warning("skill definition skipped: %s", issue.message)
        issues.extend(found)
    return out


def load_skill_definitions(path: str | Path, catalog: Iterable[SkillRecord] | None = None,
                           issues: list[DefinitionIssue] | None = None) -> dict[str, SkillDefinition]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DefinitionError(f"cannot load definitions {path}: {exc}") from exc
    return parse_definitions(doc, catalog, issues)


def write_definitions(defs: Iterable[SkillDefinition], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps([d.to_dict() for d in defs], indent=1, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


@dataclass(frozen=True)
class HostResponse:
    text: str
    kind: ResponseKind
    invoked_skill_id: str | None = None
    enabled_skill_ids: tuple[str, ...] = ()
    session_open: bool = False

    def to_frame(self) -> dict[str, Any]:
        return {
            "ok": True,
            "kind": self.kind.value,
            "text": self.text,
            "invoked_skill_id": self.invoked_skill_id,
            "enabled_skill_ids": list(self.enabled_skill_ids),
            "session_open": self.session_open,
        }

    @classmethod
    def from_frame(cls, frame: Mapping[str, Any]) -> "HostResponse":
        return cls(
            text=frame.get("text", ""),
            kind=ResponseKind(frame["kind"]),
            invoked_skill_id=frame.get("invoked_skill_id"),
            enabled_skill_ids=tuple(frame.get("enabled_skill_ids", ())),
            session_open=bool(frame.get("session_open", False)),
        )


class ResolverMode(str, enum.Enum):
    REGISTRATION_ORDER = "registration"
    LEXICOGRAPHIC_ID = "lexicographic"
    PREFER_NON_KID = "prefer-non-kid"
    PREFER_KID = "prefer-kid"
    SEEDED = "seeded"


@dataclass(frozen=True)
class ResolverPolicy:
    mode: ResolverMode = ResolverMode.LEXICOGRAPHIC_ID
    seed: int = 0
    overrides: Mapping[str, str] = field(default_factory=dict)

    @classmethod
    def parse(cls, name: str, seed: int = 0, overrides: Mapping[str, str] | None = None) -> "ResolverPolicy":
        return cls(ResolverMode(name), seed,
                   {normalize_utterance(k): v for k, v in (overrides or {}).items()})
