"""In-process skill host: sessions, invocation resolution and turn handling."""

from __future__ import annotations

import itertools
import random
import threading
from dataclasses import dataclass, field
from typing import Mapping

from ..text import normalize_utterance
from .model import HostResponse, ResolverMode, ResolverPolicy, ResponseKind, SkillDefinition

NOT_UNDERSTOOD = "Sorry, I don't understand."
NO_SKILL = "Sorry, I'm not sure how to help with that."


class ProtocolError(Exception):
    """Request-level failure; ``code`` is the wire error_code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class _Session:
    lock: threading.Lock = field(default_factory=threading.Lock)
    active_skill: str | None = None
    state: str | None = None
    enabled: set[str] = field(default_factory=set)

    def enabled_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.enabled))


def resolve_candidates(candidates: list[SkillDefinition], text: str,
                       policy: ResolverPolicy) -> SkillDefinition | None:
    """Pick one skill among those registered for ``text``.

    ``candidates`` must be in registration order.
    """
    if not candidates:
        return None
    mode = policy.mode
    if mode is ResolverMode.REGISTRATION_ORDER:
        return candidates[0]
    by_id = sorted(candidates, key=lambda d: d.skill_id)
    if mode is ResolverMode.LEXICOGRAPHIC_ID:
        return by_id[0]
    if mode is ResolverMode.PREFER_NON_KID:
        preferred = [d for d in by_id if not d.is_kids]
        return (preferred or by_id)[0]
    if mode is ResolverMode.PREFER_KID:
        preferred = [d for d in by_id if d.is_kids]
        return (preferred or by_id)[0]
    # str seeds hash through sha512, so this is stable across processes
    rng = random.Random(f"{policy.seed}:{text}")
    return by_id[rng.randrange(len(by_id))]


class SkillHost:
    """Deterministic stand-in for the voice-assistant cloud.

    Definitions are immutable after construction. Each session is guarded by
    its own lock so concurrent callers on distinct sessions never contend.
    """

    def __init__(self, definitions: Mapping[str, SkillDefinition],
                 policy: ResolverPolicy | None = None):
        self.definitions = dict(definitions)
        self.policy = policy or ResolverPolicy()
        missing = sorted(set(self.policy.overrides.values()) - set(self.definitions))
        if missing:
            raise ValueError(f"resolver override targets unknown skill(s): {', '.join(missing)}")
        self._by_utterance: dict[str, list[SkillDefinition]] = {}
        for d in self.definitions.values():
            for utt in d.initial_transitions:
                self._by_utterance.setdefault(utt, []).append(d)
        self._sessions: dict[str, _Session] = {}
        self._sessions_lock = threading.Lock()
        self._ids = itertools.count(1)

    def open_session(self) -> str:
        with self._sessions_lock:
            sid = f"s{next(self._ids):06d}"
            self._sessions[sid] = _Session()
        return sid

    def close_session(self, session_id: str) -> None:
        with self._sessions_lock:
            if self._sessions.pop(session_id, None) is None:
                raise ProtocolError("unknown_session", f"unknown session {session_id!r}")

    def _session(self, session_id: str) -> _Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise ProtocolError("unknown_session", f"unknown session {session_id!r}") from None

    @property
    def session_count(self) -> int:
        return len(self._sessions)

    def candidates(self, text: str) -> list[SkillDefinition]:
        return list(self._by_utterance.get(normalize_utterance(text), ()))

    def resolve_invocation(self, text: str, policy: ResolverPolicy | None = None) -> str | None:
        policy = policy or self.policy
        key = normalize_utterance(text)
        if key in policy.overrides:
            return policy.overrides[key]
        chosen = resolve_candidates(self._by_utterance.get(key, []), key, policy)
        return chosen.skill_id if chosen else None

    def enabled_skills(self, session_id: str) -> tuple[str, ...]:
        sess = self._session(session_id)
        with sess.lock:
            return sess.enabled_ids()

    def set_skill_enabled(self, session_id: str, skill_id: str, enabled: bool) -> tuple[str, ...]:
        sess = self._session(session_id)
        if skill_id not in self.definitions:
            raise ProtocolError("unknown_skill", f"unknown skill {skill_id!r}")
        with sess.lock:
            if enabled:
                sess.enabled.add(skill_id)
            else:
                sess.enabled.discard(skill_id)
                if sess.active_skill == skill_id:
                    sess.active_skill = sess.state = None
            return sess.enabled_ids()

    def disable_all(self, session_id: str) -> tuple[str, ...]:
        sess = self._session(session_id)
        with sess.lock:
            sess.enabled.clear()
            sess.active_skill = sess.state = None
            return ()

    def handle_request(self, session_id: str, text: str) -> HostResponse:
        sess = self._session(session_id)
        utterance = normalize_utterance(text)
        if not utterance:
            raise ProtocolError("bad_request", "empty utterance")
        with sess.lock:
            if sess.active_skill is None:
                return self._invoke(sess, utterance)
            return self._advance(sess, utterance)

    def _respond(self, sess: _Session, skill_id: str, state_id: str,
                 invoked: str | None) -> HostResponse:
        state = self.definitions[skill_id].states[state_id]
        if state.keeps_session:
            sess.active_skill, sess.state = skill_id, state_id
        else:
            sess.active_skill = sess.state = None
        return HostResponse(state.response_text, state.response_kind, invoked,
                            sess.enabled_ids(), state.keeps_session)

    def _invoke(self, sess: _Session, utterance: str) -> HostResponse:
        skill_id = self.resolve_invocation(utterance)
        if skill_id is None:
            return HostResponse(NO_SKILL, ResponseKind.ERROR, None, sess.enabled_ids(), False)
        sess.enabled.add(skill_id)
        definition = self.definitions[skill_id]
        # overrides may route an utterance the skill never registered
        state_id = definition.initial_transitions.get(utterance)
        if state_id is None:
            state_id = next(iter(definition.initial_transitions.values()))
        return self._respond(sess, skill_id, state_id, skill_id)

    def _advance(self, sess: _Session, utterance: str) -> HostResponse:
        skill_id, state_id = sess.active_skill, sess.state
        state = self.definitions[skill_id].states[state_id]
        target = state.next_state(utterance)
        if target is None:
            sess.active_skill = sess.state = None
            return HostResponse(NOT_UNDERSTOOD, ResponseKind.ERROR, None, sess.enabled_ids(), False)
        return self._respond(sess, skill_id, target, None)


class EmbeddedSession:
    """Session handle over an in-process :class:`SkillHost`."""

    def __init__(self, host: SkillHost):
        self.host = host
        self.session_id = host.open_session()

    def say(self, text: str) -> HostResponse:
        return self.host.handle_request(self.session_id, text)

    def enable(self, skill_id: str) -> tuple[str, ...]:
        return self.host.set_skill_enabled(self.session_id, skill_id, True)

    def disable(self, skill_id: str) -> tuple[str, ...]:
        return self.host.set_skill_enabled(self.session_id, skill_id, False)

    def disable_all(self) -> tuple[str, ...]:
        return self.host.disable_all(self.session_id)

    def close(self) -> None:
        self.host.close_session(self.session_id)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class EmbeddedLink:
    def __init__(self, host: SkillHost):
        self.host = host

    def open(self) -> EmbeddedSession:
        return EmbeddedSession(self.host)

    def close(self) -> None:
        pass
