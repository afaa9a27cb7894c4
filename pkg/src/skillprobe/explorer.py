"""Multi-run conversation exploration and conversation-tree construction.

Each run opens a fresh host session, sends an opening utterance, replays the
probe utterances that lead toward a part of the tree with untried follow-ups,
then keeps probing until a termination condition fires. Nodes are unique
responses (whitespace-collapsed exact text); edges are labelled by the probe
utterance that produced the child.
"""

from __future__ import annotations

import enum
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Protocol, Sequence

from .catalog import SkillRecord, Utterance, UtteranceKind
from .respclass import ResponseClass, SentenceKind, classify_response
from .respclass.postag import read_tsv
from .skillhost import HostResponse, ResponseKind
from .text import collapse_ws

logger = logging.getLogger(__name__)

YES_NO_ANSWERS = ("yes", "no")
INFORMATIVE_FOLLOWUPS = ("tell me another one", "tell me more")
UNKNOWN_ANSWER = "i don't know. please tell me."


def load_answer_dictionary(path: str | None = None) -> dict[str, tuple[str, ...]]:
    """``theme-label:subtheme`` -> ordered answers, from the bundled TSV by default."""
    answers: dict[str, list[str]] = {}
    for key, value in read_tsv(path, "answers.tsv"):
        answers.setdefault(key, []).append(value)
    return {k: tuple(v) for k, v in answers.items()}


@dataclass(frozen=True)
class ExploreConfig:
    max_runs_per_skill: int = 25
    max_depth: int = 15
    repeat_threshold: int = 2
    max_nodes_per_skill: int = 500
    max_answers: int = 3
    answers: Mapping[str, tuple[str, ...]] | None = None

    def __post_init__(self):
        for name in ("max_runs_per_skill", "max_depth", "repeat_threshold",
                     "max_nodes_per_skill", "max_answers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.answers is None:
            object.__setattr__(self, "answers", load_answer_dictionary())


class EndReason(str, enum.Enum):
    NOT_NEW = "not_new"
    EMPTY = "empty"
    AUDIO = "audio"
    ERROR = "error"
    BOUND_REACHED = "bound_reached"
    SESSION_ENDED = "session_ended"
    EXHAUSTED = "exhausted"
    DIVERGED = "diverged"
    HOST_UNAVAILABLE = "host_unavailable"


@dataclass(frozen=True)
class Decision:
    end: bool
    reason: EndReason | None = None

    def __bool__(self) -> bool:
        return self.end


CONTINUE = Decision(False)


def _end(reason: EndReason) -> Decision:
    return Decision(True, reason)


@dataclass
class ConversationNode:
    node_id: int
    text: str
    kind: ResponseKind
    response_class: ResponseClass | None
    depth: int
    parent: int | None = None
    via: str | None = None
    opening: str | None = None
    closed: bool = False
    edges: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "node_id": self.node_id,
            "text": self.text,
            "kind": self.kind.value,
            "class": self.response_class.to_dict() if self.response_class else None,
            "depth": self.depth,
            "parent": self.parent,
            "via": self.via,
            "opening": self.opening,
            "closed": self.closed,
            "edges": dict(self.edges),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ConversationNode":
        return cls(
            node_id=int(d["node_id"]), text=d["text"], kind=ResponseKind(d["kind"]),
            response_class=ResponseClass.from_dict(d["class"]) if d.get("class") else None,
            depth=int(d["depth"]), parent=d.get("parent"), via=d.get("via"),
            opening=d.get("opening"), closed=bool(d.get("closed", False)),
            edges={k: int(v) for k, v in d.get("edges", {}).items()},
        )


@dataclass
class Run:
    opening: str
    path: list[int]
    transcript: list[str]
    end_reason: EndReason

    def to_dict(self) -> dict[str, Any]:
        return {"opening": self.opening, "path": list(self.path),
                "transcript": list(self.transcript), "end_reason": self.end_reason.value}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Run":
        return cls(d["opening"], [int(n) for n in d["path"]], list(d["transcript"]),
                   EndReason(d["end_reason"]))


@dataclass
class ConversationTree:
    skill_id: str
    roots: dict[str, int] = field(default_factory=dict)
    nodes: dict[int, ConversationNode] = field(default_factory=dict)
    runs: list[Run] = field(default_factory=list)
    opening_sources: dict[str, str] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)
    _by_text: dict[str, int] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._by_text = {collapse_ws(n.text): n.node_id for n in self.nodes.values()}

    def node_by_text(self, text: str) -> ConversationNode | None:
        node_id = self._by_text.get(collapse_ws(text))
        return None if node_id is None else self.nodes[node_id]

    def add_node(self, text: str, kind: ResponseKind, depth: int, parent: int | None,
                 via: str | None, opening: str) -> ConversationNode:
        key = collapse_ws(text)
        if key in self._by_text:
            raise ValueError(f"duplicate response text in tree: {key!r}")
        node_id = len(self.nodes) + 1
        cls = classify_response(text) if kind is ResponseKind.SPEECH else None
        node = ConversationNode(node_id, key, kind, cls, depth, parent, via, opening)
        self.nodes[node_id] = node
        self._by_text[key] = node_id
        if parent is not None:
            self.nodes[parent].edges[via] = node_id
        return node

    @property
    def transcripts(self) -> list[list[str]]:
        return [list(r.transcript) for r in self.runs]

    def to_dict(self) -> dict[str, Any]:
        return {
            "skill_id": self.skill_id,
            "roots": dict(self.roots),
            "opening_sources": dict(self.opening_sources),
            "nodes": [self.nodes[k].to_dict() for k in sorted(self.nodes)],
            "runs": [r.to_dict() for r in self.runs],
            "errors": list(self.errors),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ConversationTree":
        nodes = [ConversationNode.from_dict(n) for n in d.get("nodes", [])]
        return cls(
            skill_id=d["skill_id"],
            roots={k: int(v) for k, v in d.get("roots", {}).items()},
            nodes={n.node_id: n for n in nodes},
            runs=[Run.from_dict(r) for r in d.get("runs", [])],
            opening_sources=dict(d.get("opening_sources", {})),
            errors=list(d.get("errors", [])),
        )


@dataclass
class PathMemory:
    """Follow-ups already tried per node, and the run counter for one skill."""

    taken: dict[int, set[str]] = field(default_factory=dict)
    runs: int = 0

    def at(self, node_id: int) -> set[str]:
        return self.taken.setdefault(node_id, set())

    def mark(self, node_id: int, utterance: str) -> None:
        self.at(node_id).add(utterance)


# follow-up generation -----------------------------------------------------------

def _wh_candidates(cls: ResponseClass, config: ExploreConfig) -> tuple[str, ...]:
    key = cls.answer_key
    answers = config.answers.get(key) if key else None
    if not answers:
        return (UNKNOWN_ANSWER,)
    return tuple(answers[:config.max_answers])


def followup_candidates(cls: ResponseClass | None, config: ExploreConfig) -> tuple[str, ...]:
    """All follow-ups worth trying after a response, in preference order."""
    if cls is None:
        return ()
    if cls.kind is SentenceKind.YES_NO:
        return YES_NO_ANSWERS
    if cls.kind is SentenceKind.WH:
        return _wh_candidates(cls, config)
    if cls.kind is SentenceKind.DIRECTIVE:
        if cls.suggested_phrases:
            return tuple(cls.suggested_phrases)
        if cls.theme is not None:
            return _wh_candidates(cls, config)
    return INFORMATIVE_FOLLOWUPS


def generate_followup(cls: ResponseClass | None, taken: Iterable[str],
                      config: ExploreConfig) -> str | None:
    """Next untried follow-up, or None once every candidate has been taken."""
    taken = set(taken)
    for cand in followup_candidates(cls, config):
        if cand not in taken:
            return cand
    return None


# termination ------------------------------------------------------------------------

def should_terminate(response: HostResponse, path: Sequence[int], tree: ConversationTree,
                     config: ExploreConfig, seen: Counter | None = None) -> Decision:
    """Decide whether the run that produced ``response`` must stop.

    ``path`` holds the node ids visited so far in this run; ``seen`` counts
    response texts in this run, including ``response`` itself.
    """
    if response.kind is ResponseKind.EMPTY:
        return _end(EndReason.EMPTY)
    if response.kind is ResponseKind.AUDIO:
        return _end(EndReason.AUDIO)
    if response.kind is ResponseKind.ERROR:
        return _end(EndReason.ERROR)
    key = collapse_ws(response.text)
    if seen is not None and seen[key] >= config.repeat_threshold:
        return _end(EndReason.NOT_NEW)
    existing = tree.node_by_text(key)
    if existing is not None:
        parent = path[-1] if path else None
        if existing.parent != parent:
            return _end(EndReason.NOT_NEW)
    elif len(tree.nodes) >= config.max_nodes_per_skill:
        return _end(EndReason.BOUND_REACHED)
    if len(path) + 1 >= config.max_depth:
        return _end(EndReason.BOUND_REACHED)
    if not response.session_open:
        return _end(EndReason.SESSION_ENDED)
    return CONTINUE


# exploration ------------------------------------------------------------------------

class HostSession(Protocol):
    def say(self, text: str) -> HostResponse: ...
    def close(self) -> None: ...


SessionFactory = Callable[[], HostSession]


class _Explorer:
    def __init__(self, record: SkillRecord, openings: list[Utterance],
                 session_factory: SessionFactory, config: ExploreConfig):
        self.config = config
        self.openings = openings
        self.session_factory = session_factory
        self.tree = ConversationTree(record.skill_id)
        self.tree.opening_sources = {u.text: u.source.value for u in openings}
        self.memory = PathMemory()
        self.probed: set[str] = set()
        self._pending: dict[int, bool] = {}

    def pending(self, node_id: int) -> bool:
        if node_id in self._pending:
            return self._pending[node_id]
        node = self.tree.nodes[node_id]
        result = False
        if not node.closed:
            if generate_followup(node.response_class, self.memory.at(node_id), self.config):
                result = True
            else:
                result = any(self.pending(c) for c in node.edges.values())
        self._pending[node_id] = result
        return result

    def next_opening(self) -> str | None:
        for u in self.openings:
            if u.text not in self.probed:
                return u.text
        for u in self.openings:
            root = self.tree.roots.get(u.text)
            if root is not None and self.pending(root):
                return u.text
        return None

    def explore(self) -> ConversationTree:
        while self.memory.runs < self.config.max_runs_per_skill:
            self._pending.clear()
            opening = self.next_opening()
            if opening is None:
                break
            self.probed.add(opening)
            self.memory.runs += 1
            try:
                run = self.run_once(opening)
            except (ConnectionError, OSError) as exc:
                logger.warning("skill %s: host unavailable: %s", self.tree.skill_id, exc)
                self.tree.errors.append(f"host unavailable during run {self.memory.runs}: {exc}")
                break
            self.tree.runs.append(run)
            if run.end_reason is EndReason.HOST_UNAVAILABLE:
                break
        return self.tree

    def _close(self, node: ConversationNode, reason: EndReason) -> None:
        if reason in (EndReason.SESSION_ENDED, EndReason.BOUND_REACHED, EndReason.EMPTY,
                      EndReason.AUDIO, EndReason.ERROR):
            node.closed = True

    def run_once(self, opening: str) -> Run:
        tree, config = self.tree, self.config
        session = self.session_factory()
        transcript: list[str] = []
        path: list[int] = []
        seen: Counter = Counter()
        try:
            response = self._say(session, opening, transcript, seen)
            decision = should_terminate(response, path, tree, config, seen)
            root = tree.node_by_text(response.text)
            if root is not None and root.parent is not None:
                tree.errors.append(f"opening {opening!r} answered with a non-root response")
                return Run(opening, path, transcript, EndReason.NOT_NEW)
            if root is None:
                if len(tree.nodes) >= config.max_nodes_per_skill:
                    return Run(opening, path, transcript, EndReason.BOUND_REACHED)
                root = tree.add_node(response.text, response.kind, 1, None, None, opening)
            tree.roots.setdefault(opening, root.node_id)
            path.append(root.node_id)
            if decision:
                self._close(root, decision.reason)
                return Run(opening, path, transcript, decision.reason)

            while True:
                node = tree.nodes[path[-1]]
                child = next((c for c in node.edges.values() if self.pending(c)), None)
                if child is not None:
                    utt = next(u for u, c in node.edges.items() if c == child)
                    response = self._say(session, utt, transcript, seen)
                    if collapse_ws(response.text) != tree.nodes[child].text:
                        tree.errors.append(
                            f"replay diverged at node {node.node_id} on {utt!r}")
                        return Run(opening, path, transcript, EndReason.DIVERGED)
                    path.append(child)
                    continue
                utt = None if node.closed else generate_followup(
                    node.response_class, self.memory.at(node.node_id), config)
                if utt is None:
                    return Run(opening, path, transcript, EndReason.EXHAUSTED)
                self.memory.mark(node.node_id, utt)
                self._pending.clear()
                response = self._say(session, utt, transcript, seen)
                decision = should_terminate(response, path, tree, config, seen)
                existing = tree.node_by_text(response.text)
                if existing is not None and existing.parent == node.node_id:
                    # a second utterance reaching a known child: no new edge
                    new = existing
                elif response.kind is ResponseKind.SPEECH and existing is None and not (
                        decision.reason is EndReason.BOUND_REACHED
                        and len(tree.nodes) >= config.max_nodes_per_skill):
                    new = tree.add_node(response.text, response.kind, len(path) + 1,
                                        node.node_id, utt, opening)
                else:
                    new = None
                if new is not None:
                    path.append(new.node_id)
                if decision:
                    if new is not None:
                        self._close(new, decision.reason)
                    return Run(opening, path, transcript, decision.reason)
                if new is None:
                    return Run(opening, path, transcript, EndReason.NOT_NEW)
        finally:
            try:
                session.close()
            except Exception:  # noqa: BLE001 - a dead session must not mask the run result
                logger.debug("closing session failed", exc_info=True)

    @staticmethod
    def _say(session: HostSession, utt: str, transcript: list[str], seen: Counter) -> HostResponse:
        response = session.say(utt)
        transcript += [utt, response.text]
        if response.kind is ResponseKind.SPEECH:
            seen[collapse_ws(response.text)] += 1
        return response


def explore_skill(record: SkillRecord, utterances: Iterable[Utterance],
                  session_factory: SessionFactory,
                  config: ExploreConfig | None = None) -> ConversationTree:
    """Explore one skill through fresh sessions from ``session_factory``.

    Only opening utterances start runs; in-skill utterances are ignored here.
    If the host becomes unreachable the partial tree is returned with the
    failure recorded in ``tree.errors``.
    """
    config = config or ExploreConfig()
    openings: list[Utterance] = []
    for u in utterances:
        if u.kind is UtteranceKind.OPENING and all(o.text != u.text for o in openings):
            openings.append(u)
    explorer = _Explorer(record, openings, session_factory, config)
    if not openings:
        explorer.tree.errors.append("no opening utterance")
        return explorer.tree
    return explorer.explore()


def coverage_metrics(tree: ConversationTree) -> dict[str, int]:
    return {
        "unique_responses": len(tree.nodes),
        "max_depth": max((n.depth for n in tree.nodes.values()), default=0),
        "max_branching": max((len(n.edges) for n in tree.nodes.values()), default=0),
        "initial_utterances": len(tree.roots),
    }
