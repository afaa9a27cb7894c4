"""Confounding utterances: opening phrases registered by two or more skills."""

from __future__ import annotations

import csv
import enum
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping, Sequence

from .catalog import SkillRecord, Utterance, UtteranceKind, extract_utterances

logger = logging.getLogger(__name__)


class ConfoundCategory(str, enum.Enum):
    KIDS_ONLY = "kids_only"
    JOINT = "joint"
    NON_KIDS_ONLY = "non_kids_only"


class Outcome(str, enum.Enum):
    IRRELEVANT_INVOKED = "irrelevant_invoked"
    RELEVANT_INVOKED = "relevant_invoked"
    RELEVANT_NON_KID_PRIORITIZED = "relevant_non_kid_prioritized"
    NO_INVOCATION = "no_invocation"


@dataclass(frozen=True)
class ConfoundingEntry:
    utterance: str
    skill_ids: tuple[str, ...]
    kid_skill_ids: tuple[str, ...]
    category: ConfoundCategory
    same_name_icon: bool

    def __post_init__(self):
        if len(self.skill_ids) < 2:
            raise ValueError(f"{self.utterance!r}: an entry needs at least two skills")

    def to_dict(self) -> dict[str, Any]:
        return {"utterance": self.utterance, "skill_ids": list(self.skill_ids),
                "kid_skill_ids": list(self.kid_skill_ids), "category": self.category.value,
                "same_name_icon": self.same_name_icon}


@dataclass(frozen=True)
class ConfoundingOutcome:
    utterance: str
    category: ConfoundCategory
    invoked_skill_id: str | None
    outcome: Outcome
    error: str | None = None

    def __post_init__(self):
        if (self.invoked_skill_id is None) != (self.outcome is Outcome.NO_INVOCATION):
            raise ValueError("invoked_skill_id is absent exactly for NoInvocation")
        if self.outcome is Outcome.RELEVANT_NON_KID_PRIORITIZED and self.category is not ConfoundCategory.JOINT:
            raise ValueError("non-kid prioritization only applies to joint entries")

    def to_dict(self) -> dict[str, Any]:
        return {"utterance": self.utterance, "category": self.category.value,
                "invoked_skill_id": self.invoked_skill_id, "outcome": self.outcome.value,
                "error": self.error}


def categorize(kid_flags: Iterable[bool]) -> ConfoundCategory:
    flags = list(kid_flags)
    if all(flags):
        return ConfoundCategory.KIDS_ONLY
    if not any(flags):
        return ConfoundCategory.NON_KIDS_ONLY
    return ConfoundCategory.JOINT


def _same_name_icon(members: Sequence[SkillRecord]) -> bool:
    seen = set()
    for r in members:
        if not r.icon_digest:
            continue
        key = (r.name.strip().lower(), r.icon_digest)
        if key in seen:
            return True
        seen.add(key)
    return False


def build_dictionary(records: Iterable[SkillRecord],
                     utterances: Mapping[str, Iterable[Utterance]] | None = None
                     ) -> list[ConfoundingEntry]:
    """Entries for opening utterances shared by at least two distinct skills, sorted by text."""
    records = list(records)
    by_id = {r.skill_id: r for r in records}
    owners: dict[str, set[str]] = {}
    for r in records:
        utts = utterances.get(r.skill_id, ()) if utterances is not None else extract_utterances(r)
        for u in utts:
            if u.kind is UtteranceKind.OPENING:
                owners.setdefault(u.text, set()).add(r.skill_id)
    entries = []
    for text in sorted(owners):
        ids = sorted(owners[text])
        if len(ids) < 2:
            continue
        members = [by_id[i] for i in ids]
        kids = tuple(r.skill_id for r in members if r.is_kids)
        entries.append(ConfoundingEntry(text, tuple(ids), kids,
                                        categorize(r.is_kids for r in members),
                                        _same_name_icon(members)))
    return entries


def classify_outcome(entry: ConfoundingEntry, invoked: str | None) -> Outcome:
    if invoked is None:
        return Outcome.NO_INVOCATION
    if invoked not in entry.skill_ids:
        return Outcome.IRRELEVANT_INVOKED
    if entry.category is ConfoundCategory.JOINT and invoked not in entry.kid_skill_ids:
        return Outcome.RELEVANT_NON_KID_PRIORITIZED
    return Outcome.RELEVANT_INVOKED


def test_utterance(entry: ConfoundingEntry, session_factory: Callable[[], Any]) -> ConfoundingOutcome:
    """Disable everything, speak the utterance, and see which skill answered.

    The resolver policy is whatever the host behind ``session_factory`` runs.
    """
    try:
        session = session_factory()
        try:
            session.disable_all()
            response = session.say(entry.utterance)
        finally:
            session.close()
    except Exception as exc:  # noqa: BLE001 - any host failure is recorded, not raised
        logger.warning("confounding test for %r failed: %s", entry.utterance, exc)
        return ConfoundingOutcome(entry.utterance, entry.category, None, Outcome.NO_INVOCATION,
                                  error=f"{type(exc).__name__}: {exc}")
    invoked = response.invoked_skill_id
    if invoked is None and len(response.enabled_skill_ids) == 1:
        invoked = response.enabled_skill_ids[0]
    return ConfoundingOutcome(entry.utterance, entry.category, invoked,
                              classify_outcome(entry, invoked))


test_utterance.__test__ = False  # not a pytest test despite the name


def test_all(entries: Sequence[ConfoundingEntry], session_factory: Callable[[], Any],
             workers: int = 1) -> list[ConfoundingOutcome]:
    if workers <= 1:
        return [test_utterance(e, session_factory) for e in entries]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda e: test_utterance(e, session_factory), entries))


test_all.__test__ = False


def summarize(outcomes: Iterable[ConfoundingOutcome]) -> dict[str, dict[str, int]]:
    """Counts by category (rows) and outcome (columns), with a total column and row."""
    table = {c.value: {o.value: 0 for o in Outcome} | {"total": 0} for c in ConfoundCategory}
    for oc in outcomes:
        row = table[oc.category.value]
        row[oc.outcome.value] += 1
        row["total"] += 1
    table["total"] = {k: sum(table[c.value][k] for c in ConfoundCategory)
                      for k in [o.value for o in Outcome] + ["total"]}
    return table


def summary_csv(summary: Mapping[str, Mapping[str, int]]) -> str:
    cols = [o.value for o in Outcome] + ["total"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["category"] + cols)
    for row in [c.value for c in ConfoundCategory] + ["total"]:
        writer.writerow([row] + [summary[row][c] for c in cols])
    return buf.getvalue()


def entries_csv(entries: Sequence[ConfoundingEntry],
                outcomes: Sequence[ConfoundingOutcome] | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["utterance", "category", "skill_ids", "same_name_icon",
                     "invoked_skill_id", "outcome"])
    by_utt = {o.utterance: o for o in outcomes or ()}
    for e in entries:
        oc = by_utt.get(e.utterance)
        writer.writerow([e.utterance, e.category.value, " ".join(e.skill_ids),
                         int(e.same_name_icon), oc.invoked_skill_id if oc else "",
                         oc.outcome.value if oc else ""])
    return buf.getvalue()


def confound_report(entries: Sequence[ConfoundingEntry], outcomes: Sequence[ConfoundingOutcome],
                    policy: str) -> dict[str, Any]:
    by_utt = {o.utterance: o for o in outcomes}
    return {
        "policy": policy,
        "entries": [e.to_dict() | {"result": by_utt[e.utterance].to_dict()
                                   if e.utterance in by_utt else None} for e in entries],
        "summary": summarize(outcomes),
    }
