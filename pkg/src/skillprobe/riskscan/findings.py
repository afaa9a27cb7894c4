"""Risk findings: scanning trees, permission cross-checks and the review queue."""

from __future__ import annotations

import csv
import enum
import hashlib
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from ..catalog import SkillRecord
from ..explorer import ConversationNode, ConversationTree
from ..respclass import ResponseClass, SentenceKind
from ..skillhost import ResponseKind
from .moderation import Wordlist, read_data_lines
from .pii import DEFAULT_LEXICON, PiiLexicon, pii_request_match

CONFIRM_FRACTION = 0.75


class FindingKind(str, enum.Enum):
    EXPLETIVE = "expletive"
    PII_REQUEST = "pii_request"


class Verdict(str, enum.Enum):
    PENDING = "pending"
    CONFIRMED = "confirmed"
    REJECTED = "rejected"


class PermissionStatus(str, enum.Enum):
    NO_PERMISSION_DECLARED = "no_permission_declared"
    PERMISSION_DECLARED_MISMATCHED = "permission_declared_mismatched"
    PERMISSION_DECLARED_MATCHING = "permission_declared_matching"


def finding_id(skill_id: str, kind: FindingKind, text: str, evidence: str) -> str:
    key = "\x1f".join((skill_id, kind.value, text, evidence))
    return hashlib.sha1(key.encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class RiskFinding:
    skill_id: str
    kind: FindingKind
    response_text: str
    evidence: str
    depth: int
    node_id: int
    pii_keyword: str | None = None
    opening_utterance: str | None = None
    utterance_source: str | None = None
    review_verdict: Verdict = Verdict.PENDING
    permission_status: PermissionStatus | None = None

    def __post_init__(self):
        if (self.pii_keyword is not None) != (self.kind is FindingKind.PII_REQUEST):
            raise ValueError("pii_keyword is set exactly for PII request findings")
        if self.evidence.lower() not in self.response_text.lower():
            raise ValueError(f"evidence {self.evidence!r} not found in response text")

    @property
    def finding_id(self) -> str:
        return finding_id(self.skill_id, self.kind, self.response_text, self.evidence)

    def to_dict(self) -> dict[str, Any]:
        return {
            "finding_id": self.finding_id,
            "skill_id": self.skill_id,
            "kind": self.kind.value,
            "response_text": self.response_text,
            "evidence": self.evidence,
            "pii_keyword": self.pii_keyword,
            "depth": self.depth,
            "node_id": self.node_id,
            "opening_utterance": self.opening_utterance,
            "utterance_source": self.utterance_source,
            "review_verdict": self.review_verdict.value,
            "permission_status": self.permission_status.value if self.permission_status else None,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RiskFinding":
        status = d.get("permission_status")
        return cls(
            skill_id=d["skill_id"], kind=FindingKind(d["kind"]), response_text=d["response_text"],
            evidence=d["evidence"], depth=int(d["depth"]), node_id=int(d["node_id"]),
            pii_keyword=d.get("pii_keyword"), opening_utterance=d.get("opening_utterance"),
            utterance_source=d.get("utterance_source"),
            review_verdict=Verdict(d.get("review_verdict", "pending")),
            permission_status=PermissionStatus(status) if status else None,
        )


def _origin(tree: ConversationTree | None, node: ConversationNode) -> tuple[str | None, str | None]:
    if tree is None:
        return node.opening, None
    return node.opening, tree.opening_sources.get(node.opening or "")


def scan_expletives(tree: ConversationTree, wordlist: Wordlist | None = None) -> list[RiskFinding]:
    """One pending finding per node whose text contains a wordlist term."""
    wordlist = wordlist or Wordlist.bundled()
    out = []
    for node_id in sorted(tree.nodes):
        node = tree.nodes[node_id]
        if not node.text:
            continue
        matches = wordlist.find(node.text)
        if matches:
            opening, source = _origin(tree, node)
            out.append(RiskFinding(tree.skill_id, FindingKind.EXPLETIVE, node.text,
                                   matches[0].surface, node.depth, node.node_id,
                                   opening_utterance=opening, utterance_source=source))
    return out


def detect_pii_request(node: ConversationNode, cls: ResponseClass | None = None,
                       tree: ConversationTree | None = None,
                       lexicon: PiiLexicon = DEFAULT_LEXICON) -> RiskFinding | None:
    if node.kind is not ResponseKind.SPEECH or not node.text:
        return None
    cls = cls if cls is not None else node.response_class
    if cls is not None and cls.kind is SentenceKind.INFORMATIVE:
        return None
    match = pii_request_match(node.text, lexicon)
    if match is None:
        return None
    opening, source = _origin(tree, node)
    return RiskFinding(tree.skill_id if tree else "", FindingKind.PII_REQUEST, node.text,
                       match.evidence, node.depth, node.node_id, pii_keyword=match.keyword,
                       opening_utterance=opening, utterance_source=source)


def scan_pii(tree: ConversationTree, lexicon: PiiLexicon = DEFAULT_LEXICON) -> list[RiskFinding]:
    out = []
    for node_id in sorted(tree.nodes):
        finding = detect_pii_request(tree.nodes[node_id], tree=tree, lexicon=lexicon)
        if finding:
            out.append(finding)
    return out


@lru_cache(maxsize=4)
def load_permission_map(path: str | None = None) -> dict[str, frozenset[str]]:
    table = {}
    for line in read_data_lines("permissions.tsv", path):
        keyword, _, tags = line.partition("\t")
        table[keyword.strip()] = frozenset(t.strip() for t in tags.split(",") if t.strip())
    return table


def cross_check_permissions(findings: Iterable[RiskFinding], record: SkillRecord,
                            permission_map: Mapping[str, frozenset[str]] | None = None
                            ) -> list[RiskFinding]:
    permission_map = permission_map if permission_map is not None else load_permission_map()
    declared = set(record.permissions)
    out = []
    for f in findings:
        if f.kind is not FindingKind.PII_REQUEST:
            out.append(f)
            continue
        if not declared:
            status = PermissionStatus.NO_PERMISSION_DECLARED
        elif declared & permission_map.get(f.pii_keyword, frozenset()):
            status = PermissionStatus.PERMISSION_DECLARED_MATCHING
        else:
            status = PermissionStatus.PERMISSION_DECLARED_MISMATCHED
        out.append(replace(f, permission_status=status))
    return out


def scan_tree(tree: ConversationTree, record: SkillRecord | None = None,
              wordlist: Wordlist | None = None,
              lexicon: PiiLexicon = DEFAULT_LEXICON) -> list[RiskFinding]:
    findings = scan_expletives(tree, wordlist) + scan_pii(tree, lexicon)
    if record is not None:
        findings = cross_check_permissions(findings, record)
    return sorted(findings, key=lambda f: (f.node_id, f.kind.value))


# review ------------------------------------------------------------------------------

def confirm_threshold(reviewers: int) -> int:
    return math.ceil(CONFIRM_FRACTION * reviewers)


def apply_votes(findings: Iterable[RiskFinding],
                votes: Mapping[str, Sequence[bool]]) -> list[RiskFinding]:
    """Set verdicts from per-finding votes; findings without votes stay pending."""
    findings = list(findings)
    counts = {len(v) for fid, v in votes.items()}
    if 0 in counts:
        raise ValueError("every reviewed finding needs at least one vote")
    if len(counts) > 1:
        raise ValueError(f"vote counts differ between findings: {sorted(counts)}")
    out = []
    for f in findings:
        ballot = votes.get(f.finding_id)
        if ballot is None:
            out.append(f)
            continue
        yes = sum(bool(v) for v in ballot)
        verdict = Verdict.CONFIRMED if yes >= confirm_threshold(len(ballot)) else Verdict.REJECTED
        out.append(replace(f, review_verdict=verdict))
    return out


def review_queue(findings: Iterable[RiskFinding],
                 votes: Mapping[str, Sequence[bool]]) -> list[RiskFinding]:
    """Findings confirmed by at least three quarters of the reviewers."""
    return [f for f in apply_votes(findings, votes) if f.review_verdict is Verdict.CONFIRMED]


_TRUE = {"1", "yes", "y", "true", "t"}
_FALSE = {"0", "no", "n", "false", "f"}


def read_votes(path: str | Path) -> dict[str, list[bool]]:
    """Parse ``finding_id,reviewer,vote`` rows; a header row is optional.

    Votes are ordered by reviewer name so the result does not depend on row order.
    """
    by_finding: dict[str, dict[str, bool]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        sample = fh.read(2048)
        fh.seek(0)
        dialect = csv.Sniffer().sniff(sample, delimiters=",\t;") if sample.strip() else csv.excel
        for lineno, row in enumerate(csv.reader(fh, dialect), 1):
            if not row or not "".join(row).strip():
                continue
            if lineno == 1 and row[0].strip().lower() == "finding_id":
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected finding_id, reviewer, vote")
            fid, reviewer, vote = (c.strip() for c in row)
            v = vote.lower()
            if v not in _TRUE | _FALSE:
                raise ValueError(f"{path}:{lineno}: bad vote {vote!r}")
            by_finding.setdefault(fid, {})[reviewer] = v in _TRUE
    return {fid: [ballot[r] for r in sorted(ballot)] for fid, ballot in by_finding.items()}


def findings_report(findings: Iterable[RiskFinding]) -> dict[str, Any]:
    by_skill: dict[str, list[RiskFinding]] = {}
    for f in findings:
        by_skill.setdefault(f.skill_id, []).append(f)
    counts = {k.value: 0 for k in FindingKind}
    skills_by_kind = {k.value: set() for k in FindingKind}
    for sid, fs in by_skill.items():
        for f in fs:
            counts[f.kind.value] += 1
            skills_by_kind[f.kind.value].add(sid)
    return {
        "skills": [{"skill_id": sid, "findings": [f.to_dict() for f in by_skill[sid]]}
                   for sid in sorted(by_skill)],
        "counts": {
            "findings": counts,
            "skills": {k: len(v) for k, v in skills_by_kind.items()},
        },
    }


def findings_from_report(report: Mapping[str, Any]) -> list[RiskFinding]:
    return [RiskFinding.from_dict(f) for s in report.get("skills", []) for f in s["findings"]]
