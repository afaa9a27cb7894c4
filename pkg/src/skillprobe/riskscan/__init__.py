"""Expletive and personal-information request detection over conversation trees."""

from .findings import (
    FindingKind,
    PermissionStatus,
    RiskFinding,
    Verdict,
    apply_votes,
    confirm_threshold,
    cross_check_permissions,
    detect_pii_request,
    finding_id,
    findings_from_report,
    findings_report,
    load_permission_map,
    read_votes,
    review_queue,
    scan_expletives,
    scan_pii,
    scan_tree,
)
from .moderation import TermMatch, Wordlist
from .pii import PII_KEYWORDS, PiiLexicon, PiiMatch, pii_request_match

__all__ = [
    "FindingKind", "PermissionStatus", "RiskFinding", "Verdict", "apply_votes",
    "confirm_threshold", "cross_check_permissions", "detect_pii_request", "finding_id",
    "findings_from_report", "findings_report", "load_permission_map", "read_votes",
    "review_queue", "scan_expletives", "scan_pii", "scan_tree", "TermMatch", "Wordlist",
    "PII_KEYWORDS", "PiiLexicon", "PiiMatch", "pii_request_match",
]
