import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from skillprobe.catalog import SkillRecord
from skillprobe.explorer import ConversationTree
from skillprobe.riskscan import (
    PII_KEYWORDS,
    FindingKind,
    PermissionStatus,
    PiiLexicon,
    RiskFinding,
    Verdict,
    Wordlist,
    apply_votes,
    confirm_threshold,
    cross_check_permissions,
    detect_pii_request,
    findings_from_report,
    findings_report,
    pii_request_match,
    read_votes,
    review_queue,
    scan_expletives,
    scan_pii,
    scan_tree,
)
from skillprobe.riskscan.pii import ALIASES, SECOND_PERSON_ALIASES
from skillprobe.skillhost import ResponseKind


def chain_tree(*texts, skill_id="S1"):
    tree = ConversationTree(skill_id)
    parent = None
    for depth, text in enumerate(texts, 1):
        node = tree.add_node(text, ResponseKind.SPEECH, depth, parent,
                             None if parent is None else f"u{depth}", "open s")
        parent = node.node_id
    return tree


def test_expletive_examples():
    tree = chain_tree("Welcome to Skill X. Say 'Continue'.",
                      "Here's your fact: A pig's orgasm lasts for 30 minutes.",
                      "You're so ugly you'd scare the crap out of the toilet.")
    found = scan_expletives(tree)
    assert [(f.node_id, f.evidence, f.depth, f.review_verdict) for f in found] == [
        (2, "orgasm", 2, Verdict.PENDING), (3, "crap", 3, Verdict.PENDING)]


@pytest.mark.parametrize("text", ["Scunthorpe is a town in England.", "Butter makes toast tasty.",
                                  "Ask the class assistant about grass.", "Order a cocktail."])
def test_no_substring_matches(text):
    assert Wordlist.bundled().find(text) == []


@pytest.mark.parametrize("text,term", [("what the sh1t", "shit"), ("that was crappy", "crap"),
                                       ("DAMN it", "damn")])
def test_expletive_variants(text, term):
    assert [m.term for m in Wordlist.bundled().find(text)] == [term]


@pytest.mark.parametrize("text,keyword", [
    ("Welcome to Mr Tongue Twister. What is your name?", "name"),
    ("Awesome! Before we start however; I'm curious...how old are you?", "age"),
    ("Please provide me your age group. Such as adult, children, young", "age"),
    ("Please tell us your birthday", "date of birth"),
    ("Can you tell me your zip code?", "zipcode"),
    ("What is your full home address?", "address"),
])
def test_pii_requests(text, keyword):
    m = pii_request_match(text)
    assert m is not None and m.keyword == keyword
    assert m.evidence.lower() in text.lower()


@pytest.mark.parametrize("text", [
    "That is what I did.",
    "My name is Alexa.",
    "What is the name of the largest planet?",
    "Your name is on the list.",
    "The message got lost.",
    "Tell me your favorite name for a puppy.",
    "Do you know how old the moon is?",
])
def test_pii_non_requests(text):
    assert pii_request_match(text) is None


def test_detect_skips_informative_and_non_speech():
    tree = chain_tree("Your name is great.")
    assert detect_pii_request(tree.nodes[1], tree=tree) is None
    tree = ConversationTree("S")
    node = tree.add_node("The service is unavailable.", ResponseKind.ERROR, 1, None, None, "o")
    assert detect_pii_request(node, tree=tree) is None


def test_detect_records_origin():
    tree = chain_tree("Hello there.", "What is your name?")
    tree.opening_sources = {"open s": "sample_list"}
    f = detect_pii_request(tree.nodes[2], tree=tree)
    assert (f.kind, f.pii_keyword, f.depth, f.opening_utterance, f.utterance_source) == (
        FindingKind.PII_REQUEST, "name", 2, "open s", "sample_list")


def _pii(keyword, text="What is your name?", evidence="name"):
    return RiskFinding("S1", FindingKind.PII_REQUEST, text, evidence, 1, 1, pii_keyword=keyword)


def _rec(perms=()):
    return SkillRecord("S1", "S", "s", permissions=tuple(perms))


def test_permission_statuses():
    assert cross_check_permissions([_pii("name")], _rec())[0].permission_status is \
        PermissionStatus.NO_PERMISSION_DECLARED
    assert cross_check_permissions([_pii("address", "Your address?", "address")],
                                   _rec(["device_address"]))[0].permission_status is \
        PermissionStatus.PERMISSION_DECLARED_MATCHING
    assert cross_check_permissions([_pii("age", "Your age?", "age")],
                                   _rec(["device_address"]))[0].permission_status is \
        PermissionStatus.PERMISSION_DECLARED_MISMATCHED


def test_finding_invariants():
    with pytest.raises(ValueError):
        RiskFinding("S", FindingKind.EXPLETIVE, "crap", "crap", 1, 1, pii_keyword="name")
    with pytest.raises(ValueError):
        RiskFinding("S", FindingKind.PII_REQUEST, "hello", "hello", 1, 1)
    with pytest.raises(ValueError):
        RiskFinding("S", FindingKind.EXPLETIVE, "hello", "crap", 1, 1)


def test_finding_id_is_stable():
    assert _pii("name").finding_id == _pii("name").finding_id
    assert len(_pii("name").finding_id) == 12


@pytest.mark.parametrize("votes,verdict", [
    ([1, 1, 1, 0], Verdict.CONFIRMED), ([1, 1, 1, 1], Verdict.CONFIRMED),
    ([1, 1, 0, 0], Verdict.REJECTED), ([1, 0, 0, 0], Verdict.REJECTED),
])
def test_review_votes(votes, verdict):
    f = _pii("name")
    out = apply_votes([f], {f.finding_id: [bool(v) for v in votes]})
    assert out[0].review_verdict is verdict
    assert review_queue([f], {f.finding_id: [bool(v) for v in votes]}) == (
        out if verdict is Verdict.CONFIRMED else [])


def test_review_empty():
    assert review_queue([], {}) == []


def test_unvoted_findings_stay_pending():
    f = _pii("name")
    assert apply_votes([f], {})[0].review_verdict is Verdict.PENDING


def test_uneven_vote_counts_rejected():
    with pytest.raises(ValueError):
        apply_votes([], {"a": [True], "b": [True, False]})


@given(st.integers(1, 40))
def test_threshold_matches_three_quarters(n):
    # oracle: smallest k with k/n >= 3/4, found by search
    k = next(k for k in range(n + 1) if 4 * k >= 3 * n)
    assert confirm_threshold(n) == k == math.ceil(0.75 * n)


def test_read_votes(tmp_path):
    p = tmp_path / "votes.csv"
    p.write_text("finding_id,reviewer,vote\nabc,r2,no\nabc,r1,yes\nxyz,r1,1\nxyz,r2,0\n")
    assert read_votes(p) == {"abc": [True, False], "xyz": [True, False]}
    bad = tmp_path / "bad.csv"
    bad.write_text("abc,r1,maybe\n")
    with pytest.raises(ValueError):
        read_votes(bad)


def test_report_round_trip():
    tree = chain_tree("What is your name?", "Well, crap.")
    findings = scan_tree(tree, _rec())
    report = findings_report(findings)
    assert report["counts"] == {"findings": {"expletive": 1, "pii_request": 1},
                                "skills": {"expletive": 1, "pii_request": 1}}
    assert findings_from_report(report) == findings


def test_lexicon_only_extends():
    with pytest.raises(ValueError):
        PiiLexicon(("name",))
    lex = PiiLexicon().extended(["blood type"])
    assert pii_request_match("What is your blood type?", lex).keyword == "blood type"
    assert pii_request_match("What is your blood type?") is None


PHRASES = [k.split() for k in list(PII_KEYWORDS) + list(ALIASES) + list(SECOND_PERSON_ALIASES)]


def _has_phrase(words):
    return any(words[i:i + len(p)] == p for p in PHRASES for i in range(len(words)))

SAFE = ["what", "is", "your", "favorite", "color", "please", "tell", "me", "do", "you", "like",
        "owls", "say", "the", "fact", "how", "many", "legs", "?", ".", "give", "my", "message",
        "stage", "page", "named", "addresses"]


@given(st.lists(st.sampled_from(SAFE), min_size=1, max_size=15))
@settings(max_examples=300)
def test_no_keyword_means_no_finding(words):
    assume(not _has_phrase(words))
    tree = chain_tree(" ".join(words))
    assert scan_pii(tree) == []


base_terms = st.lists(st.sampled_from(["crap", "damn", "hell", "owl", "fact", "spider"]),
                      min_size=1, max_size=4, unique=True)
texts = st.lists(st.sampled_from(["crap", "owl", "facts", "damn", "spiders", "hello", "well",
                                  "hell", "o", "fun"]), min_size=1, max_size=8).map(" ".join)


@given(base_terms, st.sampled_from(["owl", "fun", "hello", "spider"]),
       st.lists(texts, min_size=1, max_size=5, unique=True))
@settings(max_examples=150)
def test_expletive_scan_is_monotone(terms, extra, lines):
    tree = chain_tree(*lines)
    before = {f.node_id for f in scan_expletives(tree, Wordlist(terms))}
    after = {f.node_id for f in scan_expletives(tree, Wordlist(terms + [extra]))}
    assert before <= after
    for f in scan_expletives(tree, Wordlist(terms + [extra])):
        assert f.depth == tree.nodes[f.node_id].depth
