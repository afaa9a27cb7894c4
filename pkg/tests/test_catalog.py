import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skillprobe.catalog import (
    CatalogError,
    SkillRecord,
    UtteranceError,
    UtteranceKind,
    UtteranceSource,
    classify_utterance,
    extract_utterances,
    parse_catalog,
    write_catalog,
)
from skillprobe.text import normalize_utterance


def _write(tmp_path, doc):
    p = tmp_path / "catalog.json"
    p.write_text(json.dumps(doc), encoding="utf-8")
    return p


BURNS = {"skill_id": "B0837HWNY5", "name": "My Burns", "invocation_name": "my burns",
         "sample_utterances": ["open my burns"], "category": "kids", "description": "",
         "permissions": [], "icon_digest": "ab12", "mature_content": False, "rating": 4.1}


def test_parse_single_entry(tmp_path):
    records = parse_catalog(_write(tmp_path, [BURNS]))
    assert len(records) == 1
    r = records[0]
    assert r.skill_id == "B0837HWNY5"
    assert r.is_kids
    assert r.sample_utterances == ("open my burns",)


def test_parse_empty_document(tmp_path):
    assert parse_catalog(_write(tmp_path, [])) == []


def test_duplicate_skill_id_is_fatal(tmp_path):
    with pytest.raises(CatalogError, match="B0837HWNY5"):
        parse_catalog(_write(tmp_path, [BURNS, dict(BURNS, name="Other")]))


def test_unreadable_and_malformed(tmp_path):
    with pytest.raises(CatalogError):
        parse_catalog(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(CatalogError):
        parse_catalog(bad)


def test_invalid_entry_is_skipped_and_reported(tmp_path):
    issues = []
    broken = dict(BURNS, skill_id="X1", sample_utterances=["a", "b", "c", "d"])
    records = parse_catalog(_write(tmp_path, [BURNS, broken]), issues)
    assert [r.skill_id for r in records] == ["B0837HWNY5"]
    assert len(issues) == 1 and issues[0].skill_id == "X1" and issues[0].index == 1


def test_write_then_parse_round_trip(tmp_path):
    rec = SkillRecord("S1", "Owl Facts", "owl facts", ("open owl facts",), ("tell me more",),
                      "Facts about owls.", "kids", ("device_address",), "ff", False)
    path = tmp_path / "c.json"
    write_catalog([rec], path)
    assert parse_catalog(path) == [rec]


def _rec(**kw):
    base = dict(skill_id="S", name="Fun Facts", invocation_name="fun facts")
    base.update(kw)
    return SkillRecord(**base)


def test_description_quote_is_extracted():
    rec = _rec(description='You can say "give me a fun fact" to ask the skill for a fun fact.')
    utts = extract_utterances(rec)
    assert ("give me a fun fact", UtteranceSource.DESCRIPTION_QUOTE) in [(u.text, u.source) for u in utts]


def test_description_invocation_sentence():
    rec = _rec(invocation_name="ted talks", description="Alexa, open Ted Talks")
    utts = extract_utterances(rec)
    assert [(u.text, u.source, u.kind) for u in utts] == [
        ("open ted talks", UtteranceSource.DESCRIPTION_INVOCATION_SENTENCE, UtteranceKind.OPENING)]


def test_empty_record_has_no_utterances():
    assert extract_utterances(_rec()) == []


def test_generated_opening_only_on_request():
    utts = extract_utterances(_rec(), add_generated=True)
    assert [(u.text, u.source) for u in utts] == [("open fun facts", UtteranceSource.GENERATED)]


def test_single_word_quote_is_ignored():
    rec = _rec(description="Say 'yes' to continue.")
    assert extract_utterances(rec) == []


@pytest.mark.parametrize("raw,text,kind", [
    ("open my burns", "open my burns", UtteranceKind.OPENING),
    ("tell me a joke", "tell me a joke", UtteranceKind.IN_SKILL),
    ("Start Pop Story!", "start pop story", UtteranceKind.OPENING),
    ("Alexa, ask banana stories", "ask banana stories", UtteranceKind.OPENING),
    ("what does my burns say", "what does my burns say", UtteranceKind.OPENING),
])
def test_classify_utterance(raw, text, kind):
    u = classify_utterance(raw, _rec(invocation_name="my burns"))
    assert (u.text, u.kind) == (text, kind)


def test_all_punctuation_is_rejected():
    with pytest.raises(UtteranceError):
        classify_utterance("?!...", _rec())


phrases = st.text(alphabet=st.sampled_from(list("abcdefg XYZ'!?,.-")), min_size=1, max_size=40)


@given(phrases)
@settings(max_examples=200)
def test_normalization_is_idempotent(raw):
    rec = _rec()
    try:
        first = classify_utterance(raw, rec)
    except UtteranceError:
        return
    assert classify_utterance(first.text, rec).text == first.text


@given(st.lists(phrases, max_size=3), st.lists(phrases, max_size=4),
       st.lists(phrases, max_size=4))
@settings(max_examples=150)
def test_extract_is_duplicate_free_and_traceable(samples, instructions, quotes):
    desc = " ".join(f'Say "{q}" now.' for q in quotes)
    rec = _rec(sample_utterances=tuple(samples), additional_instructions=tuple(instructions),
               description=desc)
    utts = extract_utterances(rec)
    texts = [u.text for u in utts]
    assert len(texts) == len(set(texts))
    field_of = {
        UtteranceSource.SAMPLE_LIST: samples,
        UtteranceSource.ADDITIONAL_INSTRUCTIONS: instructions,
        UtteranceSource.DESCRIPTION_QUOTE: quotes,
    }
    for u in utts:
        normalized = {normalize_utterance(s) for s in field_of[u.source]}
        assert u.text in normalized or ("alexa " + u.text) in normalized
