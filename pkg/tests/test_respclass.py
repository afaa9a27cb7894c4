import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skillprobe.respclass import (
    ResponseClass,
    SentenceKind,
    Theme,
    classify_response,
    classify_wh_theme,
    default_classifier,
    extract_directive_phrases,
    pos_tag,
    tokenize_sentences,
)
from skillprobe.respclass.postag import load_lexicon


def test_tokenize_question():
    sents = tokenize_sentences("What is your name?")
    assert sents == [["What", "is", "your", "name", "?"]]


def test_tokenize_empty():
    assert tokenize_sentences("") == []


def test_tokenize_keeps_quoted_tokens():
    sents = tokenize_sentences("Say '1' to get info about a book or '2' to get info about a movie.")
    assert len(sents) == 1
    assert "'1'" in sents[0] and "'2'" in sents[0]


def test_tokenize_splits_sentences():
    assert len(tokenize_sentences("Hello there. How are you? Great!")) == 3


@pytest.mark.parametrize("word,tag", [("Don't", "AUX-NEG"), ("whom", "WP"), ("you", "PRP"),
                                      ("should", "MD"), ("is", "AUX")])
def test_closed_class_tags(word, tag):
    assert pos_tag([word])[0].tag == tag


@pytest.mark.parametrize("text,kind", [
    ("Do you play video games?", SentenceKind.YES_NO),
    ("What goes around comes around.", SentenceKind.INFORMATIVE),
    ("Isn't she nice?", SentenceKind.YES_NO),
    ("Don't you know it?", SentenceKind.YES_NO),
    ("To whom did you send it?", SentenceKind.WH),
    ("That is what I did.", SentenceKind.INFORMATIVE),
    ("Please tell us your birthday", SentenceKind.DIRECTIVE),
    ("Here is a fact. Would you like another?", SentenceKind.YES_NO),
    ("Would you like another? What is your name?", SentenceKind.WH),
    ("do you want to play", SentenceKind.YES_NO),
    ("what is your favorite color", SentenceKind.WH),
])
def test_classify_kind(text, kind):
    assert classify_response(text).kind is kind


def test_directive_records_the_requested_item():
    cls = classify_response("Please tell us your birthday")
    assert cls.asked_for == "birthday"


@pytest.mark.parametrize("sentence,theme,sub", [
    ("What is the abbreviation for California?", Theme.ABBR, None),
    ("What does a defibrillator do?", Theme.DESC, None),
    ("how old are you?", Theme.HUM, "age"),
    ("How many legs does a spider have?", Theme.NUM, "count"),
    ("Which state do you live in?", Theme.LOC, "state"),
])
def test_wh_theme(sentence, theme, sub):
    got_theme, got_sub = classify_wh_theme(sentence)
    assert got_theme is theme
    if sub is not None:
        assert got_sub == sub


def test_unmapped_wh_goes_to_general_bucket():
    assert classify_wh_theme("What is it?") == (Theme.DESC, "other")


def test_answer_key_uses_theme_label():
    cls = classify_response("How old are you?")
    assert cls.answer_key == "human:age"


@pytest.mark.parametrize("sentence,phrases", [
    ("Please say 'continue' to get a fun fact", ["continue"]),
    ("Say '1' to get info about a book or '2' to get info about a movie.", ["1", "2"]),
    ("Here is a fact.", []),
    ("Say yes or no.", ["yes", "no"]),
])
def test_directive_phrases(sentence, phrases):
    assert extract_directive_phrases(sentence) == phrases


def test_round_trip_dict():
    cls = classify_response("Say 'next' for another fact.")
    assert ResponseClass.from_dict(cls.to_dict()) == cls


def test_coarse_labels():
    assert classify_response("Is it raining?").coarse == "yes_no"
    assert classify_response("Where is Paris?").coarse == "wh"
    assert classify_response("Paris is in France.").coarse == "non_question"


WH_WORDS = {w for w, t in load_lexicon().items() if t in ("WP", "WDT", "WRB", "WP$")}
vocab = ["the", "owl", "you", "is", "do", "can", "play", "game", "your", "name", "say",
         "please", "fun", "fact", "what", "where", "how", "which", "who", "tell", "me", "not",
         "'next'", "?", ".", "!", ",", "would", "like", "to", "hear", "another", "one"]
sentences = st.lists(st.sampled_from(vocab), min_size=1, max_size=14).map(" ".join)


@given(sentences)
@settings(max_examples=300)
def test_properties(text):
    a = classify_response(text)
    b = classify_response(text)
    assert a == b
    assert isinstance(a.kind, SentenceKind)
    words = {w.strip("'?.!,").lower() for w in text.split()}
    if not words & WH_WORDS:
        assert a.kind is not SentenceKind.WH
    if a.kind is SentenceKind.WH:
        assert a.theme is not None


@given(sentences)
@settings(max_examples=200)
def test_sentence_analysis_covers_every_sentence(text):
    analyses = default_classifier().analyze(text)
    assert len(analyses) == len(tokenize_sentences(text))
