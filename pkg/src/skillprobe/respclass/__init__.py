from .classify import (
    ResponseClass,
    ResponseClassifier,
    SentenceKind,
    Theme,
    classify_response,
    classify_wh_theme,
    default_classifier,
    extract_directive_phrases,
)
from .postag import TaggedToken, pos_tag
from .tokenize import tokenize_sentences

__all__ = [
    "ResponseClass", "ResponseClassifier", "SentenceKind", "Theme", "classify_response",
    "classify_wh_theme", "default_classifier", "extract_directive_phrases", "TaggedToken",
    "pos_tag", "tokenize_sentences",
]
