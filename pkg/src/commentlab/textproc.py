"""Text processing chain for Arabic newspaper comments.

Pipeline order is fixed: normalize -> tokenize -> (light stem?) -> stop-word
removal. All functions are pure; stemmer rules and the stop list are plain
data and can be swapped via text files (one entry per line, '#' comments).
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional

# Harakat, tanwin, shadda, sukun, quranic marks in U+064B..U+065F, plus the
# superscript alef; all dropped during normalization together with tatweel.
_DIACRITICS = frozenset(chr(cp) for cp in range(0x064B, 0x0660)) | {"ٰ"}
_TATWEEL = "ـ"

# Orthographic folding: hamza-carrying alef forms to bare alef, final
# alef maksura to yeh, teh marbuta to heh.
_CHAR_MAP = {
    "أ": "ا",
    "إ": "ا",
    "آ": "ا",
    "ى": "ي",
    "ة": "ه",
}

# Arabic letters (base block letters plus the extended letters used for
# dialectal and borrowed sounds). Excludes digits, punctuation and marks.
_ARABIC_LETTER_RANGES = (
    (0x0621, 0x063A),
    (0x0641, 0x064A),
    (0x066E, 0x066F),
    (0x0671, 0x06D3),
    (0x06D5, 0x06D5),
    (0x06EE, 0x06EF),
    (0x06FA, 0x06FC),
    (0x06FF, 0x06FF),
)

ARABIC_LETTERS = frozenset(
    chr(cp) for lo, hi in _ARABIC_LETTER_RANGES for cp in range(lo, hi + 1)
)

_ARABIC_CLASS = "".join(
    "%s-%s" % (chr(lo), chr(hi)) if lo != hi else chr(lo)
    for lo, hi in _ARABIC_LETTER_RANGES
)
_TOKEN_RE = re.compile("[0-9A-Za-z٠-٩۰-۹" + _ARABIC_CLASS + "]+")


def normalize(text: str) -> str:
    """Canonicalize comment text.

    NFC-normalizes, drops Arabic diacritics and tatweel, folds hamza-alef
    forms / alef maksura / teh marbuta, and lowercases cased letters.
    Digits and punctuation pass through. Idempotent.
    """
    text = unicodedata.normalize("NFC", text)
    out = []
    for ch in text:
        if ch in _DIACRITICS or ch == _TATWEEL:
            continue
        out.append(_CHAR_MAP.get(ch, ch))
    return "".join(out).lower()


@dataclass
class TokenStream:
    tokens: list[str]
    source_comment_id: Optional[str] = None


def tokenize(text: str, source_comment_id: Optional[str] = None) -> TokenStream:
    """Split normalized text into maximal runs of Arabic letters, Latin letters
    or digits; everything else is a separator."""
    return TokenStream(_TOKEN_RE.findall(text), source_comment_id)


def _load_packaged_wordlist(name: str) -> list[str]:
    text = resources.files("commentlab.data").joinpath(name).read_text("utf-8")
    return parse_wordlist(text.splitlines())


def parse_wordlist(lines: Iterable[str]) -> list[str]:
    """Parse a word-list file: one entry per line, blanks and '#' comments skipped."""
    entries = []
    for line in lines:
        line = line.strip()
        if line and not line.startswith("#"):
            entries.append(line)
    return entries


def load_wordlist(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return parse_wordlist(fh)


@dataclass(frozen=True)
class StemmerRules:
    """Affix lists for the light stemmer; order matters (longest first)."""

    prefixes: tuple[str, ...]
    suffixes: tuple[str, ...]
    min_stem_length: int = 2

    def __post_init__(self):
        if self.min_stem_length < 2:
            raise ValueError("min_stem_length must be >= 2")


def default_stemmer_rules() -> StemmerRules:
    return StemmerRules(
        prefixes=tuple(_load_packaged_wordlist("stem_prefixes.txt")),
        suffixes=tuple(_load_packaged_wordlist("stem_suffixes.txt")),
    )


_DEFAULT_RULES: Optional[StemmerRules] = None


def _rules_or_default(rules: Optional[StemmerRules]) -> StemmerRules:
    global _DEFAULT_RULES
    if rules is not None:
        return rules
    if _DEFAULT_RULES is None:
        _DEFAULT_RULES = default_stemmer_rules()
    return _DEFAULT_RULES


def is_arabic_token(token: str) -> bool:
    return bool(token) and all(ch in ARABIC_LETTERS for ch in token)


def light_stem(token: str, rules: Optional[StemmerRules] = None) -> str:
    """Strip at most one prefix then at most one suffix from an Arabic token.

    Each strip applies only when the remainder keeps at least
    ``min_stem_length`` letters. This is deliberate affix stripping, not
    root extraction: tokens that carry no listed affix come back unchanged,
    and non-Arabic tokens (Latin, digits, mixed) always pass through.
    """
    rules = _rules_or_default(rules)
    if not is_arabic_token(token):
        return token
    stem = token
    for prefix in rules.prefixes:
        if stem.startswith(prefix) and len(stem) - len(prefix) >= rules.min_stem_length:
            stem = stem[len(prefix):]
            break
    for suffix in rules.suffixes:
        if stem.endswith(suffix) and len(stem) - len(suffix) >= rules.min_stem_length:
            stem = stem[: -len(suffix)]
            break
    return stem


def remove_stop_words(stream: TokenStream, stoplist: frozenset[str] | set[str]) -> TokenStream:
    """Drop tokens present in the stoplist, preserving the order of survivors."""
    return TokenStream(
        [t for t in stream.tokens if t not in stoplist], stream.source_comment_id
    )


_DEFAULT_STOPWORDS: Optional[list[str]] = None


def default_stopwords() -> list[str]:
    """Raw entries of the packaged MSA stop list (not yet normalized)."""
    global _DEFAULT_STOPWORDS
    if _DEFAULT_STOPWORDS is None:
        _DEFAULT_STOPWORDS = _load_packaged_wordlist("stopwords_ar.txt")
    return list(_DEFAULT_STOPWORDS)


def build_stopset(entries: Iterable[str], stem: bool, rules: Optional[StemmerRules] = None) -> frozenset[str]:
    """Normalize (and optionally stem) stop-list entries so they match
    pipeline tokens exactly."""
    rules = _rules_or_default(rules)
    out = set()
    for entry in entries:
        for tok in tokenize(normalize(entry)).tokens:
            out.add(light_stem(tok, rules) if stem else tok)
    return frozenset(out)


@dataclass(frozen=True)
class TextPipeline:
    """End-to-end processing configuration: the stemming branch plus the
    resolved stop set. Reusable across documents; fully deterministic."""

    stem: bool = False
    rules: StemmerRules = field(default_factory=default_stemmer_rules)
    stopset: frozenset[str] = frozenset()

    @classmethod
    def build(
        cls,
        stem: bool = False,
        rules: Optional[StemmerRules] = None,
        stopwords: Optional[Iterable[str]] = None,
    ) -> "TextPipeline":
        rules = _rules_or_default(rules)
        entries = default_stopwords() if stopwords is None else list(stopwords)
        return cls(stem=stem, rules=rules, stopset=build_stopset(entries, stem, rules))

    def __call__(self, text: str, source_comment_id: Optional[str] = None) -> list[str]:
        stream = tokenize(normalize(text), source_comment_id)
        tokens = stream.tokens
        if self.stem:
            tokens = [light_stem(t, self.rules) for t in tokens]
        return [t for t in tokens if t not in self.stopset]
