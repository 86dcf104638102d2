"""Tokenization, part-of-speech tagging and Porter stemming.

Everything here is a pure function of its inputs. The built-in tagger is a
lexicon lookup backed by longest-suffix rules and a default tag; callers who
have better tags can feed them in through :func:`read_pretagged`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DataError

# Words may contain internal hyphens or apostrophes; any other non-space
# character is a standalone punctuation token.
_TOKEN_RE = re.compile(r"\w+(?:[-'’]\w+)*|[^\w\s]")
_TAG_RE = re.compile(r"^[A-Z0-9]+$")

# Penn tags that are not uppercase-alphanumeric, mapped onto ones that are.
_TAG_ALIASES = {"PRP$": "PRPS", "WP$": "WPS"}
_BRACKET_TAGS = {"-LRB-", "-RRB-", "-LCB-", "-RCB-", "-LSB-", "-RSB-", "-NONE-"}


@dataclass(frozen=True)
class Token:
    text: str
    char_start: int
    char_end: int


@dataclass(frozen=True)
class TaggedToken:
    token: Token
    pos: str

    def __post_init__(self):
        if not _TAG_RE.match(self.pos):
            raise ValueError(f"invalid POS tag {self.pos!r} for {self.token.text!r}")

    @property
    def text(self) -> str:
        return self.token.text


@dataclass(frozen=True)
class TaggerConfig:
    """Lexicon, suffix rules and fallback tag for :func:`pos_tag`.

    Lexicon keys are stored case-folded. Suffix rules are kept sorted
    longest-first so the first hit is the longest match.
    """

    lexicon: dict[str, str] = field(default_factory=dict)
    suffix_rules: tuple[tuple[str, str], ...] = ()
    default_pos: str = "NN"

    def __post_init__(self):
        lex = {w.casefold(): normalize_tag(t) for w, t in self.lexicon.items()}
        object.__setattr__(self, "lexicon", lex)
        rules = [(s.casefold(), normalize_tag(t)) for s, t in self.suffix_rules]
        # stable sort: equal-length suffixes keep their file order
        rules.sort(key=lambda r: -len(r[0]))
        object.__setattr__(self, "suffix_rules", tuple(rules))
        if not _TAG_RE.match(self.default_pos):
            raise ValueError(f"invalid default tag {self.default_pos!r}")

    def tag_word(self, word: str) -> str:
        key = word.casefold()
        tag = self.lexicon.get(key)
        if tag is not None:
            return tag
        for suffix, tag in self.suffix_rules:
            if key.endswith(suffix):
                return tag
        return self.default_pos


def normalize_tag(tag: str) -> str:
    """Map a Penn tag onto the uppercase-alphanumeric inventory used here.

    ``PRP$``/``WP$`` become ``PRPS``/``WPS``; punctuation tags (``.``, ``,``,
    ``-LRB-`` ...) collapse to ``SYM``.
    """
    tag = tag.strip()
    if tag in _TAG_ALIASES:
        return _TAG_ALIASES[tag]
    upper = tag.upper()
    if _TAG_RE.match(upper):
        return upper
    if tag in _BRACKET_TAGS or (tag and not any(c.isalnum() for c in tag)):
        return "SYM"
    raise DataError(f"cannot interpret POS tag {tag!r}")


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into word and punctuation tokens with character spans.

    >>> [t.text for t in tokenize("Keyphrase extraction works.")]
    ['Keyphrase', 'extraction', 'works', '.']
    """
    return [Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def pos_tag(tokens: Iterable[Token], config: TaggerConfig | None = None) -> list[TaggedToken]:
    if config is None:
        config = default_tagger_config()
    return [TaggedToken(tok, config.tag_word(tok.text)) for tok in tokens]


def tag_text(text: str, config: TaggerConfig | None = None) -> list[TaggedToken]:
    return pos_tag(tokenize(text), config)


# ---------------------------------------------------------------------------
# Lexicon / suffix-rule / pre-tagged file formats
# ---------------------------------------------------------------------------


def _iter_tsv(lines: Iterable[str], what: str) -> Iterator[tuple[str, str]]:
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1].strip():
            raise DataError(f"{what} line {lineno}: expected '<entry><TAB><POS>', got {line!r}")
        yield parts[0], parts[1].strip()


def parse_lexicon(lines: Iterable[str]) -> dict[str, str]:
    return dict(_iter_tsv(lines, "lexicon"))


def parse_suffix_rules(lines: Iterable[str]) -> list[tuple[str, str]]:
    return list(_iter_tsv(lines, "suffix rules"))


def load_tagger_config(lexicon_path: str | Path, suffix_path: str | Path | None = None,
                       default_pos: str = "NN") -> TaggerConfig:
    with open(lexicon_path, encoding="utf-8") as fh:
        lexicon = parse_lexicon(fh)
    rules: list[tuple[str, str]] = []
    if suffix_path is not None:
        with open(suffix_path, encoding="utf-8") as fh:
            rules = parse_suffix_rules(fh)
    return TaggerConfig(lexicon, tuple(rules), default_pos)


@lru_cache(maxsize=1)
def default_tagger_config() -> TaggerConfig:
    """The bundled English lexicon and suffix table."""
    data = resources.files("keyrank") / "data"
    lexicon = parse_lexicon(
        (data / "lexicon.tsv").read_text(encoding="utf-8").splitlines())
    rules = parse_suffix_rules(
        (data / "suffixes.tsv").read_text(encoding="utf-8").splitlines())
    return TaggerConfig(lexicon, tuple(rules), "NN")


def read_pretagged(lines: Iterable[str]) -> list[tuple[str, list[TaggedToken]]]:
    """Parse ``surface<TAB>POS`` lines, blank line between documents.

    Each document's text is rebuilt by joining surfaces with single spaces,
    and token spans point into that text. Returns ``(text, tagged)`` pairs.
    """
    docs: list[tuple[str, list[TaggedToken]]] = []
    surfaces: list[tuple[str, str]] = []

    def flush():
        if not surfaces:
            return
        tagged, pos = [], 0
        for surface, tag in surfaces:
            tagged.append(TaggedToken(Token(surface, pos, pos + len(surface)), normalize_tag(tag)))
            pos += len(surface) + 1
        docs.append((" ".join(s for s, _ in surfaces), tagged))
        surfaces.clear()

    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            flush()
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise DataError(f"pre-tagged line {lineno}: expected 'surface<TAB>POS', got {line!r}")
        surface = parts[0].strip()
        if any(c.isspace() for c in surface):
            raise DataError(f"pre-tagged line {lineno}: surface {surface!r} contains whitespace")
        surfaces.append((surface, parts[1]))
    flush()
    return docs


# ---------------------------------------------------------------------------
# Porter stemmer (original 1980 algorithm)
# ---------------------------------------------------------------------------


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in "aeiou":
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of VC sequences in ``stem`` ([C](VC)^m[V])."""
    m, prev_vowel = 0, False
    for i in range(len(stem)):
        vowel = not _is_consonant(stem, i)
        if prev_vowel and not vowel:
            m += 1
        prev_vowel = vowel
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word: str) -> bool:
    return len(word) >= 2 and word[-1] == word[-2] and _is_consonant(word, len(word) - 1)


def _ends_cvc(word: str) -> bool:
    n = len(word)
    return (n >= 3 and _is_consonant(word, n - 3) and not _is_consonant(word, n - 2)
            and _is_consonant(word, n - 1) and word[-1] not in "wxy")


def _apply_rules(word: str, rules, condition) -> str:
    # first suffix that matches decides, whether or not its condition holds
    for suffix, repl in rules:
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            return stem + repl if condition(stem) else word
    return word


_STEP2 = (
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
)
_STEP3 = (
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
)
_STEP4 = (
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
    "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
)
# Step 2 and 4 lists are scanned longest-first within shared endings.
_STEP2 = tuple(sorted(_STEP2, key=lambda r: -len(r[0])))
_STEP3 = tuple(sorted(_STEP3, key=lambda r: -len(r[0])))
_STEP4 = tuple(sorted(_STEP4, key=len, reverse=True))


def _step1a(w: str) -> str:
    if w.endswith("sses"):
        return w[:-2]
    if w.endswith("ies"):
        return w[:-2]
    if w.endswith("ss"):
        return w
    if w.endswith("s"):
        return w[:-1]
    return w


def _step1b(w: str) -> str:
    if w.endswith("eed"):
        return w[:-1] if _measure(w[:-3]) > 0 else w
    for suffix in ("ed", "ing"):
        if w.endswith(suffix):
            stem = w[: -len(suffix)]
            if not _has_vowel(stem):
                return w
            break
    else:
        return w
    if stem.endswith(("at", "bl", "iz")):
        return stem + "e"
    if _ends_double_consonant(stem) and stem[-1] not in "lsz":
        return stem[:-1]
    if _measure(stem) == 1 and _ends_cvc(stem):
        return stem + "e"
    return stem


def _step1c(w: str) -> str:
    if w.endswith("y") and _has_vowel(w[:-1]):
        return w[:-1] + "i"
    return w


def _step4(w: str) -> str:
    for suffix in _STEP4:
        if w.endswith(suffix):
            stem = w[: -len(suffix)]
            if _measure(stem) <= 1:
                return w
            if suffix == "ion" and not stem.endswith(("s", "t")):
                return w
            return stem
    return w


def _step5(w: str) -> str:
    if w.endswith("e"):
        stem = w[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            w = stem
    if w.endswith("ll") and _measure(w) > 1:
        w = w[:-1]
    return w


@lru_cache(maxsize=65536)
def stem(word: str) -> str:
    """Lowercase Porter stem of ``word``.

    >>> stem("caresses"), stem("ponies"), stem("sky")
    ('caress', 'poni', 'sky')
    """
    w = word.lower()
    if not w:
        return w
    w = _step1a(w)
    w = _step1b(w)
    w = _step1c(w)
    w = _apply_rules(w, _STEP2, lambda s: _measure(s) > 0)
    w = _apply_rules(w, _STEP3, lambda s: _measure(s) > 0)
    w = _step4(w)
    w = _step5(w)
    return w


def stem_phrase(words: Iterable[str]) -> str:
    return " ".join(stem(w.lower()) for w in words)
