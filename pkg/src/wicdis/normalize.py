"""Arabic token normalization, whitespace tokenization and sentence splitting."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import NamedTuple

import regex

REMOVE_CLASSES = frozenset(
    {"diacritics", "punctuation", "madda", "digits_arabic", "digits_hindi", "latin"}
)

ALIF_VARIANTS = {"أ": "ا", "إ": "ا", "آ": "ا"}

# tatweel (U+0640) rides along with the diacritics class
_CLASS_CHARS = {
    "diacritics": r"\u064B-\u065F\u0670\u0640",
    "madda": r"\u0653",
    "punctuation": r"\p{P}\u061F\u060C\u061B",
    "digits_arabic": r"0-9",
    "digits_hindi": r"\u0660-\u0669\u06F0-\u06F9",
}
# decomposed accents go with their base letter
_LATIN = r"\p{Script=Latin}\p{M}*"

_RUN = re.compile(r"(.)\1{2,}", re.DOTALL)
_WORD = re.compile(r"\S+")
_SENTENCE_BREAK = re.compile(r"\r?\n| \.")


@dataclass(frozen=True)
class NormalizationConfig:
    unify_alif: bool = True
    extra_letter_map: dict = field(default_factory=dict)
    remove_classes: frozenset = REMOVE_CLASSES

    def __post_init__(self):
        classes = frozenset(self.remove_classes)
        unknown = classes - REMOVE_CLASSES
        if unknown:
            raise ValueError(f"unknown removal classes: {sorted(unknown)}")
        object.__setattr__(self, "remove_classes", classes)
        for k, v in self.extra_letter_map.items():
            if len(k) != 1 or len(v) != 1:
                raise ValueError(f"extra_letter_map entries must be single characters: {k!r} -> {v!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationConfig":
        kwargs = {}
        if "unify_alif" in d:
            kwargs["unify_alif"] = bool(d["unify_alif"])
        if "extra_letter_map" in d:
            kwargs["extra_letter_map"] = dict(d["extra_letter_map"])
        if "remove_classes" in d:
            kwargs["remove_classes"] = frozenset(d["remove_classes"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "unify_alif": self.unify_alif,
            "extra_letter_map": dict(sorted(self.extra_letter_map.items())),
            "remove_classes": sorted(self.remove_classes),
        }

    def __hash__(self):
        return hash((self.unify_alif, tuple(sorted(self.extra_letter_map.items())), self.remove_classes))


DEFAULT_CONFIG = NormalizationConfig()

_compiled: dict = {}


def removal_pattern(classes) -> regex.Pattern | None:
    key = frozenset(classes)
    if key not in _compiled:
        body = "".join(_CLASS_CHARS[c] for c in sorted(key - {"latin"}))
        alts = [f"[{body}]"] if body else []
        if "latin" in key:
            alts.append(_LATIN)
        _compiled[key] = regex.compile("|".join(alts)) if alts else None
    return _compiled[key]


def _squeeze(s: str) -> str:
    return _RUN.sub(r"\1", s)


def normalize_token(raw: str, cfg: NormalizationConfig = DEFAULT_CONFIG) -> str:
    """Normalize one token; the result may be empty.

    Steps run in a fixed order: strip removed classes, apply the extra letter
    map, squeeze runs longer than two to one character, unify Alif forms.
    Unifying Alifs can create a new run (``"أاا"``), so the squeeze is applied
    once more at the end to keep the function idempotent.
    """
    pat = removal_pattern(cfg.remove_classes)
    s = pat.sub("", raw) if pat is not None else raw
    if cfg.extra_letter_map:
        s = s.translate(str.maketrans(cfg.extra_letter_map))
    s = _squeeze(s)
    if cfg.unify_alif:
        unified = s.translate(str.maketrans(ALIF_VARIANTS))
        if unified != s:
            s = _squeeze(unified)
    return s


class TokenSpan(NamedTuple):
    text: str
    start: int
    end: int


def tokenize(sentence: str) -> list[TokenSpan]:
    """Split on whitespace runs, keeping character offsets into ``sentence``."""
    return [TokenSpan(m.group(), m.start(), m.end()) for m in _WORD.finditer(sentence)]


def split_sentences(text: str) -> list[str]:
    """Break on newlines and on a space followed by a period."""
    return [seg for seg in _SENTENCE_BREAK.split(text) if seg.strip()]
