"""Sentence-pair classification by pooled context similarity."""

from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Optional, Sequence

import numpy as np

from .embeddings import EmbeddingTable, cosine
from .lemmas import lemma_vector
from .normalize import DEFAULT_CONFIG, NormalizationConfig, TokenSpan, normalize_token, tokenize

POOLINGS = ("min", "max", "mean", "std")


class TargetNotFound(ValueError):
    pass


@dataclass(frozen=True)
class WicInstance:
    id: str
    sentence1: str
    sentence2: str
    span1: tuple[int, int]
    span2: tuple[int, int]
    gold: Optional[bool] = None


@dataclass(frozen=True)
class Params:
    context_size: int
    pooling: str
    threshold: float
    stop_words: bool

    def __post_init__(self):
        if isinstance(self.context_size, bool) or not isinstance(self.context_size, int) \
                or self.context_size < 1:
            raise ValueError(f"context_size must be a positive integer, got {self.context_size!r}")
        if self.pooling not in POOLINGS:
            raise ValueError(f"pooling must be one of {POOLINGS}, got {self.pooling!r}")
        if not isinstance(self.stop_words, bool):
            raise ValueError("stop_words must be a boolean")

    def to_dict(self):
        return {
            "context_size": self.context_size,
            "pooling": self.pooling,
            "threshold": self.threshold,
            "stop_words": self.stop_words,
        }


@dataclass(frozen=True)
class Prediction:
    id: str
    similarity: Optional[float]
    label: bool
    degenerate: bool = False


def load_stoplist(path) -> frozenset:
    """Newline-delimited UTF-8 word list; blank lines and ``#`` comments skipped."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(w.strip() for w in fh if w.strip() and not w.lstrip().startswith("#"))


def default_stoplist() -> frozenset:
    """Small bundled list of Arabic functional words (normalized forms)."""
    ref = resources.files("wicdis").joinpath("data/stopwords_ar.txt")
    with resources.as_file(ref) as path:
        return load_stoplist(path)


class WordSource:
    """Vectors straight from a word table."""

    def __init__(self, table: EmbeddingTable):
        self.table = table
        self.dimension = table.dimension

    def __call__(self, token):
        return self.table.get(token)


class LemmaSource:
    """Vectors through each token's lemma."""

    def __init__(self, lm, lemma_table: EmbeddingTable, word_table: EmbeddingTable | None = None):
        self.lm = lm
        self.lemma_table = lemma_table
        self.word_table = word_table
        self.dimension = lemma_table.dimension

    def __call__(self, token):
        return lemma_vector(token, self.lm, self.lemma_table, self.word_table)


VectorSource = Callable[[str], Optional[np.ndarray]]


def locate_target(tokens: Sequence[TokenSpan], span: tuple[int, int]) -> int:
    """Index of the token overlapping ``span`` the most; earlier token on ties."""
    start, end = span
    best, best_overlap = -1, 0
    for i, tok in enumerate(tokens):
        overlap = min(end, tok.end) - max(start, tok.start)
        if overlap > best_overlap:
            best, best_overlap = i, overlap
    if best < 0:
        raise TargetNotFound(f"no token overlaps span {span}")
    return best


def extract_context(tokens: Sequence, target_idx: int, n: int) -> list:
    if not 0 <= target_idx < len(tokens):
        raise IndexError(target_idx)
    return list(tokens[max(0, target_idx - n):target_idx]) + list(tokens[target_idx + 1:target_idx + 1 + n])


def pool(vectors: np.ndarray, how: str) -> np.ndarray:
    """Elementwise pooling over the rows of a (k, dim) float64 array."""
    if how == "min":
        return vectors.min(axis=0)
    if how == "max":
        return vectors.max(axis=0)
    if how == "mean":
        return vectors.mean(axis=0)
    if how == "std":
        return vectors.std(axis=0)
    raise ValueError(f"unknown pooling {how!r}")


def filter_context(words: Sequence[str], stop_words: bool, stoplist, cfg=DEFAULT_CONFIG) -> list[str]:
    """Normalize context words and optionally drop functional words.

    If dropping functional words would leave nothing, the unfiltered
    normalized words are kept instead.
    """
    normed = [t for t in (normalize_token(w, cfg) for w in words) if t]
    if stop_words and stoplist:
        kept = [t for t in normed if t not in stoplist]
        if kept:
            return kept
    return normed


def context_matrix(words: Sequence[str], source: VectorSource) -> np.ndarray | None:
    vecs = [v for v in map(source, words) if v is not None]
    if not vecs:
        return None
    return np.asarray(vecs, dtype=np.float64)


def context_vector(context_tokens: Sequence, params: Params, source: VectorSource,
                   stoplist=frozenset(), cfg: NormalizationConfig = DEFAULT_CONFIG):
    """Pooled vector for a context, or ``None`` when no token has a vector."""
    words = [t.text if isinstance(t, TokenSpan) else t for t in context_tokens]
    mat = context_matrix(filter_context(words, params.stop_words, stoplist, cfg), source)
    if mat is None:
        return None
    return pool(mat, params.pooling)


def decide(similarity: float | None, threshold: float) -> tuple[bool, bool]:
    """Return ``(label, degenerate)``; undefined similarity means FALSE."""
    if similarity is None:
        return False, True
    return similarity >= threshold, False


def pair_contexts(inst: WicInstance, n: int):
    """Raw context words for both sentences of ``inst``."""
    out = []
    for sentence, span in ((inst.sentence1, inst.span1), (inst.sentence2, inst.span2)):
        toks = tokenize(sentence)
        try:
            idx = locate_target(toks, span)
        except TargetNotFound as exc:
            raise TargetNotFound(f"{inst.id}: {exc}") from None
        out.append([t.text for t in extract_context(toks, idx, n)])
    return out


def similarity_of(v1, v2) -> float | None:
    if v1 is None or v2 is None:
        return None
    return cosine(v1, v2)


def classify_pair(inst: WicInstance, params: Params, source: VectorSource,
                  stoplist=frozenset(), cfg: NormalizationConfig = DEFAULT_CONFIG) -> Prediction:
    ctx1, ctx2 = pair_contexts(inst, params.context_size)
    v1 = context_vector(ctx1, params, source, stoplist, cfg)
    v2 = context_vector(ctx2, params, source, stoplist, cfg)
    sim = similarity_of(v1, v2)
    label, degenerate = decide(sim, params.threshold)
    return Prediction(inst.id, sim, label, degenerate)


def classify(instances, params: Params, source: VectorSource, stoplist=frozenset(),
             cfg: NormalizationConfig = DEFAULT_CONFIG) -> list[Prediction]:
    return [classify_pair(inst, params, source, stoplist, cfg) for inst in instances]


def threads_from_env(default: int | None = None) -> int:
    """Worker cap from ``WICDIS_THREADS`` (falls back to CPU count)."""
    raw = os.environ.get("WICDIS_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return default or os.cpu_count() or 1
