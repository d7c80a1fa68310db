"""Lemma2Vec construction: average word vectors over each lemma's word forms."""

from __future__ import annotations

import dataclasses
import gzip
import json
import logging
import os
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingTable

logger = logging.getLogger(__name__)

STATS_SCHEMA = {
    "type": "object",
    "properties": {
        "unique_word_forms": {"type": "integer", "minimum": 0},
        "unique_lemmas": {"type": "integer", "minimum": 0},
        "words_not_lemmatized": {"type": "integer", "minimum": 0},
        "collisions": {"type": "integer", "minimum": 0},
    },
    "required": ["unique_word_forms", "unique_lemmas", "words_not_lemmatized", "collisions"],
    "additionalProperties": False,
}


class LemmaMapError(ValueError):
    pass


@dataclass(frozen=True)
class LemmaStats:
    unique_word_forms: int
    unique_lemmas: int
    words_not_lemmatized: int
    collisions: int = 0

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def load_lemma_map(source) -> dict[str, str]:
    """Read ``wordform<TAB>lemma`` lines. Later duplicates override earlier ones."""
    if isinstance(source, (str, os.PathLike)):
        path = os.fspath(source)
        opener = gzip.open if path.endswith(".gz") else open
        with opener(path, "rb") as fh:
            data = fh.read()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        data = source.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        lineno = data[:exc.start].count(b"\n") + 1
        raise LemmaMapError(f"line {lineno}: invalid UTF-8") from None

    lm: dict[str, str] = {}
    duplicates = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise LemmaMapError(f"line {lineno}: expected 'wordform<TAB>lemma'")
        word, lemma = fields
        if not word or not lemma or len(word.split()) != 1 or len(lemma.split()) != 1 \
                or word.strip() != word or lemma.strip() != lemma:
            raise LemmaMapError(f"line {lineno}: word form and lemma must be non-empty and whitespace-free")
        if word in lm:
            duplicates += 1
        lm[word] = lemma
    if duplicates:
        logger.warning("lemma map: %d duplicate word form line(s), last one kept", duplicates)
    return lm


def build_lemma_table(emb: EmbeddingTable, lm: dict[str, str], name: str | None = None):
    """Return ``(lemma_table, stats)``.

    Each lemma gets the float64 mean of its word forms' vectors. Words missing
    from ``lm`` keep their own vector under their own key, unless that key is
    already a lemma, in which case the lemma wins and a collision is counted.
    Keys appear in order of first occurrence in ``emb``.
    """
    lemma_ids: dict[str, int] = {}
    member_rows: list[int] = []
    member_lemma: list[int] = []
    fallback: list[str] = []
    order: list[tuple[bool, str]] = []
    for row, word in enumerate(emb):
        lemma = lm.get(word)
        if lemma is None:
            fallback.append(word)
            order.append((False, word))
            continue
        if lemma not in lemma_ids:
            lemma_ids[lemma] = len(lemma_ids)
            order.append((True, lemma))
        member_rows.append(row)
        member_lemma.append(lemma_ids[lemma])

    dim = emb.dimension
    sums = np.zeros((len(lemma_ids), dim), dtype=np.float64)
    counts = np.bincount(np.asarray(member_lemma, dtype=np.intp), minlength=len(lemma_ids))
    if member_rows:
        members = np.asarray(member_rows, dtype=np.intp)
        ids = np.asarray(member_lemma, dtype=np.intp)
        perm = np.argsort(ids, kind="stable")
        starts = np.flatnonzero(np.r_[True, np.diff(ids[perm]) != 0])
        sums[ids[perm][starts]] = np.add.reduceat(
            emb.vectors[members[perm]].astype(np.float64), starts, axis=0)
    means = sums / np.maximum(counts, 1)[:, None]

    tokens: list[str] = []
    rows: list[np.ndarray] = []
    collisions = 0
    for is_lemma, key in order:
        if is_lemma:
            tokens.append(key)
            rows.append(means[lemma_ids[key]])
        elif key in lemma_ids:
            collisions += 1
        else:
            tokens.append(key)
            rows.append(emb.get(key))
    if collisions:
        logger.warning("%d fallback word form(s) collide with lemma keys; lemma vectors kept", collisions)

    matrix = np.vstack(rows).astype(np.float32) if rows else np.zeros((0, dim), dtype=np.float32)
    table = EmbeddingTable(tokens, matrix, name=name if name is not None else f"lemma2vec({emb.name})")
    stats = LemmaStats(
        unique_word_forms=len(emb),
        unique_lemmas=len(lemma_ids),
        words_not_lemmatized=len(fallback),
        collisions=collisions,
    )
    return table, stats


def lemma_vector(token: str, lm: dict[str, str], lemma_table: EmbeddingTable,
                 word_table: EmbeddingTable | None = None) -> np.ndarray | None:
    """Vector for ``token`` through its lemma; fallback keys are looked up directly."""
    lemma = lm.get(token)
    if lemma is not None:
        return lemma_table.get(lemma)
    return lemma_table.get(token)
