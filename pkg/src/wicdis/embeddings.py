"""Fixed-dimension embedding tables in word2vec text format."""

from __future__ import annotations

import gzip
import io
import logging
import math
import os
from typing import BinaryIO, Iterable

import numpy as np

logger = logging.getLogger(__name__)


class EmbeddingFormatError(ValueError):
    """Malformed word2vec text input. ``lineno`` is 1-based."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class EmbeddingTable:
    """Immutable token -> vector map backed by one float32 matrix.

    Rows are stored in float32; similarity math upcasts to float64.
    """

    def __init__(self, tokens: list[str], vectors: np.ndarray, name: str = "",
                 duplicates: int = 0):
        vectors = np.asarray(vectors, dtype=np.float32)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise ValueError(f"need a ({len(tokens)}, dim) matrix, got shape {vectors.shape}")
        if vectors.shape[1] < 1:
            raise ValueError("dimension must be positive")
        self._tokens = list(tokens)
        self._index = {tok: i for i, tok in enumerate(self._tokens)}
        if len(self._index) != len(self._tokens):
            raise ValueError("tokens must be unique")
        vectors.setflags(write=False)
        self._vectors = vectors
        self.name = name
        self.duplicates = duplicates

    @property
    def dimension(self) -> int:
        return self._vectors.shape[1]

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    @property
    def vectors(self) -> np.ndarray:
        return self._vectors

    def __len__(self):
        return len(self._tokens)

    def __contains__(self, token):
        return token in self._index

    def __iter__(self):
        return iter(self._tokens)

    def get(self, token: str) -> np.ndarray | None:
        i = self._index.get(token)
        return None if i is None else self._vectors[i]

    def row(self, token: str) -> int | None:
        return self._index.get(token)

    def __repr__(self):
        return f"EmbeddingTable(name={self.name!r}, size={len(self)}, dimension={self.dimension})"


def lookup(table: EmbeddingTable, token: str) -> np.ndarray | None:
    """Exact-match lookup; ``None`` when the token is absent."""
    return table.get(token)


def cosine(a, b) -> float | None:
    """Cosine similarity in float64, or ``None`` if either vector has zero norm."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        return None
    sim = float(np.dot(a, b)) / (na * nb)
    return min(1.0, max(-1.0, sim))


def _open_binary(source) -> tuple[BinaryIO, bool]:
    if isinstance(source, (str, os.PathLike)):
        path = os.fspath(source)
        if path.endswith(".gz"):
            return gzip.open(path, "rb"), True
        return open(path, "rb"), True
    if isinstance(source, (bytes, bytearray)):
        return io.BytesIO(source), True
    return source, False


def _decode(raw: bytes, lineno: int) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EmbeddingFormatError(lineno, f"invalid UTF-8 ({exc.reason} at byte {exc.start})") from None


def _diagnose(parts: list[str], dim: int, lineno: int):
    if len(parts) != dim:
        raise EmbeddingFormatError(lineno, f"expected {dim} coordinates, got {len(parts)}")
    for p in parts:
        try:
            float(p)
        except ValueError:
            raise EmbeddingFormatError(lineno, f"non-numeric coordinate {p!r}") from None
    raise EmbeddingFormatError(lineno, "unparseable coordinates")


def load_embeddings(source, name: str | None = None) -> EmbeddingTable:
    """Parse word2vec text format from a path, bytes, or binary stream.

    Paths ending in ``.gz`` are decompressed transparently. Duplicate tokens
    keep their first position but take the last vector; the number of dropped
    duplicates is logged and stored on ``table.duplicates``.
    """
    fh, owned = _open_binary(source)
    if name is None:
        name = os.path.basename(os.fspath(source)) if isinstance(source, (str, os.PathLike)) else ""
    try:
        header = _decode(fh.readline(), 1).split()
        if len(header) != 2:
            raise EmbeddingFormatError(1, "header must be '<count> <dimension>'")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise EmbeddingFormatError(1, f"non-integer header {' '.join(header)!r}") from None
        if count < 0 or dim < 1:
            raise EmbeddingFormatError(1, f"invalid header values count={count} dimension={dim}")

        matrix = np.empty((max(count, 1), dim), dtype=np.float32)
        tokens: list[str] = []
        index: dict[str, int] = {}
        duplicates = 0
        lineno = 1
        for raw in fh:
            lineno += 1
            parts = _decode(raw, lineno).split()
            if not parts:
                continue
            token, coords = parts[0], parts[1:]
            try:
                vec = np.array(coords, dtype=np.float64)
            except ValueError:
                _diagnose(coords, dim, lineno)
            if vec.shape[0] != dim:
                _diagnose(coords, dim, lineno)
            if not np.isfinite(vec).all():
                raise EmbeddingFormatError(lineno, "non-finite coordinate")
            row = index.get(token)
            if row is not None:
                duplicates += 1
            else:
                row = len(tokens)
                if row >= matrix.shape[0]:
                    matrix = np.resize(matrix, (2 * matrix.shape[0], dim))
                index[token] = row
                tokens.append(token)
            matrix[row] = vec
    finally:
        if owned:
            fh.close()

    if duplicates:
        logger.warning("%s: %d duplicate token(s) dropped (last occurrence kept)", name or "table", duplicates)
    if len(tokens) + duplicates != count:
        logger.warning("%s: header declares %d entries, read %d", name or "table", count, len(tokens) + duplicates)
    if len(tokens) < matrix.shape[0]:
        matrix = matrix[:len(tokens)].copy()
    return EmbeddingTable(tokens, matrix, name=name, duplicates=duplicates)


def _format_rows(table: EmbeddingTable, order: Iterable[str]):
    fmt = " ".join(["%.9g"] * table.dimension)
    vectors = table.vectors
    for tok in order:
        yield tok + " " + fmt % tuple(vectors[table.row(tok)].tolist()) + "\n"


def write_embeddings(table: EmbeddingTable, dest, sort: bool = False) -> None:
    """Write ``table`` in word2vec text format.

    Coordinates use 9 significant digits, enough to round-trip float32.
    """
    order = sorted(table) if sort else list(table)
    if isinstance(dest, (str, os.PathLike)):
        path = os.fspath(dest)
        opener = gzip.open if path.endswith(".gz") else open
        with opener(path, "wt", encoding="utf-8", newline="\n") as fh:
            _write(fh, table, order)
    else:
        _write(dest, table, order)


def _write(fh, table, order):
    fh.write(f"{len(table)} {table.dimension}\n")
    for line in _format_rows(table, order):
        fh.write(line)


def dumps_embeddings(table: EmbeddingTable, sort: bool = False) -> str:
    buf = io.StringIO()
    _write(buf, table, sorted(table) if sort else list(table))
    return buf.getvalue()
