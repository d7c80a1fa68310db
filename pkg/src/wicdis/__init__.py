"""Word-in-context disambiguation with static word and lemma embeddings."""

__version__ = "0.1.0"

from .embeddings import EmbeddingTable, cosine, load_embeddings, lookup, write_embeddings
from .evaluation import CrossTab, MetricsReport, compute_metrics, cross_tabulate
from .lemmas import LemmaStats, build_lemma_table, lemma_vector, load_lemma_map
from .normalize import NormalizationConfig, TokenSpan, normalize_token, split_sentences, tokenize
from .tuning import GridSpec, run_grid, select_best
from .wic import (LemmaSource, Params, Prediction, WicInstance, WordSource, classify,
                  classify_pair, context_vector, extract_context, locate_target)

__all__ = [
    "EmbeddingTable", "cosine", "load_embeddings", "lookup", "write_embeddings",
    "CrossTab", "MetricsReport", "compute_metrics", "cross_tabulate",
    "GridSpec", "run_grid", "select_best",
    "LemmaStats", "build_lemma_table", "lemma_vector", "load_lemma_map",
    "NormalizationConfig", "TokenSpan", "normalize_token", "split_sentences", "tokenize",
    "LemmaSource", "Params", "Prediction", "WicInstance", "WordSource", "classify",
    "classify_pair", "context_vector", "extract_context", "locate_target",
]
