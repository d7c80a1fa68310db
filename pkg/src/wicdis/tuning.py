"""Exhaustive search over context size, pooling, threshold and stop-word removal."""

from __future__ import annotations

import csv
import io
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Sequence

import numpy as np

from .evaluation import MetricsReport, counts_from_labels, metrics_from_counts, percent
from .normalize import DEFAULT_CONFIG, NormalizationConfig
from .wic import (POOLINGS, Params, VectorSource, WicInstance, context_matrix, filter_context,
                  pair_contexts, pool, similarity_of, threads_from_env)

SELECTION_RULE = (
    "argmax of macro-F1 = (f1_true + f1_false) / 2; ties broken by smaller context_size, "
    "then lower threshold, then pooling order min<max<mean<std, then stop_words=true first"
)
CURVE_HEADER = ["context_size", "pooling", "stop_words", "threshold", "f1_true", "f1_false", "accuracy"]


def threshold_range(start=0.55, stop=0.85, step=0.01) -> list[float]:
    """Inclusive arithmetic range computed in decimal to avoid float drift."""
    start, stop, step = Decimal(str(start)), Decimal(str(stop)), Decimal(str(step))
    if step <= 0:
        raise ValueError("step must be positive")
    out = []
    x = start
    while x <= stop:
        out.append(float(x))
        x += step
    return out


@dataclass(frozen=True)
class GridSpec:
    context_sizes: tuple = tuple(range(1, 11))
    thresholds: tuple = tuple(threshold_range())
    poolings: tuple = POOLINGS
    stop_words_options: tuple = (True, False)

    def __post_init__(self):
        for name in ("context_sizes", "thresholds", "poolings", "stop_words_options"):
            value = tuple(getattr(self, name))
            if not value:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, value)
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError("thresholds must be strictly increasing")
        for p in self.poolings:
            if p not in POOLINGS:
                raise ValueError(f"unknown pooling {p!r}")
        for n in self.context_sizes:
            Params(n, "min", 0.5, True)

    def __len__(self):
        return (len(self.context_sizes) * len(self.thresholds) * len(self.poolings)
                * len(self.stop_words_options))

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        kw = {}
        if "context_sizes" in d:
            kw["context_sizes"] = tuple(int(n) for n in d["context_sizes"])
        if "thresholds" in d:
            kw["thresholds"] = tuple(float(t) for t in d["thresholds"])
        elif any(k in d for k in ("threshold_start", "threshold_stop", "threshold_step")):
            kw["thresholds"] = tuple(threshold_range(d.get("threshold_start", 0.55),
                                                     d.get("threshold_stop", 0.85),
                                                     d.get("threshold_step", 0.01)))
        if "poolings" in d:
            kw["poolings"] = tuple(d["poolings"])
        if "stop_words_options" in d:
            kw["stop_words_options"] = tuple(bool(x) for x in d["stop_words_options"])
        return cls(**kw)

    def to_dict(self):
        return {
            "context_sizes": list(self.context_sizes),
            "thresholds": list(self.thresholds),
            "poolings": list(self.poolings),
            "stop_words_options": list(self.stop_words_options),
        }


@dataclass(frozen=True)
class GridRow:
    params: Params
    metrics: MetricsReport = field(repr=False)

    @property
    def f1_true(self):
        return self.metrics.true.f1

    @property
    def f1_false(self):
        return self.metrics.false.f1

    @property
    def precision_true(self):
        return self.metrics.true.precision

    @property
    def recall_true(self):
        return self.metrics.true.recall

    @property
    def precision_false(self):
        return self.metrics.false.precision

    @property
    def recall_false(self):
        return self.metrics.false.recall

    @property
    def accuracy(self):
        return self.metrics.accuracy

    @property
    def macro_f1(self):
        return self.metrics.macro_f1

    @property
    def degenerate_count(self):
        return self.metrics.degenerate_count


def group_similarities(instances: Sequence[WicInstance], n: int, stop_words: bool,
                       poolings: Sequence[str], source: VectorSource, stoplist,
                       cfg: NormalizationConfig = DEFAULT_CONFIG) -> dict:
    """Similarities for every pooling at one (context size, stop-word) setting.

    Returns ``{pooling: float64 array}`` with NaN marking undefined similarity.
    """
    sims = {p: np.full(len(instances), np.nan) for p in poolings}
    for i, inst in enumerate(instances):
        mats = [context_matrix(filter_context(words, stop_words, stoplist, cfg), source)
                for words in pair_contexts(inst, n)]
        for p in poolings:
            v1, v2 = (None if m is None else pool(m, p) for m in mats)
            s = similarity_of(v1, v2)
            if s is not None:
                sims[p][i] = s
    return sims


def rows_for_group(sims: np.ndarray, golds: np.ndarray, thresholds, params_of) -> list[GridRow]:
    defined = ~np.isnan(sims)
    degenerate = int((~defined).sum())
    rows = []
    filled = np.where(defined, sims, -np.inf)
    for t in thresholds:
        labels = filled >= t
        tp, fp, fn, tn = counts_from_labels(labels.tolist(), golds.tolist())
        params = params_of(t)
        rows.append(GridRow(params, metrics_from_counts(tp, fp, fn, tn, degenerate,
                                                        params=params.to_dict())))
    return rows


def run_grid(instances: Sequence[WicInstance], spec: GridSpec, source: VectorSource,
             stoplist=frozenset(), cfg: NormalizationConfig = DEFAULT_CONFIG,
             threads: int | None = None) -> list[GridRow]:
    """Evaluate every grid cell on gold-labelled ``instances``.

    Rows come back ordered by (context_size, pooling, stop_words, threshold)
    following the order of each axis in ``spec``.
    """
    if not instances:
        raise ValueError("no instances to tune on")
    unlabeled = [inst.id for inst in instances if inst.gold is None]
    if unlabeled:
        raise ValueError(f"instances without gold tag: {', '.join(unlabeled[:10])}"
                         + (" ..." if len(unlabeled) > 10 else ""))
    golds = np.array([inst.gold for inst in instances], dtype=bool)
    groups = list(itertools.product(spec.context_sizes, spec.stop_words_options))

    def work(key):
        n, sw = key
        return key, group_similarities(instances, n, sw, spec.poolings, source, stoplist, cfg)

    workers = min(threads or threads_from_env(), len(groups))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool_:
            results = dict(pool_.map(work, groups))
    else:
        results = dict(map(work, groups))

    rows: list[GridRow] = []
    for n in spec.context_sizes:
        for p in spec.poolings:
            for sw in spec.stop_words_options:
                rows.extend(rows_for_group(
                    results[(n, sw)][p], golds, spec.thresholds,
                    lambda t, n=n, p=p, sw=sw: Params(n, p, t, sw)))
    return rows


def selection_key(row: GridRow):
    p = row.params
    return (-row.macro_f1, p.context_size, p.threshold, POOLINGS.index(p.pooling), not p.stop_words)


def select_best(rows: Sequence[GridRow]) -> Params:
    if not rows:
        raise ValueError("no grid rows")
    return min(rows, key=selection_key).params


def top_k(rows: Sequence[GridRow], k: int = 10) -> list[GridRow]:
    return sorted(rows, key=selection_key)[:k]


def curve_csv(rows: Sequence[GridRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for r in rows:
        p = r.params
        w.writerow([p.context_size, p.pooling, "yes" if p.stop_words else "no", f"{p.threshold:.2f}",
                    f"{r.f1_true:.6f}", f"{r.f1_false:.6f}", f"{r.accuracy:.6f}"])
    return buf.getvalue()


def top_k_table(rows: Sequence[GridRow], k: int = 10) -> str:
    """Best ``k`` rows as a fixed-width table, scores as whole percentages."""
    head = (f"{'rank':>4} {'ctx':>3} {'pool':<4} {'thr':>5} {'stop':<4} "
            f"{'P_T':>4} {'R_T':>4} {'F1_T':>4} {'P_F':>4} {'R_F':>4} {'F1_F':>4} "
            f"{'acc':>4} {'macroF1':>8} {'degen':>5}")
    lines = [head]
    for i, r in enumerate(top_k(rows, k), 1):
        p = r.params
        lines.append(
            f"{i:>4} {p.context_size:>3} {p.pooling:<4} {p.threshold:>5.2f} "
            f"{'yes' if p.stop_words else 'no':<4} "
            f"{percent(r.precision_true):>4} {percent(r.recall_true):>4} {percent(r.f1_true):>4} "
            f"{percent(r.precision_false):>4} {percent(r.recall_false):>4} {percent(r.f1_false):>4} "
            f"{percent(r.accuracy):>4} {r.macro_f1:>8.6f} {r.degenerate_count:>5}")
    return "\n".join(lines) + "\n"
