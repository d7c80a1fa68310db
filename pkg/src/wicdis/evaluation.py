"""Per-class precision/recall/F1, accuracy, and two-model contingency tables."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Optional, Sequence

from .wic import Prediction

CLASSES = (("TRUE", True), ("FALSE", False))
CELLS = ("correct_correct", "correct_wrong", "wrong_correct", "wrong_wrong")


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricsReport:
    true: ClassScores
    false: ClassScores
    accuracy: float
    tp: int
    fp: int
    fn: int
    tn: int
    n: int
    degenerate_count: int = 0
    zero_division_flags: tuple = ()
    model: str = ""
    params: Optional[dict] = None

    @property
    def macro_f1(self) -> float:
        return (self.true.f1 + self.false.f1) / 2


@dataclass(frozen=True)
class CrossTab:
    """Cells keyed by ``CELLS``; each value is ``(gold_true, gold_false)``."""
    cells: dict
    label_a: str = ""
    label_b: str = ""

    def total(self, cell: str) -> int:
        return sum(self.cells[cell])

    @property
    def n(self) -> int:
        return sum(self.total(c) for c in CELLS)

    def gold_totals(self) -> tuple[int, int]:
        return (sum(self.cells[c][0] for c in CELLS), sum(self.cells[c][1] for c in CELLS))


def _ratio(num, den, flag, flags):
    if den == 0:
        flags.append(flag)
        return 0.0
    return num / den


def _scores(tp, fp, fn, cls, flags) -> ClassScores:
    p = _ratio(tp, tp + fp, f"precision_{cls}", flags)
    r = _ratio(tp, tp + fn, f"recall_{cls}", flags)
    if p + r == 0:
        flags.append(f"f1_{cls}")
        f1 = 0.0
    else:
        f1 = 2 * p * r / (p + r)
    return ClassScores(p, r, f1)


def _check_ids(preds: Sequence[Prediction], gold: Mapping[str, bool]):
    seen = set()
    for p in preds:
        if p.id in seen:
            raise EvaluationError(f"duplicate prediction id {p.id!r}")
        seen.add(p.id)
    missing = sorted(seen - set(gold))
    if missing:
        raise EvaluationError(f"no gold tag for ids: {', '.join(missing)}")


def counts_from_labels(labels, golds) -> tuple[int, int, int, int]:
    tp = fp = fn = tn = 0
    for y, g in zip(labels, golds):
        if y:
            if g:
                tp += 1
            else:
                fp += 1
        elif g:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def metrics_from_counts(tp: int, fp: int, fn: int, tn: int, degenerate_count: int = 0,
                        model: str = "", params=None) -> MetricsReport:
    flags: list[str] = []
    n = tp + fp + fn + tn
    true = _scores(tp, fp, fn, "TRUE", flags)
    false = _scores(tn, fn, fp, "FALSE", flags)
    accuracy = _ratio(tp + tn, n, "accuracy", flags)
    return MetricsReport(true, false, accuracy, tp, fp, fn, tn, n, degenerate_count,
                         tuple(flags), model, params)


def compute_metrics(preds: Sequence[Prediction], gold: Mapping[str, bool], model: str = "",
                    params=None) -> MetricsReport:
    """One-vs-rest scores for both classes; 0/0 yields 0 and a flag."""
    _check_ids(preds, gold)
    tp, fp, fn, tn = counts_from_labels([p.label for p in preds], [gold[p.id] for p in preds])
    degenerate = sum(1 for p in preds if p.degenerate)
    return metrics_from_counts(tp, fp, fn, tn, degenerate, model, params)


def cross_tabulate(preds_a: Sequence[Prediction], preds_b: Sequence[Prediction],
                   gold: Mapping[str, bool], label_a: str = "", label_b: str = "") -> CrossTab:
    a = {p.id: p.label for p in preds_a}
    b = {p.id: p.label for p in preds_b}
    if len(a) != len(preds_a) or len(b) != len(preds_b):
        raise EvaluationError("duplicate prediction ids")
    if set(a) != set(b) or set(a) != set(gold):
        problems = []
        for name, ids in (("only in A", set(a) - set(b)), ("only in B", set(b) - set(a)),
                          ("missing gold", (set(a) | set(b)) - set(gold)),
                          ("gold without predictions", set(gold) - (set(a) | set(b)))):
            if ids:
                problems.append(f"{name}: {', '.join(sorted(ids))}")
        raise EvaluationError("id sets differ; " + "; ".join(problems))
    tally = {c: [0, 0] for c in CELLS}
    for i, g in gold.items():
        ok_a = a[i] == g
        ok_b = b[i] == g
        cell = CELLS[(not ok_a) * 2 + (not ok_b)]
        tally[cell][0 if g else 1] += 1
    return CrossTab({c: tuple(v) for c, v in tally.items()}, label_a, label_b)


def percent(x: float) -> int:
    """``x`` in [0, 1] as a whole percentage, halves rounded away from zero."""
    return int((Decimal(repr(x)) * 100).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def _r6(x: float) -> float:
    return round(x, 6)


def metrics_to_dict(report: MetricsReport) -> dict:
    per_class = {}
    pct = {"accuracy": percent(report.accuracy)}
    for name, scores in (("TRUE", report.true), ("FALSE", report.false)):
        per_class[name] = {"p": _r6(scores.precision), "r": _r6(scores.recall), "f1": _r6(scores.f1)}
        pct[name] = {"p": percent(scores.precision), "r": percent(scores.recall), "f1": percent(scores.f1)}
    return {
        "model": report.model,
        "params": report.params,
        "n": report.n,
        "accuracy": _r6(report.accuracy),
        "per_class": per_class,
        "percent": pct,
        "counts": {"tp": report.tp, "fp": report.fp, "fn": report.fn, "tn": report.tn},
        "degenerate_count": report.degenerate_count,
        "zero_division_flags": list(report.zero_division_flags),
    }


_ROW_TITLES = {
    "correct_correct": "Correct {a} - Correct {b}",
    "correct_wrong": "Correct {a} - Wrong {b}",
    "wrong_correct": "Wrong {a} - Correct {b}",
    "wrong_wrong": "Wrong {a} - Wrong {b}",
}


def crosstab_to_dict(tab: CrossTab) -> dict:
    rows = []
    for c in CELLS:
        t, f = tab.cells[c]
        rows.append({"cell": c, "TRUE": t, "FALSE": f, "total": t + f})
    gt, gf = tab.gold_totals()
    return {
        "model_a": tab.label_a,
        "model_b": tab.label_b,
        "rows": rows,
        "total": {"TRUE": gt, "FALSE": gf, "total": gt + gf},
    }


def _text_metrics(report: MetricsReport) -> str:
    lines = []
    head = f"model: {report.model}" if report.model else "model: -"
    lines.append(head)
    if report.params:
        lines.append("params: " + ", ".join(f"{k}={v}" for k, v in report.params.items()))
    lines.append(f"{'':<10} {'T':>5} {'F':>5}")
    for title, attr in (("Precision", "precision"), ("Recall", "recall"), ("F1-score", "f1")):
        t = percent(getattr(report.true, attr))
        f = percent(getattr(report.false, attr))
        lines.append(f"{title:<10} {t:>5} {f:>5}")
    lines.append(f"{'Accuracy':<10} {percent(report.accuracy):>5}")
    lines.append(f"n={report.n} degenerate={report.degenerate_count}")
    if report.zero_division_flags:
        lines.append("zero division: " + ", ".join(report.zero_division_flags))
    return "\n".join(lines) + "\n"


def _text_crosstab(tab: CrossTab) -> str:
    a = tab.label_a or "A"
    b = tab.label_b or "B"
    titles = [_ROW_TITLES[c].format(a=a, b=b) for c in CELLS]
    width = max(len(t) for t in titles + ["Total"])
    lines = [f"{'':<{width}} {'TRUE':>6} {'FALSE':>6} {'Total':>6}"]
    for title, c in zip(titles, CELLS):
        t, f = tab.cells[c]
        lines.append(f"{title:<{width}} {t:>6} {f:>6} {t + f:>6}")
    gt, gf = tab.gold_totals()
    lines.append(f"{'Total':<{width}} {gt:>6} {gf:>6} {gt + gf:>6}")
    return "\n".join(lines) + "\n"


def _csv_metrics(report: MetricsReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class", "precision", "recall", "f1", "precision_pct", "recall_pct", "f1_pct"])
    for name, s in (("TRUE", report.true), ("FALSE", report.false)):
        w.writerow([name, f"{s.precision:.6f}", f"{s.recall:.6f}", f"{s.f1:.6f}",
                    percent(s.precision), percent(s.recall), percent(s.f1)])
    w.writerow(["accuracy", f"{report.accuracy:.6f}", "", "", percent(report.accuracy), "", ""])
    return buf.getvalue()


def _csv_crosstab(tab: CrossTab) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cell", "model_a", "model_b", "TRUE", "FALSE", "total"])
    for c in CELLS:
        t, f = tab.cells[c]
        w.writerow([c, tab.label_a, tab.label_b, t, f, t + f])
    return buf.getvalue()


def render_report(report, fmt: str = "json") -> bytes:
    """Serialize a ``MetricsReport`` or ``CrossTab`` as json, csv or text."""
    is_tab = isinstance(report, CrossTab)
    if fmt == "json":
        d = crosstab_to_dict(report) if is_tab else metrics_to_dict(report)
        out = json.dumps(d, indent=2, ensure_ascii=False) + "\n"
    elif fmt == "csv":
        out = _csv_crosstab(report) if is_tab else _csv_metrics(report)
    elif fmt in ("text", "text-table"):
        out = _text_crosstab(report) if is_tab else _text_metrics(report)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return out.encode("utf-8")
