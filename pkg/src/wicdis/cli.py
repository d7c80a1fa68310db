"""Command-line front end.

Settings come from an optional JSON config file (``--config``); command-line
flags override it. Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import gzip
import json
import logging
import os
import sys
from dataclasses import dataclass, field

from . import __version__
from .dataset import DatasetError, attach_gold, parse_dataset, parse_gold
from .embeddings import EmbeddingFormatError, dumps_embeddings, load_embeddings
from .evaluation import compute_metrics, cross_tabulate, metrics_to_dict, render_report
from .lemmas import LemmaMapError, build_lemma_table, load_lemma_map
from .normalize import NormalizationConfig, normalize_token, tokenize
from .tuning import SELECTION_RULE, GridSpec, curve_csv, run_grid, select_best, top_k_table
from .wic import LemmaSource, Params, Prediction, WordSource, classify, default_stoplist, load_stoplist

log = logging.getLogger("wicdis")

STOPWORD_NOTE = ("stop-word removal that would empty a context keeps the unfiltered context; "
                 "functional words are filtered after the window is taken")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class RunConfig:
    embedding_path: str | None = None
    lemma_map_path: str | None = None
    lemma_table_path: str | None = None
    mode: str = "word"
    stoplist_path: str | None = None
    normalization: NormalizationConfig = field(default_factory=NormalizationConfig)
    grid: GridSpec = field(default_factory=GridSpec)
    params: dict = field(default_factory=dict)
    output_dir: str = "."
    offsets: str = "char"
    top_k: int = 10

    def require(self, *names):
        for name in names:
            if not getattr(self, name):
                raise UsageError(f"missing required setting {name!r} (config file or flag)")
        if self.mode not in ("word", "lemma"):
            raise UsageError(f"mode must be 'word' or 'lemma', got {self.mode!r}")
        if self.mode == "lemma" and "embedding_path" in names and not self.lemma_map_path:
            raise UsageError("lemma mode requires lemma_map_path")

    def resolved_params(self) -> Params:
        missing = [k for k in ("context_size", "pooling", "threshold", "stop_words") if k not in self.params]
        if missing:
            raise UsageError(f"missing parameter(s): {', '.join(missing)}")
        stop_words = self.params["stop_words"]
        try:
            if isinstance(stop_words, str):
                stop_words = _yes_no(stop_words)
            return Params(int(self.params["context_size"]), self.params["pooling"],
                          float(self.params["threshold"]), bool(stop_words))
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(str(exc)) from None


def _yes_no(value: str) -> bool:
    v = value.lower()
    if v in ("yes", "true", "1", "y"):
        return True
    if v in ("no", "false", "0", "n"):
        return False
    raise argparse.ArgumentTypeError(f"expected yes/no, got {value!r}")


def load_config(path: str | None) -> RunConfig:
    cfg = RunConfig()
    if not path:
        return cfg
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    base = os.path.dirname(os.path.abspath(path))

    def rel(p):
        return p if p is None or os.path.isabs(p) else os.path.join(base, p)

    known = {"embedding_path", "lemma_map_path", "lemma_table_path", "mode", "stoplist_path",
             "normalization", "grid", "params", "output_dir", "offsets", "top_k"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
    try:
        for key in ("embedding_path", "lemma_map_path", "lemma_table_path", "stoplist_path"):
            if raw.get(key):
                setattr(cfg, key, rel(raw[key]))
        if "output_dir" in raw:
            cfg.output_dir = rel(raw["output_dir"])
        for key in ("mode", "offsets"):
            if key in raw:
                setattr(cfg, key, raw[key])
        if "top_k" in raw:
            cfg.top_k = int(raw["top_k"])
        if "normalization" in raw:
            cfg.normalization = NormalizationConfig.from_dict(raw["normalization"])
        if "grid" in raw:
            cfg.grid = GridSpec.from_dict(raw["grid"])
        if "params" in raw:
            cfg.params = dict(raw["params"])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad config {path}: {exc}") from None
    return cfg


def apply_flags(cfg: RunConfig, args) -> RunConfig:
    for attr, key in (("embeddings", "embedding_path"), ("lemma_map", "lemma_map_path"),
                      ("lemma_table", "lemma_table_path"), ("stoplist", "stoplist_path"),
                      ("mode", "mode"), ("out_dir", "output_dir"), ("offsets", "offsets"),
                      ("top_k", "top_k")):
        value = getattr(args, attr, None)
        if value is not None:
            setattr(cfg, key, value)
    for attr in ("context_size", "pooling", "threshold", "stop_words"):
        value = getattr(args, attr, None)
        if value is not None:
            cfg.params[attr] = value
    return cfg


# --- loading helpers -------------------------------------------------------

def _stoplist(cfg: RunConfig):
    if cfg.stoplist_path:
        return load_stoplist(cfg.stoplist_path)
    return default_stoplist()


def _source(cfg: RunConfig):
    emb = load_embeddings(cfg.embedding_path)
    if cfg.mode == "word":
        return WordSource(emb)
    lm = load_lemma_map(cfg.lemma_map_path)
    if cfg.lemma_table_path:
        lemma_table = load_embeddings(cfg.lemma_table_path)
    else:
        lemma_table, _ = build_lemma_table(emb, lm)
    return LemmaSource(lm, lemma_table, emb)


def _dataset(cfg: RunConfig, path: str):
    return parse_dataset(path, offsets=cfg.offsets)


def load_predictions(path: str) -> list[Prediction]:
    with open(path, "rb") as fh:
        try:
            items = json.loads(fh.read().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataError(f"{path}: not a JSON prediction file ({exc})") from None
    if not isinstance(items, list):
        raise DataError(f"{path}: expected a JSON array")
    preds = []
    for pos, item in enumerate(items):
        try:
            tag = str(item["tag"]).upper()
            if tag not in ("T", "F", "TRUE", "FALSE"):
                raise ValueError(tag)
            sim = item.get("similarity")
            preds.append(Prediction(str(item["id"]), None if sim is None else float(sim),
                                    tag in ("T", "TRUE"), bool(item.get("degenerate", False))))
        except (KeyError, TypeError, ValueError, AttributeError):
            raise DataError(f"{path}: bad prediction record {pos}") from None
    return preds


def predictions_json(preds) -> str:
    records = [{"id": p.id, "tag": "T" if p.label else "F", "similarity": p.similarity,
                "degenerate": p.degenerate} for p in preds]
    return json.dumps(records, ensure_ascii=False, indent=1) + "\n"


def _write_all(out_dir: str, files: dict):
    """Write every file only after all outputs were computed."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, data in files.items():
        path = name if os.path.isabs(name) else os.path.join(out_dir, name)
        if isinstance(data, str):
            data = data.encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(data)
        written.append(path)
    for path in written:
        print(path)


# --- commands ----------------------------------------------------------------

def cmd_build_lemma2vec(cfg: RunConfig, args):
    if not cfg.embedding_path or not cfg.lemma_map_path:
        raise UsageError("build-lemma2vec needs both embedding_path and lemma_map_path")
    emb = load_embeddings(cfg.embedding_path)
    lm = load_lemma_map(cfg.lemma_map_path)
    table, stats = build_lemma_table(emb, lm)
    out = args.output or os.path.join(cfg.output_dir, "lemma2vec.txt")
    stem = out[:-3] if out.endswith(".gz") else out
    stem = os.path.splitext(stem)[0]
    body = dumps_embeddings(table).encode("utf-8")
    if out.endswith(".gz"):
        body = gzip.compress(body, mtime=0)
    _write_all(cfg.output_dir, {os.path.abspath(out): body,
                                os.path.abspath(stem + ".stats.json"): stats.to_json()})


def cmd_classify(cfg: RunConfig, args):
    cfg.require("embedding_path")
    params = cfg.resolved_params()
    instances = _dataset(cfg, args.dataset)
    preds = classify(instances, params, _source(cfg), _stoplist(cfg), cfg.normalization)
    out = args.output or os.path.join(cfg.output_dir, "predictions.json")
    _write_all(cfg.output_dir, {os.path.abspath(out): predictions_json(preds)})


def cmd_tune(cfg: RunConfig, args):
    cfg.require("embedding_path")
    instances = attach_gold(_dataset(cfg, args.dataset), parse_gold(args.gold))
    rows = run_grid(instances, cfg.grid, _source(cfg), _stoplist(cfg), cfg.normalization)
    best = select_best(rows)
    best_row = next(r for r in rows if r.params == best)
    summary = {
        "mode": cfg.mode,
        "params": best.to_dict(),
        "selection_rule": SELECTION_RULE,
        "metrics": metrics_to_dict(best_row.metrics),
        "grid": cfg.grid.to_dict(),
        "rows": len(rows),
        "n": len(instances),
        "normalization": cfg.normalization.to_dict(),
        "notes": [STOPWORD_NOTE, "degenerate pairs are labelled FALSE and counted per row"],
    }
    _write_all(cfg.output_dir, {
        "grid.csv": curve_csv(rows),
        "best_params.json": json.dumps(summary, indent=2, ensure_ascii=False) + "\n",
        "topk.txt": top_k_table(rows, cfg.top_k),
    })


def cmd_evaluate(cfg: RunConfig, args):
    preds = load_predictions(args.predictions)
    gold = parse_gold(args.gold)
    report = compute_metrics(preds, gold, model=args.model or "")
    _write_all(cfg.output_dir, {
        "metrics.json": render_report(report, "json"),
        "metrics.txt": render_report(report, "text"),
    })


def cmd_compare(cfg: RunConfig, args):
    a = load_predictions(args.predictions_a)
    b = load_predictions(args.predictions_b)
    gold = parse_gold(args.gold)
    tab = cross_tabulate(a, b, gold, args.label_a or "", args.label_b or "")
    _write_all(cfg.output_dir, {
        "crosstab.json": render_report(tab, "json"),
        "crosstab.txt": render_report(tab, "text"),
    })


def cmd_normalize(cfg: RunConfig, args):
    out = sys.stdout
    for line in sys.stdin:
        words = (normalize_token(t.text, cfg.normalization) for t in tokenize(line))
        out.write(" ".join(w for w in words if w) + "\n")


# --- argument parsing ------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--out-dir", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--embeddings", help="word2vec text file (.gz ok)")
    source.add_argument("--lemma-map", help="wordform<TAB>lemma file")
    source.add_argument("--lemma-table", help="prebuilt lemma table (lemma mode)")
    source.add_argument("--mode", choices=("word", "lemma"))
    source.add_argument("--stoplist", help="newline-delimited functional words (default: bundled list)")
    source.add_argument("--offsets", choices=("char", "byte"), help="span offset units in the dataset")

    params = argparse.ArgumentParser(add_help=False)
    params.add_argument("--context-size", type=int)
    params.add_argument("--pooling", choices=("min", "max", "mean", "std"))
    params.add_argument("--threshold", type=float)
    params.add_argument("--stop-words", type=_yes_no, metavar="yes|no")

    parser = _Parser(prog="wicdis", description="Word-in-context disambiguation with static embeddings.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-lemma2vec", parents=[common, source], help="average word vectors per lemma")
    p.add_argument("--output", help="lemma table path (default OUT_DIR/lemma2vec.txt)")
    p.set_defaults(func=cmd_build_lemma2vec)

    p = sub.add_parser("classify", parents=[common, source, params], help="label sentence pairs")
    p.add_argument("dataset")
    p.add_argument("--output", help="predictions path (default OUT_DIR/predictions.json)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("tune", parents=[common, source], help="grid search on a labelled dataset")
    p.add_argument("dataset")
    p.add_argument("gold")
    p.add_argument("--top-k", type=int)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("evaluate", parents=[common], help="precision/recall/F1 and accuracy")
    p.add_argument("predictions")
    p.add_argument("gold")
    p.add_argument("--model", help="label stored in the report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", parents=[common], help="correct/wrong contingency of two models")
    p.add_argument("predictions_a")
    p.add_argument("predictions_b")
    p.add_argument("gold")
    p.add_argument("--label-a")
    p.add_argument("--label-b")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("normalize", parents=[common], help="normalize stdin tokens to stdout")
    p.set_defaults(func=cmd_normalize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = apply_flags(load_config(args.config), args)
        args.func(cfg, args)
    except UsageError as exc:
        print(f"wicdis: {exc}", file=sys.stderr)
        return 1
    except (DataError, DatasetError, EmbeddingFormatError, LemmaMapError, ValueError, OSError) as exc:
        print(f"wicdis: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
