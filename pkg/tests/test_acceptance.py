"""Exit criteria for the package, one test per criterion.

A PASS/FAIL line per criterion is printed in the pytest terminal summary.
Criterion 9 needs real embedding and lemma files and is skipped unless
``WICDIS_EMBEDDINGS_PATH`` and ``WICDIS_LEMMA_MAP_PATH`` are set.
"""

import json
import os
import random
import subprocess
import sys
import textwrap
import time

import jsonschema
import numpy as np
import pytest
import regex
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

import oracle
import reference_tables
from test_normalize import in_removed_class
from wicdis.embeddings import EmbeddingTable
from wicdis.evaluation import compute_metrics, cross_tabulate
from wicdis.lemmas import STATS_SCHEMA, build_lemma_table
from wicdis.normalize import normalize_token
from wicdis.tuning import GridSpec, run_grid, select_best
from wicdis.wic import POOLINGS, Params, Prediction, classify

SETTINGS = [
    Params(1, "min", 0.55, True),
    Params(2, "max", 0.62, False),
    Params(3, "mean", 0.70, True),
    Params(4, "std", 0.58, False),
    Params(2, "min", 0.66, False),
    Params(5, "max", 0.80, True),
    Params(10, "mean", 0.83, False),
    Params(3, "std", 0.56, True),
]


# --- 1 ----------------------------------------------------------------------

def test_criterion_01_oracle_equivalence(mini_dir, mini_instances, word_source, lemma_source, mini_stoplist):
    assert {p.pooling for p in SETTINGS} == set(POOLINGS)
    assert {p.stop_words for p in SETTINGS} == {True, False}
    raw_instances, _, table, lm, stop = oracle.load_mini(mini_dir)
    elapsed = 0.0
    for mode, source in (("word", word_source), ("lemma", lemma_source)):
        lookup = oracle.make_lookup(mode, table, lm)
        for params in SETTINGS:
            expected = oracle.classify(raw_instances, params.context_size, params.pooling, params.threshold,
                                       params.stop_words, lookup, stop)
            t0 = time.perf_counter()
            preds = classify(mini_instances, params, source, mini_stoplist)
            elapsed += time.perf_counter() - t0
            agree = 0
            for p in preds:
                label, sim = expected[p.id]
                same_sim = (sim is None and p.similarity is None) or (
                    sim is not None and p.similarity is not None and abs(sim - p.similarity) < 1e-9)
                agree += (p.label == label) and same_sim and (p.degenerate == (sim is None))
            assert agree == 20, f"{mode} {params}: {agree}/20"
    assert elapsed < 1.0


# --- 2 ----------------------------------------------------------------------

def _exhaustive_best(rows):
    best = None
    for r in rows:
        if best is None:
            best = r
            continue
        m, bm = r.macro_f1, best.macro_f1
        if m != bm:
            if m > bm:
                best = r
            continue
        a, b = r.params, best.params
        for x, y in ((a.context_size, b.context_size), (a.threshold, b.threshold),
                     (POOLINGS.index(a.pooling), POOLINGS.index(b.pooling)),
                     (0 if a.stop_words else 1, 0 if b.stop_words else 1)):
            if x != y:
                if x < y:
                    best = r
                break
    return best.params


@pytest.mark.parametrize("mode", ["word", "lemma"])
def test_criterion_02_grid_correctness(mode, mini_dir, mini_instances, mini_gold, word_source, lemma_source,
                                       mini_stoplist):
    source = word_source if mode == "word" else lemma_source
    spec = GridSpec()
    t0 = time.perf_counter()
    rows = run_grid(mini_instances, spec, source, mini_stoplist)
    assert time.perf_counter() - t0 < 5.0
    assert len(rows) == 2480

    raw_instances, _, table, lm, stop = oracle.load_mini(mini_dir)
    lookup = oracle.make_lookup(mode, table, lm)
    oracle_sims = {}
    for row in rows:
        p = row.params
        # naive per-cell recomputation through the library
        direct = compute_metrics(classify(mini_instances, p, source, mini_stoplist), mini_gold)
        got = (row.precision_true, row.recall_true, row.f1_true, row.precision_false, row.recall_false,
               row.f1_false, row.accuracy)
        want = (direct.true.precision, direct.true.recall, direct.true.f1, direct.false.precision,
                direct.false.recall, direct.false.f1, direct.accuracy)
        assert max(abs(x - y) for x, y in zip(got, want)) < 1e-9
        assert row.degenerate_count == direct.degenerate_count
        # independent brute-force oracle
        key = (p.context_size, p.pooling, p.stop_words)
        if key not in oracle_sims:
            oracle_sims[key] = oracle.classify(raw_instances, p.context_size, p.pooling, 0.0, p.stop_words,
                                               lookup, stop)
        labels = {i: s is not None and s >= p.threshold for i, (_, s) in oracle_sims[key].items()}
        per_class, acc = oracle.metrics(labels, mini_gold)
        assert max(abs(x - y) for x, y in zip(got, (*per_class[True], *per_class[False], acc))) < 1e-9

    assert select_best(rows) == _exhaustive_best(rows)


# --- 3 ----------------------------------------------------------------------

def test_criterion_03_metric_arithmetic():
    T, F = True, False
    gold = dict(zip("abcdef", [T, T, T, F, F, F]))
    preds = [Prediction(i, None, y) for i, y in zip("abcdef", [T, T, F, T, F, F])]
    r = compute_metrics(preds, gold)
    assert abs(r.true.precision - 2 / 3) < 1e-12
    assert abs(r.true.recall - 2 / 3) < 1e-12
    assert abs(r.true.f1 - 2 / 3) < 1e-12
    assert abs(r.accuracy - 4 / 6) < 1e-12

    all_true = compute_metrics([Prediction(i, None, True) for i in gold], gold)
    assert all_true.false.f1 == 0
    assert "f1_FALSE" in all_true.zero_division_flags


# --- 4 ----------------------------------------------------------------------

def test_criterion_04_crosstab_fixtures():
    for cells, totals in ((reference_tables.WIKI_CBOW, (370, 216, 182, 232)),
                          (reference_tables.OUR_MODEL, (365, 233, 236, 166))):
        a, b, gold = reference_tables.predictions_for(cells)
        tab = cross_tabulate(a, b, gold, "Lemma2Vec", "Word2Vec")
        assert tuple(tab.total(c) for c in cells) == totals
        assert tab.cells == cells
        assert tab.gold_totals() == (500, 500)
        assert tab.n == 1000


# --- 5 ----------------------------------------------------------------------

@st.composite
def tables_and_maps(draw):
    dim = draw(st.integers(1, 6))
    n_words = draw(st.integers(1, 25))
    words = [f"w{i}" for i in range(n_words)]
    lemmas = [f"L{i}" for i in range(draw(st.integers(1, 6)))]
    # occasionally reuse a word form as a lemma name to exercise collisions
    if draw(st.booleans()):
        lemmas.append(words[0])
    # embedding-scale coordinates; float32 storage keeps 1e-6 absolute only below ~16 in magnitude
    vals = draw(st.lists(st.floats(-10, 10, width=32), min_size=n_words * dim, max_size=n_words * dim))
    matrix = np.array(vals, dtype=np.float32).reshape(n_words, dim)
    lm = {}
    for w in words:
        choice = draw(st.integers(-1, len(lemmas) - 1))
        if choice >= 0:
            lm[w] = lemmas[choice]
    return EmbeddingTable(words, matrix), lm


@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(tables_and_maps())
def test_criterion_05_lemma2vec_construction(data):
    emb, lm = data
    table, stats = build_lemma_table(emb, lm)
    groups = {}
    for w in emb:
        if w in lm:
            groups.setdefault(lm[w], []).append(emb.get(w).astype(np.float64))
    for lemma, members in groups.items():
        assert np.max(np.abs(table.get(lemma) - np.mean(members, axis=0))) < 1e-6
        if len(members) == 1:
            np.testing.assert_array_equal(table.get(lemma), members[0].astype(np.float32))
    assert sum(len(m) for m in groups.values()) + stats.words_not_lemmatized == stats.unique_word_forms
    assert stats.unique_word_forms == len(emb)
    assert stats.unique_lemmas == len(groups)
    assert table.dimension == emb.dimension
    jsonschema.validate(json.loads(stats.to_json()), STATS_SCHEMA)


# --- 6 ----------------------------------------------------------------------

def _random_strings(count, seed=2021):
    rng = random.Random(seed)
    pools = [
        lambda: chr(rng.randint(0x0600, 0x06FF)),
        lambda: rng.choice("أإآاهههـ.،؟ "),
        lambda: chr(rng.randint(0x20, 0x24F)),
        lambda: chr(rng.randint(0x20, 0x2FFFF)),
    ]
    out = []
    for _ in range(count):
        chars = []
        for _ in range(rng.randint(0, 24)):
            ch = rng.choice(pools)()
            if not 0xD800 <= ord(ch) <= 0xDFFF:
                chars.append(ch)
        out.append("".join(chars))
    return out


def test_criterion_06_normalization():
    strings = _random_strings(10_000)
    for s in strings:
        once = normalize_token(s)
        assert normalize_token(once) == once, repr(s)
        assert not any(in_removed_class(ch) for ch in once), repr(s)
    assert normalize_token("أأأ") == "ا"
    assert normalize_token("هههه") == "ه"
    assert normalize_token("هه") == "هه"


# --- 7 ----------------------------------------------------------------------

@pytest.mark.parametrize("mode", ["word", "lemma"])
def test_criterion_07_threshold_monotonicity(mode, mini_instances, word_source, lemma_source, mini_stoplist):
    source = word_source if mode == "word" else lemma_source
    spec = GridSpec()
    for n in spec.context_sizes:
        for pooling in spec.poolings:
            for sw in spec.stop_words_options:
                previous = None
                for t in spec.thresholds:
                    preds = classify(mini_instances, Params(n, pooling, t, sw), source, mini_stoplist)
                    true_set = {p.id for p in preds if p.label and not p.degenerate}
                    if previous is not None:
                        assert true_set <= previous, (n, pooling, sw, t)
                    previous = true_set


# --- 8 ----------------------------------------------------------------------

N_BIG, DIM_BIG = 334_161, 300
LETTERS = "بتثجحخدذرزسشصضطظعغفقكلمنهوي"


def _arabic_token(i):
    digits = []
    while True:
        i, r = divmod(i, len(LETTERS))
        digits.append(LETTERS[r])
        if i == 0:
            break
    return "ك" + "".join(digits)


@pytest.fixture(scope="session")
def big_table_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("big") / "w2v_334k_300.txt"
    rng = np.random.default_rng(0)
    templates = [" ".join(f"{v:.4f}" for v in rng.standard_normal(DIM_BIG)) for _ in range(997)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{N_BIG} {DIM_BIG}\n")
        buf = []
        for i in range(N_BIG):
            buf.append(f"{_arabic_token(i)} {templates[i % 997]}\n")
            if len(buf) == 10_000:
                fh.write("".join(buf))
                buf.clear()
        fh.write("".join(buf))
    return path


PERF_SCRIPT = textwrap.dedent("""
    import json, random, resource, sys, time
    from wicdis.embeddings import load_embeddings
    from wicdis.wic import Params, WicInstance, WordSource, classify
    t0 = time.perf_counter()
    table = load_embeddings(sys.argv[1])
    load_s = time.perf_counter() - t0
    rss_mb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024
    rng = random.Random(5)
    vocab = table.tokens
    instances = []
    for k in range(1000):
        s = [rng.choice(vocab) for _ in range(rng.randint(8, 25))]
        r = [rng.choice(vocab) for _ in range(rng.randint(8, 25))]
        i, j = rng.randrange(len(s)), rng.randrange(len(r))
        r[j] = s[i]
        a = sum(len(w) + 1 for w in s[:i]); b = sum(len(w) + 1 for w in r[:j])
        instances.append(WicInstance(f"p{k}", " ".join(s), " ".join(r),
                                     (a, a + len(s[i])), (b, b + len(r[j]))))
    t0 = time.perf_counter()
    preds = classify(instances, Params(4, "min", 0.66, True), WordSource(table), frozenset())
    classify_s = time.perf_counter() - t0
    print(json.dumps({"entries": len(table), "dimension": table.dimension, "load_s": load_s,
                      "rss_mb": rss_mb, "classify_s": classify_s, "n_preds": len(preds),
                      "defined": sum(p.similarity is not None for p in preds)}))
""")


@pytest.mark.slow
def test_criterion_08_performance_envelope(big_table_path):
    proc = subprocess.run([sys.executable, "-c", PERF_SCRIPT, str(big_table_path)],
                          capture_output=True, text=True, timeout=600)
    assert proc.returncode == 0, proc.stderr
    res = json.loads(proc.stdout.strip().splitlines()[-1])
    print(f"\nperformance: {res}")
    assert res["entries"] == N_BIG and res["dimension"] == DIM_BIG
    assert res["load_s"] < 60
    assert res["rss_mb"] < 1536
    assert res["n_preds"] == 1000 and res["defined"] > 900
    assert res["classify_s"] < 1.0


# --- 9 ----------------------------------------------------------------------

@pytest.mark.skipif(not (os.environ.get("WICDIS_EMBEDDINGS_PATH") and os.environ.get("WICDIS_LEMMA_MAP_PATH")),
                    reason="needs WICDIS_EMBEDDINGS_PATH and WICDIS_LEMMA_MAP_PATH (optional integration)")
def test_criterion_09_optional_integration(tmp_path):
    from wicdis.cli import main
    from wicdis.embeddings import load_embeddings
    from wicdis.lemmas import load_lemma_map

    emb = load_embeddings(os.environ["WICDIS_EMBEDDINGS_PATH"])
    _, stats = build_lemma_table(emb, load_lemma_map(os.environ["WICDIS_LEMMA_MAP_PATH"]))
    assert (stats.unique_word_forms, stats.unique_lemmas, stats.words_not_lemmatized) == (234173, 100040, 22054)
    dev, gold = os.environ.get("WICDIS_DEV_PATH"), os.environ.get("WICDIS_DEV_GOLD_PATH")
    if dev and gold:
        assert main(["tune", dev, gold, "--embeddings", os.environ["WICDIS_EMBEDDINGS_PATH"],
                     "--out-dir", str(tmp_path)]) == 0
