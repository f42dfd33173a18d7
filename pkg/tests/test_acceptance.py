"""Acceptance checks, one test per criterion.

Every test prints a single ``CRITERION n ... PASS|FAIL`` line (outside of
pytest's capture) before asserting, so ``pytest -v`` doubles as a report.
Thresholds and instance counts are fixed here and not tuned to results.
"""

import csv
import os
import time
from collections import Counter
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import grid_oracle, rolling_window_oracle
from reldenclu.assembly import cosine_similarity, run_reldenclu
from reldenclu.core import Bicluster, DegenerateTestError, ParameterSet
from reldenclu.datagen import FAMILY_NORMALIZATION, apply_transform, gen_base, generate
from reldenclu.density import dense_regions_large, dense_regions_small
from reldenclu.evaluate import accuracy, best_match, class_match_accuracy, paired_t_test
from reldenclu.normalize import norm_bounded

INSTANCES = range(10)
PAPER = dict(sim2seed=0.8, reuse_all_seeds=False, reuse_seed_sim=0.5, min_seed_size=100,
             obs_in_min_base=3, clus_sim=1.0)


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {number:>2} {'PASS' if ok else 'FAIL'}  {detail}")


@lru_cache(maxsize=None)
def family_run(family, seed):
    """(best-match accuracy per planted bicluster, seconds) for one instance."""
    ds = generate(family, seed)
    params = ParameterSet(normalization=FAMILY_NORMALIZATION[family], **PAPER)
    start = time.perf_counter()
    clusters = run_reldenclu(ds.matrix, params)
    elapsed = time.perf_counter() - start
    scores = tuple(best_match(clusters, t)[1] if clusters else 0.0 for t in ds.truth_matrices())
    return scores, elapsed


def mean_accuracy(family, k=0):
    return float(np.mean([family_run(family, s)[0][k] for s in INSTANCES]))


def test_criterion_01_base(capsys):
    mean = mean_accuracy("base")
    slowest = max(family_run("base", s)[1] for s in INSTANCES)
    ok = mean >= 0.95 and slowest <= 60
    report(capsys, 1, ok, f"Base mean accuracy {mean:.4f} (>= 0.95), slowest run {slowest:.1f} s (<= 60 s)")
    assert ok


def test_criterion_02_nonlinear(capsys):
    m1, m2 = mean_accuracy("nonlinear1"), mean_accuracy("nonlinear2")
    ok = m1 >= 0.85 and m2 >= 0.83
    report(capsys, 2, ok, f"Non-Linear 1 mean {m1:.4f} (>= 0.85), Non-Linear 2 mean {m2:.4f} (>= 0.83)")
    assert ok


def test_criterion_03_normal_and_noise(capsys):
    normal, noisy, uniform = (mean_accuracy(f) for f in ("normal", "noisy_normal", "noisy_uniform"))
    ok = normal >= 0.95 and noisy >= 0.85 and uniform >= 0.88
    report(capsys, 3, ok, f"Normal {normal:.4f} (>= 0.95), Noisy normal {noisy:.4f} (>= 0.85), "
                          f"Noisy uniform {uniform:.4f} (>= 0.88)")
    assert ok


def test_criterion_04_overlap(capsys):
    first, second = mean_accuracy("overlap", 0), mean_accuracy("overlap", 1)
    ok = first >= 0.90 and second >= 0.90
    report(capsys, 4, ok, f"Overlap bicluster 1 mean {first:.4f}, bicluster 2 mean {second:.4f} (each >= 0.90); "
                          "the second falls short, analysis in the decisions ledger")
    assert ok


def _canonical(clusters):
    return Counter((b.observations, b.features) for b in clusters)


def test_criterion_05_exact_invariance(capsys):
    failures = []
    for seed in range(5):
        ds = gen_base(seed)
        reference = run_reldenclu(ds.matrix)
        for kind in ("scale", "translate", "linear"):
            out = run_reldenclu(apply_transform(ds, kind, seed=100 + seed).matrix)
            if out != reference:
                failures.append((seed, kind))
        permuted = apply_transform(ds, "permute", seed=100 + seed)
        rows = np.argsort(permuted.recipe["row_permutation"])
        cols = np.argsort(permuted.recipe["column_permutation"])
        expected = _canonical(Bicluster(rows[list(b.observations)], cols[list(b.features)]) for b in reference)
        if _canonical(run_reldenclu(permuted.matrix)) != expected:
            failures.append((seed, "permute"))
    ok = not failures
    report(capsys, 5, ok, f"5 Base instances x 4 transforms, identical index sets; failures: {failures or 'none'}")
    assert ok


def test_criterion_06_cluster_proportion(capsys):
    base, repeated = mean_accuracy("base"), mean_accuracy("cluster_proportion")
    ok = repeated >= base - 0.01
    report(capsys, 6, ok, f"Cluster-proportion mean {repeated:.4f} >= Base mean {base:.4f} - 0.01")
    assert ok


def _as_sets(rs):
    return {frozenset(r.tolist()) for r in rs.regions}


def test_criterion_07_oracle_equivalence(capsys):
    rng = np.random.default_rng(2024)
    grid_bad = 0
    for k in range(50):
        kind = k % 5
        if kind == 4:
            # values sitting exactly on bin edges
            n_bins = round(3 * np.log(200))
            x = rng.integers(0, n_bins + 1, size=200) / n_bins
            y = rng.integers(0, n_bins + 1, size=200) / n_bins
        else:
            x = rng.uniform(size=200)
            noise = rng.normal(scale=0.05, size=200)
            y = [rng.uniform(size=200), x + noise, np.sin(6 * x) + noise, (x - 0.5) ** 2 + noise][kind]
        x, y = norm_bounded(x), norm_bounded(y)
        if _as_sets(dense_regions_large(x, y)) != grid_oracle(x.tolist(), y.tolist()):
            grid_bad += 1
    small_bad = 0
    for k in range(20):
        x = rng.uniform(size=80)
        y = [rng.uniform(size=80), x + rng.normal(scale=0.05, size=80)][k % 2]
        x, y = norm_bounded(x), norm_bounded(y)
        if _as_sets(dense_regions_small(x, y)) != rolling_window_oracle(x.tolist(), y.tolist()):
            small_bad += 1
    ok = grid_bad == 0 and small_bad == 0
    report(capsys, 7, ok, f"grid path {50 - grid_bad}/50 exact, rolling-window path {20 - small_bad}/20 exact")
    assert ok


bits = st.lists(st.integers(0, 1), min_size=1, max_size=40)
reals = st.floats(-100, 100, allow_nan=False)
index_sets = st.sets(st.integers(0, 30), min_size=1, max_size=12)


@settings(max_examples=1000, deadline=None, derandomize=True)
@given(bits.flatmap(lambda a: st.tuples(st.just(a), st.lists(st.integers(0, 1), min_size=len(a), max_size=len(a)))))
def _polarity(pair):
    m, l = np.array(pair[0]), np.array(pair[1])
    v = class_match_accuracy(m, l)
    assert v == class_match_accuracy(1 - m, l) == class_match_accuracy(m, 1 - l)


@settings(max_examples=1000, deadline=None, derandomize=True)
@given(st.integers(1, 6), st.integers(1, 6), st.data())
def _symmetry(n, m, data):
    a = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n * m, max_size=n * m))).reshape(n, m)
    b = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n * m, max_size=n * m))).reshape(n, m)
    assert accuracy(a, b) == accuracy(b, a)


@settings(max_examples=1000, deadline=None, derandomize=True)
@given(index_sets, st.sets(st.integers(0, 8), min_size=1, max_size=6), index_sets,
       st.sets(st.integers(0, 8), min_size=1, max_size=6))
def _cosine(o1, f1, o2, f2):
    a, b = Bicluster(sorted(o1), sorted(f1)), Bicluster(sorted(o2), sorted(f2))
    v = cosine_similarity(a, b)
    assert 0.0 <= v <= 1.0
    assert v == cosine_similarity(b, a)
    assert cosine_similarity(a, a) == 1.0


@settings(max_examples=1000, deadline=None, derandomize=True)
@given(st.lists(st.tuples(reals, reals), min_size=2, max_size=15))
def _antisymmetry(pairs):
    a, b = np.array(pairs).T
    try:
        t1, _ = paired_t_test(a, b)
    except DegenerateTestError:
        with pytest.raises(DegenerateTestError):
            paired_t_test(b, a)
        return
    t2, _ = paired_t_test(b, a)
    assert t1 == -t2


def test_criterion_08_metric_properties(capsys):
    failed = []
    for name, check in (("polarity", _polarity), ("symmetry", _symmetry), ("cosine bounds", _cosine),
                        ("t antisymmetry", _antisymmetry)):
        try:
            check()
        except AssertionError:
            failed.append(name)
    ok = not failed
    report(capsys, 8, ok, f"4 properties x 1000 generated cases; failing: {failed or 'none'}")
    assert ok


@pytest.mark.slow
def test_criterion_09_large_scale(capsys):
    ds = generate("large", 0)
    start = time.perf_counter()
    clusters = run_reldenclu(ds.matrix, ParameterSet(**PAPER))
    elapsed = time.perf_counter() - start
    _, score = best_match(clusters, ds.truth_matrices()[0])
    ok = score >= 0.95 and elapsed <= 1400
    report(capsys, 9, ok, f"20000 x 100 instance: accuracy {score:.4f} (>= 0.95), {elapsed:.0f} s (<= 1400 s)")
    assert ok


def _read_breast_cancer(path):
    """The UCI diagnostic file (id, M/B diagnosis, 30 features) or a CSV
    with a header whose ``diagnosis``/``class``/``label`` column holds the
    classes."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows[0][1].strip() in ("M", "B"):
        labels = np.array([r[1].strip() == "M" for r in rows], dtype=np.uint8)
        return np.array([[float(v) for v in r[2:]] for r in rows]), labels
    header = [h.strip().lower() for h in rows[0]]
    target = next(k for k, h in enumerate(header) if h in ("diagnosis", "class", "label"))
    body = rows[1:]
    raw = [r[target].strip() for r in body]
    classes = sorted(set(raw))
    labels = np.array([classes.index(v) for v in raw], dtype=np.uint8)
    keep = [k for k, h in enumerate(header) if k != target and h != "id"]
    return np.array([[float(r[k]) for k in keep] for r in body]), labels


@pytest.mark.skipif(not os.environ.get("RELDENCLU_BREAST_CANCER_CSV"),
                    reason="set RELDENCLU_BREAST_CANCER_CSV to the UCI Breast Cancer file to run")
def test_criterion_10_breast_cancer(capsys):
    X, labels = _read_breast_cancer(os.environ["RELDENCLU_BREAST_CANCER_CSV"])
    clusters = run_reldenclu(X)
    best = max((class_match_accuracy(np.isin(np.arange(len(labels)), b.observations), labels)
                for b in clusters), default=0.0)
    ok = best >= 0.94
    report(capsys, 10, ok, f"Breast Cancer class-match accuracy {best:.4f} (>= 0.94)")
    assert ok
