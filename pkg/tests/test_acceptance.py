"""Acceptance suite: one test per release criterion, each printing a
PASS line with the measured quantity when it holds."""

import math
import time

import numpy as np
import pytest

from retrievalkit import (EmbeddingSet, Metric, TsneConfig, build,
                          evaluate_query, fit_pca, joint_probabilities,
                          kl_divergence, kl_gradient, low_dim_affinities,
                          ndcg_at_k, precision_at_k, recall_at_k, search,
                          tsne)
from retrievalkit.metrics import EXCLUDE, INCLUDE

from conftest import make_labels
from oracles import (covariance_eigen_reference, full_sort_search,
                     gaussian_clusters, normalize_rows)


def report(name, detail):
    print(f"ACCEPTANCE PASS: {name} ({detail})")


def test_topk_oracle_equivalence():
    """100 random corpora, both metrics, k in {1, 5, N}: search equals
    the full-sort reference exactly, ids and double-precision scores."""
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    checked = 0
    for trial in range(100):
        n = int(rng.integers(2, 513))
        d = int(rng.integers(2, 65))
        data = rng.standard_normal((n, d)).astype(np.float32)
        es = EmbeddingSet(data)
        q = rng.standard_normal(d)
        for metric, normalized in (("l2", False), ("ip", True)):
            idx = build(es, Metric(metric, normalized=normalized))
            for k in (1, 5, n):
                got = list(search(idx, q, k).neighbors)
                want = full_sort_search(data, q, k, metric, normalized)
                assert got == want, (trial, metric, k)
                checked += 1
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    report("top-k oracle equivalence", f"{checked} searches, {elapsed:.1f}s")


def test_l2_cosine_duality():
    """On unit-normalized corpora the L2 ranking equals the cosine
    ranking id-for-id."""
    rng = np.random.default_rng(7)
    for trial in range(50):
        n = int(rng.integers(4, 200))
        d = int(rng.integers(2, 32))
        data = normalize_rows(rng.standard_normal((n, d))).astype(np.float32)
        es = EmbeddingSet(data)
        q = rng.standard_normal(d)
        l2_ids = search(build(es, Metric.l2()), q, n).ids
        cos_ids = search(build(es, Metric.cosine()), q, n).ids
        assert l2_ids == cos_ids, trial
    report("L2/cosine duality", "50 corpora, exact list equality")


def test_metric_fixtures():
    assert precision_at_k([1, 1, 1, 1, 0], 5) == 0.8
    assert round(recall_at_k([1], 1, 801), 6) == 0.001248
    assert ndcg_at_k([1, 0, 1], 3, 2) == pytest.approx(0.91972, abs=1e-5)
    # hand-computed oracle: IDCG = 1 + 1/log2(3)
    assert ndcg_at_k([1, 0, 1], 3, 2) == pytest.approx(
        1.5 / (1.0 + 1.0 / math.log2(3)), abs=1e-12)
    assert ndcg_at_k([1, 1, 1], 3, 3) == 1.0
    report("metric fixtures", "precision 0.8, recall 0.001248, NDCG 0.91972")


def test_self_match_reproduction():
    """Include policy on a duplicate-free corpus: precision@1 = ndcg@1 = 1
    for every corpus-row query."""
    rng = np.random.default_rng(99)
    data = rng.standard_normal((150, 12)).astype(np.float32)
    labels = make_labels([1 + i % 6 for i in range(150)])
    idx = build(EmbeddingSet(data), Metric.l2())
    for row in range(150):
        qm = evaluate_query(idx, labels, row, 1, INCLUDE)
        assert qm.precision == 1.0
        assert qm.ndcg == 1.0
    report("self-match reproduction", "150 queries, precision@1 = ndcg@1 = 1")


def test_synthetic_cluster_retrieval():
    """3 clusters of 50 at >= 20 sigma: near-perfect precision/NDCG@5;
    recall@50 matches the full-sort oracle under both policies."""
    rng = np.random.default_rng(5150)
    data, labels_arr = gaussian_clusters(rng, n_clusters=3, per_cluster=50,
                                         dim=8, separation=25.0)
    labels = make_labels(labels_arr)
    idx = build(EmbeddingSet(data), Metric.l2())

    p5 = [evaluate_query(idx, labels, r, 5, INCLUDE).precision for r in range(150)]
    n5 = [evaluate_query(idx, labels, r, 5, INCLUDE).ndcg for r in range(150)]
    assert sum(p5) / 150 >= 0.99
    assert sum(n5) / 150 >= 0.99

    for row in range(150):
        ref = full_sort_search(data, data[row], 51, "l2")
        lab = labels.label_of(row)
        # include: top-50 as returned; exclude: drop self then top-50
        inc_ids = [i for i, _ in ref[:50]]
        exc_ids = [i for i, _ in ref if i != row][:50]
        inc_hits = sum(1 for i in inc_ids if labels.label_of(i) == lab)
        exc_hits = sum(1 for i in exc_ids if labels.label_of(i) == lab)
        assert inc_hits == 50 and exc_hits == 49
        qm_inc = evaluate_query(idx, labels, row, 50, INCLUDE)
        qm_exc = evaluate_query(idx, labels, row, 50, EXCLUDE)
        assert qm_inc.recall == inc_hits / 50
        assert qm_exc.recall == exc_hits / 49
    report("synthetic-cluster retrieval",
           f"mean precision@5 {sum(p5) / 150:.4f}, mean NDCG@5 {sum(n5) / 150:.4f}, "
           f"recall@50 hits 50/49 per policy")


def test_pca_acceptance():
    rng = np.random.default_rng(17)
    for _ in range(5):
        data = rng.standard_normal((50, 8)) * rng.uniform(0.5, 2.0, size=8)
        model = fit_pca(data, 8)
        ref = covariance_eigen_reference(data)
        assert np.all(np.abs(model.explained_variance - ref) <= 1e-6 * ref)
        assert abs(np.sum(model.explained_variance_ratio) - 1.0) <= 1e-9
    t = np.linspace(-2, 2, 50)
    rank1 = np.stack([t, -3 * t, 0.5 * t], axis=1)
    ratios = fit_pca(rank1, 3).explained_variance_ratio
    assert ratios[0] == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(ratios[1:], 0.0, atol=1e-9)
    report("PCA", "eigensolver oracle within 1e-6, ratios sum to 1, rank-1 exact")


def test_tsne_acceptance():
    start = time.perf_counter()
    rng = np.random.default_rng(23)

    # analytic KL gradient vs central finite differences, step 1e-5
    for _ in range(3):
        X = rng.standard_normal((10, 4))
        P = joint_probabilities(X, 2.5)
        Y = rng.standard_normal((10, 2))
        grad = kl_gradient(P, Y)
        numeric = np.zeros_like(Y)
        h = 1e-5
        for i in range(10):
            for j in range(2):
                yp, ym = Y.copy(), Y.copy()
                yp[i, j] += h
                ym[i, j] -= h
                numeric[i, j] = (kl_divergence(P, low_dim_affinities(yp)[0]) -
                                 kl_divergence(P, low_dim_affinities(ym)[0])) / (2 * h)
        assert np.linalg.norm(grad - numeric) <= 1e-4 * np.linalg.norm(numeric)

    # two well-separated clusters end up separated in the embedding
    a = rng.standard_normal((30, 5)) * 0.02
    b = rng.standard_normal((30, 5)) * 0.02 + 1.0
    data = np.vstack([a, b])
    lab = np.array([0] * 30 + [1] * 30)
    config = TsneConfig(perplexity=10, n_iter=1000, learning_rate=50, seed=3)
    proj = tsne(data, config)
    Y = proj.coords
    intra = max(np.max(np.linalg.norm(Y[lab == c][:, None] - Y[lab == c], axis=2))
                for c in (0, 1))
    inter = np.min(np.linalg.norm(Y[lab == 0][:, None] - Y[lab == 1], axis=2))
    assert inter > intra

    # fixed seed => bitwise identical output
    again = tsne(data.copy(), config)
    assert proj.coords.tobytes() == again.coords.tobytes()

    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    report("t-SNE", f"gradient check, inter {inter:.1f} > intra {intra:.1f}, "
                    f"bitwise-deterministic, {elapsed:.1f}s")


def test_search_performance_desk_scale():
    """2006x1024 flat L2, k=100: mean per-query search under 50 ms."""
    rng = np.random.default_rng(4242)
    data = rng.standard_normal((2006, 1024)).astype(np.float32)
    idx = build(EmbeddingSet(data), Metric.l2())
    queries = rng.standard_normal((30, 1024))
    search(idx, queries[0], 100)  # warm-up
    times = [search(idx, q, 100).elapsed_s for q in queries]
    mean_s = sum(times) / len(times)
    assert mean_s < 0.050
    report("search performance", f"mean {mean_s * 1e3:.2f} ms/query at 2006x1024")
