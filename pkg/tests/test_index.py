import numpy as np
import pytest

from retrievalkit import (DegenerateVectorError, DimensionMismatchError,
                          EmbeddingSet, Metric, batch_search, build,
                          inner_product, l2_distance, load_index, normalize,
                          save_index, search)

from oracles import full_sort_search, normalize_rows


class TestDistanceKernels:
    def test_l2_345_triangle(self):
        assert l2_distance([0, 0], [3, 4]) == 5.0

    def test_l2_identity(self, rng):
        v = rng.standard_normal(17)
        assert l2_distance(v, v) == 0.0

    def test_l2_matches_wide_precision_reference(self, rng):
        a = rng.standard_normal(1024)
        b = rng.standard_normal(1024)
        import math
        ref = math.sqrt(math.fsum((x - y) ** 2 for x, y in zip(a, b)))
        assert l2_distance(a, b) == pytest.approx(ref, rel=1e-4)

    def test_l2_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            l2_distance([1, 2], [1, 2, 3])

    def test_ip_orthogonal(self):
        assert inner_product([1, 0], [0, 1]) == 0.0

    def test_ip_direct(self):
        assert inner_product([1, 2], [3, 4]) == 11.0

    def test_ip_unit_vectors_bounded(self, rng):
        for _ in range(50):
            a = normalize(rng.standard_normal(32))
            b = normalize(rng.standard_normal(32))
            assert -1 - 1e-6 <= inner_product(a, b) <= 1 + 1e-6

    def test_normalize_34(self):
        assert np.allclose(normalize([3, 4]), [0.6, 0.8])

    def test_normalize_idempotent(self, rng):
        u = normalize(rng.standard_normal(9))
        assert np.allclose(normalize(u), u, atol=1e-7)

    def test_normalize_zero_vector_errors(self):
        with pytest.raises(DegenerateVectorError):
            normalize([0.0, 0.0])


class TestBuild:
    def test_desk_scale_count(self, rng):
        es = EmbeddingSet(rng.standard_normal((2006, 1024)).astype(np.float32))
        idx = build(es, Metric.l2())
        assert idx.count == 2006 and idx.dim == 1024

    def test_normalized_rows_unit_norm(self, rng):
        es = EmbeddingSet(rng.standard_normal((30, 10)).astype(np.float32))
        idx = build(es, Metric.cosine())
        norms = np.sqrt(np.sum(idx.vectors.astype(np.float64) ** 2, axis=1))
        assert np.all(np.abs(norms - 1.0) <= 1e-6)

    def test_zero_row_error_names_the_row(self, rng):
        data = rng.standard_normal((5, 4)).astype(np.float32)
        data[3] = 0.0
        with pytest.raises(DegenerateVectorError, match="row 3"):
            build(EmbeddingSet(data), Metric.cosine())

    def test_source_unmodified(self, rng):
        data = rng.standard_normal((5, 4)).astype(np.float32)
        es = EmbeddingSet(data)
        before = es.data.copy()
        build(es, Metric.cosine())
        assert np.array_equal(es.data, before)


class TestSearch:
    def test_self_match_distance_zero(self, small_set):
        idx = build(small_set, Metric.l2())
        r = search(idx, small_set.data[7], 1)
        assert r.neighbors == ((7, 0.0),)

    def test_analytic_cosines(self):
        es = EmbeddingSet(np.array([[1, 0], [0, 1], [-1, 0]], dtype=np.float32))
        idx = build(es, Metric.cosine())
        r = search(idx, [1.0, 0.0], 3)
        assert r.ids == [0, 1, 2]
        assert r.scores == pytest.approx([1.0, 0.0, -1.0], abs=1e-7)

    @pytest.mark.parametrize("metric,normalized", [("l2", False), ("ip", True)])
    def test_matches_full_sort_oracle(self, rng, metric, normalized):
        data = rng.standard_normal((200, 32)).astype(np.float32)
        idx = build(EmbeddingSet(data),
                    Metric(metric, normalized=normalized))
        q = rng.standard_normal(32)
        r = search(idx, q, 10)
        assert list(r.neighbors) == full_sort_search(data, q, 10, metric,
                                                     normalized)

    def test_duplicate_rows_tie_break_ascending_id(self):
        data = np.tile(np.array([[1.0, 2.0]], dtype=np.float32), (6, 1))
        idx = build(EmbeddingSet(data), Metric.l2())
        r = search(idx, [1.0, 2.0], 4)
        assert r.ids == [0, 1, 2, 3]

    def test_repeated_runs_identical(self, small_set, rng):
        idx = build(small_set, Metric.l2())
        q = rng.standard_normal(small_set.dim)
        a = search(idx, q, 5)
        b = search(idx, q, 5)
        assert a.neighbors == b.neighbors

    def test_k_exceeding_count_clamps(self, small_set):
        idx = build(small_set, Metric.l2())
        r = search(idx, small_set.data[0], 1000)
        assert len(r.neighbors) == small_set.count

    def test_k_zero_rejected(self, small_set):
        idx = build(small_set, Metric.l2())
        with pytest.raises(ValueError):
            search(idx, small_set.data[0], 0)

    def test_dim_mismatch_rejected(self, small_set):
        idx = build(small_set, Metric.l2())
        with pytest.raises(DimensionMismatchError):
            search(idx, np.zeros(small_set.dim + 1), 1)

    def test_monotone_containment(self, rng):
        data = rng.standard_normal((64, 8)).astype(np.float32)
        idx = build(EmbeddingSet(data), Metric.l2())
        q = rng.standard_normal(8)
        for k in range(1, 20):
            smaller = set(search(idx, q, k).ids)
            larger = set(search(idx, q, k + 1).ids)
            assert smaller <= larger

    def test_score_bounds(self, rng):
        data = rng.standard_normal((40, 6)).astype(np.float32)
        q = rng.standard_normal(6)
        l2 = search(build(EmbeddingSet(data), Metric.l2()), q, 40)
        assert all(s >= 0 for s in l2.scores)
        cos = search(build(EmbeddingSet(data), Metric.cosine()), q, 40)
        assert all(-1 - 1e-6 <= s <= 1 + 1e-6 for s in cos.scores)

    def test_elapsed_positive(self, small_set):
        idx = build(small_set, Metric.l2())
        r = search(idx, small_set.data[0], 3)
        assert r.elapsed_s > 0
        assert r.elapsed_us >= 1

    def test_unit_sphere_ranking_equivalence(self, rng):
        # ||a-b||^2 = 2 - 2<a,b> on the unit sphere, so the two metrics
        # must produce the same id ranking
        data = normalize_rows(rng.standard_normal((120, 16))).astype(np.float32)
        es = EmbeddingSet(data)
        q = normalize(rng.standard_normal(16))
        l2_ids = search(build(es, Metric.l2()), q, 120).ids
        cos_ids = search(build(es, Metric.cosine()), q, 120).ids
        assert l2_ids == cos_ids


class TestBatchSearch:
    def test_empty_query_list(self, small_set):
        idx = build(small_set, Metric.l2())
        assert batch_search(idx, [], 3) == []

    def test_self_match_rows(self, small_set):
        idx = build(small_set, Metric.l2())
        results = batch_search(idx, small_set.data[:5], 1)
        assert [r.ids[0] for r in results] == [0, 1, 2, 3, 4]

    def test_matches_sequential(self, rng, small_set):
        idx = build(small_set, Metric.cosine())
        queries = rng.standard_normal((50, small_set.dim))
        batched = batch_search(idx, queries, 4)
        for q, r in zip(queries, batched):
            assert r.neighbors == search(idx, q, 4).neighbors


class TestPersistence:
    def test_save_load_roundtrip(self, tmp_path, small_set):
        idx = build(small_set, Metric.cosine())
        path = tmp_path / "corpus.emb1"
        save_index(idx, path)
        assert (tmp_path / "corpus.emb1.json").exists()
        loaded = load_index(path)
        assert loaded.metric == idx.metric
        assert np.array_equal(loaded.vectors, idx.vectors)
        q = small_set.data[3]
        assert search(loaded, q, 5).neighbors == search(idx, q, 5).neighbors
