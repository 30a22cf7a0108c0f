"""Precision/recall/NDCG sweep over a labeled synthetic corpus.

Three well-separated Gaussian clusters stand in for three label classes;
the sweep mirrors the per-query metric tables the CLI's `evaluate`
subcommand writes. Run with: python3 demos/demo_evaluation_sweep.py
"""

import numpy as np

from retrievalkit import EmbeddingSet, LabelTable, Metric, build, sweep

rng = np.random.default_rng(1)
per_cluster, dim = 50, 16
centers = np.eye(3, dim) * 40.0
data = np.vstack([c + rng.standard_normal((per_cluster, dim))
                  for c in centers]).astype(np.float32)
labels = LabelTable(tuple((i, f"img_{i:03d}", 1 + i // per_cluster)
                          for i in range(3 * per_cluster)))

index = build(EmbeddingSet(data, source_tag="clusters"), Metric.l2())
report = sweep(index, labels, query_rows=range(5), k_values=[1, 5, 10, 20, 50],
               model_tag="clusters")

print(f"{'query':>5} {'k':>4} {'precision':>10} {'recall':>10} {'ndcg':>8} "
      f"{'time_s':>10}")
for q in report.per_query:
    print(f"{q.query_row:>5} {q.k:>4} {q.precision:>10.3f} {q.recall:>10.6f} "
          f"{q.ndcg:>8.4f} {q.elapsed_s:>10.6f}")

print("\nper-k aggregates:")
for agg in report.aggregates:
    print(f"  k={agg['k']:<3} mean precision {agg['mean_precision']:.3f}, "
          f"mean recall {agg['mean_recall']:.4f}, "
          f"mean NDCG {agg['mean_ndcg']:.4f}")
