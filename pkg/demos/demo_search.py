"""Build a flat index over random embeddings and run a few exact searches.

Shows the EMB1 round-trip, L2 vs cosine ranking, and per-query timing.
Run with: python3 demos/demo_search.py
"""

import io

import numpy as np

from retrievalkit import (EmbeddingSet, Metric, build, read_embeddings,
                          search, write_embeddings)

rng = np.random.default_rng(0)
data = rng.standard_normal((2000, 256)).astype(np.float32)
embeddings = EmbeddingSet(data, source_tag="random-demo")

# round-trip through the binary interchange format
buf = io.BytesIO()
n_bytes = write_embeddings(embeddings, buf)
buf.seek(0)
embeddings = read_embeddings(buf, source_tag="random-demo")
print(f"EMB1 round-trip: {n_bytes} bytes, "
      f"{embeddings.count} vectors of dim {embeddings.dim}")

query = data[42]
for metric in (Metric.l2(), Metric.cosine()):
    index = build(embeddings, metric)
    result = search(index, query, 5, query_row=42)
    print(f"\ntop-5 under {metric.kind}{' (normalized)' if metric.normalized else ''}"
          f" in {result.elapsed_us} us:")
    for nid, score in result.neighbors:
        print(f"  id={nid:4d}  score={score:+.6f}")
