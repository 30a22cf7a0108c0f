"""PCA and t-SNE views of a labeled embedding cloud.

Writes pca_scatter.svg / tsne_scatter.svg (plus x,y,label CSVs and the
per-iteration KL trace) into demos/output/.
Run with: python3 demos/demo_projection.py
"""

from pathlib import Path

import numpy as np

from retrievalkit import (Projection2D, TsneConfig, emit_scatter, fit_pca,
                          transform_pca, tsne)
from retrievalkit.projection import write_kl_trace_csv

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

rng = np.random.default_rng(2)
centers = rng.standard_normal((4, 32)) * 12.0
data = np.vstack([c + rng.standard_normal((40, 32)) for c in centers])
labels = np.repeat([1, 2, 3, 4], 40)

model = fit_pca(data, 2)
ratios = model.explained_variance_ratio
print(f"PCA: first two components explain "
      f"{100 * ratios.sum():.1f}% of the variance ({ratios[0]:.3f} + {ratios[1]:.3f})")
pca_proj = Projection2D(coords=transform_pca(model, data), labels=labels)
emit_scatter(pca_proj, labels, out / "pca_scatter.svg", out / "pca_scatter.csv",
             title="PCA")

config = TsneConfig(perplexity=20, n_iter=600, learning_rate=50, seed=4)
tsne_proj = tsne(data, config)
tsne_proj = Projection2D(coords=tsne_proj.coords, labels=labels,
                         kl_trace=tsne_proj.kl_trace,
                         floor_hits=tsne_proj.floor_hits)
print(f"t-SNE: KL {tsne_proj.kl_trace[0]:.3f} -> {tsne_proj.kl_trace[-1]:.3f} "
      f"over {config.n_iter} iterations")
emit_scatter(tsne_proj, labels, out / "tsne_scatter.svg",
             out / "tsne_scatter.csv", title="t-SNE")
write_kl_trace_csv(tsne_proj, out / "tsne_kl_trace.csv")
print(f"wrote scatter files to {out}")
