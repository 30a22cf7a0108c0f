"""Exact vector-similarity retrieval with ranked-retrieval evaluation.

Flat L2 / cosine indexing over embedding sets, precision/recall/NDCG@k
sweeps, PCA and exact t-SNE embedding-space analysis, and a bit-exact
binary interchange format (EMB1) for embeddings plus a labels CSV.
"""

from .interchange import (AlignmentReport, EmbeddingSet, FormatError,
                          LabelError, LabelTable, read_embeddings,
                          read_embeddings_file, read_labels, read_labels_file,
                          validate_alignment, write_embeddings,
                          write_embeddings_file, write_labels,
                          write_labels_file)
from .index import (DegenerateVectorError, DimensionMismatchError, Metric,
                    RankedResult, VectorIndex, batch_search, build,
                    inner_product, l2_distance, load_index, normalize,
                    save_index, search)
from .metrics import (EvalReport, QueryMetrics, UndefinedRecallError,
                      dcg_at_k, evaluate_query, ndcg_at_k, precision_at_k,
                      recall_at_k, relevance_vector, sweep)
from .projection import (DegenerateDataError, DivergedError, PcaModel,
                         PerplexityError, Projection2D, TsneConfig,
                         emit_scatter, fit_pca, joint_probabilities,
                         kl_divergence, kl_gradient, low_dim_affinities,
                         perplexity_calibration, transform_pca, tsne)

__version__ = "0.1.0"
