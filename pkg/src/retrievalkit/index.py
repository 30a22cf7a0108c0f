"""Flat (brute-force) exact vector indices.

Vectors are stored in float32; all scoring runs in float64 with a fixed
reduction order, so rankings are deterministic. L2 results report the
true Euclidean distance; inner-product results report the raw dot
product (cosine similarity when the index is built normalized).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .interchange import (EmbeddingSet, read_embeddings_file,
                          write_embeddings_file)

L2 = "l2"
INNER_PRODUCT = "ip"

ZERO_NORM_FLOOR = 1e-12


class DegenerateVectorError(ValueError):
    """A vector with (near-)zero norm where a direction is required."""


class DimensionMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Metric:
    kind: str  # L2 or INNER_PRODUCT
    normalized: bool = False

    def __post_init__(self):
        if self.kind not in (L2, INNER_PRODUCT):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.kind == L2 and self.normalized:
            raise ValueError("normalized flag is only meaningful for inner product")

    @staticmethod
    def l2() -> "Metric":
        return Metric(L2)

    @staticmethod
    def cosine() -> "Metric":
        return Metric(INNER_PRODUCT, normalized=True)

    @staticmethod
    def inner_product() -> "Metric":
        return Metric(INNER_PRODUCT, normalized=False)


@dataclass(frozen=True)
class RankedResult:
    """Ordered neighbors for one query plus the measured search time."""

    neighbors: tuple  # ((id, score), ...) best first
    elapsed_s: float
    query_row: int | None = None

    @property
    def ids(self) -> list:
        return [i for i, _ in self.neighbors]

    @property
    def scores(self) -> list:
        return [s for _, s in self.neighbors]

    @property
    def elapsed_us(self) -> int:
        # microsecond resolution, never rounded down to zero
        return max(1, round(self.elapsed_s * 1e6))


def _as_vector(v, dim: int | None = None) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatchError(f"vector has dim {arr.shape[0]}, expected {dim}")
    return arr


def l2_distance(a, b) -> float:
    """Euclidean distance, accumulated in double precision."""
    av = _as_vector(a)
    bv = _as_vector(b, av.shape[0])
    d = av - bv
    return float(np.sqrt(np.sum(d * d)))


def inner_product(a, b) -> float:
    av = _as_vector(a)
    bv = _as_vector(b, av.shape[0])
    return float(np.sum(av * bv))


def normalize(v) -> np.ndarray:
    """Scale to unit Euclidean norm; rejects (near-)zero vectors."""
    av = _as_vector(v)
    norm = float(np.sqrt(np.sum(av * av)))
    if norm < ZERO_NORM_FLOOR:
        raise DegenerateVectorError(f"cannot normalize vector with norm {norm}")
    return av / norm


class VectorIndex:
    """Immutable flat index over an embedding set. Use :func:`build`."""

    def __init__(self, metric: Metric, stored: np.ndarray, source_tag: str = ""):
        self.metric = metric
        self.source_tag = source_tag
        # float32 copy mirrors what persistence writes; float64 working
        # copy is what every query scores against.
        self._stored = np.ascontiguousarray(stored, dtype=np.float32)
        self._stored.setflags(write=False)
        self._work = self._stored.astype(np.float64)
        self._work.setflags(write=False)

    @property
    def count(self) -> int:
        return self._stored.shape[0]

    @property
    def dim(self) -> int:
        return self._stored.shape[1]

    @property
    def vectors(self) -> np.ndarray:
        return self._stored


def build(embeddings: EmbeddingSet, metric: Metric) -> VectorIndex:
    """Copy (and, for cosine, normalize) the vectors into a flat index."""
    data = embeddings.data.astype(np.float64)
    if metric.normalized:
        norms = np.sqrt(np.sum(data * data, axis=1))
        bad = np.where(norms < ZERO_NORM_FLOOR)[0]
        if bad.size:
            raise DegenerateVectorError(
                f"cannot build normalized index: row {int(bad[0])} has zero norm")
        data = data / norms[:, None]
    return VectorIndex(metric, data, source_tag=embeddings.source_tag)


def _score(index: VectorIndex, query: np.ndarray):
    """Return (sort key ascending-is-better, reported scores)."""
    if index.metric.kind == L2:
        diff = index._work - query
        sq = np.sum(diff * diff, axis=1)
        return sq, np.sqrt(sq)
    dots = np.sum(index._work * query, axis=1)
    return -dots, dots


def search(index: VectorIndex, query, k: int,
           query_row: int | None = None) -> RankedResult:
    """Exact top-k under the index metric; ties broken by ascending id.

    Timing covers scoring + selection only; query normalization for
    cosine indices happens outside the timed region.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    q = _as_vector(query, index.dim)
    if index.metric.normalized:
        q = normalize(q)
    kk = min(k, index.count)

    t0 = time.perf_counter_ns()
    key, reported = _score(index, q)
    order = np.argsort(key, kind="stable")[:kk]  # stable sort = ascending-id ties
    top_scores = reported[order]
    t1 = time.perf_counter_ns()

    neighbors = tuple((int(i), float(s)) for i, s in zip(order, top_scores))
    return RankedResult(neighbors=neighbors, elapsed_s=(t1 - t0) / 1e9,
                        query_row=query_row)


def batch_search(index: VectorIndex, queries, k: int) -> list:
    """Independent searches in input order, one timing per query."""
    return [search(index, q, k) for q in queries]


def save_index(index: VectorIndex, path) -> None:
    """Persist as a standard EMB1 file plus a metric sidecar JSON."""
    path = Path(path)
    write_embeddings_file(EmbeddingSet(index.vectors, source_tag=index.source_tag), path)
    sidecar = {"metric": index.metric.kind, "normalized": index.metric.normalized}
    Path(str(path) + ".json").write_text(json.dumps(sidecar) + "\n", encoding="utf-8")


def load_index(path) -> VectorIndex:
    path = Path(path)
    meta = json.loads(Path(str(path) + ".json").read_text(encoding="utf-8"))
    metric = Metric(meta["metric"], bool(meta["normalized"]))
    embeddings = read_embeddings_file(path)
    # stored vectors are already normalized when the sidecar says so
    return VectorIndex(metric, embeddings.data, source_tag=embeddings.source_tag)
