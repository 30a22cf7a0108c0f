"""Ranked-retrieval metrics: precision@k, recall@k, NDCG@k, and sweeps.

Relevance is binary: a retrieved row is relevant iff it carries the same
label as the query row. NDCG uses the quotient form DCG@k / IDCG@k with
the ideal list packing all retrievable relevant items first.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .index import VectorIndex, search
from .interchange import LabelTable

INCLUDE = "include"
EXCLUDE = "exclude"


class UndefinedRecallError(ValueError):
    """Recall is 0/0: no relevant items exist for the query's class."""


def relevance_vector(neighbor_ids, query_label: int, labels: LabelTable) -> list:
    """1 per retrieved position whose label matches the query label."""
    bits = []
    for nid in neighbor_ids:
        if not (0 <= nid < labels.count):
            raise KeyError(f"neighbor id {nid} not present in label table")
        bits.append(1 if labels.label_of(nid) == query_label else 0)
    return bits


def precision_at_k(rel, k: int) -> float:
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    m = min(k, len(rel))
    if m == 0:
        return 0.0
    # divide by the retrieved count when fewer than k were retrievable
    return sum(rel[:m]) / m


def recall_at_k(rel, k: int, total_relevant: int) -> float:
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if total_relevant == 0:
        raise UndefinedRecallError("no relevant items exist for this query")
    hits = sum(rel[:k])
    if hits > total_relevant:
        raise ValueError(f"{hits} hits exceed total_relevant={total_relevant}")
    return hits / total_relevant


def dcg_at_k(rel, k: int) -> float:
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    m = min(k, len(rel))
    return sum((2 ** rel[i] - 1) / math.log2(i + 2) for i in range(m))


def ndcg_at_k(rel, k: int, total_relevant: int) -> float:
    """DCG@k over the ideal DCG@k; 1.0 by convention when both are zero."""
    dcg = dcg_at_k(rel, k)
    ideal = [1] * min(k, total_relevant)
    idcg = dcg_at_k(ideal, k) if ideal else 0.0
    if idcg == 0.0:
        return 1.0 if dcg == 0.0 else 0.0
    return dcg / idcg


@dataclass(frozen=True)
class QueryMetrics:
    query_row: int
    k: int
    precision: float
    recall: float
    ndcg: float
    elapsed_s: float
    vacuous: bool = False

    @property
    def elapsed_us(self) -> int:
        return max(1, round(self.elapsed_s * 1e6))


@dataclass(frozen=True)
class EvalReport:
    model_tag: str
    policy: str
    k_values: tuple
    per_query: tuple  # QueryMetrics, sorted by (query_row, k)
    aggregates: tuple  # one dict per k

    def to_json_dict(self) -> dict:
        return {
            "model_tag": self.model_tag,
            "policy": self.policy,
            "rows": [
                {"query": q.query_row, "k": q.k, "precision": q.precision,
                 "recall": q.recall, "ndcg": q.ndcg, "elapsed_us": q.elapsed_us,
                 "vacuous": q.vacuous}
                for q in self.per_query
            ],
            "aggregates": list(self.aggregates),
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json_dict(), f, indent=2)
            f.write("\n")

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["query", "k", "precision", "recall", "ndcg", "search_time_s"])
            for q in self.per_query:
                w.writerow([q.query_row, q.k, q.precision, q.recall, q.ndcg,
                            f"{q.elapsed_s:.6f}"])

    def has_vacuous(self) -> bool:
        return any(q.vacuous for q in self.per_query)


def _class_size(labels: LabelTable, label: int) -> int:
    return int(np.sum(labels.labels() == label))


def evaluate_query(index: VectorIndex, labels: LabelTable, query_row: int,
                   k: int, policy: str = INCLUDE) -> QueryMetrics:
    """Search with a corpus row as the query and score the ranking.

    Under the exclude policy the query row is removed from the result
    list (searching k+1 first) and from the relevant-population count.
    """
    if policy not in (INCLUDE, EXCLUDE):
        raise ValueError(f"unknown self-match policy {policy!r}")
    if not (0 <= query_row < index.count):
        raise ValueError(f"query_row {query_row} outside corpus of {index.count}")
    query_label = labels.label_of(query_row)
    class_size = _class_size(labels, query_label)

    if policy == EXCLUDE:
        total_relevant = class_size - 1
        result = search(index, index.vectors[query_row], k + 1, query_row=query_row)
        ids = [i for i, _ in result.neighbors if i != query_row][:k]
    else:
        total_relevant = class_size
        result = search(index, index.vectors[query_row], k, query_row=query_row)
        ids = [i for i, _ in result.neighbors]

    rel = relevance_vector(ids, query_label, labels)
    precision = precision_at_k(rel, k)
    if total_relevant == 0:
        # vacuous query: no relevant population; flag instead of dividing by zero
        return QueryMetrics(query_row, k, precision, 0.0, 1.0,
                            result.elapsed_s, vacuous=True)
    recall = recall_at_k(rel, k, total_relevant)
    ndcg = ndcg_at_k(rel, k, total_relevant)
    return QueryMetrics(query_row, k, precision, recall, ndcg, result.elapsed_s)


def compute_aggregates(per_query, k_values) -> tuple:
    """Per-k mean/min/max of each metric plus mean search time."""
    out = []
    for k in k_values:
        rows = [q for q in per_query if q.k == k]
        if not rows:
            continue
        entry = {"k": k}
        for name in ("precision", "recall", "ndcg"):
            vals = [getattr(q, name) for q in rows]
            entry[f"mean_{name}"] = sum(vals) / len(vals)
            entry[f"min_{name}"] = min(vals)
            entry[f"max_{name}"] = max(vals)
        entry["mean_time_s"] = sum(q.elapsed_s for q in rows) / len(rows)
        out.append(entry)
    return tuple(out)


def sweep(index: VectorIndex, labels: LabelTable, query_rows, k_values,
          policy: str = INCLUDE, model_tag: str = "") -> EvalReport:
    """One QueryMetrics per (query, k), with per-k aggregates."""
    if not k_values:
        raise ValueError("k_values must be nonempty")
    per_query = []
    for row in query_rows:
        for k in k_values:
            per_query.append(evaluate_query(index, labels, row, k, policy))
    per_query.sort(key=lambda q: (q.query_row, q.k))
    aggregates = compute_aggregates(per_query, k_values)
    return EvalReport(model_tag=model_tag or index.source_tag, policy=policy,
                      k_values=tuple(k_values), per_query=tuple(per_query),
                      aggregates=aggregates)
