"""Command-line surface: ingest -> build -> query -> evaluate -> project -> report.

Exit codes: 0 success, 2 interchange error, 3 evaluation domain error,
4 query error, 5 projection error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import index as index_mod
from . import interchange, metrics, projection

EXIT_OK = 0
EXIT_INTERCHANGE = 2
EXIT_EVALUATION = 3
EXIT_QUERY = 4
EXIT_PROJECTION = 5

DEFAULT_K_VALUES = (1, 5, 10, 20, 50, 100)


@dataclass(frozen=True)
class RunConfig:
    embeddings_path: str
    labels_path: str
    metric: str = "l2"  # l2 | cosine | ip
    k_values: tuple = DEFAULT_K_VALUES
    query_rows: object = "all"  # "all" or list of ints
    self_match: str = metrics.INCLUDE
    output_dir: str = "."
    seed: int = 0
    model_tag: str = ""

    def __post_init__(self):
        ks = tuple(int(k) for k in self.k_values)
        if not ks:
            raise ValueError("k_values must be nonempty")
        if any(k < 1 for k in ks):
            raise ValueError("k_values must be positive")
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("k_values must be strictly ascending")
        object.__setattr__(self, "k_values", ks)
        if self.metric not in ("l2", "cosine", "ip"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.self_match not in (metrics.INCLUDE, metrics.EXCLUDE):
            raise ValueError(f"unknown self-match policy {self.self_match!r}")

    @staticmethod
    def from_json_file(path) -> "RunConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return RunConfig(**raw)


def _metric_from_name(name: str) -> index_mod.Metric:
    if name == "l2":
        return index_mod.Metric.l2()
    if name == "cosine":
        return index_mod.Metric.cosine()
    return index_mod.Metric.inner_product()


def _parse_k_list(text: str):
    return tuple(int(v) for v in text.split(","))


def _parse_query_rows(text: str):
    if text == "all":
        return "all"
    return [int(v) for v in text.split(",")]


def _load_embeddings_any(path: str) -> interchange.EmbeddingSet:
    """Accept either an EMB1 file or a CSV of float rows."""
    p = Path(path)
    with open(p, "rb") as f:
        head = f.read(4)
    if head == interchange.MAGIC or p.suffix == ".emb1":
        return interchange.read_embeddings_file(p, source_tag=p.stem)
    rows = []
    try:
        with open(p, "r", encoding="utf-8", newline="") as f:
            for record in csv.reader(f):
                if record:
                    rows.append([float(v) for v in record])
    except (csv.Error, UnicodeDecodeError) as e:
        raise interchange.FormatError(f"cannot parse {path} as embeddings CSV: {e}")
    if not rows:
        raise interchange.FormatError(f"no embedding rows in {path}")
    return interchange.EmbeddingSet(np.asarray(rows, dtype=np.float32),
                                    source_tag=p.stem)


def _load_query_vector(path: str) -> np.ndarray:
    text = Path(path).read_text(encoding="utf-8").replace(",", " ")
    return np.array([float(v) for v in text.split()], dtype=np.float64)


def cmd_ingest(args) -> int:
    try:
        embeddings = _load_embeddings_any(args.embeddings)
        labels = None
        if args.labels:
            labels = interchange.read_labels_file(args.labels)
            report = interchange.validate_alignment(embeddings, labels)
            if not report.ok:
                print(f"error: {report.message()}", file=sys.stderr)
                return EXIT_INTERCHANGE
        interchange.write_embeddings_file(embeddings, args.out_embeddings)
        if labels is not None and args.out_labels:
            interchange.write_labels_file(labels, args.out_labels)
    except (interchange.FormatError, interchange.LabelError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INTERCHANGE
    print(f"wrote {embeddings.count} vectors of dim {embeddings.dim} "
          f"to {args.out_embeddings}")
    return EXIT_OK


def cmd_build(args) -> int:
    try:
        embeddings = interchange.read_embeddings_file(args.embeddings)
        idx = index_mod.build(embeddings, _metric_from_name(args.metric))
        index_mod.save_index(idx, args.out)
    except (interchange.FormatError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INTERCHANGE
    except index_mod.DegenerateVectorError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_QUERY
    print(f"built {args.metric} index over {idx.count} vectors -> {args.out}")
    return EXIT_OK


def cmd_query(args) -> int:
    try:
        embeddings = interchange.read_embeddings_file(args.embeddings)
        labels = interchange.read_labels_file(args.labels) if args.labels else None
        idx = index_mod.build(embeddings, _metric_from_name(args.metric))
        if args.row is not None:
            if not (0 <= args.row < idx.count):
                print(f"error: row {args.row} outside corpus of {idx.count}",
                      file=sys.stderr)
                return EXIT_QUERY
            query = embeddings.data[args.row]
            query_row = args.row
        else:
            query = _load_query_vector(args.vector)
            query_row = None
        if args.k > idx.count:
            print(f"warning: k={args.k} clamped to corpus size {idx.count}",
                  file=sys.stderr)
        result = index_mod.search(idx, query, args.k, query_row=query_row)
    except (index_mod.DimensionMismatchError, index_mod.DegenerateVectorError,
            ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_QUERY
    except (interchange.FormatError, interchange.LabelError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INTERCHANGE

    if args.json:
        payload = {
            "query_row": query_row,
            "elapsed_us": result.elapsed_us,
            "neighbors": [
                {"id": nid, "score": score,
                 "label": labels.label_of(nid) if labels else None}
                for nid, score in result.neighbors
            ],
        }
        print(json.dumps(payload))
    else:
        for nid, score in result.neighbors:
            lab = labels.label_of(nid) if labels else ""
            print(f"{nid}\t{score:.6f}\t{lab}")
    return EXIT_OK


def _build_run_config(args) -> RunConfig:
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text(encoding="utf-8"))
    overrides = {
        "embeddings_path": args.embeddings,
        "labels_path": args.labels,
        "metric": args.metric,
        "k_values": _parse_k_list(args.k_values) if args.k_values else None,
        "query_rows": _parse_query_rows(args.queries) if args.queries else None,
        "self_match": args.self_match,
        "output_dir": args.output_dir,
        "seed": args.seed,
        "model_tag": args.model_tag,
    }
    for key, value in overrides.items():
        if value is not None:
            base[key] = value
    return RunConfig(**base)


def cmd_evaluate(args) -> int:
    try:
        config = _build_run_config(args)
        embeddings = interchange.read_embeddings_file(config.embeddings_path)
        labels = interchange.read_labels_file(config.labels_path)
        report = interchange.validate_alignment(embeddings, labels)
        if not report.ok:
            print(f"error: {report.message()}", file=sys.stderr)
            return EXIT_INTERCHANGE
    except (interchange.FormatError, interchange.LabelError, OSError,
            TypeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INTERCHANGE

    try:
        idx = index_mod.build(embeddings, _metric_from_name(config.metric))
        rows = (range(idx.count) if config.query_rows == "all"
                else config.query_rows)
        tag = config.model_tag or embeddings.source_tag or "model"
        eval_report = metrics.sweep(idx, labels, rows, config.k_values,
                                    policy=config.self_match, model_tag=tag)
    except (metrics.UndefinedRecallError, ValueError,
            index_mod.DegenerateVectorError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_EVALUATION

    if eval_report.has_vacuous() and not args.allow_vacuous:
        print("error: vacuous queries present (no relevant population); "
              "re-run with --allow-vacuous to keep them", file=sys.stderr)
        return EXIT_EVALUATION

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    eval_report.write_json(out / f"{tag}_report.json")
    eval_report.write_csv(out / f"{tag}_report.csv")

    print(f"model={tag} policy={config.self_match} metric={config.metric}")
    header = f"{'k':>5} {'precision':>10} {'recall':>10} {'ndcg':>10} {'time_s':>10}"
    print(header)
    for agg in eval_report.aggregates:
        print(f"{agg['k']:>5} {agg['mean_precision']:>10.4f} "
              f"{agg['mean_recall']:>10.6f} {agg['mean_ndcg']:>10.4f} "
              f"{agg['mean_time_s']:>10.6f}")
    return EXIT_OK


def cmd_project(args) -> int:
    try:
        embeddings = interchange.read_embeddings_file(args.embeddings)
        labels = interchange.read_labels_file(args.labels) if args.labels else None
        if labels is not None:
            report = interchange.validate_alignment(embeddings, labels)
            if not report.ok:
                print(f"error: {report.message()}", file=sys.stderr)
                return EXIT_INTERCHANGE
    except (interchange.FormatError, interchange.LabelError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INTERCHANGE

    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    label_values = labels.labels() if labels is not None else None
    try:
        if args.method == "pca":
            n_comp = min(2, embeddings.count - 1, embeddings.dim)
            model = projection.fit_pca(embeddings.data, n_comp)
            coords = projection.transform_pca(model, embeddings.data)
            if coords.shape[1] < 2:
                coords = np.hstack([coords, np.zeros((coords.shape[0], 1))])
            proj = projection.Projection2D(coords=coords[:, :2], labels=label_values)
            print(" ".join(f"{r:.6f}" for r in model.explained_variance_ratio))
        else:
            config = projection.TsneConfig(perplexity=args.perplexity,
                                           n_iter=args.iterations,
                                           seed=args.seed)
            proj = projection.tsne(embeddings.data, config)
            proj = projection.Projection2D(coords=proj.coords, labels=label_values,
                                           kl_trace=proj.kl_trace,
                                           floor_hits=proj.floor_hits)
            projection.write_kl_trace_csv(proj, out / f"{args.method}_kl_trace.csv")
        projection.emit_scatter(proj, label_values,
                                out / f"{args.method}_scatter.svg",
                                out / f"{args.method}_scatter.csv",
                                title=args.method.upper())
    except (projection.DegenerateDataError, projection.PerplexityError,
            projection.DivergedError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PROJECTION
    print(f"wrote {args.method} projection files to {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    """Combine per-model evaluation reports into one comparison table + chart."""
    models = []
    try:
        for path in args.reports:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
            models.append(raw)
    except (OSError, json.JSONDecodeError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INTERCHANGE

    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    combined = out / "comparison.csv"
    with open(combined, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["model", "k", "mean_precision", "mean_recall",
                    "mean_ndcg", "mean_time_s"])
        for raw in models:
            for agg in raw["aggregates"]:
                w.writerow([raw["model_tag"], agg["k"], agg["mean_precision"],
                            agg["mean_recall"], agg["mean_ndcg"],
                            agg["mean_time_s"]])
    _write_comparison_svg(models, out / "comparison.svg")
    print(f"wrote comparison files for {len(models)} models to {out}")
    return EXIT_OK


_SERIES_COLORS = ["#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377"]


def _write_comparison_svg(models, path) -> None:
    """Small-multiple line charts: each metric vs k, one line per model."""
    panels = [("mean_precision", "precision"), ("mean_recall", "recall"),
              ("mean_ndcg", "NDCG"), ("mean_time_s", "search time (s)")]
    pw, ph, margin = 320, 240, 40
    width, height = pw * 2, ph * 2
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    for p, (key, label) in enumerate(panels):
        ox, oy = (p % 2) * pw, (p // 2) * ph
        ks = sorted({agg["k"] for raw in models for agg in raw["aggregates"]})
        vals = [agg[key] for raw in models for agg in raw["aggregates"]]
        if not ks or not vals:
            continue
        vmax = max(vals) or 1.0
        kmax = max(ks)

        def px(k):
            return ox + margin + k / kmax * (pw - 2 * margin)

        def py(v):
            return oy + ph - margin - v / vmax * (ph - 2 * margin)

        parts.append(f'<text x="{ox + pw / 2}" y="{oy + 18}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="13">{label} vs k</text>')
        for m, raw in enumerate(models):
            color = _SERIES_COLORS[m % len(_SERIES_COLORS)]
            pts = " ".join(f"{px(agg['k']):.1f},{py(agg[key]):.1f}"
                           for agg in sorted(raw["aggregates"], key=lambda a: a["k"]))
            parts.append(f'<polyline points="{pts}" fill="none" '
                         f'stroke="{color}" stroke-width="2"/>')
            if p == 0:
                parts.append(f'<text x="{ox + margin}" y="{oy + 30 + m * 14}" '
                             f'font-family="sans-serif" font-size="11" '
                             f'fill="{color}">{raw["model_tag"]}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="retrievalkit",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert embeddings CSV/EMB1 + labels CSV "
                                      "into validated interchange files")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels")
    p.add_argument("--out-embeddings", required=True)
    p.add_argument("--out-labels")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build", help="build and persist a flat index")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--metric", choices=["l2", "cosine", "ip"], default="l2")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="top-k search for one query")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels")
    p.add_argument("--metric", choices=["l2", "cosine", "ip"], default="l2")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--row", type=int)
    g.add_argument("--vector", help="text file of whitespace/comma floats")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("evaluate", help="precision/recall/NDCG sweep over k")
    p.add_argument("--config", help="RunConfig JSON; flags override fields")
    p.add_argument("--embeddings")
    p.add_argument("--labels")
    p.add_argument("--metric", choices=["l2", "cosine", "ip"])
    p.add_argument("--k-values", help="comma list, e.g. 1,5,10,20,50,100")
    p.add_argument("--queries", help='"all" or comma list of rows')
    p.add_argument("--self-match", dest="self_match",
                   choices=[metrics.INCLUDE, metrics.EXCLUDE])
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--model-tag", dest="model_tag")
    p.add_argument("--allow-vacuous", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("project", help="PCA or t-SNE scatter of the embeddings")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels")
    p.add_argument("--method", choices=["pca", "tsne"], required=True)
    p.add_argument("--output-dir", dest="output_dir", default=".")
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("report", help="combine evaluation reports into a "
                                      "model-comparison table and chart")
    p.add_argument("reports", nargs="+", help="report JSON files")
    p.add_argument("--output-dir", dest="output_dir", default=".")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
