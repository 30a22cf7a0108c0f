"""Embedding-space analysis: PCA, exact t-SNE, and scatter emission.

PCA is computed by SVD of the centered data matrix with a deterministic
sign convention (largest-magnitude entry of each component positive).
t-SNE is the exact O(N^2) algorithm: per-point Gaussian bandwidths found
by bisection on perplexity, symmetrized joint affinities, Student-t
low-dimensional kernel, gradient descent with momentum and early
exaggeration, KL divergence traced every iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

EPS = 1e-12  # numerical floor inside logs/divisions


class DegenerateDataError(ValueError):
    pass


class PerplexityError(ValueError):
    pass


class DivergedError(RuntimeError):
    """Non-finite intermediate during t-SNE optimization."""

    def __init__(self, iteration: int):
        super().__init__(f"non-finite coordinates at iteration {iteration}")
        self.iteration = iteration


# ---------------------------------------------------------------------------
# PCA

@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray                       # (d,)
    components: np.ndarray                 # (c, d) orthonormal rows
    explained_variance: np.ndarray         # (c,) descending
    explained_variance_ratio: np.ndarray   # (c,) descending, sums <= 1


def fit_pca(data, n_components: int) -> PcaModel:
    """PCA via SVD of the centered data; ratios are against total variance."""
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need a 2-D matrix with at least 2 rows")
    n, d = X.shape
    if not (1 <= n_components <= min(n - 1, d)):
        raise ValueError(f"n_components must be in [1, {min(n - 1, d)}], "
                         f"got {n_components}")
    mean = X.mean(axis=0)
    Xc = X - mean
    total_variance = float(np.sum(Xc * Xc)) / (n - 1)
    if total_variance <= 0.0:
        raise DegenerateDataError("all rows identical: total variance is zero")
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    variances = (s * s) / (n - 1)
    # deterministic signs: flip each axis so its largest |entry| is positive
    for i in range(vt.shape[0]):
        j = int(np.argmax(np.abs(vt[i])))
        if vt[i, j] < 0:
            vt[i] = -vt[i]
    comps = vt[:n_components]
    var = variances[:n_components]
    return PcaModel(mean=mean, components=comps, explained_variance=var,
                    explained_variance_ratio=var / total_variance)


def transform_pca(model: PcaModel, data) -> np.ndarray:
    X = np.asarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.mean.shape[0]:
        raise ValueError(f"data dim {X.shape[1]} != model dim {model.mean.shape[0]}")
    return (X - model.mean) @ model.components.T


# ---------------------------------------------------------------------------
# t-SNE

@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    n_iter: int = 1000
    early_exaggeration: float = 12.0
    learning_rate: float = 200.0
    momentum_initial: float = 0.5
    momentum_final: float = 0.8
    exaggeration_end_iter: int = 250
    seed: int = 0
    pca_dim: int = 50  # pre-reduction width before computing affinities

    def __post_init__(self):
        if self.perplexity <= 1.0:
            raise PerplexityError(f"perplexity must exceed 1, got {self.perplexity}")


@dataclass(frozen=True)
class Projection2D:
    coords: np.ndarray              # (N, 2)
    labels: np.ndarray | None = None
    kl_trace: tuple = ()
    floor_hits: int = 0             # how often the EPS floor fired in Q


def _squared_distances(X: np.ndarray) -> np.ndarray:
    sq = np.sum(X * X, axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(D, 0.0, out=D)
    np.fill_diagonal(D, 0.0)
    return D


def perplexity_calibration(sq_distances, target_perplexity: float,
                           max_iter: int = 50, tol_rel: float = 1e-5):
    """Bisection for the Gaussian precision beta matching a perplexity.

    Returns (beta, probabilities) where the conditional distribution
    p_j = exp(-beta d_j) / sum exp(-beta d_l) has 2^entropy within
    tol_rel of the target (or the best found after max_iter steps).
    """
    d = np.asarray(sq_distances, dtype=np.float64).reshape(-1)
    if d.size == 0 or np.max(d) <= 0.0:
        raise DegenerateDataError("all neighbor distances are zero")

    def entropy_and_probs(beta):
        w = np.exp(-beta * (d - np.min(d)))  # shift for stability
        total = np.sum(w)
        p = w / total
        h = -np.sum(p * np.log2(np.maximum(p, EPS)))
        return h, p

    target_h = math.log2(target_perplexity)
    beta = 1.0
    beta_min, beta_max = 0.0, np.inf
    h, p = entropy_and_probs(beta)
    for _ in range(max_iter):
        if abs(2.0 ** h - target_perplexity) <= tol_rel * target_perplexity:
            break
        if h > target_h:  # too flat: sharpen
            beta_min = beta
            beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
        else:
            beta_max = beta
            beta = (beta + beta_min) / 2.0
        h, p = entropy_and_probs(beta)
    return beta, p


def joint_probabilities(X, perplexity: float) -> np.ndarray:
    """Symmetrized joint affinity matrix P (zero diagonal, sums to 1)."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if perplexity >= (n - 1) / 3:
        raise PerplexityError(f"perplexity {perplexity} too large for {n} points "
                              f"(needs < {(n - 1) / 3:.2f})")
    D = _squared_distances(X)
    cond = np.zeros((n, n))
    others = np.arange(n)
    for i in range(n):
        mask = others != i
        _, p = perplexity_calibration(D[i, mask], perplexity)
        cond[i, mask] = p
    P = (cond + cond.T) / (2.0 * n)
    np.fill_diagonal(P, 0.0)
    return P


def low_dim_affinities(Y: np.ndarray):
    """Student-t kernel: returns (Q, floored count, unnormalized weights)."""
    num = 1.0 / (1.0 + _squared_distances(Y))
    np.fill_diagonal(num, 0.0)
    Q = num / np.sum(num)
    floored = int(np.sum((Q < EPS) & (num > 0.0)))
    return Q, floored, num


def kl_divergence(P, Q) -> float:
    """KL(P || Q) over the support of P; both joint distributions."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.shape != Q.shape:
        raise ValueError(f"shape mismatch {P.shape} vs {Q.shape}")
    if np.any(P < 0.0) or np.any(Q < 0.0):
        raise ValueError("affinity matrices must be non-negative")
    mask = P > 0.0
    return float(np.sum(P[mask] * np.log(P[mask] / np.maximum(Q[mask], EPS))))


def kl_gradient(P: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Analytic dKL/dY for the Student-t low-dimensional kernel."""
    Q, _, num = low_dim_affinities(Y)
    PQ = (P - Q) * num
    # grad_i = 4 * sum_j PQ_ij (y_i - y_j)
    return 4.0 * (PQ.sum(axis=1)[:, None] * Y - PQ @ Y)


def _initial_coords(X: np.ndarray, seed: int) -> np.ndarray:
    n, d = X.shape
    if d >= 2:
        model = fit_pca(X, 2)
        Y = transform_pca(model, X)
        std = float(Y.std())
        if std > 0.0:
            return Y / std * 1e-4
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, 2)) * 1e-4


def tsne(data, config: TsneConfig = TsneConfig()) -> Projection2D:
    """Exact t-SNE to 2-D with per-iteration KL trace; seeded, deterministic."""
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 4:
        raise ValueError("need a 2-D matrix with at least 4 rows")
    n, d = X.shape
    # standard pre-reduction: affinities on a PCA-compressed copy
    target = min(config.pca_dim, d, n - 1)
    if d > target:
        X = transform_pca(fit_pca(X, target), X)

    P = joint_probabilities(X, config.perplexity)
    Y = _initial_coords(X, config.seed)
    velocity = np.zeros_like(Y)
    kl_trace = []
    floor_hits = 0

    Q, floored, num = low_dim_affinities(Y)
    floor_hits += floored
    for it in range(config.n_iter):
        exaggerating = it < config.exaggeration_end_iter
        P_eff = P * config.early_exaggeration if exaggerating else P
        PQ = (P_eff - Q) * num
        grad = 4.0 * (PQ.sum(axis=1)[:, None] * Y - PQ @ Y)
        momentum = config.momentum_initial if exaggerating else config.momentum_final
        velocity = momentum * velocity - config.learning_rate * grad
        Y = Y + velocity
        if not np.all(np.isfinite(Y)):
            raise DivergedError(it)
        # trace the true (unexaggerated) objective at the updated coords
        Q, floored, num = low_dim_affinities(Y)
        floor_hits += floored
        kl_trace.append(kl_divergence(P, Q))

    return Projection2D(coords=Y, kl_trace=tuple(kl_trace), floor_hits=floor_hits)


# ---------------------------------------------------------------------------
# Scatter emission

_PALETTE = {
    1: "#4477aa", 2: "#66ccee", 3: "#228833",
    4: "#ccbb44", 5: "#ee6677", 6: "#aa3377",
}
_FALLBACK_COLOR = "#777777"


def _format_coord(x: float) -> str:
    return f"{x:.6g}"


def write_projection_csv(projection: Projection2D, path,
                         labels=None) -> None:
    labels = _resolve_labels(projection, labels)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("x,y,label\n")
        for i, (x, y) in enumerate(projection.coords):
            lab = labels[i] if labels is not None else ""
            f.write(f"{_format_coord(x)},{_format_coord(y)},{lab}\n")


def write_kl_trace_csv(projection: Projection2D, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("iter,kl\n")
        for i, v in enumerate(projection.kl_trace):
            f.write(f"{i},{v:.9g}\n")


def _resolve_labels(projection: Projection2D, labels):
    if labels is None:
        labels = projection.labels
    if labels is None:
        return None
    labels = np.asarray(labels).reshape(-1)
    if labels.shape[0] != projection.coords.shape[0]:
        raise ValueError(f"{labels.shape[0]} labels for "
                         f"{projection.coords.shape[0]} points")
    return labels


def emit_scatter(projection: Projection2D, labels, svg_path,
                 csv_path=None, title: str = "") -> None:
    """Self-contained SVG scatter (one <circle> per point, legend per
    label present) plus a companion x,y,label CSV."""
    labels = _resolve_labels(projection, labels)
    coords = projection.coords
    width, height, margin = 640, 480, 50

    if coords.shape[0] > 0:
        xmin, ymin = coords.min(axis=0)
        xmax, ymax = coords.max(axis=0)
        xspan = (xmax - xmin) or 1.0
        yspan = (ymax - ymin) or 1.0
    else:
        xmin = ymin = 0.0
        xspan = yspan = 1.0

    def sx(x):
        return margin + (x - xmin) / xspan * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - ymin) / yspan * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{width / 2}" y="24" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="16">{title}</text>')
    for i, (x, y) in enumerate(coords):
        if labels is not None:
            color = _PALETTE.get(int(labels[i]), _FALLBACK_COLOR)
        else:
            color = _FALLBACK_COLOR
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" '
                     f'fill="{color}" fill-opacity="0.75"/>')
    if labels is not None:
        present = sorted({int(v) for v in labels})
        for row, lab in enumerate(present):
            ly = margin + row * 20
            color = _PALETTE.get(lab, _FALLBACK_COLOR)
            parts.append(f'<rect x="{width - margin - 60}" y="{ly - 9}" '
                         f'width="12" height="12" fill="{color}" class="legend"/>')
            parts.append(f'<text x="{width - margin - 42}" y="{ly + 2}" '
                         f'font-family="sans-serif" font-size="12" '
                         f'class="legend">{lab}</text>')
    parts.append("</svg>")
    with open(svg_path, "w", encoding="utf-8") as f:
        f.write("\n".join(parts) + "\n")
    if csv_path is not None:
        write_projection_csv(projection, csv_path, labels)
