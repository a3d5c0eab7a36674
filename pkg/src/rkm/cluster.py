"""Clustering algorithms: seeded k-means with restarts, kernel PCA
clustering, covariance-based spectral clustering with soft thresholding, the
radial fallback, and permutation-aligned accuracy scoring."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import linalg
from .errors import DegenerateSeparationError, ValidationError
from .gram import delta_statistic
from .kernels import KernelSpec, ht_kernel, kernel_matrix, on_sphere
from .model import Dataset, MixtureModel, label_blocks, project_to_sphere

DEFAULT_C1 = 1.0 / 12.0
DEFAULT_C2 = 0.01
DEFAULT_RESTARTS = 10
_KMEANS_MAX_ITER = 300
# distinct Philox key domain so k-means streams never collide with sampling
_KMEANS_KEY_DOMAIN = 1 << 48


@dataclass(frozen=True)
class ClusteringResult:
    """Predicted labels, permutation-aligned accuracy against the reference
    labels, and named diagnostics of the run."""

    labels: np.ndarray
    accuracy: float
    diagnostics: dict


# --- k-means -----------------------------------------------------------------


def _sq_distances(points, centers):
    """Squared euclidean distances, shape (k, N)."""
    pp = np.sum(points * points, axis=0)
    cc = np.sum(centers * centers, axis=0)
    return np.maximum(cc[:, None] - 2.0 * (centers.T @ points) + pp[None, :], 0.0)


def _seed_centers(points, k, gen):
    """Distance-weighted (k-means++ style) seeding."""
    d, n = points.shape
    centers = np.empty((d, k))
    centers[:, 0] = points[:, int(gen.integers(n))]
    closest = _sq_distances(points, centers[:, :1])[0]
    for j in range(1, k):
        total = closest.sum()
        if total > 0.0:
            idx = int(gen.choice(n, p=closest / total))
        else:
            idx = int(gen.integers(n))
        centers[:, j] = points[:, idx]
        closest = np.minimum(closest, _sq_distances(points, centers[:, j : j + 1])[0])
    return centers


def _lloyd(points, centers, k):
    """Lloyd iterations; cost is checked to be nonincreasing every step."""
    n = points.shape[1]
    prev_cost = np.inf
    labels = None
    for _ in range(_KMEANS_MAX_ITER):
        dist = _sq_distances(points, centers)
        new_labels = np.argmin(dist, axis=0)
        assigned = dist[new_labels, np.arange(n)]
        # empty clusters grab the point farthest from its current center
        for j in range(k):
            if not np.any(new_labels == j):
                far = int(np.argmax(assigned))
                centers[:, j] = points[:, far]
                new_labels[far] = j
                assigned[far] = 0.0
        cost = float(assigned.sum())
        if cost > prev_cost + 1e-9 * (1.0 + prev_cost):
            raise AssertionError(
                f"k-means cost increased from {prev_cost!r} to {cost!r}"
            )
        if labels is not None and np.array_equal(new_labels, labels):
            return labels, cost
        labels = new_labels
        prev_cost = cost
        for j in range(k):
            members = labels == j
            if np.any(members):
                centers[:, j] = points[:, members].mean(axis=1)
    return labels, prev_cost


def kmeans(points, k: int, restarts: int = DEFAULT_RESTARTS, seed: int = 0):
    """Best-of-restarts k-means on the columns of `points` (one point per
    column).  Returns (centers, labels, cost); deterministic given seed."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValidationError("points must be a d x N matrix")
    n = points.shape[1]
    if not 1 <= k <= n:
        raise ValidationError(f"k must lie in [1, {n}], got {k}")
    if restarts < 1:
        raise ValidationError(f"restarts must be >= 1, got {restarts}")
    best = None
    for r in range(restarts):
        gen = np.random.Generator(
            np.random.Philox(key=[seed & (2**64 - 1), _KMEANS_KEY_DOMAIN + r])
        )
        centers = _seed_centers(points, k, gen)
        labels, cost = _lloyd(points, centers, k)
        if best is None or cost < best[2]:
            centers_final = np.empty_like(centers)
            for j in range(k):
                members = labels == j
                centers_final[:, j] = (
                    points[:, members].mean(axis=1) if np.any(members) else centers[:, j]
                )
            best = (centers_final, labels, cost)
    return best


# --- label alignment ---------------------------------------------------------


def align_and_score(predicted, truth) -> float:
    """Agreement fraction after the best relabeling of `predicted`.

    Exact over all label permutations when both sides use at most 6 distinct
    labels; greedy matching (approximate) beyond that.
    """
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.ndim != 1:
        raise ValidationError("predicted and truth must be equal-length vectors")
    n = predicted.shape[0]
    vp = np.unique(predicted)
    vt = np.unique(truth)
    m = max(len(vp), len(vt))
    counts = np.zeros((m, m))
    for i, p in enumerate(vp):
        mask = predicted == p
        for j, t in enumerate(vt):
            counts[i, j] = np.sum(truth[mask] == t)
    if m <= 6:
        best = max(
            sum(counts[i, perm[i]] for i in range(m))
            for perm in permutations(range(m))
        )
        return float(best / n)
    # greedy: repeatedly take the largest remaining count (approximate)
    work = counts.copy()
    total = 0.0
    for _ in range(m):
        i, j = np.unravel_index(np.argmax(work), work.shape)
        total += work[i, j]
        work[i, :] = -1.0
        work[:, j] = -1.0
    return float(total / n)


# --- clustering pipelines ----------------------------------------------------


def kernel_pca_cluster(
    data: Dataset,
    spec: KernelSpec,
    k: int,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
) -> ClusteringResult:
    """Spectral embedding through the top-k eigenvectors of the kernel
    matrix (each scaled to norm sqrt(N)) followed by k-means."""
    if spec.kind != "gaussian":
        raise ValidationError(
            "kernel PCA clustering needs the positive-definite gaussian kernel"
        )
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    n_pts = data.size
    if k == 1:
        labels = np.zeros(n_pts, dtype=np.int64)
        return ClusteringResult(labels, align_and_score(labels, data.labels), {"k": 1})
    km = kernel_matrix(data, spec)
    decomp = linalg.sym_eig(km.matrix)
    embed = decomp.eigenvectors[:, :k] * np.sqrt(n_pts)
    _, labels, cost = kmeans(embed.T, k, restarts=restarts, seed=seed)
    gap = float(decomp.eigenvalues[k - 1] - decomp.eigenvalues[k]) if k < n_pts else 0.0
    return ClusteringResult(
        labels,
        align_and_score(labels, data.labels),
        {"eigen_gap": gap, "kmeans_cost": cost, "top_eigenvalue": float(decomp.eigenvalues[0])},
    )


def _plugin_delta(data: Dataset) -> float:
    """Plug-in covariance separation from per-label empirical non-centered
    second moments (uses the dataset's reference labels)."""
    blocks = label_blocks(data.labels)
    if len(blocks) < 2:
        raise ValidationError("plug-in separation needs at least 2 labeled blocks")
    n = data.dim
    normalized = []
    for lo, hi in blocks:
        x = data.points[:, lo:hi]
        moment = x @ x.T / (hi - lo)
        tr = float(np.trace(moment))
        if tr <= 0:
            raise ValidationError("degenerate block with zero second moment")
        normalized.append(moment / tr)
    best = min(
        float(np.linalg.norm(normalized[i] - normalized[j]))
        for i in range(len(blocks))
        for j in range(i + 1, len(blocks))
    )
    return float(np.sqrt(n) * best)


def _resolve_threshold(mode, magnitudes_desc, k, c2, delta):
    if mode == "fixed":
        return float(c2 * delta**4)
    if mode == "adaptive":
        # half the k-th largest magnitude: keeps the k leading eigenvalues
        # with at least half their size while shrinking everything below
        idx = min(k, len(magnitudes_desc)) - 1
        return float(magnitudes_desc[idx] / 2.0)
    raise ValidationError(f"unknown threshold mode {mode!r}")


def covariance_cluster(
    data: Dataset,
    k: int,
    c1: float = DEFAULT_C1,
    c2: float = DEFAULT_C2,
    delta_override: float = None,
    seed: int = 0,
    model: MixtureModel = None,
    threshold_mode: str = "adaptive",
    restarts: int = DEFAULT_RESTARTS,
    use_eigen_embedding: bool = False,
) -> ClusteringResult:
    """Cluster a mixture by covariance structure.

    Projects the data onto the sphere of radius sqrt(n), builds the
    oscillating kernel matrix at frequency t = c1 * Delta, soft-thresholds
    its spectrum, and k-means the columns of the thresholded matrix.

    Delta comes from the generating model when given, else from
    delta_override, else from a plug-in estimate using the dataset's labels.
    threshold_mode "adaptive" (default) thresholds at half the k-th largest
    eigenvalue magnitude; "fixed" uses c2 * Delta^4.  With
    use_eigen_embedding=True the k-means runs on the surviving eigenvector
    embedding, which has identical pairwise distances to the full columns.
    """
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    if c1 <= 0 or c2 <= 0:
        raise ValidationError("c1 and c2 must be positive")
    if model is not None:
        delta = delta_statistic(model)
    elif delta_override is not None:
        delta = float(delta_override)
    else:
        delta = _plugin_delta(data)
    if delta <= 0.0:
        raise DegenerateSeparationError(
            "covariance separation is zero (covariances differ only by scale); "
            "cluster on distances to the origin instead: radial_cluster"
        )
    on_s = project_to_sphere(data)
    t = c1 * delta
    km = kernel_matrix(on_s, ht_kernel(t, data.dim))
    decomp = linalg.sym_eig(km.matrix)
    mags = np.abs(decomp.eigenvalues)
    mags_desc = np.sort(mags)[::-1]
    threshold = _resolve_threshold(threshold_mode, mags_desc, k, c2, delta)
    shrunk = linalg.soft_threshold_eigenvalues(decomp.eigenvalues, threshold)
    keep = shrunk > 0.0
    surviving = int(np.count_nonzero(keep))
    diagnostics = {
        "delta": float(delta),
        "t": float(t),
        "threshold": float(threshold),
        "surviving_eigenvalues": surviving,
        "threshold_mode": threshold_mode,
    }
    n_pts = data.size
    if surviving == 0:
        points = np.zeros((1, n_pts))
    elif use_eigen_embedding:
        points = (decomp.eigenvectors[:, keep] * shrunk[keep]).T
    else:
        points = linalg.rebuild_from_eigenpairs(shrunk, decomp.eigenvectors)
    _, labels, cost = kmeans(points, k, restarts=restarts, seed=seed)
    diagnostics["kmeans_cost"] = cost
    return ClusteringResult(labels, align_and_score(labels, data.labels), diagnostics)


def second_singular_vector(data: Dataset, t: float) -> np.ndarray:
    """Eigenvector of the second-largest |eigenvalue| of the oscillating
    kernel matrix of the sphere-projected data.  Sign convention: the first
    coordinate that is not negligibly small is positive."""
    pts = data.points
    if not on_sphere(pts):
        data = project_to_sphere(data)
    km = kernel_matrix(data, ht_kernel(t, data.dim))
    if data.size < 2:
        raise ValidationError("need at least 2 points for a second eigenvector")
    _, vecs = dominant_pair_safe(km.matrix)
    v = vecs[:, 1]
    nz = np.flatnonzero(np.abs(v) > 1e-12 * np.max(np.abs(v)))
    if nz.size and v[nz[0]] < 0:
        v = -v
    return v


def dominant_pair_safe(matrix):
    """Top-2 |eigenvalue| pairs: subspace iteration with a full-decomposition
    fallback for small matrices or slow convergence."""
    dim = matrix.shape[0]
    if dim <= 64:
        decomp = linalg.sym_eig(matrix)
        order = np.argsort(-np.abs(decomp.eigenvalues), kind="stable")[:2]
        return decomp.eigenvalues[order], decomp.eigenvectors[:, order]
    try:
        return linalg.dominant_eigenpairs(matrix, 2, tol=1e-10)
    except linalg.ConvergenceError:
        decomp = linalg.sym_eig(matrix)
        order = np.argsort(-np.abs(decomp.eigenvalues), kind="stable")[:2]
        return decomp.eigenvalues[order], decomp.eigenvectors[:, order]


def radial_cluster(
    data: Dataset, k: int, seed: int = 0, restarts: int = DEFAULT_RESTARTS
) -> ClusteringResult:
    """Fallback for scale-separated components: 1-D k-means on the distances
    of the points to the origin."""
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    norms = np.linalg.norm(data.points, axis=0)[None, :]
    _, labels, cost = kmeans(norms, k, restarts=restarts, seed=seed)
    return ClusteringResult(
        labels, align_and_score(labels, data.labels), {"kmeans_cost": cost}
    )
