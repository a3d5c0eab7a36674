"""Block-structure approximants of kernel matrices and the diagnostics that
compare them to the exact matrix: residual operator norms, eigenvalue
counting, and principal angles against the piecewise-constant subspace."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ValidationError
from .kernels import KernelMatrix
from .model import label_blocks


@dataclass(frozen=True)
class BlockApproximant:
    """Compact form of a structured approximant to a kernel matrix.

    kind "row_plus_column": within block (i, j) the entry at (x, y) is
    row_margins[x, j] + col_margins[y, i] - block_means[i, j], which equals
    the projection P_E K + (I - P_E) K P_E onto blockwise row/column
    structure.  kind "block_constant": entries equal block_means[i, j].
    """

    kind: str
    block_bounds: tuple
    block_means: np.ndarray
    row_margins: np.ndarray = None
    col_margins: np.ndarray = None

    def materialize(self) -> np.ndarray:
        n = self.block_bounds[-1][1]
        out = np.empty((n, n))
        for i, (li, hi) in enumerate(self.block_bounds):
            for j, (lj, hj) in enumerate(self.block_bounds):
                if self.kind == "block_constant":
                    out[li:hi, lj:hj] = self.block_means[i, j]
                else:
                    out[li:hi, lj:hj] = (
                        self.row_margins[li:hi, j][:, None]
                        + self.col_margins[lj:hj, i][None, :]
                        - self.block_means[i, j]
                    )
        return out


@dataclass(frozen=True)
class EigenspaceAngle:
    """Principal angles (radians, descending) between two subspaces."""

    angles: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=np.float64)
        object.__setattr__(self, "angles", a)
        if np.any(a < -1e-12) or np.any(a > np.pi / 2 + 1e-12):
            raise ValidationError("principal angles must lie in [0, pi/2]")

    @property
    def max_angle(self) -> float:
        return float(self.angles[0])


def _check_blocks(km: KernelMatrix):
    for lo, hi in km.block_bounds:
        if hi <= lo:
            raise ValidationError("every component block needs at least one point")


def _block_means(m, bounds):
    k = len(bounds)
    out = np.empty((k, k))
    for i, (li, hi) in enumerate(bounds):
        for j, (lj, hj) in enumerate(bounds):
            out[i, j] = m[li:hi, lj:hj].mean()
    return out


def approximant_A(km: KernelMatrix) -> BlockApproximant:
    """Row-plus-column approximant: within each block, column means plus row
    means minus the block mean (the empirical surrogate of the population
    row/column structure)."""
    _check_blocks(km)
    m = km.matrix
    bounds = km.block_bounds
    n = m.shape[0]
    k = len(bounds)
    row_margins = np.empty((n, k))
    col_margins = np.empty((n, k))
    for j, (lj, hj) in enumerate(bounds):
        row_margins[:, j] = m[:, lj:hj].mean(axis=1)
        col_margins[:, j] = m[lj:hj, :].mean(axis=0)
    return BlockApproximant(
        "row_plus_column", bounds, _block_means(m, bounds), row_margins, col_margins
    )


def approximant_B(km: KernelMatrix) -> BlockApproximant:
    """Block-constant approximant: each block replaced by its mean, the
    finite-sample version of the component Gram matrix over N."""
    _check_blocks(km)
    return BlockApproximant(
        "block_constant", km.block_bounds, _block_means(km.matrix, km.block_bounds)
    )


def residual_norm(km: KernelMatrix, approx: BlockApproximant) -> float:
    """Operator norm of (kernel matrix - materialized approximant).

    Computed as sqrt of the spectral norm of R^T R by power iteration, which
    also covers residuals that are not exactly symmetric.
    """
    r = km.matrix - approx.materialize()
    if r.shape != km.matrix.shape:
        raise ValidationError("approximant shape does not match the kernel matrix")
    gram = linalg.mirror_upper(r.T @ r)
    return float(np.sqrt(linalg.operator_norm(gram, tol=1e-8)))


def count_large_eigenvalues(km: KernelMatrix, threshold: float):
    """Counts of eigenvalues above `threshold` and below `-threshold`."""
    if threshold <= 0:
        raise ValidationError(f"threshold must be positive, got {threshold}")
    lam = linalg.sym_eig(km.matrix).eigenvalues
    return int(np.sum(lam > threshold)), int(np.sum(lam < -threshold))


def indicator_basis(labels) -> np.ndarray:
    """Orthonormal basis of the piecewise-constant space: one normalized
    indicator column per contiguous label block."""
    labels = np.asarray(labels)
    blocks = label_blocks(labels)
    w = np.zeros((labels.size, len(blocks)))
    for j, (lo, hi) in enumerate(blocks):
        w[lo:hi, j] = 1.0 / np.sqrt(hi - lo)
    return w


def principal_angles(eigvecs, labels) -> EigenspaceAngle:
    """Principal angles between the span of the given eigenvector columns
    and the piecewise-constant space of the label blocks."""
    u = np.asarray(eigvecs, dtype=np.float64)
    if u.ndim != 2:
        raise ValidationError("eigvecs must be a matrix of column vectors")
    n, k = u.shape
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ValidationError("label count must match eigenvector length")
    if k > n:
        raise ValidationError("more eigenvectors than points")
    sv = np.linalg.svd(u, compute_uv=False)
    if sv[-1] < 1e-8 * max(sv[0], 1e-300):
        raise ValidationError("eigenvector set is rank deficient")
    q, _ = np.linalg.qr(u)
    w = indicator_basis(labels)
    cross = q.T @ w
    cosines = np.clip(np.linalg.svd(cross, compute_uv=False), 0.0, 1.0)
    angles = np.sort(np.arccos(cosines))[::-1]
    return EigenspaceAngle(angles)
