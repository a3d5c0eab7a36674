"""Dense symmetric linear algebra: Jacobi eigendecomposition, dominant
eigenpairs by subspace iteration, power-iteration operator norms, and the
spectral soft-threshold matrix function."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ValidationError

SYM_RTOL = 1e-12
DECOMP_TOL = 1e-8
POWER_MAX_ITER = 10_000

# Above this size top_singular_values switches from the full Jacobi
# decomposition to subspace iteration (when few values are requested).
_FULL_EIG_CUTOFF = 512


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues sorted descending by signed value, eigenvectors as the
    matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


def as_symmetric(m) -> np.ndarray:
    """Validate and return a float64 symmetric matrix.

    Entries must be finite and the matrix symmetric up to 1e-12 relative
    tolerance; the exact mirror of the upper triangle is returned so later
    stages see a bitwise-symmetric array.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if a.size == 0:
        raise ValidationError("empty matrix")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    scale = float(np.max(np.abs(a)))
    if scale > 0.0:
        skew = float(np.max(np.abs(a - a.T)))
        if skew > SYM_RTOL * scale:
            raise ValidationError(
                f"matrix is not symmetric: max asymmetry {skew:.3e} "
                f"exceeds {SYM_RTOL:.0e} * max|entry|"
            )
    return mirror_upper(a)


def mirror_upper(a: np.ndarray) -> np.ndarray:
    """Copy the upper triangle onto the lower one (exact symmetry)."""
    out = np.triu(a)
    out += np.triu(a, 1).T
    return out


# --- cyclic Jacobi ----------------------------------------------------------
#
# Row-cyclic sweeps over all index pairs (p, q), p < q.  The rotation order is
# fixed, so the result is deterministic for identical input.  The numba-jitted
# scalar loop and the numpy fallback below perform the same operations in the
# same order and give bitwise-identical output.


def _jacobi_sweeps_numpy(a, v, tol, max_sweeps):
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = np.max(np.abs(a - np.diag(np.diag(a)))) if n > 1 else 0.0
        if off <= tol:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= tol:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return max_sweeps


try:
    from numba import njit

    @njit(cache=True)
    def _jacobi_sweeps_numba(a, v, tol, max_sweeps):  # pragma: no cover
        n = a.shape[0]
        for sweep in range(max_sweeps):
            off = 0.0
            for i in range(n - 1):
                for j in range(i + 1, n):
                    x = abs(a[i, j])
                    if x > off:
                        off = x
            if off <= tol:
                return sweep
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if abs(apq) <= tol:
                        continue
                    theta = 0.5 * (a[q, q] - a[p, p]) / apq
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                    c = 1.0 / np.sqrt(t * t + 1.0)
                    s = t * c
                    for i in range(n):
                        aip = a[i, p]
                        aiq = a[i, q]
                        a[i, p] = c * aip - s * aiq
                        a[i, q] = s * aip + c * aiq
                    for i in range(n):
                        api = a[p, i]
                        aqi = a[q, i]
                        a[p, i] = c * api - s * aqi
                        a[q, i] = s * api + c * aqi
                    for i in range(n):
                        vip = v[i, p]
                        viq = v[i, q]
                        v[i, p] = c * vip - s * viq
                        v[i, q] = s * vip + c * viq
        return max_sweeps

    _jacobi_sweeps = _jacobi_sweeps_numba
except ImportError:  # pragma: no cover
    _jacobi_sweeps = _jacobi_sweeps_numpy


# Jacobi is O(n^3) with a large constant; beyond this size sym_eig hands the
# decomposition to LAPACK, which is deterministic per input on a fixed build.
_JACOBI_MAX_DIM = 1024


def sym_eig(m, method: str = "auto") -> SpectralDecomposition:
    """Full eigendecomposition of a symmetric matrix.

    Uses deterministic cyclic Jacobi sweeps up to dimension 1024 and the
    LAPACK solver above that (method="jacobi" or "lapack" forces a path).
    Eigenvalues are sorted descending by signed value (ties keep the
    original index order).  The result satisfies
    ``|M - V diag(w) V^T|_F <= 1e-8 |M|_F`` and ``|V^T V - I|_F <= 1e-8``.
    """
    a = as_symmetric(m)
    n = a.shape[0]
    if method == "auto":
        method = "jacobi" if n <= _JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        lam, v = _eig_jacobi(a)
    elif method == "lapack":
        lam, v = np.linalg.eigh(a)
    else:
        raise ValidationError(f"unknown eigensolver method {method!r}")
    order = np.argsort(-lam, kind="stable")
    decomp = SpectralDecomposition(lam[order], np.ascontiguousarray(v[:, order]))
    _check_decomposition(np.asarray(m, dtype=np.float64), decomp)
    return decomp


def _eig_jacobi(a):
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    scale = float(np.max(np.abs(a)))
    if scale > 0.0:
        sweeps = _jacobi_sweeps(a, v, 1e-11 * scale, 40)
        if sweeps >= 40:
            raise ConvergenceError(
                "Jacobi eigendecomposition did not converge in 40 sweeps",
                estimate=np.diag(a).copy(),
            )
    return np.diag(a).copy(), v


def _check_decomposition(m, decomp):
    v, lam = decomp.eigenvectors, decomp.eigenvalues
    n = m.shape[0]
    orth = np.linalg.norm(v.T @ v - np.eye(n))
    if orth > DECOMP_TOL:
        raise ConvergenceError(
            f"eigenvector basis lost orthonormality ({orth:.2e})", estimate=lam
        )
    mnorm = np.linalg.norm(m)
    recon = np.linalg.norm((v * lam) @ v.T - m)
    if recon > DECOMP_TOL * max(mnorm, 1e-300):
        raise ConvergenceError(
            f"eigendecomposition reconstruction error {recon:.2e} "
            f"exceeds {DECOMP_TOL:.0e} * |M|_F",
            estimate=lam,
        )


# --- dominant eigenpairs ----------------------------------------------------


def _cosine_start(dim, width):
    """Deterministic well-spread orthonormal start block (DCT-II columns)."""
    i = np.arange(dim)[:, None]
    j = np.arange(width)[None, :]
    q = np.cos(np.pi * (j + 1) * (i + 0.5) / dim)
    q, _ = np.linalg.qr(q)
    return q


def dominant_eigenpairs(m, count, tol=1e-9, max_iter=5000):
    """Eigenpairs with the `count` largest |eigenvalue|, by subspace iteration.

    Returns (values, vectors) with signed Ritz values ordered descending in
    magnitude.  Deterministic: the iteration starts from a fixed cosine
    basis.  Intended for count << dim; use sym_eig for full spectra.

    Values separated from the rest of the spectrum converge to ~tol relative
    accuracy; values inside a tight eigenvalue cluster converge into the
    cluster but may not resolve its interior ordering.
    """
    a = as_symmetric(m)
    dim = a.shape[0]
    if not 1 <= count <= dim:
        raise ValidationError(f"count must be in [1, {dim}], got {count}")
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        return np.zeros(count), np.eye(dim)[:, :count]
    width = min(dim, count + 5)
    q = _cosine_start(dim, width)
    prev = None
    stable = 0
    check_every = 5
    for it in range(1, max_iter + 1):
        q, _ = np.linalg.qr(a @ q)
        if it % check_every and it < max_iter:
            continue
        small = q.T @ (a @ q)
        small = (small + small.T) / 2.0
        w, u = np.linalg.eigh(small)
        order = np.argsort(-np.abs(w), kind="stable")
        ritz = w[order[:count]]
        if prev is not None and np.max(np.abs(ritz - prev)) <= tol * max(
            np.abs(ritz[0]), 1e-300
        ):
            stable += 1
            # demand several consecutive quiet checks to avoid plateaus
            if stable >= 3:
                vec = q @ u[:, order[:count]]
                return ritz, vec
        else:
            stable = 0
        prev = ritz
    raise ConvergenceError(
        f"subspace iteration did not converge in {max_iter} iterations",
        estimate=prev,
    )


def top_singular_values(m, count) -> np.ndarray:
    """The `count` largest singular values (|eigenvalue| magnitudes) of a
    symmetric matrix, descending."""
    a = as_symmetric(m)
    dim = a.shape[0]
    if not 1 <= count <= dim:
        raise ValidationError(f"count must be in [1, {dim}], got {count}")
    if dim <= _FULL_EIG_CUTOFF or count > min(32, dim // 4):
        lam = sym_eig(a).eigenvalues
        mags = np.abs(lam)
        order = np.argsort(-mags, kind="stable")
        return mags[order[:count]]
    vals, _ = dominant_eigenpairs(a, count, tol=1e-10)
    return np.abs(vals)


def operator_norm(m, tol=1e-8) -> float:
    """Spectral norm of a symmetric matrix by power iteration.

    Starts from the normalized all-ones vector perturbed by 1e-3 along the
    first coordinate, and stops when successive Rayleigh quotients differ by
    less than `tol`.  Raises ConvergenceError (carrying the last estimate)
    after 10,000 iterations.
    """
    a = as_symmetric(m)
    if tol <= 0.0:
        raise ValidationError(f"tol must be positive, got {tol}")
    n = a.shape[0]
    x = np.full(n, 1.0 / np.sqrt(n))
    x[0] += 1e-3
    x /= np.linalg.norm(x)
    rq_prev = None
    for _ in range(POWER_MAX_ITER):
        y = a @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        rq = float(x @ (a @ x))
        if rq_prev is not None and abs(rq - rq_prev) < tol:
            return abs(rq)
        rq_prev = rq
    raise ConvergenceError(
        f"power iteration did not converge in {POWER_MAX_ITER} iterations",
        estimate=abs(rq_prev) if rq_prev is not None else None,
    )


# --- spectral soft threshold -------------------------------------------------


def soft_threshold_eigenvalues(eigenvalues, threshold):
    """Map each eigenvalue w to max(0, |w| - threshold)."""
    return np.maximum(0.0, np.abs(eigenvalues) - threshold)


def rebuild_from_eigenpairs(eigenvalues, eigenvectors) -> np.ndarray:
    """Materialize V diag(w) V^T, mirrored to exact symmetry."""
    return mirror_upper((eigenvectors * eigenvalues) @ eigenvectors.T)


def apply_spectral_function(m, threshold) -> np.ndarray:
    """Soft-threshold the spectrum: same eigenvectors, eigenvalues mapped
    through w -> max(0, |w| - threshold).  Result is positive semidefinite.
    """
    if threshold < 0.0:
        raise ValidationError(f"threshold must be >= 0, got {threshold}")
    decomp = sym_eig(m)
    mapped = soft_threshold_eigenvalues(decomp.eigenvalues, threshold)
    return rebuild_from_eigenpairs(mapped, decomp.eigenvectors)
