"""Component Gram matrices in the kernel distance: closed forms for Gaussian
mixtures under the gaussian kernel, empirical block averages, the
second-order expansion for the oscillating kernel, and the covariance
separation statistic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .kernels import KernelMatrix
from .model import Covariance, MixtureModel


@dataclass(frozen=True)
class ComponentGram:
    """k x k Gram matrix of mixture components plus how it was obtained
    (closed_form, empirical, or second_order)."""

    matrix: np.ndarray
    source: str

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("component gram must be square")
        if not np.allclose(m, m.T, atol=1e-12 * max(1.0, np.max(np.abs(m)))):
            raise ValidationError("component gram must be symmetric")

    @property
    def k(self) -> int:
        return self.matrix.shape[0]


def gaussian_expectation(mean, cov: Covariance, tau: float) -> float:
    """E exp(-|u|^2 / (2 tau^2)) for u ~ N(mean, cov), in closed form:

        det(I + cov / tau^2)^(-1/2) * exp(-mean' (cov + tau^2 I)^(-1) mean / 2)

    Diagonal and isotropic covariances use the product form directly; full
    covariances use a symmetric solve for the mean term (no explicit
    inverse), which stays defined for singular PSD covariances.
    """
    if tau <= 0:
        raise ValidationError(f"tau must be positive, got {tau}")
    mu = np.asarray(mean, dtype=np.float64)
    n = mu.shape[0]
    t2 = tau * tau
    if cov.kind in ("isotropic", "diagonal"):
        ev = np.full(n, float(cov.data)) if cov.kind == "isotropic" else cov.data
        det_factor = float(np.prod(1.0 / np.sqrt(1.0 + ev / t2)))
        shift = float(np.sum(mu * mu / (ev + t2)))
    else:
        sigma = cov.matrix(n)
        sign, logdet = np.linalg.slogdet(np.eye(n) + sigma / t2)
        if sign <= 0:
            raise ValidationError("covariance produced a non-positive determinant")
        det_factor = float(np.exp(-0.5 * logdet))
        shift = float(mu @ np.linalg.solve(sigma + t2 * np.eye(n), mu))
    return det_factor * float(np.exp(-0.5 * shift))


def closed_form_gram(model: MixtureModel, tau: float) -> ComponentGram:
    """Gram matrix of the components under the gaussian kernel: entry (i, j)
    is E h(|x - y|) for independent x ~ component i, y ~ component j, i.e.
    the expectation over a Gaussian with mean mu_i - mu_j and covariance
    Sigma_i + Sigma_j."""
    k = model.k
    out = np.empty((k, k))
    for i in range(k):
        ci = model.components[i]
        for j in range(i, k):
            cj = model.components[j]
            mu = ci.mean - cj.mean
            cov = ci.covariance.add(cj.covariance, model.dim)
            out[i, j] = out[j, i] = gaussian_expectation(mu, cov, tau)
    return ComponentGram(out, "closed_form")


def empirical_gram(km: KernelMatrix) -> ComponentGram:
    """Finite-sample Gram estimate: entry (i, j) is the plain average of the
    unnormalized kernel over block (i, j) of the kernel matrix."""
    n_total = km.size
    for lo, hi in km.block_bounds:
        if hi <= lo:
            raise ValidationError("every component block needs at least one point")
    k = km.k
    out = np.empty((k, k))
    for i, (li, hi) in enumerate(km.block_bounds):
        for j, (lj, hj) in enumerate(km.block_bounds):
            out[i, j] = km.matrix[li:hi, lj:hj].mean() * n_total
    out = (out + out.T) / 2.0  # block means of a symmetric matrix; kill roundoff
    return ComponentGram(out, "empirical")


def gram_ht_second_order(model: MixtureModel, t: float) -> ComponentGram:
    """Second-order expansion of the oscillating-kernel Gram matrix:
    entry (i, j) = 1 - (t^2 / 2n) trace(S_i S_j) with S the non-centered
    second moment (covariance plus mean outer product)."""
    if t < 0:
        raise ValidationError(f"t must be >= 0, got {t}")
    n = model.dim
    moments = [c.second_moment(n) for c in model.components]
    k = model.k
    out = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            tr = float(np.sum(moments[i] * moments[j]))
            out[i, j] = out[j, i] = 1.0 - t * t / (2.0 * n) * tr
    return ComponentGram(out, "second_order")


def delta_statistic(model: MixtureModel) -> float:
    """Covariance separation: sqrt(n) times the smallest Frobenius distance
    between trace-normalized non-centered second moments of distinct
    components.  Zero means the covariances differ only by scale."""
    if model.k < 2:
        raise ValidationError("separation statistic needs at least 2 components")
    n = model.dim
    normalized = []
    for c in model.components:
        m = c.second_moment(n)
        tr = float(np.trace(m))
        if tr <= 0:
            raise ValidationError("component has non-positive second-moment trace")
        normalized.append(m / tr)
    best = np.inf
    for i in range(model.k):
        for j in range(i + 1, model.k):
            best = min(best, float(np.linalg.norm(normalized[i] - normalized[j])))
    return float(np.sqrt(n) * best)
