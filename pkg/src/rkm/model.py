"""Gaussian mixture models, reproducible sampling, and sphere projection.

Sampling is deterministic: all randomness comes from counter-based Philox
streams keyed on the user seed.  Stream (seed, 0) draws the sample sizes,
stream (seed, i + 1) draws the points of component i, so components can be
generated independently and in any order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import linalg
from .errors import EmptySampleError, ValidationError


@dataclass(frozen=True)
class Covariance:
    """Covariance in one of three shapes: isotropic (scalar variance),
    diagonal (eigenvalue vector), or full (PSD matrix)."""

    kind: str
    data: np.ndarray

    def __post_init__(self):
        if self.kind not in ("isotropic", "diagonal", "full"):
            raise ValidationError(f"unknown covariance kind {self.kind!r}")

    def dim(self, ambient: int) -> int:
        if self.kind == "isotropic":
            return ambient
        return self.data.shape[0]

    def trace(self, ambient: int) -> float:
        if self.kind == "isotropic":
            return float(self.data) * ambient
        if self.kind == "diagonal":
            return float(np.sum(self.data))
        return float(np.trace(self.data))

    def matrix(self, ambient: int) -> np.ndarray:
        if self.kind == "isotropic":
            return float(self.data) * np.eye(ambient)
        if self.kind == "diagonal":
            return np.diag(self.data)
        return np.array(self.data)

    def eigenvalues(self, ambient: int) -> np.ndarray:
        if self.kind == "isotropic":
            return np.full(ambient, float(self.data))
        if self.kind == "diagonal":
            return np.sort(np.array(self.data, dtype=float))[::-1]
        return linalg.sym_eig(self.data).eigenvalues

    def apply_sqrt(self, z: np.ndarray) -> np.ndarray:
        """Multiply standard-normal columns by a symmetric square root."""
        if self.kind == "isotropic":
            return np.sqrt(float(self.data)) * z
        if self.kind == "diagonal":
            return np.sqrt(self.data)[:, None] * z
        decomp = linalg.sym_eig(self.data)
        root = np.sqrt(np.maximum(decomp.eigenvalues, 0.0))
        return decomp.eigenvectors @ (root[:, None] * (decomp.eigenvectors.T @ z))

    def add(self, other: "Covariance", ambient: int) -> "Covariance":
        kinds = {self.kind, other.kind}
        if kinds == {"isotropic"}:
            return isotropic(float(self.data) + float(other.data))
        if "full" not in kinds:
            a = self.data if self.kind == "diagonal" else np.full(ambient, float(self.data))
            b = other.data if other.kind == "diagonal" else np.full(ambient, float(other.data))
            return diagonal(a + b)
        return full_cov(self.matrix(ambient) + other.matrix(ambient))


def isotropic(variance: float) -> Covariance:
    if variance < 0:
        raise ValidationError(f"variance must be >= 0, got {variance}")
    return Covariance("isotropic", np.float64(variance))


def diagonal(eigenvalues) -> Covariance:
    ev = np.asarray(eigenvalues, dtype=np.float64)
    if ev.ndim != 1 or np.any(ev < 0):
        raise ValidationError("diagonal covariance needs a vector of nonnegative eigenvalues")
    return Covariance("diagonal", ev)


def full_cov(matrix) -> Covariance:
    m = linalg.as_symmetric(matrix)
    if np.min(linalg.sym_eig(m).eigenvalues) < -1e-10 * max(np.max(np.abs(m)), 1.0):
        raise ValidationError("full covariance matrix must be positive semidefinite")
    return Covariance("full", m)


@dataclass(frozen=True)
class GaussianComponent:
    weight: float
    mean: np.ndarray
    covariance: Covariance

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        if self.mean.ndim != 1:
            raise ValidationError("mean must be a vector")
        # weight 0 is allowed so degenerate mixtures remain expressible
        if not 0.0 <= self.weight <= 1.0:
            raise ValidationError(f"weight must lie in [0, 1], got {self.weight}")
        n = self.mean.shape[0]
        if self.covariance.kind != "isotropic" and self.covariance.dim(n) != n:
            raise ValidationError("covariance dimension does not match mean")

    def second_moment(self, ambient: int) -> np.ndarray:
        """Non-centered second moment, covariance plus mean outer product."""
        return self.covariance.matrix(ambient) + np.outer(self.mean, self.mean)


@dataclass(frozen=True)
class MixtureModel:
    components: tuple
    dim: int

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if len(comps) < 1:
            raise ValidationError("mixture needs at least one component")
        for c in comps:
            if c.mean.shape[0] != self.dim:
                raise ValidationError("component dimension does not match mixture dim")
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"weights must sum to 1, got {total!r}")

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    @property
    def radius(self) -> float:
        """Smallest component radius, min_i sqrt(trace of covariance)."""
        return min(np.sqrt(c.covariance.trace(self.dim)) for c in self.components)


@dataclass(frozen=True)
class Dataset:
    points: np.ndarray
    labels: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=np.float64))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        if self.points.ndim != 2 or self.points.shape[1] < 1:
            raise ValidationError("points must be an n x N matrix with N >= 1")
        if self.labels.shape != (self.points.shape[1],):
            raise ValidationError("label count must match the number of columns")
        if np.any(np.diff(self.labels) < 0):
            raise ValidationError("labels must be nondecreasing (contiguous blocks)")

    @property
    def dim(self) -> int:
        return self.points.shape[0]

    @property
    def size(self) -> int:
        return self.points.shape[1]

    def block_bounds(self):
        """Half-open index ranges of the contiguous label blocks."""
        return label_blocks(self.labels)


def label_blocks(labels):
    labels = np.asarray(labels)
    if labels.size == 0:
        return []
    edges = np.flatnonzero(np.diff(labels)) + 1
    starts = np.concatenate([[0], edges])
    stops = np.concatenate([edges, [labels.size]])
    return list(zip(starts.tolist(), stops.tolist()))


# --- sample-size modes -------------------------------------------------------


@dataclass(frozen=True)
class SampleSize:
    mode: str
    value: object


def fixed_count(n: int) -> SampleSize:
    if n < 1:
        raise ValidationError(f"fixed sample size must be >= 1, got {n}")
    return SampleSize("fixed", int(n))


def poisson_count(mean: float) -> SampleSize:
    if mean < 1:
        raise ValidationError(f"poisson mean must be >= 1, got {mean}")
    return SampleSize("poisson", float(mean))


def fixed_per_component(counts) -> SampleSize:
    counts = tuple(int(c) for c in counts)
    if any(c < 0 for c in counts) or sum(counts) < 1:
        raise ValidationError("per-component counts must be nonnegative with positive total")
    return SampleSize("per_component", counts)


# --- sampling ----------------------------------------------------------------


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), index]))


def _box_muller(gen: np.random.Generator, shape) -> np.ndarray:
    """Standard normals from uniform draws via the Box-Muller transform."""
    count = int(np.prod(shape))
    pairs = (count + 1) // 2
    u1 = 1.0 - gen.random(pairs)  # in (0, 1], keeps the log finite
    u2 = gen.random(pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:count].reshape(shape)


def _component_counts(model: MixtureModel, size_mode: SampleSize, gen) -> np.ndarray:
    if size_mode.mode == "per_component":
        counts = np.array(size_mode.value, dtype=np.int64)
        if counts.shape[0] != model.k:
            raise ValidationError(
                f"got {counts.shape[0]} per-component counts for {model.k} components"
            )
        return counts
    if size_mode.mode == "fixed":
        total = size_mode.value
    else:
        total = int(gen.poisson(size_mode.value))
        if total == 0:
            total = int(gen.poisson(size_mode.value))  # resample once
        if total == 0:
            raise EmptySampleError(
                "poisson sample size came back 0 twice; increase the mean"
            )
    return gen.multinomial(total, model.weights)


def sample(model: MixtureModel, size_mode: SampleSize, seed: int) -> Dataset:
    """Draw a dataset from the mixture with contiguous component blocks.

    Identical (model, size_mode, seed) give bit-identical output.
    """
    gen = _stream(seed, 0)
    counts = _component_counts(model, size_mode, gen)
    blocks = []
    labels = []
    for i, comp in enumerate(model.components):
        c = int(counts[i])
        if c == 0:
            continue
        z = _box_muller(_stream(seed, i + 1), (model.dim, c))
        blocks.append(comp.mean[:, None] + comp.covariance.apply_sqrt(z))
        labels.append(np.full(c, i, dtype=np.int64))
    points = np.concatenate(blocks, axis=1)
    return Dataset(points, np.concatenate(labels), int(seed))


def project_to_sphere(data: Dataset) -> Dataset:
    """Closest-point projection onto the sphere of radius sqrt(n)."""
    norms = np.linalg.norm(data.points, axis=0)
    if np.any(norms == 0.0):
        raise ValidationError("cannot project a zero column onto the sphere")
    scaled = np.sqrt(data.dim) * data.points / norms
    return replace(data, points=scaled)


def figure1_model(n: int, s: float) -> MixtureModel:
    """Two equal-weight centered Gaussians whose diagonal covariances split
    the spectrum: 1+s on one half of the coordinates, 1-s on the other, and
    reversed for the second component, so their sum is isotropic."""
    if n % 2 != 0 or n < 2:
        raise ValidationError(f"n must be a positive even integer, got {n}")
    if not 0.0 < s < 1.0:
        raise ValidationError(f"s must lie in (0, 1), got {s}")
    half = n // 2
    ev1 = np.concatenate([np.full(half, 1.0 + s), np.full(half, 1.0 - s)])
    ev2 = ev1[::-1].copy()
    zero = np.zeros(n)
    return MixtureModel(
        (
            GaussianComponent(0.5, zero, diagonal(ev1)),
            GaussianComponent(0.5, zero, diagonal(ev2)),
        ),
        dim=n,
    )
