"""Radial kernels with analytic derivatives, kernel matrix construction, and
the kernel-smoothness diagnostics used to predict block structure."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import ValidationError
from .linalg import mirror_upper
from .model import Dataset, label_blocks

SPHERE_RTOL = 1e-6


@dataclass(frozen=True)
class KernelSpec:
    """A radial profile h with first and second derivatives.

    kind is one of "gaussian", "distance", "smoothed_distance", "ht", or
    "custom"; params holds the defining constants.  The evaluators accept
    arrays.  h_prime / h_second may be None for kinds without derivatives.
    """

    kind: str
    h: callable
    h_prime: callable = None
    h_second: callable = None
    params: dict = field(default_factory=dict, compare=False)


def gaussian_kernel(tau: float) -> KernelSpec:
    """h(r) = exp(-r^2 / (2 tau^2)), the positive-definite reference kernel."""
    if tau <= 0:
        raise ValidationError(f"tau must be positive, got {tau}")
    t2 = tau * tau

    def h(r):
        return np.exp(-np.square(r) / (2.0 * t2))

    def h_prime(r):
        return -np.asarray(r) / t2 * h(r)

    def h_second(r):
        r = np.asarray(r)
        return (np.square(r) / (t2 * t2) - 1.0 / t2) * h(r)

    return KernelSpec("gaussian", h, h_prime, h_second, {"tau": float(tau)})


def distance_kernel() -> KernelSpec:
    """h(r) = r, so the kernel matrix is the normalized distance matrix."""
    return KernelSpec(
        "distance",
        lambda r: np.asarray(r, dtype=float),
        lambda r: np.ones_like(np.asarray(r, dtype=float)),
        lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        {},
    )


def smoothed_distance_kernel(r0: float) -> KernelSpec:
    """Distance kernel flattened beyond r0 through a C^2 quintic ramp.

    h(r) = r on [0, r0], then a quintic Hermite transition of width r0 to
    the constant 1.5 * r0, matching value and two derivatives at both ends.
    The second derivative is bounded by 1.5 / r0.
    """
    if r0 <= 0:
        raise ValidationError(f"r0 must be positive, got {r0}")

    def regions(r):
        r = np.asarray(r, dtype=float)
        t = np.clip((r - r0) / r0, 0.0, 1.0)
        return r, t

    def h(r):
        r, t = regions(r)
        # ramp value: q(t) = t - t^3 + t^4 / 2 with q(1) = 1/2
        ramp = r0 + r0 * (t - t**3 + 0.5 * t**4)
        return np.where(r <= r0, r, ramp)

    def h_prime(r):
        r, t = regions(r)
        slope = 1.0 - 3.0 * t * t + 2.0 * t**3
        return np.where(r <= r0, 1.0, slope)

    def h_second(r):
        r, t = regions(r)
        curv = (-6.0 * t + 6.0 * t * t) / r0
        return np.where(r <= r0, 0.0, curv)

    return KernelSpec("smoothed_distance", h, h_prime, h_second, {"r0": float(r0)})


def ht_kernel(t: float, n: int) -> KernelSpec:
    """Oscillating kernel cos(t (n - r^2/2) / sqrt(n)) for data near the
    sphere of radius sqrt(n); equals cos(t <x, y> / sqrt(n)) on the sphere."""
    if t <= 0:
        raise ValidationError(f"t must be positive, got {t}")
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    rn = np.sqrt(float(n))

    def phase(r):
        return t * (n - np.square(r) / 2.0) / rn

    def h(r):
        return np.cos(phase(np.asarray(r, dtype=float)))

    def h_prime(r):
        r = np.asarray(r, dtype=float)
        return (t * r / rn) * np.sin(phase(r))

    def h_second(r):
        r = np.asarray(r, dtype=float)
        return (t / rn) * np.sin(phase(r)) - np.square(t * r / rn) * np.cos(phase(r))

    return KernelSpec("ht", h, h_prime, h_second, {"t": float(t), "n": int(n)})


def custom_kernel(h, h_prime=None, h_second=None, params=None) -> KernelSpec:
    return KernelSpec("custom", h, h_prime, h_second, params or {})


@dataclass(frozen=True)
class KernelMatrix:
    """N x N kernel matrix with entries h(|x_i - x_j|) / N and the index
    ranges of the contiguous component blocks."""

    matrix: np.ndarray
    block_bounds: tuple
    normalized: bool = True

    def __post_init__(self):
        n = self.matrix.shape[0]
        bounds = tuple((int(lo), int(hi)) for lo, hi in self.block_bounds)
        object.__setattr__(self, "block_bounds", bounds)
        pos = 0
        for lo, hi in bounds:
            if lo != pos or hi < lo:
                raise ValidationError("block bounds must partition [0, N)")
            pos = hi
        if pos != n:
            raise ValidationError("block bounds must partition [0, N)")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def k(self) -> int:
        return len(self.block_bounds)


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix; each unordered pair is evaluated once and
    mirrored, so the result is exactly symmetric."""
    return squareform(pdist(points.T, metric="euclidean"))


def on_sphere(points: np.ndarray, rtol=SPHERE_RTOL) -> bool:
    rn = np.sqrt(points.shape[0])
    norms = np.linalg.norm(points, axis=0)
    return bool(np.all(np.abs(norms - rn) <= rtol * max(rn, 1.0)))


def kernel_matrix(data: Dataset, spec: KernelSpec) -> KernelMatrix:
    """Build the normalized kernel matrix of a dataset.

    Entry (i, j) is h(|x_i - x_j|) / N.  For the oscillating "ht" kernel on
    sphere data the numerically stabler inner-product form
    cos(t <x_i, x_j> / sqrt(n)) is used; both forms agree on the sphere.
    """
    pts = data.points
    n, N = pts.shape
    if spec.kind == "ht":
        if spec.params["n"] != n:
            raise ValidationError(
                f"ht kernel built for dimension {spec.params['n']}, data has {n}"
            )
        if on_sphere(pts):
            t = spec.params["t"]
            g = pts.T @ pts
            np.multiply(g, t / np.sqrt(n), out=g)
            np.cos(g, out=g)
            g /= N
            m = mirror_upper(g)
            return KernelMatrix(m, label_blocks(data.labels))
    m = spec.h(pairwise_distances(pts))
    m = np.asarray(m, dtype=np.float64) / N
    m = mirror_upper(m)
    if spec.kind == "gaussian":
        if m.min() < 0.0 or m.max() > (1.0 + 1e-12) / N:
            raise ValidationError("gaussian kernel entries left [0, 1/N]")
    return KernelMatrix(m, label_blocks(data.labels))


def ht_eval(x, y, t: float) -> float:
    """cos(t <x, y> / sqrt(n)) for two points on the sphere of radius
    sqrt(n); raises if either point is off the sphere."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("x and y must be vectors of equal dimension")
    n = x.shape[0]
    rn = np.sqrt(n)
    for v, name in ((x, "x"), (y, "y")):
        if abs(np.linalg.norm(v) - rn) > SPHERE_RTOL * max(rn, 1.0):
            raise ValidationError(f"{name} is not on the sphere of radius sqrt(n)")
    return float(np.cos(t * np.dot(x, y) / rn))


def c_h_diagnostic(
    spec: KernelSpec, R: float, spherical: bool = False, r_max: float = None, grid: int = 10_001
) -> float:
    """Numeric kernel-smoothness constant controlling block-structure error.

    Flat case: sup over r >= R/2 of |h''(r)| + |h'(r)|/r, plus the tail term
    sup|h'| * exp(-R).  Sphere case: sup over r >= R/log(R) of
    (log^2(R) |h''(r)| + |h'(r)|) / r, plus sup|h'| / R.  Suprema are taken
    on a logarithmic grid of `grid` points up to r_max (default 4R); the
    unspecified order-one constants in the exponent and the log are fixed
    to 1, so values are comparable across n but are not certified bounds.
    """
    if R <= 0:
        raise ValidationError(f"R must be positive, got {R}")
    if spec.h_prime is None or spec.h_second is None:
        raise ValidationError(
            f"kernel kind {spec.kind!r} does not provide the derivatives needed"
        )
    if r_max is None:
        r_max = 4.0 * R
        if spec.kind == "ht":
            r_max = max(r_max, 4.0 * np.sqrt(spec.params["n"]))
    lo = R / max(np.log(R), 1.0) if spherical else R / 2.0
    if lo >= r_max:
        raise ValidationError("grid is empty: R too large for r_max")
    r = np.geomspace(lo, r_max, grid)
    hp = np.abs(spec.h_prime(r))
    hpp = np.abs(spec.h_second(r))
    sup_hp = float(
        np.max(np.abs(spec.h_prime(np.geomspace(min(lo, R) * 1e-6, r_max, grid))))
    )
    if spherical:
        main = float(np.max((np.log(R) ** 2 * hpp + hp) / r))
        return main + sup_hp / R
    main = float(np.max(hpp + hp / r))
    return main + sup_hp * float(np.exp(-R))
