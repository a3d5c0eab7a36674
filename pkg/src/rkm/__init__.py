"""Radial-kernel spectral analysis and clustering of high-dimensional
Gaussian mixtures."""

__version__ = "0.1.0"

from .cluster import (
    ClusteringResult,
    align_and_score,
    covariance_cluster,
    kernel_pca_cluster,
    kmeans,
    radial_cluster,
    second_singular_vector,
)
from .errors import (
    ConvergenceError,
    DegenerateSeparationError,
    EmptySampleError,
    RkmError,
    UnsupportedModelError,
    ValidationError,
)
from .gram import (
    ComponentGram,
    closed_form_gram,
    delta_statistic,
    empirical_gram,
    gaussian_expectation,
    gram_ht_second_order,
)
from .kernels import (
    KernelMatrix,
    KernelSpec,
    c_h_diagnostic,
    distance_kernel,
    gaussian_kernel,
    ht_eval,
    ht_kernel,
    kernel_matrix,
    smoothed_distance_kernel,
)
from .linalg import (
    SpectralDecomposition,
    apply_spectral_function,
    dominant_eigenpairs,
    operator_norm,
    sym_eig,
    top_singular_values,
)
from .model import (
    Dataset,
    GaussianComponent,
    MixtureModel,
    figure1_model,
    fixed_count,
    fixed_per_component,
    poisson_count,
    project_to_sphere,
    sample,
)
from .structure import (
    BlockApproximant,
    EigenspaceAngle,
    approximant_A,
    approximant_B,
    count_large_eigenvalues,
    principal_angles,
    residual_norm,
)
