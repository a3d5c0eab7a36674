import numpy as np
import pytest

from rkm.errors import EmptySampleError, ValidationError
from rkm.model import (
    Dataset,
    GaussianComponent,
    MixtureModel,
    diagonal,
    figure1_model,
    fixed_count,
    fixed_per_component,
    full_cov,
    isotropic,
    poisson_count,
    project_to_sphere,
    sample,
)


def single_standard_gaussian(n):
    return MixtureModel(
        (GaussianComponent(1.0, np.zeros(n), isotropic(1.0)),), dim=n
    )


class TestSample:
    def test_law_of_large_numbers(self):
        n = 50
        ds = sample(single_standard_gaussian(n), fixed_count(1000), seed=0)
        assert ds.points.shape == (n, 1000)
        assert np.linalg.norm(ds.points.mean(axis=1)) <= 0.5
        emp_trace = np.trace(np.cov(ds.points))
        assert abs(emp_trace - n) <= 0.1 * n

    def test_zero_weight_component(self):
        model = MixtureModel(
            (
                GaussianComponent(1.0, np.zeros(3), isotropic(1.0)),
                GaussianComponent(0.0, np.ones(3), isotropic(1.0)),
            ),
            dim=3,
        )
        ds = sample(model, fixed_count(40), seed=1)
        assert np.all(ds.labels == 0)

    def test_determinism(self):
        model = figure1_model(6, 0.5)
        a = sample(model, fixed_count(30), seed=42)
        b = sample(model, fixed_count(30), seed=42)
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.labels, b.labels)

    def test_seed_changes_output(self):
        model = figure1_model(6, 0.5)
        a = sample(model, fixed_count(30), seed=1)
        b = sample(model, fixed_count(30), seed=2)
        assert not np.array_equal(a.points, b.points)

    def test_per_component_counts(self):
        model = figure1_model(4, 0.3)
        ds = sample(model, fixed_per_component([7, 5]), seed=3)
        assert np.sum(ds.labels == 0) == 7
        assert np.sum(ds.labels == 1) == 5

    def test_poisson_mode_size_varies(self):
        model = single_standard_gaussian(4)
        sizes = {sample(model, poisson_count(20), seed=s).size for s in range(8)}
        assert len(sizes) > 1
        assert all(abs(x - 20) < 20 for x in sizes)

    def test_poisson_zero_total_errors(self):
        model = single_standard_gaussian(2)
        # mean 1 gives P(0) ~ 1/e per draw; find a seed where both draws are 0
        hit = None
        for s in range(200):
            try:
                sample(model, poisson_count(1), seed=s)
            except EmptySampleError:
                hit = s
                break
        assert hit is not None

    def test_blocks_contiguous(self):
        model = figure1_model(4, 0.2)
        ds = sample(model, fixed_count(25), seed=9)
        assert np.all(np.diff(ds.labels) >= 0)

    def test_full_covariance_sampling(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(4, 4))
        cov = full_cov(a @ a.T / 4 + np.eye(4))
        model = MixtureModel(
            (GaussianComponent(1.0, np.arange(4.0), cov),), dim=4
        )
        ds = sample(model, fixed_count(4000), seed=5)
        emp = np.cov(ds.points)
        assert np.linalg.norm(emp - cov.matrix(4)) <= 0.35
        assert np.linalg.norm(ds.points.mean(axis=1) - np.arange(4.0)) <= 0.2

    def test_empirical_covariance_convergence(self):
        # average Frobenius error over seeds stays under 5 * sqrt(n^2 / N)
        n, N = 10, 400
        model = figure1_model(n, 0.5)
        errs = []
        for seed in range(5):
            ds = sample(model, fixed_per_component([N, N]), seed=seed)
            for i, (lo, hi) in enumerate(ds.block_bounds()):
                emp = np.cov(ds.points[:, lo:hi])
                ref = model.components[i].covariance.matrix(n)
                errs.append(np.linalg.norm(emp - ref))
        assert np.mean(errs) <= 5.0 * np.sqrt(n * n / N)


class TestProjectToSphere:
    def test_direct_normalization(self):
        ds = Dataset(np.array([[3.0], [4.0]]), np.array([0]), seed=0)
        out = project_to_sphere(ds)
        expect = np.sqrt(2.0) * np.array([0.6, 0.8])
        assert np.allclose(out.points[:, 0], expect, atol=1e-12)

    def test_fixed_point(self):
        col = np.array([[1.0], [1.0]])  # norm sqrt(2) = sqrt(n)
        ds = Dataset(col, np.array([0]), seed=0)
        out = project_to_sphere(ds)
        assert np.allclose(out.points, col, atol=1e-12)

    def test_idempotent(self):
        ds = sample(single_standard_gaussian(8), fixed_count(50), seed=4)
        once = project_to_sphere(ds)
        twice = project_to_sphere(once)
        assert np.allclose(once.points, twice.points, atol=1e-12)

    def test_norms_and_concentration(self):
        n, N = 100, 500
        ds = project_to_sphere(
            sample(single_standard_gaussian(n), fixed_count(N), seed=7)
        )
        norms = np.linalg.norm(ds.points, axis=0)
        assert np.allclose(norms, 10.0, atol=1e-9)
        # projected mean stays O(1)
        assert np.linalg.norm(ds.points.mean(axis=1)) <= 2.0

    def test_zero_column_rejected(self):
        ds = Dataset(np.array([[0.0, 1.0], [0.0, 1.0]]), np.array([0, 0]), seed=0)
        with pytest.raises(ValidationError):
            project_to_sphere(ds)


class TestFigure1Model:
    def test_covariance_split(self):
        model = figure1_model(4, 0.5)
        ev1 = model.components[0].covariance.data
        ev2 = model.components[1].covariance.data
        assert np.allclose(ev1, [1.5, 1.5, 0.5, 0.5])
        assert np.allclose(ev2, [0.5, 0.5, 1.5, 1.5])

    def test_sum_isotropic(self):
        model = figure1_model(8, 0.37)
        total = model.components[0].covariance.matrix(8) + model.components[
            1
        ].covariance.matrix(8)
        assert np.allclose(total, 2.0 * np.eye(8), atol=1e-12)

    def test_small_s_near_identity(self):
        model = figure1_model(6, 1e-9)
        assert np.allclose(
            model.components[0].covariance.matrix(6), np.eye(6), atol=1e-8
        )

    @pytest.mark.parametrize("n,s", [(2, 0.1), (10, 0.9), (100, 0.33)])
    def test_traces_equal_n(self, n, s):
        model = figure1_model(n, s)
        for comp in model.components:
            assert comp.covariance.trace(n) == pytest.approx(n)

    def test_odd_n_rejected(self):
        with pytest.raises(ValidationError):
            figure1_model(5, 0.5)

    @pytest.mark.parametrize("s", [0.0, 1.0, -0.2, 1.5])
    def test_bad_s_rejected(self, s):
        with pytest.raises(ValidationError):
            figure1_model(4, s)


class TestValidation:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            MixtureModel(
                (
                    GaussianComponent(0.6, np.zeros(2), isotropic(1.0)),
                    GaussianComponent(0.6, np.zeros(2), isotropic(1.0)),
                ),
                dim=2,
            )

    def test_negative_weight_rejected(self):
        with pytest.raises(ValidationError):
            GaussianComponent(-0.1, np.zeros(2), isotropic(1.0))

    def test_negative_diagonal_rejected(self):
        with pytest.raises(ValidationError):
            diagonal([1.0, -0.5])

    def test_non_psd_full_rejected(self):
        with pytest.raises(ValidationError):
            full_cov(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            GaussianComponent(1.0, np.zeros(3), diagonal([1.0, 2.0]))

    def test_labels_must_be_blocked(self):
        with pytest.raises(ValidationError):
            Dataset(np.zeros((2, 3)), np.array([0, 1, 0]), seed=0)

    def test_radius(self):
        model = figure1_model(16, 0.4)
        assert model.radius == pytest.approx(4.0)
