"""Toy objectives: closed-form values, derivative cross-checks, determinism."""

import numpy as np
import pytest

from tiltzo.errors import ConfigurationError, DimensionError
from tiltzo.objectives import (ConstantObjective, PiecewiseLinearObjective,
                               QuadraticObjective, SphericalQuadratic,
                               SyntheticLogisticObjective, TwoMinimaObjective,
                               build_piecewise_linear,
                               finite_difference_gradient,
                               finite_difference_hessian, make_objective,
                               two_minima_hessian, _h_surface)


class TestQuadratic:
    def test_hand_value(self):
        obj = QuadraticObjective([[2.0, 1.0], [1.0, 3.0]], [1.0, -1.0], 0.5)
        assert obj.evaluate([0.3, -0.2]) == pytest.approx(1.09, abs=1e-14)

    def test_gradient_and_hessian(self):
        H = np.array([[2.0, 1.0], [1.0, 3.0]])
        obj = QuadraticObjective(H, [1.0, -1.0])
        x = np.array([0.4, 0.7])
        assert np.allclose(obj.gradient(x), H @ x + [1.0, -1.0])
        assert np.array_equal(obj.hessian(x), H)

    def test_spectrum_descending_and_orthonormal(self):
        obj = QuadraticObjective([[2.0, 1.0], [1.0, 3.0]])
        assert obj.eigenvalues[0] >= obj.eigenvalues[1]
        V = obj.eigenvectors
        assert np.allclose(V.T @ V, np.eye(2), atol=1e-12)
        assert np.allclose(V @ np.diag(obj.eigenvalues) @ V.T, obj.H, atol=1e-12)

    def test_from_spectrum(self):
        obj = QuadraticObjective.from_spectrum([0.7, 0.25], [1.0, 0.6])
        assert np.allclose(obj.eigenvalues, [0.7, 0.25])
        assert np.allclose(obj.gradient(np.zeros(2)), [1.0, 0.6])

    def test_evaluate_many_matches_loop(self):
        obj = QuadraticObjective([[2.0, 1.0], [1.0, 3.0]], [1.0, -1.0], 0.5)
        X = np.random.default_rng(0).standard_normal((40, 2))
        loop = np.array([obj.evaluate(x) for x in X])
        assert np.allclose(obj.evaluate_many(X), loop, atol=1e-12)

    def test_fd_hessian_recovers_h(self):
        H = np.array([[2.0, 1.0], [1.0, 3.0]])
        obj = QuadraticObjective(H, [1.0, -1.0])
        Hfd = finite_difference_hessian(obj, np.array([0.3, -0.1]), h=1e-4)
        assert np.max(np.abs(Hfd - H)) < 1e-6

    def test_asymmetric_rejected(self):
        with pytest.raises(ConfigurationError, match="symmetric"):
            QuadraticObjective([[1.0, 0.5], [0.0, 1.0]])

    def test_nonsquare_rejected(self):
        with pytest.raises(DimensionError):
            QuadraticObjective(np.ones((2, 3)))


class TestTwoMinima:
    def test_minima_are_exact_zeros(self):
        obj = TwoMinimaObjective()
        assert obj.evaluate(np.array([1.0, 0.0])) == 0.0
        assert obj.evaluate(np.array([-1.0, 0.0])) == 0.0

    def test_gradient_vanishes_at_minima(self):
        obj = TwoMinimaObjective()
        for p in ([1.0, 0.0], [-1.0, 0.0]):
            g = obj.gradient(np.array(p))
            assert np.max(np.abs(g)) < 1e-12

    def test_hand_values(self):
        obj = TwoMinimaObjective()
        assert obj.evaluate(np.array([0.0, 1.0])) == pytest.approx(0.8, abs=1e-14)
        assert obj.evaluate(np.array([0.5, 0.5])) == pytest.approx(0.240625, abs=1e-14)
        g = obj.gradient(np.array([0.5, 0.5]))
        assert g == pytest.approx([-0.41875, 0.4], abs=1e-14)

    def test_hessian_eigenvalues_at_minima(self):
        sharp = np.linalg.eigvalsh(two_minima_hessian((1.0, 0.0)))
        flat = np.linalg.eigvalsh(two_minima_hessian((-1.0, 0.0)))
        assert np.allclose(np.sort(sharp), [0.4, 2.4], atol=1e-12)
        assert np.allclose(np.sort(flat), [0.8, 2.0], atol=1e-12)

    def test_traces_match(self):
        t1 = np.trace(two_minima_hessian((1.0, 0.0)))
        t2 = np.trace(two_minima_hessian((-1.0, 0.0)))
        assert abs(t1 - t2) < 1e-12
        assert t1 == pytest.approx(2.8, abs=1e-12)

    def test_gradient_matches_fd_at_random_points(self):
        obj = TwoMinimaObjective()
        rng = np.random.default_rng(5)
        for _ in range(10):
            x = rng.uniform(-1.5, 1.5, size=2)
            g = obj.gradient(x)
            fd = finite_difference_gradient(obj, x, h=1e-6)
            assert np.linalg.norm(fd - g) < 1e-6 * (1.0 + np.linalg.norm(g))

    def test_hessian_matches_fd_at_random_points(self):
        obj = TwoMinimaObjective()
        rng = np.random.default_rng(6)
        for _ in range(5):
            x = rng.uniform(-1.5, 1.5, size=2)
            H = obj.hessian(x)
            Hfd = finite_difference_hessian(obj, x, h=1e-4)
            assert np.max(np.abs(H - Hfd)) < 1e-5

    def test_evaluate_many_matches_loop(self):
        obj = TwoMinimaObjective()
        X = np.random.default_rng(1).uniform(-2, 2, size=(30, 2))
        loop = np.array([obj.evaluate(x) for x in X])
        assert np.allclose(obj.evaluate_many(X), loop, atol=1e-14)


@pytest.fixture(scope="module")
def mesh():
    return build_piecewise_linear()


class TestPiecewiseLinear:
    def test_surface_constant(self):
        assert _h_surface(0.0, 0.0) == pytest.approx(0.14, abs=1e-15)

    def test_plane_count(self):
        obj = build_piecewise_linear(grid_resolution=4)
        assert obj.n_planes == 2 * 4 * 4

    def test_planes_interpolate_h_at_their_vertices(self, mesh):
        # each plane passes through the surface at its own triangle's
        # vertices; shared vertices therefore agree across adjacent planes
        for j in range(mesh.n_planes):
            a, b = mesh._A[j]
            c = mesh._c[j]
            for (vx, vy) in mesh.triangles[j]:
                assert a * vx + b * vy + c == pytest.approx(
                    _h_surface(vx, vy), abs=1e-10)

    def test_min_below_h_at_grid_vertices(self, mesh):
        ticks = np.linspace(-2, 2, mesh.grid_resolution + 1)
        for vx in ticks:
            for vy in ticks:
                assert mesh.evaluate(np.array([vx, vy])) <= _h_surface(vx, vy) + 1e-12

    def test_min_below_h_plus_mesh_error_everywhere(self, mesh):
        rng = np.random.default_rng(2)
        P = rng.uniform(-2, 2, size=(200, 2))
        f = mesh.evaluate_many(P)
        h = _h_surface(P[:, 0], P[:, 1])
        assert np.all(f <= h + 0.05)

    def test_inner_triangle_flatter_than_outer(self, mesh):
        centroids = mesh.triangles.mean(axis=1)
        r = np.linalg.norm(centroids, axis=1)
        inner = int(np.argmin(r))
        outer = int(np.argmax(r))
        assert mesh.slope_of(inner) < mesh.slope_of(outer)

    def test_active_plane_attains_min(self, mesh):
        x = np.array([0.37, -1.2])
        j = mesh.active_plane(x)
        vals = mesh._A @ x + mesh._c
        assert vals[j] == mesh.evaluate(x)

    def test_evaluate_many_matches_loop(self, mesh):
        X = np.random.default_rng(3).uniform(-2, 2, size=(25, 2))
        loop = np.array([mesh.evaluate(x) for x in X])
        assert np.allclose(mesh.evaluate_many(X), loop, atol=1e-12)

    def test_too_coarse_rejected(self):
        with pytest.raises(ConfigurationError):
            build_piecewise_linear(grid_resolution=1)


class TestConstantAndSpherical:
    def test_constant_everything_flat(self):
        obj = ConstantObjective(3, value=1.5)
        assert obj.evaluate(np.ones(3)) == 1.5
        assert np.array_equal(obj.gradient(np.ones(3)), np.zeros(3))
        Hfd = finite_difference_hessian(obj, np.zeros(3))
        assert np.array_equal(Hfd, np.zeros((3, 3)))

    def test_spherical_consistency(self):
        obj = SphericalQuadratic(4, curvature=2.0)
        x = np.array([1.0, -2.0, 0.5, 0.0])
        assert obj.evaluate(x) == pytest.approx(np.dot(x, x), abs=1e-12)
        assert np.allclose(obj.gradient(x), 2.0 * x)
        fd = finite_difference_gradient(obj, x)
        assert np.linalg.norm(fd - obj.gradient(x)) < 1e-5


class TestSyntheticLogistic:
    def test_deterministic_construction(self):
        a = SyntheticLogisticObjective(seed=3)
        b = SyntheticLogisticObjective(seed=3)
        assert np.array_equal(a.X, b.X)
        assert np.array_equal(a.y, b.y)
        w = np.random.default_rng(0).standard_normal(20)
        assert a.evaluate(w) == b.evaluate(w)

    def test_noise_flips_expected_fraction(self):
        clean = SyntheticLogisticObjective(seed=3, noise_rate=0.0)
        noisy = SyntheticLogisticObjective(seed=3, noise_rate=0.3)
        assert np.array_equal(clean.X, noisy.X)
        frac = np.mean(clean.y != noisy.y)
        assert 0.2 < frac < 0.4

    def test_gradient_matches_fd(self):
        obj = SyntheticLogisticObjective(seed=1, n_samples=60, n_features=5)
        w = np.random.default_rng(4).standard_normal(5) * 0.5
        g = obj.gradient(w)
        fd = finite_difference_gradient(obj, w, h=1e-6)
        assert np.linalg.norm(fd - g) < 1e-6 * (1.0 + np.linalg.norm(g))

    def test_batches_deterministic_and_distinct(self):
        obj = SyntheticLogisticObjective(seed=2)
        w = np.ones(20) * 0.1
        assert obj.evaluate(w, batch=5) == obj.evaluate(w, batch=5)
        losses = {obj.evaluate(w, batch=b) for b in range(6)}
        assert len(losses) > 1

    def test_evaluate_many_matches_loop_with_batch(self):
        obj = SyntheticLogisticObjective(seed=2, n_samples=40, n_features=6)
        X = np.random.default_rng(9).standard_normal((12, 6)) * 0.3
        loop = np.array([obj.evaluate(x, batch=2) for x in X])
        assert np.allclose(obj.evaluate_many(X, batch=2), loop, atol=1e-12)

    def test_bad_noise_rate(self):
        with pytest.raises(ConfigurationError):
            SyntheticLogisticObjective(noise_rate=1.0)


class TestMakeObjective:
    def test_all_names(self):
        assert isinstance(make_objective("two-minima"), TwoMinimaObjective)
        assert isinstance(make_objective("piecewise-linear"),
                          PiecewiseLinearObjective)
        assert isinstance(make_objective("logistic-synthetic", seed=1),
                          SyntheticLogisticObjective)
        quad = make_objective("quadratic", eigenvalues=[1.0, 0.5],
                              gradient=[1.0, 0.0])
        assert isinstance(quad, QuadraticObjective)

    def test_quadratic_matrix_form(self):
        obj = make_objective("quadratic", h=[[2.0, 0.0], [0.0, 1.0]])
        assert np.allclose(obj.eigenvalues, [2.0, 1.0])

    def test_unknown_name(self):
        with pytest.raises(ConfigurationError, match="unknown objective"):
            make_objective("rosenbrock")

    def test_quadratic_needs_spectrum_or_matrix(self):
        with pytest.raises(ConfigurationError, match="'h' or 'eigenvalues'"):
            make_objective("quadratic")
