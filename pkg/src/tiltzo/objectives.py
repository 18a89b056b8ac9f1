"""Objective functions: the toy problems and quadratic oracles.

Every objective exposes ``evaluate(x, batch=None)`` returning a float and
``dimension``.  Objectives with closed-form derivatives also provide
``gradient(x)`` and ``hessian(x)``; the finite-difference helpers at the
bottom cover the rest.  ``evaluate_many(X, batch=None)`` takes an (n, d)
array of points and is the vectorized path used by Monte-Carlo probes.

``batch`` selects a deterministic minibatch where the objective has data
(the synthetic logistic task); ``None`` means full batch.  Toy objectives
ignore it.
"""

import math

import numpy as np

from .core import query_rng
from .errors import ConfigurationError, DimensionError


class Objective:
    """Base class; subclasses set `dimension` and implement `evaluate`."""

    dimension = None
    gradient = None  # subclasses with exact gradients override as a method
    hessian = None

    def evaluate(self, x, batch=None):
        raise NotImplementedError

    def evaluate_many(self, X, batch=None):
        X = np.asarray(X, dtype=float)
        return np.array([self.evaluate(X[i], batch) for i in range(X.shape[0])])


class QuadraticObjective(Objective):
    """f(x) = 0.5 x^T H x + b^T x + c with H symmetric.

    The exact eigendecomposition is computed once; quadratics are the oracle
    problems for the analytic sharpness formulas (their Taylor expansion is
    exact, so analytic and Monte-Carlo quantities agree up to sampling error
    only).
    """

    def __init__(self, H, b=None, c=0.0):
        H = np.atleast_2d(np.asarray(H, dtype=float))
        if H.shape[0] != H.shape[1]:
            raise DimensionError(f"H must be square, got shape {H.shape}")
        if not np.allclose(H, H.T, atol=1e-12):
            raise ConfigurationError("H must be symmetric")
        self.H = H
        self.dimension = H.shape[0]
        self.b = np.zeros(self.dimension) if b is None else np.asarray(b, dtype=float)
        if self.b.shape != (self.dimension,):
            raise DimensionError("b must match H's dimension")
        self.c = float(c)
        w, V = np.linalg.eigh(H)
        order = np.argsort(w)[::-1]
        self.eigenvalues = w[order]          # descending
        self.eigenvectors = V[:, order]      # columns

    @classmethod
    def from_spectrum(cls, eigenvalues, gradient_at_zero=None, c=0.0):
        """Diagonal quadratic with the given spectrum and gradient at x=0."""
        eigenvalues = np.asarray(eigenvalues, dtype=float)
        return cls(np.diag(eigenvalues), gradient_at_zero, c)

    def evaluate(self, x, batch=None):
        x = np.asarray(x, dtype=float)
        return float(0.5 * np.dot(x, self.H @ x) + np.dot(self.b, x) + self.c)

    def evaluate_many(self, X, batch=None):
        X = np.asarray(X, dtype=float)
        return 0.5 * np.einsum("ni,ij,nj->n", X, self.H, X) + X @ self.b + self.c

    def gradient(self, x):
        return self.H @ np.asarray(x, dtype=float) + self.b

    def hessian(self, x=None):
        return self.H


class SphericalQuadratic(Objective):
    """f(x) = 0.5 * curvature * ||x||^2, evaluated without temporaries.

    Used by large-d tests: np.dot allocates no intermediate arrays, so the
    optimizer's memory accounting sees only its own buffers.
    """

    def __init__(self, dimension, curvature=1.0):
        self.dimension = dimension
        self.curvature = float(curvature)

    def evaluate(self, x, batch=None):
        return 0.5 * self.curvature * float(np.dot(x, x))

    def evaluate_many(self, X, batch=None):
        X = np.asarray(X, dtype=float)
        return 0.5 * self.curvature * np.einsum("ni,ni->n", X, X)

    def gradient(self, x):
        return self.curvature * np.asarray(x, dtype=float)

    def hessian(self, x=None):
        return self.curvature * np.eye(self.dimension)


class ConstantObjective(Objective):
    """f(x) = value everywhere; every estimator must return exactly zero on it."""

    def __init__(self, dimension, value=0.0):
        self.dimension = dimension
        self.value = float(value)

    def evaluate(self, x, batch=None):
        return self.value

    def evaluate_many(self, X, batch=None):
        return np.full(np.asarray(X).shape[0], self.value)

    def gradient(self, x):
        return np.zeros(self.dimension)

    def hessian(self, x=None):
        return np.zeros((self.dimension, self.dimension))


def _h_surface(x, y):
    """The smooth bowl the piecewise-linear toy discretizes."""
    return 0.07 * (8.0 * x * x + 10.0 * y * y) + 0.14


class PiecewiseLinearObjective(Objective):
    """f(x, y) = min over triangle planes interpolating h on a square grid.

    Each grid cell is split into two triangles; each triangle's plane passes
    through h at its three vertices, and f takes the min over all planes
    globally.  Routes toward the minimum through coarser (outer) triangles
    have visibly larger slopes — the property the tilted optimizer exploits.
    """

    dimension = 2

    def __init__(self, plane_coeffs, triangles, grid_resolution, domain_halfwidth):
        self.planes = np.asarray(plane_coeffs, dtype=float)  # (q, 3): a, b, c
        self.triangles = triangles                           # (q, 3, 2) vertices
        self.grid_resolution = grid_resolution
        self.domain_halfwidth = domain_halfwidth
        self._A = self.planes[:, :2]
        self._c = self.planes[:, 2]

    @property
    def n_planes(self):
        return self.planes.shape[0]

    def evaluate(self, x, batch=None):
        vals = self._A @ np.asarray(x, dtype=float) + self._c
        return float(vals.min())

    def evaluate_many(self, X, batch=None):
        X = np.asarray(X, dtype=float)
        return (X @ self._A.T + self._c).min(axis=1)

    def active_plane(self, x):
        """Index of the plane attaining the min at x."""
        vals = self._A @ np.asarray(x, dtype=float) + self._c
        return int(np.argmin(vals))

    def slope_of(self, j):
        """Gradient magnitude ||(a_j, b_j)|| of plane j."""
        return float(np.linalg.norm(self._A[j]))


def build_piecewise_linear(grid_resolution=12, domain_halfwidth=2.0):
    """Triangulate h(x,y) = 0.07(8x^2 + 10y^2) + 0.14 over [-w, w]^2.

    grid_resolution counts cells per side; each cell contributes two
    triangles whose planes interpolate h at the triangle vertices.
    """
    if grid_resolution < 2:
        raise ConfigurationError(f"grid_resolution must be >= 2, got {grid_resolution}")
    w = float(domain_halfwidth)
    ticks = np.linspace(-w, w, grid_resolution + 1)
    coeffs = []
    triangles = []
    for i in range(grid_resolution):
        for j in range(grid_resolution):
            x0, x1 = ticks[i], ticks[i + 1]
            y0, y1 = ticks[j], ticks[j + 1]
            v00, v10 = (x0, y0), (x1, y0)
            v01, v11 = (x0, y1), (x1, y1)
            for tri in ((v00, v10, v11), (v00, v11, v01)):
                M = np.array([[p[0], p[1], 1.0] for p in tri])
                z = np.array([_h_surface(p[0], p[1]) for p in tri])
                coeffs.append(np.linalg.solve(M, z))
                triangles.append(np.asarray(tri))
    return PiecewiseLinearObjective(
        np.asarray(coeffs), np.asarray(triangles), grid_resolution, w
    )


class TwoMinimaObjective(Objective):
    """f(x,y) = (1/5)[(x^2-1)^2 + (x/2)(x^2-1)^2 + (1 + 2(1-x)) y^2].

    Two minima at (1,0) and (-1,0), both with f = 0 and the same Hessian
    trace 14/5, but different top eigenvalues (12/5 at the sharp minimum,
    10/5 at the flat one).  Note f is unbounded below for x < -2; the toy
    experiments stay well inside the two-basin region.
    """

    dimension = 2

    def evaluate(self, x, batch=None):
        a, y = float(x[0]), float(x[1])
        u = a * a - 1.0
        return 0.2 * (u * u + 0.5 * a * u * u + (3.0 - 2.0 * a) * y * y)

    def evaluate_many(self, X, batch=None):
        X = np.asarray(X, dtype=float)
        a, y = X[:, 0], X[:, 1]
        u = a * a - 1.0
        return 0.2 * (u * u + 0.5 * a * u * u + (3.0 - 2.0 * a) * y * y)

    def gradient(self, x):
        a, y = float(x[0]), float(x[1])
        u = a * a - 1.0
        dfda = 0.2 * (4.0 * a * u + 0.5 * u * u + 2.0 * a * a * u - 2.0 * y * y)
        dfdy = 0.2 * 2.0 * (3.0 - 2.0 * a) * y
        return np.array([dfda, dfdy])

    def hessian(self, x):
        return two_minima_hessian(x)


def two_minima_hessian(point):
    """Exact 2x2 Hessian of TwoMinimaObjective at `point`."""
    a, y = float(point[0]), float(point[1])
    u = a * a - 1.0
    faa = 0.2 * (4.0 * u + 8.0 * a * a + 6.0 * a * u + 4.0 * a ** 3)
    fay = 0.2 * (-4.0 * y)
    fyy = 0.2 * 2.0 * (3.0 - 2.0 * a)
    return np.array([[faa, fay], [fay, fyy]])


class SyntheticLogisticObjective(Objective):
    """Logistic regression on seeded synthetic data with optional label noise.

    Features are standard normal, labels come from the sign of a random
    linear teacher, and noisy mode flips each label independently with the
    given probability.  Loss is mean log(1 + exp(-y * Xw)).  Minibatches are
    deterministic functions of the batch index.
    """

    def __init__(self, n_samples=200, n_features=20, noise_rate=0.0, seed=0,
                 batch_size=None):
        if not 0.0 <= noise_rate < 1.0:
            raise ConfigurationError(f"noise_rate must be in [0, 1), got {noise_rate}")
        self.dimension = n_features
        self.n_samples = n_samples
        self.noise_rate = noise_rate
        self.seed = int(seed)
        self.batch_size = batch_size or max(1, n_samples // 4)
        rng = query_rng(self.seed, 0)
        self.X = rng.standard_normal((n_samples, n_features))
        self.teacher = rng.standard_normal(n_features)
        y = np.sign(self.X @ self.teacher)
        y[y == 0] = 1.0
        if noise_rate > 0.0:
            flips = rng.random(n_samples) < noise_rate
            y[flips] *= -1.0
        self.y = y

    def _batch_rows(self, batch):
        if batch is None:
            return self.X, self.y
        rng = query_rng(self.seed, 1 + int(batch))
        idx = rng.choice(self.n_samples, size=self.batch_size, replace=False)
        return self.X[idx], self.y[idx]

    def evaluate(self, x, batch=None):
        Xb, yb = self._batch_rows(batch)
        margins = -yb * (Xb @ np.asarray(x, dtype=float))
        return float(np.mean(np.logaddexp(0.0, margins)))

    def evaluate_many(self, X, batch=None):
        Xb, yb = self._batch_rows(batch)
        margins = -yb[None, :] * (np.asarray(X, dtype=float) @ Xb.T)
        return np.logaddexp(0.0, margins).mean(axis=1)

    def gradient(self, x, batch=None):
        Xb, yb = self._batch_rows(batch)
        margins = -yb * (Xb @ np.asarray(x, dtype=float))
        sigma = 1.0 / (1.0 + np.exp(-margins))
        return (Xb * (-yb * sigma)[:, None]).mean(axis=0)


def finite_difference_gradient(obj, x, h=1e-6, batch=None):
    """Central-difference gradient, one coordinate at a time."""
    x = np.asarray(x, dtype=float)
    grad = np.empty(x.shape[0])
    e = np.zeros_like(x)
    for i in range(x.shape[0]):
        e[i] = h
        grad[i] = (obj.evaluate(x + e, batch) - obj.evaluate(x - e, batch)) / (2.0 * h)
        e[i] = 0.0
    return grad


def finite_difference_hessian(obj, x, h=1e-3, batch=None):
    """Central-difference Hessian, symmetrized as (H + H^T)/2.

    The default step balances truncation against cancellation; on quadratics
    the truncation term vanishes and the result is exact to rounding.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    H = np.empty((d, d))
    f0 = obj.evaluate(x, batch)
    if not math.isfinite(f0):
        raise _nonfinite(x)
    ei = np.zeros(d)
    ej = np.zeros(d)
    for i in range(d):
        ei[i] = h
        fp = obj.evaluate(x + ei, batch)
        fm = obj.evaluate(x - ei, batch)
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise _nonfinite(x)
        H[i, i] = (fp - 2.0 * f0 + fm) / (h * h)
        for j in range(i + 1, d):
            ej[j] = h
            fpp = obj.evaluate(x + ei + ej, batch)
            fpm = obj.evaluate(x + ei - ej, batch)
            fmp = obj.evaluate(x - ei + ej, batch)
            fmm = obj.evaluate(x - ei - ej, batch)
            if not all(map(math.isfinite, (fpp, fpm, fmp, fmm))):
                raise _nonfinite(x)
            H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h * h)
            ej[j] = 0.0
        ei[i] = 0.0
    return 0.5 * (H + H.T)


def _nonfinite(x):
    from .errors import EvaluationError

    return EvaluationError(f"non-finite objective value near x = {np.asarray(x)}")


OBJECTIVES_BY_NAME = {
    "quadratic": QuadraticObjective,
    "piecewise-linear": build_piecewise_linear,
    "two-minima": TwoMinimaObjective,
    "logistic-synthetic": SyntheticLogisticObjective,
}


def make_objective(name, **params):
    """Construct an objective from its CLI/config name."""
    if name not in OBJECTIVES_BY_NAME:
        raise ConfigurationError(
            f"unknown objective {name!r}; expected one of {sorted(OBJECTIVES_BY_NAME)}"
        )
    if name == "quadratic":
        if "h" in params:
            return QuadraticObjective(params["h"], params.get("b"), params.get("c", 0.0))
        if "eigenvalues" in params:
            return QuadraticObjective.from_spectrum(
                params["eigenvalues"], params.get("gradient"), params.get("c", 0.0)
            )
        raise ConfigurationError("quadratic objective needs 'h' or 'eigenvalues'")
    return OBJECTIVES_BY_NAME[name](**params)
