"""Analytic and Monte-Carlo sharpness machinery.

Everything here views the loss locally through its spectral data: Hessian
eigenvalues lambda_1 >= ... >= lambda_d and the gradient components g in the
eigenbasis.  The tilted-objective gap R_t = F_t(x) - f(x) then has closed
forms: an exact formula under Gaussian perturbation (for admissible t), a
t -> 0 limit under ball perturbation, and a t -> infinity value given by a
constrained quadratic maximization solved via its KKT secular equation.
Monte-Carlo probes cross-check the formulas on quadratics, where the local
view is exact.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import PerturbationSpec, sample_perturbation_batch
from .errors import AdmissibilityError, ConfigurationError, NumericError
from .estimators import estimate_objective_value
from .objectives import finite_difference_gradient, finite_difference_hessian

_SECULAR_TOL = 1e-12       # bisection width target in omega
_SECULAR_MAX_BISECT = 400
_SECULAR_MAX_NEWTON = 30


@dataclass(frozen=True)
class SpectralModel:
    """Eigenvalues (descending), eigenbasis gradient components, scale rho."""

    eigenvalues: np.ndarray
    g: np.ndarray
    rho: float

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        g = np.asarray(self.g, dtype=float)
        if lam.ndim != 1 or g.shape != lam.shape:
            raise ConfigurationError("eigenvalues and g must be 1-D with equal length")
        if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(g))):
            raise ConfigurationError("spectral data must be finite")
        if np.any(np.diff(lam) > 0):
            raise ConfigurationError("eigenvalues must be sorted in descending order")
        if not self.rho > 0:
            raise ConfigurationError(f"rho must be positive, got {self.rho}")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def d(self):
        return self.eigenvalues.shape[0]

    @classmethod
    def from_objective(cls, obj, x, rho, h=1e-3):
        """Spectral view of obj at x: eigendecompose the (FD) Hessian.

        Uses exact derivatives where the objective provides them.
        """
        x = np.asarray(x, dtype=float)
        H = obj.hessian(x) if obj.hessian is not None else finite_difference_hessian(obj, x, h)
        grad = obj.gradient(x) if obj.gradient is not None else finite_difference_gradient(obj, x)
        w, V = np.linalg.eigh(H)
        order = np.argsort(w)[::-1]
        return cls(w[order], V[:, order].T @ grad, rho)


@dataclass
class KktSolution:
    """Solution of the t -> infinity maximization over the sqrt(d) ball.

    ``case`` is "interior" (unconstrained maximizer inside the ball, needs
    Lambda <= 0) or "boundary" (||u*|| = sqrt(d), multiplier omega_star from
    the secular equation).  ``degenerate`` marks boundary solutions that did
    not come from a secular root: the pure-curvature case (g = 0) and the
    hard case where the top eigendirections carry no gradient and absorb the
    leftover radius.
    """

    omega_star: float
    u_star: np.ndarray
    r_infinity: float
    case: str
    secular_residual: float = None
    degenerate: bool = False


def gaussian_rt(model, t):
    """Closed-form R_t under Gaussian perturbation.

    R_t = (1/(2t)) sum_i [ (t rho g_i)^2/(1 - t rho^2 lambda_i)
                           - log(1 - t rho^2 lambda_i) ],
    valid while every 1 - t rho^2 lambda_i > 0.  t = 0 returns the limit
    (rho^2/2) sum_i lambda_i.
    """
    if t < 0:
        raise ConfigurationError(f"t must be >= 0, got {t}")
    lam, g, rho = model.eigenvalues, model.g, model.rho
    if t == 0.0:
        return 0.5 * rho * rho * float(lam.sum())
    a = t * rho * rho * lam
    _check_admissible(model, t, a)
    quad = (t * rho * g) ** 2 / (1.0 - a)
    return float(np.sum(quad - np.log1p(-a)) / (2.0 * t))


def _check_admissible(model, t, a=None):
    if a is None:
        a = t * model.rho ** 2 * model.eigenvalues
    if np.any(1.0 - a <= 0.0):
        i = int(np.argmax(a))
        raise AdmissibilityError(
            f"t = {t} is inadmissible at rho = {model.rho}: eigenvalue "
            f"lambda_{i} = {model.eigenvalues[i]} gives 1 - t rho^2 lambda = "
            f"{1.0 - a[i]} <= 0",
            index=i,
            eigenvalue=float(model.eigenvalues[i]),
        )


def gaussian_sensitivity(model, t, i):
    """Sensitivity phi_i = dR_t/dlambda_i of the Gaussian closed form.

    phi_i = [rho^2 / (2 (1 - t rho^2 lambda_i))]
            * [ t^2 rho^2 g_i^2 / (1 - t rho^2 lambda_i) + 1 ],
    obtained by differentiating the R_t formula; at t = 0 it is rho^2/2 for
    every coordinate.
    """
    if not 0 <= i < model.d:
        raise ConfigurationError(f"index {i} out of range for d = {model.d}")
    if t < 0:
        raise ConfigurationError(f"t must be >= 0, got {t}")
    rho = model.rho
    if t == 0.0:
        return 0.5 * rho * rho
    _check_admissible(model, t)
    one_minus = 1.0 - t * rho * rho * model.eigenvalues[i]
    gi = model.g[i]
    return 0.5 * rho * rho / one_minus * ((t * rho * gi) ** 2 / one_minus + 1.0)


def ball_rt_limit_zero(model, d=None):
    """t -> 0 limit of R_t under ball perturbation: (rho^2 d / (2(d+2))) sum lambda."""
    d = model.d if d is None else int(d)
    return float(model.rho ** 2 * d / (2.0 * (d + 2)) * model.eigenvalues.sum())


def _phi(model, u):
    """The maximized form rho g.u + (rho^2/2) u' Lambda u."""
    rho = model.rho
    return float(rho * np.dot(model.g, u)
                 + 0.5 * rho * rho * np.dot(u, model.eigenvalues * u))


def r_infinity(model, d=None):
    """R_inf = max{ rho g.u + (rho^2/2) u'Lambda u : ||u|| <= sqrt(d) }.

    Case analysis: with Lambda <= 0 and a stationary point inside the ball
    the maximum is interior with value -(1/2) sum g_i^2/lambda_i; otherwise
    it sits on the boundary, where the KKT multiplier omega* solves the
    secular equation sum_j rho^2 g_j^2/(2 omega - rho^2 lambda_j)^2 = d on
    (max(rho^2 lambda_1/2, 0), inf).  Zero-curvature models short-circuit to
    the exact linear-regime value rho sqrt(d) ||g||; pure-curvature models
    (g = 0, lambda_1 > 0) to (rho^2/2) d lambda_1.
    """
    lam, g, rho = model.eigenvalues, model.g, model.rho
    n = model.d
    d = n if d is None else int(d)
    if d < 1:
        raise ConfigurationError(f"d must be >= 1, got {d}")
    sqd = math.sqrt(d)

    if np.all(g == 0.0):
        if lam[0] > 0.0:
            u = np.zeros(n)
            u[0] = sqd
            return KktSolution(0.5 * rho * rho * lam[0], u,
                               0.5 * rho * rho * d * lam[0], "boundary",
                               degenerate=True)
        return KktSolution(None, np.zeros(n), 0.0, "interior")

    if np.all(lam == 0.0):
        gnorm = float(np.linalg.norm(g))
        u = (sqd / gnorm) * g
        omega = rho * gnorm / (2.0 * sqd)
        return KktSolution(omega, u, rho * sqd * gnorm, "boundary",
                           secular_residual=_psi(model, omega) - d)

    solvable = np.all((lam < 0.0) | (g == 0.0))
    if lam[0] <= 0.0 and solvable:
        u = np.where(lam < 0.0, -g / (rho * np.where(lam < 0.0, lam, 1.0)), 0.0)
        if np.dot(u, u) <= d:
            neg = lam < 0.0
            r = -0.5 * float(np.sum(g[neg] ** 2 / lam[neg]))
            return KktSolution(None, u, r, "interior")

    return _solve_boundary(model, d)


def _psi(model, omega):
    """Secular function sum_j rho^2 g_j^2 / (2 omega - rho^2 lambda_j)^2."""
    rho = model.rho
    mask = model.g != 0.0
    den = 2.0 * omega - rho * rho * model.eigenvalues[mask]
    return float(np.sum((rho * model.g[mask] / den) ** 2))


def _psi_prime(model, omega):
    rho = model.rho
    mask = model.g != 0.0
    den = 2.0 * omega - rho * rho * model.eigenvalues[mask]
    return float(np.sum(-4.0 * (rho * model.g[mask]) ** 2 / den ** 3))


def _solve_boundary(model, d):
    lam, g, rho = model.eigenvalues, model.g, model.rho
    omega_min = max(0.5 * rho * rho * lam[0], 0.0)
    active = g != 0.0
    den_at_min = 2.0 * omega_min - rho * rho * lam[active]

    if np.all(den_at_min > 0.0):
        psi_min = _psi(model, omega_min)
        if psi_min <= d:
            # Hard case: the top eigendirections carry no gradient and the
            # secular equation cannot reach d; they absorb the spare radius.
            den = 2.0 * omega_min - rho * rho * lam
            u = np.where(active, rho * g / np.where(active, den, 1.0), 0.0)
            spare = d - float(np.dot(u, u))
            top = int(np.argmax(lam))
            u[top] += math.sqrt(max(spare, 0.0))
            return KktSolution(omega_min, u, _phi(model, u), "boundary",
                               degenerate=True)

    omega = _secular_root(model, d, omega_min)
    u = np.where(active, rho * g / (2.0 * omega - rho * rho * lam), 0.0)
    return KktSolution(omega, u, _phi(model, u), "boundary",
                       secular_residual=_psi(model, omega) - d)


def _secular_root(model, d, omega_min):
    """Bracketed bisection plus Newton polish for psi(omega) = d."""
    delta = max(1.0, abs(omega_min))
    for _ in range(2000):
        if _psi(model, omega_min + delta) > d:
            break
        delta *= 0.5
    else:
        raise NumericError("could not bracket the secular root from below",
                           residual=_psi(model, omega_min + delta) - d)
    lo = omega_min + delta
    hi = max(lo, delta)
    for _ in range(2000):
        if _psi(model, hi) < d:
            break
        hi *= 2.0
    else:
        raise NumericError("could not bracket the secular root from above",
                           residual=_psi(model, hi) - d)

    for _ in range(_SECULAR_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _psi(model, mid) > d:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _SECULAR_TOL:
            break
    omega = 0.5 * (lo + hi)

    # psi is convex and decreasing, so from the left Newton converges
    # monotonically; polish until the residual is at rounding level.
    best = omega
    best_res = abs(_psi(model, omega) - d)
    for _ in range(_SECULAR_MAX_NEWTON):
        res = _psi(model, omega) - d
        if abs(res) < best_res:
            best, best_res = omega, abs(res)
        slope = _psi_prime(model, omega)
        if slope == 0.0:
            break
        step = res / slope
        nxt = omega - step
        if not (omega_min < nxt < float("inf")) or nxt == omega:
            break
        omega = nxt
    res = _psi(model, omega) - d
    if abs(res) < best_res:
        best, best_res = omega, abs(res)
    if best_res > 1e-8 * max(1.0, d):
        raise NumericError("secular solve failed to converge", residual=best_res)
    return best


def r_infinity_sensitivity(sol, model, i):
    """dR_inf/dlambda_i.

    Interior: g_i^2/(2 lambda_i^2).  Boundary with a secular multiplier:
    rho^4 g_i^2 / (2 (2 omega* - rho^2 lambda_i)^2).  Both equal
    (rho^2/2) (u*_i)^2, which is also the value used for degenerate
    boundary solutions where the closed forms hit 0/0.
    """
    if not 0 <= i < model.d:
        raise ConfigurationError(f"index {i} out of range for d = {model.d}")
    rho = model.rho
    if sol.case == "interior":
        lam_i = model.eigenvalues[i]
        if lam_i == 0.0:
            return 0.0
        return float(model.g[i] ** 2 / (2.0 * lam_i ** 2))
    if sol.degenerate:
        return float(0.5 * rho * rho * sol.u_star[i] ** 2)
    den = 2.0 * sol.omega_star - rho * rho * model.eigenvalues[i]
    return float(rho ** 4 * model.g[i] ** 2 / (2.0 * den * den))


def admissible_t_bound(model, d=None, epsilon=1e-2):
    """Largest tilt keeping the Gaussian R_t expansion within epsilon.

    t <= 32 epsilon / (rho^2 d [rho sqrt(d) max(|lambda|) + 4 ||g||]^2).
    Returns +inf when the model is exactly flat (zero denominator).
    """
    if not epsilon > 0:
        raise ConfigurationError(f"epsilon must be positive, got {epsilon}")
    d = model.d if d is None else int(d)
    rho = model.rho
    lam_mag = float(np.max(np.abs(model.eigenvalues))) if model.d else 0.0
    inner = rho * math.sqrt(d) * lam_mag + 4.0 * float(np.linalg.norm(model.g))
    if inner == 0.0:
        return math.inf
    return 32.0 * epsilon / (rho * rho * d * inner * inner)


def neighborhood_loss_probe(obj, x, radii, n_samples=500, spec=None, batch=None):
    """Mean/std of the loss over perturbation clouds at each radius.

    Returns a list of (radius, mean_loss, std_loss).  Radius r scales the
    base perturbation as x + r*v, so r plays the role of rho; radius 0 is
    reported exactly as (f(x), 0).  Defaults follow the 500-sample
    neighborhood probe protocol.
    """
    if n_samples < 2:
        raise ConfigurationError(f"n_samples must be >= 2, got {n_samples}")
    if spec is None:
        spec = PerturbationSpec("sphere", 1.0, 0)
    x = np.asarray(x, dtype=float)
    out = []
    for j, r in enumerate(radii):
        if r == 0.0:
            out.append((0.0, float(obj.evaluate(x, batch)), 0.0))
            continue
        V = sample_perturbation_batch(spec, j, n_samples, x.shape[0])
        fv = obj.evaluate_many(x[None, :] + float(r) * V, batch)
        out.append((float(r), float(np.mean(fv)), float(np.std(fv, ddof=1))))
    return out


def top_eigenvalues(obj, x, count, h=1e-3):
    """Largest `count` eigenvalues of the symmetrized FD Hessian, descending."""
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    if d > 2000:
        raise ConfigurationError(
            f"dense finite-difference Hessian is limited to d <= 2000 (got {d}); "
            "use neighborhood_loss_probe for larger problems"
        )
    if not 1 <= count <= d:
        raise ConfigurationError(f"count must be in [1, {d}], got {count}")
    H = finite_difference_hessian(obj, x, h)
    w = np.linalg.eigvalsh(H)
    return w[::-1][:count]


def monte_carlo_rt(obj, x, t, n_samples, spec, batch=None, index=0):
    """Monte-Carlo estimate of R_t(x) = F_t(x) - f(x).

    On quadratics this is the exact regularizer up to sampling error (the
    local quadratic view has no remainder there).
    """
    return (estimate_objective_value(obj, x, t, n_samples, spec, batch, index)
            - float(obj.evaluate(x, batch)))


def monte_carlo_rt_stats(obj, x, t, n_samples, spec, batch=None, index=0):
    """(estimate, standard_error) for monte_carlo_rt.

    The standard error of the t > 0 estimate comes from the delta method on
    log of the mean of the shifted exponentials.
    """
    x = np.asarray(x, dtype=float)
    V = sample_perturbation_batch(spec, index, n_samples, x.shape[0])
    fv = obj.evaluate_many(x[None, :] + spec.rho * V, batch)
    f0 = float(obj.evaluate(x, batch))
    if t == 0.0:
        return (float(np.mean(fv)) - f0,
                float(np.std(fv, ddof=1) / math.sqrt(n_samples)))
    m = float(np.max(t * fv))
    y = np.exp(t * fv - m)
    ybar = float(np.mean(y))
    est = (m + math.log(ybar)) / t - f0
    se = float(np.std(y, ddof=1) / (ybar * math.sqrt(n_samples) * t))
    return est, se


def sharpness_report(obj, x, rho, t_grid=(), radii=(), kind="sphere", seed=0,
                     n_probe=500, eigen_count=5, epsilon=1e-2, mc_samples=0,
                     fd_step=1e-3):
    """Assemble the sharpness picture of obj at x as a JSON-ready dict.

    Contains the probe curves (mean/std loss per radius), the top Hessian
    eigenvalues, the analytic R_t grid with per-coordinate sensitivities
    (entries marked inadmissible where 1 - t rho^2 lambda_1 <= 0), the ball
    t -> 0 limit, the R_inf solution with its sensitivities, and the
    admissible-t bound.  mc_samples > 0 adds Monte-Carlo R_t columns with
    standard errors.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    spec = PerturbationSpec(kind, rho, seed)
    model = SpectralModel.from_objective(obj, x, rho, h=fd_step)
    count = min(eigen_count, d)
    probes = neighborhood_loss_probe(obj, x, radii, n_probe, spec) if len(radii) else []

    rt_grid = []
    for j, t in enumerate(t_grid):
        entry = {"t": float(t)}
        try:
            entry["gaussian_rt"] = gaussian_rt(model, t)
            entry["admissible"] = True
            entry["sensitivities"] = [gaussian_sensitivity(model, t, i)
                                      for i in range(model.d)]
        except AdmissibilityError:
            entry["gaussian_rt"] = None
            entry["admissible"] = False
            entry["sensitivities"] = None
        if mc_samples:
            est, se = monte_carlo_rt_stats(obj, x, t, mc_samples, spec,
                                           index=1_000_000 + j)
            entry["mc_rt"] = est
            entry["mc_se"] = se
        rt_grid.append(entry)

    sol = r_infinity(model)
    t_bound = admissible_t_bound(model, epsilon=epsilon)
    return {
        "point": [float(v) for v in x],
        "f": float(obj.evaluate(x)),
        "rho": float(rho),
        "kind": kind,
        "seed": int(seed),
        "probes": [{"radius": r, "mean_loss": m, "std_loss": s}
                   for r, m, s in probes],
        "top_eigenvalues": [float(v) for v in top_eigenvalues(obj, x, count, fd_step)],
        "spectral": {
            "eigenvalues": [float(v) for v in model.eigenvalues],
            "eigen_gradient": [float(v) for v in model.g],
        },
        "rt_grid": rt_grid,
        "ball_rt_limit_zero": ball_rt_limit_zero(model),
        "r_infinity": {
            "value": sol.r_infinity,
            "case": sol.case,
            "omega_star": sol.omega_star,
            "u_star": [float(v) for v in sol.u_star],
            "secular_residual": sol.secular_residual,
            "degenerate": sol.degenerate,
            "sensitivities": [r_infinity_sensitivity(sol, model, i)
                              for i in range(model.d)],
        },
        "admissible_t_bound": t_bound if math.isfinite(t_bound) else None,
        "epsilon": float(epsilon),
    }
