"""Tilted zeroth-order gradient estimation.

The tilted estimator evaluates the objective at antithetic pairs
x ± rho*v_i, converts the 2k losses into normalized softmax weights
(a ratio-of-expectations estimate), and assembles

    G = (1/(t*rho)) * sum_i w_i v_i

with either the plug-in weights w_i = abar_i+ - abar_i- (bias O(1/k)) or a
bias-corrected variant (bias O(1/k^2)).  The vanilla two-point estimator
G = (1/k) sum_i [(f_i+ - f_i-)/(2 rho)] v_i is the t -> 0 limit and the
baseline.  All exponentials are max-shifted, so any finite losses are safe.

Weight functions operate on the last axis, so benchmark code can process
(replicates, k) arrays in one call.
"""

import numpy as np

from .core import PerturbationSpec, sample_perturbation, sample_perturbation_batch
from .errors import ConfigurationError, EvaluationError

ESTIMATORS = ("naive", "bias_corrected", "vanilla")


class TiltConfig:
    """Tilt t, query count k, estimator choice, and the perturbation stream.

    t = 0 is permitted with any estimator choice and silently dispatches to
    the vanilla two-point estimator (its exact t -> 0 limit).  Ball
    perturbations are rejected: the tilted estimator is derived for Gaussian
    and sphere sampling, with the ball appearing only as the smoothing
    density that sphere samples approximate.
    """

    def __init__(self, t, k, estimator="naive", perturbation=None):
        if perturbation is None:
            perturbation = PerturbationSpec()
        if not (np.isfinite(t) and t >= 0):
            raise ConfigurationError(f"tilt t must be a finite value >= 0, got {t}")
        if k < 1:
            raise ConfigurationError(f"query count k must be >= 1, got {k}")
        if estimator not in ESTIMATORS:
            raise ConfigurationError(
                f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}"
            )
        if estimator == "bias_corrected" and k < 2:
            raise ConfigurationError("bias_corrected estimator requires k >= 2")
        if perturbation.kind == "ball":
            raise ConfigurationError(
                "gradient estimation supports gaussian or sphere perturbations; "
                "ball sampling is only the analysis-side smoothing density"
            )
        self.t = float(t)
        self.k = int(k)
        self.estimator = estimator
        self.perturbation = perturbation

    def effective_estimator(self):
        return "vanilla" if self.t == 0.0 else self.estimator

    def __repr__(self):
        return (f"TiltConfig(t={self.t}, k={self.k}, estimator={self.estimator!r}, "
                f"perturbation={self.perturbation!r})")


def tilted_normalize(fplus, fminus, t):
    """Normalized softmax weights abar± over the 2k losses of each batch.

    Computes abar_i± = exp(t f_i± - m) / Z with m the max of all 2k shifted
    exponents and Z the sum over all 2k terms — identical to a_i±/Z with
    a_i± = e^{t f_i±}, but immune to overflow.  Operates on the last axis.
    """
    if not t > 0:
        raise ConfigurationError(f"tilted_normalize requires t > 0, got {t}")
    fplus = np.asarray(fplus, dtype=float)
    fminus = np.asarray(fminus, dtype=float)
    if fplus.shape != fminus.shape:
        raise ConfigurationError("fplus and fminus must have matching shapes")
    ep = t * fplus
    em = t * fminus
    m = np.maximum(ep.max(axis=-1, keepdims=True), em.max(axis=-1, keepdims=True))
    ap = np.exp(ep - m)
    am = np.exp(em - m)
    Z = (ap + am).sum(axis=-1, keepdims=True)
    return ap / Z, am / Z


def weights_naive(abar_plus, abar_minus):
    """Plug-in ratio weights w_i = abar_i+ - abar_i-."""
    return np.asarray(abar_plus) - np.asarray(abar_minus)


def weights_bias_corrected(abar_plus, abar_minus):
    """Second-order-corrected weights.

    With B_i = abar_i+ + abar_i-, each naive weight is scaled by

        1 + (k/(k-1)) * (B_i - sum_j B_j^2)

    computed here as 1 + (k/(k-1)) * sum_j B_j (B_i - B_j), which is
    algebraically identical (sum_j B_j = 1) but yields exactly 1.0 when all
    B_i are equal, so the degenerate case reproduces the naive weights
    bitwise.
    """
    ap = np.asarray(abar_plus, dtype=float)
    am = np.asarray(abar_minus, dtype=float)
    k = ap.shape[-1]
    if k < 2:
        raise ConfigurationError("bias correction requires k >= 2")
    B = ap + am
    inner = np.zeros_like(B)
    for j in range(k):
        Bj = B[..., j : j + 1]
        inner += Bj * (B - Bj)
    factor = 1.0 + (k / (k - 1.0)) * inner
    return factor * (ap - am)


def update_coefficients(fplus, fminus, cfg):
    """Per-query coefficients c with estimate/step direction sum_i c_i v_i.

    Returns (c, w): the tilted estimators use c_i = w_i/(t*rho) with w from
    the configured weight rule; vanilla uses the per-query projected
    gradient w_i = (f_i+ - f_i-)/(2 rho) and c_i = w_i/k.
    """
    rho = cfg.perturbation.rho
    est = cfg.effective_estimator()
    fplus = np.asarray(fplus, dtype=float)
    fminus = np.asarray(fminus, dtype=float)
    if est == "vanilla":
        w = (fplus - fminus) / (2.0 * rho)
        return w / cfg.k, w
    ap, am = tilted_normalize(fplus, fminus, cfg.t)
    if est == "naive":
        w = weights_naive(ap, am)
    else:
        w = weights_bias_corrected(ap, am)
    return w / (cfg.t * rho), w


def collect_loss_pairs(obj, x, cfg, batch=None, start_index=0):
    """Evaluate the k antithetic loss pairs f(x ± rho v_i).

    Returns (fplus, fminus) arrays of length k.  Perturbations are drawn
    from (cfg.perturbation.seed, start_index + i) and can be regenerated at
    any time.  Non-finite losses raise EvaluationError carrying the query
    index.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    spec = cfg.perturbation
    rho = spec.rho
    fplus = np.empty(cfg.k)
    fminus = np.empty(cfg.k)
    buf = np.empty(d)
    for i in range(cfg.k):
        sample_perturbation(spec, start_index + i, d, out=buf)
        fp = obj.evaluate(x + rho * buf, batch)
        fm = obj.evaluate(x - rho * buf, batch)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise EvaluationError(
                f"non-finite loss at query index {start_index + i}",
                query_index=start_index + i,
            )
        fplus[i] = fp
        fminus[i] = fm
    return fplus, fminus


def estimate_gradient(obj, x, cfg, batch=None, start_index=0):
    """Zeroth-order gradient estimate at x from k antithetic query pairs.

    Two passes over the seeded queries: the first collects losses, the
    second regenerates each v_i and accumulates c_i v_i, so no (k, d)
    matrix is ever materialized.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    if obj.dimension is not None and obj.dimension != d:
        raise ConfigurationError(
            f"objective dimension {obj.dimension} != point dimension {d}"
        )
    fplus, fminus = collect_loss_pairs(obj, x, cfg, batch, start_index)
    c, _ = update_coefficients(fplus, fminus, cfg)
    grad = np.zeros(d)
    buf = np.empty(d)
    spec = cfg.perturbation
    for i in range(cfg.k):
        sample_perturbation(spec, start_index + i, d, out=buf)
        buf *= c[i]
        grad += buf
    return grad


def estimate_objective_value(obj, x, t, n_samples, spec, batch=None, index=0):
    """Monte-Carlo estimate of the tilted objective F_t(x).

    For t > 0 returns (1/t)[logsumexp(t f(x + rho v_j)) - log n]; for t = 0
    returns the plain mean of f(x + rho v_j) (the smoothed objective).
    """
    from scipy.special import logsumexp

    if t < 0:
        raise ConfigurationError(f"t must be >= 0, got {t}")
    if n_samples < 1:
        raise ConfigurationError(f"n_samples must be >= 1, got {n_samples}")
    x = np.asarray(x, dtype=float)
    V = sample_perturbation_batch(spec, index, n_samples, x.shape[0])
    fv = obj.evaluate_many(x[None, :] + spec.rho * V, batch)
    if not np.all(np.isfinite(fv)):
        bad = int(np.argmax(~np.isfinite(fv)))
        raise EvaluationError(f"non-finite loss at sample {bad}", query_index=bad)
    if t == 0.0:
        return float(np.mean(fv))
    return float((logsumexp(t * fv) - np.log(n_samples)) / t)
