"""Seeded perturbation sampling and constant-memory vector updates.

Parameter vectors are plain 1-D float64 numpy arrays.  Random perturbations
are drawn from a counter-based generator (Philox) keyed on
``(base_seed, query_index)``, so any query can be regenerated bit-identically
at any time and in any order — the property the seed-replay optimizer relies
on to avoid storing perturbation vectors.

Three perturbation distributions are supported:

``gaussian``   v ~ N(0, I_d)
``sphere``     v uniform on the sphere of radius sqrt(d)
``ball``       v uniform in the ball of radius sqrt(d)

The sqrt(d) scaling keeps E||v||^2 comparable to the Gaussian across kinds.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg.blas import daxpy

from .errors import DimensionError

KINDS = ("gaussian", "sphere", "ball")

# Philox keys are 128-bit; pack (seed, index) into disjoint halves so every
# (seed, index) pair owns an independent stream.
_KEY_SHIFT = 64


@dataclass(frozen=True)
class PerturbationSpec:
    """Distribution kind, scale rho, and base seed for one perturbation stream."""

    kind: str = "gaussian"
    rho: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}; expected one of {KINDS}")
        if not self.rho > 0:
            raise ValueError(f"perturbation scale rho must be positive, got {self.rho}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def with_rho(self, rho):
        return PerturbationSpec(self.kind, rho, self.seed)


def query_rng(seed, index):
    """Fresh generator for query `index` of the stream rooted at `seed`.

    Pure in (seed, index): reconstructing the generator replays its output.
    """
    if index < 0:
        raise ValueError(f"query index must be nonnegative, got {index}")
    key = (int(seed) << _KEY_SHIFT) | int(index)
    return np.random.Generator(np.random.Philox(key=key))


def _fill_from_rng(rng, kind, out):
    """Fill `out` with one perturbation draw, allocating nothing of size d."""
    d = out.shape[0]
    rng.standard_normal(out=out)
    if kind == "gaussian":
        return out
    norm = math.sqrt(float(np.dot(out, out)))
    if norm == 0.0:  # probability ~0; keep the radius contract anyway
        out[:] = 0.0
        out[0] = 1.0
        norm = 1.0
    out *= math.sqrt(d) / norm
    if kind == "ball":
        out *= rng.random() ** (1.0 / d)
    return out


def sample_perturbation(spec, index, d, out=None):
    """Draw the perturbation vector for (spec.seed, index) at dimension d.

    Deterministic in (seed, index, d, kind).  Passing `out` (a float64 array
    of shape (d,)) reuses that buffer, so a caller holding one buffer never
    materializes a second perturbation vector.
    """
    if d < 1:
        raise DimensionError(f"dimension must be at least 1, got {d}")
    if out is None:
        out = np.empty(d)
    elif out.shape != (d,) or out.dtype != np.float64:
        raise DimensionError("out buffer must be a float64 array of shape (d,)")
    return _fill_from_rng(query_rng(spec.seed, index), spec.kind, out)


def sample_perturbation_batch(spec, index, n, d):
    """Draw n perturbations as an (n, d) matrix from the stream at (seed, index).

    Vectorized path for Monte-Carlo probes; deterministic in
    (seed, index, n, d, kind).  The per-query replay path is
    `sample_perturbation`.
    """
    if d < 1:
        raise DimensionError(f"dimension must be at least 1, got {d}")
    rng = query_rng(spec.seed, index)
    v = rng.standard_normal((n, d))
    if spec.kind == "gaussian":
        return v
    norms = np.linalg.norm(v, axis=1)
    norms[norms == 0.0] = 1.0
    v *= (math.sqrt(d) / norms)[:, None]
    if spec.kind == "ball":
        v *= (rng.random(n) ** (1.0 / d))[:, None]
    return v


def perturbation_norm_moments(d):
    """Exact mean and variance of ||v|| for the ball distribution.

    For v uniform on the ball of radius sqrt(d), ||v|| = sqrt(d) * U^(1/d)
    with U uniform(0,1), so E||v||^p = d^(p/2) * d/(d+p).  This gives

        E||v||    = sqrt(d) * d/(d+1)
        Var(||v||) = d^2 / ((d+2)(d+1)^2)
    """
    if d < 1:
        raise DimensionError(f"dimension must be at least 1, got {d}")
    mean = math.sqrt(d) * d / (d + 1)
    variance = d * d / ((d + 2) * (d + 1) ** 2)
    return mean, variance


def ball_norm_raw_moment(d, p):
    """E||v||^p for the ball distribution: d^(p/2) * d/(d+p)."""
    return d ** (p / 2) * d / (d + p)


def axpy_update(x, coeff, v):
    """In-place x += coeff * v without allocating a temporary vector.

    Uses BLAS daxpy, so during optimizer updates the only d-sized arrays
    alive are x and the one perturbation buffer v.  Returns x.
    """
    if x.shape != v.shape:
        raise DimensionError(f"shape mismatch: x has {x.shape}, v has {v.shape}")
    out = daxpy(v, x, a=coeff)
    if out is not x:  # non-contiguous or non-f64 input fell back to a copy
        x[:] = out
    return out if out is x else x


def ensure_finite(values, what="values", query_index=None):
    """Raise EvaluationError if any entry is NaN or infinite."""
    from .errors import EvaluationError

    arr = np.asarray(values)
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))
        idx = tuple(bad[0]) if bad.size else None
        raise EvaluationError(
            f"non-finite {what} at position {idx}", query_index=query_index
        )
    return values
