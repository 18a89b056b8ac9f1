"""Training loops: seed-replay tilted descent, vanilla ZO descent, and GD.

The tilted/vanilla step runs in two passes.  Pass 1 regenerates each
perturbation v_i from its seed and turns the single scratch buffer into the
evaluation point itself: buf <- x + rho v_i for the forward loss, then buf
is reflected through x for the backward loss, and v_i is discarded.  x is
never touched in pass 1, so an aborted step leaves it bit-identical.
Pass 2 regenerates each v_i again and applies its share of the update to x
in place.  At every instant only one d-vector coexists with x, so the
optimizer's working set is 2|x| plus O(k) scalars regardless of k.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .core import axpy_update, sample_perturbation
from .errors import ConfigurationError, EvaluationError
from .estimators import TiltConfig, update_coefficients

SNAPSHOT_MAX_DIM = 8  # iterate columns go to CSV only up to this dimension


@dataclass
class OptimizerConfig:
    """Learning rate, iteration budget, estimator config, batch schedule.

    ``tilt=None`` selects exact-gradient descent (the objective must provide
    a closed-form gradient).  ``batch_schedule`` maps an iteration index to
    a BatchId; None runs full-batch throughout.
    """

    eta: float
    max_iterations: int
    tilt: TiltConfig = None
    log_every: int = 1
    batch_schedule: object = None

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigurationError(f"learning rate must be positive, got {self.eta}")
        if self.max_iterations < 1:
            raise ConfigurationError(
                f"max_iterations must be >= 1, got {self.max_iterations}"
            )
        if self.log_every < 1:
            raise ConfigurationError(f"log_every must be >= 1, got {self.log_every}")

    @property
    def method(self):
        return "gd" if self.tilt is None else self.tilt.effective_estimator()


@dataclass
class TrajectoryRecord:
    """One logged point of a run; replayable from the recorded seed/indices."""

    iteration: int
    loss: float
    x_norm: float
    x: np.ndarray = None          # snapshot, kept only for d <= SNAPSHOT_MAX_DIM
    weights: np.ndarray = None    # per-query weights of the step that produced x
    seed: int = None
    index_start: int = None
    index_stop: int = None


def _snapshot(x):
    return x.copy() if x.shape[0] <= SNAPSHOT_MAX_DIM else None


def _norm(x):
    # BLAS dot allocates no d-sized temporary, unlike np.linalg.norm;
    # keeps the logging path inside the one-buffer memory budget
    return float(np.sqrt(np.dot(x, x)))


def tilted_step(obj, x, cfg, iteration=0, batch=None, scratch=None):
    """One two-pass seed-replay step; x is updated in place and returned.

    Query i of this step draws from stream index iteration*k + i, so a rerun
    with the same seed replays the identical perturbations.  ``scratch``
    optionally supplies the reusable perturbation buffer.
    """
    tc = cfg.tilt
    if tc is None:
        raise ConfigurationError("tilted_step needs a TiltConfig; use gd_step for GD")
    x = np.asarray(x)
    if x.dtype != np.float64:
        raise ConfigurationError("parameter vector must be float64")
    d = x.shape[0]
    spec = tc.perturbation
    rho = spec.rho
    k = tc.k
    base = iteration * k
    buf = scratch if scratch is not None else np.empty(d)
    fplus = np.empty(k)
    fminus = np.empty(k)

    for i in range(k):
        sample_perturbation(spec, base + i, d, out=buf)
        # the buffer itself becomes the evaluation point: x + rho v, then
        # its reflection through x, leaving x bit-identical throughout
        buf *= rho
        buf += x
        fp = obj.evaluate(buf, batch)
        buf -= x
        np.negative(buf, out=buf)
        buf += x
        fm = obj.evaluate(buf, batch)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise EvaluationError(
                f"non-finite loss at iteration {iteration}, query index {base + i}; "
                "step aborted with x unchanged",
                query_index=base + i,
            )
        fplus[i] = fp
        fminus[i] = fm

    c, w = update_coefficients(fplus, fminus, tc)
    for i in range(k):
        sample_perturbation(spec, base + i, d, out=buf)
        axpy_update(x, -cfg.eta * c[i], buf)

    record = TrajectoryRecord(
        iteration=iteration,
        loss=obj.evaluate(x, batch),
        x_norm=_norm(x),
        x=_snapshot(x),
        weights=w,
        seed=spec.seed,
        index_start=base,
        index_stop=base + k,
    )
    return x, record


def gd_step(obj, x, eta):
    """Exact-gradient descent step x - eta * grad f(x)."""
    if obj.gradient is None:
        raise ConfigurationError(
            f"{type(obj).__name__} provides no exact gradient; "
            "use a zeroth-order estimator instead"
        )
    return np.asarray(x, dtype=float) - eta * obj.gradient(x)


def loss_plateau(patience=10, min_rel_improvement=1e-4):
    """Stopping rule: halt when the best loss stops improving for `patience` steps."""

    def rule(records):
        losses = [r.loss for r in records]
        if len(losses) <= patience:
            return False
        best_old = min(losses[:-patience])
        best_new = min(losses[-patience:])
        scale = max(abs(best_old), 1e-12)
        return (best_old - best_new) / scale < min_rel_improvement

    return rule


def run(obj, x0, cfg, stopping=None):
    """Iterate steps from x0; returns (x_final, trajectory records).

    Record 0 holds the start point; record s+1 holds the iterate after step
    s (logged every cfg.log_every steps, and always for the final step).
    The trajectory is a pure function of (x0, cfg) — rerunning reproduces
    it bitwise.
    """
    x = np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise EvaluationError("x0 has non-finite entries")
    records = [
        TrajectoryRecord(
            iteration=0,
            loss=obj.evaluate(x, _batch_for(cfg, 0)),
            x_norm=_norm(x),
            x=_snapshot(x),
        )
    ]
    scratch = np.empty(x.shape[0]) if cfg.tilt is not None else None
    for s in range(cfg.max_iterations):
        batch = _batch_for(cfg, s)
        if cfg.tilt is None:
            x = gd_step(obj, x, cfg.eta)
            if not np.all(np.isfinite(x)):
                raise EvaluationError(f"non-finite iterate after step {s}")
            rec = TrajectoryRecord(
                iteration=s,
                loss=obj.evaluate(x, batch),
                x_norm=_norm(x),
                x=_snapshot(x),
            )
        else:
            try:
                x, rec = tilted_step(obj, x, cfg, iteration=s, batch=batch,
                                     scratch=scratch)
            except EvaluationError as err:
                err.args = (f"step {s}: {err.args[0]}",)
                raise
        rec.iteration = s + 1
        if (s + 1) % cfg.log_every == 0 or s == cfg.max_iterations - 1:
            records.append(rec)
        if stopping is not None and stopping(records):
            break
    return x, records


def _batch_for(cfg, iteration):
    if cfg.batch_schedule is None:
        return None
    return cfg.batch_schedule(iteration)


def trajectory_to_csv(records, path, dimension):
    """Write records as CSV: iter,loss,x0,... for d <= 8, else iter,loss,x_norm."""
    small = dimension <= SNAPSHOT_MAX_DIM
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if small:
            writer.writerow(["iter", "loss"] + [f"x{i}" for i in range(dimension)])
            for r in records:
                writer.writerow([r.iteration, repr(float(r.loss))]
                                + [repr(float(v)) for v in r.x])
        else:
            writer.writerow(["iter", "loss", "x_norm"])
            for r in records:
                writer.writerow([r.iteration, repr(float(r.loss)),
                                 repr(float(r.x_norm))])


def trajectory_final_point(path):
    """Final iterate from a trajectory CSV written with iterate columns."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    if len(header) < 3 or header[2] != "x0":
        raise ConfigurationError(
            f"{path} has no iterate columns (large-d trajectory?); "
            "pass an explicit point instead"
        )
    return np.array([float(v) for v in rows[-1][2:]])
