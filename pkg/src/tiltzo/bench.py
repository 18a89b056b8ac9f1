"""Quantitative property experiments: bias rates, sphere-vs-ball gap,
norm concentration.

Each experiment returns a BenchReport whose cells carry their sample counts
and standard errors, and which serializes to paired JSON + CSV files named
``bench_<name>_<seed>.{json,csv}``.  Everything is deterministic in the
report seed.
"""

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .core import PerturbationSpec, ball_norm_raw_moment, perturbation_norm_moments, \
    sample_perturbation_batch
from .errors import AdmissibilityError, ConfigurationError
from .estimators import tilted_normalize, weights_bias_corrected, weights_naive

_CHUNK_SCALARS = 4_000_000  # cap on floats materialized per sampling chunk


@dataclass
class BenchReport:
    name: str
    seed: int
    parameters: dict
    cells: list
    slopes: dict = None
    notes: str = None

    def to_dict(self):
        return {
            "name": self.name,
            "seed": self.seed,
            "parameters": self.parameters,
            "cells": self.cells,
            "slopes": self.slopes,
            "notes": self.notes,
        }


def write_report(report, outdir):
    """Write bench_<name>_<seed>.json and .csv under outdir; returns the paths."""
    os.makedirs(outdir, exist_ok=True)
    stem = f"bench_{report.name}_{report.seed}"
    json_path = os.path.join(outdir, stem + ".json")
    csv_path = os.path.join(outdir, stem + ".csv")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    columns = []
    for cell in report.cells:
        for key in cell:
            if key not in columns:
                columns.append(key)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for cell in report.cells:
            writer.writerow([_csv_value(cell.get(c)) for c in columns])
    return json_path, csv_path


def _csv_value(v):
    if isinstance(v, float):
        return repr(v)
    return v


def tilted_gradient_oracle(eigenvalues, gradient, t, rho):
    """Analytic tilted gradient for a quadratic under Gaussian perturbation.

    In the eigenbasis each component is g_i / (1 - t rho^2 lambda_i); this
    is the fixed target the bias experiment measures against.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    g = np.asarray(gradient, dtype=float)
    denom = 1.0 - t * rho * rho * lam
    if np.any(denom <= 0.0):
        i = int(np.argmin(denom))
        raise AdmissibilityError(
            f"t = {t}, rho = {rho} inadmissible for eigenvalue {lam[i]}",
            index=i, eigenvalue=float(lam[i]),
        )
    return g / denom


def bias_rate_experiment(obj, t, rho, k_grid, replicates, seed=0):
    """Empirical estimator bias versus query count k, with fitted log-log slopes.

    ``obj`` is a QuadraticObjective; the evaluation point is the origin (so
    the true tilted gradient is b mapped through the spectrum).  For each k
    the same Gaussian query batches feed both the naive and bias-corrected
    weights; the report records ||mean estimate - analytic gradient|| per
    (estimator, k) with delta-method standard errors, plus OLS slopes of
    log bias against log k.

    The clean 1/k (and 1/k^2) decay is only visible when the softmax losses
    have light enough tails: choose parameters with 2 t rho^2 lambda_max < 1
    (finite variance of e^{t f}), or the empirical slope flattens well above
    the asymptotic rate.
    """
    if replicates < 1:
        raise ConfigurationError(f"replicates must be >= 1, got {replicates}")
    k_grid = [int(k) for k in k_grid]
    if any(k < 2 for k in k_grid):
        raise ConfigurationError(
            "bias_rate_experiment compares both weight rules, and the "
            "bias-corrected estimator requires k >= 2; drop k < 2 from k_grid"
        )
    lam = obj.eigenvalues
    gvec = obj.eigenvectors.T @ obj.b  # gradient at origin in the eigenbasis
    target_eig = tilted_gradient_oracle(lam, gvec, t, rho)
    target = obj.eigenvectors @ target_eig
    d = obj.dimension
    spec = PerturbationSpec("gaussian", rho, seed)

    cells = []
    biases = {"naive": [], "bias_corrected": []}
    for cell_idx, k in enumerate(k_grid):
        sums = {"naive": np.zeros(d), "bias_corrected": np.zeros(d)}
        comoments = {"naive": np.zeros((d, d)), "bias_corrected": np.zeros((d, d))}
        done = 0
        chunk_rows = max(1, _CHUNK_SCALARS // (k * d))
        chunk_id = 0
        while done < replicates:
            r = min(chunk_rows, replicates - done)
            V = sample_perturbation_batch(spec, cell_idx * 100_000 + chunk_id,
                                          r * k, d).reshape(r, k, d)
            X = obj.evaluate_many(V.reshape(-1, d) * rho)
            Xm = obj.evaluate_many(V.reshape(-1, d) * (-rho))
            fplus = X.reshape(r, k)
            fminus = Xm.reshape(r, k)
            ap, am = tilted_normalize(fplus, fminus, t)
            for name, w in (("naive", weights_naive(ap, am)),
                            ("bias_corrected", weights_bias_corrected(ap, am))):
                G = np.einsum("rk,rkd->rd", w, V) / (t * rho)
                sums[name] += G.sum(axis=0)
                comoments[name] += G.T @ G
            done += r
            chunk_id += 1
        for name in ("naive", "bias_corrected"):
            mean = sums[name] / replicates
            cov = comoments[name] / replicates - np.outer(mean, mean)
            bias_vec = mean - target
            bias = float(np.linalg.norm(bias_vec))
            if bias > 0:
                direction = bias_vec / bias
                se = math.sqrt(max(direction @ cov @ direction, 0.0) / replicates)
            else:
                se = math.sqrt(max(np.trace(cov), 0.0) / replicates)
            cells.append({
                "estimator": name, "k": k, "bias": bias,
                "std_error": float(se), "n": replicates,
            })
            biases[name].append(bias)

    slopes = {}
    logk = np.log(np.asarray(k_grid, dtype=float))
    for name in ("naive", "bias_corrected"):
        coef, residuals, *_ = np.polyfit(logk, np.log(biases[name]), 1, full=True)
        slopes[name] = {
            "slope": float(coef[0]),
            "intercept": float(coef[1]),
            "residual_sum_of_squares": float(residuals[0]) if len(residuals) else 0.0,
        }
    return BenchReport(
        name="bias-rate",
        seed=seed,
        parameters={"t": t, "rho": rho, "k_grid": k_grid, "replicates": replicates,
                    "eigenvalues": [float(v) for v in lam],
                    "gradient": [float(v) for v in gvec],
                    "analytic_gradient_norm": float(np.linalg.norm(target))},
        cells=cells,
        slopes=slopes,
    )


def sphere_ball_gap_experiment(obj, t, rho, d_grid, n_samples, seed=0):
    """Relative gap between ball and sphere tilted denominators versus d.

    The base objective (dimension d0) is embedded in each ambient dimension
    d by reading only the first d0 coordinates of the perturbation; sphere
    and ball draws share the same underlying directions (the counter-based
    streams coincide), so the gap is measured on coupled samples.
    """
    d0 = obj.dimension
    if any(int(d) < d0 for d in d_grid):
        raise ConfigurationError(f"every d in d_grid must be >= obj dimension {d0}")
    cells = []
    for cell_idx, d in enumerate(int(d) for d in d_grid):
        sphere = PerturbationSpec("sphere", rho, seed)
        ball = PerturbationSpec("ball", rho, seed)
        chunk_rows = max(1, _CHUNK_SCALARS // d)
        done = 0
        chunk_id = 0
        diff_sum = 0.0
        diff_sq = 0.0
        sph_sum = 0.0
        shift = None
        while done < n_samples:
            r = min(chunk_rows, n_samples - done)
            idx = cell_idx * 100_000 + chunk_id
            Vs = sample_perturbation_batch(sphere, idx, r, d)[:, :d0]
            Vb = sample_perturbation_batch(ball, idx, r, d)[:, :d0]
            ls = t * np.concatenate([obj.evaluate_many(rho * Vs),
                                     obj.evaluate_many(-rho * Vs)])
            lb = t * np.concatenate([obj.evaluate_many(rho * Vb),
                                     obj.evaluate_many(-rho * Vb)])
            if shift is None:
                shift = float(max(ls.max(), lb.max()))
            hs = np.exp(ls - shift)[:r] + np.exp(ls - shift)[r:]
            hb = np.exp(lb - shift)[:r] + np.exp(lb - shift)[r:]
            delta = hb - hs
            diff_sum += float(delta.sum())
            diff_sq += float(np.dot(delta, delta))
            sph_sum += float(hs.sum())
            done += r
            chunk_id += 1
        mean_diff = diff_sum / n_samples
        mean_sph = sph_sum / n_samples
        var_diff = max(diff_sq / n_samples - mean_diff ** 2, 0.0)
        gap = abs(mean_diff) / mean_sph
        cells.append({
            "d": d,
            "gap": float(gap),
            "denominator_sphere": float(mean_sph * math.exp(shift)),
            "denominator_ball": float((mean_sph + mean_diff) * math.exp(shift)),
            "std_error": float(math.sqrt(var_diff / n_samples) / mean_sph),
            "n": n_samples,
        })
    return BenchReport(
        name="sphere-ball",
        seed=seed,
        parameters={"t": t, "rho": rho, "d_grid": [int(v) for v in d_grid],
                    "n_samples": n_samples, "base_dimension": d0},
        cells=cells,
    )


def concentration_experiment(d_grid=(2, 10, 100, 1000), n_samples=100_000, seed=0):
    """Ball-sample norm statistics versus the exact closed-form moments.

    z_mean tests the sample mean against E||v||; z_variance tests the sample
    variance using the exact fourth central moment of ||v||.  The
    variance_times_3d column records the 1/(3d) folklore scaling for
    inspection (the exact variance behaves like 1/d, so this trends to 3).
    """
    if n_samples < 2:
        raise ConfigurationError(f"n_samples must be >= 2, got {n_samples}")
    cells = []
    for cell_idx, d in enumerate(int(d) for d in d_grid):
        spec = PerturbationSpec("ball", 1.0, seed)
        mean, variance = perturbation_norm_moments(d)
        raw = [ball_norm_raw_moment(d, p) for p in (1, 2, 3, 4)]
        mu4 = (raw[3] - 4.0 * raw[2] * mean + 6.0 * raw[1] * mean ** 2
               - 3.0 * mean ** 4)
        chunk_rows = max(1, _CHUNK_SCALARS // d)
        done = 0
        chunk_id = 0
        s1 = 0.0
        s2 = 0.0
        while done < n_samples:
            r = min(chunk_rows, n_samples - done)
            V = sample_perturbation_batch(spec, cell_idx * 100_000 + chunk_id, r, d)
            norms = np.linalg.norm(V, axis=1)
            s1 += float(norms.sum())
            s2 += float(np.dot(norms, norms))
            done += r
            chunk_id += 1
        emp_mean = s1 / n_samples
        emp_var = (s2 - n_samples * emp_mean ** 2) / (n_samples - 1)
        z_mean = (emp_mean - mean) / math.sqrt(variance / n_samples)
        z_var = (emp_var - variance) / math.sqrt((mu4 - variance ** 2) / n_samples)
        cells.append({
            "d": d,
            "empirical_mean": float(emp_mean),
            "expected_mean": float(mean),
            "z_mean": float(z_mean),
            "empirical_variance": float(emp_var),
            "expected_variance": float(variance),
            "z_variance": float(z_var),
            "variance_times_3d": float(emp_var * 3 * d),
            "n": n_samples,
        })
    return BenchReport(
        name="concentration",
        seed=seed,
        parameters={"d_grid": [int(v) for v in d_grid], "n_samples": n_samples},
        cells=cells,
    )
