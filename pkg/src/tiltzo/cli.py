"""Command-line front end: `run`, `sharpness`, and `bench` subcommands.

Configs are JSON with a ``schema_version`` field.  Every run writes a
trajectory CSV plus a JSON manifest that contains everything needed to
reproduce it; rerunning with the same config and seed rewrites byte-identical
CSV output (wall time lives in its own manifest field).

Exit codes: 0 success, 2 usage (argparse), 3 missing file, 4 config/schema
violation, 5 numeric failure.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .bench import (bias_rate_experiment, concentration_experiment,
                    sphere_ball_gap_experiment, write_report)
from .errors import (AdmissibilityError, ConfigurationError, DimensionError,
                     EvaluationError, NumericError)
from .estimators import TiltConfig
from .core import PerturbationSpec
from .objectives import QuadraticObjective, make_objective
from .optimizer import (OptimizerConfig, loss_plateau, run as run_loop,
                        trajectory_final_point, trajectory_to_csv)
from .sharpness import sharpness_report

EXIT_OK = 0
EXIT_MISSING_FILE = 3
EXIT_SCHEMA = 4
EXIT_NUMERIC = 5

OPTIMIZER_TOKENS = ("zest-naive", "zest-bc", "vanilla", "gd")
_TOKEN_TO_ESTIMATOR = {"zest-naive": "naive", "zest-bc": "bias_corrected",
                       "vanilla": "vanilla"}


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _say(args, message):
    if not args.quiet:
        print(message)


def _load_config(path):
    if not os.path.exists(path):
        raise CliError(EXIT_MISSING_FILE, f"config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as err:
        raise CliError(EXIT_SCHEMA, f"config {path} is not valid JSON: {err}")
    if not isinstance(cfg, dict):
        raise CliError(EXIT_SCHEMA, f"config {path} must be a JSON object")
    version = cfg.get("schema_version")
    if version != 1:
        raise CliError(EXIT_SCHEMA,
                       f"config {path} needs \"schema_version\": 1 (got {version!r})")
    return cfg


def _field(cfg, key, kind, default=KeyError, where="config"):
    if key not in cfg:
        if default is KeyError:
            raise CliError(EXIT_SCHEMA, f"{where} is missing required field {key!r}")
        return default
    value = cfg[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise CliError(EXIT_SCHEMA,
                       f"{where} field {key!r} must be {kind.__name__}, "
                       f"got {type(value).__name__}")
    return value


def _build_objective(cfg):
    spec = _field(cfg, "objective", dict)
    params = dict(spec)
    name = params.pop("name", None)
    if not isinstance(name, str):
        raise CliError(EXIT_SCHEMA, "objective config needs a \"name\" string")
    try:
        return name, make_objective(name, **params)
    except (ConfigurationError, DimensionError, TypeError) as err:
        raise CliError(EXIT_SCHEMA, f"bad objective config: {err}")


def _resolve_outdir(args, cfg):
    outdir = args.out or cfg.get("out") or "."
    os.makedirs(outdir, exist_ok=True)
    return outdir


def _resolve_seed(args, cfg, default=0):
    seed = args.seed if args.seed is not None else cfg.get("seed", default)
    if not isinstance(seed, int) or seed < 0 or seed >= 2 ** 64:
        raise CliError(EXIT_SCHEMA, f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def cmd_run(args):
    cfg = _load_config(args.config)
    name, obj = _build_objective(cfg)
    token = _field(cfg, "optimizer", str)
    if token not in OPTIMIZER_TOKENS:
        raise CliError(EXIT_SCHEMA,
                       f"unknown optimizer {token!r}; expected one of {OPTIMIZER_TOKENS}")
    seed = _resolve_seed(args, cfg)
    eta = _field(cfg, "eta", float)
    iterations = _field(cfg, "iterations", int)
    log_every = _field(cfg, "log_every", int, default=1)
    t = _field(cfg, "t", float, default=0.0)

    if token == "gd":
        if obj.gradient is None:
            raise CliError(EXIT_SCHEMA,
                           f"optimizer \"gd\" needs an objective with an exact "
                           f"gradient; {name!r} has none")
        tilt = None
    else:
        if token == "vanilla":
            if t > 0:
                raise CliError(EXIT_SCHEMA,
                               "optimizer \"vanilla\" ignores tilt: set \"t\" to 0 "
                               "or omit it, or pick zest-naive / zest-bc")
        elif not t > 0:
            raise CliError(EXIT_SCHEMA, f"optimizer {token!r} needs \"t\" > 0")
        k = _field(cfg, "k", int)
        rho = _field(cfg, "rho", float)
        kind = _field(cfg, "kind", str, default="gaussian")
        try:
            tilt = TiltConfig(t, k, _TOKEN_TO_ESTIMATOR[token],
                              PerturbationSpec(kind, rho, seed))
        except (ConfigurationError, ValueError) as err:
            raise CliError(EXIT_SCHEMA, f"bad estimator config: {err}")

    x0 = cfg.get("x0")
    if x0 is None:
        x0 = [0.0] * obj.dimension
    if (not isinstance(x0, list) or len(x0) != obj.dimension
            or not all(isinstance(v, (int, float)) for v in x0)):
        raise CliError(EXIT_SCHEMA,
                       f"\"x0\" must be a list of {obj.dimension} numbers")

    stopping = None
    plateau = cfg.get("stop_on_plateau")
    if plateau is not None:
        if not isinstance(plateau, dict):
            raise CliError(EXIT_SCHEMA, "\"stop_on_plateau\" must be an object")
        stopping = loss_plateau(int(plateau.get("patience", 10)),
                                float(plateau.get("min_rel_improvement", 1e-4)))

    try:
        opt_cfg = OptimizerConfig(eta=eta, max_iterations=iterations, tilt=tilt,
                                  log_every=log_every)
    except ConfigurationError as err:
        raise CliError(EXIT_SCHEMA, str(err))

    started = time.perf_counter()
    x_final, records = run_loop(obj, np.asarray(x0, dtype=float), opt_cfg,
                                stopping=stopping)
    wall = time.perf_counter() - started

    outdir = _resolve_outdir(args, cfg)
    stem = f"run_{name}_{token}_{seed}"
    csv_path = os.path.join(outdir, stem + ".csv")
    manifest_path = os.path.join(outdir, stem + "_manifest.json")
    trajectory_to_csv(records, csv_path, obj.dimension)
    manifest = {
        "schema_version": 1,
        "command": "run",
        "package_version": __version__,
        "config": {**cfg, "seed": seed},
        "objective": name,
        "optimizer": token,
        "final_iterate": [float(v) for v in x_final],
        "final_loss": float(records[-1].loss),
        "iterations_run": int(records[-1].iteration),
        "trajectory_csv": os.path.basename(csv_path),
        "wall_time_seconds": wall,
    }
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _say(args, f"{stem}: final loss {records[-1].loss:.6g} after "
               f"{records[-1].iteration} iterations")
    _say(args, f"wrote {csv_path} and {manifest_path}")
    return EXIT_OK


def cmd_sharpness(args):
    cfg = _load_config(args.config)
    name, obj = _build_objective(cfg)
    seed = _resolve_seed(args, cfg)
    rho = _field(cfg, "rho", float)

    point = cfg.get("point")
    trajectory = cfg.get("trajectory")
    if (point is None) == (trajectory is None):
        raise CliError(EXIT_SCHEMA,
                       "config must give exactly one of \"point\" or \"trajectory\"")
    if trajectory is not None:
        if not os.path.exists(trajectory):
            raise CliError(EXIT_MISSING_FILE,
                           f"trajectory file not found: {trajectory}")
        try:
            point = list(trajectory_final_point(trajectory))
        except ConfigurationError as err:
            raise CliError(EXIT_SCHEMA, str(err))
    if (not isinstance(point, list) or len(point) != obj.dimension
            or not all(isinstance(v, (int, float)) for v in point)):
        raise CliError(EXIT_SCHEMA,
                       f"\"point\" must be a list of {obj.dimension} numbers")

    kind = _field(cfg, "kind", str, default="sphere")
    t_grid = _field(cfg, "t_grid", list, default=[0.0, 0.01, 0.1, 0.5, 1.0])
    radii = _field(cfg, "radii", list, default=[0.0, 0.1, 0.25, 0.5, 1.0])
    n_probe = _field(cfg, "n_samples", int, default=500)
    eigen_count = _field(cfg, "eigen_count", int, default=5)
    epsilon = _field(cfg, "epsilon", float, default=1e-2)
    mc = _field(cfg, "monte_carlo", int, default=0)
    fd_step = _field(cfg, "fd_step", float, default=1e-3)

    try:
        report = sharpness_report(obj, np.asarray(point, dtype=float), rho,
                                  t_grid=t_grid, radii=radii, kind=kind,
                                  seed=seed, n_probe=n_probe,
                                  eigen_count=eigen_count, epsilon=epsilon,
                                  mc_samples=mc, fd_step=fd_step)
    except (ConfigurationError, DimensionError) as err:
        raise CliError(EXIT_SCHEMA, str(err))

    outdir = _resolve_outdir(args, cfg)
    path = os.path.join(outdir, f"sharpness_{name}_{seed}.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    top = ", ".join(f"{v:.4f}" for v in report["top_eigenvalues"])
    _say(args, f"sharpness at {point}: f = {report['f']:.6g}, "
               f"top eigenvalues [{top}], R_inf = {report['r_infinity']['value']:.6g}")
    _say(args, f"wrote {path}")
    return EXIT_OK


BENCH_DEFAULTS = {
    "bias-rate": {
        "eigenvalues": [0.7, 0.25],
        "gradient": [1.0, 0.6],
        "t": 1.0,
        "rho": 0.5,
        "k_grid": [2, 4, 8, 16, 32],
        "replicates": 100_000,
    },
    "sphere-ball": {
        "eigenvalues": [1.0, 0.5],
        "gradient": [1.0, 0.5],
        "t": 1.0,
        "rho": 0.5,
        "d_grid": [2, 10, 100],
        "n_samples": 100_000,
    },
    "concentration": {
        "d_grid": [2, 10, 100, 1000],
        "n_samples": 100_000,
    },
}


def cmd_bench(args):
    params = dict(BENCH_DEFAULTS[args.name])
    seed = 0
    if args.config is not None:
        cfg = _load_config(args.config)
        seed = cfg.get("seed", 0)
        for key, value in cfg.items():
            if key in ("schema_version", "seed", "out"):
                continue
            if key not in params:
                raise CliError(EXIT_SCHEMA,
                               f"unknown field {key!r} for bench {args.name!r}; "
                               f"expected one of {sorted(params)}")
            params[key] = value
        outdir = args.out or cfg.get("out") or "."
    else:
        outdir = args.out or "."
    if args.seed is not None:
        seed = args.seed

    try:
        if args.name == "bias-rate":
            obj = QuadraticObjective.from_spectrum(params["eigenvalues"],
                                                   params["gradient"])
            report = bias_rate_experiment(obj, params["t"], params["rho"],
                                          params["k_grid"], params["replicates"],
                                          seed=seed)
        elif args.name == "sphere-ball":
            obj = QuadraticObjective.from_spectrum(params["eigenvalues"],
                                                   params["gradient"])
            report = sphere_ball_gap_experiment(obj, params["t"], params["rho"],
                                                params["d_grid"],
                                                params["n_samples"], seed=seed)
        else:
            report = concentration_experiment(params["d_grid"],
                                              params["n_samples"], seed=seed)
    except (ConfigurationError, DimensionError) as err:
        raise CliError(EXIT_SCHEMA, str(err))

    os.makedirs(outdir, exist_ok=True)
    json_path, csv_path = write_report(report, outdir)
    if report.slopes:
        for estimator, fit in report.slopes.items():
            _say(args, f"{estimator}: fitted slope {fit['slope']:.3f}")
    _say(args, f"wrote {json_path} and {csv_path}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tiltzo",
        description="Tilted zeroth-order optimization runs, sharpness reports, "
                    "and property benchmarks.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (default: config or cwd)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    p_run = sub.add_parser("run", parents=[common],
                           help="execute an optimizer run from a config")
    p_run.add_argument("--config", required=True, help="JSON run config")
    p_run.set_defaults(func=cmd_run)

    p_sharp = sub.add_parser("sharpness", parents=[common],
                             help="write a sharpness report for a point")
    p_sharp.add_argument("--config", required=True, help="JSON sharpness config")
    p_sharp.set_defaults(func=cmd_sharpness)

    p_bench = sub.add_parser("bench", parents=[common],
                             help="run a property benchmark")
    p_bench.add_argument("name", choices=sorted(BENCH_DEFAULTS),
                         help="which benchmark to run")
    p_bench.add_argument("--config", help="JSON overrides for the defaults")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except (EvaluationError, AdmissibilityError, NumericError,
            FloatingPointError, np.linalg.LinAlgError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
