"""Sharpness analysis of the two minima: same trace, different R_t.

Trace(Hessian) is 2.8 at BOTH minima of the two-minima surface, so the
t -> 0 sharpness (rho^2/2) sum(lambda) cannot tell them apart.  The tilted
gap R_t at t > 0 can: it weights the top eigenvalue more, so the sharp
minimum scores strictly higher.  This script prints the analytic R_t curves
side by side and cross-checks one point against Monte Carlo.

Run:  python demos/sharpness_report_demo.py [--out DIR]
"""

import argparse
import json
import os

import numpy as np

from tiltzo.objectives import TwoMinimaObjective
from tiltzo.sharpness import sharpness_report

T_GRID = (0.0, 0.1, 0.5, 1.0, 2.0)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", help="also write the two JSON reports here")
    args = parser.parse_args()

    obj = TwoMinimaObjective()
    reports = {}
    for name, point in (("sharp", [1.0, 0.0]), ("flat", [-1.0, 0.0])):
        reports[name] = sharpness_report(obj, np.array(point), rho=0.3,
                                         t_grid=T_GRID, radii=(0.0, 0.3, 0.6),
                                         mc_samples=50_000, seed=0)

    for name in ("sharp", "flat"):
        eigs = reports[name]["top_eigenvalues"]
        print(f"{name:5s} minimum: eigenvalues [{eigs[0]:.4f}, {eigs[1]:.4f}], "
              f"trace {sum(eigs):.4f}")
    print()

    print(f"{'t':>5s} {'R_t sharp':>12s} {'R_t flat':>12s} {'ratio':>7s} "
          f"{'MC sharp':>12s}")
    for i, t in enumerate(T_GRID):
        sharp = reports["sharp"]["rt_grid"][i]
        flat = reports["flat"]["rt_grid"][i]
        rs, rf = sharp["gaussian_rt"], flat["gaussian_rt"]
        mc = f"{sharp['mc_rt']:.6f}" if "mc_rt" in sharp else "-"
        print(f"{t:5.2f} {rs:12.6f} {rf:12.6f} {rs / rf:7.4f} {mc:>12s}")

    print()
    print("At t = 0 the two columns agree (equal traces); as t grows the")
    print("sharp minimum pulls ahead.  The Monte-Carlo column samples the")
    print("sphere rather than the Gaussian and the surface is not globally")
    print("quadratic at rho = 0.3, so it tracks the analytic value without")
    print("landing on it; the closed forms are exact only through second")
    print("order.")

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for name, rep in reports.items():
            path = os.path.join(args.out, f"report_{name}.json")
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(rep, fh, indent=2, sort_keys=True)
            print(f"wrote {path}")


if __name__ == "__main__":
    main()
