"""Which minimum does each optimizer pick on the two-minima surface?

The surface has a sharp minimum at (1, 0) (Hessian trace 2.8, top eigenvalue
2.4) and a flat one at (-1, 0) (trace 2.8 as well, but top eigenvalue 2.0 and
a wider basin).  Started from the ridge point (0, 1):

  * exact gradient descent rolls into the sharp basin,
  * the tilted zeroth-order estimators drift to the flat one,
  * the untilted two-point estimator at the same rho parks between the two,
    because at rho = 0.8 the smoothed landscape has already merged the wells.

Run:  python demos/basin_selection.py [--seed N]
"""

import argparse

import numpy as np

from tiltzo.core import PerturbationSpec
from tiltzo.estimators import TiltConfig
from tiltzo.objectives import TwoMinimaObjective, two_minima_hessian
from tiltzo.optimizer import OptimizerConfig, run

SHARP = np.array([1.0, 0.0])
FLAT = np.array([-1.0, 0.0])


def zo_config(estimator, t, seed):
    tilt = TiltConfig(t, 500, estimator, PerturbationSpec("gaussian", 0.8, seed))
    return OptimizerConfig(eta=0.1, max_iterations=100, tilt=tilt, log_every=100)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    obj = TwoMinimaObjective()
    x0 = np.array([0.0, 1.0])

    print("Hessian spectra at the two minima:")
    for name, point in (("sharp (1,0)", SHARP), ("flat (-1,0)", FLAT)):
        w = np.sort(np.linalg.eigvalsh(two_minima_hessian(point)))[::-1]
        print(f"  {name}: eigenvalues {w.round(4)}, trace {w.sum():.4f}")
    print()

    runs = [
        ("gd (eta=0.2)", OptimizerConfig(eta=0.2, max_iterations=100)),
        ("zest-bc", zo_config("bias_corrected", 1.0, args.seed)),
        ("zest-naive", zo_config("naive", 1.0, args.seed)),
        ("vanilla", zo_config("vanilla", 0.0, args.seed)),
    ]
    print(f"{'optimizer':14s} {'final x':>22s} {'loss':>10s} "
          f"{'to sharp':>9s} {'to flat':>9s}")
    for label, cfg in runs:
        x, records = run(obj, x0.copy(), cfg)
        print(f"{label:14s} [{x[0]:9.4f}, {x[1]:8.4f}] {records[-1].loss:10.5f} "
              f"{np.linalg.norm(x - SHARP):9.3f} {np.linalg.norm(x - FLAT):9.3f}")

    print()
    print("The tilted runs end on the flat side; gradient descent ends at the")
    print("sharp minimum to machine precision.  Try other seeds to see how")
    print("much the stochastic runs wander within the flat basin.")


if __name__ == "__main__":
    main()
