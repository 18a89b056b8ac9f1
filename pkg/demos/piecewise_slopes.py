"""Early descent rates on the piecewise-linear mesh surface.

The mesh interpolant is the pointwise minimum of 288 planes fitted to a
bowl-shaped height field on a 12x12 grid over [-2, 2]^2.  A global min of
planes is unbounded below once the iterates leave the grid, so what is
comparable across optimizers is the EARLY per-iteration descent rate, not a
final loss.  This script runs the tilted and untilted estimators for a few
iterations from the same corner start and prints the mean loss drop per step
over the first ten steps.

Run:  python demos/piecewise_slopes.py
"""

import numpy as np

from tiltzo.core import PerturbationSpec
from tiltzo.estimators import TiltConfig
from tiltzo.objectives import build_piecewise_linear
from tiltzo.optimizer import OptimizerConfig, run

EARLY = 10


def main():
    obj = build_piecewise_linear()
    x0 = np.array([-1.8, 1.6])
    print(f"mesh: {obj.n_planes} planes on a 12x12 grid, start {x0}, "
          f"f(start) = {obj.evaluate(x0):.4f}")
    print()

    print(f"{'estimator':12s} {'loss@10':>10s} {'drop/step':>11s} "
          f"{'x@40':>22s}")
    for label, est, t in (("zest-naive", "naive", 1.0),
                          ("zest-bc", "bias_corrected", 1.0),
                          ("vanilla", "vanilla", 0.0)):
        tilt = TiltConfig(t, 500, est, PerturbationSpec("sphere", 0.5, 0))
        cfg = OptimizerConfig(eta=0.01, max_iterations=40, tilt=tilt)
        x, records = run(obj, x0.copy(), cfg)
        early = [r.loss for r in records[:EARLY + 1]]
        slope = (early[-1] - early[0]) / EARLY
        print(f"{label:12s} {early[-1]:10.4f} {slope:11.5f} "
              f"[{x[0]:9.4f}, {x[1]:8.4f}]")

    print()
    print("All three move along the same downhill direction at near-constant")
    print("rates.  The tilted steps are smaller at equal eta: their softmax")
    print("weights sum to one and lean on the uphill queries, which damps the")
    print("step, while the untilted average uses the raw loss differences.")
    print("Longer runs keep sliding on every estimator because the")
    print("min-of-planes surface has no floor outside the grid.")


if __name__ == "__main__":
    main()
