"""tiltzo — zeroth-order optimization with exponentially tilted weighting.

The tilted objective F_t(x) = (1/t) log E[e^{t f(x + eps)}] interpolates
between the average loss (t -> 0) and the worst loss in the perturbation
neighborhood (t -> infinity).  This package estimates its gradient from
forward/backward function evaluations alone, runs the memory-frugal
seed-replay optimizer built on that estimator, and provides the analytic
sharpness toolkit (closed-form R_t, sensitivities, the R_inf program) with
Monte-Carlo cross-checks on exactly solvable problems.
"""

__version__ = "0.1.0"

from .core import (PerturbationSpec, axpy_update, perturbation_norm_moments,
                   sample_perturbation, sample_perturbation_batch)
from .errors import (AdmissibilityError, ConfigurationError, DimensionError,
                     EvaluationError, NumericError, TiltzoError)
from .objectives import (ConstantObjective, Objective, PiecewiseLinearObjective,
                         QuadraticObjective, SphericalQuadratic,
                         SyntheticLogisticObjective, TwoMinimaObjective,
                         build_piecewise_linear, finite_difference_gradient,
                         finite_difference_hessian, make_objective,
                         two_minima_hessian)
from .estimators import (TiltConfig, estimate_gradient, estimate_objective_value,
                         tilted_normalize, update_coefficients,
                         weights_bias_corrected, weights_naive)
from .optimizer import (OptimizerConfig, TrajectoryRecord, gd_step, loss_plateau,
                        run, tilted_step, trajectory_to_csv)
from .sharpness import (KktSolution, SpectralModel, admissible_t_bound,
                        ball_rt_limit_zero, gaussian_rt, gaussian_sensitivity,
                        monte_carlo_rt, monte_carlo_rt_stats,
                        neighborhood_loss_probe, r_infinity,
                        r_infinity_sensitivity, sharpness_report, top_eigenvalues)
from .bench import (BenchReport, bias_rate_experiment, concentration_experiment,
                    sphere_ball_gap_experiment, tilted_gradient_oracle,
                    write_report)

__all__ = [name for name in dir() if not name.startswith("_")]
