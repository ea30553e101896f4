"""Variance-budgeted structural-equation simulation and sensitivity toolkit
for bias amplification in OLS causal effect estimation.

The package is organized in layers:

- :mod:`ampsim.linalg` -- OLS fits, annihilator application, partitioned
  regression, R².
- :mod:`ampsim.sem` -- linear structural-equation DAGs with variance
  budgets, closed-form population algebra, feasibility bounds and edge
  interventions.
- :mod:`ampsim.simulate` -- reproducible dataset draws in topological order.
- :mod:`ampsim.estimators` -- feasible/infeasible estimators, amplification
  factors, closed-form bias, partial-regression plot data.
- :mod:`ampsim.experiment` -- Monte Carlo replication and intervention
  harness with common random numbers.
- :mod:`ampsim.realdata` -- the latent-probit pipeline that injects
  controlled unmeasured confounding into RCT-style data.
- :mod:`ampsim.cli` -- command-line front end.
"""

from . import errors
from .estimators import (
    AmplificationEstimate,
    EstimatorSpec,
    amplification_factor,
    closed_form_bias,
    estimate,
    nonlinear_component_estimates,
    partial_regression_points,
    required_confounding_to_nullify,
)
from .experiment import (
    EstimatorReport,
    InterventionReport,
    compare_abs_bias,
    intervention_experiment,
    run_replications,
)
from .linalg import OlsFit, annihilate, fwl_coefficient, ols_fit, r_squared_of
from .realdata import (
    LatentInterventionSpec,
    ProbitPipelineConfig,
    RCTDataset,
    binary_cov_closed_form,
    bootstrap_pipeline,
    conditional_confounder_draw,
    generate_surrogate_rct,
    modify_covariates,
    modify_outcome,
    recover_latent,
)
from .sem import (
    EdgeSpec,
    FeasibleInterval,
    InterventionSpec,
    LinearSEM,
    NodeSpec,
    feasible_interval,
    implied_variance,
    intervene,
    parse_spec,
    population_covariance,
    population_regression,
    solve_error_variances,
)
from .simulate import Dataset, SeedPolicy, draw_dataset, latent_threshold_intercept

__version__ = "0.1.0"

__all__ = [
    "AmplificationEstimate",
    "Dataset",
    "EdgeSpec",
    "EstimatorReport",
    "EstimatorSpec",
    "FeasibleInterval",
    "InterventionReport",
    "InterventionSpec",
    "LatentInterventionSpec",
    "LinearSEM",
    "NodeSpec",
    "OlsFit",
    "ProbitPipelineConfig",
    "RCTDataset",
    "SeedPolicy",
    "amplification_factor",
    "annihilate",
    "binary_cov_closed_form",
    "bootstrap_pipeline",
    "closed_form_bias",
    "compare_abs_bias",
    "conditional_confounder_draw",
    "draw_dataset",
    "errors",
    "estimate",
    "feasible_interval",
    "fwl_coefficient",
    "generate_surrogate_rct",
    "implied_variance",
    "intervene",
    "intervention_experiment",
    "latent_threshold_intercept",
    "modify_covariates",
    "modify_outcome",
    "nonlinear_component_estimates",
    "ols_fit",
    "parse_spec",
    "partial_regression_points",
    "population_covariance",
    "population_regression",
    "r_squared_of",
    "recover_latent",
    "required_confounding_to_nullify",
    "run_replications",
    "solve_error_variances",
]
