"""Treatment-effect estimators on datasets, and their closed-form limits.

The estimator menu is the usual one for a selection-on-observables
analysis: ``naive`` (treatment and intercept only), ``adjusted``
(additionally conditioning on observed controls), ``oracle`` (conditioning
on the full sufficient set including unmeasured nodes -- only meaningful
inside simulations) and ``custom``.

Everything an applied analysis can identify from observables lives here
too: the amplification factor of a control set, the sensitivity threshold
that would explain a treatment effect away, the component ratios needed
when treatment or outcome transforms are nonlinear, and partial-regression
plot data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTreatment, InfeasibleEstimator
from .linalg import annihilate, fwl_coefficient
from .sem import LinearSEM, population_regression
from .simulate import Dataset


@dataclass(frozen=True)
class EstimatorSpec:
    """Which regressors accompany the treatment (never listing the
    treatment itself; an intercept is always implied)."""

    label: str
    regressors: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "regressors", tuple(self.regressors))
        if self.label not in ("naive", "adjusted", "oracle", "custom"):
            raise ValueError(f"unknown estimator label {self.label!r}")
        if self.label == "naive" and self.regressors:
            raise ValueError("the naive estimator takes no regressors")

    @staticmethod
    def naive() -> "EstimatorSpec":
        return EstimatorSpec(label="naive")

    @staticmethod
    def adjusted(regressors) -> "EstimatorSpec":
        return EstimatorSpec(label="adjusted", regressors=tuple(regressors))

    @staticmethod
    def oracle(regressors) -> "EstimatorSpec":
        return EstimatorSpec(label="oracle", regressors=tuple(regressors))


@dataclass(frozen=True)
class AmplificationEstimate:
    """Identifiable-from-observables description of how strongly a control
    set shrinks residual treatment variation.

    ``factor`` = marginal_var / ssr_over_n = 1 / (1 - r_squared) >= 1.
    """

    ssr_over_n: float
    marginal_var: float
    r_squared: float
    factor: float


def _design_for(dataset: Dataset, regressors: tuple[str, ...]) -> np.ndarray:
    cols = [np.ones(dataset.n)]
    for name in regressors:
        cols.append(dataset.column(name))
    return np.column_stack(cols)


def estimate(
    dataset: Dataset,
    treatment: str,
    outcome: str,
    spec: EstimatorSpec,
    *,
    feasible_only: bool = False,
    unobserved: frozenset[str] | set[str] = frozenset(),
) -> float:
    """Coefficient on the treatment from OLS of outcome on
    [intercept | spec.regressors | treatment].

    With ``feasible_only`` the spec may not reference columns flagged
    unobserved (oracle specs are exempt only when feasible_only is False).
    """
    if feasible_only:
        bad = set(spec.regressors) & set(unobserved)
        if bad:
            raise InfeasibleEstimator(
                f"estimator {spec.label!r} references unobserved columns {sorted(bad)}"
            )
    a = dataset.column(treatment)
    y = dataset.column(outcome)
    z = _design_for(dataset, spec.regressors)
    return fwl_coefficient(a, z, y)


def amplification_factor(dataset: Dataset, treatment: str, controls) -> AmplificationEstimate:
    """Regress the treatment on [intercept | controls]; report the mean
    squared residual, the marginal (centered) variance, their ratio and the
    implied R². All quantities are identifiable from observables."""
    controls = tuple(controls)
    a = dataset.column(treatment)
    n = dataset.n
    z = _design_for(dataset, controls)
    resid = annihilate(z, a)
    ssr_over_n = float(resid @ resid) / n
    centered = a - a.mean()
    marginal_var = float(centered @ centered) / n
    if ssr_over_n <= 0.0 or marginal_var <= 0.0:
        raise DegenerateTreatment("controls leave no residual treatment variation")
    factor = marginal_var / ssr_over_n
    return AmplificationEstimate(
        ssr_over_n=ssr_over_n,
        marginal_var=marginal_var,
        r_squared=1.0 - ssr_over_n / marginal_var,
        factor=factor,
    )


def closed_form_bias(sem: LinearSEM, treatment: str, outcome: str, spec: EstimatorSpec) -> float:
    """Population bias of the estimator on a fully linear SEM: the
    probability-limit coefficient on the treatment minus the direct edge
    coefficient treatment -> outcome (0 if that edge is absent)."""
    regressors = [treatment] + list(spec.regressors)
    coef = population_regression(sem, outcome, regressors)
    direct = sem.edge_coefficient(treatment, outcome, default=0.0)
    return float(coef[0]) - direct


def nonlinear_component_estimates(
    dataset: Dataset,
    treatment: str,
    controls,
    f1_column: str,
    f3_column: str,
) -> tuple[float, float, float]:
    """Component ratios for additive nonlinear treatment/control transforms.

    Runs the three regressions (treatment on Z, f1 on Z, f3 on Z) over
    Z = [intercept | controls], stores the residuals and combines them:

    - ratio_f1 = <resid(A), resid(f1)> / <resid(A), resid(A)>
    - ratio_f3 = <resid(A), resid(f3)> / <resid(A), resid(A)>
    - ssr_over_n = <resid(A), resid(A)> / n

    The transforms arrive as precomputed data columns; this keeps the
    contract purely numeric.
    """
    controls = tuple(controls)
    z = _design_for(dataset, controls)
    ra = annihilate(z, dataset.column(treatment))
    rf1 = annihilate(z, dataset.column(f1_column))
    rf3 = annihilate(z, dataset.column(f3_column))
    denom = float(ra @ ra)
    if denom <= 0.0:
        raise DegenerateTreatment("controls leave no residual treatment variation")
    return float(ra @ rf1) / denom, float(ra @ rf3) / denom, denom / dataset.n


def required_confounding_to_nullify(estimate_value: float, amp: AmplificationEstimate) -> float:
    """The product (outcome coefficient of the confounder) x Cov(A, U) that
    would drive the adjusted probability limit to zero: estimate times the
    mean squared residual of the treatment-on-controls regression."""
    return float(estimate_value) * amp.ssr_over_n


def partial_regression_points(
    dataset: Dataset,
    treatment: str,
    outcome: str,
    controls,
) -> np.ndarray:
    """(x, y) pairs of treatment and outcome residuals after projecting out
    [intercept | controls]; the no-intercept OLS slope through them equals
    :func:`estimate` with the same controls exactly."""
    controls = tuple(controls)
    z = _design_for(dataset, controls)
    x = annihilate(z, dataset.column(treatment))
    y = annihilate(z, dataset.column(outcome))
    return np.column_stack([x, y])


def partial_regression_csv(points: np.ndarray) -> str:
    """Plot-ready CSV (x,y header) for partial-regression panels."""
    lines = ["x,y"]
    for x, y in points:
        lines.append(f"{float(x)!r},{float(y)!r}")
    return "\n".join(lines) + "\n"
