"""Latent-probit pipeline: inject controlled unmeasured confounding into
RCT-style data with a binary treatment.

The treatment column is kept as observed data and modeled as the sign of a
latent normal index. Each bootstrap replicate:

1. resamples rows jointly (outcome, treatment, covariates stay aligned),
2. recovers a latent index draw consistent with each binary treatment value
   (inverse-CDF of the appropriate truncated normal),
3. draws the unmeasured confounder and the amplifier components from their
   conditional multivariate normal given the latent index and covariates,
4. builds modified covariates (a rescaled carry of the real covariates plus
   the amplifier components, unit variance by construction) and a modified
   outcome that satisfies the target structural equation,
5. compares naive / adjusted / oracle estimators against the known truth.

Interventions on a latent covariate-to-treatment weight support the same
two modes as SEM edges: fixed (rescale the latent error so the index keeps
unit variance) and floating (let the index variance drift).
"""

from __future__ import annotations

import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import (
    DimensionMismatch,
    InfeasibleConfig,
    NotPSD,
    OutOfRange,
    ParseError,
    SingularBlock,
)
from .experiment import EstimatorReport, InterventionReport, _build_reports, compare_abs_bias
from .io_utils import atomic_write_text, fmt_float
from .linalg import fwl_coefficient, ols_fit
from .simulate import SeedPolicy, interior_uniform, latent_threshold_intercept


@dataclass(frozen=True)
class RCTDataset:
    """Outcome, binary treatment and standardized covariates."""

    y: np.ndarray
    a: np.ndarray
    x: np.ndarray
    n: int

    @staticmethod
    def from_arrays(y, a, x) -> "RCTDataset":
        y = np.asarray(y, dtype=float).reshape(-1)
        a = np.asarray(a, dtype=float).reshape(-1)
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        n = y.shape[0]
        if a.shape[0] != n or x.shape[0] != n:
            raise DimensionMismatch("y, a and x must share their row count")
        if not np.all((a == 0.0) | (a == 1.0)):
            raise OutOfRange("treatment column must be 0/1")
        return RCTDataset(y=y, a=a, x=standardize_columns(x), n=n)

    def treated_fraction(self) -> float:
        return float(self.a.mean())

    def write_csv(self, fileobj: io.TextIOBase):
        k = self.x.shape[1]
        names = ["y", "a"] + [f"x{j + 1}" for j in range(k)]
        fileobj.write(",".join(names) + "\n")
        for i in range(self.n):
            row = [fmt_float(self.y[i]), fmt_float(self.a[i])]
            row += [fmt_float(self.x[i, j]) for j in range(k)]
            fileobj.write(",".join(row) + "\n")

    def to_csv(self, path: str):
        buf = io.StringIO()
        self.write_csv(buf)
        atomic_write_text(path, buf.getvalue())

    @staticmethod
    def read_csv(fileobj: io.TextIOBase) -> "RCTDataset":
        header = fileobj.readline().strip().split(",")
        if header[:2] != ["y", "a"]:
            raise ParseError("RCT CSV must have columns y, a, x1..xk")
        rows = [line.strip().split(",") for line in fileobj if line.strip()]
        data = np.array([[float(v) for v in row] for row in rows])
        if data.shape[1] != len(header) or data.shape[1] < 3:
            raise ParseError("RCT CSV rows do not match the y, a, x1..xk header")
        return RCTDataset.from_arrays(data[:, 0], data[:, 1], data[:, 2:])


def standardize_columns(x: np.ndarray) -> np.ndarray:
    """Mean 0, variance 1 (population normalization) per column."""
    x = np.asarray(x, dtype=float)
    centered = x - x.mean(axis=0)
    sd = centered.std(axis=0)
    if np.any(sd == 0.0):
        raise OutOfRange("a covariate column is constant; cannot standardize")
    return centered / sd


@dataclass(frozen=True)
class ProbitPipelineConfig:
    """Parameters of the confounding-injection pipeline.

    ``gamma_u`` and ``gamma_x_tilde`` are the latent-index weights of the
    unmeasured confounder and the modified covariates; ``beta_u`` and
    ``beta_x_tilde`` their outcome weights; ``covariate_carry_share`` is the
    variance share of the rescaled real covariate inside each modified
    covariate (the amplifier component carries the rest).
    """

    gamma_u: float
    gamma_x_tilde: tuple[float, ...]
    beta_u: float
    beta_x_tilde: tuple[float, ...]
    beta_a_truth: float
    covariate_carry_share: float
    reps: int
    base_seed: int
    p_a_override: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "gamma_x_tilde", tuple(float(g) for g in self.gamma_x_tilde))
        object.__setattr__(self, "beta_x_tilde", tuple(float(b) for b in self.beta_x_tilde))
        if len(self.gamma_x_tilde) != len(self.beta_x_tilde):
            raise InfeasibleConfig("gamma_x_tilde and beta_x_tilde must have equal length")
        if not 0.0 < self.covariate_carry_share < 1.0:
            raise InfeasibleConfig("covariate_carry_share must be in (0, 1)")
        load = self.gamma_u**2 + sum(g * g for g in self.gamma_x_tilde)
        if load >= 1.0:
            raise InfeasibleConfig(
                f"gamma_u^2 + sum(gamma_x_tilde^2) = {load:.6g} >= 1: "
                "unit latent variance is infeasible"
            )
        if self.reps < 1:
            raise InfeasibleConfig("reps must be >= 1")
        if self.p_a_override is not None and not 0.0 < self.p_a_override < 1.0:
            raise InfeasibleConfig("p_a_override must be in (0, 1)")

    @property
    def k(self) -> int:
        return len(self.gamma_x_tilde)

    @property
    def amplifier_variance(self) -> float:
        return 1.0 - self.covariate_carry_share

    @staticmethod
    def from_json(text: str) -> "ProbitPipelineConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid config JSON: {exc.msg}") from exc
        required = {
            "gamma_u", "gamma_x_tilde", "beta_u", "beta_x_tilde",
            "beta_a_truth", "covariate_carry_share", "reps", "base_seed",
        }
        allowed = required | {"p_a_override"}
        if not isinstance(doc, dict) or not required <= set(doc):
            missing = sorted(required - set(doc or {}))
            raise ParseError(f"config is missing keys {missing}")
        extra = set(doc) - allowed
        if extra:
            raise ParseError(f"config has unknown keys {sorted(extra)}")
        return ProbitPipelineConfig(
            gamma_u=float(doc["gamma_u"]),
            gamma_x_tilde=tuple(doc["gamma_x_tilde"]),
            beta_u=float(doc["beta_u"]),
            beta_x_tilde=tuple(doc["beta_x_tilde"]),
            beta_a_truth=float(doc["beta_a_truth"]),
            covariate_carry_share=float(doc["covariate_carry_share"]),
            reps=int(doc["reps"]),
            base_seed=int(doc["base_seed"]),
            p_a_override=(None if doc.get("p_a_override") is None else float(doc["p_a_override"])),
        )


@dataclass(frozen=True)
class LatentInterventionSpec:
    """Change one latent covariate-to-treatment weight."""

    covariate_index: int
    new_gamma: float
    modes: tuple[str, ...] = ("fixed-variance", "floating-variance")

    def __post_init__(self):
        for m in self.modes:
            if m not in ("fixed-variance", "floating-variance"):
                raise ParseError(f"unknown intervention mode {m!r}")


@dataclass(frozen=True)
class PipelineResult:
    reports: tuple[EstimatorReport, ...]
    arms: tuple[InterventionReport, ...] | None = None


# --------------------------------------------------------------------------
# surrogate RCT
# --------------------------------------------------------------------------

def generate_surrogate_rct(n: int, p_a: float, itt_effect: float,
                           covariate_outcome_coefs, seed: int) -> RCTDataset:
    """Stand-in for an undistributed trial: independent coin(p_a)
    treatment, standard-normal covariates independent of treatment, and an
    outcome with unit population variance built from the ITT effect plus
    covariate effects plus noise.

    The bootstrap pipeline treats the sample's covariate-conditional
    treatment coefficient as ground truth, so the outcome is recentered to
    make that in-sample coefficient equal ``itt_effect`` exactly.
    """
    if not 0.0 < p_a < 1.0:
        raise OutOfRange(f"p_a must be in (0, 1), got {p_a}")
    if n < 10:
        raise OutOfRange("surrogate RCT needs n >= 10")
    coefs = np.asarray(covariate_outcome_coefs, dtype=float).reshape(-1)
    rng = SeedPolicy(seed, 0).generator()
    a = (rng.random(n) < p_a).astype(np.float64)
    if a.sum() in (0, n):
        raise OutOfRange("degenerate treatment draw; choose a different seed or larger n")
    x = rng.standard_normal((n, coefs.shape[0]))
    # Build randomization balance in exactly: a fresh draw carries
    # O(1/sqrt(n)) covariate-treatment associations, and the outcome
    # modification downstream would inherit them as sample-specific bias.
    a_centered = a - a.mean()
    x = x - np.outer(a_centered, (a_centered @ x) / (a_centered @ a_centered))
    x = standardize_columns(x)
    p_hat = float(a.mean())
    noise_var = 1.0 - itt_effect**2 * p_hat * (1.0 - p_hat) - float(coefs @ coefs)
    if noise_var <= 0.0:
        raise OutOfRange("itt_effect and covariate coefficients exceed the unit outcome variance")
    y = itt_effect * a + x @ coefs + rng.standard_normal(n) * np.sqrt(noise_var)
    design = np.column_stack([np.ones(n), a, x])
    realized = ols_fit(design, y).coefficients[1]
    y = y + (itt_effect - realized) * a
    return RCTDataset(y=y, a=a, x=x, n=n)


# --------------------------------------------------------------------------
# latent recovery
# --------------------------------------------------------------------------

def _recover_latent_scaled(a: np.ndarray, alpha: float, sigma: float,
                           u01: np.ndarray) -> np.ndarray:
    """Inverse-CDF draws of a N(alpha, sigma^2) index truncated at zero on
    the side dictated by each binary treatment value."""
    p_pos = float(ndtr(alpha / sigma))  # P(index > 0) under this scale
    if not 0.0 < p_pos < 1.0:
        raise OutOfRange("truncation probability collapsed to 0 or 1")
    treated = a == 1.0
    args = np.where(treated, p_pos * u01 + (1.0 - p_pos), (1.0 - p_pos) * u01)
    lat = sigma * ndtri(args) + alpha
    # Guard the one-in-2^53 rounding case that would land exactly on the
    # boundary; sign consistency must hold for every draw.
    tiny = np.finfo(float).tiny
    lat = np.where(treated, np.maximum(lat, tiny), np.minimum(lat, -tiny))
    return lat


def recover_latent(a, p_a: float, seed) -> np.ndarray:
    """Draw latent index values consistent with the observed binary
    treatment: treated rows from the unit-variance normal truncated below
    at 0 (shifted so P(index > 0) = p_a), untreated rows from its
    complement. Every draw satisfies a == 1{latent > 0}."""
    a = np.asarray(a, dtype=float).reshape(-1)
    if not np.all((a == 0.0) | (a == 1.0)):
        raise OutOfRange("treatment must be 0/1")
    alpha = latent_threshold_intercept(p_a)
    rng = seed.generator() if isinstance(seed, SeedPolicy) else SeedPolicy(int(seed), 0).generator()
    u01 = interior_uniform(rng, a.shape[0])
    return _recover_latent_scaled(a, alpha, 1.0, u01)


# --------------------------------------------------------------------------
# conditional confounder draws
# --------------------------------------------------------------------------

def _conditional_blocks(config: ProbitPipelineConfig, latent_variance: float):
    """Joint-normal blocks of (U, amplifiers) against (latent index, X) and
    the implied conditional moments.

    The cross block has the latent-index column (gamma_u * var_u,
    gamma_i * var_amplifier) and zeros against X; the conditioning block is
    diagonal. Returns (coef, sqrt_cov): conditional mean is
    coef @ [index - alpha, x - 0] per row, conditional covariance is
    sqrt_cov @ sqrt_cov.T.
    """
    if latent_variance <= 0.0:
        raise SingularBlock(f"latent variance must be positive, got {latent_variance}")
    k = config.k
    s_b = config.amplifier_variance
    sigma_11 = np.diag([1.0] + [s_b] * k)
    sigma_12 = np.zeros((1 + k, 1 + k))
    sigma_12[0, 0] = config.gamma_u * 1.0
    for i, g in enumerate(config.gamma_x_tilde):
        sigma_12[1 + i, 0] = g * s_b
    sigma_22 = np.diag([latent_variance] + [1.0] * k)
    det = np.prod(np.diag(sigma_22))
    if det <= 0.0 or not np.isfinite(det):
        raise SingularBlock("conditioning block is singular")
    coef = sigma_12 @ np.linalg.inv(sigma_22)
    cond_cov = sigma_11 - coef @ sigma_12.T
    eigvals, eigvecs = np.linalg.eigh(cond_cov)
    if eigvals.min() < -1e-9 * max(eigvals.max(), 1.0):
        raise NotPSD(f"conditional covariance has eigenvalue {eigvals.min():.3e}")
    sqrt_cov = eigvecs @ np.diag(np.sqrt(np.clip(eigvals, 0.0, None)))
    return coef, sqrt_cov


def _draw_confounders(a_star: np.ndarray, x: np.ndarray, coef: np.ndarray,
                      sqrt_cov: np.ndarray, alpha: float,
                      rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n = a_star.shape[0]
    k1 = coef.shape[0]
    given = np.column_stack([a_star - alpha, x])
    mean = given @ coef.T
    z = rng.standard_normal((n, k1))
    draws = mean + z @ sqrt_cov.T
    return draws[:, 0], draws[:, 1:]


def conditional_confounder_draw(a_star, x, config: ProbitPipelineConfig, seed,
                                *, latent_variance: float = 1.0,
                                p_a: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-row draw of (U, amplifier components) from the conditional
    multivariate normal given the latent index and covariates.

    ``p_a`` fixes the latent intercept; defaults to ``config.p_a_override``
    or 0.5.
    """
    a_star = np.asarray(a_star, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape != (a_star.shape[0], config.k):
        raise DimensionMismatch(
            f"x must be (n, {config.k}) aligned with a_star, got {x.shape}"
        )
    if p_a is None:
        p_a = config.p_a_override if config.p_a_override is not None else 0.5
    alpha = latent_threshold_intercept(p_a)
    coef, sqrt_cov = _conditional_blocks(config, latent_variance)
    rng = seed.generator() if isinstance(seed, SeedPolicy) else SeedPolicy(int(seed), 0).generator()
    return _draw_confounders(a_star, x, coef, sqrt_cov, alpha, rng)


# --------------------------------------------------------------------------
# closed-form covariances for a binary treatment
# --------------------------------------------------------------------------

def binary_cov_closed_form(config: ProbitPipelineConfig, latent_variance: float,
                           p_a: float) -> tuple[float, np.ndarray]:
    """Population Cov(A, U) and Cov(A, modified covariates) for the binary
    treatment, from the normal-index formula

        cov = weight * exp(-alpha^2 / (2 var)) / sqrt(2 pi var)

    with the intercept alpha calibrated at unit variance (the means of U
    and the modified covariates are zero, so no mean term appears).
    """
    if latent_variance <= 0.0:
        raise OutOfRange("latent variance must be positive")
    alpha = latent_threshold_intercept(p_a)
    factor = float(np.exp(-(alpha**2) / (2.0 * latent_variance))
                   / np.sqrt(2.0 * np.pi * latent_variance))
    cov_au = config.gamma_u * 1.0 * factor
    cov_ax = np.array([g * 1.0 * factor for g in config.gamma_x_tilde])
    return cov_au, cov_ax


# --------------------------------------------------------------------------
# covariate / outcome modification
# --------------------------------------------------------------------------

def modify_covariates(x: np.ndarray, bav: np.ndarray, carry_share: float) -> np.ndarray:
    """Unit-variance modified covariates: sqrt(carry_share) * x + bav,
    where the amplifier components carry variance 1 - carry_share."""
    if not 0.0 < carry_share < 1.0:
        raise OutOfRange("carry_share must be in (0, 1)")
    x = np.asarray(x, dtype=float)
    bav = np.asarray(bav, dtype=float)
    if x.shape != bav.shape:
        raise DimensionMismatch(f"x {x.shape} and bav {bav.shape} differ")
    return x * np.sqrt(carry_share) + bav


def modify_outcome(y, a, u, bav, x_tilde, original_beta_x,
                   config: ProbitPipelineConfig) -> np.ndarray:
    """Modified outcome satisfying the target structural equation exactly:

        y_tilde = alpha + a * beta_a_hat + u * beta_u
                  + x_tilde @ beta_x_tilde + residual

    built incrementally as y + u*beta_u + bav@beta_x
    + x_tilde@(beta_x_tilde - beta_x) minus the carry-scaled remainder of
    the original covariate effects (x recovered from x_tilde and bav).
    Without that last subtraction the remainder stays in the error term,
    correlates with the modified covariates, and leaks treatment-coefficient
    bias into every estimator -- including the infeasible one."""
    y = np.asarray(y, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    a = np.asarray(a, dtype=float).reshape(-1)
    bav = np.asarray(bav, dtype=float)
    x_tilde = np.asarray(x_tilde, dtype=float)
    beta_x = np.asarray(original_beta_x, dtype=float).reshape(-1)
    beta_xt = np.asarray(config.beta_x_tilde, dtype=float)
    n = y.shape[0]
    if not (u.shape[0] == n == a.shape[0] == bav.shape[0] == x_tilde.shape[0]):
        raise DimensionMismatch("all pipeline arrays must share their row count")
    if bav.shape[1] != beta_x.shape[0] or x_tilde.shape[1] != beta_xt.shape[0]:
        raise DimensionMismatch("covariate blocks and coefficient vectors disagree")
    root_carry = np.sqrt(config.covariate_carry_share)
    x = (x_tilde - bav) / root_carry
    remainder = (1.0 - root_carry) * (x @ beta_x)
    return y + u * config.beta_u + bav @ beta_x + x_tilde @ (beta_xt - beta_x) - remainder


# --------------------------------------------------------------------------
# bootstrap pipeline
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _ArmPrep:
    label: str
    value: float
    config: ProbitPipelineConfig
    latent_variance: float
    alpha: float
    sigma: float
    coef: np.ndarray
    sqrt_cov: np.ndarray


def _prepare_arm(label: str, value: float, config: ProbitPipelineConfig,
                 latent_variance: float, p_a: float) -> _ArmPrep:
    alpha = latent_threshold_intercept(p_a)
    coef, sqrt_cov = _conditional_blocks(config, latent_variance)
    return _ArmPrep(
        label=label,
        value=value,
        config=config,
        latent_variance=latent_variance,
        alpha=alpha,
        sigma=float(np.sqrt(latent_variance)),
        coef=coef,
        sqrt_cov=sqrt_cov,
    )


def _replicate_estimates(rct: RCTDataset, prep: _ArmPrep, beta_x: np.ndarray,
                         rep_index: int, base_seed: int) -> list[float]:
    cfg = prep.config
    rng = SeedPolicy(base_seed, rep_index).generator()
    n = rct.n
    idx = rng.integers(0, n, size=n)
    y_b, a_b, x_b = rct.y[idx], rct.a[idx], rct.x[idx]

    u01 = interior_uniform(rng, n)
    a_star = _recover_latent_scaled(a_b, prep.alpha, prep.sigma, u01)
    u, bav = _draw_confounders(a_star, x_b, prep.coef, prep.sqrt_cov, prep.alpha, rng)
    x_tilde = modify_covariates(x_b, bav, cfg.covariate_carry_share)
    y_tilde = modify_outcome(y_b, a_b, u, bav, x_tilde, beta_x, cfg)

    ones = np.ones(n)
    naive = fwl_coefficient(a_b, ones[:, None], y_tilde)
    adjusted = fwl_coefficient(a_b, np.column_stack([ones, x_tilde]), y_tilde)
    oracle = fwl_coefficient(a_b, np.column_stack([ones, x_tilde, u]), y_tilde)
    return [naive, adjusted, oracle]


def _run_arm(rct: RCTDataset, prep: _ArmPrep, beta_x: np.ndarray,
             reps: int, base_seed: int, truth: float, threads: int) -> list[EstimatorReport]:
    estimates = np.empty((reps, 3))

    def one(i: int):
        return _replicate_estimates(rct, prep, beta_x, i, base_seed)

    if threads <= 1:
        for i in range(reps):
            estimates[i, :] = one(i)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for i, row in enumerate(pool.map(one, range(reps))):
                estimates[i, :] = row
    return _build_reports(["naive", "adjusted", "oracle"], estimates, truth)


def original_covariate_coefficients(rct: RCTDataset) -> np.ndarray:
    """Outcome coefficients of the covariates in the original data
    (regression of y on intercept, treatment and covariates)."""
    design = np.column_stack([np.ones(rct.n), rct.a, rct.x])
    return ols_fit(design, rct.y).coefficients[2:]


def bootstrap_pipeline(rct: RCTDataset, config: ProbitPipelineConfig,
                       *, intervention: LatentInterventionSpec | None = None,
                       threads: int = 1) -> PipelineResult:
    """Run the full pipeline; optionally add intervention arms on one
    latent covariate weight.

    All arms (and the main run) share per-replicate seeds, so comparisons
    use common random numbers. The latent intercept is calibrated to the
    observed treated fraction unless ``config.p_a_override`` is set.
    """
    p_a = config.p_a_override if config.p_a_override is not None else rct.treated_fraction()
    if not 0.0 < p_a < 1.0:
        raise OutOfRange("treated fraction must be strictly between 0 and 1")
    beta_x = original_covariate_coefficients(rct)
    if beta_x.shape[0] != config.k:
        raise DimensionMismatch(
            f"config describes {config.k} covariates but the data has {beta_x.shape[0]}"
        )
    truth = config.beta_a_truth

    main = _prepare_arm("baseline", 0.0, config, 1.0, p_a)
    reports = _run_arm(rct, main, beta_x, config.reps, config.base_seed, truth, threads)
    if intervention is None:
        return PipelineResult(reports=tuple(reports), arms=None)

    j = intervention.covariate_index
    if not 0 <= j < config.k:
        raise OutOfRange(f"covariate index {j} out of range for k={config.k}")
    old = config.gamma_x_tilde[j]
    new_gammas = tuple(
        intervention.new_gamma if i == j else g for i, g in enumerate(config.gamma_x_tilde)
    )

    baseline_prep = replace(main, value=old)
    arms = [_arm_report(baseline_prep, reports, truth)]
    for mode in intervention.modes:
        arm_config = replace(config, gamma_x_tilde=new_gammas)
        if mode == "fixed-variance":
            # the latent error absorbs the shock; index variance stays 1
            prep = _prepare_arm("fixed", intervention.new_gamma, arm_config, 1.0, p_a)
        else:
            drifted = 1.0 + (intervention.new_gamma**2 - old**2)
            prep = _prepare_arm("floating", intervention.new_gamma, arm_config, drifted, p_a)
        arm_reports = _run_arm(rct, prep, beta_x, config.reps, config.base_seed, truth, threads)
        arms.append(_arm_report(prep, arm_reports, truth))

    return PipelineResult(reports=tuple(reports), arms=tuple(arms))


def _arm_report(prep: _ArmPrep, reports: list[EstimatorReport], truth: float) -> InterventionReport:
    labels = [r.label for r in reports]
    diff = compare_abs_bias(reports[labels.index("adjusted")], reports[labels.index("naive")], truth)
    return InterventionReport(arm=prep.label, value=prep.value,
                              reports=tuple(reports), abs_bias_diff=diff)
