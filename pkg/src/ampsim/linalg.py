"""Dense least-squares building blocks: OLS fits, residual-making
(annihilator) application, partitioned-regression coefficients and R².

Solvers go through a pivoted QR decomposition rather than the normal
equations because the amplification regime deliberately drives the residual
treatment variation toward zero, where an explicit inverse loses digits.
Annihilators are applied as "fit then subtract" -- the n-by-n projection
matrix is never materialized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    ConstantTreatment,
    DegenerateTreatment,
    DimensionMismatch,
    RankDeficient,
)

# Relative pivot tolerance for declaring a design rank deficient.
RANK_TOL = 1e-10
# Residual treatment variation below this fraction of the raw variation
# means the controls explain the treatment completely.
DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class OlsFit:
    """Result of a least-squares fit.

    Attributes
    ----------
    coefficients : ndarray
        One entry per design column.
    residuals : ndarray
        y minus fitted values, length n.
    ssr : float
        Sum of squared residuals.
    r_squared : float or None
        1 - SSR / centered total sum of squares. Only meaningful when the
        design spans an intercept; None when y has no variation.
    """

    coefficients: np.ndarray
    residuals: np.ndarray
    ssr: float
    r_squared: float | None


def _as_design(design) -> np.ndarray:
    x = np.asarray(design, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise DimensionMismatch(f"design must be 2-D, got ndim={x.ndim}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise DimensionMismatch(f"design must be at least 1x1, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DimensionMismatch("design contains non-finite entries")
    return x


def _as_vector(v, n: int | None = None, name: str = "y") -> np.ndarray:
    y = np.asarray(v, dtype=float).reshape(-1)
    if n is not None and y.shape[0] != n:
        raise DimensionMismatch(f"{name} has length {y.shape[0]}, expected {n}")
    if not np.all(np.isfinite(y)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    return y


def ols_fit(design, y) -> OlsFit:
    """Least-squares fit of ``y`` on the columns of ``design``.

    Parameters
    ----------
    design : (n, k) array_like
        Full-column-rank design matrix (include the intercept column
        yourself if you want one).
    y : (n,) array_like

    Returns
    -------
    OlsFit

    Raises
    ------
    RankDeficient
        If n < k or a QR pivot falls below ``RANK_TOL`` relative to the
        largest pivot.
    DimensionMismatch
        If shapes are incompatible or inputs are non-finite.
    """
    x = _as_design(design)
    n, k = x.shape
    yv = _as_vector(y, n)
    if n < k:
        raise RankDeficient(f"need at least as many rows as columns (n={n}, k={k})")

    q, r, perm = scipy.linalg.qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag[0] == 0.0 or np.any(diag < RANK_TOL * diag[0]):
        raise RankDeficient(
            f"design is numerically rank deficient (pivot ratio {diag.min() / max(diag[0], 1e-300):.3e})"
        )
    coef_perm = scipy.linalg.solve_triangular(r, q.T @ yv)
    coef = np.empty(k)
    coef[perm] = coef_perm
    residuals = yv - x @ coef
    ssr = float(residuals @ residuals)

    centered = yv - yv.mean()
    tss = float(centered @ centered)
    r_squared = None if tss == 0.0 else 1.0 - ssr / tss
    return OlsFit(coefficients=coef, residuals=residuals, ssr=ssr, r_squared=r_squared)


def annihilate(z, v) -> np.ndarray:
    """Residuals of ``v`` after regressing it on the columns of ``z``.

    Equivalent to applying the annihilator (residual-making) projection of
    ``z`` without ever forming it: idempotent, and exactly zero for any
    vector in the column span of ``z``.
    """
    zx = _as_design(z)
    vv = _as_vector(v, zx.shape[0], name="v")
    return ols_fit(zx, vv).residuals


def fwl_coefficient(a, z, y) -> float:
    """Coefficient on ``a`` from the joint regression of ``y`` on [a | z],
    computed by the partitioned two-step: residualize ``a`` on ``z``, then
    regress ``y`` on that residual.

    Raises
    ------
    DegenerateTreatment
        If the controls absorb essentially all variation in ``a``.
    """
    zx = _as_design(z)
    av = _as_vector(a, zx.shape[0], name="a")
    yv = _as_vector(y, zx.shape[0], name="y")
    ra = annihilate(zx, av)
    denom = float(ra @ ra)
    scale = float(av @ av)
    if denom <= DEGENERATE_TOL * scale:
        raise DegenerateTreatment(
            f"controls explain the treatment (residual SS {denom:.3e} vs raw SS {scale:.3e})"
        )
    # ra' M_z y == ra' y because the annihilator is symmetric idempotent.
    return float(ra @ yv) / denom


def r_squared_of(a, z) -> float:
    """Share of the centered variation in ``a`` explained by ``z``.

    ``z`` must span an intercept (a constant column, possibly indirectly);
    the result is then guaranteed to lie in [0, 1].
    """
    zx = _as_design(z)
    av = _as_vector(a, zx.shape[0], name="a")
    if not _spans_intercept(zx):
        raise DimensionMismatch("controls must span an intercept column")
    centered = av - av.mean()
    total = float(centered @ centered)
    if total == 0.0:
        raise ConstantTreatment("treatment has zero variation around its mean")
    resid = annihilate(zx, av)
    value = 1.0 - float(resid @ resid) / total
    # Clamp the inevitable last-ulp spill outside [0, 1].
    return min(1.0, max(0.0, value))


def _spans_intercept(z: np.ndarray) -> bool:
    ones = np.ones(z.shape[0])
    resid = annihilate(z, ones)
    return float(resid @ resid) <= 1e-16 * z.shape[0]
