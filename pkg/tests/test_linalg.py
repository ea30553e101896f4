import numpy as np
import pytest
from numpy.testing import assert_allclose

from ampsim.errors import (
    ConstantTreatment,
    DegenerateTreatment,
    DimensionMismatch,
    RankDeficient,
)
from ampsim.linalg import annihilate, fwl_coefficient, ols_fit, r_squared_of


def test_two_points_exact_line():
    fit = ols_fit([[1.0, 0.0], [1.0, 1.0]], [1.0, 3.0])
    assert_allclose(fit.coefficients, [1.0, 2.0], atol=1e-12)
    assert_allclose(fit.residuals, [0.0, 0.0], atol=1e-12)
    assert fit.ssr == pytest.approx(0.0, abs=1e-24)


def test_intercept_only_fit_is_the_mean():
    fit = ols_fit(np.ones((3, 1)), [2.0, 4.0, 6.0])
    assert_allclose(fit.coefficients, [4.0], atol=1e-12)
    assert_allclose(fit.residuals, [-2.0, 0.0, 2.0], atol=1e-12)
    assert fit.ssr == pytest.approx(8.0, rel=1e-12)


def test_simple_regression_against_hand_solved_normal_equations():
    # Solved by hand from the 2x2 normal equations:
    # slope = (3*10 - 3*7) / (3*5 - 9) = 1.5, intercept = (7 - 1.5*3)/3 = 5/6.
    x = np.array([0.0, 1.0, 2.0])
    design = np.column_stack([np.ones(3), x])
    fit = ols_fit(design, [1.0, 2.0, 4.0])
    assert_allclose(fit.coefficients, [5.0 / 6.0, 1.5], rtol=1e-12)
    assert fit.ssr == pytest.approx(1.0 / 6.0, rel=1e-12)


def test_residuals_orthogonal_to_design():
    rng = np.random.default_rng(11)
    design = np.column_stack([np.ones(80), rng.standard_normal((80, 3))])
    y = rng.standard_normal(80)
    fit = ols_fit(design, y)
    rnorm = np.linalg.norm(fit.residuals)
    for j in range(design.shape[1]):
        col = design[:, j]
        assert abs(col @ fit.residuals) <= 1e-8 * np.linalg.norm(col) * max(rnorm, 1.0)
    assert fit.ssr == pytest.approx(fit.residuals @ fit.residuals, rel=1e-12)


def test_rank_deficient_raises():
    x = np.column_stack([np.ones(10), np.arange(10.0), 2.0 * np.arange(10.0)])
    with pytest.raises(RankDeficient):
        ols_fit(x, np.arange(10.0))


def test_more_columns_than_rows_raises():
    with pytest.raises(RankDeficient):
        ols_fit(np.random.default_rng(0).standard_normal((3, 5)), np.zeros(3))


def test_shape_mismatch_raises():
    with pytest.raises(DimensionMismatch):
        ols_fit(np.ones((4, 1)), np.zeros(5))
    with pytest.raises(DimensionMismatch):
        ols_fit(np.array([[1.0, np.nan]]), np.zeros(1))


def test_annihilate_centers_on_intercept():
    out = annihilate(np.ones((3, 1)), [1.0, 2.0, 3.0])
    assert_allclose(out, [-1.0, 0.0, 1.0], atol=1e-12)


def test_annihilate_own_span_is_zero():
    rng = np.random.default_rng(5)
    z = np.column_stack([np.ones(20), rng.standard_normal(20)])
    assert np.linalg.norm(annihilate(z, z[:, 1])) < 1e-10


def test_annihilate_matches_regression_residuals():
    x = np.array([0.0, 1.0, 2.0])
    z = np.column_stack([np.ones(3), x])
    out = annihilate(z, [1.0, 2.0, 4.0])
    assert_allclose(out, [1.0 / 6.0, -1.0 / 3.0, 1.0 / 6.0], rtol=1e-10, atol=1e-12)


def test_annihilate_idempotent_on_random_instances():
    rng = np.random.default_rng(17)
    for _ in range(50):
        n = rng.integers(10, 60)
        k = rng.integers(1, 4)
        z = np.column_stack([np.ones(n), rng.standard_normal((n, k))])
        v = rng.standard_normal(n)
        once = annihilate(z, v)
        twice = annihilate(z, once)
        assert np.linalg.norm(twice - once) <= 1e-10 * max(np.linalg.norm(once), 1.0)


def test_fwl_intercept_only_equals_simple_slope():
    rng = np.random.default_rng(3)
    a = rng.standard_normal(60)
    y = 1.5 * a + rng.standard_normal(60)
    slope = fwl_coefficient(a, np.ones((60, 1)), y)
    ac = a - a.mean()
    yc = y - y.mean()
    assert slope == pytest.approx((ac @ yc) / (ac @ ac), rel=1e-12)


def test_fwl_orthogonal_controls_are_a_noop():
    n = 128
    t = np.arange(n)
    a = np.cos(2 * np.pi * t / n)  # orthogonal to the intercept and to z
    z = np.column_stack([np.ones(n), np.sin(2 * np.pi * t / n)])
    y = 0.7 * a + np.sin(2 * np.pi * t / n)
    assert fwl_coefficient(a, z, y) == pytest.approx((a @ y) / (a @ a), rel=1e-9)


def test_fwl_equals_joint_ols_coefficient():
    rng = np.random.default_rng(23)
    for _ in range(30):
        z = np.column_stack([np.ones(50), rng.standard_normal((50, 3))])
        a = rng.standard_normal(50)
        y = rng.standard_normal(50)
        joint = ols_fit(np.column_stack([a, z]), y).coefficients[0]
        assert fwl_coefficient(a, z, y) == pytest.approx(joint, rel=1e-9)


def test_fwl_degenerate_treatment():
    rng = np.random.default_rng(1)
    z = np.column_stack([np.ones(30), rng.standard_normal(30)])
    a = 2.0 * z[:, 1] - 3.0  # inside span(z)
    with pytest.raises(DegenerateTreatment):
        fwl_coefficient(a, z, rng.standard_normal(30))


def test_r_squared_in_span_is_one():
    rng = np.random.default_rng(2)
    z = np.column_stack([np.ones(40), rng.standard_normal(40)])
    assert r_squared_of(3.0 * z[:, 1] + 1.0, z) == pytest.approx(1.0, abs=1e-10)


def test_r_squared_intercept_only_is_zero():
    rng = np.random.default_rng(4)
    assert r_squared_of(rng.standard_normal(40), np.ones((40, 1))) == pytest.approx(0.0, abs=1e-12)


def test_r_squared_equal_variance_split_is_half():
    rng = np.random.default_rng(8)
    n = 10_000
    shared = rng.standard_normal(n)
    a = shared + rng.standard_normal(n)
    z = np.column_stack([np.ones(n), shared])
    assert r_squared_of(a, z) == pytest.approx(0.5, abs=0.05)


def test_r_squared_needs_intercept_and_variation():
    rng = np.random.default_rng(6)
    z_no_icpt = rng.standard_normal((30, 2))
    with pytest.raises(DimensionMismatch):
        r_squared_of(rng.standard_normal(30), z_no_icpt)
    with pytest.raises(ConstantTreatment):
        r_squared_of(np.full(30, 2.0), np.ones((30, 1)))


def test_monotone_annihilation_when_intercept_in_span():
    rng = np.random.default_rng(31)
    for _ in range(25):
        n = 40
        z = np.column_stack([np.ones(n), rng.standard_normal((n, 2))])
        a = rng.standard_normal(n)
        ra = annihilate(z, a)
        r1 = annihilate(np.ones((n, 1)), a)
        assert ra @ ra <= r1 @ r1 + 1e-12
