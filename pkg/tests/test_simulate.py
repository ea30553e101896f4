import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ampsim import (
    SeedPolicy,
    draw_dataset,
    latent_threshold_intercept,
    parse_spec,
    population_covariance,
)
from ampsim.errors import NTooSmall, OutOfRange, UnresolvedErrorVariance
from ampsim.sem import LinearSEM, NodeSpec
from ampsim.simulate import interior_uniform, read_csv_columns

from conftest import two_path_model


def _batched_se(values, batches=20):
    """Standard error of the mean estimated from batch means."""
    values = np.asarray(values)
    chunks = np.array_split(values, batches)
    means = np.array([c.mean() for c in chunks])
    return means.std(ddof=1) / np.sqrt(batches)


def test_reproducible_and_replicate_independent():
    sem = two_path_model()
    a = draw_dataset(sem, 500, SeedPolicy(base_seed=2024, replicate_index=5))
    b = draw_dataset(sem, 500, SeedPolicy(base_seed=2024, replicate_index=5))
    c = draw_dataset(sem, 500, SeedPolicy(base_seed=2024, replicate_index=6))
    for name in a.columns:
        assert np.array_equal(a.columns[name], b.columns[name])
    assert not np.array_equal(a.columns["Y"], c.columns["Y"])
    assert a.provenance == (sem.content_hash(), 2024, 5)


def test_single_node_variance_matches():
    sem = parse_spec(json.dumps({"nodes": [{"name": "X", "variance": 4.0}], "edges": []}))
    ds = draw_dataset(sem, 100_000, SeedPolicy(1, 0))
    x = ds.columns["X"]
    se = _batched_se((x - x.mean()) ** 2)
    assert abs(x.var() - 4.0) <= 5 * se


def test_zero_variance_error_child_is_exact_function_of_parent():
    sem = parse_spec(json.dumps({
        "nodes": [
            {"name": "X", "variance": 1},
            {"name": "Y", "variance": "free", "error_variance": 0.0},
        ],
        "edges": [{"from": "X", "to": "Y", "coef": 2.0}],
    }))
    ds = draw_dataset(sem, 100, SeedPolicy(3, 0))
    assert_allclose(ds.columns["Y"], 2.0 * ds.columns["X"], rtol=0, atol=0)


def test_sample_moments_match_population_covariance():
    sem = two_path_model()
    n = 100_000
    ds = draw_dataset(sem, n, SeedPolicy(11, 0))
    a, bav = ds.columns["A"], ds.columns["BAV"]
    prod = (a - a.mean()) * (bav - bav.mean())
    se = _batched_se(prod)
    assert abs(prod.mean() - 0.6) <= 5 * se

    names, cov = population_covariance(sem)
    for i, ni in enumerate(names):
        ci = ds.columns[ni]
        for j, nj in enumerate(names):
            cj = ds.columns[nj]
            prod = (ci - ci.mean()) * (cj - cj.mean())
            assert abs(prod.mean() - cov[i, j]) <= 5 * max(_batched_se(prod), 1e-12)


def test_means_are_carried():
    sem = parse_spec(json.dumps({
        "nodes": [
            {"name": "X", "variance": 1, "mean": 2.0},
            {"name": "Y", "variance": 1, "mean": -1.0},
        ],
        "edges": [{"from": "X", "to": "Y", "coef": 0.5}],
    }))
    ds = draw_dataset(sem, 200_000, SeedPolicy(5, 0))
    assert ds.columns["X"].mean() == pytest.approx(2.0, abs=0.02)
    assert ds.columns["Y"].mean() == pytest.approx(-1.0 + 0.5 * 2.0, abs=0.02)


def test_uniform_rescaled_errors_match_variance_budget():
    doc = json.dumps({
        "nodes": [{"name": "X", "variance": 2.5}],
        "edges": [],
        "error_distribution": "uniform-rescaled",
    })
    sem = parse_spec(doc)
    ds = draw_dataset(sem, 100_000, SeedPolicy(9, 0))
    x = ds.columns["X"]
    se = _batched_se((x - x.mean()) ** 2)
    assert abs(x.var() - 2.5) <= 5 * se
    # bounded support, unlike the normal
    assert np.abs(x).max() <= np.sqrt(3 * 2.5) + 1e-9


def test_binary_threshold_node_emits_indicator_and_latent():
    p_a = 0.7
    alpha = latent_threshold_intercept(p_a)
    sem = parse_spec(json.dumps({
        "nodes": [{"name": "A", "variance": 1, "mean": alpha, "kind": "binary-threshold"}],
        "edges": [],
    }))
    ds = draw_dataset(sem, 100_000, SeedPolicy(13, 0))
    a, latent = ds.columns["A"], ds.columns["A__latent"]
    assert set(np.unique(a)) <= {0.0, 1.0}
    assert np.array_equal(a, (latent > 0).astype(float))
    se = _batched_se(a)
    assert abs(a.mean() - p_a) <= 5 * se


def test_latent_threshold_intercept_values():
    assert latent_threshold_intercept(0.5) == pytest.approx(0.0, abs=1e-12)
    assert latent_threshold_intercept(0.51) == pytest.approx(0.02507, abs=5e-6)
    assert latent_threshold_intercept(0.975) == pytest.approx(1.95996, abs=5e-6)
    with pytest.raises(OutOfRange):
        latent_threshold_intercept(0.0)
    with pytest.raises(OutOfRange):
        latent_threshold_intercept(1.0)


def test_draw_preconditions():
    unsolved = LinearSEM(nodes=(NodeSpec(name="X"),), edges=())
    with pytest.raises(UnresolvedErrorVariance):
        draw_dataset(unsolved, 10, SeedPolicy(0, 0))
    sem = two_path_model()
    with pytest.raises(NTooSmall):
        draw_dataset(sem, 1, SeedPolicy(0, 0))


def test_interior_uniform_is_strictly_inside_unit_interval():
    rng = np.random.default_rng(0)
    u = interior_uniform(rng, 200_000)
    assert u.min() > 0.0
    assert u.max() < 1.0
    assert u.mean() == pytest.approx(0.5, abs=0.005)


def test_csv_round_trip_is_bit_faithful(tmp_path):
    sem = two_path_model()
    ds = draw_dataset(sem, 300, SeedPolicy(21, 4))
    path = tmp_path / "draw.csv"
    ds.to_csv(str(path))
    with open(path) as fh:
        cols = read_csv_columns(fh)
    assert list(cols) == list(ds.columns)
    for name in cols:
        assert np.array_equal(cols[name], ds.columns[name])


def test_csv_export_includes_latent_columns(tmp_path):
    sem = parse_spec(json.dumps({
        "nodes": [{"name": "A", "variance": 1, "kind": "binary-threshold"}],
        "edges": [],
    }))
    ds = draw_dataset(sem, 50, SeedPolicy(2, 0))
    path = tmp_path / "binary.csv"
    ds.to_csv(str(path))
    with open(path) as fh:
        header = fh.readline().strip()
    assert header == "A,A__latent"
