import json
import os

import pytest

from ampsim import SeedPolicy, amplification_factor, draw_dataset
from ampsim.cli import run_command

from conftest import two_path_model, two_path_spec_dict


@pytest.fixture
def spec_file(tmp_path):
    path = tmp_path / "two_path.json"
    path.write_text(json.dumps(two_path_spec_dict()))
    return str(path)


@pytest.fixture
def bounds_spec_file(tmp_path):
    path = tmp_path / "bounds.json"
    path.write_text(json.dumps(two_path_spec_dict(gamma_bav=0.45)))
    return str(path)


def _config_file(tmp_path, reps=50):
    doc = {
        "gamma_u": 0.63,
        "gamma_x_tilde": [0.2, 0.38, 0.33],
        "beta_u": 0.15,
        "beta_x_tilde": [0.10, -0.15, -0.10],
        "beta_a_truth": 0.137,
        "covariate_carry_share": 0.01,
        "reps": reps,
        "base_seed": 99,
    }
    path = tmp_path / "pipeline.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_simulate_writes_reports(spec_file, tmp_path, capsys):
    out_json = str(tmp_path / "reports.json")
    out_csv = str(tmp_path / "reports.csv")
    code = run_command([
        "simulate", "--spec", spec_file, "--n", "500", "--reps", "6", "--seed", "4",
        "--estimators", "naive,adjusted,oracle", "--truth-edge", "A,Y",
        "--out-json", out_json, "--out-csv", out_csv, "--threads", "1",
    ])
    assert code == 0
    doc = json.loads(open(out_json).read())
    assert doc["truth"] == 0.2
    assert [r["label"] for r in doc["reports"]] == ["naive", "adjusted", "oracle"]
    lines = open(out_csv).read().strip().split("\n")
    assert len(lines) == 7


def test_simulate_stdout_when_no_outfile(spec_file, capsys):
    code = run_command([
        "simulate", "--spec", spec_file, "--n", "200", "--reps", "2", "--seed", "1",
        "--estimators", "naive", "--truth-edge", "A,Y",
    ])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["reports"][0]["label"] == "naive"


def test_simulate_usage_errors(spec_file, capsys):
    assert run_command([]) == 2
    assert run_command(["simulate"]) == 2
    assert run_command([
        "simulate", "--spec", spec_file, "--n", "100", "--reps", "0", "--seed", "1",
        "--estimators", "naive", "--truth-edge", "A,Y",
    ]) == 2
    assert run_command([
        "simulate", "--spec", spec_file, "--n", "100", "--reps", "5", "--seed", "1",
        "--estimators", "naive", "--truth-edge", "A,Y", "--unknown-flag", "3",
    ]) == 2


def test_unobserved_regressor_is_a_domain_error(spec_file, capsys):
    # adjusted estimators may not touch unobserved nodes: infeasible, exit 1
    code = run_command([
        "simulate", "--spec", spec_file, "--n", "100", "--reps", "2", "--seed", "1",
        "--estimators", "adjusted:U", "--truth-edge", "A,Y",
    ])
    assert code == 1
    assert "InfeasibleEstimator" in capsys.readouterr().err


def test_domain_error_exit_code(tmp_path, capsys):
    doc = two_path_spec_dict(gamma_u=0.95)  # infeasible treatment budget
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code = run_command(["bounds", "--spec", str(path), "--edge", "U,A"])
    assert code == 1
    assert "InfeasibleVariance" in capsys.readouterr().err


def test_bounds_prints_interval(bounds_spec_file, capsys):
    code = run_command(["bounds", "--spec", bounds_spec_file, "--edge", "U,A"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["edge"] == ["U", "A"]
    assert doc["lower"] == pytest.approx(-0.893, abs=5e-4)
    assert doc["upper"] == pytest.approx(0.893, abs=5e-4)
    assert doc["binding_constraints"] == ["A"]


def test_bounds_unbounded_side_is_null(tmp_path, capsys):
    doc = {
        "nodes": [
            {"name": "X", "variance": 1},
            {"name": "Y", "variance": "free", "error_variance": 1.0},
        ],
        "edges": [{"from": "X", "to": "Y", "coef": 0.4}],
    }
    path = tmp_path / "free.json"
    path.write_text(json.dumps(doc))
    assert run_command(["bounds", "--spec", str(path), "--edge", "X,Y"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["lower"] is None and out["upper"] is None


def test_amplify_round_trip_matches_in_memory(tmp_path, capsys):
    sem = two_path_model()
    ds = draw_dataset(sem, 400, SeedPolicy(10, 0))
    data = tmp_path / "draw.csv"
    ds.to_csv(str(data))
    code = run_command([
        "amplify", "--data", str(data), "--treatment", "A", "--controls", "BAV",
    ])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    amp = amplification_factor(ds, "A", ["BAV"])
    assert doc["factor"] == pytest.approx(amp.factor, rel=1e-12)
    assert doc["ssr_over_n"] == pytest.approx(amp.ssr_over_n, rel=1e-12)


def test_amplify_no_controls_factor_one(tmp_path, capsys):
    sem = two_path_model()
    draw_dataset(sem, 100, SeedPolicy(1, 0)).to_csv(str(tmp_path / "d.csv"))
    assert run_command(["amplify", "--data", str(tmp_path / "d.csv"), "--treatment", "A"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["factor"] == pytest.approx(1.0, rel=1e-12)


def test_partialplot_writes_points(spec_file, tmp_path):
    out = str(tmp_path / "points.csv")
    code = run_command([
        "partialplot", "--spec", spec_file, "--n", "50", "--seed", "3",
        "--treatment", "A", "--outcome", "Y", "--controls", "BAV", "--out", out,
    ])
    assert code == 0
    lines = open(out).read().strip().split("\n")
    assert lines[0] == "x,y"
    assert len(lines) == 51


def test_intervene_identity_sweep_arms_identical(spec_file, tmp_path):
    out_csv = str(tmp_path / "arms.csv")
    code = run_command([
        "intervene", "--spec", spec_file, "--edge", "U,A", "--values", "0.3",
        "--modes", "fixed,floating", "--n", "300", "--reps", "5", "--seed", "8",
        "--estimators", "naive,adjusted", "--truth-edge", "A,Y",
        "--out-csv", out_csv, "--threads", "1",
    ])
    assert code == 0
    lines = open(out_csv).read().strip().split("\n")
    rows = [line.split(",") for line in lines[1:]]
    by_arm = {}
    for arm, value, rep, *ests in rows:
        by_arm.setdefault(arm, []).append(ests)
    assert by_arm["baseline"] == by_arm["fixed"] == by_arm["floating"]


def test_intervene_infeasible_value_is_domain_error(spec_file, capsys):
    code = run_command([
        "intervene", "--spec", spec_file, "--edge", "U,A", "--values", "0.9",
        "--modes", "fixed", "--n", "200", "--reps", "2", "--seed", "8",
        "--estimators", "naive", "--truth-edge", "A,Y",
    ])
    assert code == 1
    assert "InfeasibleIntervention" in capsys.readouterr().err


def test_realdata_surrogate_run(tmp_path):
    config = _config_file(tmp_path)
    out_json = str(tmp_path / "pipe.json")
    code = run_command([
        "realdata", "--config", config, "--out-json", out_json, "--threads", "1",
    ])
    assert code == 0
    doc = json.loads(open(out_json).read())
    assert [r["label"] for r in doc["reports"]] == ["naive", "adjusted", "oracle"]
    assert doc["n"] == 294


def test_realdata_accepts_csv_data(tmp_path):
    from ampsim import generate_surrogate_rct

    rct = generate_surrogate_rct(294, 0.51, 0.137, (0.1, -0.15, -0.1), seed=5)
    data = tmp_path / "rct.csv"
    rct.to_csv(str(data))
    config = _config_file(tmp_path, reps=20)
    out_json = str(tmp_path / "pipe.json")
    code = run_command([
        "realdata", "--config", config, "--data", str(data), "--out-json", out_json,
    ])
    assert code == 0
    assert json.loads(open(out_json).read())["treated_fraction"] == rct.treated_fraction()


def test_realdata_intervention_arms(tmp_path):
    config = _config_file(tmp_path, reps=30)
    out_json = str(tmp_path / "arms.json")
    code = run_command([
        "realdata", "--config", config, "--intervene-covariate", "0",
        "--intervene-gamma", "0.55", "--out-json", out_json,
    ])
    assert code == 0
    doc = json.loads(open(out_json).read())
    assert [a["arm"] for a in doc["arms"]] == ["baseline", "fixed", "floating"]


def test_threads_do_not_change_artifacts(spec_file, tmp_path):
    outs = []
    for threads in ("1", "3"):
        out_json = str(tmp_path / f"r{threads}.json")
        out_csv = str(tmp_path / f"r{threads}.csv")
        code = run_command([
            "simulate", "--spec", spec_file, "--n", "400", "--reps", "12", "--seed", "21",
            "--estimators", "naive,adjusted,oracle", "--truth-edge", "A,Y",
            "--out-json", out_json, "--out-csv", out_csv, "--threads", threads,
        ])
        assert code == 0
        outs.append((open(out_json, "rb").read(), open(out_csv, "rb").read()))
    assert outs[0] == outs[1]


def test_threads_env_fallback(spec_file, tmp_path, monkeypatch):
    monkeypatch.setenv("AMPSIM_THREADS", "2")
    out_csv = str(tmp_path / "env.csv")
    code = run_command([
        "simulate", "--spec", spec_file, "--n", "200", "--reps", "4", "--seed", "21",
        "--estimators", "naive", "--truth-edge", "A,Y", "--out-csv", out_csv,
    ])
    assert code == 0
    monkeypatch.setenv("AMPSIM_THREADS", "zero")
    assert run_command([
        "simulate", "--spec", spec_file, "--n", "200", "--reps", "4", "--seed", "21",
        "--estimators", "naive", "--truth-edge", "A,Y",
    ]) == 2


def test_atomic_write_leaves_no_temp_files(spec_file, tmp_path):
    out_json = str(tmp_path / "out.json")
    run_command([
        "simulate", "--spec", spec_file, "--n", "100", "--reps", "2", "--seed", "2",
        "--estimators", "naive", "--truth-edge", "A,Y", "--out-json", out_json,
    ])
    leftovers = [f for f in os.listdir(tmp_path) if f.startswith(".tmp-")]
    assert leftovers == []
