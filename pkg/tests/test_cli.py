"""End-to-end CLI tests: config precedence, exit codes, outputs, manifests."""

import json

import numpy as np
import pytest

from fluidfed.cli import ConfigError, load_config, main, parse_variant
from fluidfed.channel import Clayton, GaussianJakes, Independent, PerfectDependence

FAST_MC = [
    "--set", "mc.trials=400",
    "--set", "mc.tau_grid=[1.0,3.0,6]",
    "--set", "mc.n_grid=[1,6]",
    "--set", "mc.diag_rows=20000",
    "--set", "mc.diag_betas=[1.0]",
]
FAST_FL = [
    "--set", "fl.rounds=2",
    "--set", "fl.samples=200",
    "--set", "fl.clients=3",
    "--set", 'fl.variants=["ideal","independent"]',
]


# ------------------------------------------------------------- config


def test_defaults_need_no_file():
    cfg, source = load_config(None, None)
    assert cfg["system"]["tau"] == 0.05
    assert cfg["system"]["K"] == 20
    assert source["system.tau"] == "default"


def test_file_must_state_tau(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"system": {"K": 5}}))
    with pytest.raises(ConfigError, match="system.tau"):
        load_config(str(p), None)
    p.write_text(json.dumps({"system": {"K": 5, "tau": 0.1}}))
    cfg, source = load_config(str(p), None)
    assert cfg["system"]["K"] == 5 and cfg["system"]["tau"] == 0.1
    assert source["system.K"] == "file"
    assert source["system.N"] == "default"


def test_unknown_keys_rejected(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"system": {"tau": 0.1, "bogus": 1}}))
    with pytest.raises(ConfigError, match="bogus"):
        load_config(str(p), None)
    p.write_text(json.dumps({"nosuch": {}}))
    with pytest.raises(ConfigError, match="nosuch"):
        load_config(str(p), None)


def test_type_errors_rejected(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"system": {"tau": "high"}}))
    with pytest.raises(ConfigError, match="system.tau"):
        load_config(str(p), None)
    # bool is not accepted where a number is expected
    p.write_text(json.dumps({"system": {"tau": True}}))
    with pytest.raises(ConfigError):
        load_config(str(p), None)


def test_set_overrides_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"system": {"tau": 0.1, "K": 7}}))
    cfg, source = load_config(str(p), ["system.K=9"])
    assert cfg["system"]["K"] == 9
    assert source["system.K"] == "set"


def test_set_parses_json_values():
    cfg, _ = load_config(None, ['mc.variants=["fpa"]', "mc.trials=55"])
    assert cfg["mc"]["variants"] == ["fpa"]
    assert cfg["mc"]["trials"] == 55
    with pytest.raises(ConfigError):
        load_config(None, ["notdotted=3"])
    with pytest.raises(ConfigError):
        load_config(None, ["mc.trials"])


def test_power_pairs_are_mutually_exclusive(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(
        json.dumps({"system": {"tau": 0.1, "p_max": 0.02, "p_max_dbm": 13.0}})
    )
    with pytest.raises(ConfigError, match="mutually exclusive"):
        load_config(str(p), None)
    # a user-supplied linear value silently retires the default dbm key
    p.write_text(json.dumps({"system": {"tau": 0.1, "sigma2_dbm": -20.0}}))
    cfg, _ = load_config(str(p), None)
    assert "sigma2" not in cfg["system"]
    assert cfg["system"]["sigma2_dbm"] == -20.0


def test_bad_json_is_config_error(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(str(p), None)


def test_parse_variant_forms():
    assert parse_variant("ideal") == ("ideal", "ideal")
    label, dep = parse_variant("independent")
    assert label == "independent" and isinstance(dep, Independent)
    label, dep = parse_variant("clayton:2.5")
    assert label == "clayton-2.5" and dep == Clayton(2.5)
    label, dep = parse_variant("FPA")
    assert label == "fpa" and isinstance(dep, PerfectDependence)
    label, dep = parse_variant("jakes", aperture=0.7)
    assert dep == GaussianJakes(aperture=0.7)
    with pytest.raises(ConfigError):
        parse_variant("clayton:x")
    with pytest.raises(ConfigError):
        parse_variant("clayton:-1")
    with pytest.raises(ConfigError):
        parse_variant("dipole")


# ------------------------------------------------------------ commands


def test_missing_config_file_exits_3(tmp_path, capsys):
    rc = main(["cdf-mse", "--config", str(tmp_path / "absent.json")])
    assert rc == 3
    assert "I/O error" in capsys.readouterr().err


def test_config_error_exits_2(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"system": {"K": 5}}))
    rc = main(["pmf-users", "--config", str(p)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "config error" in err and "system.tau" in err


def test_ideal_is_not_an_mc_variant(tmp_path, capsys):
    rc = main(
        ["cdf-mse", "--out", str(tmp_path), "--set", 'mc.variants=["ideal"]']
    )
    assert rc == 2


def test_cdf_mse_run_outputs_and_manifest(tmp_path, capsys):
    out = tmp_path / "run"
    rc = main(["cdf-mse", "--out", str(out), *FAST_MC])
    assert rc == 0
    names = sorted(p.name for p in out.iterdir())
    assert "cdf_mse_independent.csv" in names
    assert "cdf_mse_fpa.csv" in names
    assert "cdf_mse_report.json" in names
    assert "manifest.json" in names
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "cdf-mse"
    assert manifest["status"] == "pass"
    assert manifest["config"]["mc"]["trials"] == 400
    assert manifest["config_sources"]["mc.trials"] == "set"
    # manifest hashes actually match the files on disk
    import hashlib

    for entry in manifest["outputs"]:
        digest = hashlib.sha256((out / entry["path"]).read_bytes()).hexdigest()
        assert digest == entry["sha256"]


def test_reruns_are_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["pmf-users", "--out", str(out1), "--seed", "5", *FAST_MC]) == 0
    assert main(["pmf-users", "--out", str(out2), "--seed", "5", *FAST_MC]) == 0
    names = sorted(p.name for p in out1.iterdir() if p.name != "manifest.json")
    assert names
    for name in names:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    # manifests carry timestamps, but their output hashes must agree
    m1 = json.loads((out1 / "manifest.json").read_text())
    m2 = json.loads((out2 / "manifest.json").read_text())
    assert m1["outputs"] == m2["outputs"]


def test_different_seed_changes_outputs(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["cdf-mse", "--out", str(out1), "--seed", "1", *FAST_MC]) == 0
    assert main(["cdf-mse", "--out", str(out2), "--seed", "2", *FAST_MC]) == 0
    blob1 = (out1 / "cdf_mse_independent.csv").read_bytes()
    blob2 = (out2 / "cdf_mse_independent.csv").read_bytes()
    assert blob1 != blob2


def test_port_sweep_run(tmp_path, capsys):
    out = tmp_path / "sweep"
    rc = main(["port-sweep", "--out", str(out), *FAST_MC])
    assert rc == 0
    report = json.loads((out / "port_sweep_report.json").read_text())
    for label, blob in report.items():
        assert blob["all_pass"], label
        values = [p["analytic"] for p in blob["points"]]
        assert values == sorted(values), label


def test_copula_check_run(tmp_path, capsys):
    out = tmp_path / "diag"
    rc = main(["copula-check", "--out", str(out), *FAST_MC])
    assert rc == 0
    blob = json.loads((out / "copula_check_report.json").read_text())
    assert blob["all_pass"] is True
    assert blob["tau_checks"][0]["beta"] == 1.0
    stdout = capsys.readouterr().out
    assert "kendall tau" in stdout


def test_train_run_writes_per_variant_records(tmp_path, capsys):
    out = tmp_path / "train"
    rc = main(
        ["train", "--out", str(out), *FAST_FL, "--set", "system.tau=0.5"]
    )
    assert rc == 0
    for label in ("ideal", "independent"):
        csv_path = out / f"train_{label}.csv"
        jsonl_path = out / f"train_{label}.jsonl"
        assert csv_path.exists() and jsonl_path.exists()
        rows = csv_path.read_text().splitlines()
        assert rows[0] == "round,participants,mse,eta,train_loss,test_acc"
        assert len(rows) == 3  # header + 2 rounds
    # ideal benchmark always reports full participation
    ideal_rows = (out / "train_ideal.csv").read_text().splitlines()[1:]
    assert all(r.split(",")[1] == "3" for r in ideal_rows)


def test_train_benchmark_flag_restricts_variants(tmp_path):
    out = tmp_path / "only-ideal"
    rc = main(["train", "--out", str(out), *FAST_FL, "--benchmark", "ideal"])
    assert rc == 0
    names = {p.name for p in out.iterdir()}
    assert "train_ideal.csv" in names
    assert "train_independent.csv" not in names
    out2 = tmp_path / "no-ideal"
    rc = main(["train", "--out", str(out2), *FAST_FL, "--benchmark", "ota"])
    assert rc == 0
    names2 = {p.name for p in out2.iterdir()}
    assert "train_ideal.csv" not in names2
    assert "train_independent.csv" in names2


def test_train_reruns_byte_identical(tmp_path):
    out1, out2 = tmp_path / "t1", tmp_path / "t2"
    args = ["train", *FAST_FL, "--seed", "3", "--set", "system.tau=0.5"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    for name in ("train_ideal.csv", "train_independent.csv", "train_independent.jsonl"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_bound_constant_schedule(tmp_path, capsys):
    out = tmp_path / "bound"
    rc = main(
        [
            "bound",
            "--out", str(out),
            "--set", "bound.rounds=10",
            "--set", "bound.participants=8",
            "--set", "bound.mse=0.002",
        ]
    )
    assert rc == 0
    rows = (out / "bound.csv").read_text().splitlines()
    assert rows[0] == "round,bound"
    assert len(rows) == 11
    values = [float(r.split(",")[1]) for r in rows[1:]]
    # constant residual: the trajectory approaches its fixed point
    assert values[0] > values[-1]
    assert "psi=" in capsys.readouterr().out


def test_bound_from_training_records(tmp_path):
    train_out = tmp_path / "train"
    assert (
        main(
            ["train", "--out", str(train_out), *FAST_FL,
             "--set", "system.tau=0.5", "--benchmark", "ota"]
        )
        == 0
    )
    records_csv = train_out / "train_independent.csv"
    out = tmp_path / "bound"
    rc = main(
        ["bound", "--out", str(out), "--records", str(records_csv),
         "--set", "bound.n_users=3"]
    )
    assert rc == 0
    rows = (out / "bound.csv").read_text().splitlines()
    assert len(rows) == 3  # header + the 2 recorded rounds


def test_bound_inline_schedule(tmp_path):
    out = tmp_path / "b"
    rc = main(
        ["bound", "--out", str(out),
         "--set", "bound.schedule=[[10,0.001],[5,0.002]]"]
    )
    assert rc == 0
    assert len((out / "bound.csv").read_text().splitlines()) == 3
    rc = main(
        ["bound", "--out", str(out), "--set", 'bound.schedule=[["x",1]]']
    )
    assert rc == 2


def test_failure_reporting_prints_grid_points(capsys):
    # honest runs pass their own bands, so exercise the failure path with
    # a doctored report: it must print the offending point to stderr and
    # report not-ok, which main() turns into exit code 1
    from fluidfed import montecarlo as mc
    from fluidfed.cli import _report_failures

    report = mc.ComparisonReport(
        label="doctored",
        points=[mc.GridPointCheck(1.0, 0.9, 0.1, 0.01, False)],
    )
    assert _report_failures([report]) is False
    err = capsys.readouterr().err
    assert "FAIL doctored" in err and "x=1" in err


def test_training_divergence_exits_1(tmp_path, capsys):
    out = tmp_path / "blowup"
    with np.errstate(over="ignore"):
        rc = main(
            [
                "train",
                "--out", str(out),
                "--set", 'fl.variants=["independent"]',
                "--set", "fl.optimizer=\"sgd\"",
                "--set", "fl.lr=1e6",
                "--set", "fl.separation=1e3",
                "--set", "fl.rounds=50",
                "--set", "fl.samples=200",
                "--set", "fl.clients=2",
                "--set", "fl.classes=2",
                "--set", "fl.dims=4",
                "--set", "system.tau=1e6",
            ]
        )
    assert rc == 1
    assert "DIVERGED" in capsys.readouterr().err
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "diverged"
    # partial records still land on disk
    rows = (out / "train_independent.csv").read_text().splitlines()
    assert 1 < len(rows) < 52


def test_default_out_dir_is_under_runs(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    rc = main(["bound", "--set", "bound.rounds=3"])
    assert rc == 0
    assert (tmp_path / "runs" / "bound" / "bound.csv").exists()
    assert (tmp_path / "runs" / "bound" / "manifest.json").exists()
