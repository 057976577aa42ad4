import csv
import json

import pytest
from hypothesis import given, strategies as st

from bmovar import cli
from bmovar.config import ConfigError, ExperimentConfig
from bmovar.experiments import EXPERIMENTS, RunReport, run_experiment
from bmovar.plotdata import SERIES_SCHEMAS, emit_plot_data


def small_config(**overrides) -> ExperimentConfig:
    base = {"grid.P": 256, "time_grid.K": 5, "time_grid.refinement": 4,
            "battery.trig_degree": 8, "balls.stride": 4, "balls.per_octave": 2}
    base.update(overrides)
    return ExperimentConfig().replace(**base)


# --- configuration ------------------------------------------------------------

def test_default_config_is_valid_and_round_trips():
    cfg = ExperimentConfig().validate()
    text = cfg.dumps()
    assert ExperimentConfig.loads(text).dumps() == text
    assert json.loads(text)["grid"] == {"L": 8.0, "P": 2048, "n": 1}


@given(st.integers(0, 10**6), st.sampled_from(["gaussian", "poisson", "bump"]),
       st.sampled_from([64, 128, 1024]), st.floats(1.1, 4.0), st.sampled_from(["ones", "alternating", "random"]),
       st.lists(st.floats(2.01, 10.0), min_size=1, max_size=4))
def test_config_round_trip_fixed_point(seed, kernel, P, delta, weights, rhos):
    cfg = ExperimentConfig().replace(**{"seed": seed, "kernel": kernel, "grid.P": P,
                                        "lacunary.delta": delta, "lacunary.weights": weights,
                                        "exponents.rho": rhos, "battery.trig_degree": 4})
    once = cfg.dumps()
    assert ExperimentConfig.loads(once).dumps() == once
    assert ExperimentConfig.loads(once).digest() == cfg.digest()


def test_config_violations_are_listed():
    cfg = ExperimentConfig().replace(**{"grid.P": 100, "lacunary.M": 2, "exponents.rho": [2.0, 3.0],
                                        "lacunary.weights": "zeros", "kernel": "nope"})
    with pytest.raises(ConfigError) as err:
        cfg.validate()
    text = " ".join(err.value.violations)
    for key in ("grid.P", "lacunary.M", "exponents.rho", "lacunary.weights", "kernel"):
        assert key in text


def test_config_rejects_unknown_keys(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"grids": {}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"grid": {"Q": 3}})
    with pytest.raises(ConfigError):
        ExperimentConfig().replace(**{"grid.Q": 3})


def test_config_file_round_trip(tmp_path):
    cfg = small_config(seed=7)
    cfg.save(tmp_path / "c.json")
    assert ExperimentConfig.load(tmp_path / "c.json").dumps() == cfg.dumps()


def test_random_weights_are_seeded_and_nested():
    cfg = ExperimentConfig().replace(**{"lacunary.weights": "random", "seed": 3})
    w8 = cfg.lacunary_weights(8)
    w4 = cfg.lacunary_weights(4)
    assert (w8[4:13] == w4).all()
    assert (cfg.lacunary_weights(8) == w8).all()
    assert not (ExperimentConfig().replace(**{"lacunary.weights": "random", "seed": 4}).lacunary_weights(8) == w8).all()


# --- experiments ------------------------------------------------------------------

@pytest.mark.parametrize("which", EXPERIMENTS)
def test_every_experiment_passes_on_small_config(which):
    report = run_experiment(small_config(), which)
    assert report.experiment == which
    assert report.counts()["fail"] == 0, [c for c in report.checks if c.status == "fail"]
    assert report.exit_code() == 0
    assert "total" in report.timings


@pytest.mark.parametrize("which", ["oracle-suite", "cotlar", "l2-bound"])
def test_reports_are_deterministic(which):
    cfg = small_config(seed=5)
    a = run_experiment(cfg, which).dumps(include_timings=False)
    b = run_experiment(cfg, which).dumps(include_timings=False)
    assert a == b


def test_oracle_suite_is_fast():
    report = run_experiment(ExperimentConfig(), "oracle-suite")
    assert report.passed()
    assert report.timings["total"] < 10.0


def test_l2_bound_gaussian_widening():
    report = run_experiment(ExperimentConfig(), "l2-bound")
    widening = [c for c in report.checks if c.name == "l2_ratio_widening_stable"][0]
    assert widening.status == "pass" and widening.value < 0.2


def test_constant_battery_is_skipped():
    cfg = small_config(**{"battery.functions": ["constant"]})
    report = run_experiment(cfg, "bmo-blo-osc")
    assert report.counts() == {"pass": 0, "fail": 0, "warn": 0, "skipped": 1}
    assert report.exit_code(strict=True) == 0


def test_exit_code_contract():
    r = RunReport("x", "h", {})
    r.check("a", True)
    r.skip("b", "why")
    assert r.exit_code() == 0 and r.exit_code(strict=True) == 0
    r.check("c", False, severity="warning")
    assert r.exit_code() == 0 and r.exit_code(strict=True) == 1
    r.check("d", False)
    assert r.exit_code() == 1


def test_invalid_config_rejected_by_runner():
    with pytest.raises(ConfigError):
        run_experiment(ExperimentConfig().replace(**{"exponents.q": 1.0}), "cotlar")
    with pytest.raises(ValueError):
        run_experiment(ExperimentConfig(), "bmo-blo-foo")


# --- plot data --------------------------------------------------------------------

def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_empty_report_gives_header_only_csvs(tmp_path):
    for which, schema in SERIES_SCHEMAS.items():
        files = emit_plot_data(RunReport(which, "h", {}), tmp_path / which)
        assert sorted(p.stem for p in files) == sorted(schema)
        for p in files:
            assert _read(p) == [schema[p.stem]]


def test_bmo_blo_var_series_per_function(tmp_path):
    report = run_experiment(small_config(), "bmo-blo-var")
    files = {p.name for p in emit_plot_data(report, tmp_path)}
    functions = {row[0] for row in report.series["ratio_vs_P"]["rows"]}
    assert len(functions) == 7
    for fn in functions:
        name = "ratio_vs_P_" + "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in fn) + ".csv"
        assert name in files
        rows = _read(tmp_path / name)
        assert rows[0] == ["function", "operator", "P", "ratio"]
        assert sorted(int(r[2]) for r in rows[1:]) == [256, 512]


def test_cotlar_histogram_data(tmp_path):
    report = run_experiment(small_config(), "cotlar")
    emit_plot_data(report, tmp_path)
    rows = _read(tmp_path / "cotlar_ratio.csv")
    assert rows[0] == ["function", "M", "x_index", "ratio"]
    assert len(rows) > 100
    assert all(0 <= float(r[3]) < float("inf") for r in rows[1:])


def test_plot_data_io_errors_surface(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        emit_plot_data(RunReport("cotlar", "h", {}), blocker / "sub")


# --- command line ---------------------------------------------------------------------

def test_cli_runs_and_writes_outputs(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    small_config().save(cfg)
    code = cli.main(["oracle-suite", "--config", str(cfg), "--out", str(tmp_path / "out"), "--seed", "2"])
    assert code == 0
    report = json.loads((tmp_path / "out" / "oracle-suite" / "report.json").read_text())
    assert report["config"]["seed"] == 2
    assert report["summary"]["fail"] == 0
    assert (tmp_path / "out" / "oracle-suite" / "oracle_checks.csv").exists()
    assert "oracle-suite: pass=" in capsys.readouterr().out


def test_cli_flag_overrides(tmp_path):
    code = cli.main(["bmo-blo-osc", "--grid-P", "128", "--kernel", "poisson", "--out", str(tmp_path),
                     "--set", "battery.trig_degree=4", "--set", "time_grid.K=4", "--quiet"])
    assert code == 0
    report = json.loads((tmp_path / "bmo-blo-osc" / "report.json").read_text())
    assert report["config"]["grid"]["P"] == 128 and report["config"]["kernel"] == "poisson"


def test_cli_invalid_config_is_structured(tmp_path, capsys):
    code = cli.main(["cotlar", "--grid-P", "100", "--out", str(tmp_path)])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "invalid configuration"
    assert any("grid.P" in v for v in err["violations"])


def test_cli_constant_battery_exit_zero(tmp_path):
    code = cli.main(["bmo-blo-osc", "--out", str(tmp_path), "--grid-P", "128", "--set", "battery.trig_degree=4",
                     "--set", 'battery.functions=["constant"]', "--strict"])
    assert code == 0


def test_cli_strict_turns_warnings_into_failures(tmp_path, monkeypatch):
    def fake(cfg, which):
        r = RunReport(which, cfg.digest(), {})
        r.check("stability", False, severity="warning")
        return r

    monkeypatch.setattr(cli, "run_experiment", fake)
    assert cli.main(["cotlar", "--out", str(tmp_path)]) == 0
    assert cli.main(["cotlar", "--out", str(tmp_path), "--strict"]) == 1


def test_cli_config_subcommand(tmp_path, capsys):
    assert cli.main(["config"]) == 0
    text = capsys.readouterr().out
    assert ExperimentConfig.loads(text).dumps() == text
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"grid": {"P": 100}}))
    assert cli.main(["config", "--config", str(bad), "--check"]) == 2


def test_cli_all_merges_summaries(tmp_path, monkeypatch):
    def fake(cfg, which):
        r = RunReport(which, cfg.digest(), {})
        r.check("ok", True)
        return r

    monkeypatch.setattr(cli, "run_experiment", fake)
    assert cli.main(["all", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert [e["experiment"] for e in summary["experiments"]] == list(EXPERIMENTS)
