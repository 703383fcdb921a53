import csv
import math
import os
from pathlib import Path

import pytest
import yaml

from renewalctl import cli
from renewalctl.cli import ConfigError, RunConfig, config_to_dict, parse_config, serialize
from renewalctl.sim.core import trace_columns

GOLDEN = Path(__file__).parent / "golden"
REGEN = os.environ.get("RENEWALCTL_REGEN_GOLDEN")


def test_minimal_config_defaults():
    cfg = parse_config("scenario: one_class\nV: [1]\n")
    assert cfg == RunConfig(scenario="one_class", V=(1.0,), frames=1_000_000, seed=1)
    assert parse_config("scenario: one_class").V == (1.0,)


def test_sweep_list():
    cfg = parse_config("scenario: ten_class\nV: [0, 0.05, 0.3, 1, 3]\nframes: 1000\n")
    assert cfg.V == (0.0, 0.05, 0.3, 1.0, 3.0)


@pytest.mark.parametrize("text, field", [
    ("scenario: one_class\nframes: lots\n", "frames"),
    ("scenario: one_class\nV: [1, abc]\n", "V[1]"),
    ("scenario: one_class\nV: [-1]\n", "V[0]"),
    ("scenario: one_class\nseed: 1.5\n", "seed"),
    ("scenario: one_class\nemit: everything\n", "emit"),
    ("scenario: one_class\ncolour: red\n", "colour"),
    ("scenario: unknown_thing\n", "scenario"),
    ("V: [1]\n", "scenario"),
    ("scenario: {kind: task_scheduler, model: {mean_energy: [[1]]}}\n", "scenario.model"),
    ("scenario: {kind: flow_control, model: {mean_energy: [[1]], mean_duration: [[2]]}, power_budget: x}\n",
     "scenario.power_budget"),
    ("scenario: [1, 2\n", "config"),
])
def test_errors_name_the_field(text, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert str(exc.value).startswith(field)


def test_round_trip():
    texts = [
        "scenario: one_class\n",
        "scenario: rate_switch\nV: [50, 100]\nframes: 900\nseed: 3\nout: o\nemit: both\nwindow: 30\njobs: 2\n"
        "stride: 4\nbackend: python\n",
        "scenario: {name: tiny, kind: task_scheduler, model: {mean_energy: [[1, 3]], mean_duration: [[7, 4]], "
        "idle_max: 10, rates: [0.2]}}\nframes: 50\n",
    ]
    for text in texts:
        cfg = parse_config(text)
        assert parse_config(serialize(cfg)) == cfg
        assert config_to_dict(parse_config(serialize(cfg))) == config_to_dict(cfg)


def _run(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return cli.main(argv)


def test_trace_rows(tmp_path, monkeypatch):
    code = _run(["run", "--scenario", "one_class", "--frames", "100", "--emit", "trace", "--out", "r"],
                tmp_path, monkeypatch)
    assert code == 0
    path = tmp_path / "r" / "one_class" / "V_1" / "trace.csv"
    rows = list(csv.reader(path.open()))
    assert rows[0] == trace_columns(1)
    assert len(rows) - 1 == 100
    assert not (path.parent / "summary.yaml").exists()


def test_sweep_writes_one_summary_per_run(tmp_path, monkeypatch, capsys):
    code = _run(["run", "--scenario", "ten_class", "--V", "0,0.3,1", "--frames", "2000", "--out", "r"],
                tmp_path, monkeypatch)
    assert code == 0
    table = capsys.readouterr().out
    for v in ("0", "0.3", "1"):
        rec = yaml.safe_load((tmp_path / "r" / "ten_class" / f"V_{v}" / "summary.yaml").read_text())
        assert rec["V"] == float(v)
        assert rec["seed"] == 1
        assert rec["config"]["frames"] == 2000
    assert "power" in table and "max gap" in table


def test_parallel_sweep_with_moving_average(tmp_path, monkeypatch):
    code = _run(["run", "--scenario", "rate_switch", "--V", "50,100", "--frames", "3000", "--jobs", "2",
                 "--emit", "both", "--window", "200", "--out", "r"], tmp_path, monkeypatch)
    assert code == 0
    ma = tmp_path / "r" / "rate_switch" / "V_100" / "moving_average.csv"
    rows = list(csv.reader(ma.open()))
    assert rows[0] == ["k", "ma_admission_rate", "ma_arrival_rate", "mean_backlog"]
    assert len(rows) == 3001


def test_config_file(tmp_path, monkeypatch):
    (tmp_path / "c.yaml").write_text("scenario: online_lfp\nV: [100]\nframes: 500\nout: r\n")
    assert _run(["run", "c.yaml"], tmp_path, monkeypatch) == 0
    rec = yaml.safe_load((tmp_path / "r" / "online_lfp" / "V_100" / "summary.yaml").read_text())
    assert rec["frames"] == 500


def test_exit_code_config_error(tmp_path, monkeypatch, capsys):
    assert _run(["run", "--scenario", "one_class", "--frames", "many"], tmp_path, monkeypatch) == 2
    assert "frames" in capsys.readouterr().err
    assert _run(["run", "--scenario", "nope"], tmp_path, monkeypatch) == 2
    assert _run(["run", "missing.yaml"], tmp_path, monkeypatch) == 2


def test_exit_code_run_failure(tmp_path, monkeypatch, capsys):
    # parses, but q0 has the wrong length for the model: fails when the run starts
    (tmp_path / "bad.yaml").write_text(
        "scenario: {name: bad, kind: task_scheduler, q0: [1, 2],\n"
        "  model: {mean_energy: [[1, 3]], mean_duration: [[7, 4]], rates: [0.2]}}\nframes: 10\nout: r\n")
    assert _run(["run", "bad.yaml"], tmp_path, monkeypatch) == 1
    assert "FAILED" in capsys.readouterr().out


def test_list_scenarios(capsys):
    assert cli.main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in ("one_class", "rate_switch", "smart_device", "online_lfp"):
        assert name in out


def test_oracle_command(capsys):
    assert cli.main(["oracle", "--scenario", "one_class"]) == 0
    rec = yaml.safe_load(capsys.readouterr().out)
    assert rec["power_opt"] == pytest.approx(7 / 15, abs=1e-12)
    assert cli.main(["oracle", "--scenario", "online_lfp"]) == 0
    rec = yaml.safe_load(capsys.readouterr().out)
    assert rec["dinkelbach"] == pytest.approx(rec["ratio_opt"], abs=1e-9)


def _norm(x):
    # NaN never equals itself; compare it by name
    if isinstance(x, dict):
        return {k: _norm(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_norm(v) for v in x]
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return x


def test_golden_tiny_run(tmp_path, monkeypatch):
    """Output schema and values of a tiny deterministic run are stable."""
    code = _run(["run", "--scenario", "one_class", "--frames", "12", "--emit", "both", "--out", "results"],
                tmp_path, monkeypatch)
    assert code == 0
    run = tmp_path / "results" / "one_class" / "V_1"
    summary = yaml.safe_load((run / "summary.yaml").read_text())
    summary.pop("backend")
    trace = (run / "trace.csv").read_text()
    if REGEN:
        GOLDEN.mkdir(exist_ok=True)
        (GOLDEN / "one_class_summary.yaml").write_text(yaml.safe_dump(summary, sort_keys=False))
        (GOLDEN / "one_class_trace.csv").write_text(trace)
    assert _norm(summary) == _norm(yaml.safe_load((GOLDEN / "one_class_summary.yaml").read_text()))
    assert trace == (GOLDEN / "one_class_trace.csv").read_text()
