import hashlib
import io
import json

import numpy as np
import pytest

from swarmload import cli
from swarmload.engine import read_estimates_jsonl
from swarmload.ingest import write_sensor_csv
from swarmload.physio import default_physio_profile, synthesize
from swarmload.sim.scenario import scenario_from_dict


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def sensor_csv(tmp_path_factory):
    t = np.arange(3600, dtype=np.int64) * 1000
    demand = 0.5 + 0.4 * np.sin(t / 300_000.0)
    buf = io.StringIO()
    write_sensor_csv(synthesize(t, demand, default_physio_profile(), 0), buf)
    path = tmp_path_factory.mktemp("shift") / "sensors.csv"
    path.write_text(buf.getvalue())
    return path


SMALL = {
    "name": "tiny",
    "duration_s": 300,
    "world": {"width": 30, "height": 20, "launch_zone": [0, 0, 2, 2], "buildings": [{"id": "b", "rect": [10, 5, 14, 9]}]},
    "fleet": [{"kind": "UAV", "count": 4, "camera": "forward"}, {"kind": "UGV", "count": 2}],
    "plan": {
        "signals": ["go"],
        "nodes": [
            {"id": "n1", "tactics": [{"id": "s", "kind": "Surveil", "target": {"building": "b"}, "requirements": [{"count": 2, "kind": "UAV"}]}]},
            {"id": "n2", "gate": {"signals": ["go"]}, "tactics": [{"id": "c", "kind": "Cordon", "target": {"building": "b"}, "requirements": [{"count": 2, "kind": "UGV"}]}]},
        ],
    },
    "actions": [{"t_s": 60, "action": "signal", "name": "go"}],
    "comm": {"drop": 0.02, "restore": 0.4},
}


@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(SMALL))
    return path


def test_estimate_one_hour(sensor_csv, tmp_path, capsys):
    assert cli.main(["estimate", "--input", str(sensor_csv), "--output-dir", str(tmp_path)]) == 0
    assert capsys.readouterr().out.strip() == "estimates=715 usable=715 no_data=0"
    with open(tmp_path / "estimates.jsonl") as fh:
        assert len(read_estimates_jsonl(fh)) == 715
    assert len((tmp_path / "estimates.csv").read_text().splitlines()) == 716


def test_estimate_without_microphone(sensor_csv, tmp_path, capsys):
    argv = ["estimate", "--input", str(sensor_csv), "--output-dir", str(tmp_path), "--presence", "heart_rate,hrv,respiration_rate,posture_magnitude,noise_level"]
    assert cli.main(argv) == 0
    first = json.loads((tmp_path / "estimates.jsonl").read_text().splitlines()[0])
    assert "speech" in first["missing"]


def test_outputs_not_overwritten_without_force(sensor_csv, tmp_path, capsys):
    argv = ["estimate", "--input", str(sensor_csv), "--output-dir", str(tmp_path)]
    assert cli.main(argv) == 0
    before = _sha(tmp_path / "estimates.jsonl")
    (tmp_path / "estimates.jsonl").write_text("sentinel\n")
    assert cli.main(argv) == 2
    assert "--force" in capsys.readouterr().err
    assert (tmp_path / "estimates.jsonl").read_text() == "sentinel\n"
    assert cli.main(argv + ["--force"]) == 0
    assert _sha(tmp_path / "estimates.jsonl") == before


def test_simulate_is_reproducible(scenario, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["simulate", "--input", str(scenario), "--seed", "11", "--output-dir", str(d)]) == 0
    assert _sha(a / "events.jsonl") == _sha(b / "events.jsonl")
    assert _sha(a / "demand.csv") == _sha(b / "demand.csv")
    summary = json.loads(capsys.readouterr().out.splitlines()[0])
    assert summary["tactics_issued"] == 2
    c = tmp_path / "c"
    assert cli.main(["simulate", "--input", str(scenario), "--seed", "12", "--output-dir", str(c)]) == 0
    assert _sha(c / "events.jsonl") != _sha(a / "events.jsonl")


def test_simulate_bundled_scenario_by_name(tmp_path, capsys):
    assert cli.main(["simulate", "--input", "fx6-visitor-day", "--seed", "3", "--output-dir", str(tmp_path)]) == 0
    assert (tmp_path / "events.jsonl").stat().st_size > 0


def test_unknown_signal_rejected(tmp_path, capsys):
    doc = dict(SMALL, actions=[{"t_s": 5, "action": "signal", "name": "launch-all"}])
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert cli.main(["simulate", "--input", str(path), "--seed", "1", "--output-dir", str(tmp_path / "o")]) == 2
    assert "launch-all" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_analyze_estimates_only(sensor_csv, tmp_path, capsys):
    cli.main(["estimate", "--input", str(sensor_csv), "--output-dir", str(tmp_path)])
    out = tmp_path / "report"
    assert cli.main(["analyze", "--input", str(tmp_path / "estimates.jsonl"), "--output-dir", str(out), "--shift-id", "s1"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["estimate_count"] == 715 and "probes" not in report and "per_minute" not in report
    assert sorted(p.name for p in out.iterdir()) == ["descriptives.csv", "report.json", "states.csv"]
    assert (out / "states.csv").read_text().splitlines()[1].startswith("s1,")


def test_analyze_with_probes_and_events(sensor_csv, scenario, tmp_path, capsys):
    cli.main(["estimate", "--input", str(sensor_csv), "--output-dir", str(tmp_path)])
    cli.main(["simulate", "--input", str(scenario), "--seed", "1", "--output-dir", str(tmp_path)])
    probes = tmp_path / "probes.csv"
    probes.write_text("t_ms,dimension,rating\n600000,overall,4\n1200000,visual,6\n")
    out = tmp_path / "report"
    argv = ["analyze", "--input", str(tmp_path / "estimates.jsonl"), "--probes", str(probes), "--events", str(tmp_path / "events.jsonl"), "--output-dir", str(out)]
    assert cli.main(argv) == 0
    assert {"probes.csv", "minute_series.csv"} <= {p.name for p in out.iterdir()}


def test_analyze_rejects_wrong_schema(tmp_path, capsys):
    bad = tmp_path / "est.jsonl"
    bad.write_text('{"t": 1}\n')
    assert cli.main(["analyze", "--input", str(bad), "--output-dir", str(tmp_path / "o")]) == 2


def test_bad_profile_exit_code(sensor_csv, tmp_path, capsys):
    prof = tmp_path / "p.json"
    prof.write_text(json.dumps({"max_overall": 70.4, "components": []}))
    assert cli.main(["estimate", "--input", str(sensor_csv), "--profile", str(prof), "--output-dir", str(tmp_path)]) == 3
    assert capsys.readouterr().err.startswith("error: profile:")


def test_missing_input_file(tmp_path, capsys):
    assert cli.main(["estimate", "--input", str(tmp_path / "nope.csv"), "--output-dir", str(tmp_path)]) == 2


def test_missing_required_seed(scenario):
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate", "--input", str(scenario)])
    assert exc.value.code == 2


def test_internal_error_exit_code(scenario, tmp_path, monkeypatch, capsys):
    def boom(script):
        raise RuntimeError("kaput")

    monkeypatch.setattr(cli, "run_scenario", boom)
    assert cli.main(["simulate", "--input", str(scenario), "--seed", "1", "--output-dir", str(tmp_path)]) == 4
    assert "kaput" in capsys.readouterr().err


def test_synth_then_estimate(scenario, tmp_path, capsys):
    cli.main(["simulate", "--input", str(scenario), "--seed", "2", "--output-dir", str(tmp_path)])
    assert cli.main(["synth", "--input", str(tmp_path / "demand.csv"), "--seed", "2", "--output-dir", str(tmp_path)]) == 0
    assert capsys.readouterr().out.strip().endswith("channels=9")
    assert cli.main(["estimate", "--input", str(tmp_path / "sensors.csv"), "--output-dir", str(tmp_path)]) == 0
    # 300 s of data: windows end every 5 s from 30 s to 300 s
    assert capsys.readouterr().out.startswith("estimates=55 ")


def test_synth_with_bad_faults(scenario, tmp_path, capsys):
    cli.main(["simulate", "--input", str(scenario), "--seed", "2", "--output-dir", str(tmp_path)])
    faults = tmp_path / "faults.json"
    faults.write_text(json.dumps([{"metric": "noise_level", "start_s": 0, "end_s": 10, "mode": "explode"}]))
    argv = ["synth", "--input", str(tmp_path / "demand.csv"), "--seed", "2", "--faults", str(faults), "--output-dir", str(tmp_path / "o")]
    assert cli.main(argv) == 2


def test_e2e_prints_rank_agreement(scenario, tmp_path, capsys):
    assert cli.main(["e2e", "--input", str(scenario), "--seed", "5", "--zero-noise", "--output-dir", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1].startswith("spearman_rho=") and lines[-1].endswith("minutes=5")
    rank = json.loads((tmp_path / "rank.json").read_text())
    assert rank["minutes"] == 5
    names = {p.name for p in tmp_path.iterdir()}
    assert {"events.jsonl", "demand.csv", "sensors.csv", "estimates.jsonl", "report.json", "rank.json", "minute_series.csv"} <= names


def test_small_scenario_is_valid():
    scenario_from_dict(SMALL)
