import json
import os

import pytest

from morphusv import cli
from morphusv.cli import main


def _run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main([*argv, "--out", str(out)])
    return code, out


def _manifest(out):
    with open(out / "manifest.json") as fh:
        return json.load(fh)


def test_simulate_manifest_and_replay(tmp_path, capsys):
    code, out = _run(tmp_path, "simulate", "--duration", "3")
    assert code == 0
    man = _manifest(out)
    assert man["command"] == "simulate" and man["status"] == "ok"
    assert {"log.csv", "log.json", "path.svg", "summary.json"} <= set(man["artifacts"])
    for name, digest in man["artifacts"].items():
        assert cli.sha256(out / name) == digest
    code = main(["replay", str(out / "manifest.json")])
    assert code == 0
    assert "replay identical" in capsys.readouterr().out


def test_replay_detects_tampering(tmp_path):
    code, out = _run(tmp_path, "simulate", "--duration", "1")
    man = _manifest(out)
    man["artifacts"]["summary.json"] = "0" * 64
    with open(out / "manifest.json", "w") as fh:
        json.dump(man, fh)
    assert main(["replay", str(out / "manifest.json")]) == 1


def test_replay_refuses_own_directory(tmp_path):
    code, out = _run(tmp_path, "simulate", "--duration", "1")
    assert main(["replay", str(out / "manifest.json"), "--out", str(out)]) == 2


def test_identify_two_lengths_is_rank_error(tmp_path, capsys):
    code, _ = _run(tmp_path, "identify", "--lengths", "0,0.5")
    assert code == 1
    assert "3 distinct" in capsys.readouterr().err


def test_identify_missing_log_names_path(tmp_path, capsys):
    missing = str(tmp_path / "nope.csv")
    code, _ = _run(tmp_path, "identify", "--logs", missing)
    assert code == 2
    assert missing in capsys.readouterr().err


def test_identify_length_out_of_range(tmp_path):
    code, _ = _run(tmp_path, "identify", "--lengths", "0,0.3,0.7")
    assert code == 2


def test_identify_synthetic_within_two_percent(tmp_path):
    code, out = _run(tmp_path, "identify", "--lengths", "0,0.25,0.5", "--duration", "10")
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert max(rep["relative_error"].values()) < 0.02
    assert (out / "polynomials.ini").exists() and (out / "residuals.svg").exists()


def test_dock_zero_repetitions(tmp_path):
    code, out = _run(tmp_path, "dock", "--repetitions", "0")
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert list(rep["forms"]) == ["contracted", "expanded"]
    assert all(f["success_rate"] is None and f["times"] == [] for f in rep["forms"].values())
    assert "docking.svg" not in _manifest(out)["artifacts"]


def test_bridge_single_block(tmp_path):
    code, out = _run(tmp_path, "bridge", "--blocks", "1")
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["success"] and summary["blocks_placed"] == 1
    phases = (out / "timeline.csv").read_text()
    assert "ExpandForAssembly" not in phases and "DockAssembly" in phases
    assert (out / "frames.csv").exists() and (out / "mission.svg").exists()


def test_track_deterministic(tmp_path):
    argv = ["track", "--shape", "circle", "--controller", "pid", "--form", "contracted",
            "--repetitions", "1"]
    assert main([*argv, "--out", str(tmp_path / "a")]) == 0
    assert main([*argv, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "metrics.csv").read_bytes()
    assert a == (tmp_path / "b" / "metrics.csv").read_bytes()
    rows = json.loads((tmp_path / "a" / "metrics.json").read_text())["results"]
    assert len(rows) == 1 and rows[0]["controller"] == "pid"


def test_config_precedence(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[dock]\nrepetitions = 7\nwater = calm\n")
    args = cli.build_parser().parse_args(["dock", "--config", str(ini), "--repetitions", "2"])
    eff, paths = cli.resolve("dock", args)
    assert eff["repetitions"] == 2 and eff["water"] == "calm" and paths == [str(ini)]
    args = cli.build_parser().parse_args(["dock", "--config", str(ini)])
    assert cli.resolve("dock", args)[0]["repetitions"] == 7


def test_config_unknown_key(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[dock]\nrepetitons = 7\n")
    assert main(["dock", "--config", str(ini), "--out", str(tmp_path / "o")]) == 2


def test_missing_config_file(tmp_path):
    assert main(["dock", "--config", str(tmp_path / "none.ini"), "--out", str(tmp_path)]) == 2


def test_negative_repetitions_rejected(tmp_path):
    code, _ = _run(tmp_path, "dock", "--repetitions", "-1")
    assert code == 2


def test_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "root"))
    assert main(["simulate", "--duration", "0.5", "--seed", "3"]) == 0
    assert os.path.exists(tmp_path / "root" / "simulate-3" / "manifest.json")


def test_write_atomic_replaces(tmp_path):
    p = tmp_path / "f.txt"
    cli.write_atomic(str(p), "one")
    cli.write_atomic(str(p), "two")
    assert p.read_text() == "two"
    assert os.listdir(tmp_path) == ["f.txt"]


def test_pool_map_keeps_order():
    assert cli.pool_map(abs, [-3, 2, -1], workers=1) == [3, 2, 1]


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
