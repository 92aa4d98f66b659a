import json

import pytest

from choquard_lsr import io
from choquard_lsr.cli import main


def write_config(tmp_path, data):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(data))
    return path


def test_ground_state_is_cached_bit_identically(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["ground-state", "--out", str(out)]) == 0
    cache = next(out.glob("profile-*.bin"))
    first = cache.read_bytes()
    assert main(["ground-state", "--out", str(out)]) == 0
    assert cache.read_bytes() == first
    summary = io.read_json(out / "ground_state.json")
    assert summary["from_cache"] is True
    assert summary["U0"] == pytest.approx(1.02149304, rel=1e-6)
    assert json.loads((out / "config.json").read_text())["out"] == str(out)
    assert "U(0)=" in capsys.readouterr().out


def test_invalid_alpha_exits_with_config_error(tmp_path, capsys):
    cfg = write_config(tmp_path, {"potential": {"family": "min_bump", "params": {"alpha": 2.5}}})
    assert main(["ground-state", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "alpha" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_unreadable_config_exits_2(tmp_path):
    assert main(["reduce", "--config", str(tmp_path / "missing.json")]) == 2


def test_pure_decay_scan_finds_no_critical_points(tmp_path):
    cfg = write_config(tmp_path, {"potential": {"family": "pure_decay", "params": {}}, "eps": [0.1]})
    out = tmp_path / "out"
    assert main(["scan", "--config", str(cfg), "--out", str(out), "--threads", "2"]) == 0
    crit = io.read_json(out / "critical_points.json")["critical_points"]
    assert crit == {"0.1": []}
    rows = io.read_csv(out / "scan-eps0.1.csv")
    assert len(rows) == 27 and all(r["error"] == "" for r in rows)
