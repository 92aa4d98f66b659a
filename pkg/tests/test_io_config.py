import json
import logging

import numpy as np
import pytest

from choquard_lsr import io
from choquard_lsr.config import DEFAULTS, RunConfig, load_config
from choquard_lsr.errors import ConfigError


def test_profile_cache_roundtrip_is_exact(profile, tmp_path):
    path = io.save_profile(tmp_path / "p.bin", profile, "abc")
    q = io.load_profile(path, "abc")
    assert np.array_equal(q.values, profile.values)
    assert np.array_equal(q.potential_values, profile.potential_values)
    assert q.tail == profile.tail and q.grid == profile.grid
    again = io.save_profile(tmp_path / "q.bin", q, "abc")
    assert again.read_bytes() == path.read_bytes()


def test_corrupt_or_foreign_cache_is_ignored(profile, tmp_path, caplog):
    path = io.save_profile(tmp_path / "p.bin", profile, "abc")
    raw = bytearray(path.read_bytes())
    raw[-5] ^= 0xFF
    bad = tmp_path / "bad.bin"
    bad.write_bytes(bytes(raw))
    with caplog.at_level(logging.WARNING):
        assert io.load_profile(bad, "abc") is None
    assert "checksum" in caplog.text
    assert io.load_profile(path, "other") is None
    (tmp_path / "junk.bin").write_bytes(b"not a cache")
    assert io.load_profile(tmp_path / "junk.bin") is None
    assert io.load_profile(tmp_path / "missing.bin") is None


def test_json_and_csv_carry_hash(tmp_path):
    io.write_json(tmp_path / "a.json", {"x": np.float64(1.5), "v": np.arange(3)}, "h1")
    assert io.read_json(tmp_path / "a.json", "h1")["v"] == [0, 1, 2]
    with pytest.raises(ConfigError):
        io.read_json(tmp_path / "a.json", "h2")
    rows = [{"a": 1.0, "b": "x"}, {"a": 2.5, "b": "y"}]
    p1 = io.write_csv(tmp_path / "a.csv", rows, ["a", "b"], "h1")
    first = p1.read_bytes()
    io.write_csv(tmp_path / "a.csv", rows, ["a", "b"], "h1")
    assert p1.read_bytes() == first
    assert p1.read_text().startswith("# config_hash=h1")
    assert len(io.read_csv(p1, "h1")) == 2
    with pytest.raises(ConfigError):
        io.read_csv(p1, "h2")


def test_atomic_write_leaves_no_temporaries(tmp_path):
    io.atomic_write(tmp_path / "f.txt", "one")
    io.atomic_write(tmp_path / "f.txt", b"two")
    assert (tmp_path / "f.txt").read_text() == "two"
    assert [p.name for p in tmp_path.iterdir()] == ["f.txt"]


def test_defaults_validate_and_hash_is_stable():
    a, b = RunConfig.from_dict(), RunConfig.from_dict({"out": "elsewhere", "threads": 4})
    assert a.hash == b.hash
    assert RunConfig.from_dict({"seed": 1}).hash != a.hash
    assert a["solve"]["fp_tol"] == DEFAULTS["solve"]["fp_tol"]


@pytest.mark.parametrize("override", [
    {"potential": {"family": "min_bump", "params": {"alpha": 2.5}}},
    {"potential": {"family": "nope", "params": {}}},
    {"eps": [0.1, 0.2]},
    {"eps": [1.5]},
    {"box": {"n": 48}},
    {"scan": {"count": 4}},
    {"solve": {"fp_tol": 0.5}},
    {"solve": {"c0": -1}},
    {"bogus": 1},
    {"solve": {"bogus": 1}},
])
def test_invalid_configs_rejected(override):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(override)


def test_load_config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"eps": [0.2, 0.1], "potential": {"family": "max_bump", "params": {}}}))
    cfg = load_config(path, out=str(tmp_path / "o"))
    assert cfg.eps == [0.2, 0.1] and cfg.potential.family == "max_bump"
    path.write_text("{broken")
    with pytest.raises(ConfigError):
        load_config(path)
