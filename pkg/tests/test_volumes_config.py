"""Scalar-volume file format and the key=value config layer."""

import numpy as np
import pytest

from voxdosim.config import (ConfigError, Option, config_hash,
                             format_resolved, parse_config_text,
                             parse_overrides, resolve)
from voxdosim.volumes import VolumeFormatError, load_volume, save_volume


def test_volume_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    comps = {
        "point_sar": rng.random((4, 5, 6)).astype(np.float32),
        "temperature_k": rng.random((4, 5, 6)),
    }
    path = tmp_path / "v.vxv"
    save_volume(path, {"point_sar": comps["point_sar"],
                       "temperature_k": comps["temperature_k"]},
                0.001, meta={"kind": "demo"}, dtype="f8")
    out, res, meta = load_volume(path)
    assert res == 0.001
    assert meta["kind"] == "demo"
    assert set(out) == {"point_sar", "temperature_k"}
    # f8 storage must be lossless for the f8 input component
    np.testing.assert_array_equal(out["temperature_k"],
                                  comps["temperature_k"])


def test_volume_f4_storage_width(tmp_path):
    data = np.linspace(0.0, 1.0, 24).reshape(2, 3, 4)
    path = tmp_path / "f4.vxv"
    save_volume(path, {"a": data}, 0.002, dtype="f4")
    out, _, _ = load_volume(path)
    np.testing.assert_array_equal(out["a"], data.astype(np.float32))


def test_volume_rejects_mismatched_shapes(tmp_path):
    with pytest.raises(ValueError):
        save_volume(tmp_path / "x.vxv",
                    {"a": np.zeros((2, 2, 2)), "b": np.zeros((2, 2, 3))},
                    0.001)


def test_volume_rejects_garbage(tmp_path):
    path = tmp_path / "junk.vxv"
    path.write_bytes(b"NOTAVOLUME 1\nend_header\n")
    with pytest.raises(VolumeFormatError):
        load_volume(path)


def test_volume_rejects_truncation(tmp_path):
    path = tmp_path / "t.vxv"
    save_volume(path, {"a": np.ones((3, 3, 3))}, 0.001, dtype="f8")
    data = path.read_bytes()
    path.write_bytes(data[:-9])
    with pytest.raises(VolumeFormatError):
        load_volume(path)


# ---------------------------------------------------------------- config layer

SCHEMA = {
    "alpha": Option("float", 1.5, minimum=0.0),
    "count": Option("int", minimum=1),          # required
    "mode": Option("choice", "fast", choices=("fast", "careful")),
    "flag": Option("bool", False),
    "steps": Option("list_float", [1.0, 2.0], minimum=0.0),
    "label": Option("str", "x"),
}


def test_parse_and_resolve_happy_path():
    raw = parse_config_text("""
    # a comment
    alpha = 2.25
    count = 7     # trailing comment
    steps = 0.5, 1.5, 2.5
    flag = true
    """)
    cfg = resolve(SCHEMA, raw)
    assert cfg["alpha"] == 2.25
    assert cfg["count"] == 7
    assert cfg["steps"] == [0.5, 1.5, 2.5]
    assert cfg["flag"] is True
    assert cfg["mode"] == "fast"  # default applied


def test_all_problems_reported_at_once():
    raw = parse_config_text("alpha = -3\nmode = turbo\nbogus = 1\n")
    with pytest.raises(ConfigError) as err:
        resolve(SCHEMA, raw)
    text = str(err.value)
    assert "alpha" in text          # minimum violated
    assert "turbo" in text or "mode" in text
    assert "bogus" in text          # unknown key
    assert "count" in text          # missing required
    assert len(err.value.problems) == 4


def test_duplicate_keys_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("a = 1\na = 2\n")


def test_overrides_win():
    raw = parse_config_text("count = 3\nalpha = 1.0\n")
    cfg = resolve(SCHEMA, raw, parse_overrides(["alpha=9.5", "mode=careful"]))
    assert cfg["alpha"] == 9.5
    assert cfg["mode"] == "careful"
    assert cfg["count"] == 3


def test_override_syntax_errors():
    with pytest.raises(ConfigError):
        parse_overrides(["no_equals_sign"])


def test_hash_is_order_independent_and_value_sensitive():
    a = resolve(SCHEMA, parse_config_text("count = 2\nalpha = 1.25\n"))
    b = resolve(SCHEMA, parse_config_text("alpha = 1.25\ncount = 2\n"))
    c = resolve(SCHEMA, parse_config_text("alpha = 1.2500001\ncount = 2\n"))
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)


def test_format_resolved_round_trips_through_parse():
    cfg = resolve(SCHEMA, parse_config_text("count = 5\nflag = yes\n"))
    lines = format_resolved(cfg)
    assert any(line.startswith("count=") for line in lines)
    assert sorted(line.split("=")[0] for line in lines) == sorted(SCHEMA)
