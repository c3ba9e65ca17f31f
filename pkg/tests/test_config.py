"""Configuration registry, file format, presets, and validation."""

import pytest

from uavnetsim.config import (
    Config,
    ConfigError,
    dump_scenario,
    load_scenario,
    parse_config,
)


def test_defaults():
    cfg = Config()
    assert cfg["scenario.technology"] == "wifi"
    assert cfg["wifi.slot_us"] == 9
    assert cfg["wifi.sifs_us"] == 16
    assert cfg["wifi.difs_us"] == 34
    assert cfg["wifi.cw_min"] == 15
    assert cfg["wifi.cw_max"] == 1023
    assert cfg["transport.mss"] == 1460
    assert cfg["transport.min_rto_ms"] == 200
    assert cfg["lte.n_prb"] == 100
    assert cfg["lte.sr_period_ms"] == 5
    assert cfg["telemetry.freq_hz"] == 10.0
    assert cfg["shadowing.sigma_db"] == 1.5
    assert cfg["scenario.seeds"] == (0,)


def test_noise_floor():
    cfg = Config()
    assert cfg.noise_floor_dbm(20e6) == pytest.approx(-93.9897, abs=1e-4)
    assert cfg.copy(**{}).noise_floor_dbm(10e6) == pytest.approx(-97.0, abs=1e-9)


def test_unknown_key():
    cfg = Config()
    with pytest.raises(ConfigError, match="unknown config key"):
        cfg["wifi.bogus"]
    with pytest.raises(ConfigError, match="unknown config key"):
        cfg.set("wifi.bogus", 1)
    assert "wifi.slot_us" in cfg
    assert "wifi.bogus" not in cfg


def test_range_and_choice_errors():
    cfg = Config()
    with pytest.raises(ConfigError, match="ground.n_nodes"):
        cfg.set("ground.n_nodes", -1)
    with pytest.raises(ConfigError, match="above maximum"):
        cfg.set("uav.speed_mps", 100.0)
    with pytest.raises(ConfigError, match="not one of"):
        cfg.set("scenario.technology", "zigbee")


def test_string_coercion():
    cfg = Config()
    cfg.set("wifi.slot_us", "10")
    assert cfg["wifi.slot_us"] == 10
    cfg.set("uav.speed_mps", "2.5")
    assert cfg["uav.speed_mps"] == 2.5
    cfg.set("metrics.record_exogenous", "yes")
    assert cfg["metrics.record_exogenous"] is True
    cfg.set("metrics.record_exogenous", "off")
    assert cfg["metrics.record_exogenous"] is False
    cfg.set("scenario.seeds", "1,2,3")
    assert cfg["scenario.seeds"] == (1, 2, 3)
    cfg.set("sweep.values", "2,5.5")
    assert cfg["sweep.values"] == (2.0, 5.5)


def test_int_accepts_whole_float_only():
    cfg = Config()
    cfg.set("wifi.slot_us", 9.0)
    assert cfg["wifi.slot_us"] == 9
    with pytest.raises(ConfigError, match="not an integer"):
        cfg.set("wifi.slot_us", 9.5)


def test_parse_comments_and_errors():
    cfg = parse_config("""
        # a comment
        wifi.slot_us = 10   # trailing comment

        uav.speed_mps = 2.0
    """)
    assert cfg["wifi.slot_us"] == 10
    assert cfg["uav.speed_mps"] == 2.0
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("wifi.bogus = 1")
    with pytest.raises(ConfigError, match="expected 'key = value'"):
        parse_config("wifi.slot_us 10")
    with pytest.raises(ConfigError, match="cannot parse"):
        parse_config("wifi.slot_us = fast")


def test_presets():
    cfg = parse_config("scenario.preset = high_load")
    assert cfg["ground.n_nodes"] == 8
    assert cfg["exogenous.rate_mbps"] == 0.75
    cfg = parse_config("scenario.preset = low_distance")
    assert cfg["uav.trajectory"] == "orbit"
    assert cfg["uav.distance_m"] == 10.0
    assert cfg["uav.altitude_m"] == 10.0
    cfg = parse_config("scenario.preset = high_distance")
    assert cfg["uav.distance_m"] == 40.0
    with pytest.raises(ConfigError, match="unknown preset"):
        parse_config("scenario.preset = mega_load")


def test_preset_combination_and_override():
    cfg = parse_config("""
        scenario.preset = high_load, low_distance
        ground.n_nodes = 2
    """)
    assert cfg["ground.n_nodes"] == 2            # explicit key beats the preset
    assert cfg["exogenous.rate_mbps"] == 0.75
    assert cfg["uav.trajectory"] == "orbit"


def test_round_trip_idempotent(tmp_path):
    cfg = parse_config("""
        scenario.preset = high_load
        scenario.technology = lte
        uav.speed_mps = 12.5
        scenario.seeds = 4,5
        metrics.record_exogenous = true
    """)
    again = parse_config(cfg.to_text())
    assert again == cfg
    assert again.as_dict() == cfg.as_dict()
    path = tmp_path / "scenario.cfg"
    dump_scenario(cfg, path)
    assert load_scenario(path) == cfg


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        load_scenario(tmp_path / "nope.cfg")


def test_copy_leaves_original():
    cfg = Config()
    clone = cfg.copy(**{"wifi.slot_us": 20})
    assert clone["wifi.slot_us"] == 20
    assert cfg["wifi.slot_us"] == 9


def test_cross_validation():
    with pytest.raises(ConfigError, match="telemetry.payload_bytes"):
        parse_config("telemetry.payload_bytes = 2000\ntransport.mss = 1460")
    with pytest.raises(ConfigError, match="wifi.difs_us"):
        parse_config("wifi.difs_us = 10\nwifi.sifs_us = 16")
    with pytest.raises(ConfigError, match="wifi.cw_max"):
        parse_config("wifi.cw_min = 100\nwifi.cw_max = 50")
    with pytest.raises(ConfigError, match="altitude gap"):
        parse_config("uav.trajectory = orbit\nuav.distance_m = 15")
    # same geometry is fine when the orbit clears the altitude gap
    cfg = parse_config("uav.trajectory = orbit\nuav.distance_m = 25")
    assert cfg["uav.distance_m"] == 25.0
