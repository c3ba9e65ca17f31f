"""Scenario configuration: flat dotted-key files, validation, presets.

Format is one `key = value` per line with `#` comments. Every key is
declared in a registry with a type, default, and range; unknown keys and
out-of-range values fail with the offending key path in the message, so a
bad sweep dies before any run starts.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    """Raised for unknown keys, bad types, or out-of-range values."""


@dataclass(frozen=True)
class KeySpec:
    kind: str                       # int | float | str | bool | int_list | float_list
    default: object
    lo: float | None = None
    hi: float | None = None
    choices: tuple[str, ...] | None = None


REGISTRY: dict[str, KeySpec] = {
    # run shape
    "scenario.technology": KeySpec("str", "wifi", choices=("wifi", "lte", "stub")),
    "scenario.preset": KeySpec("str", ""),
    "scenario.horizon_s": KeySpec("float", 30.0, lo=0.001, hi=3600.0),
    "scenario.seeds": KeySpec("int_list", (0,)),
    "sweep.param": KeySpec("str", ""),
    "sweep.values": KeySpec("float_list", ()),
    # geometry and motion
    "uav.trajectory": KeySpec("str", "rectangle", choices=("rectangle", "orbit")),
    "uav.speed_mps": KeySpec("float", 5.0, lo=0.1, hi=50.0),
    "uav.altitude_m": KeySpec("float", 30.0, lo=1.0, hi=500.0),
    "uav.dwell_s": KeySpec("float", 2.0, lo=0.0, hi=60.0),
    "uav.distance_m": KeySpec("float", 20.0, lo=1.0, hi=500.0),
    "uav.rect_width_m": KeySpec("float", 54.0, lo=1.0, hi=1000.0),
    "uav.rect_depth_m": KeySpec("float", 40.0, lo=1.0, hi=1000.0),
    "uav.battery_drain_per_s": KeySpec("float", 0.001, lo=0.0, hi=1.0),
    "bs.height_m": KeySpec("float", 10.0, lo=1.0, hi=200.0),
    "ground.n_nodes": KeySpec("int", 0, lo=0, hi=64),
    "ground.radius_m": KeySpec("float", 15.0, lo=1.0, hi=500.0),
    # channel
    "pathloss.regime": KeySpec("str", "nlos", choices=("los", "nlos")),
    "pathloss.c_offset_db": KeySpec("float", 0.0, lo=-50.0, hi=50.0),
    "pathloss.diffraction_coeff_db": KeySpec("float", 25.5, lo=0.0, hi=100.0),
    "pathloss.diffraction_floor_db": KeySpec("float", -11.0, lo=-60.0, hi=60.0),
    "pathloss.l_ew_db": KeySpec("float", 0.0, lo=0.0, hi=60.0),
    "pathloss.g_h_db_per_m": KeySpec("float", -0.1, lo=-5.0, hi=0.0),
    "pathloss.g_h_cap_db": KeySpec("float", -6.0, lo=-30.0, hi=0.0),
    "shadowing.sigma_db": KeySpec("float", 1.5, lo=0.0, hi=12.0),
    "channel.softness_db": KeySpec("float", 1.0, lo=0.01, hi=10.0),
    "radio.noise_figure_db": KeySpec("float", 7.0, lo=0.0, hi=20.0),
    # wifi
    "wifi.freq_ghz": KeySpec("float", 2.4, lo=0.1, hi=100.0),
    "wifi.tx_power_dbm": KeySpec("float", 20.0, lo=-20.0, hi=40.0),
    "wifi.slot_us": KeySpec("int", 9, lo=1, hi=100),
    "wifi.sifs_us": KeySpec("int", 16, lo=1, hi=100),
    "wifi.difs_us": KeySpec("int", 34, lo=2, hi=200),
    "wifi.cw_min": KeySpec("int", 15, lo=1, hi=4095),
    "wifi.cw_max": KeySpec("int", 1023, lo=1, hi=65535),
    "wifi.retry_limit": KeySpec("int", 7, lo=0, hi=32),
    "wifi.queue_frames": KeySpec("int", 400, lo=1, hi=100000),
    # lte
    "lte.freq_ghz": KeySpec("float", 2.0, lo=0.1, hi=100.0),
    "lte.ue_tx_power_dbm": KeySpec("float", 23.0, lo=-20.0, hi=40.0),
    "lte.enb_tx_power_dbm": KeySpec("float", 30.0, lo=-20.0, hi=50.0),
    "lte.bandwidth_mhz": KeySpec("float", 20.0, lo=1.4, hi=100.0),
    "lte.n_prb": KeySpec("int", 100, lo=6, hi=500),
    "lte.overhead": KeySpec("float", 0.25, lo=0.0, hi=0.9),
    "lte.sr_period_ms": KeySpec("int", 5, lo=0, hi=80),
    "lte.sr_grant_lag_ttis": KeySpec("int", 1, lo=0, hi=16),
    "lte.grant_to_tx_ttis": KeySpec("int", 4, lo=0, hi=16),
    "lte.ul_decode_ttis": KeySpec("int", 3, lo=0, hi=16),
    "lte.dl_decode_ttis": KeySpec("int", 2, lo=0, hi=16),
    "lte.cqi_period_ms": KeySpec("int", 10, lo=1, hi=1000),
    "lte.rlc_mode": KeySpec("str", "am", choices=("am",)),
    "lte.arq_rtt_ms": KeySpec("int", 8, lo=1, hi=1000),
    "lte.max_retx": KeySpec("int", 4, lo=0, hi=32),
    "lte.rlc_buffer_bytes": KeySpec("int", 1_048_576, lo=1500, hi=64_000_000),
    "lte.pf_window_ttis": KeySpec("int", 100, lo=1, hi=100000),
    # transport
    "transport.mode": KeySpec("str", "reliable", choices=("reliable", "datagram")),
    "transport.mss": KeySpec("int", 1460, lo=100, hi=9000),
    "transport.min_rto_ms": KeySpec("int", 200, lo=1, hi=60000),
    "transport.send_buffer_bytes": KeySpec("int", 262_144, lo=3000, hi=64_000_000),
    # applications
    "telemetry.freq_hz": KeySpec("float", 10.0, lo=0.01, hi=1000.0),
    "telemetry.payload_bytes": KeySpec("int", 128, lo=1, hi=9000),
    "task.size_kb": KeySpec("float", 0.0, lo=0.0, hi=100_000.0),
    "task.period_s": KeySpec("float", 1.0, lo=0.001, hi=3600.0),
    "exogenous.rate_mbps": KeySpec("float", 0.0, lo=0.0, hi=1000.0),
    "exogenous.packet_bytes": KeySpec("int", 800, lo=1, hi=9000),
    # estimation and metrics
    "estimator.mode": KeySpec("str", "zero_order_hold",
                              choices=("zero_order_hold", "constant_velocity")),
    "estimator.error_norm": KeySpec("str", "3d", choices=("3d", "2d")),
    "error.grid_ms": KeySpec("int", 10, lo=1, hi=10000),
    "metrics.record_exogenous": KeySpec("bool", False),
    # stub channel
    "stub.delay_us": KeySpec("int", 0, lo=0, hi=10_000_000),
    "stub.jitter_us": KeySpec("int", 0, lo=0, hi=10_000_000),
    "stub.loss_prob": KeySpec("float", 0.0, lo=0.0, hi=1.0),
}

# Named parameter bundles for the standard operating regimes; applied before
# explicit file keys so a file can override single values.
PRESETS: dict[str, dict[str, object]] = {
    "no_load": {"ground.n_nodes": 0, "exogenous.rate_mbps": 0.0},
    "high_load": {"ground.n_nodes": 8, "exogenous.rate_mbps": 0.75},
    "low_distance": {"uav.trajectory": "orbit", "uav.distance_m": 10.0,
                     "uav.altitude_m": 10.0},
    "high_distance": {"uav.trajectory": "orbit", "uav.distance_m": 40.0,
                      "uav.altitude_m": 10.0},
}


def _parse_scalar(key: str, spec: KeySpec, raw: str):
    raw = raw.strip()
    try:
        if spec.kind == "int":
            return int(raw)
        if spec.kind == "float":
            return float(raw)
        if spec.kind == "bool":
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if spec.kind == "int_list":
            return tuple(int(v) for v in raw.split(",") if v.strip()) if raw else ()
        if spec.kind == "float_list":
            return tuple(float(v) for v in raw.split(",") if v.strip()) if raw else ()
        return raw
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {spec.kind}") from exc


def _check_range(key: str, spec: KeySpec, value) -> None:
    if spec.choices is not None and value not in spec.choices:
        raise ConfigError(f"{key}: {value!r} not one of {spec.choices}")
    scalars = value if isinstance(value, tuple) else (value,)
    for v in scalars:
        if spec.lo is not None and isinstance(v, (int, float)) and v < spec.lo:
            raise ConfigError(f"{key}: {v} below minimum {spec.lo}")
        if spec.hi is not None and isinstance(v, (int, float)) and v > spec.hi:
            raise ConfigError(f"{key}: {v} above maximum {spec.hi}")


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


class Config:
    """Validated key-value view of one scenario."""

    def __init__(self, values: dict | None = None):
        self._values: dict[str, object] = dict(values or {})

    def __getitem__(self, key: str):
        if key in self._values:
            return self._values[key]
        spec = REGISTRY.get(key)
        if spec is None:
            raise ConfigError(f"unknown config key {key!r}")
        return spec.default

    def __contains__(self, key: str) -> bool:
        return key in REGISTRY

    def __eq__(self, other) -> bool:
        return isinstance(other, Config) and self.as_dict() == other.as_dict()

    def set(self, key: str, value) -> None:
        spec = REGISTRY.get(key)
        if spec is None:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(value, str) and spec.kind != "str":
            value = _parse_scalar(key, spec, value)
        if spec.kind == "int" and isinstance(value, float):
            if value != int(value):
                raise ConfigError(f"{key}: {value} is not an integer")
            value = int(value)
        _check_range(key, spec, value)
        self._values[key] = value

    def copy(self, **overrides) -> "Config":
        clone = Config(self._values)
        for key, value in overrides.items():
            clone.set(key, value)
        return clone

    def as_dict(self) -> dict[str, object]:
        return {key: self[key] for key in REGISTRY}

    def to_text(self) -> str:
        lines = [f"{key} = {_fmt_value(self[key])}" for key in sorted(REGISTRY)]
        return "\n".join(lines) + "\n"

    # derived quantities used by several modules
    def noise_floor_dbm(self, bandwidth_hz: float) -> float:
        import math
        return -174.0 + 10.0 * math.log10(bandwidth_hz) + self["radio.noise_figure_db"]


def parse_config(text: str) -> Config:
    """Parse dotted-key lines; presets named by scenario.preset apply first."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = body.partition("=")
        key = key.strip()
        if key not in REGISTRY:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        raw[key] = value.strip()

    cfg = Config()
    preset_field = raw.get("scenario.preset", "")
    for name in (p.strip() for p in preset_field.split(",") if p.strip()):
        preset = PRESETS.get(name)
        if preset is None:
            raise ConfigError(f"scenario.preset: unknown preset {name!r}")
        for key, value in preset.items():
            cfg.set(key, value)
    if preset_field:
        cfg.set("scenario.preset", preset_field)
    for key, value in raw.items():
        if key == "scenario.preset":
            continue
        spec = REGISTRY[key]
        cfg.set(key, _parse_scalar(key, spec, value))
    _cross_validate(cfg)
    return cfg


def _cross_validate(cfg: Config) -> None:
    if cfg["telemetry.payload_bytes"] > cfg["transport.mss"]:
        raise ConfigError("telemetry.payload_bytes: must fit in one transport segment")
    if cfg["wifi.cw_max"] < cfg["wifi.cw_min"]:
        raise ConfigError("wifi.cw_max: must be >= wifi.cw_min")
    if cfg["wifi.difs_us"] <= cfg["wifi.sifs_us"]:
        raise ConfigError("wifi.difs_us: must exceed wifi.sifs_us")
    if cfg["uav.trajectory"] == "orbit":
        dz = abs(cfg["uav.altitude_m"] - cfg["bs.height_m"])
        if cfg["uav.distance_m"] <= dz:
            raise ConfigError("uav.distance_m: orbit distance must exceed the "
                              "altitude gap to the base station")


def load_scenario(path: str | Path) -> Config:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"scenario file {p} does not exist")
    return parse_config(p.read_text())


def dump_scenario(cfg: Config, path: str | Path) -> None:
    Path(path).write_text(cfg.to_text())
