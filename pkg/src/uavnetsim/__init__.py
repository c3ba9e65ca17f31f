"""Discrete-event simulator of UAV control and offload traffic over WiFi, LTE and a null link."""

from uavnetsim.config import Config, ConfigError, load_scenario, parse_config
from uavnetsim.core import Engine, SimTimeError
from uavnetsim.scenario import RunResult, run_scenario
from uavnetsim.sweep import compare_report, run_sweep

__version__ = "0.1.0"

__all__ = [
    "Config",
    "ConfigError",
    "Engine",
    "RunResult",
    "SimTimeError",
    "__version__",
    "compare_report",
    "load_scenario",
    "parse_config",
    "run_scenario",
    "run_sweep",
]
