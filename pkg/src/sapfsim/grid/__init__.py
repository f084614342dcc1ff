from .config import ScenarioConfig, bundled_scenario, config_from_dict, load_config
from .engine import ALL_CHANNELS, BusModel, Engine, bus_voltage, run, sapf_engaged
from .trace import SimulationTrace

__all__ = [
    "ALL_CHANNELS",
    "BusModel",
    "Engine",
    "ScenarioConfig",
    "SimulationTrace",
    "bundled_scenario",
    "bus_voltage",
    "config_from_dict",
    "load_config",
    "run",
    "sapf_engaged",
]
