"""Fixed-step simulator of a PV / micro-hydro microgrid with a shunt active power filter."""

from .analysis import HarmonicSpectrum, power_metrics, spectrum, thd
from .grid import ScenarioConfig, SimulationTrace, load_config, run
from .report import ReportSummary, summarize

__version__ = "0.1.0"

__all__ = [
    "HarmonicSpectrum",
    "ReportSummary",
    "ScenarioConfig",
    "SimulationTrace",
    "load_config",
    "power_metrics",
    "run",
    "spectrum",
    "summarize",
    "thd",
]
