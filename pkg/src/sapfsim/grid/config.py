"""Declarative scenario description and its TOML loader."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..errors import ConfigurationError

MIN_DT = 1e-6
MAX_DT = 50e-6


@dataclass
class BusSection:
    kind: str = "stiff"
    v_ll_rms: float = 400.0
    frequency: float = 50.0
    series_r: float = 0.0
    series_l: float = 0.0

    @property
    def phase_peak(self) -> float:
        return self.v_ll_rms * math.sqrt(2.0) / math.sqrt(3.0)

    @property
    def line_peak(self) -> float:
        return self.v_ll_rms * math.sqrt(2.0)


@dataclass
class PvSection:
    enabled: bool = True
    p_mpp_kw: float = 50.0
    v_mpp: float = 640.0
    v_oc: float = 760.0
    i_sc: float = 83.45
    irradiance: float = 1000.0
    mppt_step: float = 2.0
    mppt_period: float = 1e-3
    v_ref_init: float = 600.0
    c_dc: float = 5e-3
    kp: float = 15.0
    ki: float = 5000.0
    i_d_max: float = 250.0


@dataclass
class MhpSection:
    enabled: bool = True
    rated_kw: float = 50.0
    mech_kw: float = 50.0
    inertia_h: float = 2.0


@dataclass
class ElcSection:
    enabled: bool = True
    n_steps: int = 8
    step_kw: float = 6.25
    deadband: float = 0.005
    gain: float = 800.0
    period: float = 5e-3
    initial_steps: int = 0


@dataclass
class RectifierSection:
    enabled: bool = True
    dc_resistance: float = 10.0
    dc_capacitance: float = 5000e-6
    ac_inductance: float = 2e-3
    ac_resistance: float = 0.05
    diode_on_resistance: float = 1e-3
    diode_off_resistance: float = 1e6
    v_dc_init: float = 0.0


@dataclass
class LinearSection:
    enabled: bool = True
    power_kw: float = 65.0
    pf: float = 0.95
    # optional load step: power changes by step_kw (negative rejects load) at step_time
    step_time: float = -1.0
    step_kw: float = 0.0


@dataclass
class SapfSection:
    enabled: bool = True
    v_dc_ref: float = 800.0
    c_dc: float = 4700e-6
    l_filter: float = 2.5e-3
    r_filter: float = 0.05
    band: float = 2.0
    hp_cutoff_hz: float = 10.0
    kp: float = 120.0
    ki: float = 900.0
    p_loss_limit_kw: float = 15.0


@dataclass
class SimSection:
    name: str = "scenario"
    dt: float = 20e-6
    t_end: float = 1.0
    sapf_engage_time: float = 0.5
    record_channels: list = field(default_factory=list)


_SECTIONS = {
    "bus": BusSection,
    "pv": PvSection,
    "mhp": MhpSection,
    "elc": ElcSection,
    "rectifier": RectifierSection,
    "linear": LinearSection,
    "sapf": SapfSection,
    "sim": SimSection,
}


@dataclass
class ScenarioConfig:
    bus: BusSection = field(default_factory=BusSection)
    pv: PvSection = field(default_factory=PvSection)
    mhp: MhpSection = field(default_factory=MhpSection)
    elc: ElcSection = field(default_factory=ElcSection)
    rectifier: RectifierSection = field(default_factory=RectifierSection)
    linear: LinearSection = field(default_factory=LinearSection)
    sapf: SapfSection = field(default_factory=SapfSection)
    sim: SimSection = field(default_factory=SimSection)

    @property
    def n_steps(self) -> int:
        return int(round(self.sim.t_end / self.sim.dt))

    def validate(self) -> "ScenarioConfig":
        sim, bus = self.sim, self.bus
        if not (bus.frequency > 0.0):
            raise ConfigurationError("frequency must be positive", key="[bus].frequency")
        if not (bus.v_ll_rms >= 0.0):
            raise ConfigurationError("bus voltage must be non-negative", key="[bus].v_ll_rms")
        if bus.kind not in ("stiff", "thevenin"):
            raise ConfigurationError(f"unknown bus kind {bus.kind!r}", key="[bus].kind")
        if bus.series_r < 0.0 or bus.series_l < 0.0:
            raise ConfigurationError("series impedance must be non-negative", key="[bus].series_r")
        if not (MIN_DT <= sim.dt <= MAX_DT):
            raise ConfigurationError(f"dt = {sim.dt:g} s outside [1e-6, 5e-5] s", key="[sim].dt")
        if not (sim.t_end * bus.frequency >= 10.0 - 1e-9):
            raise ConfigurationError("t_end must cover at least 10 fundamental cycles", key="[sim].t_end")
        if self.sapf.enabled and not (0.0 <= sim.sapf_engage_time <= sim.t_end):
            raise ConfigurationError("sapf_engage_time must lie in [0, t_end]", key="[sim].sapf_engage_time")
        if self.rectifier.enabled and sim.dt > MAX_DT:
            raise ConfigurationError("rectifier needs dt <= 50 us", key="[sim].dt")
        if self.elc.enabled and not self.mhp.enabled:
            raise ConfigurationError("the ELC needs the micro-hydro unit", key="[elc].enabled")
        if self.elc.period < sim.dt:
            raise ConfigurationError("ELC period shorter than dt", key="[elc].period")
        if self.pv.mppt_period < sim.dt:
            raise ConfigurationError("MPPT period shorter than dt", key="[pv].mppt_period")
        if self.sapf.enabled and self.sapf.v_dc_ref <= bus.line_peak:
            raise ConfigurationError(
                "v_dc_ref must exceed the peak line-line voltage", key="[sapf].v_dc_ref"
            )
        if self.pv.p_mpp_kw < 0.0 or self.pv.irradiance < 0.0:
            raise ConfigurationError("PV rating and irradiance must be non-negative", key="[pv].p_mpp_kw")
        if not (0.0 < self.linear.pf <= 1.0):
            raise ConfigurationError("pf must be in (0, 1]", key="[linear].pf")
        if self.linear.enabled and self.linear.power_kw + min(self.linear.step_kw, 0.0) <= 0.0:
            raise ConfigurationError("linear load must stay positive after its step", key="[linear].step_kw")
        return self


def _coerce(section: str, key: str, value: Any, default: Any) -> Any:
    where = f"[{section}].{key}"
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"expected a boolean, got {value!r}", key=where)
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"expected an integer, got {value!r}", key=where)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"expected a number, got {value!r}", key=where)
        value = float(value)
        if not math.isfinite(value):
            raise ConfigurationError("value must be finite", key=where)
        return value
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigurationError(f"expected a string, got {value!r}", key=where)
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigurationError("expected a list of strings", key=where)
        return list(value)
    return value


def config_from_dict(data: dict, name: str | None = None) -> ScenarioConfig:
    """Build and validate a config; unknown sections or keys are errors."""
    parts = {}
    for section, payload in data.items():
        if section not in _SECTIONS:
            raise ConfigurationError(f"unknown section [{section}]", key=f"[{section}]")
        if not isinstance(payload, dict):
            raise ConfigurationError("expected a table", key=f"[{section}]")
        cls = _SECTIONS[section]
        defaults = cls()
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in payload.items():
            if key not in known:
                raise ConfigurationError(f"unknown key {key!r}", key=f"[{section}].{key}")
            kwargs[key] = _coerce(section, key, value, getattr(defaults, key))
        parts[section] = cls(**kwargs)
    cfg = ScenarioConfig(**parts)
    if name is not None and "name" not in data.get("sim", {}):
        cfg.sim.name = name
    return cfg.validate()


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}", key=str(path)) from exc
    return config_from_dict(data, name=path.stem)


def bundled_scenario(name: str) -> Path:
    """Path of one of the scenario files shipped with the package."""
    path = Path(__file__).resolve().parent.parent / "scenarios" / f"{name}.toml"
    if not path.exists():
        raise FileNotFoundError(path)
    return path
