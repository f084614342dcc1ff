"""Micro-hydro unit: swing-equation rotor and a quantised dump-load controller."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from ..errors import ConfigurationError, SimulationBlowup


@dataclass(frozen=True)
class HydroGenerator:
    rated_power: float = 50_000.0
    mech_power: float = 50_000.0
    inertia_h: float = 2.0
    speed_pu: float = 1.0
    terminal_voltage_pu: float = 1.0

    def __post_init__(self) -> None:
        if self.rated_power <= 0.0 or self.inertia_h <= 0.0:
            raise ConfigurationError("rated power and inertia must be positive", key="[mhp].inertia_h")
        if self.terminal_voltage_pu != 1.0:
            raise ConfigurationError("ideal AVR holds the terminal at 1 pu", key="[mhp].terminal_voltage_pu")


def generator_step(g: HydroGenerator, p_elec: float, p_dump: float, dt: float) -> HydroGenerator:
    if dt <= 0.0:
        raise ConfigurationError("dt must be positive", key="dt")
    accel = (g.mech_power - p_elec - p_dump) / (2.0 * g.inertia_h * g.rated_power)
    speed = g.speed_pu + accel * dt
    if not speed > 0.0:
        raise SimulationBlowup(f"rotor speed collapsed to {speed:.4g} pu")
    return replace(g, speed_pu=speed)


def _round_half_up(x: float) -> int:
    # the tolerance keeps ties like 100*(1.035 - 1.0) = 3.4999999999999 rounding up
    return math.floor(x + 0.5 + 1e-9)


@dataclass(frozen=True)
class ElcState:
    """Bank of ``n_steps`` equal dump resistors switched on speed error."""

    n_steps: int = 8
    step_power: float = 6250.0
    deadband: float = 0.005
    gain: float = 800.0
    active_mask: int = 0

    def __post_init__(self) -> None:
        if self.n_steps < 1 or self.step_power < 0.0 or self.deadband < 0.0 or self.gain <= 0.0:
            raise ConfigurationError("invalid ELC settings", key="[elc]")
        if not 0 <= self.active_mask < (1 << self.n_steps):
            raise ConfigurationError("active_mask wider than the bank", key="[elc].active_mask")

    @property
    def active_steps(self) -> int:
        return bin(self.active_mask).count("1")

    @property
    def dump_power(self) -> float:
        return self.active_steps * self.step_power


def elc_dispatch(e: ElcState, speed_pu: float) -> ElcState:
    error = speed_pu - 1.0
    if abs(error) <= e.deadband:
        return e
    target = min(max(_round_half_up(e.gain * error), 0), e.n_steps)
    return replace(e, active_mask=(1 << target) - 1)
