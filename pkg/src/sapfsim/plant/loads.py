"""Linear R-L consumer load and three-phase diode-bridge rectifier load.

Both models use backward Euler on their inductor and capacitor states and
draw balanced three-wire currents from the bus (floating star point).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import ConfigurationError
from ..signal import ThreePhase

MAX_DIODE_ITERATIONS = 10


@dataclass
class LinearLoad:
    resistance_per_phase: float
    inductance_per_phase: float = 0.0
    i_phase: ThreePhase = ThreePhase(0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if not self.resistance_per_phase > 0.0:
            raise ConfigurationError("resistance must be positive", key="[linear].resistance")
        if self.inductance_per_phase < 0.0:
            raise ConfigurationError("inductance must be non-negative", key="[linear].inductance")

    @classmethod
    def from_rating(cls, power_w: float, pf: float, v_ll_rms: float, frequency: float) -> "LinearLoad":
        """Series R-L star load drawing ``power_w`` at lagging ``pf``."""
        if not (power_w > 0.0 and 0.0 < pf <= 1.0):
            raise ConfigurationError("need power > 0 and 0 < pf <= 1", key="[linear].power_kw")
        v_ph = v_ll_rms / math.sqrt(3.0)
        z = v_ph * v_ph * pf / (power_w / 3.0)
        r = z * pf
        x = z * math.sqrt(max(0.0, 1.0 - pf * pf))
        return cls(r, x / (2.0 * math.pi * frequency))


def linear_load_step(load: LinearLoad, v_bus: ThreePhase, dt: float) -> tuple[ThreePhase, LinearLoad]:
    """Advance the load one step; mutates and returns ``load`` alongside its currents."""
    r, l = load.resistance_per_phase, load.inductance_per_phase
    k = l / dt
    g = 1.0 / (r + k)
    ia, ib, ic = load.i_phase
    ha, hb, hc = v_bus.a + k * ia, v_bus.b + k * ib, v_bus.c + k * ic
    vn = (ha + hb + hc) / 3.0
    i = ThreePhase(g * (ha - vn), g * (hb - vn), g * (hc - vn))
    load.i_phase = i
    return i, load


@dataclass
class RectifierLoad:
    """Six-diode bridge with per-phase series R-L and a parallel R-C dc side.

    Diodes are piecewise resistances; the conduction pattern is found by a
    per-step fixed-point iteration seeded with the previous step's pattern.
    """

    dc_resistance: float = 10.0
    dc_capacitance: float = 5000e-6
    ac_inductance_per_phase: float = 1e-3
    ac_resistance_per_phase: float = 0.05
    diode_on_resistance: float = 1e-3
    diode_off_resistance: float = 1e6
    v_dc: float = 0.0
    i_phase: ThreePhase = ThreePhase(0.0, 0.0, 0.0)
    upper_on: list = field(default_factory=lambda: [False, False, False])
    lower_on: list = field(default_factory=lambda: [False, False, False])
    nonconverged_steps: int = 0
    # node potentials of the last solve (dc+ and dc- rails, bridge-side phase nodes)
    rail_p: float = 0.0
    rail_n: float = 0.0
    nodes: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if self.dc_resistance <= 0.0 or self.dc_capacitance <= 0.0:
            raise ConfigurationError("dc R and C must be positive", key="[rectifier].dc_resistance")
        if self.ac_inductance_per_phase < 0.0 or self.ac_resistance_per_phase < 0.0:
            raise ConfigurationError("series impedance must be non-negative", key="[rectifier].ac_inductance")
        if self.ac_inductance_per_phase == 0.0 and self.ac_resistance_per_phase == 0.0:
            raise ConfigurationError("series impedance must be non-zero", key="[rectifier].ac_resistance")
        if self.diode_off_resistance < 1e6 * self.diode_on_resistance:
            raise ConfigurationError("diode off/on resistance ratio must be >= 1e6", key="[rectifier].diode_off_resistance")
        if self.v_dc < 0.0:
            raise ConfigurationError("v_dc must be non-negative", key="[rectifier].v_dc")

    def diode_currents(self) -> tuple[list[float], list[float]]:
        """Forward currents of the upper and lower diodes at the last solve."""
        gon, goff = 1.0 / self.diode_on_resistance, 1.0 / self.diode_off_resistance
        up = [(gon if self.upper_on[k] else goff) * (self.nodes[k] - self.rail_p) for k in range(3)]
        lo = [(gon if self.lower_on[k] else goff) * (self.rail_n - self.nodes[k]) for k in range(3)]
        return up, lo


def rectifier_step(r: RectifierLoad, v_bus: ThreePhase, dt: float) -> tuple[ThreePhase, RectifierLoad]:
    """Advance the bridge one step; mutates and returns ``r`` alongside the phase currents.

    Nodal unknowns are the bridge-side phase nodes x_k and the dc rails p, n
    (all referred to the source star point). Each x_k is eliminated
    analytically, leaving a 2x2 solve for the rails per iteration.
    """
    kl = r.ac_inductance_per_phase / dt
    gl = 1.0 / (r.ac_resistance_per_phase + kl)
    gc = r.dc_capacitance / dt
    gdc = gc + 1.0 / r.dc_resistance
    gon, goff = 1.0 / r.diode_on_resistance, 1.0 / r.diode_off_resistance
    v = (v_bus.a, v_bus.b, v_bus.c)
    i_prev = r.i_phase
    src = [gl * (v[k] + kl * i_prev[k]) for k in range(3)]
    ich = gc * r.v_dc
    # an "on" diode may carry reverse current up to the total off-state leakage;
    # this happens when the rails float (no line-line voltage above v_dc)
    v_span = 2.0 * max(abs(v[0]), abs(v[1]), abs(v[2])) + r.v_dc
    slack = 6.0 * v_span * goff / gon

    up = list(r.upper_on)
    lo = list(r.lower_on)
    converged = False
    for _ in range(MAX_DIODE_ITERATIONS):
        gu = [gon if up[k] else goff for k in range(3)]
        gd = [gon if lo[k] else goff for k in range(3)]
        den = [gl + gu[k] + gd[k] for k in range(3)]
        a11 = -gdc
        a12 = gdc
        a22 = -gdc
        b1 = -ich
        b2 = ich
        for k in range(3):
            inv = 1.0 / den[k]
            a11 += gu[k] * gu[k] * inv - gu[k]
            a12 += gu[k] * gd[k] * inv
            a22 += gd[k] * gd[k] * inv - gd[k]
            b1 -= gu[k] * src[k] * inv
            b2 -= gd[k] * src[k] * inv
        det = a11 * a22 - a12 * a12
        p = (b1 * a22 - a12 * b2) / det
        n = (a11 * b2 - a12 * b1) / det
        x = [(src[k] + gu[k] * p + gd[k] * n) / den[k] for k in range(3)]
        new_up = [(x[k] - p >= -slack) if up[k] else (x[k] > p) for k in range(3)]
        new_lo = [(n - x[k] >= -slack) if lo[k] else (n > x[k]) for k in range(3)]
        if new_up == up and new_lo == lo:
            converged = True
            break
        up, lo = new_up, new_lo
    if not converged:
        r.nonconverged_steps += 1
        # keep the pattern actually used for the last solve
        up = [gu[k] == gon for k in range(3)]
        lo = [gd[k] == gon for k in range(3)]

    ia = gl * v[0] + gl * kl * i_prev[0] - gl * x[0]
    ib = gl * v[1] + gl * kl * i_prev[1] - gl * x[1]
    # three-wire: the third current follows from KCL at the floating bridge
    i = ThreePhase(ia, ib, -ia - ib)
    r.i_phase = i
    r.v_dc = max(p - n, 0.0)
    r.upper_on, r.lower_on = up, lo
    r.rail_p, r.rail_n, r.nodes = p, n, (x[0], x[1], x[2])
    return i, r
