"""Shunt active power filter: p-q reference generation, hysteresis gating, inverter.

Currents handled here follow the injection convention: ``i_inj`` flows from
the filter into the PCC, so the source sees ``i_load - i_inj``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import ConfigurationError, DegenerateVoltageError, SimulationBlowup
from .signal import (
    AlphaBeta,
    FirstOrderFilter,
    PiController,
    ThreePhase,
    clarke,
    inverse_clarke,
)

MIN_VOLTAGE_NORM_SQ = 1.0


class PqSample(NamedTuple):
    p: float
    q: float


def compute_pq(v: AlphaBeta, i: AlphaBeta) -> PqSample:
    """Instantaneous real and imaginary power; ``q > 0`` for lagging current."""
    return PqSample(
        v.alpha * i.alpha + v.beta * i.beta,
        v.beta * i.alpha - v.alpha * i.beta,
    )


def reference_currents(v: AlphaBeta, p_comp: float, q_comp: float) -> AlphaBeta:
    """Stationary-frame currents carrying ``(p_comp, q_comp)`` at voltage ``v``."""
    norm = v.alpha * v.alpha + v.beta * v.beta
    if norm < MIN_VOLTAGE_NORM_SQ:
        raise DegenerateVoltageError(f"|v_ab|^2 = {norm:.3g} V^2 is too small to invert p-q")
    return AlphaBeta(
        (v.alpha * p_comp + v.beta * q_comp) / norm,
        (v.beta * p_comp - v.alpha * q_comp) / norm,
    )


@dataclass
class SapfController:
    hp_filter: FirstOrderFilter
    dc_pi: PiController
    v_dc_ref: float = 800.0
    band: float = 2.0
    # diagnostics of the last evaluation, kept for tracing
    last_pq: PqSample = PqSample(0.0, 0.0)
    last_p_loss: float = 0.0
    primed: bool = False

    def __post_init__(self) -> None:
        if self.band <= 0.0:
            raise ConfigurationError("hysteresis band must be positive", key="[sapf].band")
        if self.hp_filter.kind != "high_pass":
            raise ConfigurationError("the p filter must be a high-pass", key="[sapf].hp_cutoff_hz")

    @classmethod
    def build(
        cls,
        dt: float,
        v_dc_ref: float = 800.0,
        band: float = 2.0,
        hp_cutoff_hz: float = 10.0,
        kp: float = 120.0,
        ki: float = 900.0,
        p_loss_limit: float = 15_000.0,
    ) -> "SapfController":
        return cls(
            hp_filter=FirstOrderFilter(hp_cutoff_hz, dt, "high_pass"),
            dc_pi=PiController(kp, ki, dt, (-p_loss_limit, p_loss_limit)),
            v_dc_ref=v_dc_ref,
            band=band,
        )


def sapf_reference(ctrl: SapfController, v_bus: ThreePhase, i_load: ThreePhase, v_dc: float) -> ThreePhase:
    """Injection reference that leaves the source with the mean load power only.

    The dc-link regulator output is the power the filter must absorb to hold
    ``v_dc`` at its reference, so it is subtracted from the oscillating power.
    The high-pass state is seeded with the first sample it sees, which makes
    engagement bumpless.
    """
    v_ab = clarke(v_bus)
    pq = compute_pq(v_ab, clarke(i_load))
    if not ctrl.primed:
        ctrl.hp_filter.reset(pq.p)
        ctrl.primed = True
    p_osc = ctrl.hp_filter.step(pq.p)
    p_loss = ctrl.dc_pi.step(ctrl.v_dc_ref - v_dc)
    ctrl.last_pq = pq
    ctrl.last_p_loss = p_loss
    return inverse_clarke(reference_currents(v_ab, p_osc - p_loss, pq.q))


def hysteresis_gate(i_actual: float, i_ref: float, band: float, gate_prev: int) -> int:
    err = i_actual - i_ref
    if err > band:
        return 0
    if err < -band:
        return 1
    return gate_prev


@dataclass
class SapfInverter:
    v_dc: float
    c_dc: float = 4700e-6
    l_filter: float = 2.5e-3
    r_filter: float = 0.05
    i_inj: ThreePhase = ThreePhase(0.0, 0.0, 0.0)
    gates: tuple = (0, 0, 0)
    # power drawn from the dc link during the last step (sum of leg voltage * current)
    last_leg_power: float = field(default=0.0, repr=False)

    def __post_init__(self) -> None:
        if self.v_dc < 0.0:
            raise ConfigurationError("v_dc must be non-negative", key="[sapf].v_dc")
        if self.c_dc <= 0.0 or self.l_filter <= 0.0 or self.r_filter < 0.0:
            raise ConfigurationError("invalid inverter passives", key="[sapf].l_filter")


def inverter_step(inv: SapfInverter, gates, v_bus: ThreePhase, dt: float) -> tuple[ThreePhase, SapfInverter]:
    """Two-level inverter behind an L-R filter; mutates and returns ``inv``."""
    vdc = inv.v_dc
    ga, gb, gc = gates
    ea = (ga - 0.5) * vdc - v_bus.a
    eb = (gb - 0.5) * vdc - v_bus.b
    ec = (gc - 0.5) * vdc - v_bus.c
    vn = (ea + eb + ec) / 3.0
    k = dt / inv.l_filter
    den = 1.0 + k * inv.r_filter
    ia0, ib0, ic0 = inv.i_inj
    ia = (ia0 + k * (ea - vn)) / den
    ib = (ib0 + k * (eb - vn)) / den
    ic = -ia - ib
    drawn = ga * ia + gb * ib + gc * ic
    v_new = vdc - dt / inv.c_dc * drawn
    if v_new < 0.0:
        raise SimulationBlowup(f"SAPF dc link went negative ({v_new:.4g} V)")
    inv.last_leg_power = vdc * drawn
    inv.i_inj = ThreePhase(ia, ib, ic)
    inv.gates = (ga, gb, gc)
    inv.v_dc = v_new
    return inv.i_inj, inv
