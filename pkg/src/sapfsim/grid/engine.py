"""Fixed-step PCC simulation engine.

Per step, in this order:

1. bus voltage at ``t`` (from the source model and last step's source current)
2. load draws: rectifier and linear load
3. injections: PV current source, SAPF inverter with the gates decided last step
4. KCL at the PCC
5. measurements
6. controllers: SAPF reference + hysteresis, PV dc-link loop and MPPT, ELC,
   generator swing equation
7. recording

Controllers only see measurements that already exist, so every block acts on
one-step-old information and no algebraic loop has to be solved.

Channel naming: ``i_source`` is the combined current delivered by the two
sources (micro-hydro generator plus PV inverter) into the PCC, ``i_gen`` is
the generator's share. Both are positive towards the loads, while ``i_pv``
and ``i_sapf`` are positive into the PCC:

    i_source = i_rect + i_linear - i_sapf
    i_gen    = i_source - i_pv
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, DegenerateVoltageError, DomainError, SimulationBlowup
from ..plant.hydro import ElcState, HydroGenerator, elc_dispatch, generator_step
from ..plant.loads import LinearLoad, RectifierLoad, linear_load_step, rectifier_step
from ..plant.pv import MpptState, calibrate_pv, mppt_step, pv_current
from ..sapf import SapfController, SapfInverter, hysteresis_gate, inverter_step, sapf_reference
from ..signal import TWO_PI, Dq, PiController, ThreePhase, clarke, inverse_clarke, inverse_park
from .config import ScenarioConfig
from .trace import SimulationTrace

_PHASES = ("a", "b", "c")


def _abc(prefix: str) -> list[str]:
    return [f"{prefix}_{k}" for k in _PHASES]


ALL_CHANNELS = (
    _abc("v")
    + _abc("i_source")
    + _abc("i_gen")
    + _abc("i_load")
    + _abc("i_rect")
    + _abc("i_linear")
    + _abc("i_pv")
    + _abc("i_sapf")
    + _abc("i_ref")
    + [
        "v_dc_rect",
        "v_dc_sapf",
        "p_sapf_dc",
        "sapf_active",
        "v_pv",
        "p_pv",
        "v_mppt_ref",
        "speed_pu",
        "p_elec",
        "p_dump",
        "elc_steps",
    ]
)


@dataclass
class BusModel:
    kind: str = "stiff"
    v_ll_rms: float = 400.0
    frequency: float = 50.0
    series_r: float = 0.0
    series_l: float = 0.0
    _i_prev: tuple = field(default=(0.0, 0.0, 0.0), repr=False)

    def __post_init__(self) -> None:
        if self.kind not in ("stiff", "thevenin"):
            raise ConfigurationError(f"unknown bus kind {self.kind!r}", key="[bus].kind")
        self._peak = self.v_ll_rms * math.sqrt(2.0 / 3.0)
        self._w = TWO_PI * self.frequency

    def emf(self, t: float) -> ThreePhase:
        wt = self._w * t
        vp = self._peak
        return ThreePhase(
            vp * math.cos(wt),
            vp * math.cos(wt - TWO_PI / 3.0),
            vp * math.cos(wt + TWO_PI / 3.0),
        )


def bus_voltage(bus: BusModel, t: float, i_source: ThreePhase, dt: float | None = None) -> ThreePhase:
    """Balanced cosine EMF, minus the series R-L drop for a Thevenin source.

    The drop uses the latest known source current and its backward
    difference against the one passed on the previous call.
    """
    e = bus.emf(t)
    if bus.kind == "stiff":
        return e
    r, l = bus.series_r, bus.series_l
    prev = bus._i_prev
    bus._i_prev = tuple(i_source)
    if l > 0.0 and dt is None:
        raise ConfigurationError("a Thevenin bus with inductance needs dt", key="[bus].series_l")
    kl = l / dt if l > 0.0 else 0.0
    return ThreePhase(
        *(e[k] - r * i_source[k] - kl * (i_source[k] - prev[k]) for k in range(3))
    )


def sapf_engaged(t: float, cfg: ScenarioConfig) -> bool:
    """Whether the filter takes part in the network at time ``t``."""
    return cfg.sapf.enabled and t >= cfg.sim.sapf_engage_time


_ZERO = ThreePhase(0.0, 0.0, 0.0)


class Engine:
    """Owns every component state of one scenario and advances them in lockstep."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg.validate()
        c = cfg
        dt = c.sim.dt
        self.dt = dt
        self.bus = BusModel(c.bus.kind, c.bus.v_ll_rms, c.bus.frequency, c.bus.series_r, c.bus.series_l)

        self.rect = None
        if c.rectifier.enabled:
            r = c.rectifier
            self.rect = RectifierLoad(
                dc_resistance=r.dc_resistance,
                dc_capacitance=r.dc_capacitance,
                ac_inductance_per_phase=r.ac_inductance,
                ac_resistance_per_phase=r.ac_resistance,
                diode_on_resistance=r.diode_on_resistance,
                diode_off_resistance=r.diode_off_resistance,
                v_dc=r.v_dc_init,
            )

        self.linear = None
        self.linear_after_step = None
        if c.linear.enabled:
            ln = c.linear
            self.linear = LinearLoad.from_rating(ln.power_kw * 1e3, ln.pf, c.bus.v_ll_rms, c.bus.frequency)
            if ln.step_time >= 0.0 and ln.step_kw != 0.0:
                self.linear_after_step = LinearLoad.from_rating(
                    (ln.power_kw + ln.step_kw) * 1e3, ln.pf, c.bus.v_ll_rms, c.bus.frequency
                )

        self.pv = None
        # a zero-rated array has nothing to calibrate and contributes nothing
        if c.pv.enabled and c.pv.p_mpp_kw > 0.0:
            p = c.pv
            array = calibrate_pv(p.p_mpp_kw * 1e3, p.v_mpp, p.v_oc, p.i_sc)
            self.pv = array.with_irradiance(p.irradiance)
            self.mppt = MpptState(v_ref=p.v_ref_init, step=p.mppt_step, period=p.mppt_period, v_max=p.v_oc)
            self.pv_pi = PiController(p.kp, p.ki, dt, (0.0, p.i_d_max))
            self.v_pv = p.v_ref_init
            # start in equilibrium: the inverter exports what the array makes at v_ref_init
            v_ab_norm = math.sqrt(1.5) * c.bus.v_ll_rms * math.sqrt(2.0 / 3.0)
            i_d0 = self.v_pv * pv_current(self.pv, self.v_pv) / v_ab_norm if v_ab_norm > 0 else 0.0
            self.pv_pi.integral = min(max(i_d0, 0.0), p.i_d_max)
            self.i_d = self.pv_pi.integral

        self.gen = None
        if c.mhp.enabled:
            m = c.mhp
            self.gen = HydroGenerator(m.rated_kw * 1e3, m.mech_kw * 1e3, m.inertia_h)
        self.elc = None
        if c.elc.enabled:
            e = c.elc
            self.elc = ElcState(e.n_steps, e.step_kw * 1e3, e.deadband, e.gain, (1 << e.initial_steps) - 1)

        self.ctrl = self.inv = None
        if c.sapf.enabled:
            s = c.sapf
            self.ctrl = SapfController.build(
                dt, s.v_dc_ref, s.band, s.hp_cutoff_hz, s.kp, s.ki, s.p_loss_limit_kw * 1e3
            )
            # instantaneous pre-charge through the anti-parallel diodes
            self.inv = SapfInverter(c.bus.line_peak, s.c_dc, s.l_filter, s.r_filter)

        names = list(c.sim.record_channels) or list(ALL_CHANNELS)
        unknown = [n for n in names if n not in ALL_CHANNELS]
        if unknown:
            raise ConfigurationError(f"unknown channel(s) {unknown}", key="[sim].record_channels")
        if len(set(names)) != len(names):
            raise ConfigurationError("duplicate channel names", key="[sim].record_channels")
        self.channel_names = names
        self.degenerate_holds = 0

    def run(self) -> SimulationTrace:
        c = self.cfg
        dt = self.dt
        n_steps = c.n_steps
        bus = self.bus
        rect, linear, pv, gen, elc, ctrl, inv = (
            self.rect, self.linear, self.pv, self.gen, self.elc, self.ctrl, self.inv,
        )
        engage_time = c.sim.sapf_engage_time
        step_time = c.linear.step_time
        mppt_every = max(1, int(round(c.pv.mppt_period / dt)))
        elc_every = max(1, int(round(c.elc.period / dt)))
        avg_len = max(1, int(round(2.0 / (c.bus.frequency * dt))))
        p_window: deque = deque()
        p_window_sum = 0.0

        i_gen_prev = _ZERO
        i_pv = _ZERO
        i_sapf = _ZERO
        i_ref = _ZERO
        gates = (0, 0, 0)
        p_elec = 0.0
        p_pv = 0.0
        idx = {name: k for k, name in enumerate(ALL_CHANNELS)}
        keep = [idx[n] for n in self.channel_names]
        rows = []
        row_append = rows.append
        sqrt = math.sqrt

        for n in range(n_steps):
            t = n * dt
            try:
                # 1. bus
                v = bus_voltage(bus, t, i_gen_prev, dt)
                # 2. loads
                i_rect = rectifier_step(rect, v, dt)[0] if rect is not None else _ZERO
                if linear is not None:
                    if self.linear_after_step is not None and t >= step_time:
                        self.linear_after_step.i_phase = linear.i_phase
                        linear = self.linear = self.linear_after_step
                        self.linear_after_step = None
                    i_lin = linear_load_step(linear, v, dt)[0]
                else:
                    i_lin = _ZERO
                i_load = ThreePhase(i_rect.a + i_lin.a, i_rect.b + i_lin.b, i_rect.c + i_lin.c)
                # 3. injections
                v_ab = clarke(v)
                if pv is not None:
                    norm = sqrt(v_ab.alpha * v_ab.alpha + v_ab.beta * v_ab.beta)
                    theta = math.atan2(v_ab.beta, v_ab.alpha)
                    i_pv = inverse_clarke(inverse_park(Dq(self.i_d, 0.0, theta)))
                    p_ac = norm * self.i_d
                    v_now = min(self.v_pv, pv.v_oc)
                    i_arr = pv_current(pv, v_now)
                    p_pv = v_now * i_arr
                    self.v_pv += dt / c.pv.c_dc * (i_arr - p_ac / self.v_pv)
                    if not self.v_pv > 0.0:
                        raise SimulationBlowup(f"PV dc link collapsed ({self.v_pv:.4g} V)")
                active = inv is not None and t >= engage_time
                if active:
                    i_sapf = inverter_step(inv, gates, v, dt)[0]
                # 4. KCL
                i_src = ThreePhase(i_load.a - i_sapf.a, i_load.b - i_sapf.b, i_load.c - i_sapf.c)
                i_gen = ThreePhase(i_src.a - i_pv.a, i_src.b - i_pv.b, i_src.c - i_pv.c)
                # 5. measurements
                p_gen = v.a * i_gen.a + v.b * i_gen.b + v.c * i_gen.c
                # 6. controllers
                if active:
                    try:
                        i_ref = sapf_reference(ctrl, v, i_load, inv.v_dc)
                    except DegenerateVoltageError:
                        self.degenerate_holds += 1
                    band = ctrl.band
                    ia, ib, ic = inv.i_inj
                    gates = (
                        hysteresis_gate(ia, i_ref.a, band, gates[0]),
                        hysteresis_gate(ib, i_ref.b, band, gates[1]),
                        hysteresis_gate(ic, i_ref.c, band, gates[2]),
                    )
                if pv is not None:
                    self.i_d = self.pv_pi.step(self.v_pv - self.mppt.v_ref)
                    if n % mppt_every == mppt_every - 1:
                        v_meas = min(self.v_pv, pv.v_oc)
                        self.mppt = mppt_step(self.mppt, v_meas, pv_current(pv, v_meas))
                if gen is not None:
                    p_window.append(p_gen)
                    p_window_sum += p_gen
                    if len(p_window) > avg_len:
                        p_window_sum -= p_window.popleft()
                    p_elec = p_window_sum / len(p_window)
                    if elc is not None and n % elc_every == elc_every - 1:
                        elc = self.elc = elc_dispatch(elc, gen.speed_pu)
                    p_dump = elc.dump_power if elc is not None else 0.0
                    gen = self.gen = generator_step(gen, p_elec, p_dump, dt)
                else:
                    p_dump = 0.0
            except SimulationBlowup as exc:
                raise SimulationBlowup(str(exc), step=n) from exc
            except DomainError as exc:
                raise SimulationBlowup(str(exc), step=n) from exc

            i_gen_prev = i_gen
            # 7. record
            row_append(
                (
                    v.a, v.b, v.c,
                    i_src.a, i_src.b, i_src.c,
                    i_gen.a, i_gen.b, i_gen.c,
                    i_load.a, i_load.b, i_load.c,
                    i_rect.a, i_rect.b, i_rect.c,
                    i_lin.a, i_lin.b, i_lin.c,
                    i_pv.a, i_pv.b, i_pv.c,
                    i_sapf.a, i_sapf.b, i_sapf.c,
                    i_ref.a, i_ref.b, i_ref.c,
                    rect.v_dc if rect is not None else 0.0,
                    inv.v_dc if inv is not None else 0.0,
                    inv.last_leg_power if active else 0.0,
                    1.0 if active else 0.0,
                    self.v_pv if pv is not None else 0.0,
                    p_pv,
                    self.mppt.v_ref if pv is not None else 0.0,
                    gen.speed_pu if gen is not None else 1.0,
                    p_elec,
                    p_dump,
                    float(elc.active_steps) if elc is not None else 0.0,
                )
            )

        data = np.array(rows, dtype=float).reshape(n_steps, len(ALL_CHANNELS))
        if not np.all(np.isfinite(data)):
            bad = int(np.argmax(~np.all(np.isfinite(data), axis=1)))
            raise SimulationBlowup("non-finite state recorded", step=bad)
        channels = {ALL_CHANNELS[k]: np.ascontiguousarray(data[:, k]) for k in keep}
        summary = {
            "steps": n_steps,
            "diode_nonconverged_steps": rect.nonconverged_steps if rect is not None else 0,
            "degenerate_voltage_holds": self.degenerate_holds,
        }
        return SimulationTrace(dt, channels, summary)


def run(cfg: ScenarioConfig) -> SimulationTrace:
    return Engine(cfg).run()
