"""Run summaries: headline THD before/after SAPF engagement plus plant statistics."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .analysis import DEFAULT_CYCLES, PowerMetrics, power_metrics, signal_thd
from .errors import InsufficientDataError, UndefinedMetricError
from .grid.config import ScenarioConfig
from .grid.trace import SimulationTrace
from .plant.pv import calibrate_pv, grid_search_mpp

SETTLE_CYCLES = 5
HEADLINE_CHANNEL = "i_source_a"


@dataclass(frozen=True)
class Window:
    start: float
    stop: float

    def slice(self, dt: float) -> slice:
        return slice(int(round(self.start / dt)), int(round(self.stop / dt)))


def regime_windows(cfg: ScenarioConfig, cycles: int = DEFAULT_CYCLES) -> tuple[Window | None, Window | None]:
    """Measurement windows for the pre- and post-engagement regimes.

    Each is the final ``cycles`` periods of its regime; the post window must
    also start at least five cycles after engagement. When the filter never
    engages inside the run, the post regime is the pre regime.
    """
    period = 1.0 / cfg.bus.frequency
    span = cycles * period
    t_end = cfg.sim.t_end
    engage = cfg.sim.sapf_engage_time if cfg.sapf.enabled else t_end
    pre = Window(engage - span, engage) if engage - span >= -1e-12 else None
    if pre is not None and pre.start < 0.0:
        pre = Window(0.0, span)
    if not cfg.sapf.enabled:
        return pre, None
    if engage >= t_end:
        return pre, pre
    start = t_end - span
    post = Window(start, t_end) if start >= engage + SETTLE_CYCLES * period - 1e-12 else None
    return pre, post


@dataclass
class ReportSummary:
    scenario: str
    thd_pre_pct: float | None = None
    thd_post_pct: float | None = None
    p_pre_w: float | None = None
    q_pre_var: float | None = None
    s_pre_va: float | None = None
    pf_pre: float | None = None
    dpf_pre: float | None = None
    p_post_w: float | None = None
    q_post_var: float | None = None
    s_post_va: float | None = None
    pf_post: float | None = None
    dpf_post: float | None = None
    dc_link_mean_v: float | None = None
    dc_link_ripple_v: float | None = None
    mpp_power_error_pct: float | None = None
    mpp_voltage_error_pct: float | None = None
    elc_mean_steps: float | None = None
    elc_duty_pct: float | None = None
    speed_final_pu: float | None = None
    diode_nonconverged_steps: int | None = None
    # set when a regime exists but its THD is undefined (zero fundamental)
    thd_pre_undefined: bool = False
    thd_post_undefined: bool = False

    @property
    def thd_ratio(self) -> float | None:
        if self.thd_pre_pct is None or self.thd_post_pct is None or self.thd_pre_pct == 0.0:
            return None
        return self.thd_post_pct / self.thd_pre_pct

    def lines(self) -> list[str]:
        out = [f"scenario = {self.scenario}"]
        for label, attr in (("thd_pre_pct", "thd_pre"), ("thd_post_pct", "thd_post")):
            value = getattr(self, label)
            if value is not None:
                out.append(f"{label} = {value:.3f}")
            elif getattr(self, f"{attr}_undefined"):
                out.append(f"{label} = n/a")
        ratio = self.thd_ratio
        if ratio is not None:
            out.append(f"thd_ratio = {ratio:.4f}")
        for f in fields(self):
            if f.name in ("scenario", "thd_pre_pct", "thd_post_pct") or f.name.endswith("_undefined"):
                continue
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, int):
                out.append(f"{f.name} = {value}")
            elif f.name.startswith(("pf", "dpf", "speed")):
                out.append(f"{f.name} = {value:.5f}")
            else:
                out.append(f"{f.name} = {value:.3f}")
        return out

    def to_text(self) -> str:
        return "\n".join(self.lines()) + "\n"


def _thd_pct(trace: SimulationTrace, window: Window, f0: float, channel: str) -> float:
    return 100.0 * signal_thd(trace[channel][window.slice(trace.dt)], trace.dt, f0)


def _power(trace: SimulationTrace, window: Window, f0: float) -> PowerMetrics | None:
    sl = window.slice(trace.dt)
    try:
        return power_metrics(trace.phases("v")[:, sl], trace.phases("i_source")[:, sl], trace.dt, f0)
    except UndefinedMetricError:
        return None


def summarize(cfg: ScenarioConfig, trace: SimulationTrace, channel: str = HEADLINE_CHANNEL) -> ReportSummary:
    f0 = cfg.bus.frequency
    pre, post = regime_windows(cfg)
    rep = ReportSummary(scenario=cfg.sim.name)
    has_currents = all(f"i_source_{k}" in trace for k in "abc") and all(f"v_{k}" in trace for k in "abc")
    for tag, window in (("pre", pre), ("post", post)):
        if window is None or channel not in trace:
            continue
        try:
            setattr(rep, f"thd_{tag}_pct", _thd_pct(trace, window, f0, channel))
        except UndefinedMetricError:
            setattr(rep, f"thd_{tag}_undefined", True)
        except InsufficientDataError:
            pass
        if has_currents:
            pm = _power(trace, window, f0)
            if pm is not None:
                setattr(rep, f"p_{tag}_w", pm.p)
                setattr(rep, f"q_{tag}_var", pm.q)
                setattr(rep, f"s_{tag}_va", pm.s)
                setattr(rep, f"pf_{tag}", pm.pf)
                setattr(rep, f"dpf_{tag}", pm.displacement_pf)

    final = post or pre
    if final is not None:
        sl = final.slice(trace.dt)
        if cfg.sapf.enabled and "v_dc_sapf" in trace:
            vdc = trace["v_dc_sapf"][sl]
            rep.dc_link_mean_v = float(np.mean(vdc))
            rep.dc_link_ripple_v = float(np.ptp(vdc))
        if cfg.pv.enabled and cfg.pv.p_mpp_kw > 0.0 and "p_pv" in trace and "v_pv" in trace:
            p = cfg.pv
            array = calibrate_pv(p.p_mpp_kw * 1e3, p.v_mpp, p.v_oc, p.i_sc).with_irradiance(p.irradiance)
            v_true, p_true = grid_search_mpp(array)
            rep.mpp_power_error_pct = 100.0 * abs(float(np.mean(trace["p_pv"][sl])) - p_true) / p_true
            rep.mpp_voltage_error_pct = 100.0 * abs(float(np.mean(trace["v_pv"][sl])) - v_true) / v_true
    if cfg.elc.enabled and "elc_steps" in trace:
        steps = trace["elc_steps"]
        rep.elc_mean_steps = float(np.mean(steps))
        rep.elc_duty_pct = 100.0 * float(np.mean(steps > 0))
    if cfg.mhp.enabled and "speed_pu" in trace:
        rep.speed_final_pu = float(trace["speed_pu"][-1])
    if cfg.rectifier.enabled:
        rep.diode_nonconverged_steps = int(trace.summary.get("diode_nonconverged_steps", 0))
    return rep
