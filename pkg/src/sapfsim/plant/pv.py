"""Single-diode PV array, its calibration, and a perturb-and-observe tracker."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares

from ..errors import CalibrationError, ConfigurationError, DomainError

STC_IRRADIANCE = 1000.0


@dataclass(frozen=True)
class PvArray:
    p_mpp_ref: float
    v_mpp_ref: float
    v_oc: float
    i_sc: float
    diode_ideality_voltage: float
    photo_current_stc: float
    sat_current: float
    irradiance: float = STC_IRRADIANCE

    def with_irradiance(self, irradiance: float) -> "PvArray":
        return replace(self, irradiance=irradiance)


def _raw_current(photo: float, sat: float, vt: float, irradiance: float, v: float) -> float:
    return photo * (irradiance / STC_IRRADIANCE) - sat * math.expm1(v / vt)


def pv_current(pv: PvArray, v: float) -> float:
    """Array current in amperes at terminal voltage ``v``."""
    if not (0.0 <= v <= pv.v_oc * (1.0 + 1e-12)):
        raise DomainError(f"PV voltage {v} V outside [0, {pv.v_oc}] V")
    i = _raw_current(pv.photo_current_stc, pv.sat_current, pv.diode_ideality_voltage, pv.irradiance, v)
    return i if i > 0.0 else 0.0


def pv_power(pv: PvArray, v: float) -> float:
    return v * pv_current(pv, v)


def calibrate_pv(p_mpp: float, v_mpp: float, v_oc: float, i_sc: float, max_iter: int = 200) -> PvArray:
    """Fit photo current, saturation current and diode voltage to datasheet points.

    The single-diode curve has three parameters against four conditions
    (open circuit, short circuit, zero slope of P at ``v_mpp`` and the power
    value there), so the fit is a least-squares solve; every condition must
    end up within 0.5 % or ``CalibrationError`` is raised.
    """
    if not (0.0 < v_mpp < v_oc):
        raise ConfigurationError("need 0 < v_mpp < v_oc", key="v_mpp")
    if not (p_mpp > 0.0 and p_mpp / v_mpp < i_sc):
        raise ConfigurationError("need 0 < p_mpp/v_mpp < i_sc", key="i_sc")

    # parameters in scaled log form keep the Jacobian well conditioned
    def unpack(z):
        return i_sc * z[0], i_sc * math.exp(z[1]), v_oc * z[2]

    def residuals(z):
        photo, sat, vt = unpack(z)
        i0 = _raw_current(photo, sat, vt, STC_IRRADIANCE, 0.0)
        ioc = _raw_current(photo, sat, vt, STC_IRRADIANCE, v_oc)
        im = _raw_current(photo, sat, vt, STC_IRRADIANCE, v_mpp)
        di = -sat / vt * math.exp(v_mpp / vt)
        return [
            (i0 - i_sc) / i_sc,
            ioc / i_sc,
            (im + v_mpp * di) / i_sc,
            (v_mpp * im - p_mpp) / p_mpp,
        ]

    # starting point from the textbook relation v_mpp ~ v_oc - vt*ln(1 + v_mpp/vt)
    # (floored so the exponential stays representable for very square curves)
    vt0 = max((v_oc - v_mpp) / 4.0, v_oc / 500.0)
    sat0 = i_sc / math.expm1(v_oc / vt0)
    z0 = np.array([1.0, math.log(sat0 / i_sc), vt0 / v_oc])
    try:
        sol = least_squares(residuals, z0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_iter)
    except (OverflowError, ValueError) as exc:
        raise CalibrationError(f"PV calibration diverged: {exc}") from exc
    res = np.abs(residuals(sol.x))
    if not np.all(res <= 0.005):
        raise CalibrationError(
            f"no single-diode curve meets all four conditions within 0.5% (residuals {res.round(4).tolist()})"
        )
    photo, sat, vt = unpack(sol.x)
    return PvArray(
        p_mpp_ref=p_mpp,
        v_mpp_ref=v_mpp,
        v_oc=v_oc,
        i_sc=i_sc,
        diode_ideality_voltage=vt,
        photo_current_stc=photo,
        sat_current=sat,
    )


def grid_search_mpp(pv: PvArray, resolution: float = 0.01) -> tuple[float, float]:
    """Brute-force maximum power point ``(v, p)`` on a uniform voltage grid."""
    v = np.arange(0.0, pv.v_oc, resolution)
    i = pv.photo_current_stc * (pv.irradiance / STC_IRRADIANCE) - pv.sat_current * np.expm1(
        v / pv.diode_ideality_voltage
    )
    p = v * np.clip(i, 0.0, None)
    k = int(np.argmax(p))
    return float(v[k]), float(p[k])


@dataclass
class MpptState:
    v_ref: float
    step: float = 2.0
    period: float = 1e-3
    v_max: float = math.inf
    prev_power: float = 0.0
    prev_voltage: float = 0.0
    direction: int = 1

    def __post_init__(self) -> None:
        if self.step <= 0.0:
            raise ConfigurationError("MPPT step must be positive", key="[pv].mppt_step")
        if self.period <= 0.0:
            raise ConfigurationError("MPPT period must be positive", key="[pv].mppt_period")


def mppt_step(m: MpptState, v_meas: float, i_meas: float) -> MpptState:
    """One perturb-and-observe update; returns a new state."""
    power = v_meas * i_meas
    direction = m.direction if power > m.prev_power else -m.direction
    v_ref = min(max(m.v_ref + direction * m.step, 0.0), m.v_max)
    return replace(m, v_ref=v_ref, prev_power=power, prev_voltage=v_meas, direction=direction)
