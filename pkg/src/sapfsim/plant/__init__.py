from .hydro import ElcState, HydroGenerator, elc_dispatch, generator_step
from .loads import LinearLoad, RectifierLoad, linear_load_step, rectifier_step
from .pv import MpptState, PvArray, calibrate_pv, grid_search_mpp, mppt_step, pv_current, pv_power

__all__ = [
    "ElcState",
    "HydroGenerator",
    "LinearLoad",
    "MpptState",
    "PvArray",
    "RectifierLoad",
    "calibrate_pv",
    "elc_dispatch",
    "generator_step",
    "grid_search_mpp",
    "linear_load_step",
    "mppt_step",
    "pv_current",
    "pv_power",
    "rectifier_step",
]
