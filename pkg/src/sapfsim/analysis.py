"""Waveform metrology: synchronised DFT, THD and power figures of merit."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, UndefinedMetricError
from .signal import clarke_arrays

DEFAULT_MAX_ORDER = 50
DEFAULT_CYCLES = 10


@dataclass(frozen=True)
class HarmonicSpectrum:
    """Peak amplitude and cosine phase of harmonic orders 1..H.

    ``magnitude[h - 1]`` belongs to order ``h``.
    """

    fundamental_hz: float
    magnitude: np.ndarray
    phase: np.ndarray
    dc: float = 0.0

    def __post_init__(self) -> None:
        if len(self.magnitude) < 2:
            raise ValueError("a spectrum needs at least orders 1 and 2")

    @property
    def orders(self) -> np.ndarray:
        return np.arange(1, len(self.magnitude) + 1)

    @property
    def max_order(self) -> int:
        return len(self.magnitude)

    def __getitem__(self, order: int) -> float:
        return float(self.magnitude[order - 1])

    def percent_of_fundamental(self) -> np.ndarray:
        return 100.0 * self.magnitude / self.magnitude[0]


def synchronous_window(samples: np.ndarray, dt: float, f0: float, cycles: int) -> np.ndarray:
    """Exactly ``cycles`` fundamental periods from the start of ``samples``.

    When the period is not a whole number of samples the window is linearly
    resampled onto ``round(cycles / (f0 * dt))`` points spanning it exactly.
    """
    if cycles < 2:
        raise ValueError("need at least two cycles")
    samples = np.asarray(samples, dtype=float)
    span = cycles / f0
    n_exact = span / dt
    n = int(round(n_exact))
    if abs(n_exact - n) < 1e-6 * max(1.0, n_exact):
        if len(samples) < n:
            raise InsufficientDataError(f"window needs {n} samples, have {len(samples)}")
        return samples[:n]
    if (len(samples) - 1) * dt < span * (n - 1) / n - 1e-12:
        raise InsufficientDataError(f"window of {span:g} s exceeds the {len(samples) * dt:g} s of data")
    t_src = np.arange(len(samples)) * dt
    t_dst = np.arange(n) * (span / n)
    return np.interp(t_dst, t_src, samples)


def spectrum(
    samples: np.ndarray,
    dt: float,
    f0: float,
    cycles: int = DEFAULT_CYCLES,
    max_order: int = DEFAULT_MAX_ORDER,
) -> HarmonicSpectrum:
    w = synchronous_window(samples, dt, f0, cycles)
    n = len(w)
    if max_order * cycles > n // 2:
        raise InsufficientDataError(f"order {max_order} is above Nyquist for dt={dt:g} s")
    x = np.fft.rfft(w)
    bins = x[cycles * np.arange(1, max_order + 1)]
    return HarmonicSpectrum(
        fundamental_hz=f0,
        magnitude=2.0 * np.abs(bins) / n,
        phase=np.angle(bins),
        dc=float(x[0].real / n),
    )


def thd(s: HarmonicSpectrum) -> float:
    """Total harmonic distortion as a ratio (not percent)."""
    fund = s.magnitude[0]
    if not fund > 1e-9 * max(float(np.max(s.magnitude)), 1e-300):
        raise UndefinedMetricError("fundamental is zero; THD is undefined")
    return float(math.sqrt(float(np.sum(s.magnitude[1:] ** 2))) / fund)


def signal_thd(samples, dt, f0, cycles=DEFAULT_CYCLES, max_order=DEFAULT_MAX_ORDER) -> float:
    return thd(spectrum(samples, dt, f0, cycles, max_order))


def square_wave_thd(max_order: int) -> float:
    """THD of an ideal square wave truncated at ``max_order`` (odd 1/n series)."""
    odd = np.arange(3, max_order + 1, 2, dtype=float)
    return float(np.sqrt(np.sum(1.0 / odd**2)))


@dataclass(frozen=True)
class PowerMetrics:
    p: float  # W
    q: float  # var, positive for lagging current
    s: float  # VA
    pf: float
    displacement_pf: float
    q_fundamental: float


def power_metrics(v: np.ndarray, i: np.ndarray, dt: float, f0: float) -> PowerMetrics:
    """Three-phase power over an integer number of cycles.

    ``v`` and ``i`` have shape (3, N). Apparent power uses the aggregate rms of
    the three phases, reactive power is ``sqrt(S^2 - P^2)`` signed by the
    fundamental phase angle, and the displacement factor is taken from the
    fundamental phasors alone.
    """
    v = np.asarray(v, dtype=float)
    i = np.asarray(i, dtype=float)
    if v.shape != i.shape or v.ndim != 2 or v.shape[0] != 3:
        raise ValueError("expected matching (3, N) voltage and current arrays")
    n = v.shape[1]
    cycles = n * dt * f0
    if n < 2 or abs(cycles - round(cycles)) > dt * f0 + 1e-9 or round(cycles) < 1:
        raise InsufficientDataError(f"window spans {cycles:.4f} cycles; need an integer number")
    p = float(np.mean(np.sum(v * i, axis=0)))
    v_rms = math.sqrt(float(np.mean(v * v)))
    i_rms = math.sqrt(float(np.mean(i * i)))
    s = 3.0 * v_rms * i_rms
    if s <= 0.0:
        raise UndefinedMetricError("apparent power is zero; power factor undefined")
    t = np.arange(n) * dt
    kernel = np.exp(-2j * np.pi * f0 * t) * (2.0 / n)
    v1 = v @ kernel
    i1 = i @ kernel
    s1 = 0.5 * np.sum(v1 * np.conj(i1))
    q1 = float(s1.imag)
    mag1 = abs(s1)
    dpf = float(s1.real / mag1) if mag1 > 0.0 else 0.0
    q = math.copysign(math.sqrt(max(s * s - p * p, 0.0)), q1 if q1 != 0.0 else 1.0)
    return PowerMetrics(p=p, q=q, s=s, pf=p / s, displacement_pf=dpf, q_fundamental=q1)


def mean_pq(v: np.ndarray, i: np.ndarray) -> tuple[float, float]:
    """Mean instantaneous p and q (power-invariant Clarke frame) over the samples."""
    va, vb, _ = clarke_arrays(v[0], v[1], v[2])
    ia, ib, _ = clarke_arrays(i[0], i[1], i[2])
    return float(np.mean(va * ia + vb * ib)), float(np.mean(vb * ia - va * ib))
