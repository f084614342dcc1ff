"""Frame transforms, first-order filters and a PI regulator.

All transforms use the power-invariant scaling, so instantaneous power
computed in the alpha/beta/zero frame equals the phase-domain sum
``va*ia + vb*ib + vc*ic`` without correction factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import ConfigurationError, InvalidSampleError

TWO_PI = 2.0 * math.pi
_K = math.sqrt(2.0 / 3.0)
_SQRT3_2 = math.sqrt(3.0) / 2.0
_INV_SQRT3 = 1.0 / math.sqrt(3.0)
_INV_SQRT6 = 1.0 / math.sqrt(6.0)
_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class ThreePhase(NamedTuple):
    a: float
    b: float
    c: float

    def total(self) -> float:
        return self.a + self.b + self.c


class AlphaBeta(NamedTuple):
    alpha: float
    beta: float
    zero: float = 0.0


class Dq(NamedTuple):
    d: float
    q: float
    theta: float


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidSampleError(f"non-finite sample component: {v!r}")


def clarke(x: ThreePhase) -> AlphaBeta:
    a, b, c = x
    _check_finite(a, b, c)
    return AlphaBeta(
        _K * (a - 0.5 * b - 0.5 * c),
        _K * _SQRT3_2 * (b - c),
        (a + b + c) * _INV_SQRT3,
    )


def clarke_arrays(a, b, c):
    """Vectorised :func:`clarke` for numpy arrays; returns ``(alpha, beta, zero)``."""
    return _K * (a - 0.5 * b - 0.5 * c), _K * _SQRT3_2 * (b - c), (a + b + c) * _INV_SQRT3


def inverse_clarke(x: AlphaBeta) -> ThreePhase:
    """Map back to phase quantities, discarding the zero-sequence part."""
    al, be = x.alpha, x.beta
    _check_finite(al, be)
    a = _K * al
    b = -_INV_SQRT6 * al + _INV_SQRT2 * be
    return ThreePhase(a, b, -a - b)


def wrap_angle(theta: float) -> float:
    w = math.fmod(theta, TWO_PI)
    if w < 0.0:
        w += TWO_PI
    # fmod of a tiny negative number can round up to exactly 2*pi
    return 0.0 if w >= TWO_PI else w


def park(x: AlphaBeta, theta: float) -> Dq:
    """Rotate a stationary-frame vector by ``-theta``."""
    _check_finite(x.alpha, x.beta, theta)
    co, si = math.cos(theta), math.sin(theta)
    return Dq(co * x.alpha + si * x.beta, -si * x.alpha + co * x.beta, wrap_angle(theta))


def inverse_park(x: Dq) -> AlphaBeta:
    _check_finite(x.d, x.q, x.theta)
    co, si = math.cos(x.theta), math.sin(x.theta)
    return AlphaBeta(co * x.d - si * x.q, si * x.d + co * x.q)


@dataclass
class FirstOrderFilter:
    """Backward-Euler first-order lag; the high-pass output is its complement.

    ``step`` returns the output for the configured ``kind`` and advances the
    internal low-pass state.
    """

    cutoff_hz: float
    dt: float
    kind: str = "low_pass"
    state: float = 0.0
    _alpha: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in ("low_pass", "high_pass"):
            raise ConfigurationError(f"unknown filter kind {self.kind!r}", key="kind")
        if not (self.cutoff_hz > 0.0 and self.dt > 0.0):
            raise ConfigurationError("cutoff_hz and dt must be positive", key="cutoff_hz")
        if self.cutoff_hz * self.dt >= 0.5:
            raise ConfigurationError(
                f"cutoff_hz*dt = {self.cutoff_hz * self.dt:g} must be < 0.5", key="cutoff_hz"
            )
        self._alpha = TWO_PI * self.cutoff_hz * self.dt

    def step(self, x: float) -> float:
        lp = (self.state + self._alpha * x) / (1.0 + self._alpha)
        self.state = lp
        if self.kind == "low_pass":
            return lp
        return x - lp

    def split(self, x: float) -> tuple[float, float]:
        """Advance once and return ``(low_pass, high_pass)`` for the same sample."""
        lp = (self.state + self._alpha * x) / (1.0 + self._alpha)
        self.state = lp
        return lp, x - lp

    def reset(self, value: float = 0.0) -> None:
        self.state = value

    def response(self, freq_hz: float) -> complex:
        """Exact frequency response of the discretised filter at ``freq_hz``."""
        zinv = complex(math.cos(TWO_PI * freq_hz * self.dt), -math.sin(TWO_PI * freq_hz * self.dt))
        lp = self._alpha / (1.0 + self._alpha - zinv)
        return lp if self.kind == "low_pass" else 1.0 - lp


def filter_step(f: FirstOrderFilter, x: float) -> float:
    return f.step(x)


@dataclass
class PiController:
    """PI regulator with output clamping and conditional integration."""

    kp: float
    ki: float
    dt: float
    output_limits: tuple[float, float] = (-math.inf, math.inf)
    integral: float = 0.0

    def __post_init__(self) -> None:
        lo, hi = self.output_limits
        if lo > hi:
            raise ConfigurationError(f"output_limits {self.output_limits} have lo > hi", key="output_limits")
        if self.dt <= 0.0:
            raise ConfigurationError("dt must be positive", key="dt")

    def step(self, error: float) -> float:
        lo, hi = self.output_limits
        prop = self.kp * error
        candidate = self.integral + self.ki * error * self.dt
        u = prop + candidate
        # anti-windup: stop integrating once the output saturates in the error's direction
        if u > hi and error > 0.0:
            candidate = max(self.integral, hi - prop)
        elif u < lo and error < 0.0:
            candidate = min(self.integral, lo - prop)
        self.integral = candidate
        return min(max(prop + candidate, lo), hi)

    def reset(self) -> None:
        self.integral = 0.0


def pi_step(c: PiController, error: float) -> float:
    return c.step(error)
