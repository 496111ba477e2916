"""Pulse envelopes Omega(t) and cumulative areas A(t) in dimensionless time.

Time is measured in units of the pulse duration, energies in its inverse,
so a pulse occupies a support [t_i, t_f] of order one and the area A(t)
is the running integral of the envelope.  Outside the support the area is
clamped (constant continuation): propagators get queried at t0 <= t_i and
t >= t_f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

__all__ = ["PulseShape", "sine_squared", "tabulated", "load_pulse", "area_at"]


@dataclass(frozen=True)
class PulseShape:
    """Envelope and cumulative area of a pulse supported on [t_i, t_f]."""

    omega: Callable[[float], float]
    area: Callable[[float], float]
    t_i: float
    t_f: float
    total_area: float


def sine_squared(total_area: float) -> PulseShape:
    """Omega(t) = 2*A*sin^2(pi*t) on [0, 1], zero elsewhere; closed-form area.

    The peak amplitude is twice the total area A; A(t) = A*t - A*sin(2*pi*t)/(2*pi).
    """
    if not (total_area > 0.0) or not math.isfinite(total_area):
        raise ValueError("total_area must be positive and finite")
    a = float(total_area)

    def omega(t: float) -> float:
        if t <= 0.0 or t >= 1.0:
            return 0.0
        s = math.sin(math.pi * t)
        return 2.0 * a * s * s

    def area(t: float) -> float:
        if t <= 0.0:
            return 0.0
        if t >= 1.0:
            return a
        return a * (t - math.sin(2.0 * math.pi * t) / (2.0 * math.pi))

    return PulseShape(omega=omega, area=area, t_i=0.0, t_f=1.0, total_area=a)


def tabulated(samples) -> PulseShape:
    """Pulse through (t, Omega) samples: monotone cubic (PCHIP) envelope,
    areas from the interpolant's exact polynomial antiderivative.

    Sample times must be strictly increasing and the envelope must vanish
    at both endpoints so the extension by zero stays continuous.
    """
    pts = np.asarray(samples, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ValueError("samples must be an (N, 2) array of (t, Omega), N >= 2")
    if not np.all(np.isfinite(pts)):
        raise ValueError("samples must be finite")
    t, om = pts[:, 0], pts[:, 1]
    if np.any(np.diff(t) <= 0.0):
        raise ValueError("sample times must be strictly increasing")
    if om[0] != 0.0 or om[-1] != 0.0:
        raise ValueError("Omega must vanish at both endpoints")
    interp = PchipInterpolator(t, om, extrapolate=False)
    anti = interp.antiderivative()
    t_i, t_f = float(t[0]), float(t[-1])
    total = float(anti(t_f))

    def omega(u: float) -> float:
        if u <= t_i or u >= t_f:
            return 0.0
        return float(interp(u))

    def area(u: float) -> float:
        if u <= t_i:
            return 0.0
        if u >= t_f:
            return total
        return float(anti(u))

    return PulseShape(omega=omega, area=area, t_i=t_i, t_f=t_f, total_area=total)


def load_pulse(path) -> PulseShape:
    """Tabulated pulse from a two-column (t, Omega) text file; '#' comments."""
    data = np.loadtxt(path, comments="#", dtype=float, ndmin=2)
    return tabulated(data)


def area_at(pulse: PulseShape, t: float) -> float:
    """Cumulative area A(t); 0 before the support, total_area after it."""
    return pulse.area(t)
