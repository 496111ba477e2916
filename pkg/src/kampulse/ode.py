"""Adaptive Dormand-Prince 5(4) integration with cubic Hermite dense output.

One integrator serves both users in this package: the KAM hierarchy
(a real 3n-vector) and the reference Schrodinger oracle (a complex d x d
system flattened to 2*d*d reals).  Step acceptance uses the mixed error
norm max_i |e_i| / (abs_tol + rel_tol*|y_i|) <= 1 and the fifth-order
solution is propagated (local extrapolation).  Unitarity of the oracle is
monitored, never enforced: the propagator must stay an honest accuracy
reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

__all__ = [
    "IntegrationError",
    "StepUnderflowError",
    "UnitarityBudgetError",
    "Trajectory",
    "UnitaryPropagation",
    "integrate",
    "propagate_unitary",
]


class IntegrationError(RuntimeError):
    """Base class for integrator failures."""


class StepUnderflowError(IntegrationError):
    """Step size collapsed below the resolvable scale (stiffness/underflow)."""


class UnitarityBudgetError(IntegrationError):
    """Unitarity drift persisted after the tolerance ladder was exhausted."""


# Dormand-Prince 5(4) tableau; the last row of _A doubles as the 5th-order
# weights (FSAL: stage 7 is the derivative at the accepted point).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = (
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
_ERR = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


@dataclass(frozen=True)
class Trajectory:
    """Dense ODE solution: states and derivatives on the accepted-step mesh."""

    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray

    def at(self, t: float) -> np.ndarray:
        """Cubic Hermite interpolation; clamped outside [times[0], times[-1]]."""
        ts = self.times
        if t <= ts[0]:
            return self.states[0].copy()
        if t >= ts[-1]:
            return self.states[-1].copy()
        j = int(np.searchsorted(ts, t, side="right")) - 1
        if ts[j] == t:
            return self.states[j].copy()
        h = ts[j + 1] - ts[j]
        s = (t - ts[j]) / h
        om = 1.0 - s
        h00 = (1.0 + 2.0 * s) * om * om
        h10 = s * om * om
        h01 = s * s * (3.0 - 2.0 * s)
        h11 = s * s * (s - 1.0)
        return (
            h00 * self.states[j]
            + h01 * self.states[j + 1]
            + h * (h10 * self.derivs[j] + h11 * self.derivs[j + 1])
        )


def _initial_step(f, t0, y0, f0, span, rel_tol, abs_tol):
    scale = abs_tol + rel_tol * np.abs(y0)
    d0 = float(np.max(np.abs(y0) / scale))
    d1 = float(np.max(np.abs(f0) / scale))
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6 * span
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = np.asarray(f(t0 + h0, y0 + h0 * f0), dtype=float)
    d2 = float(np.max(np.abs(f1 - f0) / scale)) / h0
    dmax = max(d1, d2)
    if not math.isfinite(dmax) or dmax <= 1e-15:
        h1 = max(1e-6 * span, h0 * 1e-3)
    else:
        h1 = (0.01 / dmax) ** 0.2
    return min(100.0 * h0, h1, span)


def integrate(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_start: float,
    t_end: float,
    rel_tol: float,
    abs_tol: float,
) -> Trajectory:
    """Integrate y' = f(t, y) forward from t_start to t_end.

    Returns the dense trajectory over the accepted mesh.  Raises
    StepUnderflowError when the step falls below 1e-14 times the span and
    IntegrationError when f turns non-finite at an accepted state.
    """
    if not (rel_tol > 0.0 and abs_tol > 0.0):
        raise ValueError("tolerances must be positive")
    y = np.array(y0, dtype=float)
    if y.ndim != 1:
        raise ValueError("y0 must be a one-dimensional real vector")
    span = float(t_end) - float(t_start)
    if span < 0.0:
        raise ValueError("t_end must be >= t_start")
    t = float(t_start)
    k1 = np.asarray(f(t, y), dtype=float)
    if not np.all(np.isfinite(k1)):
        raise IntegrationError("non-finite derivative at the initial state")
    times = [t]
    states = [y.copy()]
    derivs = [k1.copy()]
    if span == 0.0:
        return Trajectory(np.array(times), np.array(states), np.array(derivs))

    h_min = 1e-14 * span
    h = _initial_step(f, t, y, k1, span, rel_tol, abs_tol)
    k = np.empty((7, y.size))
    while t < t_end:
        if h < h_min:
            raise StepUnderflowError(
                f"stiffness/underflow: step {h:.3e} below {h_min:.3e} at t={t:.6g}"
            )
        last = (t_end - t) <= h
        if last:
            h = t_end - t
        k[0] = k1
        rejected_stage = False
        for i in range(1, 6):
            yi = y + h * (_A[i - 1] @ k[:i])
            ki = np.asarray(f(t + _C[i] * h, yi), dtype=float)
            if not np.all(np.isfinite(ki)):
                rejected_stage = True
                break
            k[i] = ki
        if not rejected_stage:
            y5 = y + h * (_A[5] @ k[:6])
            k6 = np.asarray(f(t + h, y5), dtype=float)
            rejected_stage = not np.all(np.isfinite(k6))
        if rejected_stage:
            h *= 0.5
            continue
        k[6] = k6
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y5))
        err = float(np.max(np.abs(h * (_ERR @ k)) / scale))
        if not math.isfinite(err):
            h *= _MIN_FACTOR
            continue
        if err <= 1.0:
            t = float(t_end) if last else t + h
            y = y5
            k1 = k[6].copy()
            times.append(t)
            states.append(y.copy())
            derivs.append(k1.copy())
            factor = _MAX_FACTOR if err == 0.0 else min(
                _MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            )
            h *= factor
        else:
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
    return Trajectory(np.array(times), np.array(states), np.array(derivs))


class UnitaryPropagation(NamedTuple):
    """Propagator U(t_end, t_start), its unitarity drift, and the tol used."""

    matrix: np.ndarray
    drift: float
    rel_tol_used: float


def propagate_unitary(
    h: Callable[[float], np.ndarray],
    t_start: float,
    t_end: float,
    rel_tol: float = 1e-10,
) -> UnitaryPropagation:
    """Solve i dU/dt = H(t) U with U(t_start) = I; H Hermitian.

    The complex system runs as a real vector of length 2*d*d with
    abs_tol = 1e-2 * rel_tol.  If the drift ||U^dag U - I||_F exceeds
    10*rel_tol the integration reruns at tol/10, at most twice, before
    raising UnitarityBudgetError.
    """
    h0 = np.asarray(h(t_start), dtype=complex)
    if h0.ndim != 2 or h0.shape[0] != h0.shape[1]:
        raise ValueError("H(t) must be a square matrix")
    d = h0.shape[0]
    if np.linalg.norm(h0 - h0.conj().T) > 1e-10 * max(1.0, np.linalg.norm(h0)):
        raise ValueError("H(t_start) is not Hermitian")
    y0 = np.eye(d, dtype=complex).reshape(-1).view(float).copy()
    eye = np.eye(d)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        u = y.view(complex).reshape(d, d)
        return (-1j * (np.asarray(h(t), dtype=complex) @ u)).reshape(-1).view(float)

    tol = rel_tol
    drift = math.inf
    for _ in range(3):
        traj = integrate(rhs, y0, t_start, t_end, rel_tol=tol, abs_tol=1e-2 * tol)
        u = traj.states[-1].view(complex).reshape(d, d).copy()
        drift = float(np.linalg.norm(u.conj().T @ u - eye))
        if drift <= 10.0 * rel_tol:
            return UnitaryPropagation(u, drift, tol)
        tol /= 10.0
    raise UnitarityBudgetError(
        f"unitarity budget exceeded: drift {drift:.3e} at rel_tol {tol * 10.0:.3e}"
    )
