"""Exact-resummation KAM hierarchy for pulse-driven two-level systems.

The splitting H(t) = Omega(t)*sigma_1 + eps*sigma_3 is handled in the frame
rotated by the eps = 0 propagator exp(-i*A(t)*sigma_1).  There the
first-level perturbation has Pauli vector v1(t) = (0, sin 2A(t), cos 2A(t) - 1),
which vanishes before the pulse switches on, and so do all higher-level
averages.  Every level is then a Pauli vector v_p(t) plus its running
rotated integral vhat_p(t), and the resummed remainder makes v_{p+1}
algebraic in (v_p, vhat_p): the whole hierarchy co-integrates as one real
ODE of dimension 3n.  Truncating after n levels leaves the propagator
exactly unitary with an error of order eps^(2^n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ode import Trajectory, integrate
from .pulses import PulseShape
from .su2 import PauliVector, Unitary2, exp_traceless, r_norm

__all__ = [
    "KamConfig",
    "KamHierarchy",
    "eps_power",
    "v1_at",
    "xi_gamma",
    "next_level",
    "build_hierarchy",
    "kam_T",
    "propagator_interaction",
    "propagator_lab",
]

_E1 = PauliVector(1.0, 0.0, 0.0)
_E3 = PauliVector(0.0, 0.0, 1.0)

_XI_GAMMA_SWITCH = 1e-3
_PREFACTOR_FLOOR = 1e-300
_LOG_FLOOR = math.log(_PREFACTOR_FLOOR)
_MAX_LEVELS = 12


def eps_power(epsilon: float, p: int) -> float:
    """eps**(2**(p-1)); 0.0 on underflow below 1e-300, inf on overflow.

    Evaluated in log space for p >= 6, where the exponent 2**(p-1) would
    make direct powering silently lose the under/overflow distinction.
    """
    if p < 1:
        raise ValueError("level index p must be >= 1")
    if epsilon < 0.0:
        raise ValueError("epsilon must be >= 0")
    if epsilon == 0.0:
        return 0.0
    e = 2 ** (p - 1)
    if p < 6:
        try:
            value = epsilon**e
        except OverflowError:
            return math.inf
        return 0.0 if value < _PREFACTOR_FLOOR else value
    lg = e * math.log(epsilon)
    if lg < _LOG_FLOOR:
        return 0.0
    if lg > 709.0:
        return math.inf
    return math.exp(lg)


def v1_at(pulse: PulseShape, t: float) -> PauliVector:
    """First-level Pauli vector (0, sin 2A(t), cos 2A(t) - 1)."""
    two_a = 2.0 * pulse.area(t)
    return PauliVector(0.0, math.sin(two_a), math.cos(two_a) - 1.0)


def xi_gamma(x: float) -> tuple[float, float]:
    """(f_xi, f_gamma): f_xi = (cos x - 1 + x sin x)/x^2, f_gamma = (x cos x - sin x)/x^3.

    Both even and bounded; a fourth-order Taylor branch below x = 1e-3 keeps
    the removable singularity at x = 0 exact, and the x -> inf envelope
    limit is (0, 0).
    """
    if x < _XI_GAMMA_SWITCH:
        x2 = x * x
        return (
            0.5 - x2 / 8.0 + x2 * x2 / 144.0,
            -1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0,
        )
    if math.isinf(x):
        return 0.0, 0.0
    c = math.cos(x)
    s = math.sin(x)
    x2 = x * x
    return (c - 1.0 + x * s) / x2, (x * c - s) / (x2 * x)


def _next_level_comp(vx, vy, vz, hx, hy, hz, a):
    """Component kernel for next_level; a = eps**(2**(p-1))."""
    if not math.isfinite(a):
        return 0.0, 0.0, 0.0
    r = math.sqrt(hx * hx + hy * hy + hz * hz)
    f_xi, f_gamma = xi_gamma(2.0 * a * r)
    cx = hy * vz - hz * vy
    cy = hz * vx - hx * vz
    cz = hx * vy - hy * vx
    dx = hy * cz - hz * cy
    dy = hz * cx - hx * cz
    dz = hx * cy - hy * cx
    k1 = -2.0 * f_xi
    k2 = -4.0 * a * f_gamma
    return k1 * cx + k2 * dx, k1 * cy + k2 * dy, k1 * cz + k2 * dz


def next_level(v: PauliVector, vhat: PauliVector, epsilon: float, p: int) -> PauliVector:
    """Resummed remainder in Pauli form.

    v_{p+1} = -2 f_xi(x) (vhat x v) - 4 a f_gamma(x) (vhat x (vhat x v))
    with a = eps**(2**(p-1)) and x = 2*a*|vhat|; finite for every x.
    """
    a = eps_power(epsilon, p)
    return PauliVector(
        *_next_level_comp(v.x, v.y, v.z, vhat.x, vhat.y, vhat.z, a)
    )


@dataclass(frozen=True)
class KamConfig:
    """One hierarchy build: eps, number of levels, pulse, ODE tolerance."""

    epsilon: float
    n_levels: int
    pulse: PulseShape
    hierarchy_tol: float = 1e-9

    def __post_init__(self) -> None:
        if not math.isfinite(self.epsilon) or self.epsilon < 0.0:
            raise ValueError("epsilon must be finite and >= 0")
        if not 0 <= self.n_levels <= _MAX_LEVELS:
            raise ValueError(f"n_levels must be in [0, {_MAX_LEVELS}]")
        if not self.hierarchy_tol > 0.0:
            raise ValueError("hierarchy_tol must be positive")


@dataclass(frozen=True)
class KamHierarchy:
    """Dense vhat_p(t) trajectories, p = 1..n_levels, over the pulse support.

    Immutable after the build; concurrent propagator queries may share it.
    Outside [t_i, t_f] the trajectory is clamped to its endpoint values.
    """

    config: KamConfig
    trajectory: Trajectory | None

    def v_hat(self, p: int, t: float) -> PauliVector:
        """vhat_p at time t."""
        self._check_level(p)
        y = self.trajectory.at(t)
        j = 3 * (p - 1)
        return PauliVector(y[j], y[j + 1], y[j + 2])

    def r(self, p: int, t: float) -> float:
        """r_p(t) = |vhat_p(t)|."""
        return r_norm(self.v_hat(p, t))

    def _check_level(self, p: int) -> None:
        if not 1 <= p <= self.config.n_levels:
            raise ValueError(
                f"level {p} outside the built hierarchy (n={self.config.n_levels})"
            )


def build_hierarchy(config: KamConfig) -> KamHierarchy:
    """Co-integrate d vhat_p/dt = v_p(t) + 2 eps (e3 x vhat_p), vhat_p(t_i) = 0.

    v_1 comes from v1_at in closed form; v_p for p >= 2 is algebraic in the
    level below via next_level, so one adaptive pass builds all levels.
    """
    n = config.n_levels
    if n == 0:
        return KamHierarchy(config=config, trajectory=None)
    eps = config.epsilon
    area = config.pulse.area
    a_pows = [eps_power(eps, p) for p in range(1, n)]
    two_eps = 2.0 * eps

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        two_a = 2.0 * area(t)
        vx, vy, vz = 0.0, math.sin(two_a), math.cos(two_a) - 1.0
        out = np.empty(3 * n)
        for p in range(n):
            j = 3 * p
            hx, hy, hz = y[j], y[j + 1], y[j + 2]
            out[j] = vx - two_eps * hy
            out[j + 1] = vy + two_eps * hx
            out[j + 2] = vz
            if p + 1 < n:
                vx, vy, vz = _next_level_comp(vx, vy, vz, hx, hy, hz, a_pows[p])
        return out

    traj = integrate(
        rhs,
        np.zeros(3 * n),
        config.pulse.t_i,
        config.pulse.t_f,
        rel_tol=config.hierarchy_tol,
        abs_tol=1e-2 * config.hierarchy_tol,
    )
    return KamHierarchy(config=config, trajectory=traj)


def kam_T(hier: KamHierarchy, p: int, t: float) -> Unitary2:
    """T_p(t) = cos(a*r_p) I - i sin(a*r_p)/r_p * vhat_p.sigma, a = eps**(2**(p-1)).

    Identity when a*r_p = 0 (removable singularity) and when the prefactor
    has under- or overflowed.
    """
    v = hier.v_hat(p, t)
    a = eps_power(hier.config.epsilon, p)
    if a == 0.0 or not math.isfinite(a) or r_norm(v) == 0.0:
        return Unitary2.identity()
    return exp_traceless(a * r_norm(v), v)


def _resolve_n(hier: KamHierarchy, n: int | None) -> int:
    if n is None:
        return hier.config.n_levels
    if not 0 <= n <= hier.config.n_levels:
        raise ValueError("n exceeds the built hierarchy depth")
    return n


def _t_product(hier: KamHierarchy, t: float, n: int) -> Unitary2:
    u = Unitary2.identity()
    for p in range(1, n + 1):
        u = u @ kam_T(hier, p, t)
    return u


def propagator_interaction(
    hier: KamHierarchy, t: float, t0: float, n: int | None = None
) -> Unitary2:
    """T_1(t)..T_n(t) exp(-i (t-t0) eps sigma_3) T_n(t0)^dag .. T_1(t0)^dag.

    n defaults to the built depth; smaller n truncates the same hierarchy.
    """
    n = _resolve_n(hier, n)
    u_h0 = exp_traceless(hier.config.epsilon * (t - t0), _E3)
    if n == 0:
        return u_h0
    left = _t_product(hier, t, n)
    right = _t_product(hier, t0, n)
    return left @ u_h0 @ right.dagger()


def propagator_lab(
    hier: KamHierarchy, t: float, t0: float, n: int | None = None
) -> Unitary2:
    """Lab-frame propagator U0(t) U_int(t, t0) U0(t0)^dag, U0(t) = exp(-i A(t) sigma_1).

    At eps = 0 this reduces exactly to exp(-i [A(t) - A(t0)] sigma_1).
    """
    pulse = hier.config.pulse
    u0_t = exp_traceless(pulse.area(t), _E1)
    u0_t0 = exp_traceless(pulse.area(t0), _E1)
    return u0_t @ propagator_interaction(hier, t, t0, n=n) @ u0_t0.dagger()
