"""General d x d KAM machinery and the brute-force counterpart of the
two-level fast path.

Covers the autonomous commutator-equation split (time average D plus
off-diagonal generator W), the pulsed-case closed forms for the averages
and the effective-frame propagator, the truncated commutator series for
the next-level remainder, and a mesh-based pulsed propagator engine.
Operators are explicit complex matrices; exponentials of Hermitian
generators go through eigendecompositions so every constructed factor is
exactly unitary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .twolevel import eps_power

__all__ = [
    "QuadratureError",
    "EigenSystem",
    "PulsedKamLevels",
    "as_hermitian",
    "unitary_exp",
    "autonomous_average",
    "pulsed_vbar",
    "pulsed_s1_and_he1",
    "hatv_general",
    "remainder_truncated",
    "pulsed_propagator_general",
]

_HERMITICITY_TOL = 1e-12
_RECONSTRUCTION_TOL = 1e-11
_CLUSTER_GAP_RTOL = 1e-9


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach its tolerance."""


def as_hermitian(m, tol: float = _HERMITICITY_TOL) -> np.ndarray:
    """Validate Hermiticity and return a complex copy of m."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    defect = float(np.linalg.norm(a - a.conj().T))
    if defect > tol * max(1.0, float(np.linalg.norm(a))):
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e})")
    return a


def unitary_exp(h: np.ndarray, c: float = 1.0) -> np.ndarray:
    """exp(-i*c*h) for Hermitian h via eigendecomposition."""
    w, q = np.linalg.eigh(h)
    return (q * np.exp(-1j * c * w)) @ q.conj().T


@dataclass(frozen=True)
class EigenSystem:
    """Spectrum of a time-independent reference operator.

    Eigenvalues ascend; degenerate clusters are index groups whose
    consecutive gaps fall below gap_rtol times the spectral range.
    """

    values: np.ndarray
    vectors: np.ndarray
    clusters: tuple[tuple[int, ...], ...]

    @classmethod
    def from_operator(cls, k0, gap_rtol: float = _CLUSTER_GAP_RTOL) -> "EigenSystem":
        mat = as_hermitian(k0)
        w, q = np.linalg.eigh(mat)
        recon = float(np.linalg.norm((q * w) @ q.conj().T - mat))
        if recon > _RECONSTRUCTION_TOL * max(1.0, float(np.linalg.norm(mat))):
            raise ValueError(f"eigendecomposition reconstruction error {recon:.3e}")
        # Floor the clustering threshold at rounding scale so an operator
        # whose spectrum is degenerate up to eigensolver noise (spectral
        # range ~1e-16) still collapses into a single cluster instead of
        # producing near-zero denominators downstream.
        scale = max(1.0, abs(float(w[0])), abs(float(w[-1])))
        gap = max(gap_rtol * float(w[-1] - w[0]), 1e-12 * scale)
        clusters: list[list[int]] = [[0]]
        for j in range(1, w.size):
            if float(w[j] - w[j - 1]) <= gap:
                clusters[-1].append(j)
            else:
                clusters.append([j])
        w.setflags(write=False)
        q.setflags(write=False)
        return cls(
            values=w, vectors=q, clusters=tuple(tuple(c) for c in clusters)
        )

    def cluster_mask(self) -> np.ndarray:
        """Boolean (d, d) mask, True where both indices share a cluster."""
        d = self.values.size
        mask = np.zeros((d, d), dtype=bool)
        for c in self.clusters:
            idx = np.asarray(c)
            mask[np.ix_(idx, idx)] = True
        return mask


def autonomous_average(k0: EigenSystem, v) -> tuple[np.ndarray, np.ndarray]:
    """Split V into (D, W) with [K0, D] = 0 and [K0, W] + V = D.

    In the K0 eigenbasis D is the block of V over degenerate clusters and
    W_jk = -V_jk / (E_j - E_k) off the clusters, zero inside them.
    """
    vm = as_hermitian(v)
    q = k0.vectors
    vt = q.conj().T @ vm @ q
    mask = k0.cluster_mask()
    diff = k0.values[:, None] - k0.values[None, :]
    dt = np.where(mask, vt, 0.0)
    wt = np.where(mask, 0.0, -vt / np.where(mask, 1.0, diff))
    d_op = q @ dt @ q.conj().T
    w_op = q @ wt @ q.conj().T
    return d_op, w_op


def pulsed_vbar(
    u_h0: Callable[[float, float], np.ndarray], v1_ti, ti: float, t: float
) -> np.ndarray:
    """Average of a pulsed perturbation: U_H0(t, ti) V(ti) U_H0(t, ti)^dag.

    Requires V(ti) to commute with the reference propagator before ti;
    for t <= ti the average is V(ti) itself.
    """
    v0 = as_hermitian(v1_ti)
    if t <= ti:
        return v0
    u = np.asarray(u_h0(t, ti), dtype=complex)
    return u @ v0 @ u.conj().T


def pulsed_s1_and_he1(
    u_h0: Callable[[float, float], np.ndarray],
    v1_ti,
    epsilon: float,
    ti: float,
    t: float,
    t0: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Closed forms for the first pulsed iteration.

    S1 = U_H0(t0, ti) exp(-i (t - t0) eps V(ti)) U_H0(t0, ti)^dag and
    U_He1 = U_H0(t, ti) exp(-i (t - t0) eps V(ti)) U_H0(t0, ti)^dag,
    so that U_He1 = U_H0(t, t0) S1.  Higher iterations have S_p = I.
    """
    v0 = as_hermitian(v1_ti)
    core = unitary_exp(v0, epsilon * (t - t0))
    u_t0 = np.asarray(u_h0(t0, ti), dtype=complex)
    u_t = np.asarray(u_h0(t, ti), dtype=complex)
    s1 = u_t0 @ core @ u_t0.conj().T
    u_he1 = u_t @ core @ u_t0.conj().T
    return s1, u_he1


def _simpson(vals: np.ndarray, h: float) -> np.ndarray:
    """Composite Simpson over a uniform mesh with an even interval count."""
    return (h / 3.0) * (
        vals[0]
        + vals[-1]
        + 4.0 * vals[1:-1:2].sum(axis=0)
        + 2.0 * vals[2:-2:2].sum(axis=0)
    )


def hatv_general(
    u_he: Callable[[float, float], np.ndarray],
    v_p: Callable[[float], np.ndarray],
    vbar_p: Callable[[float], np.ndarray],
    ti: float,
    t: float,
    tol: float = 1e-9,
    max_intervals: int = 1 << 16,
) -> np.ndarray:
    """Vhat(t) = integral over [ti, t] of U(t,u) (V(u) - Vbar(u)) U(t,u)^dag du.

    Composite Simpson with interval doubling (reusing previous nodes) until
    two successive estimates agree within tol in Frobenius norm; zero for
    t <= ti.
    """
    d = np.asarray(v_p(ti)).shape[0]
    if t <= ti:
        return np.zeros((d, d), dtype=complex)

    def integrand(u: float) -> np.ndarray:
        um = np.asarray(u_he(t, u), dtype=complex)
        x = np.asarray(v_p(u), dtype=complex) - np.asarray(vbar_p(u), dtype=complex)
        return um @ x @ um.conj().T

    n = 64
    nodes = np.linspace(ti, t, n + 1)
    vals = np.stack([integrand(u) for u in nodes])
    prev = _simpson(vals, (t - ti) / n)
    while n < max_intervals:
        mids = 0.5 * (nodes[:-1] + nodes[1:])
        mid_vals = np.stack([integrand(u) for u in mids])
        n *= 2
        merged_nodes = np.empty(n + 1)
        merged_nodes[0::2] = nodes
        merged_nodes[1::2] = mids
        merged_vals = np.empty((n + 1, d, d), dtype=complex)
        merged_vals[0::2] = vals
        merged_vals[1::2] = mid_vals
        nodes, vals = merged_nodes, merged_vals
        cur = _simpson(vals, (t - ti) / n)
        if float(np.linalg.norm(cur - prev)) < tol:
            return cur
        prev = cur
    raise QuadratureError("quadrature nonconvergence")


def remainder_truncated(
    vhat, v, d_op, epsilon: float, p: int, k_max: int = 30
) -> np.ndarray:
    """Truncated commutator series for the next-level remainder.

    Sum over k = 1..k_max of i^k a^(k-1) / (k+1)! times
    (k ad^k(Vhat, V) + ad^k(Vhat, D)) with a = eps**(2**(p-1)) and
    ad(X, Y) = [X, Y].  Every term is Hermitian.  d_op may be None when the
    partition has no average part.  Stops early once terms stall below
    1e-16 of the accumulated sum.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    vh = as_hermitian(vhat)
    ad_v = as_hermitian(v)
    ad_d = None if d_op is None else as_hermitian(d_op)
    a = eps_power(epsilon, p)
    if not math.isfinite(a):
        raise ValueError("series prefactor overflowed; remainder undefined")
    total = np.zeros_like(vh)
    coef_i = 1.0 + 0.0j
    a_pow = 1.0
    fact = 2.0
    for k in range(1, k_max + 1):
        ad_v = vh @ ad_v - ad_v @ vh
        if ad_d is not None:
            ad_d = vh @ ad_d - ad_d @ vh
        coef_i *= 1j
        if k > 1:
            a_pow *= a
            fact *= k + 1
        term = k * ad_v if ad_d is None else k * ad_v + ad_d
        term = (coef_i * a_pow / fact) * term
        total = total + term
        if k >= 2 and float(np.linalg.norm(term)) < 1e-16 * max(
            1e-300, float(np.linalg.norm(total))
        ):
            break
    return total


def pulsed_propagator_general(
    t_levels: Sequence[Callable[[float], np.ndarray]],
    u_h0: Callable[[float, float], np.ndarray],
    v1_ti,
    epsilon: float,
    n: int,
    t: float,
    t0: float,
    ti: float,
) -> np.ndarray:
    """n-iteration pulsed propagator in the first interaction frame.

    T_1(t)..T_n(t) U_H0(t,ti) exp(-i (t-t0) eps V(ti)) U_H0(t0,ti)^dag
    T_n(t0)^dag..T_1(t0)^dag; unitary by construction at any truncation.
    """
    if not 0 <= n <= len(t_levels):
        raise ValueError("n out of range for the supplied levels")
    v0 = as_hermitian(v1_ti)
    d = v0.shape[0]
    core = (
        np.asarray(u_h0(t, ti), dtype=complex)
        @ unitary_exp(v0, epsilon * (t - t0))
        @ np.asarray(u_h0(t0, ti), dtype=complex).conj().T
    )
    left = np.eye(d, dtype=complex)
    right = np.eye(d, dtype=complex)
    for p in range(n):
        left = left @ np.asarray(t_levels[p](t), dtype=complex)
        right = right @ np.asarray(t_levels[p](t0), dtype=complex)
    return left @ core @ right.conj().T


def _cumulative_simpson(f: np.ndarray, h: float) -> np.ndarray:
    """Running integral of mesh samples f (odd node count, uniform step h)."""
    out = np.zeros_like(f)
    pair = (h / 3.0) * (f[0:-2:2] + 4.0 * f[1:-1:2] + f[2::2])
    out[2::2] = np.cumsum(pair, axis=0)
    out[1::2] = out[0:-2:2] + (h / 12.0) * (
        5.0 * f[0:-2:2] + 8.0 * f[1:-1:2] - f[2::2]
    )
    return out


def _hermite_matrix(times: np.ndarray, values: np.ndarray, derivs: np.ndarray, t: float):
    """Cubic Hermite interpolation of matrix-valued mesh data, clamped."""
    if t <= times[0]:
        return values[0]
    if t >= times[-1]:
        return values[-1]
    j = int(np.searchsorted(times, t, side="right")) - 1
    if times[j] == t:
        return values[j]
    h = times[j + 1] - times[j]
    s = (t - times[j]) / h
    om = 1.0 - s
    h00 = (1.0 + 2.0 * s) * om * om
    h10 = s * om * om
    h01 = s * s * (3.0 - 2.0 * s)
    h11 = s * s * (s - 1.0)
    return (
        h00 * values[j]
        + h01 * values[j + 1]
        + h * (h10 * derivs[j] + h11 * derivs[j + 1])
    )


class PulsedKamLevels:
    """Mesh-based KAM levels for a pulsed perturbation in d dimensions.

    Given the reference propagator u_h0(t, t0) in closed form and the
    perturbation V(t), builds on a uniform mesh over [ti, tf]:

      R_p(u)   -- frame propagator for level p: U_H0(u, ti) for p = 1 and
                  the effective U_He1(u, ti) for p >= 2 (the average is
                  absorbed after the first iteration; all higher averages
                  vanish for pulsed perturbations),
      W_p(u)   -- running integral of R_p^dag (V_p - Vbar_p) R_p,
      Vhat_p(u) = R_p(u) W_p(u) R_p(u)^dag,
      T_p(u)   = exp(-i a_p Vhat_p(u)), a_p = eps**(2**(p-1)),

    with V_{p+1} from the truncated commutator series on the mesh.  The
    rotated running integral keeps the build O(mesh) per level while
    matching the defining integral exactly (R_p(t) R_p(u)^dag is the
    two-time propagator).  Off-mesh queries interpolate W_p by cubic
    Hermite -- its mesh derivative is the integrand itself.
    """

    def __init__(
        self,
        u_h0: Callable[[float, float], np.ndarray],
        v_func: Callable[[float], np.ndarray],
        epsilon: float,
        n: int,
        ti: float,
        tf: float,
        mesh_points: int = 4001,
        series_k: int = 30,
    ) -> None:
        if n < 0:
            raise ValueError("n must be >= 0")
        if mesh_points < 3 or mesh_points % 2 == 0:
            raise ValueError("mesh_points must be an odd integer >= 3")
        if not tf > ti:
            raise ValueError("tf must exceed ti")
        self.u_h0 = u_h0
        self.epsilon = float(epsilon)
        self.n = int(n)
        self.ti = float(ti)
        self.tf = float(tf)
        self.v1_ti = as_hermitian(v_func(ti))
        d = self.v1_ti.shape[0]
        self._d = d
        self._v1_ti_zero = float(np.linalg.norm(self.v1_ti)) == 0.0

        times = np.linspace(ti, tf, mesh_points)
        h = float(times[1] - times[0])
        self.times = times
        u0_mesh = np.stack(
            [np.asarray(u_h0(u, ti), dtype=complex) for u in times]
        )
        v_mesh = np.stack([np.asarray(v_func(u), dtype=complex) for u in times])
        # level-1 average on the mesh; zero for every later level
        vbar_mesh = np.einsum(
            "tij,jk,tlk->til", u0_mesh, self.v1_ti, u0_mesh.conj()
        )
        r_mesh = u0_mesh
        self._levels: list[dict] = []
        for p in range(1, self.n + 1):
            if p == 2 and not self._v1_ti_zero:
                shift = np.stack(
                    [
                        unitary_exp(self.v1_ti, self.epsilon * (u - ti))
                        for u in times
                    ]
                )
                r_mesh = np.einsum("tij,tjk->tik", u0_mesh, shift)
            g_mesh = np.einsum(
                "tji,tjk,tkl->til",
                r_mesh.conj(),
                v_mesh - vbar_mesh,
                r_mesh,
            )
            w_mesh = _cumulative_simpson(g_mesh, h)
            vhat_mesh = np.einsum(
                "tij,tjk,tlk->til", r_mesh, w_mesh, r_mesh.conj()
            )
            a_p = eps_power(self.epsilon, p)
            self._levels.append(
                {"p": p, "a": a_p, "w": w_mesh, "g": g_mesh}
            )
            if p < self.n:
                v_next = np.empty_like(v_mesh)
                for j in range(times.size):
                    v_next[j] = remainder_truncated(
                        vhat_mesh[j],
                        v_mesh[j],
                        None if self._v1_ti_zero else vbar_mesh[j],
                        self.epsilon,
                        p,
                        k_max=series_k,
                    )
                v_mesh = v_next
                vbar_mesh = np.zeros_like(vbar_mesh)

    def _frame(self, p: int, t: float) -> np.ndarray:
        u0 = np.asarray(self.u_h0(t, self.ti), dtype=complex)
        if p == 1 or self._v1_ti_zero:
            return u0
        return u0 @ unitary_exp(self.v1_ti, self.epsilon * (t - self.ti))

    def vhat(self, p: int, t: float) -> np.ndarray:
        """Vhat_p(t); the running integral is clamped outside [ti, tf]."""
        level = self._level(p)
        w = _hermite_matrix(self.times, level["w"], level["g"], t)
        r = self._frame(p, t)
        return r @ w @ r.conj().T

    def t_func(self, p: int) -> Callable[[float], np.ndarray]:
        """T_p as a callable of time, for pulsed_propagator_general."""
        level = self._level(p)
        a_p = level["a"]

        def t_of(t: float) -> np.ndarray:
            if a_p == 0.0 or not math.isfinite(a_p):
                return np.eye(self._d, dtype=complex)
            return unitary_exp(self.vhat(p, t), a_p)

        return t_of

    def propagator(self, t: float, t0: float, n: int | None = None) -> np.ndarray:
        """n-iteration pulsed propagator between t0 and t (first frame)."""
        depth = self.n if n is None else n
        if not 0 <= depth <= self.n:
            raise ValueError("n exceeds the built depth")
        levels = [self.t_func(p) for p in range(1, depth + 1)]
        return pulsed_propagator_general(
            levels, self.u_h0, self.v1_ti, self.epsilon, depth, t, t0, self.ti
        )

    def _level(self, p: int) -> dict:
        if not 1 <= p <= self.n:
            raise ValueError(f"level {p} outside the built engine (n={self.n})")
        return self._levels[p - 1]
