"""Pauli-basis arithmetic for traceless Hermitian 2x2 operators and SU(2).

A traceless Hermitian operator is carried as the real coefficient triple
(x, y, z) of x*sigma_1 + y*sigma_2 + z*sigma_3.  Commutators then reduce to
cross products, conjugation by exp(-i*phi/2*sigma_3) to a rotation about z,
and the matrix exponential to a two-term closed form, which keeps the fast
two-level path free of generic matrix algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SIGMA_1",
    "SIGMA_2",
    "SIGMA_3",
    "PauliVector",
    "Unitary2",
    "StateVector2",
    "pauli_to_matrix",
    "cross_commutator",
    "r_norm",
    "exp_traceless",
    "rotate_z",
]

SIGMA_1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

_UNITARITY_TOL = 1e-12


@dataclass(frozen=True)
class PauliVector:
    """Coefficients (x, y, z) of x*sigma_1 + y*sigma_2 + z*sigma_3."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not (
            math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)
        ):
            raise ValueError("PauliVector components must be finite")


@dataclass(frozen=True)
class StateVector2:
    """Amplitudes (<+1|psi>, <-1|psi>) in the sigma_3 eigenbasis."""

    plus: complex
    minus: complex

    @classmethod
    def lower(cls) -> "StateVector2":
        """The lower level |-1>."""
        return cls(0.0 + 0.0j, 1.0 + 0.0j)

    def norm(self) -> float:
        return math.sqrt(abs(self.plus) ** 2 + abs(self.minus) ** 2)


@dataclass(frozen=True)
class Unitary2:
    """A 2x2 unitary matrix, validated at construction.

    The stored array is a read-only copy; products and adjoints revalidate,
    so accumulated roundoff past the tolerance is caught at the source.
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("Unitary2 expects a 2x2 matrix")
        defect = np.linalg.norm(m.conj().T @ m - np.eye(2))
        if defect > _UNITARITY_TOL:
            raise ValueError(f"matrix is not unitary (defect {defect:.3e})")
        if abs(abs(np.linalg.det(m)) - 1.0) > _UNITARITY_TOL:
            raise ValueError("matrix determinant is off the unit circle")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Unitary2":
        return cls(np.eye(2, dtype=complex))

    def dagger(self) -> "Unitary2":
        return Unitary2(self.matrix.conj().T)

    def __matmul__(self, other: "Unitary2") -> "Unitary2":
        return Unitary2(self.matrix @ other.matrix)

    def apply(self, state: StateVector2) -> StateVector2:
        vec = self.matrix @ np.array([state.plus, state.minus], dtype=complex)
        return StateVector2(complex(vec[0]), complex(vec[1]))


def pauli_to_matrix(v: PauliVector) -> np.ndarray:
    """x*sigma_1 + y*sigma_2 + z*sigma_3 as a complex 2x2 array."""
    return np.array(
        [[v.z, v.x - 1j * v.y], [v.x + 1j * v.y, -v.z]], dtype=complex
    )


def cross_commutator(a: PauliVector, b: PauliVector) -> PauliVector:
    """Cross product a x b; the matrix commutator is 2i*(a x b).sigma."""
    return PauliVector(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    )


def r_norm(v: PauliVector) -> float:
    """Euclidean norm, equal to sqrt(-det) of the represented matrix."""
    return math.sqrt(v.x * v.x + v.y * v.y + v.z * v.z)


def exp_traceless(theta: float, v: PauliVector) -> Unitary2:
    """exp(-i*theta*n.sigma) = cos(theta)*I - i*sin(theta)*(n.sigma), n = v/|v|.

    theta = 0 returns the identity regardless of v.
    """
    if theta == 0.0:
        return Unitary2.identity()
    r = r_norm(v)
    if r == 0.0:
        raise ValueError("zero axis")
    nx, ny, nz = v.x / r, v.y / r, v.z / r
    c = math.cos(theta)
    s = math.sin(theta)
    return Unitary2(
        np.array(
            [
                [c - 1j * s * nz, -s * (ny + 1j * nx)],
                [s * (ny - 1j * nx), c + 1j * s * nz],
            ]
        )
    )


def rotate_z(v: PauliVector, phi: float) -> PauliVector:
    """Rotate (x, y) by phi in the x -> y sense, z unchanged.

    Matches conjugation v.sigma -> U (v.sigma) U^dag with
    U = exp_traceless(phi/2, e3), i.e. U = exp(-i*phi/2*sigma_3).
    """
    c = math.cos(phi)
    s = math.sin(phi)
    return PauliVector(v.x * c - v.y * s, v.x * s + v.y * c, v.z)
