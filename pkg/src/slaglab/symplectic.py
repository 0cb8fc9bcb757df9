"""Linear symplectic algebra on C^n = R^{2n}.

Vectors are stored as real arrays ``(x^1..x^n, y^1..y^n)`` with z = x + iy, so
J(x, y) = (-y, x), omega(u, v) = <Ju, v> and dz = dz^1 ^ ... ^ dz^n.
A Lagrangian plane is given by a real (2n, n) basis matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonLagrangianInput, NotTransversal

LAGRANGIAN_TOL = 1e-10
TRANSVERSAL_TOL = 1e-8
# mixing coefficients tried when simultaneously diagonalising Re/Im parts
_GAMMAS = (0.5772156649015329, 1.3247179572447460, -0.7390851332151607, 2.718281828459045)


def complex_matrix(B: np.ndarray) -> np.ndarray:
    """(2n, k) real basis -> (n, k) complex matrix."""
    n = B.shape[-2] // 2
    return B[..., :n, :] + 1j * B[..., n:, :]


def real_matrix(V: np.ndarray) -> np.ndarray:
    """(n, k) complex matrix -> (2n, k) real basis."""
    return np.concatenate([V.real, V.imag], axis=-2)


def apply_J(v: np.ndarray) -> np.ndarray:
    """Complex structure acting on the first axis of a (2n, ...) array."""
    n = v.shape[0] // 2
    return np.concatenate([-v[n:], v[:n]], axis=0)


def omega(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Standard symplectic form on the last axis."""
    n = u.shape[-1] // 2
    return np.sum(u[..., :n] * v[..., n:] - u[..., n:] * v[..., :n], axis=-1)


def orthonormal_lagrangian(B: np.ndarray, tol: float = LAGRANGIAN_TOL) -> np.ndarray:
    """Orthonormalise a spanning set and check the plane is Lagrangian."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != 2 * B.shape[1]:
        raise DimensionMismatch(f"expected a (2n, n) basis, got {B.shape}")
    Q, R = np.linalg.qr(B)
    if np.min(np.abs(np.diag(R))) < 1e-12 * max(1.0, np.max(np.abs(R))):
        raise NonLagrangianInput("basis is rank deficient")
    W = Q.T @ apply_J(Q)
    if np.max(np.abs(W)) > tol:
        raise NonLagrangianInput(f"omega restricted to plane is {np.max(np.abs(W)):.2e}")
    return Q


def projector(B: np.ndarray) -> np.ndarray:
    Q = np.linalg.qr(B)[0]
    return Q @ Q.T


@dataclass(frozen=True)
class PlanePair:
    """Two transverse Lagrangian planes in normal form.

    ``frame`` is an orthonormal (2n, n) basis E of the base plane such that the
    other plane is spanned by cos(theta_k) E_k + sin(theta_k) J E_k.  The base
    plane is ``p1`` unless ``reversed`` is set, in which case the roles of the
    two planes were exchanged to bring the angle sum to at most n*pi/2.
    """

    p1: np.ndarray
    p2: np.ndarray
    angles: np.ndarray
    frame: np.ndarray
    reversed: bool

    @property
    def n(self) -> int:
        return self.p1.shape[1]

    def rotated_frame(self) -> np.ndarray:
        E = complex_matrix(self.frame)
        return real_matrix(E * np.exp(1j * self.angles))


def _raw_angles(Q1: np.ndarray, Q2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    V1, V2 = complex_matrix(Q1), complex_matrix(Q2)
    W = V1.conj().T @ V2
    S = W @ W.T  # symmetric unitary, eigenvalues exp(2i theta_k)
    S = 0.5 * (S + S.T)
    X, Y = S.real, S.imag
    for gamma in _GAMMAS:
        _, O = np.linalg.eigh(X + gamma * Y)
        D = O.T @ S @ O
        off = D - np.diag(np.diag(D))
        if np.max(np.abs(off)) < 1e-9:
            break
    else:
        raise NotTransversal("could not diagonalise the relative unitary")
    th = np.mod(0.5 * np.angle(np.diag(D)), np.pi)
    return th, V1 @ O


def characteristic_angles(p1: np.ndarray, p2: np.ndarray,
                          tol: float = TRANSVERSAL_TOL) -> PlanePair:
    """Unitary invariants of a pair of transverse Lagrangian planes.

    Angles lie in (0, pi), largest first and the rest descending.  The pair is
    oriented so that the angle sum does not exceed n*pi/2.
    """
    Q1 = orthonormal_lagrangian(p1)
    Q2 = orthonormal_lagrangian(p2)
    if Q1.shape != Q2.shape:
        raise DimensionMismatch(f"plane shapes differ: {Q1.shape} vs {Q2.shape}")
    n = Q1.shape[1]
    th, E = _raw_angles(Q1, Q2)
    if np.min(np.minimum(th, np.pi - th)) < tol:
        raise NotTransversal(f"planes share a direction (min angle {np.min(th):.2e})")
    reversed_ = False
    if np.sum(th) > 0.5 * n * np.pi + 1e-12:
        th, E = _raw_angles(Q2, Q1)
        reversed_ = True
    order = np.argsort(-th, kind="stable")
    th, E = th[order], E[:, order]
    return PlanePair(p1=Q1, p2=Q2, angles=th, frame=real_matrix(E), reversed=reversed_)


def angle_criterion(angles: np.ndarray, tol: float = 1e-10) -> tuple[bool, bool]:
    """(is_special, satisfies_criterion) for normal-form angles.

    The union of the planes is special Lagrangian when the angle sum is a
    multiple of pi; a Lawlor neck joins them when, in normal form, the sum is pi.
    """
    s = float(np.sum(angles))
    m = np.round(s / np.pi)
    special = abs(s - m * np.pi) <= tol
    return bool(special), bool(abs(s - np.pi) <= tol)


def hl_pullback(hess: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(Re, Im) of det_C(I + i Hess): the pullback of dz to a gradient graph."""
    hess = np.asarray(hess, dtype=float)
    n = hess.shape[-1]
    d = np.linalg.det(np.eye(n) + 1j * hess)
    return d.real, d.imag


def rotation_planes(angles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """R^n and its image under diag(exp(i angles)); handy for tests and examples."""
    n = len(angles)
    V = np.diag(np.exp(1j * np.asarray(angles, dtype=float)))
    return real_matrix(np.eye(n, dtype=complex)), real_matrix(V)


def unitary_to_real(U: np.ndarray) -> np.ndarray:
    """Real 2n x 2n matrix of a complex unitary acting on (x, y) coordinates."""
    return np.block([[U.real, -U.imag], [U.imag, U.real]])
