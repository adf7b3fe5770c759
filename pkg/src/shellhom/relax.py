"""Pointwise relaxation of a 3D quadratic density to a tangential quadratic form.

``Q_2(q) = min { Q(M) : M symmetric, M(T_S, T_S) = q(T_S, T_S) }``. With the
tangential block pinned, the minimisation over the three out-of-plane
entries is a Schur complement of the Voigt matrix.
"""

from dataclasses import dataclass

import numpy as np

from .errors import FrameMismatch, SingularBlock
from .voigt import NORMAL, TANGENTIAL, change_of_basis6, voigt6

MAX_BLOCK_COND = 1e12


@dataclass
class TangentQuadraticForm:
    """3x3 matrix on dual-frame Voigt-2 vectors, tied to the frame it was built in."""

    m2: np.ndarray
    frame_key: bytes = b""

    def __call__(self, q):
        return q2_value(self, q)


def schur_tangential(C):
    """Schur complement of the out-of-plane block of frame-coordinate Voigt ``C``.

    ``C`` has shape ``(..., 6, 6)``; returns ``(S, K)`` with ``S`` the
    ``(..., 3, 3)`` relaxed form and ``K = -C_nn⁻¹ C_nt`` the optimal
    out-of-plane response to a unit tangential strain.
    """
    Ctt = C[..., TANGENTIAL[:, None], TANGENTIAL]
    Ctn = C[..., TANGENTIAL[:, None], NORMAL]
    Cnn = C[..., NORMAL[:, None], NORMAL]
    if np.any(np.linalg.cond(Cnn) > MAX_BLOCK_COND):
        raise SingularBlock("out-of-plane block is numerically singular")
    K = -np.linalg.solve(Cnn, np.swapaxes(Ctn, -1, -2))
    S = Ctt + Ctn @ K
    return 0.5 * (S + np.swapaxes(S, -1, -2)), K


def q2_form(voigt, frame):
    """Relaxed tangential form of ``voigt`` at ``frame``, in dual-frame Voigt-2.

    The Voigt matrix is rotated into the orthonormal frame ``(e1, e2, n)``,
    relaxed there, and mapped back to the coefficients of ``q_αβ τ^α ⊗ τ^β``.
    """
    E = frame.orthonormal()
    C_o = change_of_basis6(E).T @ np.asarray(voigt, float) @ change_of_basis6(E)
    S_o, _ = schur_tangential(C_o)
    M = frame.dual_to_orthonormal()
    return TangentQuadraticForm(M.T @ S_o @ M, frame.key())


def q2_value(form, q, frame=None):
    if frame is not None and frame.key() != form.frame_key:
        raise FrameMismatch("form was built for a different frame")
    q = np.asarray(q, dtype=float)
    return np.einsum("...i,ij,...j->...", q, form.m2, q)


def brute_force_q2(voigt, frame, q):
    """Direct minimisation over the free out-of-plane entries of ``M``.

    Works in ambient coordinates: ``M = q(T_S,T_S) + Σ a_k B_k`` with
    ``B = {e1⊙n, e2⊙n, n⊗n}``, and solves the 3x3 stationarity system.
    """
    C = np.asarray(voigt, dtype=float)
    E = frame.orthonormal()
    n = E[2]
    B = [0.5 * (np.outer(E[0], n) + np.outer(n, E[0])),
         0.5 * (np.outer(E[1], n) + np.outer(n, E[1])),
         np.outer(n, n)]
    vB = np.array([voigt6(b) for b in B])
    vq = voigt6(frame.embed(q))
    H = vB @ C @ vB.T
    rhs = -vB @ C @ vq
    a = np.linalg.solve(H, rhs)
    v = vq + a @ vB
    return float(v @ C @ v)
