"""Norm-preserving Voigt maps for symmetric 2x2 and 3x3 tensors.

Six-vectors are ordered ``(G11, G22, G33, √2 G23, √2 G13, √2 G12)`` and
three-vectors ``(q11, q22, √2 q12)``; off-diagonals carry a √2 so that the
Euclidean norm of the vector is the Frobenius norm of the symmetric part.
"""

import numpy as np

SQ2 = np.sqrt(2.0)

# (row, col) of each Voigt-6 slot
VOIGT6_INDEX = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))
VOIGT2_INDEX = ((0, 0), (1, 1), (0, 1))

# slots of a Voigt-6 vector that hold the in-plane (11, 22, 12) entries,
# in Voigt-2 order, and the remaining out-of-plane (33, 23, 13) entries
TANGENTIAL = np.array([0, 1, 5])
NORMAL = np.array([2, 3, 4])


def voigt6(G):
    """Voigt-6 vector of ``sym G``; ``G`` has shape ``(..., 3, 3)``."""
    G = np.asarray(G, dtype=float)
    S = 0.5 * (G + np.swapaxes(G, -1, -2))
    return np.stack(
        [
            S[..., 0, 0],
            S[..., 1, 1],
            S[..., 2, 2],
            SQ2 * S[..., 1, 2],
            SQ2 * S[..., 0, 2],
            SQ2 * S[..., 0, 1],
        ],
        axis=-1,
    )


def unvoigt6(v):
    v = np.asarray(v, dtype=float)
    G = np.empty(v.shape[:-1] + (3, 3))
    G[..., 0, 0] = v[..., 0]
    G[..., 1, 1] = v[..., 1]
    G[..., 2, 2] = v[..., 2]
    G[..., 1, 2] = G[..., 2, 1] = v[..., 3] / SQ2
    G[..., 0, 2] = G[..., 2, 0] = v[..., 4] / SQ2
    G[..., 0, 1] = G[..., 1, 0] = v[..., 5] / SQ2
    return G


def voigt2(q):
    """Voigt-2 vector of ``sym q``; ``q`` has shape ``(..., 2, 2)``."""
    q = np.asarray(q, dtype=float)
    off = 0.5 * (q[..., 0, 1] + q[..., 1, 0])
    return np.stack([q[..., 0, 0], q[..., 1, 1], SQ2 * off], axis=-1)


def unvoigt2(v):
    v = np.asarray(v, dtype=float)
    q = np.empty(v.shape[:-1] + (2, 2))
    q[..., 0, 0] = v[..., 0]
    q[..., 1, 1] = v[..., 1]
    q[..., 0, 1] = q[..., 1, 0] = v[..., 2] / SQ2
    return q


def change_of_basis6(P):
    """Matrix ``T`` with ``voigt6(P.T @ E @ P) = T @ voigt6(E)``.

    ``P`` is ``(..., 3, 3)``. A quadratic form ``C`` on ambient strains pulls
    back to ``T.T @ C @ T`` on strains expressed through ``P``'s rows.
    """
    P = np.asarray(P, dtype=float)
    basis = unvoigt6(np.eye(6))  # (6, 3, 3); basis[j] = unvoigt6(e_j)
    Pt = np.swapaxes(P, -1, -2)
    cols = voigt6(Pt[..., None, :, :] @ basis @ P[..., None, :, :])  # (..., 6j, 6i)
    return np.swapaxes(cols, -1, -2)


def change_of_basis2(L):
    """Matrix ``M`` with ``voigt2(L @ q @ L.T) = M @ voigt2(q)`` for 2x2 ``L``."""
    L = np.asarray(L, dtype=float)
    basis = unvoigt2(np.eye(3))
    Lt = np.swapaxes(L, -1, -2)
    cols = voigt2(L[..., None, :, :] @ basis @ Lt[..., None, :, :])
    return np.swapaxes(cols, -1, -2)
