"""Brute-force reference solutions for the cell problem on tiny grids.

Nothing here reuses the operator code of :mod:`shellhom.cell`. The relaxation
fields are expanded in an explicit real trigonometric basis (tensor products
of ``1, cos 2πky, sin 2πky`` for ``k < N/2``), thickness dependence uses
monomials ``t^l``, strains are written directly as ambient 3x3 tensors with
the frame vectors ``τ^α`` and ``n``, and the functional is assembled as a
dense least-squares problem ``min ‖b + A x‖²``.
"""

import math

import numpy as np

from .cell.operators import check_gamma
from .cell.solver import CellSolution
from .errors import NotSPD, TooLarge

MAX_DOF = 2000


def trig_basis_1d(n):
    """Values and exact first and second derivatives of the 1D basis at ``n`` nodes.

    Returns three ``(n - 1, n)`` arrays ``(B, dB, ddB)``.
    """
    y = np.arange(n) / n
    rows, d_rows, dd_rows = [np.ones(n)], [np.zeros(n)], [np.zeros(n)]
    for k in range(1, n // 2):
        w = 2 * np.pi * k
        rows += [np.cos(w * y), np.sin(w * y)]
        d_rows += [-w * np.sin(w * y), w * np.cos(w * y)]
        dd_rows += [-(w**2) * np.cos(w * y), -(w**2) * np.sin(w * y)]
    return np.array(rows), np.array(d_rows), np.array(dd_rows)


def trig_basis_2d(n):
    """Dict of ``(n_b, n, n)`` arrays: value and derivatives of the tensor basis."""
    B, dB, ddB = trig_basis_1d(n)
    outer = lambda a, b: np.einsum("ix,jy->ijxy", a, b).reshape(-1, n, n)
    return {
        "f": outer(B, B),
        "1": outer(dB, B),
        "2": outer(B, dB),
        "11": outer(ddB, B),
        "22": outer(B, ddB),
        "12": outer(dB, dB),
    }


def _sym(a, b):
    return 0.5 * (np.multiply.outer(a, b) + np.multiply.outer(b, a))


def _voigt6_field(M):
    s = np.sqrt(2.0)
    return np.stack(
        [M[..., 0, 0], M[..., 1, 1], M[..., 2, 2], s * M[..., 1, 2], s * M[..., 0, 2], s * M[..., 0, 1]],
        axis=-1,
    )


class _Assembler:
    """Collects strain columns ``(n_t, N, N, 3, 3)`` and weights them into ``A``."""

    def __init__(self, C, weights, N):
        L = np.linalg.cholesky(C)  # C = L Lᵀ
        sw = np.sqrt(np.asarray(weights) / N**2)[:, None, None, None, None]
        self.Lt = sw * np.swapaxes(L, -1, -2)
        self.cols = []

    def weigh(self, M):
        return np.einsum("...ij,...j->...i", self.Lt, _voigt6_field(M)).ravel()

    def add(self, M):
        self.cols.append(self.weigh(M))

    def matrix(self):
        return np.column_stack(self.cols)


def _gauss(n):
    s, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * s, 0.5 * w


def dof_count(gamma, grid):
    gamma = check_gamma(gamma)
    nb = (grid.n_y - 1) ** 2
    if gamma == 0.0:
        return 3 * nb + 3 * grid.n_t * grid.n_y**2 + 3
    if math.isinf(gamma):
        return grid.n_t * (3 * nb + 3) + 3
    return 3 * nb * (grid.p_leg + 1) + 3


def assemble_dense(gamma, law, frame, q, grid, x=None):
    """Dense least-squares form ``(A, b)`` of the discrete cell functional.

    Column order: relaxation coefficients first, then the three entries of
    ``p``. The functional value at coefficients ``c`` is ``‖b + A c‖²``.
    """
    gamma = check_gamma(gamma)
    n_dof = dof_count(gamma, grid)
    if n_dof > MAX_DOF:
        raise TooLarge(f"{n_dof} unknowns exceed the dense limit {MAX_DOF}")
    N = grid.n_y
    finite = gamma != 0.0 and not math.isinf(gamma)
    t, w = _gauss(max(grid.n_t, grid.p_leg + 1)) if finite else _gauss(grid.n_t)
    x = np.zeros(3) if x is None else np.asarray(x, float)
    C = law.sample(x, t, np.arange(N) / N)
    asm = _Assembler(C, w, N)

    td, n = frame.tau_dual, frame.normal
    TT = [[np.outer(td[a], td[b]) for b in range(2)] for a in range(2)]
    TN = [_sym(td[a], n) for a in range(2)]
    NN = np.outer(n, n)
    tb = trig_basis_2d(N)
    nb = tb["f"].shape[0]
    zeros = np.zeros((len(t), N, N, 3, 3))

    def tangential(M2):
        """Ambient ``Σ M2_αβ τ^α ⊗ τ^β`` from a ``(..., 2, 2)`` field."""
        return np.einsum("...ab,abij->...ij", M2, np.array(TT))

    def def_y(k, comp):
        # sym ∇ of ζ = e_comp · basis_k
        G = np.zeros((N, N, 2, 2))
        d = [tb["1"][k], tb["2"][k]]
        for a in range(2):
            G[..., comp, a] += 0.5 * d[a]
            G[..., a, comp] += 0.5 * d[a]
        return tangential(G)

    def hess_y(k):
        H = np.stack([np.stack([tb["11"][k], tb["12"][k]], -1), np.stack([tb["12"][k], tb["22"][k]], -1)], -2)
        return tangential(H)

    tt = t[:, None, None, None, None]
    if gamma == 0.0:
        for comp in range(2):
            for k in range(nb):
                asm.add(zeros + def_y(k, comp))
        for k in range(nb):
            asm.add(-tt * hess_y(k))
        for i in range(len(t)):
            for a in range(3):
                E = TN[a] * 2.0 if a < 2 else NN
                for ix in range(N):
                    for iy in range(N):
                        M = np.zeros_like(zeros)
                        M[i, ix, iy] = E
                        asm.add(M)
    elif math.isinf(gamma):
        for i in range(len(t)):
            slab = np.zeros((len(t), 1, 1, 1, 1))
            slab[i] = 1.0
            for comp in range(2):
                for k in range(nb):
                    asm.add(slab * def_y(k, comp))
            for k in range(nb):
                grad = 2.0 * (tb["1"][k][..., None, None] * TN[0] + tb["2"][k][..., None, None] * TN[1])
                asm.add(slab * grad)
            for a in range(3):
                E = 2.0 * TN[a] if a < 2 else NN
                asm.add(slab * E + zeros)
    else:
        ig = 1.0 / gamma
        for comp in range(2):
            for l in range(grid.p_leg + 1):
                tl = (t**l)[:, None, None, None, None]
                dtl = (l * t ** (l - 1) if l > 0 else 0.0 * t)[:, None, None, None, None]
                for k in range(nb):
                    f = tb["f"][k][..., None, None]
                    asm.add(tl * def_y(k, comp) + ig * dtl * f * TN[comp])
        for l in range(grid.p_leg + 1):
            tl = (t**l)[:, None, None, None, None]
            dtl = (l * t ** (l - 1) if l > 0 else 0.0 * t)[:, None, None, None, None]
            for k in range(nb):
                f = tb["f"][k][..., None, None]
                grad = tb["1"][k][..., None, None] * TN[0] + tb["2"][k][..., None, None] * TN[1]
                asm.add(tl * grad + ig * dtl * f * NN)

    # constant tangential p and the load t q
    p_basis = [TT[0][0], TT[1][1], np.sqrt(0.5) * (TT[0][1] + TT[1][0])]
    for P in p_basis:
        asm.add(zeros + P)
    q = np.asarray(q, float)
    Q = sum(qi * Pi for qi, Pi in zip(q, p_basis))
    b = asm.weigh(tt * Q + zeros)
    return asm.matrix(), b


def dense_minimum(A, b, rcond=1e-13):
    """Minimum-norm minimiser of ``‖b + A c‖²`` and the attained value."""
    c, *_ = np.linalg.lstsq(A, -b, rcond=rcond)
    r = b + A @ c
    return c, float(r @ r)


def dense_cell_solve(gamma, law, frame, q, grid, x=None):
    """Exact discrete minimum of the cell functional by dense least squares.

    Returns a :class:`CellSolution` whose ``fields`` is the raw coefficient
    vector of the oracle basis.
    """
    gamma = check_gamma(gamma)
    A, b = assemble_dense(gamma, law, frame, q, grid, x)
    c, value = dense_minimum(A, b)
    return CellSolution(gamma, {"coefficients": c[:-3]}, c[-3:], value, 0.0, 0)


def spd_audit(form, tol=0.0):
    """Eigenvalues of an effective form and its bound ``C = max(λ_max, 1/λ_min)``."""
    m = getattr(form, "m", form)
    lam = np.linalg.eigvalsh(0.5 * (np.asarray(m) + np.asarray(m).T))
    if lam[0] <= tol:
        raise NotSPD(f"smallest eigenvalue {lam[0]:.3e}")
    return lam, float(max(lam[-1], 1.0 / lam[0]))
