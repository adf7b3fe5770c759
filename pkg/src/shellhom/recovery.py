"""Least-squares solution of the infinitesimal bending system ``q^s_w = B``.

``(q^s_w)_αβ = ½(∂_α s · ∂_β w + ∂_α w · ∂_β s)`` is discretised with the
second-order differences of :func:`numpy.gradient` (centred inside,
one-sided at the patch boundary), applied to the sampled chart and to
``w`` alike. With one stencil for both, infinitesimal rigid motions
``a × s + b`` lie exactly in the discrete kernel.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from . import geometry as geo
from .errors import NoConvergence, NotConvex, ShapeMismatch
from .voigt import SQ2


def gradient_matrix(n, h):
    """Sparse matrix of ``np.gradient(f, h, edge_order=2)`` on ``n`` nodes."""
    rows, cols, vals = [], [], []

    def put(i, js, cs):
        rows.extend([i] * len(js))
        cols.extend(js)
        vals.extend(c / h for c in cs)

    put(0, [0, 1, 2], [-1.5, 2.0, -0.5])
    for i in range(1, n - 1):
        put(i, [i - 1, i + 1], [-0.5, 0.5])
    put(n - 1, [n - 3, n - 2, n - 1], [0.5, -2.0, 1.5])
    return sps.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _as_sym_field(B, shape):
    B = np.asarray(B, dtype=float)
    if B.shape == shape + (2, 2):
        return np.stack([B[..., 0, 0], B[..., 1, 1], 0.5 * (B[..., 0, 1] + B[..., 1, 0])], axis=-1)
    if B.shape == shape + (3,):
        return B
    raise ShapeMismatch(f"B has shape {B.shape}, expected {shape + (3,)} or {shape + (2, 2)}")


@dataclass
class BendingSystem:
    """Chart ``s``, datum ``B`` and the grid they live on.

    ``B`` is given by its components ``(B11, B22, B12)`` of shape
    ``(n1, n2, 3)`` or as a symmetric ``(n1, n2, 2, 2)`` field.
    """

    s: object
    B: np.ndarray
    grid: geo.ChartGrid

    def __post_init__(self):
        self.B = _as_sym_field(self.B, self.grid.shape)
        s_vals = self.s.sample(self.grid) if hasattr(self.s, "sample") else np.asarray(self.s, float)
        n1, n2 = self.grid.shape
        h1, h2 = self.grid.spacing
        self.D = (
            sps.kron(gradient_matrix(n1, h1), sps.identity(n2), format="csr"),
            sps.kron(sps.identity(n1), gradient_matrix(n2, h2), format="csr"),
        )
        flat = s_vals.reshape(-1, 3)
        self.ds = [D @ flat for D in self.D]  # ∂_α s, each (n, 3)
        g = np.array([[np.sum(a * b, axis=-1) for b in self.ds] for a in self.ds])
        det_g = g[0, 0] * g[1, 1] - g[0, 1] ** 2
        self.weights = self.grid.trapezoid_weights().ravel() * np.sqrt(det_g)
        self._A = None

    @property
    def operator(self):
        """Sparse map from ``w`` (flattened ``(n, 3)``, component-major) to ``(q11, q22, √2 q12)``."""
        if self._A is None:
            D1, D2 = self.D
            d1, d2 = self.ds
            diag = lambda v: sps.diags(v)
            q11 = sps.hstack([diag(d1[:, k]) @ D1 for k in range(3)])
            q22 = sps.hstack([diag(d2[:, k]) @ D2 for k in range(3)])
            q12 = sps.hstack([(SQ2 / 2) * (diag(d1[:, k]) @ D2 + diag(d2[:, k]) @ D1) for k in range(3)])
            W = sps.diags(np.tile(np.sqrt(self.weights), 3))
            self._A = (W @ sps.vstack([q11, q22, q12])).tocsr()
        return self._A

    def rhs(self):
        w = np.sqrt(self.weights)
        B = self.B.reshape(-1, 3)
        return np.concatenate([w * B[:, 0], w * B[:, 1], w * SQ2 * B[:, 2]])

    def qsw(self, w):
        """``q^s_w`` as components ``(q11, q22, q12)``, shape ``(n1, n2, 3)``."""
        w = np.asarray(w, dtype=float).reshape(-1, 3)
        D1, D2 = self.D
        d1w, d2w = D1 @ w, D2 @ w
        d1, d2 = self.ds
        q11 = np.sum(d1 * d1w, axis=-1)
        q22 = np.sum(d2 * d2w, axis=-1)
        q12 = 0.5 * (np.sum(d1 * d2w, axis=-1) + np.sum(d1w * d2, axis=-1))
        return np.stack([q11, q22, q12], axis=-1).reshape(self.grid.shape + (3,))


def exact_qsw(s, w, grid, h=1e-30):
    """``q^s_w`` from exact derivatives, as components ``(q11, q22, q12)``.

    ``s`` is a chart with analytic derivatives and ``w(z1, z2)`` a callable
    accepting complex arguments; its derivatives are taken by complex step.
    Used as the continuum datum when measuring the truncation error.
    """
    Z1, Z2 = grid.mesh()
    ds = s.derivatives(Z1, Z2, order=1)[1]  # (..., 2, 3)
    dw = [np.imag(w(Z1 + 1j * h, Z2)) / h, np.imag(w(Z1, Z2 + 1j * h)) / h]
    q11 = np.sum(ds[..., 0, :] * dw[0], axis=-1)
    q22 = np.sum(ds[..., 1, :] * dw[1], axis=-1)
    q12 = 0.5 * (np.sum(ds[..., 0, :] * dw[1], axis=-1) + np.sum(ds[..., 1, :] * dw[0], axis=-1))
    return np.stack([q11, q22, q12], axis=-1)


@dataclass
class RecoveryResult:
    w: np.ndarray
    residual: float
    relative_residual: float
    iterations: int
    history: list


def _to_w(x, shape):
    return x.reshape(3, -1).T.reshape(shape + (3,))


def _from_w(w):
    return np.asarray(w, float).reshape(-1, 3).T.ravel()


def cgls(A, b, tol=1e-10, max_iter=20_000, x0=None, atol=0.0):
    """CG on the normal equations ``AᵀA x = Aᵀb``.

    Started from zero (or any ``x0`` in the range of ``Aᵀ``) the iterates
    stay in that range, so the limit is the minimum-norm least-squares
    solution. Stops when ``‖b - Ax‖ ≤ max(tol ‖b‖, atol)`` or
    ``‖Aᵀ(b - Ax)‖ ≤ tol ‖Aᵀb‖``.
    """
    x = np.zeros(A.shape[1]) if x0 is None else x0.copy()
    r = b - A @ x
    s = A.T @ r
    p = s.copy()
    bn, sn0 = np.linalg.norm(b), np.linalg.norm(A.T @ b)
    gamma = s @ s
    history = [np.linalg.norm(r) / bn if bn > 0 else 0.0]
    if bn == 0.0 or sn0 == 0.0:
        return np.zeros_like(x), history, 0
    rtol = max(tol, atol / bn)
    if history[-1] <= rtol or np.sqrt(gamma) <= tol * sn0:
        return x, history, 0
    for it in range(1, max_iter + 1):
        q = A @ p
        alpha = gamma / (q @ q)
        x += alpha * p
        r -= alpha * q
        s = A.T @ r
        gamma_new = s @ s
        history.append(np.linalg.norm(r) / bn)
        if history[-1] <= rtol or np.sqrt(gamma_new) <= tol * sn0:
            return x, history, it
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
    raise NoConvergence(f"CGLS reached {max_iter} iterations at relative residual {history[-1]:.3e}", history)


def check_convex(s, grid, tol=1e-8):
    metric, _, curv = geo.build_geometry(s, grid)
    ok, C = geo.convexity_check(curv, metric, tol)
    if not ok:
        raise NotConvex("the chart is not uniformly convex: principal curvatures change sign or vanish")
    return C


def residual_qsw(sys, w):
    """``‖q^s_w - B‖`` in the ``√det g``-weighted discrete L² norm, and its relative form."""
    w = np.asarray(w, dtype=float)
    if w.shape != sys.grid.shape + (3,):
        raise ShapeMismatch(f"w has shape {w.shape}, expected {sys.grid.shape + (3,)}")
    r = sys.operator @ _from_w(w) - sys.rhs()
    res = float(np.linalg.norm(r))
    bn = float(np.linalg.norm(sys.rhs()))
    return res, (res / bn if bn > 0 else res)


def rigid_basis(sys):
    """Orthonormal basis (columns) of the infinitesimal rigid motions ``a × s + b``.

    These lie exactly in the discrete kernel, in the flattened ordering of
    :attr:`BendingSystem.operator`.
    """
    s_vals = sys.s.sample(sys.grid) if hasattr(sys.s, "sample") else np.asarray(sys.s, float)
    E = np.eye(3)
    cols = [_from_w(np.cross(E[k], s_vals)) for k in range(3)]
    cols += [_from_w(np.broadcast_to(E[k], s_vals.shape)) for k in range(3)]
    Q, _ = np.linalg.qr(np.array(cols).T)
    return Q


def tikhonov_start(A, b, eps=1e-13):
    """``(AᵀA + ε‖AᵀA‖ I)⁻¹ Aᵀb`` by sparse LU; lies in the range of ``Aᵀ``."""
    N = (A.T @ A).tocsc()
    shift = eps * spla.norm(N, 1)
    lu = spla.splu((N + shift * sps.identity(N.shape[0], format="csc")).tocsc())
    return lu.solve(A.T @ b)


def solve_qsw(sys, tol=1e-10, max_iter=20_000, check=True, method="direct", atol=1e-12):
    """Minimum-norm least-squares solution ``w`` of ``q^s_w = B``.

    Parameters
    ----------
    sys : BendingSystem
    tol : float
        Relative stopping tolerance of the CGLS iteration.
    atol : float
        Absolute residual (weighted L² norm) that also counts as converged;
        it lets data at round-off level, such as the sampled datum of a
        rigid motion, terminate.
    check : bool
        Verify the convexity hypothesis first (raises :class:`NotConvex`).
    method : {"direct", "cgls"}
        ``"cgls"`` runs CGLS from zero. ``"direct"`` starts CGLS from the
        Tikhonov-regularised normal-equation solution, which converges to
        the same minimum-norm solution in far fewer iterations.

    Returns
    -------
    RecoveryResult
    """
    if check:
        check_convex(sys.s, sys.grid)
    A, b = sys.operator, sys.rhs()
    x0 = None
    if method == "direct" and np.any(b):
        # round-off in the shifted solve leaks into the kernel; remove the known part
        R = rigid_basis(sys)
        x0 = tikhonov_start(A, b)
        x0 -= R @ (R.T @ x0)
    x, history, it = cgls(A, b, tol, max_iter, x0, atol)
    w = _to_w(x, sys.grid.shape)
    res, rel = residual_qsw(sys, w)
    return RecoveryResult(w, res, rel, it, history)
