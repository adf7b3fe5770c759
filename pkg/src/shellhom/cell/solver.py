"""Cell problems and the effective bending form ``Q_γ(x, ·)``.

For a tangential form ``q`` the cell problem minimises
``∫_I ∫_Y Q(x + t n, y, p + t q + U(t, y)) dy dt`` over relaxation fields
``U`` of the chosen regime and constant symmetric tangential forms ``p``.
The material is pulled back to frame coordinates once, after which every
regime is a flat periodic problem solved by :func:`shellhom.cell.pcg.pcg`.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import NotSPD
from ..geometry import Frame
from ..relax import q2_form, schur_tangential
from ..voigt import SQ2, TANGENTIAL, change_of_basis6, voigt6
from . import operators as ops
from .grid import CellGrid
from .pcg import QuadraticCell, pcg


@dataclass
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 10_000
    keep_g: bool = False


@dataclass
class CellSolution:
    gamma: float
    fields: object
    p: np.ndarray
    value: float
    residual: float
    iterations: int


@dataclass
class EffectiveForm:
    """``Q_γ(x, q) = v(q)ᵀ m v(q)`` for dual-frame Voigt-2 ``v(q)``."""

    m: np.ndarray
    gamma: float
    grid: dict = field(default_factory=dict)
    residuals: list = field(default_factory=list)
    iterations: list = field(default_factory=list)

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        return np.einsum("...i,ij,...j->...", q, self.m, q)

    def in_orthonormal_frame(self, frame):
        """Matrix of the same form acting on orthonormal-frame Voigt-2 vectors."""
        Minv = np.linalg.inv(frame.dual_to_orthonormal())
        return Minv.T @ self.m @ Minv

    def to_dict(self):
        return {
            "m": [float(v) for v in self.m.ravel()],
            "gamma": ops.gamma_tag(self.gamma),
            "grid": dict(self.grid),
            "residuals": [float(r) for r in self.residuals],
            "iterations": [int(i) for i in self.iterations],
        }

    @classmethod
    def from_dict(cls, d):
        g = d["gamma"]
        return cls(
            np.array(d["m"], dtype=float).reshape(3, 3),
            ops.check_gamma(g),
            dict(d.get("grid", {})),
            list(d.get("residuals", [])),
            list(d.get("iterations", [])),
        )


# ---------------------------------------------------------------------------
# material in frame coordinates


def thickness_rule(gamma, grid):
    """Thickness nodes and weights of regime ``gamma``."""
    gamma = ops.check_gamma(gamma)
    if gamma == 0.0 or math.isinf(gamma):
        return grid.t_nodes, grid.t_weights
    return grid.gamma_quadrature()


def frame_material(law, frame, grid, x=None, t_nodes=None):
    """Ambient and frame-coordinate Voigt fields, each ``(n_t, N, N, 6, 6)``."""
    x = np.zeros(3) if x is None else np.asarray(x, dtype=float)
    t_nodes = grid.t_nodes if t_nodes is None else t_nodes
    C = law.sample(x, t_nodes, grid.y_nodes)
    T = change_of_basis6(frame.matrix)
    return C, T.T @ C @ T


def _tangential_load(t_nodes, N, q, m):
    s = np.zeros((len(t_nodes), N, N, m))
    comps = TANGENTIAL if m == 6 else np.arange(3)
    s[..., comps] = np.asarray(t_nodes)[:, None, None, None] * np.asarray(q, float)
    return s


class _CellLinear:
    """A quadratic cell problem with load ``t q`` on the tangential strain."""

    def __init__(self, problem, grid, m, unpack, opts, t_nodes=None):
        self.problem, self.grid, self.m, self.unpack, self.opts = problem, grid, m, unpack, opts
        self.t_nodes = grid.t_nodes if t_nodes is None else t_nodes

    def load(self, q):
        return _tangential_load(self.t_nodes, self.grid.n_y, q, self.m)

    def solve(self, q, gamma):
        load = self.load(q)
        P = self.problem
        res = pcg(P.hess, P.rhs(load), P.preconditioner(), self.opts.tol, self.opts.max_iter)
        value = P.energy(res.x, load)
        fields, p = self.unpack(res.x, load)
        return CellSolution(gamma, fields, p, value, res.residual, res.iterations)


def _regime0(C_hat, grid, opts):
    N, n_t = grid.n_y, grid.n_t
    if opts.keep_g:
        fwd, adj = ops.u0_full(grid.t_nodes)
        P = QuadraticCell(3 + 3 * n_t, 3, N, grid.t_weights, C_hat, fwd, adj)

        def unpack(x, load):
            xf, xc = P.split(x)
            zeta = xf[:2] - xf[:2].mean(axis=(-2, -1), keepdims=True)
            phi = xf[2] - xf[2].mean()
            g = xf[3:].reshape(n_t, 3, N, N).copy()
            return ops.RelaxField0(zeta, phi, g, False), xc.copy()

        return _CellLinear(P, grid, 6, unpack, opts)

    S, K = schur_tangential(C_hat)
    fwd, adj = ops.u0_reduced(grid.t_nodes)
    P = QuadraticCell(3, 3, N, grid.t_weights, S, fwd, adj)

    def unpack(x, load):
        xf, xc = P.split(x)
        e = load + fwd(xf, xc)
        nrm = np.einsum("...ij,...j->...i", K, e)  # slots (33, √2·23, √2·13)
        g = np.stack([nrm[..., 2] / SQ2, nrm[..., 1] / SQ2, nrm[..., 0]], axis=1)
        zeta = xf[:2] - xf[:2].mean(axis=(-2, -1), keepdims=True)
        return ops.RelaxField0(zeta, xf[2] - xf[2].mean(), g, True), xc.copy()

    return _CellLinear(P, grid, 3, unpack, opts)


def _regime_gamma(C_hat, grid, gamma, opts):
    N, n_l = grid.n_y, grid.p_leg + 1
    t, w = grid.gamma_quadrature()
    V, dV = grid.legendre_basis()
    fwd, adj = ops.ugamma(V, dV, gamma)
    P = QuadraticCell(3 * n_l, 3, N, w, C_hat, fwd, adj)

    def unpack(x, load):
        xf, xc = P.split(x)
        c = xf.reshape(3, n_l, N, N).copy()
        c[:, 0] -= c[:, 0].mean(axis=(-2, -1), keepdims=True)
        return ops.RelaxFieldGamma(c[:2], c[2]), xc.copy()

    return _CellLinear(P, grid, 6, unpack, opts, t)


class _RegimeInf:
    """Independent slice problems coupled only through ``p``.

    Each slice is homogenised once for the three unit tangential strains,
    giving a 3x3 slice form ``H_i``; the outer minimisation over ``p`` is
    then a 3x3 solve.
    """

    def __init__(self, C_hat, grid, opts):
        self.grid = grid
        N = grid.n_y
        fwd, adj = ops.uinf_slice()
        self.H = np.empty((grid.n_t, 3, 3))
        self.basis = []
        self.residuals, self.iterations = [], 0
        for i in range(grid.n_t):
            P = QuadraticCell(3, 3, N, [1.0], C_hat[i : i + 1], fwd, adj)
            xs, loads = [], []
            for a in range(3):
                e = np.zeros(3)
                e[a] = 1.0
                load = _tangential_load([1.0], N, e, 6)
                res = pcg(P.hess, P.rhs(load), P.preconditioner(), opts.tol, opts.max_iter)
                xs.append(res.x)
                loads.append(load)
                self.residuals.append(res.residual)
                self.iterations += res.iterations
            for a in range(3):
                for b in range(3):
                    self.H[i, a, b] = P.bilinear(xs[a], xs[b], loads[a], loads[b])
            self.H[i] = 0.5 * (self.H[i] + self.H[i].T)
            self.basis.append((P, np.array(xs)))

    def optimal_p(self, q):
        w, t = self.grid.t_weights, self.grid.t_nodes
        A = np.einsum("i,iab->ab", w, self.H)
        b = np.einsum("i,iab,b->a", w * t, self.H, q)
        return -np.linalg.solve(A, b)

    def value(self, q, p=None):
        q = np.asarray(q, dtype=float)
        p = self.optimal_p(q) if p is None else p
        e = p[None, :] + self.grid.t_nodes[:, None] * q[None, :]
        return float(np.einsum("i,ia,iab,ib->", self.grid.t_weights, e, self.H, e))

    def solve(self, q, gamma):
        q = np.asarray(q, dtype=float)
        p = self.optimal_p(q)
        N, n_t = self.grid.n_y, self.grid.n_t
        zeta, rho, c = np.empty((n_t, 2, N, N)), np.empty((n_t, N, N)), np.empty((n_t, 3))
        for i, (P, xs) in enumerate(self.basis):
            coef = p + self.grid.t_nodes[i] * q
            xf, xc = P.split(coef @ xs)
            zeta[i] = xf[:2] - xf[:2].mean(axis=(-2, -1), keepdims=True)
            rho[i] = xf[2] - xf[2].mean()
            c[i] = xc
        fields = ops.RelaxFieldInf(zeta, rho, c)
        return CellSolution(gamma, fields, p, self.value(q, p), max(self.residuals), self.iterations)


def _build(gamma, law, frame, grid, opts, x):
    gamma = ops.check_gamma(gamma)
    _, C_hat = frame_material(law, frame, grid, x, thickness_rule(gamma, grid)[0])
    if gamma == 0.0:
        return _regime0(C_hat, grid, opts)
    if math.isinf(gamma):
        return _RegimeInf(C_hat, grid, opts)
    return _regime_gamma(C_hat, grid, gamma, opts)


# ---------------------------------------------------------------------------
# public API


def cell_solve(gamma, law, frame=None, q=(1.0, 0.0, 0.0), grid=None, opts=None, x=None):
    """Minimise the cell functional of regime ``gamma`` for the tangential form ``q``.

    Parameters
    ----------
    gamma : float or "inf"
        ``0``, a positive scale ratio, or ``inf``.
    law : MaterialLaw
    frame : Frame, optional
        Tangent frame at the surface point; defaults to the flat frame.
    q : array_like
        Dual-frame Voigt-2 coefficients ``(q11, q22, √2 q12)``.
    grid : CellGrid
    opts : SolverOptions
    x : array_like, optional
        Surface point passed to x-dependent laws.

    Returns
    -------
    CellSolution
    """
    frame = Frame.flat() if frame is None else frame
    grid = CellGrid() if grid is None else grid
    opts = SolverOptions() if opts is None else opts
    gamma = ops.check_gamma(gamma)
    return _build(gamma, law, frame, grid, opts, x).solve(np.asarray(q, float), gamma)


def effective_form(gamma, law, frame=None, grid=None, opts=None, x=None):
    """Assemble ``Q_γ(x, ·)`` as a 3x3 matrix by polarisation over the Voigt-2 basis."""
    frame = Frame.flat() if frame is None else frame
    grid = CellGrid() if grid is None else grid
    opts = SolverOptions() if opts is None else opts
    gamma = ops.check_gamma(gamma)
    solver = _build(gamma, law, frame, grid, opts, x)
    E = np.eye(3)
    vals, residuals, iters = {}, [], []
    pairs = [(i, i) for i in range(3)] + [(0, 1), (0, 2), (1, 2)]
    for i, j in pairs:
        q = E[i] if i == j else E[i] + E[j]
        sol = solver.solve(q, gamma)
        vals[i, j] = sol.value
        residuals.append(sol.residual)
        iters.append(sol.iterations)
    m = np.diag([vals[i, i] for i in range(3)])
    for i, j in pairs[3:]:
        m[i, j] = m[j, i] = 0.5 * (vals[i, j] - vals[i, i] - vals[j, j])
    form = EffectiveForm(m, gamma, grid.as_dict(), residuals, iters)
    if np.linalg.eigvalsh(m)[0] <= 0:
        raise NotSPD(f"assembled form has eigenvalues {np.linalg.eigvalsh(m)}")
    return form


def q0_via_q2(law, frame=None, grid=None, q=(1.0, 0.0, 0.0), opts=None, x=None):
    """``Q_0(x, q)`` through the pointwise relaxed density ``Q_2``.

    Relaxes the out-of-plane strain node by node with
    :func:`shellhom.relax.q2_form`, then minimises over ``ζ``, ``φ`` and
    ``p`` only.
    """
    frame = Frame.flat() if frame is None else frame
    grid = CellGrid() if grid is None else grid
    opts = SolverOptions() if opts is None else opts
    C, _ = frame_material(law, frame, grid, x)
    S = np.empty(C.shape[:-2] + (3, 3))
    for idx in np.ndindex(*C.shape[:-2]):
        S[idx] = q2_form(C[idx], frame).m2
    fwd, adj = ops.u0_reduced(grid.t_nodes)
    P = QuadraticCell(3, 3, grid.n_y, grid.t_weights, S, fwd, adj)
    load = _tangential_load(grid.t_nodes, grid.n_y, q, 3)
    res = pcg(P.hess, P.rhs(load), P.preconditioner(), opts.tol, opts.max_iter)
    return P.energy(res.x, load)


def zero_field_energy(law, frame, grid, q, x=None):
    """``∫∫ Q(x + t n, y, t q)``: the cell functional at ``U = 0``, ``p = 0``."""
    C, _ = frame_material(law, frame, grid, x)
    v = voigt6(frame.embed(q))
    per_t = np.einsum("i,txyij,j->t", v, C, v) / grid.n_y**2
    return float(np.sum(grid.t_weights * grid.t_nodes**2 * per_t))


def cell_energy(gamma, law, frame, grid, q, fields, p, x=None):
    """The cell functional evaluated at given fields and ``p``, in ambient coordinates."""
    gamma = ops.check_gamma(gamma)
    t, w = thickness_rule(gamma, grid)
    C, _ = frame_material(law, frame, grid, x, t)
    if gamma == 0.0:
        s = ops.apply_u0(fields, grid, frame)
    elif math.isinf(gamma):
        s = ops.apply_uinf(fields, grid, frame)
    else:
        s = ops.apply_ugamma(fields, grid, frame, gamma)
    E6 = np.array([voigt6(frame.embed(e)) for e in np.eye(3)]).T  # (6, 3)
    aff = np.asarray(p, float)[None, :] + t[:, None] * np.asarray(q, float)[None, :]
    s = s + (aff @ E6.T)[:, None, None, :]
    per_t = np.einsum("txyi,txyij,txyj->t", s, C, s) / grid.n_y**2
    return float(np.sum(w * per_t))


def _flatten(fields, p):
    parts = [np.asarray(v, float) for k, v in vars(fields).items() if isinstance(v, np.ndarray)]
    return np.concatenate([a.ravel() for a in parts] + [np.asarray(p, float)])


def _rebuild(fields, vec):
    out, k = {}, 0
    for name, v in vars(fields).items():
        if isinstance(v, np.ndarray):
            out[name] = vec[k : k + v.size].reshape(v.shape)
            k += v.size
        else:
            out[name] = v
    return type(fields)(**out), vec[k:]


def verify_minimizer(sol, gamma, law, frame, q, grid, trials=20, seed=0, x=None, rel=1e-3, slack=1e-12):
    """Check that ``trials`` random perturbations (and their negatives) never lower the energy."""
    base = cell_energy(gamma, law, frame, grid, q, sol.fields, sol.p, x)
    vec = _flatten(sol.fields, sol.p)
    scale = rel * max(np.linalg.norm(vec), 1.0)
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        d = rng.standard_normal(vec.size)
        d *= scale / np.linalg.norm(d)
        for sign in (1.0, -1.0):
            f, p = _rebuild(sol.fields, vec + sign * d)
            if cell_energy(gamma, law, frame, grid, q, f, p, x) < base - slack:
                return False
    return True
