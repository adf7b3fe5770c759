"""Relaxation operators ``U_0``, ``U_γ``, ``U_∞`` on the discrete cell.

Strains are produced in frame coordinates: a symmetric ``Ê`` stands for
``Σ Ê_ij τ^i ⊗ τ^j`` with ``τ^3 = n``, stored as a Voigt-6 vector in the
last axis. Fields are nodal values of trigonometric polynomials on the
torus (the constant mode is a kernel direction and is projected out of
solutions); for finite ``γ`` the thickness dependence is carried by
orthonormal Legendre coefficients. Nyquist modes are filtered out of the
relaxation fields (but not of the pointwise field ``g``).
"""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import BadGamma, ShapeMismatch
from ..voigt import SQ2, change_of_basis6
from .grid import d1, d2, d12, nyquist_filter as _nf

H = 1.0 / SQ2  # √2 · ½


@dataclass
class RelaxField0:
    zeta: np.ndarray  # (2, N, N)
    phi: np.ndarray  # (N, N)
    g: np.ndarray  # (n_t, 3, N, N)
    g_eliminated: bool = False


@dataclass
class RelaxFieldGamma:
    zeta: np.ndarray  # (2, p_leg + 1, N, N) Legendre coefficients
    rho: np.ndarray  # (p_leg + 1, N, N)


@dataclass
class RelaxFieldInf:
    zeta: np.ndarray  # (n_t, 2, N, N)
    rho: np.ndarray  # (n_t, N, N)
    c: np.ndarray  # (n_t, 3)


def check_gamma(gamma):
    """Normalise a regime label to ``0.0``, a positive float, or ``inf``."""
    if isinstance(gamma, str):
        if gamma.strip().lower() in ("inf", "infinity", "∞"):
            return math.inf
        gamma = float(gamma)
    gamma = float(gamma)
    if math.isnan(gamma) or gamma < 0:
        raise BadGamma(f"γ must be a nonnegative number or inf; got {gamma}")
    return gamma


def gamma_tag(gamma):
    return "inf" if math.isinf(gamma) else gamma


# ---------------------------------------------------------------------------
# in-plane building blocks: symmetric gradient and Hessian, with transposes


def _sym_grad(z1, z2):
    return d1(z1, -2), d1(z2, -1), H * (d1(z1, -1) + d1(z2, -2))


def _sym_grad_T(s11, s22, s12):
    # d1 is antisymmetric, so its transpose is -d1
    z1 = -d1(s11, -2) - H * d1(s12, -1)
    z2 = -d1(s22, -1) - H * d1(s12, -2)
    return z1, z2


def _hess(f):
    return d2(f, -2), d2(f, -1), SQ2 * d12(f)


def _hess_T(s11, s22, s12):
    return d2(s11, -2) + d2(s22, -1) + SQ2 * d12(s12)


# ---------------------------------------------------------------------------
# regime 0


def u0_reduced(t_nodes):
    """Tangential part of ``U_0`` (ζ, φ, p) for use with the relaxed density.

    Returns ``(forward, adjoint)`` on fields ``[ζ1, ζ2, φ]`` and constants ``p``;
    strains are Voigt-2 ``(n_t, N, N, 3)``.
    """
    t = np.asarray(t_nodes)[:, None, None]

    def forward(xf, xc):
        xf = _nf(xf)
        a = _sym_grad(xf[0], xf[1])
        h = _hess(xf[2])
        s = np.stack([a[k][None] - t * h[k][None] for k in range(3)], axis=-1)
        return s + xc

    def adjoint(s):
        S = s.sum(axis=0)
        z1, z2 = _sym_grad_T(S[..., 0], S[..., 1], S[..., 2])
        T = np.tensordot(t[:, 0, 0], s, axes=(0, 0))
        phi = -_hess_T(T[..., 0], T[..., 1], T[..., 2])
        return _nf(np.stack([z1, z2, phi])), S.sum(axis=(0, 1))

    return forward, adjoint


def u0_full(t_nodes):
    """``U_0`` with the field ``g`` kept: fields ``[ζ1, ζ2, φ, g(t_i, a)...]``."""
    t = np.asarray(t_nodes)
    n_t = t.size
    red_f, red_a = u0_reduced(t)

    def forward(xf, xc):
        N = xf.shape[-1]
        s = np.zeros((n_t, N, N, 6))
        s[..., [0, 1, 5]] = red_f(xf[:3], xc)
        g = xf[3:].reshape(n_t, 3, N, N)
        s[..., 4] = SQ2 * g[:, 0]
        s[..., 3] = SQ2 * g[:, 1]
        s[..., 2] = g[:, 2]
        return s

    def adjoint(s):
        f, c = red_a(s[..., [0, 1, 5]])
        g = np.stack([SQ2 * s[..., 4], SQ2 * s[..., 3], s[..., 2]], axis=1)
        return np.concatenate([f, g.reshape(3 * n_t, *g.shape[2:])]), c

    return forward, adjoint


# ---------------------------------------------------------------------------
# finite γ


def ugamma(V, dV, gamma):
    """``U_γ`` on Legendre fields ``[ζ1_l, ζ2_l, ρ_l]`` plus constants ``p``."""
    gamma = check_gamma(gamma)
    if gamma == 0 or math.isinf(gamma):
        raise BadGamma("U_γ needs a finite positive γ")
    n_l = V.shape[1]
    ig = 1.0 / gamma

    def forward(xf, xc):
        c = _nf(xf).reshape(3, n_l, *xf.shape[-2:])
        val = np.einsum("il,flxy->fixy", V, c)
        dt = np.einsum("il,flxy->fixy", dV, c)
        z1, z2, rho = val
        s = np.empty(val.shape[1:] + (6,))
        s[..., 0], s[..., 1], s[..., 5] = _sym_grad(z1, z2)
        s[..., 4] = H * (d1(rho, -2) + ig * dt[0])
        s[..., 3] = H * (d1(rho, -1) + ig * dt[1])
        s[..., 2] = ig * dt[2]
        s[..., [0, 1, 5]] += xc
        return s

    def adjoint(s):
        z1, z2 = _sym_grad_T(s[..., 0], s[..., 1], s[..., 5])
        rho = -H * (d1(s[..., 4], -2) + d1(s[..., 3], -1))
        val = np.stack([z1, z2, rho])
        dt = np.stack([H * ig * s[..., 4], H * ig * s[..., 3], ig * s[..., 2]])
        c = np.einsum("il,fixy->flxy", V, val) + np.einsum("il,fixy->flxy", dV, dt)
        p = s[..., [0, 1, 5]].sum(axis=(0, 1, 2))
        return _nf(c.reshape(3 * n_l, *c.shape[-2:])), p

    return forward, adjoint


# ---------------------------------------------------------------------------
# regime ∞ (one thickness slice)


def uinf_slice():
    """``U_∞`` restricted to one slice: fields ``[ζ1, ζ2, ρ]``, constants ``c``."""

    def forward(xf, xc):
        z1, z2, rho = _nf(xf)
        s = np.empty((1,) + z1.shape + (6,))
        s[0, ..., 0], s[0, ..., 1], s[0, ..., 5] = _sym_grad(z1, z2)
        s[0, ..., 4] = SQ2 * (d1(rho, -2) + xc[0])
        s[0, ..., 3] = SQ2 * (d1(rho, -1) + xc[1])
        s[0, ..., 2] = xc[2]
        return s

    def adjoint(s):
        s = s[0]
        z1, z2 = _sym_grad_T(s[..., 0], s[..., 1], s[..., 5])
        rho = -SQ2 * (d1(s[..., 4], -2) + d1(s[..., 3], -1))
        c = np.array([SQ2 * s[..., 4].sum(), SQ2 * s[..., 3].sum(), s[..., 2].sum()])
        return _nf(np.stack([z1, z2, rho])), c

    return forward, adjoint


# ---------------------------------------------------------------------------
# public evaluators: ambient Voigt-6 strains on (n_t, N, N)


def to_ambient(s_hat, frame):
    """Map frame-coordinate Voigt-6 strains to ambient ones."""
    T = change_of_basis6(frame.matrix)
    return np.einsum("ij,...j->...i", T, s_hat)


def _check(arr, shape, name):
    if np.shape(arr) != tuple(shape):
        raise ShapeMismatch(f"{name} has shape {np.shape(arr)}, expected {tuple(shape)}")


def apply_u0(f, grid, frame):
    """``Def_y ζ + 2 g_α τ^α⊙n + g_3 n⊗n - t Hess_y φ`` at every ``(t, y)`` node."""
    N, n_t = grid.n_y, grid.n_t
    _check(f.zeta, (2, N, N), "zeta")
    _check(f.phi, (N, N), "phi")
    _check(f.g, (n_t, 3, N, N), "g")
    fwd, _ = u0_full(grid.t_nodes)
    xf = np.concatenate([f.zeta, f.phi[None], f.g.reshape(3 * n_t, N, N)])
    return to_ambient(fwd(xf, np.zeros(3)), frame)


def apply_ugamma(f, grid, frame, gamma):
    """``Def_y ζ + (∂_α ρ + ∂_3 ζ_α / γ) τ^α⊙n + (∂_3 ρ / γ) n⊗n``."""
    N, n_l = grid.n_y, grid.p_leg + 1
    _check(f.zeta, (2, n_l, N, N), "zeta")
    _check(f.rho, (n_l, N, N), "rho")
    V, dV = grid.legendre_basis()
    fwd, _ = ugamma(V, dV, gamma)
    xf = np.concatenate([f.zeta.reshape(2 * n_l, N, N), f.rho])
    return to_ambient(fwd(xf, np.zeros(3)), frame)


def apply_uinf(f, grid, frame):
    """``Def_y ζ + 2(∂_α ρ + c_α) τ^α⊙n + c_3 n⊗n`` slice by slice."""
    N, n_t = grid.n_y, grid.n_t
    _check(f.zeta, (n_t, 2, N, N), "zeta")
    _check(f.rho, (n_t, N, N), "rho")
    _check(f.c, (n_t, 3), "c")
    fwd, _ = uinf_slice()
    s = np.concatenate([fwd(np.concatenate([f.zeta[i], f.rho[i][None]]), f.c[i]) for i in range(n_t)])
    return to_ambient(s, frame)
