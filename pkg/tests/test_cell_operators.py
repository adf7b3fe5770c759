import numpy as np
import pytest

from shellhom.cell import CellGrid, RelaxField0, RelaxFieldGamma, RelaxFieldInf, apply_u0, apply_ugamma, apply_uinf
from shellhom.cell.grid import d1, d2, nyquist_filter
from shellhom.cell.operators import check_gamma, u0_full, u0_reduced, ugamma, uinf_slice
from shellhom.errors import BadGamma, ShapeMismatch
from shellhom.geometry import Frame
from shellhom.voigt import unvoigt6

N = 8
GRID = CellGrid(N, 3, 2)
FLAT = Frame.flat()
Y1, Y2 = np.meshgrid(GRID.y_nodes, GRID.y_nodes, indexing="ij")
TAU1_N = 0.5 * (np.outer([1, 0, 0], [0, 0, 1]) + np.outer([0, 0, 1], [1, 0, 0]))


def as_matrix(s):
    return unvoigt6(s)


def zeros0():
    return RelaxField0(np.zeros((2, N, N)), np.zeros((N, N)), np.zeros((3, 3, N, N)))


def test_grid_quadrature():
    g = CellGrid(8, 4, 4)
    assert g.t_weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.sum(g.t_weights * g.t_nodes**2) == pytest.approx(1 / 12, abs=1e-14)
    assert g.y_weight * g.n_y**2 == pytest.approx(1.0)
    t, w = g.gamma_quadrature()
    assert t.size == 5 and w.sum() == pytest.approx(1.0, abs=1e-15)
    V, _ = g.legendre_basis()
    assert np.allclose(V.T @ (w[:, None] * V), np.eye(5), atol=1e-13)


def test_grid_validation():
    with pytest.raises(ValueError):
        CellGrid(5, 3, 2)


def test_spectral_derivatives_exact_on_modes():
    f = np.sin(2 * np.pi * 2 * Y1) * np.cos(2 * np.pi * Y2)
    assert np.allclose(d1(f, -2), 4 * np.pi * np.cos(4 * np.pi * Y1) * np.cos(2 * np.pi * Y2), atol=1e-12)
    assert np.allclose(d2(f, -1), -(2 * np.pi) ** 2 * f, atol=1e-11)


def test_nyquist_filter():
    nyq = np.cos(np.pi * N * Y1) + np.cos(np.pi * N * Y2)
    smooth = np.sin(2 * np.pi * Y1) + 1.0
    assert np.allclose(nyquist_filter(nyq + smooth), smooth, atol=1e-14)


@pytest.mark.parametrize("apply, fields", [
    (lambda f: apply_u0(f, GRID, FLAT), zeros0()),
    (lambda f: apply_ugamma(f, GRID, FLAT, 1.0), RelaxFieldGamma(np.zeros((2, 3, N, N)), np.zeros((3, N, N)))),
    (lambda f: apply_uinf(f, GRID, FLAT), RelaxFieldInf(np.zeros((3, 2, N, N)), np.zeros((3, N, N)), np.zeros((3, 3)))),
])
def test_zero_fields_zero_strain(apply, fields):
    assert np.all(apply(fields) == 0)


def test_u0_symmetric_gradient_mode():
    f = zeros0()
    f.zeta[0] = np.sin(2 * np.pi * Y1) / (2 * np.pi)
    s = as_matrix(apply_u0(f, GRID, FLAT))
    assert np.allclose(s[..., 0, 0], np.cos(2 * np.pi * Y1)[None], atol=1e-13)
    s[..., 0, 0] = 0
    assert np.allclose(s, 0, atol=1e-13)


def test_u0_hessian_mode():
    f = zeros0()
    f.phi[:] = np.cos(2 * np.pi * Y1) / (2 * np.pi) ** 2
    s = as_matrix(apply_u0(f, GRID, FLAT))
    t = GRID.t_nodes[:, None, None]
    assert np.allclose(s[..., 0, 0], t * np.cos(2 * np.pi * Y1)[None], atol=1e-13)
    s[..., 0, 0] = 0
    assert np.allclose(s, 0, atol=1e-13)


def test_u0_g_terms_in_skewed_frame():
    fr = Frame.from_tangents([1.0, 0.2, 0.1], [0.3, 1.0, -0.2])
    f = zeros0()
    f.g[:, 0] = 1.0
    f.g[:, 2] = 2.0
    s = as_matrix(apply_u0(f, GRID, fr))
    t1, n = fr.tau_dual[0], fr.normal
    expected = (np.outer(t1, n) + np.outer(n, t1)) + 2.0 * np.outer(n, n)
    assert np.allclose(s, expected, atol=1e-13)


def test_ugamma_thickness_derivative_of_zeta():
    z = np.zeros((2, 3, N, N))
    z[0, 1] = 1.0 / (2 * np.sqrt(3))  # the field t, through V_1 = √3 · 2t
    s = as_matrix(apply_ugamma(RelaxFieldGamma(z, np.zeros((3, N, N))), GRID, FLAT, 1.0))
    assert np.allclose(s, TAU1_N, atol=1e-13)


def test_ugamma_thickness_derivative_of_rho():
    r = np.zeros((3, N, N))
    r[1] = 1.0 / (2 * np.sqrt(3))
    s = as_matrix(apply_ugamma(RelaxFieldGamma(np.zeros((2, 3, N, N)), r), GRID, FLAT, 2.0))
    assert np.allclose(s, 0.5 * np.diag([0, 0, 1.0]), atol=1e-13)


def test_uinf_affine_and_rho_slice():
    c = np.zeros((3, 3))
    c[:, 2] = 1.0
    f = RelaxFieldInf(np.zeros((3, 2, N, N)), np.zeros((3, N, N)), c)
    assert np.allclose(as_matrix(apply_uinf(f, GRID, FLAT)), np.diag([0, 0, 1.0]), atol=1e-14)
    rho = np.zeros((3, N, N))
    rho[1] = np.sin(2 * np.pi * Y1) / (2 * np.pi)
    s = as_matrix(apply_uinf(RelaxFieldInf(np.zeros((3, 2, N, N)), rho, np.zeros((3, 3))), GRID, FLAT))
    assert np.allclose(s[1], 2 * np.cos(2 * np.pi * Y1)[..., None, None] * TAU1_N, atol=1e-13)
    assert np.allclose(s[[0, 2]], 0, atol=1e-14)


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        apply_u0(RelaxField0(np.zeros((2, 4, 4)), np.zeros((N, N)), np.zeros((3, 3, N, N))), GRID, FLAT)
    with pytest.raises(ShapeMismatch):
        apply_uinf(RelaxFieldInf(np.zeros((2, 2, N, N)), np.zeros((3, N, N)), np.zeros((3, 3))), GRID, FLAT)


@pytest.mark.parametrize("gamma", [0, -1.0, float("nan"), "inf"])
def test_ugamma_rejects_bad_gamma(gamma):
    V, dV = GRID.legendre_basis()
    with pytest.raises(BadGamma):
        ugamma(V, dV, gamma)


def test_check_gamma_tags():
    assert check_gamma("inf") == np.inf
    assert check_gamma("0.5") == 0.5
    with pytest.raises(BadGamma):
        check_gamma(-2)


def _dot_test(fwd, adj, n_f, n_c, rng):
    xf, xc = rng.standard_normal((n_f, N, N)), rng.standard_normal(n_c)
    s = fwd(xf, xc)
    r = rng.standard_normal(s.shape)
    af, ac = adj(r)
    lhs = np.sum(s * r)
    rhs = np.sum(af * xf) + np.sum(ac * xc)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_adjoints():
    rng = np.random.default_rng(0)
    t = GRID.t_nodes
    V, dV = GRID.legendre_basis()
    _dot_test(*u0_reduced(t), 3, 3, rng)
    _dot_test(*u0_full(t), 3 + 3 * t.size, 3, rng)
    _dot_test(*ugamma(V, dV, 0.7), 3 * V.shape[1], 3, rng)
    _dot_test(*uinf_slice(), 3, 3, rng)
