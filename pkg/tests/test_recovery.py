import numpy as np
import pytest

from shellhom import geometry as geo
from shellhom.checks import manufactured_w
from shellhom.errors import NoConvergence, NotConvex, ShapeMismatch
from shellhom.recovery import BendingSystem, cgls, exact_qsw, gradient_matrix, residual_qsw, solve_qsw

CAP = ((-0.4, 0.4), (-0.4, 0.4))
SPHERE = geo.SphereCap(1.0, CAP)


def system(n, B=None, chart=SPHERE):
    grid = geo.ChartGrid.uniform(CAP, n)
    return BendingSystem(chart, np.zeros(grid.shape + (3,)) if B is None else B, grid)


def rigid(sys, a, b):
    return np.cross(a, sys.s.sample(sys.grid)) + b


def test_gradient_matrix_matches_numpy():
    f = np.random.default_rng(0).standard_normal(9)
    assert np.allclose(gradient_matrix(9, 0.3) @ f, np.gradient(f, 0.3, edge_order=2))


def test_zero_datum():
    sys = system(17)
    res = solve_qsw(sys)
    assert np.all(res.w == 0) and res.residual == 0.0


def test_manufactured_solution():
    sys0 = system(33)
    B = sys0.qsw(manufactured_w(*sys0.grid.mesh()))
    res = solve_qsw(system(33, B))
    assert res.relative_residual <= 1e-6


def test_solution_is_orthogonal_to_rigid_motions():
    # the minimum-norm least-squares solution has no component in the kernel
    sys0 = system(17)
    sys = system(17, sys0.qsw(manufactured_w(*sys0.grid.mesh())))
    w = solve_qsw(sys).w
    E = np.eye(3)
    for k in range(3):
        for r in (rigid(sys, E[k], np.zeros(3)), rigid(sys, np.zeros(3), E[k])):
            assert abs(np.sum(w * r)) <= 1e-8 * np.linalg.norm(w) * np.linalg.norm(r)


def test_cgls_from_zero_decreases_residual():
    sys0 = system(9)
    sys = system(9, sys0.qsw(manufactured_w(*sys0.grid.mesh())))
    A, b = sys.operator, sys.rhs()
    x, hist, it = cgls(A, b, tol=1e-2, max_iter=20000)
    normal = np.linalg.norm(A.T @ (b - A @ x)) / np.linalg.norm(A.T @ b)
    assert hist[-1] <= 1e-2 or normal <= 1e-2
    assert hist[-1] < hist[0] and it > 0


def test_rigid_motion_in_kernel():
    sys = system(17)
    rng = np.random.default_rng(1)
    for _ in range(5):
        w = rigid(sys, rng.standard_normal(3), rng.standard_normal(3))
        assert residual_qsw(sys, w)[0] <= 1e-10
        assert np.abs(sys.qsw(w)).max() <= 1e-10


def test_rigid_datum_minimal_norm():
    sys0 = system(17)
    w_star = rigid(sys0, np.array([0.3, -0.2, 0.5]), np.array([1.0, 0.0, 2.0]))
    sys = system(17, sys0.qsw(w_star))
    res = solve_qsw(sys)
    assert res.residual <= 1e-10
    assert np.linalg.norm(res.w) <= np.linalg.norm(w_star)


def test_residual_of_zero_is_norm_of_datum():
    sys0 = system(17)
    sys = system(17, sys0.qsw(manufactured_w(*sys0.grid.mesh())))
    res, rel = residual_qsw(sys, np.zeros(sys.grid.shape + (3,)))
    assert res == pytest.approx(np.linalg.norm(sys.rhs())) and rel == pytest.approx(1.0)


def test_superposition():
    sys = system(9)
    rng = np.random.default_rng(2)
    u, v = rng.standard_normal((2,) + sys.grid.shape + (3,))
    assert np.allclose(sys.qsw(u + 2 * v), sys.qsw(u) + 2 * sys.qsw(v), atol=1e-12)


def test_truncation_order_two():
    out = []
    for n in (33, 65):
        sys = system(n)
        sys = BendingSystem(SPHERE, exact_qsw(SPHERE, manufactured_w, sys.grid), sys.grid)
        out.append(residual_qsw(sys, manufactured_w(*sys.grid.mesh()))[0])
    assert np.log2(out[0] / out[1]) >= 2.0 - 0.05


def test_exact_rigid_motion_analytic():
    grid = geo.ChartGrid.uniform(CAP, 9)
    a, b = np.array([0.1, 0.7, -0.4]), np.array([1.0, 2.0, 3.0])

    def w(z1, z2):
        s = np.stack([z1, z2, np.sqrt(1 - z1**2 - z2**2)], axis=-1)
        return np.cross(a, s) + b

    assert np.abs(exact_qsw(SPHERE, w, grid)).max() <= 1e-14


def test_flat_chart_rejected():
    with pytest.raises(NotConvex):
        solve_qsw(system(9, chart=geo.GraphChart("0", CAP)))


def test_saddle_rejected():
    with pytest.raises(NotConvex):
        solve_qsw(system(9, chart=geo.GraphChart("z1**2 - z2**2", CAP)))


def test_shape_checks():
    sys = system(9)
    with pytest.raises(ShapeMismatch):
        residual_qsw(sys, np.zeros((8, 9, 3)))
    with pytest.raises(ShapeMismatch):
        system(9, np.zeros((9, 9, 4)))
    B22 = np.zeros((9, 9, 2, 2))
    assert system(9, B22).B.shape == (9, 9, 3)


def test_cgls_no_convergence():
    sys0 = system(17)
    sys = system(17, sys0.qsw(manufactured_w(*sys0.grid.mesh())))
    with pytest.raises(NoConvergence):
        cgls(sys.operator, sys.rhs(), tol=1e-14, max_iter=5)
