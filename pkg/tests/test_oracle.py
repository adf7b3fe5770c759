import numpy as np
import pytest
from scipy.stats import ortho_group

from shellhom.cell import CellGrid, EffectiveForm, cell_solve, effective_form
from shellhom.checks import REFERENCE_LAMINATE, closed_form_matrix
from shellhom.errors import NotSPD, TooLarge
from shellhom.geometry import Frame
from shellhom.material import Isotropic
from shellhom.oracle import MAX_DOF, assemble_dense, dense_cell_solve, dense_minimum, dof_count, spd_audit, trig_basis_1d

TINY = CellGrid(4, 3, 2)
REGIMES = [0.0, 1.0, "inf"]
SKEW = Frame.from_tangents([1.0, 0.25, 0.1], [0.1, 1.1, -0.3])


def test_trig_basis_excludes_nyquist():
    B, dB, ddB = trig_basis_1d(6)
    assert B.shape == (5, 6)
    y = np.arange(6) / 6
    assert np.allclose(B @ np.cos(6 * np.pi * y), 0, atol=1e-12)
    # derivatives are the exact ones, not nodal approximations
    assert np.allclose(dB[2], 2 * np.pi * np.cos(2 * np.pi * y))
    assert np.allclose(ddB[3], -(4 * np.pi) ** 2 * np.cos(4 * np.pi * y))


@pytest.mark.parametrize("gamma", REGIMES)
def test_zero_load(gamma):
    assert dense_cell_solve(gamma, REFERENCE_LAMINATE, Frame.flat(), np.zeros(3), TINY).value == 0.0


@pytest.mark.parametrize("gamma", REGIMES + [0.5, 2.0])
def test_homogeneous_isotropic_exact(gamma):
    v = dense_cell_solve(gamma, Isotropic(1.0, 1.0), Frame.flat(), [1.0, 0.0, 0.0], TINY).value
    assert v == pytest.approx(2 / 9, abs=1e-10)


@pytest.mark.parametrize("gamma", REGIMES)
@pytest.mark.parametrize("frame", [Frame.flat(), SKEW])
def test_matches_pcg_solver(gamma, frame):
    for q in np.eye(3):
        ref = dense_cell_solve(gamma, REFERENCE_LAMINATE, frame, q, TINY).value
        got = cell_solve(gamma, REFERENCE_LAMINATE, frame, q, TINY).value
        assert abs(got - ref) <= 1e-8 * ref


def test_unitary_reindexing():
    A, b = assemble_dense(1.0, REFERENCE_LAMINATE, SKEW, [1.0, 0.2, -0.4], TINY)
    _, v = dense_minimum(A, b)
    U = ortho_group.rvs(A.shape[1], random_state=0)
    P = np.random.default_rng(0).permutation(A.shape[1])
    _, vu = dense_minimum(A @ U, b)
    _, vp = dense_minimum(A[:, P], b)
    assert vu == pytest.approx(v, rel=1e-12)
    assert vp == pytest.approx(v, rel=1e-12)


def test_too_large():
    grid = CellGrid(16, 3, 2)
    assert dof_count(0, grid) > MAX_DOF
    with pytest.raises(TooLarge):
        dense_cell_solve(0, REFERENCE_LAMINATE, Frame.flat(), [1.0, 0, 0], grid)


def test_spd_audit_identity_and_isotropic():
    lam, C = spd_audit(EffectiveForm(np.eye(3), 0.0))
    assert np.allclose(lam, 1.0) and C == 1.0
    form = effective_form(0, Isotropic(1.0, 1.0), None, CellGrid(8, 3, 2))
    lam, C = spd_audit(form)
    assert np.allclose(lam, np.linalg.eigvalsh(closed_form_matrix(1.0, 1.0)), atol=1e-8)
    assert C == pytest.approx(1 / lam[0])


def test_spd_audit_rejects_singular():
    m = np.diag([1.0, 1.0, -1e-14])
    with pytest.raises(NotSPD):
        spd_audit(EffectiveForm(m, 0.0))
