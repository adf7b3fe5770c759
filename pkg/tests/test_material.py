import numpy as np
import pytest

from shellhom.errors import NotCoercive, OutOfThickness
from shellhom.material import Constant, FunctionLaw, Isotropic, Laminate, Layered, isotropic_voigt, q_value, verify_bounds

X0 = np.zeros(3)
Y0 = np.array([0.3, 0.7])


def test_isotropic_uniaxial():
    G = np.zeros((3, 3))
    G[0, 0] = 1.0
    assert q_value(Isotropic(1.0, 1.0), X0, 0.0, Y0, G) == pytest.approx(3.0, abs=1e-14)


def test_isotropic_shear_without_lambda():
    G = np.zeros((3, 3))
    G[0, 1] = 1.0
    assert q_value(Isotropic(1.0, 0.0), X0, 0.0, Y0, G) == pytest.approx(1.0, abs=1e-14)


def test_skew_part_ignored():
    rng = np.random.default_rng(0)
    law = Laminate((1.0, 1.0), (4.0, 2.0))
    for _ in range(10):
        G = rng.standard_normal((3, 3))
        y = rng.uniform(size=2)
        assert abs(q_value(law, X0, 0.1, y, G - G.T)) <= 1e-14
        assert q_value(law, X0, 0.1, y, G) == pytest.approx(q_value(law, X0, 0.1, y, 0.5 * (G + G.T)), abs=1e-13)


def test_periodicity_in_y():
    law = Isotropic(lambda y, t: 1 + 0.5 * np.sin(2 * np.pi * y[..., 0]) + 0 * t, 1.0)
    G = np.diag([1.0, 2.0, -1.0])
    for y in ([0.1, 0.2], [0.75, 0.5]):
        y = np.array(y)
        a = q_value(law, X0, 0.0, y, G)
        assert a == pytest.approx(q_value(law, X0, 0.0, y + [1.0, 0.0], G), abs=1e-14)
        assert a == pytest.approx(q_value(law, X0, 0.0, y + [0.0, -3.0], G), abs=1e-14)


def test_out_of_thickness():
    with pytest.raises(OutOfThickness):
        q_value(Isotropic(1.0, 1.0), X0, 0.5, Y0, np.eye(3))
    with pytest.raises(OutOfThickness):
        FunctionLaw(lambda x, t, y: isotropic_voigt(1, 1)).eval(X0, -0.6, Y0)


def test_verify_bounds_isotropic():
    lo, hi = verify_bounds(Isotropic(1.0, 1.0))
    assert lo == pytest.approx(2.0, abs=1e-10)
    assert hi == pytest.approx(5.0, abs=1e-10)


def test_verify_bounds_laminate():
    lo, hi = verify_bounds(Laminate((1.0, 0.0), (2.0, 0.0)))
    assert lo == pytest.approx(2.0, abs=1e-10)
    assert hi == pytest.approx(4.0, abs=1e-10)


def test_verify_bounds_rejects_degenerate():
    with pytest.raises(NotCoercive):
        verify_bounds(Laminate((0.0, 1.0), (1.0, 1.0)))


def test_laminate_phases_and_layered():
    law = Laminate((1.0, 1.0), (4.0, 2.0), 0.25)
    assert np.allclose(law.eval(X0, 0.0, [0.1, 0.9]), isotropic_voigt(1, 1))
    assert np.allclose(law.eval(X0, 0.0, [0.3, 0.9]), isotropic_voigt(4, 2))
    lay = Layered([0.0], [(1.0, 1.0), (3.0, 0.0)])
    assert np.allclose(lay.eval(X0, -0.2, Y0), isotropic_voigt(1, 1))
    assert np.allclose(lay.eval(X0, 0.2, Y0), isotropic_voigt(3, 0))


def test_sample_shape_and_scaling():
    law = Constant(isotropic_voigt(1.0, 0.5))
    s = law.sample(X0, [-0.25, 0.25], np.arange(4) / 4)
    assert s.shape == (2, 4, 4, 6, 6)
    assert np.allclose(law.scaled(3.0).eval(X0, 0.0, Y0), 3.0 * law.eval(X0, 0.0, Y0))
