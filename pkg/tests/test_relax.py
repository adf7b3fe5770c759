import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shellhom.errors import FrameMismatch
from shellhom.geometry import Frame
from shellhom.material import isotropic_voigt
from shellhom.relax import TangentQuadraticForm, brute_force_q2, q2_form, q2_value
from shellhom.voigt import SQ2, voigt6

FLAT = Frame.flat()


def random_spd(rng, n=6):
    A = rng.standard_normal((n, n))
    return A @ A.T + 0.5 * np.eye(n)


def random_frame(rng):
    t1 = rng.standard_normal(3)
    t2 = rng.standard_normal(3)
    return Frame.from_tangents(t1, t2)


def test_isotropic_closed_form_values():
    form = q2_form(isotropic_voigt(1.0, 1.0), FLAT)
    assert q2_value(form, [1.0, 0.0, 0.0]) == pytest.approx(8 / 3, abs=1e-12)
    assert q2_value(form, [1.0, 1.0, 0.0]) == pytest.approx(20 / 3, abs=1e-12)
    assert q2_value(form, [0.0, 0.0, SQ2]) == pytest.approx(4.0, abs=1e-12)
    assert q2_value(form, [0.0, 0.0, 0.0]) == 0.0


def test_brute_force_closed_form():
    assert brute_force_q2(isotropic_voigt(1.0, 1.0), FLAT, [1.0, 0.0, 0.0]) == pytest.approx(8 / 3, abs=1e-12)
    assert brute_force_q2(isotropic_voigt(1.0, 1.0), FLAT, np.zeros(3)) == 0.0


def test_identity_form():
    assert q2_value(TangentQuadraticForm(np.eye(3)), [1.0, 0.0, 0.0]) == 1.0


def test_schur_matches_brute_force_random():
    rng = np.random.default_rng(7)
    for _ in range(100):
        C = random_spd(rng)
        fr = random_frame(rng)
        q = rng.standard_normal(3)
        a = q2_value(q2_form(C, fr), q)
        b = brute_force_q2(C, fr, q)
        assert abs(a - b) <= 1e-10 * abs(b)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_schur_matches_brute_force_hypothesis(seed):
    rng = np.random.default_rng(seed)
    C, fr, q = random_spd(rng), random_frame(rng), rng.standard_normal(3)
    b = brute_force_q2(C, fr, q)
    assert q2_value(q2_form(C, fr), q) == pytest.approx(b, rel=1e-10, abs=1e-14)


def test_isotropic_formula_in_skewed_frame():
    # the relaxed form of an isotropic law is 2μ|q|² + k (tr q)² with the metric
    rng = np.random.default_rng(1)
    fr = random_frame(rng)
    q = rng.standard_normal(3)
    M = fr.embed(q)
    expected = 2 * np.sum(M * M) + (2 / 3) * np.trace(M) ** 2
    assert q2_value(q2_form(isotropic_voigt(1.0, 1.0), fr), q) == pytest.approx(expected, rel=1e-12)


def test_feasibility_and_spd():
    rng = np.random.default_rng(2)
    for _ in range(20):
        C, fr = random_spd(rng), random_frame(rng)
        form = q2_form(C, fr)
        assert np.linalg.eigvalsh(form.m2)[0] > 0
        q = rng.standard_normal(3)
        v = voigt6(fr.embed(q))
        assert q2_value(form, q) <= v @ C @ v * (1 + 1e-12)


def test_monotonicity():
    rng = np.random.default_rng(3)
    for _ in range(20):
        A = random_spd(rng)
        B = A + random_spd(rng)
        fr = random_frame(rng)
        q = rng.standard_normal(3)
        assert q2_value(q2_form(A, fr), q) <= q2_value(q2_form(B, fr), q) + 1e-12


def test_frame_mismatch():
    rng = np.random.default_rng(4)
    fr = random_frame(rng)
    form = q2_form(isotropic_voigt(1.0, 1.0), fr)
    q2_value(form, [1.0, 0.0, 0.0], fr)
    with pytest.raises(FrameMismatch):
        q2_value(form, [1.0, 0.0, 0.0], FLAT)
