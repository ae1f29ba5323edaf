import math

import pytest
from hypothesis import given, strategies as st

from trapres.errors import OutOfDomain
from trapres.junction import JunctionFieldX, eval_X, fit_tail_constants, junction_constants


def test_constants_closed_form():
    c = junction_constants(-0.5, 0.5)
    assert c.c_omega == pytest.approx(1 / math.pi, abs=1e-15)
    assert c.q_omega == pytest.approx(-0.4620531257, abs=1e-10)


def test_tail_fit_recovers_constants():
    X = JunctionFieldX(-0.5, 0.5)
    fit = fit_tail_constants(X)
    jc = junction_constants(-0.5, 0.5)
    assert abs(fit.c_omega - jc.c_omega) < 1e-5
    assert abs(fit.q_omega - jc.q_omega) < 1e-5


def test_linear_tail_in_strip():
    jc = junction_constants(-0.5, 0.5)
    for y in (-3.0, -6.0):
        assert eval_X((0.1, y)) == pytest.approx(y + jc.q_omega, abs=1e-8)


def test_log_tail_in_half_plane():
    c = 1 / math.pi
    r = 200.0
    assert eval_X((0.0, r)) == pytest.approx(c * math.log(r), abs=1e-3)


def test_outside_raises():
    with pytest.raises(OutOfDomain):
        eval_X((2.0, -1.0))


@given(st.floats(-0.49, 0.49))
def test_wall_symmetry(x1):
    X = JunctionFieldX(-0.5, 0.5)
    assert X((x1, -0.7)) == pytest.approx(X((-x1, -0.7)), abs=1e-9)


@given(st.floats(-2, 2), st.floats(0.1, 2))
def test_harmonic(x1, x2):
    X = JunctionFieldX(-0.5, 0.5)
    d = 1e-3
    lap = (X((x1 + d, x2)) + X((x1 - d, x2)) + X((x1, x2 + d)) + X((x1, x2 - d))
           - 4 * X((x1, x2))) / d ** 2
    assert abs(lap) < 1e-3
