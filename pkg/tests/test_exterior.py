import math

import pytest
from hypothesis import given, strategies as st

from trapres.errors import OutOfDomain
from trapres.exterior import (
    SourceTerm,
    g_ex_value,
    green_halfplane,
    limit_exterior_solution,
    radiation_defect,
    sigma_quadrature,
    sigma_value,
)

K0 = math.pi * math.sqrt(2)
H = 1 / math.sqrt(2)


def test_g_ex_closed_form():
    g = g_ex_value(K0)
    assert g.imag == pytest.approx(K0 * sigma_value(K0), abs=1e-14)
    assert g.real == pytest.approx(-0.43779449219788846, abs=1e-14)


def test_sigma_quadrature():
    assert sigma_quadrature(K0, H) == pytest.approx(1 / (2 * K0), abs=1e-8)


def test_radiation_condition_decays():
    _, d1 = radiation_defect(K0, H, -math.pi / 3, 20.0)
    _, d2 = radiation_defect(K0, H, -math.pi / 3, 80.0)
    assert d2 < d1 / 3


@given(st.floats(-2, 2), st.floats(-3, -0.8), st.floats(-2, 2), st.floats(-3, -0.85))
def test_neumann_wall_and_symmetry(x1, x2, y1, y2):
    if math.hypot(x1 - y1, x2 - y2) < 1e-2:
        return
    a = green_halfplane((x1, x2), (y1, y2), K0, H)
    b = green_halfplane((y1, y2), (x1, x2), K0, H)
    assert abs(a - b) < 1e-12
    d = 1e-5
    g = [green_halfplane((x1, -H - j * d), (y1, y2), K0, H) for j in range(3)]
    assert abs((-3 * g[0] + 4 * g[1] - g[2]) / (2 * d)) < 1e-4 * max(1.0, abs(g[0]))


def test_source_must_be_below_wall():
    with pytest.raises(OutOfDomain):
        limit_exterior_solution((0, -2), SourceTerm((0.0, -0.5)), K0, H)
    assert limit_exterior_solution((0, -2), SourceTerm((0.0, -1.5), 0.0), K0, H) == 0
