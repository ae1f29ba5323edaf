import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from trapres.interior import (
    EigenMode,
    g_in_both,
    gram_matrix,
    green_interior,
    interior_eigenfrequency,
    mode_table,
    psi_eval,
)

K0 = math.pi * math.sqrt(2)


def test_g_in_two_schemes():
    r = g_in_both(K0, 2.0, 1.0, 2, 1)
    assert r.discrepancy < 1e-8
    assert r.value == pytest.approx(-0.5693665451665606, abs=1e-12)


def test_modes_orthonormal():
    modes = [EigenMode(p, q, 2.0, 1.0) for p in range(3) for q in range(3)]
    G = gram_matrix(2.0, 1.0, modes, nquad=48)
    assert np.max(np.abs(G - np.eye(len(modes)))) < 1e-12


def test_mode_table_sorted_and_contains_k0():
    pp, qq, kn2, _ = mode_table(2.0, 1.0, 6.0)
    assert np.all(np.diff(kn2) >= 0)
    assert any(p == 2 and q == 1 and abs(math.sqrt(k) - K0) < 1e-14
               for p, q, k in zip(pp, qq, kn2))
    assert interior_eigenfrequency(2, 1, 2.0, 1.0) == pytest.approx(K0)


def test_psi_at_origin():
    assert abs(psi_eval((0.0, 0.0), EigenMode(2, 1, 2.0, 1.0))) == pytest.approx(math.sqrt(2))


@given(st.floats(-0.9, 0.9), st.floats(0.1, 0.9), st.floats(-0.9, 0.9), st.floats(0.1, 0.9))
def test_green_symmetric(x1, x2, y1, y2):
    if math.hypot(x1 - y1, x2 - y2) < 0.05:
        return
    k = 3.1
    a = green_interior((x1, x2), (y1, y2), k, 2.0, 1.0)
    b = green_interior((y1, y2), (x1, x2), k, 2.0, 1.0)
    assert abs(a - b) <= 1e-9 * max(1.0, abs(a))
