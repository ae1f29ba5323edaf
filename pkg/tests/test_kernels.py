import math
import os
import subprocess
import sys

import numpy as np
from hypothesis import given, strategies as st
from scipy import special

from trapres import _kernels as K


@given(st.floats(2.0, 6.0), st.floats(-0.3, 0.0))
def test_line_remainder_backends_agree(kr, ki):
    k = complex(kr, ki)
    a = K._line_remainder_numba(k, 2.0, 1.0, 1, 200, 1, 2)
    b = K._line_remainder_numpy(k, 2.0, 1.0, 1, 200, 1, 2)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(b))


@given(st.floats(-0.9, 0.9), st.floats(0.05, 0.95), st.floats(-0.9, 0.9), st.floats(0.05, 0.95))
def test_strip_remainder_backends_agree(x1, x2, y1, y2):
    args = (x1, x2, y1, y2, complex(4.4, -0.01), 2.0, 1.0, 60)
    a = K._strip_remainder_numba(*args)
    b = K._strip_remainder_numpy(*args)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(b))


def test_image_table_backends_agree():
    rng = np.random.default_rng(3)
    dx = rng.uniform(-3, 3, (5, 7))
    dy = rng.uniform(-3, 3, (5, 7))
    dx[0, -1] = np.nan
    dy[0, -1] = np.nan
    a = K._image_table_numba(dx, dy, 2.5, 4, np.zeros((5, 5)))
    b = K._image_table_numpy(dx, dy, 2.5, 4, np.zeros((5, 5)))
    assert np.allclose(a, b, rtol=1e-12, atol=0)


@given(st.integers(1, 6), st.floats(1e-3, 40))
def test_expn_matches_scipy(n, x):
    assert math.isclose(K.expn(n, x), special.expn(n, x), rel_tol=1e-12)


def test_env_flag_selects_numpy():
    env = dict(os.environ, TRAPRES_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from trapres import _kernels; print(_kernels.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "numpy"
