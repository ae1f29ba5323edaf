
import numpy as np
import pytest
from hypothesis import given, strategies as st

from trapres.asymptotics import build_spectral_data
from trapres.errors import FitUnstable
from trapres.geometry import canonical_spec, validate_spec
from trapres.verify import failed_identities, fit_slope, identity_suite

DATA = build_spectral_data(validate_spec(canonical_spec(0.01)))


@given(st.floats(0.2, 3.0), st.floats(0.1, 10))
def test_fit_slope_exact_power(p, c):
    x = np.array([0.02, 0.01, 0.005, 0.0025])
    f = fit_slope(x, c * x ** p)
    assert f.slope == pytest.approx(p, abs=1e-9)


def test_fit_slope_unstable():
    x = np.array([0.02, 0.01, 0.005, 0.0025])
    rng = np.random.default_rng(0)
    with pytest.raises(FitUnstable):
        fit_slope(x, np.exp(rng.normal(0, 3, 4)), strict=True)


def test_identities_pass():
    assert failed_identities(identity_suite(DATA)) == []


def test_corrupted_g_ex_is_caught():
    bad = DATA.replace(g_ex=DATA.g_ex + 0.01j)
    failed = failed_identities(identity_suite(bad))
    assert len(failed) == 2 and any("g_ex" in f for f in failed)
