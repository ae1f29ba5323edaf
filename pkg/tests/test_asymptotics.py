import math
import warnings

import pytest
from hypothesis import given, strategies as st

from trapres.asymptotics import (
    RegionTag,
    build_spectral_data,
    c_F,
    im_tau20_from_sigma,
    matching_discrepancy,
    peak_frequency,
    pole_coefficients,
    pole_value,
    quasimode_field,
    region_tags,
    tau20_closed,
    tau20_structural,
)
from trapres.errors import OutOfDomain
from trapres.geometry import canonical_spec, validate_spec
from trapres.junction import JunctionFieldX

SPEC = canonical_spec(0.01)
DATA = build_spectral_data(validate_spec(SPEC))


def test_leading_coefficients():
    e1, e2 = pole_coefficients(DATA, 1), pole_coefficients(DATA, 2)
    assert e1.tau10 == pytest.approx(-(2 ** 0.25), abs=1e-12)
    assert e2.tau10 == pytest.approx(2 ** 0.25, abs=1e-12)
    assert e2.tau21 == pytest.approx(4 * 2 ** -0.25, abs=1e-12)


def test_tau20_routes_agree():
    t = tau20_closed(DATA)
    assert t.imag == pytest.approx(-math.pi / 2, abs=1e-12)
    assert t.imag == pytest.approx(im_tau20_from_sigma(DATA), abs=1e-12)
    for n in (1, 2):
        assert abs(tau20_structural(DATA, n) - t) < 1e-12


def test_synthetic_tau20_without_g_in():
    t = tau20_closed(DATA.replace(g_in=0.0))
    assert t.real == pytest.approx(-1.8813468407, abs=1e-9)


def test_peak_frequency_value():
    k = peak_frequency(pole_coefficients(DATA, 2), 0.0, 0.01)
    assert k == pytest.approx(4.4069048, abs=1e-6)
    assert peak_frequency(pole_coefficients(DATA, 2), 3.0, 0.0) == DATA.k0


@given(st.floats(1e-4, 0.05))
def test_pole_in_lower_half_plane(eps):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for n in (1, 2):
            assert pole_value(pole_coefficients(DATA, n), eps).imag < 0


def test_region_tags_and_overlap():
    eps = 0.01
    assert region_tags((0.5, 0.5), eps, SPEC) == [RegionTag.InteriorBulk]
    tags = region_tags((0.0, 0.15), eps, SPEC)
    assert tags[0] is RegionTag.InnerTop and RegionTag.InteriorBulk in tags
    with pytest.raises(OutOfDomain):
        region_tags((0.9, -0.3), eps, SPEC)


def test_quasimode_overlap_candidates():
    X = JunctionFieldX(-0.5, 0.5)
    fv = quasimode_field(2, (0.0, 0.15), 0.01, DATA, X, SPEC)
    assert fv.overlap and fv.tag is RegionTag.InnerTop


def test_matching_discrepancy_decreases():
    d = [matching_discrepancy(2, e, DATA, SPEC) for e in (0.02, 0.005)]
    assert d[1] < d[0]


def test_c_F_blows_up_at_tau20():
    t = tau20_closed(DATA).real
    assert abs(c_F(2, t, DATA, 1.0)) > abs(c_F(2, t + 10, DATA, 1.0))
