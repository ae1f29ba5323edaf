import math

import pytest
from hypothesis import given, strategies as st

from trapres.errors import (
    ApertureOutOfRange,
    BadEpsilon,
    DegenerateMode,
    NodalOpening,
    NotCritical,
    ValidationError,
)
from trapres.geometry import (
    canonical_spec,
    check_simple_mode,
    in_channel,
    in_domain,
    in_exterior,
    in_trap,
    rectangle_eigenfrequency,
    star,
    validate_spec,
)


def test_canonical_constants():
    vs = validate_spec(canonical_spec())
    assert vs.k0 == pytest.approx(math.pi * math.sqrt(2), abs=1e-15)
    assert vs.psi0 == pytest.approx(math.sqrt(2), abs=1e-15)
    assert vs.spec.h == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_not_critical():
    s = canonical_spec()
    with pytest.raises(NotCritical):
        validate_spec(s.__class__(**{**s.__dict__, "h": 0.8}))


def test_nodal_and_degenerate():
    s = canonical_spec()
    # (1, 0) has cos(pi/2) = 0 at the aperture centre
    k = rectangle_eigenfrequency(1, 0, 2.0, 1.0)
    with pytest.raises(NodalOpening):
        validate_spec(s.__class__(**{**s.__dict__, "p": 1, "q": 0, "h": math.pi / k}))
    # square trap: (1, 0) and (0, 1) coincide
    assert not check_simple_mode(1, 0, 1.0, 1.0)
    with pytest.raises(DegenerateMode):
        validate_spec(s.__class__(**{**s.__dict__, "a": 1.0, "b": 1.0, "p": 0, "q": 2,
                                     "h": 0.5}))


def test_eps_and_aperture_bounds():
    with pytest.raises(BadEpsilon):
        validate_spec(canonical_spec(0.0))
    s = canonical_spec(0.01)
    with pytest.raises(ApertureOutOfRange):
        validate_spec(s.__class__(**{**s.__dict__, "omega_minus": -150.0}))
    with pytest.raises(ValidationError):
        validate_spec(s.__class__(**{**s.__dict__, "a": -1.0}))


def test_warns_for_large_eps():
    with pytest.warns(UserWarning):
        validate_spec(canonical_spec(0.04))


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_regions_cover_consistently(x1, x2):
    s = canonical_spec(0.01)
    x = (x1, x2)
    inside = in_trap(s, x) or in_channel(s, x) or in_exterior(s, x)
    assert inside == in_domain(s, x)
    if -s.h < x2 < 0:
        assert in_domain(s, x) == (s.aperture[0] <= x1 <= s.aperture[1])


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_star_is_involution(x1, x2):
    assert tuple(star(star((x1, x2)))) == (x1, x2)
