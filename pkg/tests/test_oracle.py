import math

import numpy as np
import pytest

from trapres.errors import CountMismatch, IllConditioned
from trapres.exterior import SourceTerm
from trapres.geometry import canonical_spec
from trapres.oracle import (
    MatchingOperator,
    Truncation,
    Window,
    auto_window,
    cauchy_riemann_gap,
    muller,
    parity_coupling,
    pole_search,
    reciprocity_gap,
    scatter_solve,
    truncation_convergence,
)

SPEC = canonical_spec(0.01)
K0 = math.pi * math.sqrt(2)
SRC = SourceTerm((0.3, -1.7), 1.0)
COARSE = Truncation(64, 400, 16, 4)


@pytest.fixture(scope="module")
def poles():
    return pole_search(SPEC, 0.01)


def test_two_poles_straddle_k0(poles):
    assert poles.count == 2
    lo, hi = sorted(poles.roots, key=lambda z: z.real)
    assert lo.real < K0 < hi.real
    assert lo.imag < 0 and hi.imag < 0
    assert all(p.residual < 1e-8 for p in poles.poles)


def test_poles_against_frozen_values(poles):
    lo, hi = sorted(poles.roots, key=lambda z: z.real)
    assert abs(lo - complex(4.21666, -0.022356)) < 1e-4
    assert abs(hi - complex(4.50127, -0.006202)) < 1e-4


def test_empty_window_has_no_roots():
    w = auto_window(SPEC, 0.01)
    res = pole_search(SPEC, 0.01, Window(w.center - 0.6, w.radius), COARSE, expected=0)
    assert res.count == 0


def test_strict_count_raises():
    w = auto_window(SPEC, 0.01)
    with pytest.raises(CountMismatch):
        pole_search(SPEC, 0.01, Window(w.center - 0.6, w.radius), COARSE)


def test_structure_diagnostics():
    op = MatchingOperator(SPEC, None, COARSE, k_ref=K0)
    k = complex(4.4, -0.01)
    assert parity_coupling(op, k) < 1e-12
    assert cauchy_riemann_gap(op, k) < 1e-7


def test_flux_and_reciprocity():
    r = scatter_solve(SPEC, 0.01, 4.45, SRC, COARSE)
    assert r.flux_balance() < 1e-6
    assert reciprocity_gap(SPEC, 0.01, 4.45, SRC.y0, (-0.8, -1.2), COARSE) < 1e-8


def test_field_continuous_across_apertures():
    r = scatter_solve(SPEC, 0.01, 4.45, SRC, COARSE)
    d = 1e-6
    for x1 in (-0.002, 0.0, 0.003):
        up, down = r.field((x1, d)), r.field((x1, -d))
        assert abs(up - down) < 2e-2 * abs(up)


def test_sealed_is_singular_at_k0():
    op = MatchingOperator(SPEC, None, COARSE, sealed=True)
    assert np.linalg.svd(op.assemble(K0), compute_uv=False)[-1] < 1e-10


def test_ill_conditioned_guard():
    with pytest.raises(IllConditioned):
        scatter_solve(SPEC, 0.01, 4.45, SRC, COARSE, cond_max=1.0)


def test_muller_finds_root():
    z = muller(lambda x: x ** 3 - 2, 1.0, 1.2, 1.4)
    assert abs(z ** 3 - 2) < 1e-12


@pytest.mark.slow
def test_certificate_on_poles():
    cert = truncation_convergence(SPEC, 0.01)
    assert cert.passed and cert.error_estimate < 1e-4
