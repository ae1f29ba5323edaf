"""Two-branch pole expansions and leading-order fields near a critical
eigenfrequency.

A branch is labelled ``n = 1, 2``; odd-order coefficients carry ``(-1)**n``
relative to the sign convention ``psi(0) > 0``.  The peak-regime detuning is
taken at order ``eps`` (``k = ... + eps * t``), the order at which it meets
``tau20`` in the amplitude ``c_F``.
"""
from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import AtPole, OutOfDomain, PoleHit
from .exterior import SourceTerm, exterior_data, green_halfplane, limit_exterior_solution
from .geometry import ValidatedSpec, in_channel, in_exterior, in_trap
from .interior import EigenMode, interior_data
from .junction import JunctionFieldX, junction_constants

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LeadingCoefficients:
    b_minus10: float
    R0_in: float
    R0_ex: float

    def normalization_terms(self, psi0: float, omega_len: float, h: float) -> tuple[float, float]:
        """The two halves of the normalisation identity (each 1/2)."""
        return (self.R0_in * psi0) ** 2, self.b_minus10 ** 2 * omega_len * h / 2.0


@dataclass(frozen=True)
class SpectralData:
    k0: float
    psi0: float
    g_in: float
    g_ex: complex
    sigma: float
    h: float
    omega_len: float
    m: int
    q_omega: float = field(default=float("nan"))
    g_in_imag: float = 0.0

    def leading(self, n: int) -> LeadingCoefficients:
        _check_branch(n)
        r_in = (-1) ** n / (self.psi0 * math.sqrt(2.0))
        return LeadingCoefficients(b_minus10=1.0 / math.sqrt(self.h * self.omega_len),
                                   R0_in=r_in, R0_ex=(-1) ** (self.m + 1) * r_in)

    def replace(self, **kw) -> "SpectralData":
        d = dict(self.__dict__)
        d.update(kw)
        return SpectralData(**d)


def build_spectral_data(vs: ValidatedSpec) -> SpectralData:
    spec = vs.spec
    inner = interior_data(spec)
    outer = exterior_data(inner.k0)
    jc = junction_constants(spec.omega_minus, spec.omega_plus)
    return SpectralData(k0=inner.k0, psi0=inner.psi0, g_in=inner.g_in, g_ex=outer.g_ex,
                        sigma=outer.sigma, h=spec.h, omega_len=spec.omega_len, m=spec.m,
                        q_omega=jc.q_omega, g_in_imag=inner.g_in_imag)


def _check_branch(n):
    if n not in (1, 2):
        raise ValueError("branch must be 1 or 2")


# ---------------------------------------------------------------------------
# Poles
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PoleExpansion:
    n: int
    k0: float
    tau10: float
    tau21: float
    tau20: complex

    def terms(self, eps: float) -> tuple[float, float, complex]:
        return (math.sqrt(eps) * self.tau10, eps * math.log(eps) * self.tau21, eps * self.tau20)

    def dropped_scale(self, eps: float) -> float:
        """Size of the first omitted order, ``eps^{3/2} |ln eps|``."""
        return eps ** 1.5 * abs(math.log(eps))

    def ordering_ok(self, eps: float) -> bool:
        return eps * abs(math.log(eps)) * abs(self.tau21) <= math.sqrt(eps) * abs(self.tau10)


def tau20_closed(data: SpectralData) -> complex:
    w, h, k0 = data.omega_len, data.h, data.k0
    return 0.5 * (w / h) * ((2 * k0 / math.pi) * (math.log(2 * w / math.pi) - 1.0)
                            - data.psi0 ** 2 / 4.0 - k0 * (data.g_in + data.g_ex))


def tau20_structural(data: SpectralData, n: int = 2) -> complex:
    """Same coefficient assembled from b, R and the junction constant q_omega."""
    lc = data.leading(n)
    k0, h, psi0 = data.k0, data.h, data.psi0
    t10 = (-1) ** n * psi0 * math.sqrt(data.omega_len / (2 * h))
    b = lc.b_minus10
    qw = data.q_omega
    if math.isnan(qw):
        qw = junction_constants(-data.omega_len / 2, data.omega_len / 2).q_omega
    pref = t10 / (t10 * b * h + lc.R0_in * psi0 ** 2)
    return pref * (b * (2 * k0 * qw - 0.5 * h * t10 ** 2)
                   - 2 * k0 * t10 * lc.R0_in * (data.g_in + data.g_ex))


def pole_coefficients(data: SpectralData, n: int) -> PoleExpansion:
    _check_branch(n)
    s = (-1) ** n
    root = math.sqrt(data.omega_len / (2.0 * data.h))
    return PoleExpansion(n=n, k0=data.k0, tau10=s * data.psi0 * root,
                         tau21=s * 4.0 * data.k0 / (math.pi * data.psi0) * root,
                         tau20=tau20_closed(data))


def im_tau20_from_sigma(data: SpectralData) -> float:
    return -0.5 * (data.omega_len / data.h) * data.k0 ** 2 * data.sigma


def _check_eps(eps):
    if not eps > 0:
        raise ValueError("eps must be positive")


def pole_value(exp: PoleExpansion, eps: float) -> complex:
    _check_eps(eps)
    if not exp.ordering_ok(eps):
        warnings.warn(f"eps={eps}: eps|ln eps| tau21 exceeds eps^(1/2) tau10", stacklevel=2)
    a, b, c = exp.terms(eps)
    return complex(exp.k0 + a + b + c)


def peak_frequency(exp: PoleExpansion, t: float, eps: float) -> float:
    if eps == 0:
        return exp.k0
    _check_eps(eps)
    a, b, _ = exp.terms(eps)
    return float(exp.k0 + a + b + eps * t)


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------
class RegionTag(enum.Enum):
    InteriorBulk = "InteriorBulk"
    InnerTop = "InnerTop"
    Channel = "Channel"
    InnerBottom = "InnerBottom"
    ExteriorBulk = "ExteriorBulk"


def region_tags(x, eps: float, spec) -> list[RegionTag]:
    """Every region containing ``x``; overlaps give two tags, inner one first."""
    x = np.asarray(x, dtype=float)
    r_top = float(np.hypot(x[0], x[1]))
    r_bot = float(np.hypot(x[0], x[1] + spec.h))
    s = math.sqrt(eps)
    trap, chan, ext = in_trap(spec, x), in_channel(spec, x), in_exterior(spec, x)
    if not (trap or chan or ext):
        raise OutOfDomain(f"{tuple(x)} is outside the resonator domain")
    tags = []
    if (trap or chan) and r_top < 2 * s:
        tags.append(RegionTag.InnerTop)
    if (chan or ext) and r_bot < 2 * s:
        tags.append(RegionTag.InnerBottom)
    if trap and r_top >= s:
        tags.append(RegionTag.InteriorBulk)
    if chan and r_top >= s and r_bot >= s:
        tags.append(RegionTag.Channel)
    if ext and r_bot >= s:
        tags.append(RegionTag.ExteriorBulk)
    return tags


@dataclass(frozen=True)
class FieldValue:
    value: complex
    tag: RegionTag
    candidates: dict

    @property
    def overlap(self) -> bool:
        return len(self.candidates) > 1


def _starred_inner(x, h, eps):
    return np.array([x[0] / eps, -(x[1] + h) / eps])


class _Context:
    """Per-call helpers shared by the field formulas."""

    def __init__(self, data: SpectralData, spec):
        self.data, self.spec = data, spec
        self.mode = EigenMode(spec.p, spec.q, spec.a, spec.b)
        self._X = None

    @property
    def X(self):
        if self._X is None:
            self._X = JunctionFieldX(self.spec.omega_minus, self.spec.omega_plus)
        return self._X


def _quasimode_region(tag, n, x, eps, ctx: _Context, X=None) -> complex:
    d = ctx.data
    w, h, k0, m = d.omega_len, d.h, d.k0, d.m
    s = math.sqrt(eps)
    if tag is RegionTag.InteriorBulk:
        return (-1) ** n * float(ctx.mode.values(x[0], x[1])) / math.sqrt(2.0)
    if tag is RegionTag.InnerTop:
        return (-1) ** n * d.psi0 / math.sqrt(2.0)
    if tag is RegionTag.Channel:
        return math.sin(k0 * x[1]) / (s * math.sqrt(h * w))
    if tag is RegionTag.InnerBottom:
        Xf = X if X is not None else ctx.X
        xi = _starred_inner(x, h, eps)
        return s * (-1) ** (m + 1) * (k0 / math.pi) * math.sqrt(w / h) * (
            math.log(eps) + (math.pi / w) * Xf(xi))
    if tag is RegionTag.ExteriorBulk:
        g = green_halfplane(x, (0.0, -h), k0, h)
        return s * (-1) ** m * k0 * math.sqrt(w / h) * g
    raise ValueError(tag)


def quasimode_field(n: int, x, eps: float, data: SpectralData, X: JunctionFieldX | None,
                    spec) -> FieldValue:
    """Leading-order generalised eigenfunction of branch ``n`` at ``x``."""
    _check_branch(n)
    ctx = _Context(data, spec)
    tags = region_tags(x, eps, spec)
    cands = {t.value: complex(_quasimode_region(t, n, x, eps, ctx, X)) for t in tags}
    return FieldValue(value=cands[tags[0].value], tag=tags[0], candidates=cands)


def matching_discrepancy(n: int, eps: float, data: SpectralData, spec, samples: int = 16) -> float:
    """RMS gap between Channel and InnerTop values in their overlap, in units
    of the channel amplitude ``eps^{-1/2}``."""
    s = math.sqrt(eps)
    lo, hi = spec.aperture
    ctx = _Context(data, spec)
    vals = []
    for i in range(samples):
        x2 = -s * (1.0 + (i + 0.5) / samples * 0.999)
        for x1 in (lo + 0.25 * (hi - lo), 0.5 * (lo + hi), lo + 0.75 * (hi - lo)):
            x = (x1, x2)
            if math.hypot(*x) >= 2 * s:
                continue
            ch = _quasimode_region(RegionTag.Channel, n, x, eps, ctx)
            top = _quasimode_region(RegionTag.InnerTop, n, x, eps, ctx)
            vals.append(abs(ch - top) * s)
    return float(math.sqrt(np.mean(np.square(vals))))


# ---------------------------------------------------------------------------
# Peak regime
# ---------------------------------------------------------------------------
def c_F(n: int, t: float, data: SpectralData, uex_x0: complex) -> complex:
    exp = pole_coefficients(data, n)
    den = t - exp.tau20
    if den == 0:
        raise PoleHit("t coincides with tau20 and Im tau20 = 0")
    return ((-1) ** (data.m + n + 1) / (2.0 * den)
            * math.sqrt(data.omega_len / (2 * data.h)) * uex_x0)


def peak_solution_field(n: int, t: float, x, eps: float, data: SpectralData,
                        src: SourceTerm, spec, X: JunctionFieldX | None = None) -> FieldValue:
    _check_branch(n)
    h, w, k0, m = data.h, data.omega_len, data.k0, data.m
    x0 = (0.0, -h)
    cf = c_F(n, t, data, limit_exterior_solution(x0, src, k0, h))
    k = peak_frequency(pole_coefficients(data, n), t, eps)
    ctx = _Context(data, spec)
    tags = region_tags(x, eps, spec)
    s = math.sqrt(eps)
    cands = {}
    for tag in tags:
        if tag is RegionTag.InteriorBulk:
            v = cf * float(ctx.mode.values(x[0], x[1])) / s
        elif tag is RegionTag.InnerTop:
            v = cf * data.psi0 / s
        elif tag is RegionTag.Channel:
            v = (-1) ** n * cf * math.sqrt(2.0 / (h * w)) * math.sin(k0 * x[1]) / eps
        elif tag is RegionTag.InnerBottom:
            Xf = X if X is not None else ctx.X
            v = cf * (-1) ** (m + n + 1) * (k0 / math.pi) * math.sqrt(2 * w / h) * (
                math.log(eps) + (math.pi / w) * Xf(_starred_inner(x, h, eps)))
        else:
            v = (cf * (-1) ** (m + n) * k0 * math.sqrt(2 * w / h) * green_halfplane(x, x0, k, h)
                 + limit_exterior_solution(x, src, k, h))
        cands[tag.value] = complex(v)
    return FieldValue(value=cands[tags[0].value], tag=tags[0], candidates=cands)


class ResolventLeading:
    """Two-pole leading part of the scattered field at complex ``k``.

    The point source ``amplitude * G^ex(., y0)`` solves the equation with
    right-hand side ``F = -amplitude * delta_{y0}``; the holomorphic remainder
    is replaced by ``u^ex`` outside and by zero inside.
    """

    def __init__(self, k, eps, data: SpectralData, src: SourceTerm, spec):
        self.k, self.eps, self.data, self.src, self.spec = complex(k), eps, data, src, spec
        self.taus = [pole_value(pole_coefficients(data, n), eps) for n in (1, 2)]
        for tau in self.taus:
            if abs(tau * tau - self.k * self.k) < 1e-14 * abs(tau) ** 2:
                raise AtPole(f"k = {k} sits on a pole")
        src.check(spec.h)
        self.proj = {}
        for n in (1, 2):
            psi_y0 = quasimode_field(n, src.y0, eps, data, None, spec).value
            self.proj[n] = -complex(src.amplitude) * psi_y0

    def __call__(self, x) -> complex:
        total = 0j
        for n, tau in zip((1, 2), self.taus):
            psi = quasimode_field(n, x, self.eps, self.data, None, self.spec).value
            total -= psi * self.proj[n] / (tau * tau - self.k * self.k)
        if in_exterior(self.spec, x) and self.src.amplitude != 0:
            total += limit_exterior_solution(x, self.src, self.k, self.spec.h)
        return complex(total)


def resolvent_leading(k, eps, data, src, spec) -> ResolventLeading:
    return ResolventLeading(k, eps, data, src, spec)
