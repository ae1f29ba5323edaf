"""Direct mode-matching solver for the full resonator.

Unknowns are the normal derivatives ``phi_t = du/dx2`` on the upper
aperture (``x2 = 0``) and ``phi_b`` on the lower one (``x2 = -h``), each
expanded in an aperture basis (see ``_galerkin``).  The trap side uses the
Neumann Green's function of the rectangle with the resonant mode split off
into a bordering unknown ``A``; the exterior uses the half-plane Green's
function; the channel is expanded in its cosine modes, the uniform one
(which is resonant at ``k0``) carried explicitly by its aperture value
``P``.  Galerkin testing of value continuity at both apertures plus the two
bordering relations gives a square system whose determinant is entire in k
near ``k0``; its zeros are the resonance poles.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import legendre as Leg
from scipy import special

from . import _galerkin as gk
from .errors import (
    CountMismatch,
    IllConditioned,
    NearInteriorSpectrum,
    NoConvergence,
    NotConverged,
    OutOfDomain,
)
from .exterior import EULER_GAMMA, SourceTerm
from .geometry import ResonatorSpec, ValidatedSpec, in_channel, in_exterior, in_trap
from .interior import EigenMode, EwaldTrapGreen, mode_table

log = logging.getLogger(__name__)

INDICATOR_TOL = 1e-8
COND_MAX = 1e13
WINDOW_C = 0.7


@dataclass(frozen=True)
class Truncation:
    """Discretisation sizes.

    n_channel : channel modes summed explicitly on top of the closed-form
        Kummer tail
    n_trap : trap eigenmodes in the Parseval interior norm
    n_quad : nodes of the tensor rule for smooth kernel parts
    basis : aperture density functions per aperture
    """

    n_channel: int = 128
    n_trap: int = 800
    n_quad: int = 24
    basis: int = 8
    weighted: bool = True
    n_edge: int = 64


DEFAULT_LADDER = (
    Truncation(n_channel=64, n_trap=400, n_quad=16, basis=4),
    Truncation(n_channel=128, n_trap=800, n_quad=24, basis=8),
    Truncation(n_channel=256, n_trap=1600, n_quad=40, basis=16),
)


def _as_spec(spec) -> ResonatorSpec:
    if isinstance(spec, ValidatedSpec):
        return spec.spec
    return spec


def _coth_over_s(s, h):
    e = np.exp(-2.0 * s * h)
    return (1.0 + e) / ((1.0 - e) * s)


def _csch_over_s(s, h):
    e = np.exp(-2.0 * s * h)
    return 2.0 * np.exp(-s * h) / ((1.0 - e) * s)


def _principal_s(beta, k):
    s = np.sqrt(beta * beta - complex(k) ** 2 + 0j)
    return np.where(s.real < 0, -s, s)


class MatchingOperator:
    """k-independent tables for one geometry, eps and truncation."""

    H_TERMS = 8

    def __init__(self, spec, eps: float | None = None, trunc: Truncation = Truncation(),
                 k_ref: float | None = None, sealed: bool = False, border_radius: float = 0.0):
        spec = _as_spec(spec)
        if eps is not None:
            spec = spec.with_eps(eps)
        self.spec = spec
        self.trunc = trunc
        self.sealed = sealed
        self.mode = EigenMode(spec.p, spec.q, spec.a, spec.b)
        self.k0 = self.mode.k
        k_ref = self.k0 if k_ref is None else k_ref
        lo, hi = spec.aperture
        self.w = hi - lo
        self.c = 0.5 * (hi + lo)
        self.xl = lo
        self.half = self.w / 2.0
        N = trunc.basis
        self.N = N
        self.basis = gk.ApertureBasis(N, weighted=trunc.weighted)

        # free log kernel on either aperture
        self.I, self.Q = gk.power_log_tables(self.basis, self.H_TERMS)

        # channel modes: projections and the Kummer part of sum_j coth/s
        J = trunc.n_channel
        self.j = np.arange(1, J + 1)
        self.beta = self.j * math.pi / self.w
        proj = self.basis.cos_projection(self.j * math.pi / 2.0)
        self.Pj = self.half * math.sqrt(2.0 / self.w) * proj           # (N, J)
        self.p0 = self.half / math.sqrt(self.w) * self.basis.moments(N)  # (N,)
        self.K_ch = self._channel_kummer()

        # smooth rule and the regular trap kernel tables
        self.s_nodes, self.Bs = self.basis.smooth_rule(trunc.n_quad)
        self.x_nodes = self.c + self.half * self.s_nodes
        self._trap_tables(k_ref, border_radius)

    # ------------------------------------------------------------------
    def _channel_kummer(self):
        N, basis, m = self.N, self.basis, self.trunc.n_edge
        size = N
        Lm = basis.log_matrix(size)
        s_e, B_e = basis.edge_rule(m, size)
        Em = B_e @ basis.ext_log_inner(size, 2.0 - s_e).T
        Ep = B_e @ basis.ext_log_inner(size, -2.0 - s_e).T
        s_q, B_q = basis.smooth_rule(max(self.trunc.n_quad, 2 * N + 8))
        S, T = np.meshgrid(s_q, s_q, indexing="ij")
        Sm = B_q @ gk.channel_kummer_smooth(S, T) @ B_q.T
        return -(self.half ** 2 / math.pi) * (Lm + Em + Ep + Sm)

    def _trap_tables(self, k_ref, border_radius):
        spec = self.spec
        ew = EwaldTrapGreen(spec.a, spec.b)
        self.ewald = ew
        kmax = abs(k_ref) * 1.6 + 2.0
        self.jE = ew.jmax(kmax)
        M = len(self.x_nodes)
        X1 = np.repeat(self.x_nodes, M)
        Y1 = np.tile(self.x_nodes, M)
        xs = np.column_stack([X1, np.zeros_like(X1)])
        ys = np.column_stack([Y1, np.zeros_like(Y1)])
        self.T_other = ew.spatial_table(xs, ys, self.jE, drop_self=True)
        r = np.abs(X1 - Y1)
        self.r_pairs = r
        self.zero = r < 1e-300
        rr = np.where(self.zero, 1.0, r)
        from . import _kernels
        dx = rr[:, None]
        dy = np.zeros_like(dx)
        self.T_self = _kernels.image_table(dx, dy, ew.E ** 2, self.jE)
        # spectral modes valid for the continuation window around k_ref
        pp, qq, kn2, nrm = mode_table(spec.a, spec.b,
                                      math.sqrt(kmax ** 2 + ew.spec_margin))
        self.modes = (pp, qq, kn2)
        phi = (np.cos(np.outer(self.x_nodes + spec.a / 2, pp * math.pi / spec.a)) * nrm)
        self.Phi = phi  # modes evaluated on the aperture line x2 = 0
        # modes split off as bordering unknowns: the resonant one plus any
        # other eigenfrequency near enough to sit inside a search window
        res = int(np.nonzero((pp == spec.p) & (qq == spec.q))[0][0])
        near = np.nonzero(np.abs(np.sqrt(kn2) - self.k0) <= border_radius)[0]
        self.bordered = np.array(sorted(set(near.tolist()) | {res}))
        self.res_pos = int(np.nonzero(self.bordered == res)[0][0])
        self.k_b2 = kn2[self.bordered]
        self.psi_b = self.half * self.Bs @ phi[:, self.bordered]   # (N, nb)
        self.psi_vec = self.psi_b[:, self.res_pos]
        self.psi_nodes = phi[:, res]

    # ------------------------------------------------------------------
    def free_block(self, k):
        """Galerkin matrix of ``(i/2) H0(k|x - y|)`` on one aperture."""
        alpha, beta = gk.hankel_series_coeffs(k, self.H_TERMS)
        lh = math.log(self.half)
        out = np.zeros((self.N, self.N), dtype=complex)
        for j in range(self.H_TERMS + 1):
            sc = self.half ** (2 * j + 2)
            out += sc * (alpha[j] * (self.I[j] + lh * self.Q[j]) + beta[j] * self.Q[j])
        return out

    def trap_regular_block(self, k):
        """Galerkin matrix of ``G^in - (i/2)H0`` minus the bordered modal terms."""
        k = complex(k)
        ew = self.ewald
        E = ew.E
        pp, qq, kn2 = self.modes
        k2 = k * k
        e4 = 4.0 * E * E
        d = (k2 - kn2) / e4
        wts = np.empty(len(kn2), dtype=complex)
        skip = set(self.bordered.tolist())
        for i, lam in enumerate(kn2):
            if i in skip:
                wts[i] = -1.0 / e4 if d[i] == 0 else -np.expm1(d[i]) / (e4 * d[i])
            else:
                if abs(lam - k2) < 1e-6 * max(abs(k2), 1.0):
                    raise NearInteriorSpectrum(f"k^2 = {k2} hits trap mode ({pp[i]}, {qq[i]})")
                wts[i] = np.exp(d[i]) / (lam - k2)
        M = len(self.x_nodes)
        spectral = (self.Phi * wts) @ self.Phi.T
        c = ew.spatial_coeffs(k, self.jE)
        other = (c @ self.T_other).reshape(M, M) / (4.0 * math.pi)
        # two coincident images minus the free kernel
        r = self.r_pairs
        selfpart = (c @ self.T_self) / (4.0 * math.pi)
        with np.errstate(invalid="ignore", divide="ignore"):
            h0 = special.hankel1(0, k * np.where(self.zero, 1.0, r))
        pair = 2.0 * (selfpart - 0.25j * h0)
        series = 0j
        z = k2 / e4
        term = 1.0 + 0j
        for j in range(1, self.jE + 1):
            term *= z / j
            series += term / j
        lim = 2.0 * ((EULER_GAMMA + 2.0 * np.log(k / (2.0 * E)) + series) / (4.0 * math.pi) - 0.25j)
        pair = np.where(self.zero, lim, pair).reshape(M, M)
        W = spectral + other + pair
        return self.half ** 2 * (self.Bs @ W @ self.Bs.T)

    def channel_blocks(self, k):
        """``(C, Ctb)``: sums of coth/s and csch/s over channel modes j >= 1."""
        s = _principal_s(self.beta, k)
        h = self.spec.h
        corr = _coth_over_s(s, h) - self.w / (self.j * math.pi)
        C = self.K_ch + (self.Pj * corr) @ self.Pj.T
        Ctb = (self.Pj * _csch_over_s(s, h)) @ self.Pj.T
        return C, Ctb

    def incident(self, k, src: SourceTerm):
        h = self.spec.h
        y0 = np.asarray(src.y0, dtype=float)
        yr = np.array([y0[0], -2 * h - y0[1]])
        x = np.column_stack([self.x_nodes, np.full_like(self.x_nodes, -h)])
        r1 = np.hypot(*(x - y0).T)
        r2 = np.hypot(*(x - yr).T)
        vals = complex(src.amplitude) * 0.25j * (special.hankel1(0, k * r1) + special.hankel1(0, k * r2))
        return self.half * self.Bs @ vals

    # ------------------------------------------------------------------
    @property
    def size(self) -> int:
        return 2 * self.N + 1 + len(self.bordered)

    def assemble(self, k) -> np.ndarray:
        k = complex(k)
        N = self.N
        nb = len(self.bordered)
        h = self.spec.h
        H = self.free_block(k)
        Wt = self.trap_regular_block(k)
        p0 = self.p0
        A = np.zeros((self.size, self.size), dtype=complex)
        t, b = slice(0, N), slice(N, 2 * N)
        ia = slice(2 * N, 2 * N + nb)
        ip = 2 * N + nb
        sk, ck = np.sin(k * h), np.cos(k * h)
        A[t, ia] = self.psi_b
        A[ia, t] = self.psi_b.T
        A[ia, ia] = -np.diag(self.k_b2 - k * k)
        if self.sealed:
            # apertures closed: no flux, bordered modes and the channel mode free
            A[t, ia] = 0.0
            A[ia, t] = 0.0
            A[t, t] = np.eye(N)
            A[b, b] = np.eye(N)
            A[ip, ip] = k * sk
            return A
        C, Ctb = self.channel_blocks(k)
        A[t, t] = H + Wt + C
        A[t, b] = -Ctb
        A[t, ip] = p0
        A[b, t] = -Ctb + (sk / k) * np.outer(p0, p0)
        A[b, b] = H + C
        A[b, ip] = -ck * p0
        A[ip, t] = ck * p0
        A[ip, b] = -p0
        A[ip, ip] = k * sk
        return A

    def rhs(self, k, src: SourceTerm) -> np.ndarray:
        N = self.N
        out = np.zeros(self.size, dtype=complex)
        out[N:2 * N] = -self.incident(k, src)
        return out

    # indicator ---------------------------------------------------------
    def equilibrate(self, k) -> None:
        """Fix k-independent row/column scalings from the matrix at ``k``."""
        A = np.abs(self.assemble(k))
        r = np.ones(A.shape[0])
        c = np.ones(A.shape[1])
        for _ in range(8):
            r = 1.0 / np.sqrt(np.max(A * c[None, :], axis=1))
            c = 1.0 / np.sqrt(np.max(A * r[:, None], axis=0))
        self._scale = (r, c)

    def scaled(self, k) -> np.ndarray:
        A = self.assemble(k)
        sc = getattr(self, "_scale", None)
        if sc is None:
            return A
        return sc[0][:, None] * A * sc[1][None, :]

    def logdet(self, k):
        sign, la = np.linalg.slogdet(self.scaled(k))
        return complex(sign), float(la)

    def indicator(self, k) -> float:
        """``sigma_min / sigma_max`` of the scaled system."""
        sv = np.linalg.svd(self.scaled(k), compute_uv=False)
        return float(sv[-1] / sv[0])


@dataclass(frozen=True)
class MatchingSystem:
    k: complex
    matrix: np.ndarray
    condition: float

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def assemble(k, spec, trunc: Truncation = Truncation(), eps: float | None = None,
             sealed: bool = False) -> MatchingSystem:
    op = MatchingOperator(spec, eps, trunc, sealed=sealed)
    A = op.assemble(k)
    return MatchingSystem(k=complex(k), matrix=A, condition=float(np.linalg.cond(A)))


# ----------------------------------------------------------------------
# pole search
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class Window:
    center: complex
    radius: float

    def contains(self, k) -> bool:
        return abs(complex(k) - self.center) < self.radius


def auto_window(spec, eps: float, c: float = WINDOW_C) -> Window:
    """Disk around k0 of radius ``3 c eps^(1/2) |tau10|``."""
    s = _as_spec(spec)
    mode = EigenMode(s.p, s.q, s.a, s.b)
    tau10 = abs(mode.values(0.0, 0.0)) * math.sqrt((s.omega_plus - s.omega_minus) / (2.0 * s.h))
    return Window(center=complex(mode.k), radius=3.0 * c * math.sqrt(eps) * tau10)


@dataclass
class ContourData:
    theta: np.ndarray
    log_f: np.ndarray          # continuous branch of log det on the circle
    winding: int
    samples: int


def _contour_log(op: MatchingOperator, win: Window, n0: int = 256, n_max: int = 16384) -> ContourData:
    n = n0
    while True:
        theta = 2.0 * math.pi * np.arange(n) / n
        vals = [op.logdet(win.center + win.radius * np.exp(1j * t)) for t in theta]
        la = np.array([v[1] for v in vals])
        ph = np.angle(np.array([v[0] for v in vals]))
        ph_closed = np.unwrap(np.append(ph, ph[0]))
        jumps = np.abs(np.diff(ph_closed))
        if jumps.max() < math.pi / 4 or n >= n_max:
            if jumps.max() >= math.pi / 4:
                log.warning("phase still under-resolved with %d samples", n)
            wind = (ph_closed[-1] - ph_closed[0]) / (2.0 * math.pi)
            return ContourData(theta, la + 1j * ph_closed[:-1], int(round(wind)), n)
        n *= 2


def _moment_roots(cd: ContourData, win: Window) -> np.ndarray:
    """Roots inside the contour from power sums of the zeros (Newton identities)."""
    m = cd.winding
    if m <= 0:
        return np.empty(0, dtype=complex)
    L = cd.log_f - 1j * m * cd.theta          # periodic part
    R = win.radius
    # s_p = -p R^p mean(L e^{i p theta}); use unit-radius coordinates
    s = np.array([-p * np.mean(L * np.exp(1j * p * cd.theta)) for p in range(1, m + 1)])
    e = [1.0 + 0j]
    for j in range(1, m + 1):
        e.append(sum((-1) ** (i - 1) * e[j - i] * s[i - 1] for i in range(1, j + 1)) / j)
    coeffs = [(-1) ** j * e[j] for j in range(m + 1)]
    z = np.roots(coeffs)
    return win.center + R * z


def muller(f, x0, x1, x2, tol: float = 1e-14, maxiter: int = 100):
    f0, f1, f2 = f(x0), f(x1), f(x2)
    for _ in range(maxiter):
        h1, h2 = x1 - x0, x2 - x1
        d1, d2 = (f1 - f0) / h1, (f2 - f1) / h2
        a = (d2 - d1) / (h2 + h1)
        b = a * h2 + d2
        disc = np.sqrt(b * b - 4.0 * f2 * a + 0j)
        den = b + disc if abs(b + disc) > abs(b - disc) else b - disc
        step = -2.0 * f2 / den if den != 0 else 1e-3 * (1 + abs(x2))
        x0, x1, x2 = x1, x2, x2 + step
        f0, f1, f2 = f1, f2, f(x2)
        if abs(step) <= tol * max(1.0, abs(x2)):
            return complex(x2)
    raise NoConvergence(f"Muller stalled near {x2}")


@dataclass
class Pole:
    k: complex
    residual: float
    multiplicity: int = 1
    seed: complex = 0j


@dataclass
class OracleResult:
    eps: float
    window: Window
    poles: list
    count: int
    samples: int
    truncation: Truncation
    certificate: "Certificate | None" = None
    flags: list = field(default_factory=list)

    @property
    def roots(self) -> list:
        return [p.k for p in self.poles]


def _polish(op: MatchingOperator, seed: complex, win: Window, ref: float) -> complex:
    def f(k):
        s, la = op.logdet(k)
        return s * math.exp(la - ref)
    d = 1e-3 * win.radius
    return muller(f, seed - d, seed + d, seed + 1j * d)


def pole_search(spec, eps: float, window: Window | None = None, trunc: Truncation = Truncation(),
                expected: int = 2, tol: float = INDICATOR_TOL, strict: bool = True,
                seeds: Sequence[complex] | None = None) -> OracleResult:
    """Count zeros of the matching determinant in ``window`` and polish them.

    The count comes from the phase winding of the log-determinant; starting
    points come from contour moments, so no asymptotic input is needed.
    ``seeds`` (e.g. asymptotic pole values) are only tried when the moment
    estimates fail to polish.
    """
    s = _as_spec(spec).with_eps(eps)
    win = auto_window(s, eps) if window is None else window
    op = MatchingOperator(s, None, trunc, k_ref=abs(win.center) + win.radius,
                          border_radius=abs(win.center - EigenMode(s.p, s.q, s.a, s.b).k) + 1.25 * win.radius)
    op.equilibrate(win.center)
    cd = _contour_log(op, win)
    ref = float(np.mean(cd.log_f.real))
    poles, flags = [], []
    starts = list(_moment_roots(cd, win))
    extra = list(seeds or [])
    for z0 in starts + extra:
        if len(poles) >= cd.winding and z0 in extra:
            break
        try:
            k = _polish(op, complex(z0), win, ref)
        except NoConvergence:
            continue
        if not win.contains(k):
            continue
        dup = [p for p in poles if abs(p.k - k) < 1e-9 * abs(k)]
        if dup:
            continue
        poles.append(Pole(k=k, residual=op.indicator(k), seed=complex(z0)))
    # multiplicity: a root found once for a double count
    if poles and len(poles) < cd.winding:
        flags.append("fewer distinct roots than the winding count")
        if len(poles) == 1 and cd.winding == 2:
            poles[0].multiplicity = 2
    bad = [p for p in poles if p.residual > tol]
    if bad:
        flags.append(f"{len(bad)} root(s) above indicator tolerance")
    if any(p.k.imag > 1e-12 for p in poles):
        flags.append("root with Im k > 0")
    poles.sort(key=lambda p: p.k.real)
    res = OracleResult(eps=eps, window=win, poles=poles, count=cd.winding, samples=cd.samples,
                       truncation=trunc, flags=flags)
    n_found = sum(p.multiplicity for p in poles if p.residual <= tol)
    if strict and expected is not None and (cd.winding != expected or n_found != expected):
        raise CountMismatch(f"eps={eps}: winding {cd.winding}, {n_found} polished root(s), expected {expected}",
                            roots=res.roots, count=cd.winding)
    return res


# ----------------------------------------------------------------------
# real-frequency scattering
# ----------------------------------------------------------------------
def _h0_grad(k, x, y):
    """Value and gradient in x of ``H0(k|x - y|)``; y has shape (M, 2)."""
    d = np.asarray(x, dtype=float)[None, :] - y
    r = np.hypot(d[:, 0], d[:, 1])
    val = special.hankel1(0, k * r)
    dval = -k * special.hankel1(1, k * r)
    return val, dval[:, None] * d / r[:, None]


class ScatterResult:
    """Solution of the matching system for a point source at real k."""

    def __init__(self, op: MatchingOperator, k: float, src: SourceTerm, x: np.ndarray, cond: float):
        self.op, self.k, self.src, self.cond = op, float(k), src, cond
        N, nb = op.N, len(op.bordered)
        self.c_t = x[:N]
        self.c_b = x[N:2 * N]
        self.mode_amps = x[2 * N:2 * N + nb]
        self.P = x[2 * N + nb]
        self.Q = op.p0 @ self.c_t
        s, B = op.basis.smooth_rule(max(64, 4 * N))
        self._s = s
        self._qw = op.half * B.T                          # density -> weighted node values
        self._xt = op.c + op.half * s
        spec = op.spec
        self._top = np.column_stack([self._xt, np.zeros_like(s)])
        self._bot = np.column_stack([self._xt, np.full_like(s, -spec.h)])
        self._dens_t = self._qw @ self.c_t
        self._dens_b = self._qw @ self.c_b

    # pointwise field ----------------------------------------------------
    def _trap(self, x):
        op = self.op
        ew = op.ewald
        xs = np.repeat(np.asarray(x, float)[None, :], len(self._s), axis=0)
        jm = ew.jmax(self.k)
        T = ew.spatial_table(xs, self._top, jm)
        g = ew.spectral_sum(xs, self._top, self.k) + (ew.spatial_coeffs(self.k, jm) @ T) / (4 * math.pi)
        return complex(-(g @ self._dens_t))

    def _channel_modes(self, x2):
        op = self.op
        k, h = self.k, op.spec.h
        F0 = self.P * math.cos(k * x2) + self.Q * math.sin(k * x2) / k
        a = op.Pj.T @ self.c_t
        b = op.Pj.T @ self.c_b
        s = _principal_s(op.beta, k)
        den = 1.0 - np.exp(-2 * s * h)
        Fj = (a * (np.exp(s * x2) + np.exp(-s * (x2 + 2 * h)))
              - b * (np.exp(s * (x2 - h)) + np.exp(-s * (x2 + h)))) / (s * den)
        return F0, Fj

    def _channel(self, x):
        op = self.op
        F0, Fj = self._channel_modes(x[1])
        chi = math.sqrt(2.0 / op.w) * np.cos(op.j * math.pi * (x[0] - op.xl) / op.w)
        return complex(F0 / math.sqrt(op.w) + chi @ Fj)

    def incident(self, x):
        return complex(self.src.amplitude) * _green_ex(self.k, x, self.src.y0, self.op.spec.h)

    def _exterior(self, x, with_incident=True):
        val, _ = _h0_grad(self.k, x, self._bot)
        out = 0.5j * (val @ self._dens_b)
        return complex(out + (self.incident(x) if with_incident else 0.0))

    def field(self, x) -> complex:
        x = np.asarray(x, dtype=float)
        spec = self.op.spec
        if in_exterior(spec, x) and x[1] < -spec.h:
            return self._exterior(x)
        if in_channel(spec, x):
            return self._channel(x)
        if in_trap(spec, x):
            return self._trap(x)
        raise OutOfDomain(f"{tuple(x)} is outside the resonator")

    __call__ = field

    # norms -------------------------------------------------------------
    def interior_norm(self, n_modes: int | None = None) -> float:
        """L2 norm over the trap from the modal (Parseval) expansion."""
        op = self.op
        spec = op.spec
        n_modes = op.trunc.n_trap if n_modes is None else n_modes
        kmax = math.pi * math.sqrt(4.0 * n_modes / (math.pi * spec.a * spec.b)) + 4.0
        pp, qq, kn2, nrm = mode_table(spec.a, spec.b, kmax)
        pp, qq, kn2, nrm = pp[:n_modes], qq[:n_modes], kn2[:n_modes], nrm[:n_modes]
        alphas = pp * math.pi * op.half / spec.a
        shift = pp * math.pi * (op.c + spec.a / 2.0) / spec.a
        proj = op.half * nrm * (self.c_t @ op.basis.cos_projection(alphas, shift))
        coef = np.empty(len(kn2), dtype=complex)
        free = np.ones(len(kn2), dtype=bool)
        bp, bq = op.modes[0][op.bordered], op.modes[1][op.bordered]
        for amp, p_, q_ in zip(self.mode_amps, bp, bq):
            hit = np.nonzero((pp == p_) & (qq == q_))[0]
            if hit.size:
                coef[hit[0]] = amp      # solved directly, finite at k = k_n
                free[hit[0]] = False
        coef[free] = proj[free] / (kn2[free] - self.k ** 2)
        return float(math.sqrt(np.sum(np.abs(coef) ** 2)))

    def channel_norm(self, nodes: int = 64) -> float:
        h = self.op.spec.h
        t, w = Leg.leggauss(nodes)
        x2 = -h / 2 * (t + 1)
        tot = 0.0
        for xi, wi in zip(x2, w):
            F0, Fj = self._channel_modes(xi)
            tot += wi * (abs(F0) ** 2 + np.sum(np.abs(Fj) ** 2))
        return math.sqrt(tot * h / 2)

    def channel_amplitude(self) -> float:
        return abs(self._channel((self.op.c, -self.op.spec.h / 2)))

    def exterior_norm(self, r_in: float = 1.0, r_out: float = 2.0, nodes: int = 32) -> float:
        """L2 norm over a half annulus centred at the lower aperture."""
        h = self.op.spec.h
        t, w = Leg.leggauss(nodes)
        r = r_in + (r_out - r_in) * (t + 1) / 2
        th = -math.pi * (t + 1) / 2
        tot = 0.0
        for ri, wr in zip(r, w):
            for ti, wt in zip(th, w):
                x = (ri * math.cos(ti), -h + ri * math.sin(ti))
                tot += wr * wt * ri * abs(self._exterior(x)) ** 2
        return math.sqrt(tot * (r_out - r_in) / 2 * math.pi / 2)

    # energy ------------------------------------------------------------
    def outgoing_flux(self, radius: float = 3.0, nodes: int = 400) -> float:
        """``Im int conj(u) du/dr`` over the half circle about the lower aperture."""
        k, h = self.k, self.op.spec.h
        t, w = Leg.leggauss(nodes)
        th = -math.pi * (t + 1) / 2
        y0 = np.asarray(self.src.y0, float)
        imgs = np.array([y0, [y0[0], -2 * h - y0[1]]])
        amp = complex(self.src.amplitude)
        tot = 0.0
        for ti, wi in zip(th, w):
            e = np.array([math.cos(ti), math.sin(ti)])
            x = np.array([0.0, -h]) + radius * e
            v, g = _h0_grad(k, x, self._bot)
            u = 0.5j * (v @ self._dens_b)
            du = 0.5j * (g.T @ self._dens_b)
            vi, gi = _h0_grad(k, x, imgs)
            u += amp * 0.25j * vi.sum()
            du += amp * 0.25j * gi.sum(axis=0)
            tot += wi * (np.conj(u) * (du @ e)).imag
        return float(tot * radius * math.pi / 2)

    def source_power(self) -> float:
        """``Im(conj(a) u_reg(y0))``: power injected by the point source."""
        k, h = self.k, self.op.spec.h
        amp = complex(self.src.amplitude)
        y0 = np.asarray(self.src.y0, float)
        d_img = abs(2 * (y0[1] + h))
        reg = amp * (0.25j - (math.log(k / 2) + EULER_GAMMA) / (2 * math.pi))
        reg += amp * 0.25j * special.hankel1(0, k * d_img)
        reg += self._exterior(y0, with_incident=False)
        return float((np.conj(amp) * reg).imag)

    def flux_balance(self, radius: float = 3.0, nodes: int = 400) -> float:
        p_src = self.source_power()
        return abs(self.outgoing_flux(radius, nodes) - p_src) / abs(p_src)


def _green_ex(k, x, y, h):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    r1 = math.hypot(x[0] - y[0], x[1] - y[1])
    r2 = math.hypot(x[0] - y[0], x[1] + 2 * h + y[1])
    return 0.25j * (special.hankel1(0, k * r1) + special.hankel1(0, k * r2))


def scatter_solve(spec, eps: float, k: float, src: SourceTerm, trunc: Truncation = Truncation(),
                  cond_max: float = COND_MAX, op: MatchingOperator | None = None) -> ScatterResult:
    """Field of a point source below the wall at real frequency k."""
    s = _as_spec(spec).with_eps(eps)
    src.check(s.h)
    k = float(np.real(k))
    if op is None:
        op = MatchingOperator(s, None, trunc)
        op.equilibrate(k)
    A = op.scaled(k)
    cond = float(np.linalg.cond(A))
    if not cond < cond_max:
        raise IllConditioned(f"condition number {cond:.3e} at k={k}", cond=cond)
    rhs = op.rhs(k, src)
    r, c = op._scale
    y = np.linalg.solve(A, r * rhs)
    return ScatterResult(op, k, src, c * y, cond)


def reciprocity_gap(spec, eps: float, k: float, y1, y2, trunc: Truncation = Truncation()) -> float:
    """``|u_1(y2) - u_2(y1)| / max`` for unit sources at two exterior points.

    Only the scattered parts are compared; the direct terms are symmetric by
    construction and would mask the test.
    """
    s = _as_spec(spec).with_eps(eps)
    op = MatchingOperator(s, None, trunc)
    op.equilibrate(float(k))
    r1 = scatter_solve(s, eps, k, SourceTerm(tuple(y1), 1.0), trunc, op=op)
    r2 = scatter_solve(s, eps, k, SourceTerm(tuple(y2), 1.0), trunc, op=op)
    a = r1._exterior(np.asarray(y2, float), with_incident=False)
    b = r2._exterior(np.asarray(y1, float), with_incident=False)
    return abs(a - b) / max(abs(a), abs(b))


# ----------------------------------------------------------------------
# truncation ladder
# ----------------------------------------------------------------------
@dataclass
class Certificate:
    """Cauchy differences of a vector of outputs along a truncation ladder."""

    ladder: tuple
    values: list               # one complex vector per level
    diffs: list                # max-norm difference between consecutive levels
    ratios: list               # diffs[i] / diffs[i + 1]
    min_ratio: float = 4.0

    @property
    def passed(self) -> bool:
        return bool(self.ratios) and all(r >= self.min_ratio for r in self.ratios)

    @property
    def error_estimate(self) -> float:
        return self.diffs[-1] if self.diffs else math.inf


def _certificate(ladder, values, min_ratio, floor=1e-13) -> Certificate:
    diffs = [float(np.max(np.abs(np.asarray(b) - np.asarray(a)))) for a, b in zip(values, values[1:])]
    ratios = []
    for d0, d1 in zip(diffs, diffs[1:]):
        # both differences at round-off: converged, count as passing
        ratios.append(math.inf if d1 <= floor else d0 / d1)
    return Certificate(tuple(ladder), values, diffs, ratios, min_ratio)


def truncation_convergence(spec, eps: float, k: float | None = None, src: SourceTerm | None = None,
                           ladder: Sequence[Truncation] = DEFAULT_LADDER, min_ratio: float = 4.0,
                           window: Window | None = None, strict: bool = False) -> Certificate:
    """Run the ladder on the poles (``k is None``) or on scattering outputs at real k."""
    if len(ladder) < 3:
        raise ValueError("the certificate needs at least three truncation levels")
    values = []
    for tr in ladder:
        if k is None:
            res = pole_search(spec, eps, window, tr, strict=False)
            values.append(np.array(sorted(res.roots, key=lambda z: z.real)))
        else:
            if src is None:
                raise ValueError("scattering ladder needs a source")
            r = scatter_solve(spec, eps, k, src, tr)
            probe = (0.25 * _as_spec(spec).a, 0.5 * _as_spec(spec).b)
            values.append(np.array([r.interior_norm(), r.channel_amplitude(), r.field(probe)]))
    if len({v.size for v in values}) != 1:
        cert = Certificate(tuple(ladder), values, [math.inf], [0.0], min_ratio)
    else:
        cert = _certificate(ladder, values, min_ratio)
    if strict and not cert.passed:
        raise NotConverged(f"ratios {cert.ratios} below {min_ratio}")
    return cert


def trap_modes_required(spec, eps: float, k: float, src: SourceTerm, rtol: float = 1e-6,
                        start: int = 50, limit: int = 204800) -> int:
    """Smallest doubling of n_trap at which the interior norm moves by < rtol."""
    r = scatter_solve(spec, eps, k, src, Truncation())
    n = start
    prev = r.interior_norm(n)
    while n < limit:
        cur = r.interior_norm(2 * n)
        if abs(cur - prev) <= rtol * abs(cur):
            return n
        n, prev = 2 * n, cur
    raise NotConverged(f"interior norm not settled with {limit} modes")


# ----------------------------------------------------------------------
# structural diagnostics
# ----------------------------------------------------------------------
def parity_coupling(op: MatchingOperator, k) -> float:
    """Largest entry linking even and odd basis functions (symmetric apertures)."""
    A = op.assemble(k)
    N = op.N
    n = np.arange(N)
    odd = np.concatenate([n % 2 == 1, n % 2 == 1])
    idx = np.arange(2 * N)
    blk = A[np.ix_(idx[odd], idx[~odd])]
    return float(np.max(np.abs(blk))) / float(np.max(np.abs(A)))


def cauchy_riemann_gap(op: MatchingOperator, k, step: float = 1e-5) -> float:
    """Relative mismatch between d/dRe and -i d/dIm of the system matrix."""
    k = complex(k)
    dx = (op.assemble(k + step) - op.assemble(k - step)) / (2 * step)
    dy = (op.assemble(k + 1j * step) - op.assemble(k - 1j * step)) / (2 * step)
    return float(np.max(np.abs(dx + 1j * dy)) / np.max(np.abs(dx)))
