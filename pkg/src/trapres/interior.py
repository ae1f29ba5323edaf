"""Neumann spectral data of the rectangular trap ``[-a/2, a/2] x [0, b]``.

Green's function convention: ``(Laplace + k^2) G = -delta`` with zero normal
derivative on the walls, so ``G = sum_n psi_n(x) psi_n(y) / (k_n^2 - k^2)``
and ``G ~ -(1/pi) ln|x - y|`` at a boundary source.

Two independent evaluation routes are provided:

``modal``
    cosine expansion in x1 with the exact transverse Green's function of each
    mode; the logarithmic part is removed by Kummer subtraction and summed in
    closed form.
``ewald``
    Ewald splitting of the image lattice: a Gaussian-damped spectral sum plus
    an exponential-integral image sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from . import _kernels
from .errors import CoincidentPoints, NearSpectrum, NoConvergence, OutOfDomain
from .geometry import ResonatorSpec, check_simple_mode

EULER_GAMMA = _kernels.EULER_GAMMA
ZETA3 = 1.2020569031595942854
NEAR_SPECTRUM_RTOL = 1e-6
_MODAL_TOL = 1e-11
_MODAL_PCAP = 2_000_000


# ---------------------------------------------------------------------------
# Eigenmodes
# ---------------------------------------------------------------------------
def interior_eigenfrequency(p: int, q: int, a: float, b: float) -> float:
    if p < 0 or q < 0:
        raise ValueError("mode indices must be nonnegative")
    if p == 0 and q == 0:
        raise ValueError("(0, 0) is the constant mode with zero frequency")
    return math.pi * math.sqrt((p / a) ** 2 + (q / b) ** 2)


@dataclass(frozen=True)
class EigenMode:
    """L2-normalised Neumann mode ``(p, q)``, signed so that ``psi(0) >= 0``."""

    p: int
    q: int
    a: float
    b: float

    @property
    def k(self) -> float:
        return math.pi * math.sqrt((self.p / self.a) ** 2 + (self.q / self.b) ** 2)

    @property
    def norm(self) -> float:
        ep = 1.0 if self.p == 0 else 2.0
        eq = 1.0 if self.q == 0 else 2.0
        return math.sqrt(ep * eq / (self.a * self.b))

    @property
    def sign(self) -> float:
        c = math.cos(self.p * math.pi / 2)
        return -1.0 if c < -0.5 else 1.0

    def values(self, x1, x2):
        """Vectorised evaluation without domain checks."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        return (self.sign * self.norm * np.cos(self.p * math.pi * (x1 + self.a / 2) / self.a)
                * np.cos(self.q * math.pi * x2 / self.b))

    def gradient(self, x):
        x1, x2 = float(x[0]), float(x[1])
        cp, cq = self.p * math.pi / self.a, self.q * math.pi / self.b
        c = self.sign * self.norm
        u = cp * (x1 + self.a / 2)
        v = cq * x2
        return np.array([-c * cp * math.sin(u) * math.cos(v),
                         -c * cq * math.cos(u) * math.sin(v)])


def _check_in_trap(x, a, b, tol=1e-12):
    x1, x2 = float(x[0]), float(x[1])
    if not (-a / 2 - tol <= x1 <= a / 2 + tol and -tol <= x2 <= b + tol):
        raise OutOfDomain(f"point ({x1}, {x2}) is outside the trap")


def psi_eval(x, mode: EigenMode) -> float:
    _check_in_trap(x, mode.a, mode.b)
    return float(mode.values(x[0], x[1]))


def mode_table(a: float, b: float, kmax: float):
    """All Neumann modes with ``k_n <= kmax``: arrays ``p, q, k2, norm``."""
    pmax = int(math.floor(kmax * a / math.pi)) + 1
    qmax = int(math.floor(kmax * b / math.pi)) + 1
    pp, qq = np.meshgrid(np.arange(pmax + 1), np.arange(qmax + 1), indexing="ij")
    pp, qq = pp.ravel(), qq.ravel()
    k2 = math.pi ** 2 * ((pp / a) ** 2 + (qq / b) ** 2)
    keep = k2 <= kmax * kmax
    pp, qq, k2 = pp[keep], qq[keep], k2[keep]
    norm = np.sqrt(np.where(pp == 0, 1.0, 2.0) * np.where(qq == 0, 1.0, 2.0) / (a * b))
    order = np.lexsort((qq, pp, k2))
    return pp[order], qq[order], k2[order], norm[order]


def _check_spectrum(k, a, b, exclude=None):
    k2 = complex(k) ** 2
    scale = max(abs(k2), 1.0)
    kmax = math.sqrt(abs(k2)) * 1.01 + 1.0
    pp, qq, kn2, _ = mode_table(a, b, kmax + 10.0)
    for p, q, lam in zip(pp, qq, kn2):
        if exclude is not None and (int(p), int(q)) == tuple(exclude):
            continue
        if abs(k2 - lam) < NEAR_SPECTRUM_RTOL * scale:
            raise NearSpectrum(f"k^2 = {k2} within {NEAR_SPECTRUM_RTOL:g} of mode ({p}, {q})")


# ---------------------------------------------------------------------------
# Modal (Kummer) route
# ---------------------------------------------------------------------------
def _strip_g0(x2, y2, k, b):
    """Transverse Green's function of the p = 0 mode."""
    s = np.sqrt(-complex(k) ** 2 + 0j)
    if s.real < 0:
        s = -s
    lo, hi = min(x2, y2), max(x2, y2)
    dd, ss = hi - lo, hi + lo
    if abs(s) == 0:
        raise NearSpectrum("k = 0 hits the constant mode")
    num = np.exp(-s * dd) + np.exp(-s * ss) + np.exp(-s * (2 * b - ss)) + np.exp(-s * (2 * b - dd))
    return num / (2.0 * s * (1.0 - np.exp(-2.0 * s * b)))


def _log_kummer(x, y, a, b):
    """Closed form of the subtracted exponential series.

    ``sum_p (2/a) c_p(x1) c_p(y1) sum_t exp(-p pi t / a) / (2 p pi / a)`` with
    ``t`` over the four transverse image distances; uses
    ``sum_p cos(p u) e^{-p v} / p = -ln(1 - 2 e^{-v} cos u + e^{-2v}) / 2``.
    """
    x1, x2, y1, y2 = float(x[0]), float(x[1]), float(y[0]), float(y[1])
    lo, hi = min(x2, y2), max(x2, y2)
    dd, ss = hi - lo, hi + lo
    total = 0.0
    for u in (math.pi * (x1 - y1) / a, math.pi * (x1 + y1 + a) / a):
        for t in (dd, ss, 2 * b - ss, 2 * b - dd):
            v = math.pi * t / a
            ev = math.exp(-v)
            arg = 1.0 - 2.0 * ev * math.cos(u) + ev * ev
            if arg <= 0.0:
                raise CoincidentPoints("source and field point (or an image) coincide")
            total += math.log(arg)
    return -total / (4.0 * math.pi)


def _modal_cutoff(x, y, k, a, b, tol=_MODAL_TOL):
    # Remainder terms behave like (2/a) e^{-p pi d / a} |k|^2 (a / p pi)^3 / 4,
    # d the smallest transverse image distance.  With d > 0 the exponential
    # sets the cutoff; with d = 0 the algebraic tail |k|^2 a^2 / (4 pi^3 P^2)
    # must drop below tol.
    lo, hi = min(x[1], y[1]), max(x[1], y[1])
    ds = [d for d in (hi - lo, hi + lo, 2 * b - hi - lo) if d > 1e-14]
    alg = abs(k) * a / (2.0 * math.pi ** 1.5 * math.sqrt(tol)) + 1.0
    if len(ds) == 3:
        pexp = a * math.log(1.0 / tol) / (math.pi * min(ds)) + 1.0
        pmax = min(pexp, alg)
    else:
        pmax = alg
    pmax = max(64, int(math.ceil(pmax)))
    if pmax > _MODAL_PCAP:
        raise NoConvergence(f"modal sum needs {pmax} terms")
    return pmax


def _green_modal(x, y, k, a, b):
    pmax = _modal_cutoff(x, y, k, a, b)
    val = _strip_g0(float(x[1]), float(y[1]), k, b) / a
    val += _kernels.strip_remainder(x, y, k, a, b, pmax)
    val += _log_kummer(x, y, a, b)
    return complex(val)


def _line_cutoff(k, a, tol=1e-14):
    # remainder terms ~ (3/8) |k|^4 (a / p pi)^5 with weight 2/a; their even-p
    # tail beyond P is below (3/64)(2/a)|k|^4 (a/pi)^5 / P^4
    c = (3.0 / 64.0) * (2.0 / a) * abs(k) ** 4 * (a / math.pi) ** 5
    return max(200, int(math.ceil((c / tol) ** 0.25)) + 2)


def g_in_modal(k, a, b, p0, q0) -> complex:
    """Regularised trap constant at the origin by the modal route."""
    if p0 % 2:
        raise ValueError("the resonant mode must not vanish at the origin (p0 even)")
    k = complex(k)
    pmax = _line_cutoff(k, a)
    # p = 0 term (weight 1/a): -cot(k b)/k, possibly resonant
    if p0 == 0:
        g0 = _kernels.resonant_free_line_gp(k, 0.0, b, q0)
    else:
        g0 = -1.0 / (k * np.tan(k * b))
    total = g0 / a
    rem = _kernels.line_remainder(k, a, b, 2, pmax + 1, 2, skip_p=p0 if p0 > 0 else -1)
    if p0 > 0:
        beta = p0 * math.pi / a
        base = a / (p0 * math.pi)
        rem += (_kernels.resonant_free_line_gp(k, beta, b, q0)
                - base - base * (k * a / (p0 * math.pi)) ** 2 / 2.0)
    total += (2.0 / a) * rem
    total += (a * a * k * k / math.pi ** 3) * ZETA3 / 8.0
    total -= math.log(2.0 * math.pi / a) / math.pi
    return complex(total)


# ---------------------------------------------------------------------------
# Ewald route
# ---------------------------------------------------------------------------
class EwaldTrapGreen:
    """Ewald-split Neumann Green's function of the rectangle.

    ``G = sum_n psi_n psi_n e^{(k^2 - k_n^2)/4E^2} / (k_n^2 - k^2)
          + (1/4 pi) sum_images sum_j (k/2E)^{2j} / j! E_{j+1}(E^2 |x - y'|^2)``.

    The image table depends on geometry only, so it is cached per point set.
    """

    def __init__(self, a: float, b: float, E: float = 2.0, tol: float = 1e-16):
        self.a, self.b, self.E = float(a), float(b), float(E)
        self.tol = tol
        lnt = math.log(1.0 / tol)
        # spatial cutoff: E_1(E^2 r^2) < tol
        self.r_cut = math.sqrt(lnt + 3.0) / self.E
        # spectral cutoff on k_n^2 - Re k^2
        self.spec_margin = 4.0 * self.E ** 2 * (lnt + 3.0)

    # -- spectral part ------------------------------------------------------
    def modes(self, k):
        kmax = math.sqrt(max(complex(k).real ** 2 - complex(k).imag ** 2, 0.0) + self.spec_margin)
        return mode_table(self.a, self.b, kmax)

    def jmax(self, k) -> int:
        z = abs(complex(k)) ** 2 / (4.0 * self.E ** 2)
        j, term = 0, 1.0
        while term > self.tol * 1e-2 or j < 4:
            j += 1
            term *= z / j
            if j > 400:
                raise NoConvergence("Ewald spatial series does not converge")
        return j

    def images(self, y):
        """Image offsets of source ``y``: list of ``(y1', y2')`` within reach."""
        a, b = self.a, self.b
        y1, y2 = float(y[0]), float(y[1])
        n1 = int(math.ceil((self.r_cut + 2 * a) / (2 * a))) + 1
        n2 = int(math.ceil((self.r_cut + 2 * b) / (2 * b))) + 1
        out = []
        for i in range(-n1, n1 + 1):
            for s1 in (y1, -a - y1):
                for j in range(-n2, n2 + 1):
                    for s2 in (y2, -y2):
                        out.append((s1 + 2 * a * i, s2 + 2 * b * j, s1 == y1 and i == 0 and j == 0))
        return out

    def spatial_table(self, xs, ys, jmax, drop_self=False):
        """``T[j, i] = sum_images E_{j+1}(E^2 |x_i - y_i'|^2)``.

        With ``drop_self`` the (up to two) images that coincide with ``y_i``
        itself (those from the identity in x1 and zero lattice shift) are left
        out; the caller then handles them analytically.
        """
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        rows_dx, rows_dy = [], []
        rc2 = (self.r_cut + 1e-9) ** 2
        width = 0
        for x, y in zip(xs, ys):
            dx, dy = [], []
            for i1, i2, is_self in self.images(y):
                if drop_self and is_self:
                    continue
                ddx, ddy = x[0] - i1, x[1] - i2
                if ddx * ddx + ddy * ddy <= rc2:
                    dx.append(ddx)
                    dy.append(ddy)
            rows_dx.append(dx)
            rows_dy.append(dy)
            width = max(width, len(dx))
        dxa = np.full((len(rows_dx), max(width, 1)), np.nan)
        dya = np.full_like(dxa, np.nan)
        for r, (dx, dy) in enumerate(zip(rows_dx, rows_dy)):
            dxa[r, :len(dx)] = dx
            dya[r, :len(dy)] = dy
        return _kernels.image_table(dxa, dya, self.E ** 2, jmax)

    def spatial_coeffs(self, k, jmax):
        z = complex(k) ** 2 / (4.0 * self.E ** 2)
        c = np.empty(jmax + 1, dtype=complex)
        c[0] = 1.0
        for j in range(1, jmax + 1):
            c[j] = c[j - 1] * z / j
        return c

    def spectral_sum(self, xs, ys, k, exclude=None):
        k2 = complex(k) ** 2
        pp, qq, kn2, nrm = self.modes(k)
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        a, b = self.a, self.b
        phx = (np.cos(np.outer(xs[:, 0] + a / 2, pp * math.pi / a))
               * np.cos(np.outer(xs[:, 1], qq * math.pi / b)) * nrm)
        phy = (np.cos(np.outer(ys[:, 0] + a / 2, pp * math.pi / a))
               * np.cos(np.outer(ys[:, 1], qq * math.pi / b)) * nrm)
        w = np.empty(len(kn2), dtype=complex)
        e4 = 4.0 * self.E ** 2
        for i, lam in enumerate(kn2):
            d = (k2 - lam) / e4
            if exclude is not None and (int(pp[i]), int(qq[i])) == tuple(exclude):
                # (e^d - 1)/(k_n^2 - k^2) = -expm1(d)/(4E^2 d), finite at d = 0
                w[i] = -1.0 / e4 if d == 0 else -np.expm1(d) / (e4 * d)
            else:
                w[i] = np.exp(d) / (lam - k2)
        return np.einsum("ij,ij,j->i", phx, phy, w)

    def green(self, x, y, k, exclude=None):
        jm = self.jmax(k)
        T = self.spatial_table([x], [y], jm)
        c = self.spatial_coeffs(k, jm)
        spatial = (c @ T)[0] / (4.0 * math.pi)
        return complex(self.spectral_sum([x], [y], k, exclude)[0] + spatial)

    def g_origin(self, k, p0, q0):
        """Regularised constant at the origin with mode ``(p0, q0)`` removed."""
        E = self.E
        jm = self.jmax(k)
        origin = np.zeros((1, 2))
        T = self.spatial_table(origin, origin, jm, drop_self=True)
        c = self.spatial_coeffs(k, jm)
        spatial = (c @ T)[0] / (4.0 * math.pi)
        spectral = self.spectral_sum(origin, origin, k, exclude=(p0, q0))[0]
        # the two coincident self-images: E_1(E^2 r^2)/(4 pi) + ln(r)/(2 pi) -> (-gamma - 2 ln E)/(4 pi)
        z = complex(k) ** 2 / (4.0 * E * E)
        series, term = 0.0 + 0.0j, 1.0 + 0.0j
        for j in range(1, jm + 1):
            term *= z / j
            series += term / j
        self_part = (-EULER_GAMMA - 2.0 * math.log(E) + series) / (2.0 * math.pi)
        return complex(spectral + spatial + self_part)


# ---------------------------------------------------------------------------
# Public entry points
# ---------------------------------------------------------------------------
def green_interior(x, y, k, a: float, b: float, scheme: str = "ewald") -> complex:
    """Neumann Green's function of the trap at complex frequency ``k``."""
    _check_in_trap(x, a, b)
    _check_in_trap(y, a, b)
    if math.hypot(x[0] - y[0], x[1] - y[1]) < 1e-13:
        raise CoincidentPoints("x and y coincide")
    _check_spectrum(k, a, b)
    if scheme == "ewald":
        return EwaldTrapGreen(a, b).green(x, y, k)
    if scheme == "modal":
        return _green_modal(x, y, k, a, b)
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class GInResult:
    value: float
    modal: complex
    ewald: complex

    @property
    def discrepancy(self) -> float:
        return abs(self.modal - self.ewald)


def g_in_both(k0: float, a: float, b: float, p0: int, q0: int) -> GInResult:
    modal = g_in_modal(k0, a, b, p0, q0)
    ewald = EwaldTrapGreen(a, b).g_origin(k0, p0, q0)
    return GInResult(value=float(modal.real), modal=modal, ewald=ewald)


def g_in_regularized(k0: float, spec: ResonatorSpec, scheme: str = "modal",
                     agree_tol: float = 1e-8) -> float:
    """Finite part of the trap Green's function at the origin.

    The resonant term ``psi(x)psi(0)/(k0^2 - k^2)`` and the logarithm
    ``-ln|x|/pi`` are removed before the limit.  ``scheme="both"`` also runs
    the Ewald route and raises ``NoConvergence`` if the two disagree.
    """
    if not check_simple_mode(spec.p, spec.q, spec.a, spec.b):
        raise ValueError("resonant mode is not simple")
    if scheme == "modal":
        return float(g_in_modal(k0, spec.a, spec.b, spec.p, spec.q).real)
    if scheme == "ewald":
        return float(EwaldTrapGreen(spec.a, spec.b).g_origin(k0, spec.p, spec.q).real)
    if scheme == "both":
        res = g_in_both(k0, spec.a, spec.b, spec.p, spec.q)
        if res.discrepancy > agree_tol:
            raise NoConvergence(f"g_in schemes disagree by {res.discrepancy:.3e}")
        return res.value
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class SpectralDataInterior:
    k0: float
    psi0: float
    g_in: float
    g_in_imag: float = 0.0
    scheme_gap: float = 0.0


def interior_data(spec: ResonatorSpec) -> SpectralDataInterior:
    mode = EigenMode(spec.p, spec.q, spec.a, spec.b)
    res = g_in_both(mode.k, spec.a, spec.b, spec.p, spec.q)
    if res.discrepancy > 1e-8:
        raise NoConvergence(f"g_in schemes disagree by {res.discrepancy:.3e}")
    return SpectralDataInterior(k0=mode.k, psi0=float(mode.values(0.0, 0.0)),
                                g_in=res.value, g_in_imag=float(res.modal.imag),
                                scheme_gap=res.discrepancy)


def gram_matrix(a: float, b: float, modes, nquad: int = 64) -> np.ndarray:
    """Gauss-Legendre Gram matrix of the given modes (orthonormality check)."""
    t, w = np.polynomial.legendre.leggauss(nquad)
    x1 = a / 2 * t
    x2 = b / 2 * (t + 1)
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    W = np.outer(w * a / 2, w * b / 2)
    vals = [m.values(X1, X2) for m in modes]
    n = len(vals)
    G = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            G[i, j] = np.sum(W * vals[i] * vals[j])
    return G


__all__ = [
    "EigenMode", "EwaldTrapGreen", "GInResult", "SpectralDataInterior",
    "g_in_both", "g_in_modal", "g_in_regularized", "gram_matrix", "green_interior",
    "interior_data", "interior_eigenfrequency", "mode_table", "psi_eval",
]
