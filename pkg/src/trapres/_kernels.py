"""Hot inner loops: long modal sums and image-lattice tables.

Each kernel has a numba version (explicit loops) and a vectorised numpy
version.  Set ``TRAPRES_NO_NUMBA=1`` before import to force the numpy path;
``benchmarks/bench_kernels.py`` times both.
"""
from __future__ import annotations

import math
import os

import numpy as np
from scipy import special

_DISABLE = os.environ.get("TRAPRES_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:  # pragma: no cover - exercised implicitly
    if _DISABLE:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

BACKEND = "numba" if HAVE_NUMBA else "numpy"

EULER_GAMMA = 0.57721566490153286061


# ---------------------------------------------------------------------------
# Strip Green's function pieces
# ---------------------------------------------------------------------------
# For the p-th cosine mode across the trap width the transverse problem on
# [0, b] has Green's function
#   g_p(x2, y2) = [e^{-sD} + e^{-sS} + e^{-s(2b-S)} + e^{-s(2b-D)}] / (2 s (1 - e^{-2sb}))
# with s = sqrt(beta_p^2 - k^2) (principal root), D = |x2 - y2|, S = x2 + y2.


def _cot_minus_inv(d):
    """cot(d) - 1/d, accurate near d = 0."""
    if abs(d) < 0.1:
        d2 = d * d
        return -d * (1.0 / 3.0 + d2 * (1.0 / 45.0 + d2 * (2.0 / 945.0 + d2 / 4725.0)))
    return 1.0 / np.tan(d) - 1.0 / d


def resonant_free_line_gp(k, beta, b, q0):
    """g_p(0, 0) with the ``q0`` pole term ``eps_q/b / ((q0 pi/b)^2 - kappa^2)`` removed."""
    kappa = np.sqrt(complex(k * k - beta * beta))
    if kappa.real < 0:
        kappa = -kappa
    z = kappa * b
    z0 = q0 * math.pi
    if q0 == 0:
        return -b * _cot_minus_inv(z) / z
    return -b * _cot_minus_inv(z - z0) / z + b / (z * (z + z0))


@njit(cache=True)
def _line_remainder_numba(k, a, b, p_start, p_stop, p_step, skip_p):
    kk = k * k
    total = 0.0 + 0.0j
    for p in range(p_start, p_stop, p_step):
        if p == skip_p:
            continue
        beta = p * math.pi / a
        s = np.sqrt(beta * beta - kk + 0.0j)
        if s.real < 0:
            s = -s
        e = np.exp(-2.0 * s * b)
        gp = (1.0 + e) / (s * (1.0 - e))
        base = a / (p * math.pi)
        total += gp - base - base * (k * a / (p * math.pi)) ** 2 / 2.0
    # summed from the tail towards the head would be marginally better; the
    # terms decay like p^-5 so forward order loses nothing measurable
    return total


def _line_remainder_numpy(k, a, b, p_start, p_stop, p_step, skip_p):
    p = np.arange(p_start, p_stop, p_step, dtype=float)
    if skip_p >= 0:
        p = p[p != skip_p]
    beta = p * math.pi / a
    s = np.sqrt(beta * beta - k * k + 0.0j)
    s = np.where(s.real < 0, -s, s)
    e = np.exp(-2.0 * s * b)
    gp = (1.0 + e) / (s * (1.0 - e))
    base = a / (p * math.pi)
    terms = gp - base - base * (k * a / (p * math.pi)) ** 2 / 2.0
    return complex(np.sum(terms))


def line_remainder(k, a, b, p_start, p_stop, p_step=1, skip_p=-1):
    """Sum of ``g_p(0,0) - a/(p pi) - a^3 k^2 / (2 p^3 pi^3)`` over a p-range."""
    k = complex(k)
    if HAVE_NUMBA:
        return complex(_line_remainder_numba(k, float(a), float(b), int(p_start),
                                             int(p_stop), int(p_step), int(skip_p)))
    return _line_remainder_numpy(k, a, b, p_start, p_stop, p_step, skip_p)


@njit(cache=True)
def _strip_remainder_numba(x1, x2, y1, y2, k, a, b, pmax):
    kk = k * k
    lo = min(x2, y2)
    hi = max(x2, y2)
    dd = hi - lo
    ss = hi + lo
    total = 0.0 + 0.0j
    for p in range(1, pmax + 1):
        beta = p * math.pi / a
        s = np.sqrt(beta * beta - kk + 0.0j)
        if s.real < 0:
            s = -s
        num = (np.exp(-s * dd) + np.exp(-s * ss) + np.exp(-s * (2 * b - ss))
               + np.exp(-s * (2 * b - dd)))
        gp = num / (2.0 * s * (1.0 - np.exp(-2.0 * s * b)))
        asym = (math.exp(-beta * dd) + math.exp(-beta * ss) + math.exp(-beta * (2 * b - ss))
                + math.exp(-beta * (2 * b - dd))) / (2.0 * beta)
        cx = math.cos(beta * (x1 + a / 2))
        cy = math.cos(beta * (y1 + a / 2))
        total += (2.0 / a) * cx * cy * (gp - asym)
    return total


def _strip_remainder_numpy(x1, x2, y1, y2, k, a, b, pmax):
    p = np.arange(1, pmax + 1, dtype=float)
    lo, hi = min(x2, y2), max(x2, y2)
    dd, ss = hi - lo, hi + lo
    beta = p * math.pi / a
    s = np.sqrt(beta * beta - k * k + 0.0j)
    s = np.where(s.real < 0, -s, s)
    num = (np.exp(-s * dd) + np.exp(-s * ss) + np.exp(-s * (2 * b - ss))
           + np.exp(-s * (2 * b - dd)))
    gp = num / (2.0 * s * (1.0 - np.exp(-2.0 * s * b)))
    asym = (np.exp(-beta * dd) + np.exp(-beta * ss) + np.exp(-beta * (2 * b - ss))
            + np.exp(-beta * (2 * b - dd))) / (2.0 * beta)
    c = np.cos(beta * (x1 + a / 2)) * np.cos(beta * (y1 + a / 2))
    return complex(np.sum((2.0 / a) * c * (gp - asym)))


def strip_remainder(x, y, k, a, b, pmax):
    """Kummer-accelerated remainder of the trap modal sum at a point pair."""
    args = (float(x[0]), float(x[1]), float(y[0]), float(y[1]), complex(k),
            float(a), float(b), int(pmax))
    if HAVE_NUMBA:
        return complex(_strip_remainder_numba(*args))
    return _strip_remainder_numpy(*args)


# ---------------------------------------------------------------------------
# Exponential integrals E_n(x), x >= 0 real, for the Ewald image sums
# ---------------------------------------------------------------------------
@njit(cache=True)
def _expn_scalar(n, x):
    # continued fraction for x > 1, power series otherwise
    if x == 0.0:
        return 1.0 / (n - 1) if n > 1 else math.inf
    if x > 1.0:
        b = x + n
        c = 1e300
        d = 1.0 / b
        h = d
        for i in range(1, 500):
            an = -i * (n - 1 + i)
            b += 2.0
            d = 1.0 / (an * d + b)
            c = b + an / c
            de = c * d
            h *= de
            if abs(de - 1.0) < 1e-16:
                break
        return h * math.exp(-x)
    nm1 = n - 1
    if nm1 != 0:
        ans = 1.0 / nm1
    else:
        ans = -math.log(x) - EULER_GAMMA
    fact = 1.0
    for i in range(1, 500):
        fact *= -x / i
        if i != nm1:
            de = -fact / (i - nm1)
        else:
            psi = -EULER_GAMMA
            for ii in range(1, nm1 + 1):
                psi += 1.0 / ii
            de = fact * (-math.log(x) + psi)
        ans += de
        if abs(de) < abs(ans) * 1e-17:
            break
    return ans


@njit(cache=True)
def _image_table_numba(dx, dy, e2, jmax, out):
    # out[j, i] += E_{j+1}(e2 * (dx[i, l]^2 + dy[i, l]^2)) summed over images l
    n, nimg = dx.shape
    for i in range(n):
        for l in range(nimg):
            r2 = dx[i, l] * dx[i, l] + dy[i, l] * dy[i, l]
            if not r2 >= 0:  # NaN padding
                continue
            xx = e2 * r2
            for j in range(jmax + 1):
                out[j, i] += _expn_scalar(j + 1, xx)
    return out


def _image_table_numpy(dx, dy, e2, jmax, out):
    r2 = dx * dx + dy * dy
    with np.errstate(invalid="ignore"):
        valid = r2 >= 0
    xx = np.where(valid, e2 * np.where(valid, r2, 1.0), 1.0)
    for j in range(jmax + 1):
        vals = special.expn(j + 1, xx)
        out[j] += np.sum(np.where(valid, vals, 0.0), axis=1)
    return out


def image_table(dx, dy, e2, jmax):
    """Sum of ``E_{j+1}(E^2 r^2)`` over image offsets, for ``j = 0..jmax``.

    ``dx``/``dy`` have shape (points, images); NaN entries are padding.
    """
    dx = np.ascontiguousarray(dx, dtype=float)
    dy = np.ascontiguousarray(dy, dtype=float)
    out = np.zeros((jmax + 1, dx.shape[0]))
    if HAVE_NUMBA:
        return _image_table_numba(dx, dy, float(e2), int(jmax), out)
    return _image_table_numpy(dx, dy, e2, jmax, out)


def expn(n, x):
    """E_n(x) for scalar x >= 0 using the active backend."""
    if HAVE_NUMBA:
        return float(_expn_scalar(int(n), float(x)))
    return float(special.expn(n, x))
