"""Half-plane exterior ``x2 < -h`` with a Neumann wall on ``x2 = -h``.

Outgoing Green's function ``(i/4)[H0(k|x-y|) + H0(k|x-y^r|)]`` with ``y^r``
the mirror image of ``y`` in the wall.  Everything the asymptotic formulas
need from this side reduces to closed forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import CoincidentPoints, OutOfDomain

EULER_GAMMA = 0.57721566490153286061
CONTINUATION_FRACTION = 0.5


def _h0(z):
    return special.hankel1(0, z)


def _mirror(y, h):
    return np.array([y[0], -2.0 * h - y[1]])


def green_halfplane(x, y, k, h: float, k_img_max: float | None = None) -> complex:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    tol = 1e-12
    if x[1] > -h + tol or y[1] > -h + tol:
        raise OutOfDomain("points must lie in the closed half-plane x2 <= -h")
    k = complex(k)
    if k_img_max is not None and k.imag < -k_img_max:
        raise ValueError(f"Im k = {k.imag} outside the continuation window")
    r1 = float(np.hypot(*(x - y)))
    if r1 < 1e-14:
        raise CoincidentPoints("x and y coincide")
    r2 = float(np.hypot(*(x - _mirror(y, h))))
    return complex(0.25j * (_h0(k * r1) + _h0(k * r2)))


def g_ex_value(k0: float) -> complex:
    """Finite part of ``G^ex(x, x0, k0) + ln|x - x0| / pi`` as ``x -> x0``."""
    if k0 <= 0:
        raise ValueError("k0 must be positive")
    return complex(0.5j - (math.log(k0 / 2.0) + EULER_GAMMA) / math.pi)


def g_ex_limit_gap(k0: float, h: float, r: float | None = None) -> float:
    """Distance between ``g_ex_value`` and the defining expression at radius ``r``."""
    r = 1e-4 / k0 if r is None else r
    x0 = np.array([0.0, -h])
    x = x0 + np.array([0.3 * r, -math.sqrt(1 - 0.09) * r])
    val = green_halfplane(x, x0, k0, h) + math.log(r) / math.pi
    return abs(val - g_ex_value(k0))


def sigma_value(k0: float) -> float:
    if k0 <= 0:
        raise ValueError("k0 must be positive")
    return 1.0 / (2.0 * k0)


def sigma_quadrature(k0: float, h: float, R: float | None = None, nodes: int = 64) -> float:
    """Integral of ``|G^ex(x, x0, k0)|^2`` over the half circle of radius R."""
    R = 1e4 / k0 if R is None else R
    t, w = np.polynomial.legendre.leggauss(nodes)
    theta = -math.pi / 2 * (t + 1.0)  # angles in (-pi, 0): the lower half circle
    x0 = np.array([0.0, -h])
    vals = np.empty(nodes)
    for i, th in enumerate(theta):
        x = x0 + R * np.array([math.cos(th), math.sin(th)])
        vals[i] = abs(green_halfplane(x, x0, k0, h)) ** 2
    return float(np.sum(w * vals) * (math.pi / 2) * R)


@dataclass(frozen=True)
class SourceTerm:
    """Point source ``amplitude * delta(x - y0)`` below the wall."""

    y0: tuple[float, float]
    amplitude: complex = 1.0

    def check(self, h: float) -> None:
        if not self.y0[1] < -h:
            raise OutOfDomain(f"source {self.y0} must lie strictly below x2 = -h")


def limit_exterior_solution(x, src: SourceTerm, k, h: float) -> complex:
    src.check(h)
    if src.amplitude == 0:
        return 0j
    return complex(src.amplitude) * green_halfplane(x, src.y0, k, h)


@dataclass(frozen=True)
class SpectralDataExterior:
    g_ex: complex
    sigma: float


def exterior_data(k0: float) -> SpectralDataExterior:
    return SpectralDataExterior(g_ex=g_ex_value(k0), sigma=sigma_value(k0))


def radiation_defect(k: float, h: float, direction: float, R: float, dr: float = 1e-3) -> tuple[float, float]:
    """``(|G| sqrt(R), |(d/dR - i k) G| sqrt(R))`` along a ray from ``x0``."""
    x0 = np.array([0.0, -h])
    e = np.array([math.cos(direction), math.sin(direction)])
    g = green_halfplane(x0 + R * e, x0, k, h)
    gp = green_halfplane(x0 + (R + dr) * e, x0, k, h)
    gm = green_halfplane(x0 + (R - dr) * e, x0, k, h)
    dg = (gp - gm) / (2 * dr)
    return abs(g) * math.sqrt(R), abs(dg - 1j * k * g) * math.sqrt(R)
