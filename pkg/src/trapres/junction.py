"""Channel mouth: a semi-infinite strip ``(w_-, w_+) x (-inf, 0]`` opening
into the upper half-plane.

The Schwarz-Christoffel map from the upper half ``zeta``-plane,

    z(zeta) = C [sqrt(zeta - 1) sqrt(zeta + 1) - arccos(1/zeta)] + w_+,
    C = |w| / pi,

sends ``zeta = 1, -1`` to the two corners and ``zeta = 0`` down the strip.
The harmonic function with Neumann walls, linear growth down the strip and
logarithmic growth at infinity is ``X = C ln|zeta| + C ln C``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, OutOfDomain

FAR_RADIUS = 1e4


@dataclass(frozen=True)
class JunctionConstants:
    c_omega: float
    q_omega: float
    q_upper: float
    c_upper: float
    mu1: float


def junction_constants(omega_minus: float, omega_plus: float) -> JunctionConstants:
    w = omega_plus - omega_minus
    if not w > 0:
        raise ValueError("need omega_minus < omega_plus")
    c = w / math.pi
    return JunctionConstants(c_omega=c, q_omega=c * (math.log(2.0 * c) - 1.0),
                             q_upper=0.5 * (omega_plus + omega_minus), c_upper=0.0,
                             mu1=math.pi / w)


class JunctionFieldX:
    """Evaluator of X on the closed junction domain."""

    def __init__(self, omega_minus: float, omega_plus: float, tol: float = 1e-14):
        self.wm, self.wp = float(omega_minus), float(omega_plus)
        self.const = junction_constants(self.wm, self.wp)
        self.C = self.const.c_omega
        self.tol = tol
        self.deep = -40.0 * (self.wp - self.wm)

    # conformal map and derivative
    def z_of(self, zeta):
        zeta = complex(zeta)
        # interior side of the cuts on the real axis
        zeta = complex(zeta.real, max(zeta.imag, 1e-300))
        root = np.sqrt(zeta - 1) * np.sqrt(zeta + 1)
        return complex(self.C * (root - np.arccos(1.0 / zeta)) + self.wp)

    def dz_of(self, zeta):
        zeta = complex(zeta.real, max(complex(zeta).imag, 1e-300))
        return complex(self.C * np.sqrt(zeta - 1) * np.sqrt(zeta + 1) / zeta)

    def contains(self, xi, tol=1e-12) -> bool:
        x1, x2 = float(xi[0]), float(xi[1])
        return x2 >= -tol or (self.wm - tol <= x1 <= self.wp + tol)

    def _guesses(self, z):
        qu = self.const.q_upper
        C = self.C
        out = []
        if z.imag >= 0:
            out.append((z - qu) / C)
        expo = -1j * (z - self.wp) / C
        if expo.real < 50.0:
            out.append(2.0 * math.exp(-1.0) * np.exp(expo))
        out += [1.0 + 0.1j, -1.0 + 0.1j, 0.1j, 0.5 + 0.5j, -0.5 + 0.5j]
        return out

    def _newton(self, z, zeta):
        scale = 1.0 + abs(z)
        for _ in range(200):
            f = self.z_of(zeta) - z
            if abs(f) <= self.tol * scale:
                return zeta, abs(f)
            d = self.dz_of(zeta)
            if d == 0:
                zeta += 1e-6j
                continue
            step = f / d
            lam = 1.0
            while lam > 1e-6:
                cand = zeta - lam * step
                cand = complex(cand.real, max(cand.imag, 0.0))
                if cand != 0 and abs(self.z_of(cand) - z) < abs(f):
                    break
                lam /= 2.0
            zeta = cand
        return zeta, abs(self.z_of(zeta) - z)

    def inverse(self, xi) -> complex:
        z = complex(float(xi[0]), float(xi[1]))
        best, best_res = None, math.inf
        for g in self._guesses(z):
            zeta, res = self._newton(z, complex(g))
            if res < best_res:
                best, best_res = zeta, res
            if res <= self.tol * (1.0 + abs(z)):
                return zeta
        if best_res <= 1e-10 * (1.0 + abs(z)):
            return best
        raise NoConvergence(f"inverse map failed at {xi} (residual {best_res:.2e})")

    def __call__(self, xi) -> float:
        x1, x2 = float(xi[0]), float(xi[1])
        if not self.contains((x1, x2)):
            raise OutOfDomain(f"{xi} is outside the junction domain")
        C = self.C
        if x2 < self.deep:
            # exponential corrections below e^{-40 pi}
            return x2 + self.const.q_omega
        d = complex(x1 - self.const.q_upper, x2)
        if abs(d) > FAR_RADIUS:
            return C * math.log(abs(d)) - C * (C * C / (2.0 * d * d)).real
        zeta = self.inverse((x1, x2))
        return C * math.log(abs(zeta)) + C * math.log(C)

    def grid(self, x1s, x2s):
        """Rows ``(x1, x2, X)`` over a tensor grid, skipping points outside."""
        rows = []
        for a in x1s:
            for b in x2s:
                if self.contains((a, b)):
                    rows.append((float(a), float(b), self((a, b))))
        return rows


def eval_X(xi, omega_minus: float = -0.5, omega_plus: float = 0.5) -> float:
    return JunctionFieldX(omega_minus, omega_plus)(xi)


@dataclass(frozen=True)
class TailFit:
    c_omega: float
    q_omega: float
    c_err: float
    q_err: float


def fit_tail_constants(X: JunctionFieldX) -> TailFit:
    """Recover ``c_omega`` and ``q_omega`` from samples of X alone."""
    w = X.wp - X.wm
    qu = X.const.q_upper
    depths = -w * np.array([4.0, 5.0, 6.0, 7.0])
    q_est = float(np.mean([X((qu, d)) - d for d in depths]))
    radii = np.array([2e2, 5e2, 1e3, 2e3]) * w
    angles = (0.3, 1.2, 2.5)
    c_vals = []
    for th in angles:
        vals = np.array([X((qu + r * math.cos(th), r * math.sin(th))) for r in radii])
        slope = np.polyfit(np.log(radii), vals, 1)[0]
        c_vals.append(slope)
    c_est = float(np.mean(c_vals))
    return TailFit(c_omega=c_est, q_omega=q_est,
                   c_err=abs(c_est - X.const.c_omega), q_err=abs(q_est - X.const.q_omega))
