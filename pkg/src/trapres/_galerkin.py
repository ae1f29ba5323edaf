"""Galerkin integrals on an aperture mapped to ``s in [-1, 1]``.

Two basis families share one interface: ``T_n(s) / sqrt(1 - s^2)`` (edge
weighted) and plain ``T_n(s)``.  Both are closed under multiplication by
``s`` with the Chebyshev rule ``s f_n = (f_{n+1} + f_{|n-1|}) / 2``, which
turns ``|s - t|^{2j}`` factors into coefficient algebra.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import legendre as L
from scipy import special

_LOG_SERIES_TERMS = 20000


def _cheb_integrals(n_max: int) -> np.ndarray:
    """``int_{-1}^{1} T_n(s) ds`` for n = 0..n_max."""
    n = np.arange(n_max + 1)
    out = np.zeros(n_max + 1)
    even = n % 2 == 0
    out[even] = 2.0 / (1.0 - n[even] ** 2)
    return out


@lru_cache(maxsize=8)
def _plain_overlaps(size: int, kmax: int) -> np.ndarray:
    """``nu[a, k] = int T_a T_k ds`` for a < size, k <= kmax."""
    I = _cheb_integrals(size + kmax + 1)
    a = np.arange(size)[:, None]
    k = np.arange(kmax + 1)[None, :]
    return 0.5 * (I[a + k] + I[np.abs(a - k)])


def shift_matrix(size: int) -> np.ndarray:
    """Coefficient matrix of multiplication by s (truncated at ``size``)."""
    S = np.zeros((size, size))
    for n in range(size):
        if n + 1 < size:
            S[n + 1, n] += 0.5
        S[abs(n - 1), n] += 0.5
    return S


class ApertureBasis:
    """Basis ``f_n``, n < N, with the integrals the mode-matching system needs."""

    def __init__(self, n: int, weighted: bool = True):
        if n < 1:
            raise ValueError("basis size must be positive")
        self.n = n
        self.weighted = weighted

    # -- exact integrals ----------------------------------------------------
    def moments(self, size: int) -> np.ndarray:
        """``int f_a ds``."""
        if self.weighted:
            mu = np.zeros(size)
            mu[0] = math.pi
            return mu
        return _cheb_integrals(size - 1)

    def log_matrix(self, size: int) -> np.ndarray:
        """``int int f_a(s) f_b(t) ln|s - t| ds dt``."""
        if self.weighted:
            d = np.empty(size)
            d[0] = -math.pi ** 2 * math.log(2.0)
            d[1:] = -math.pi ** 2 / (2.0 * np.arange(1, size))
            return np.diag(d)
        # ln|s-t| = -ln 2 - sum_k (2/k) T_k(s) T_k(t)
        nu = _plain_overlaps(size, _LOG_SERIES_TERMS)
        k = np.arange(1, _LOG_SERIES_TERMS + 1)
        mu = nu[:, 0]
        return -math.log(2.0) * np.outer(mu, mu) - (nu[:, 1:] * (2.0 / k)) @ nu[:, 1:].T

    def ext_log_inner(self, size: int, z: np.ndarray) -> np.ndarray:
        """``int f_n(t) ln|z - t| dt`` for real ``|z| >= 1``; shape (size, len(z))."""
        z = np.asarray(z, dtype=float)
        zeta = z + np.sign(z) * np.sqrt(np.maximum(z * z - 1.0, 0.0))
        base = np.log(np.abs(zeta) / 2.0)
        if self.weighted:
            out = np.empty((size, z.size))
            out[0] = math.pi * base
            n = np.arange(1, size)[:, None]
            out[1:] = -(math.pi / n) * zeta[None, :] ** (-n.astype(float))
            return out
        kmax = _LOG_SERIES_TERMS
        nu = _plain_overlaps(size, kmax)
        k = np.arange(1, kmax + 1)
        # sum_k (2/k) zeta^{-k} nu[n,k]; zeta^{-k} via logs to avoid overflow
        zp = np.exp(-np.outer(k, np.log(np.abs(zeta)))) * np.sign(zeta)[None, :] ** k[:, None]
        series = (nu[:, 1:] * (2.0 / k)) @ zp
        return nu[:, :1] * base[None, :] - series

    # -- quadrature rules for smooth integrands -------------------------------
    def smooth_rule(self, m: int):
        """Nodes ``s_i`` and matrix ``B`` with ``int f_a g ds ~ sum_i B[a, i] g(s_i)``."""
        if self.weighted:
            theta = (np.arange(m) + 0.5) * math.pi / m
            s = np.cos(theta)
            B = (math.pi / m) * np.cos(np.outer(np.arange(self.n), theta))
            return s, B
        s, w = L.leggauss(m)
        B = C.chebvander(s, self.n - 1).T * w[None, :]
        return s, B

    def edge_rule(self, m: int, size: int | None = None):
        """Rule for integrands with ``sqrt(1 -+ s)`` behaviour at the ends.

        Substitutes ``s = cos(2 phi)`` and applies Gauss-Legendre in phi.
        """
        size = self.n if size is None else size
        x, w = L.leggauss(m)
        phi = (x + 1.0) * math.pi / 4.0
        wphi = w * math.pi / 4.0
        theta = 2.0 * phi
        s = np.cos(theta)
        B = 2.0 * wphi[None, :] * np.cos(np.outer(np.arange(size), theta))
        if not self.weighted:
            B = B * np.sin(theta)[None, :]
        return s, B

    def exp_projection(self, betas: np.ndarray) -> np.ndarray:
        """``int f_m(s) exp(i beta s) ds``; shape (n, len(betas))."""
        betas = np.asarray(betas, dtype=float)
        m = np.arange(self.n)[:, None]
        if self.weighted:
            return math.pi * (1j ** m) * special.jv(m, betas[None, :])
        nq = int(max(64, np.max(np.abs(betas), initial=0.0) + 64))
        s, w = L.leggauss(nq)
        V = C.chebvander(s, self.n - 1).T * w[None, :]
        return V @ np.exp(1j * np.outer(s, betas))

    def cos_projection(self, alphas: np.ndarray, shift: float | np.ndarray = None) -> np.ndarray:
        """``int f_m(s) cos(alpha s + shift) ds``; ``shift`` defaults to ``alpha``."""
        alphas = np.asarray(alphas, dtype=float)
        shift = alphas if shift is None else np.broadcast_to(shift, alphas.shape)
        return np.real(np.exp(1j * shift)[None, :] * self.exp_projection(alphas))


def power_log_tables(basis: ApertureBasis, jmax: int):
    """``I[j] = int int f_m f_n |s-t|^{2j} ln|s-t|`` and ``Q[j] = int int f_m f_n (s-t)^{2j}``."""
    n = basis.n
    size = n + 2 * jmax + 1
    S = shift_matrix(size)
    Lm = basis.log_matrix(size)
    mu = basis.moments(size)
    pows = [np.eye(size)]
    for _ in range(2 * jmax):
        pows.append(S @ pows[-1])
    I, Q = [], []
    for j in range(jmax + 1):
        Ij = np.zeros((n, n))
        Qj = np.zeros((n, n))
        for l in range(2 * j + 1):
            c = math.comb(2 * j, l) * (-1) ** (2 * j - l)
            A = pows[l][:, :n]
            Bm = pows[2 * j - l][:, :n]
            Ij += c * (A.T @ Lm @ Bm)
            Qj += c * np.outer(A.T @ mu, Bm.T @ mu)
        I.append(Ij)
        Q.append(Qj)
    return np.array(I), np.array(Q)


def hankel_series_coeffs(k: complex, jmax: int):
    """``(i/2) H0(k r) = sum_j r^{2j} (alpha_j ln r + beta_j)``."""
    k = complex(k)
    g = 0.57721566490153286061
    alpha = np.empty(jmax + 1, dtype=complex)
    beta = np.empty(jmax + 1, dtype=complex)
    lk = np.log(k / 2.0)
    harm = 0.0
    for j in range(jmax + 1):
        if j > 0:
            harm += 1.0 / j
        c = (-1) ** j * (k / 2.0) ** (2 * j) / math.factorial(j) ** 2
        alpha[j] = -c / math.pi
        beta[j] = c * (0.5j - (lk + g) / math.pi) - (-1) ** (j + 1) * harm * (k / 2.0) ** (2 * j) / (
            math.pi * math.factorial(j) ** 2)
    return alpha, beta


def channel_kummer_smooth(s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Smooth remainder of ``ln|2 sin(pi(s-t)/4)| + ln|2 cos(pi(s+t)/4)|``
    after removing ``ln|s-t| + ln|2-s-t| + ln|2+s+t|``."""
    d = s - t
    u = s + t
    # 2 sin(pi d/4)/d = (pi/2) sinc(d/4)
    part1 = np.log(0.5 * math.pi * np.sinc(d / 4.0))
    v = 2.0 - np.abs(u)  # distance to the nearer zero of cos(pi u/4)
    # 2 cos(pi u/4) = 2 sin(pi v/4) = (pi/2) v sinc(v/4); the far factor is 4 - v
    part2 = np.log(0.5 * math.pi * np.sinc(v / 4.0) / (4.0 - v))
    return part1 + part2
