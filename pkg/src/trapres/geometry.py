"""Resonator geometry: a rectangular trap over a straight channel opening into
a half-plane.

Coordinates: the trap occupies ``[-a/2, a/2] x [0, b]``, the channel is the
strip ``(eps*w_minus, eps*w_plus) x [-h, 0]`` and the exterior is the
half-plane ``x2 < -h``.  The origin sits at the upper aperture centre and
``x0 = (0, -h)`` at the lower one.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ApertureOutOfRange,
    BadEpsilon,
    DegenerateMode,
    NodalOpening,
    NotCritical,
    ValidationError,
)

EPS_MAX = 0.05
EPS_WARN = 0.02
CRITICAL_TOL = 1e-12
_SIMPLE_RTOL = 1e-12


@dataclass(frozen=True)
class ResonatorSpec:
    a: float
    b: float
    omega_minus: float
    omega_plus: float
    h: float
    p: int
    q: int
    m: int
    eps: float

    @property
    def omega_len(self) -> float:
        return self.omega_plus - self.omega_minus

    @property
    def x0(self) -> np.ndarray:
        return np.array([0.0, -self.h])

    @property
    def aperture(self) -> tuple[float, float]:
        """Channel cross-section ``(eps*w_-, eps*w_+)``."""
        return self.eps * self.omega_minus, self.eps * self.omega_plus

    def with_eps(self, eps: float) -> "ResonatorSpec":
        return ResonatorSpec(self.a, self.b, self.omega_minus, self.omega_plus,
                             self.h, self.p, self.q, self.m, eps)


@dataclass(frozen=True)
class ValidatedSpec:
    spec: ResonatorSpec
    k0: float
    psi0: float
    ordering_ratio: float
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def __getattr__(self, name):
        # delegate geometry fields (a, b, h, eps, ...) to the raw spec
        spec = self.__dict__.get("spec")
        if spec is None:
            raise AttributeError(name)
        return getattr(spec, name)


def rectangle_eigenfrequency(p: int, q: int, a: float, b: float) -> float:
    return math.pi * math.sqrt((p / a) ** 2 + (q / b) ** 2)


def critical_channel_length(k0: float, m: int) -> float:
    """Channel length ``h = m*pi/k0`` that puts the m-th channel resonance on k0."""
    if k0 <= 0:
        raise ValueError("k0 must be positive")
    if m < 1:
        raise ValueError("m must be a positive integer")
    return m * math.pi / k0


def check_simple_mode(p: int, q: int, a: float, b: float) -> bool:
    """True iff no other Neumann lattice mode ``(p', q')`` shares the eigenvalue.

    Exhaustive scan of every pair with eigenvalue not exceeding the target.
    """
    if p < 0 or q < 0:
        raise ValueError("mode indices must be nonnegative")
    if p == 0 and q == 0:
        return False
    target = (p / a) ** 2 + (q / b) ** 2
    pmax = int(math.floor(a * math.sqrt(target))) + 1
    qmax = int(math.floor(b * math.sqrt(target))) + 1
    for pp in range(pmax + 1):
        for qq in range(qmax + 1):
            if (pp, qq) == (p, q):
                continue
            lam = (pp / a) ** 2 + (qq / b) ** 2
            if abs(lam - target) <= _SIMPLE_RTOL * target:
                return False
    return True


def trap_mode_at_origin(p: int, q: int, a: float, b: float) -> float:
    """Value of the L2-normalised Neumann mode at the origin (before sign fixing)."""
    ep = 1.0 if p == 0 else 2.0
    eq = 1.0 if q == 0 else 2.0
    return math.sqrt(ep * eq / (a * b)) * math.cos(p * math.pi / 2)


def validate_spec(raw: ResonatorSpec, eps_max: float = EPS_MAX) -> ValidatedSpec:
    """Check every geometry invariant; raise with the full list on failure."""
    problems: list[tuple[str, str, type]] = []
    a, b, h, eps = raw.a, raw.b, raw.h, raw.eps
    if not (a > 0 and b > 0 and h > 0):
        problems.append(("Geometry", "a, b, h must be positive", ValidationError))
    if not raw.omega_minus < raw.omega_plus:
        problems.append(("Geometry", "need omega_minus < omega_plus", ValidationError))
    if raw.m < 1:
        problems.append(("Geometry", "channel index m must be >= 1", ValidationError))
    if not (0 < eps <= eps_max):
        problems.append(("BadEpsilon", f"eps={eps} outside (0, {eps_max}]", BadEpsilon))
    if problems and problems[0][2] is ValidationError:
        raise ValidationError([(n, t) for n, t, _ in problems])

    if a > 0 and 0 < eps:
        lo, hi = raw.aperture
        if not (-a / 2 < lo and hi < a / 2):
            problems.append(("ApertureOutOfRange",
                             f"aperture [{lo}, {hi}] not inside (-a/2, a/2)",
                             ApertureOutOfRange))

    k0 = float("nan")
    psi0 = float("nan")
    if raw.p == 0 and raw.q == 0:
        problems.append(("DegenerateMode", "(0, 0) has zero frequency", DegenerateMode))
    else:
        k0 = rectangle_eigenfrequency(raw.p, raw.q, a, b)
        if not check_simple_mode(raw.p, raw.q, a, b):
            problems.append(("DegenerateMode",
                             f"mode ({raw.p}, {raw.q}) is not simple", DegenerateMode))
        psi0 = trap_mode_at_origin(raw.p, raw.q, a, b)
        if abs(psi0) <= 1e-12:
            problems.append(("NodalOpening", "psi(0) vanishes", NodalOpening))
        if h > 0 and abs(k0 - raw.m * math.pi / h) > CRITICAL_TOL:
            problems.append(("NotCritical",
                             f"|k0 - m*pi/h| = {abs(k0 - raw.m * math.pi / h):.3e}",
                             NotCritical))

    if problems:
        cls = problems[0][2]
        raise cls([(n, t) for n, t, _ in problems])

    notes = []
    if eps > EPS_WARN:
        msg = f"eps={eps} above {EPS_WARN}: asymptotic ordering degrades"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    ratio = math.sqrt(eps) * abs(math.log(eps))
    return ValidatedSpec(spec=raw, k0=k0, psi0=abs(psi0), ordering_ratio=ratio,
                         warnings=tuple(notes))


def canonical_spec(eps: float = 0.01) -> ResonatorSpec:
    """2 x 1 trap, mode (2, 1), centred unit channel cross-section, m = 1."""
    k0 = rectangle_eigenfrequency(2, 1, 2.0, 1.0)
    return ResonatorSpec(a=2.0, b=1.0, omega_minus=-0.5, omega_plus=0.5,
                         h=critical_channel_length(k0, 1), p=2, q=1, m=1, eps=eps)


# ---------------------------------------------------------------------------
# Region membership
# ---------------------------------------------------------------------------
def star(x):
    """Reflection ``(x1, x2) -> (x1, -x2)``."""
    x = np.asarray(x, dtype=float)
    return x * np.array([1.0, -1.0])


def exterior_inner_coords(x, h):
    """``(x - x0)*`` with ``x0 = (0, -h)``; second component >= 0 iff x2 <= -h."""
    x = np.asarray(x, dtype=float)
    return star(x - np.array([0.0, -h]))


def in_trap(spec: ResonatorSpec, x) -> bool:
    x1, x2 = float(x[0]), float(x[1])
    return -spec.a / 2 <= x1 <= spec.a / 2 and 0.0 <= x2 <= spec.b


def in_channel(spec: ResonatorSpec, x) -> bool:
    lo, hi = spec.aperture
    x1, x2 = float(x[0]), float(x[1])
    return lo <= x1 <= hi and -spec.h <= x2 <= 0.0


def in_exterior(spec: ResonatorSpec, x) -> bool:
    return float(x[1]) <= -spec.h


def in_domain(spec: ResonatorSpec, x) -> bool:
    return in_trap(spec, x) or in_channel(spec, x) or in_exterior(spec, x)
