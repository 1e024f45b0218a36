"""Heisenberg group primitives: group law, gauge, Cayley transform and the
fundamental solution of the shifted sub-Laplacian.

Points are plain coordinate triples (x, y, s); w = x + iy where complex
notation is convenient.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PoleError, SingularityError
from .numerics import gamma

__all__ = [
    "HPoint",
    "SpherePoint",
    "group_mul",
    "group_inv",
    "gauge",
    "distance",
    "cayley",
    "cayley_inv",
    "cayley_jacobian",
    "m_beta",
    "m_beta_constant",
]


@dataclass(frozen=True)
class HPoint:
    x: float
    y: float
    s: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.s)):
            raise DomainError("HPoint coordinates must be finite")

    @property
    def w(self):
        return complex(self.x, self.y)

    def as_tuple(self):
        return (self.x, self.y, self.s)


@dataclass(frozen=True)
class SpherePoint:
    """Point of the unit sphere in C^2, |zeta1|^2 + |zeta2|^2 = 1."""

    zeta1: complex
    zeta2: complex

    def __post_init__(self):
        r = abs(self.zeta1) ** 2 + abs(self.zeta2) ** 2
        if abs(r - 1.0) > 1e-12:
            raise DomainError("SpherePoint is off the unit sphere by %.3e" % abs(r - 1.0))


def group_mul(a, b):
    """(x,y,s) . (x',y',s') = (x+x', y+y', s+s'+2(x'y - x y'))."""
    return HPoint(a.x + b.x, a.y + b.y, a.s + b.s + 2.0 * (b.x * a.y - a.x * b.y))


def group_inv(a):
    return HPoint(-a.x, -a.y, -a.s)


def gauge(p):
    """Homogeneous norm rho = ((x^2+y^2)^2 + s^2)^(1/4)."""
    q = p.x * p.x + p.y * p.y
    return (q * q + p.s * p.s) ** 0.25


def distance(a, b):
    """Left-invariant distance d(a, b) = gauge(a^{-1} . b)."""
    return gauge(group_mul(group_inv(a), b))


def cayley(p):
    """Conformal map onto the unit sphere of C^2 minus (0, -1)."""
    w = p.w
    d = 1.0 + abs(w) ** 2 + 1j * p.s
    return SpherePoint(2.0 * w / d, (1.0 - abs(w) ** 2 - 1j * p.s) / d)


def cayley_inv(q):
    """Inverse Cayley map; the excluded point (0, -1) has no preimage."""
    d = 1.0 + q.zeta2
    if abs(d) < 1e-15:
        raise PoleError("(0, -1) is not in the image of the Cayley transform")
    w = q.zeta1 / d
    s = ((1.0 - q.zeta2) / d).imag
    return HPoint(w.real, w.imag, s)


def cayley_jacobian(p):
    """|J(p)| = 8 / ((1+|w|^2)^2 + s^2)^2."""
    t = (1.0 + abs(p.w) ** 2) ** 2 + p.s * p.s
    return 8.0 / (t * t)


def m_beta_constant(beta):
    """Prefactor -(1-beta)/(2 pi^2) * Gamma((1-beta)/2) * Gamma((1+beta)/2)."""
    if not -1.0 < beta < 1.0:
        raise DomainError("beta must lie in (-1, 1)")
    return -(1.0 - beta) / (2.0 * math.pi ** 2) * gamma((1.0 - beta) / 2.0) * gamma((1.0 + beta) / 2.0)


def m_beta(beta, p):
    """Fundamental solution of -(Delta_H + beta D_s)/(1 - beta).

    m_beta(x,y,s) = c_beta * (x^2+y^2-is)^(-(1-beta)/2) * (x^2+y^2+is)^(-(1+beta)/2).
    The arguments q -/+ is (q = x^2+y^2 >= 0) never meet the negative real
    axis, so the principal power is single-valued and continuous away from
    the origin.
    """
    q = p.x * p.x + p.y * p.y
    if q == 0.0 and p.s == 0.0:
        raise SingularityError("m_beta is singular at the origin")
    c = m_beta_constant(beta)
    zm = complex(q, -p.s)
    zp = complex(q, p.s)
    return c * zm ** (-(1.0 - beta) / 2.0) * zp ** (-(1.0 + beta) / 2.0)


def m_beta_grid(beta, q, s):
    """Vectorized m_beta on arrays of q = x^2+y^2 and s (quadrature helper)."""
    c = m_beta_constant(beta)
    zm = q - 1j * s
    zp = q + 1j * s
    return c * zm ** (-(1.0 - beta) / 2.0) * zp ** (-(1.0 + beta) / 2.0)
