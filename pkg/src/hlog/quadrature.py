"""Radial and angular quadrature rules used by the convolution engines.

Radial integrals are taken in the measure ``dr/r``: with ``t = -log r`` this is
``dt``, and the t-axis is cut into equal panels, each carrying a fixed
Gauss-Legendre rule.  Angular integrals use product rules on the sphere built
recursively from Gauss-Gegenbauer nodes in the last coordinate and the
trapezoid rule on the circle.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .errors import ParameterError

GAUSS_PER_PANEL = 8
LN10 = math.log(10.0)


@dataclass(frozen=True)
class QuadConfig:
    radial_nodes_per_decade: int = 16
    angular_order: int = 26
    r_floor: float = 1e-14

    def __post_init__(self):
        if self.radial_nodes_per_decade < GAUSS_PER_PANEL:
            raise ParameterError(f"need at least {GAUSS_PER_PANEL} radial nodes per decade")
        if self.angular_order < 1:
            raise ParameterError("angular order must be >= 1")
        if not 0 < self.r_floor < 1:
            raise ParameterError("r_floor must lie in (0, 1)")

    def refined(self, level: int, n: int = 3) -> "QuadConfig":
        """Double radial and angular node counts ``level`` times.

        On the sphere S^(n-1) the node count grows like order^(n-1), so the
        angular order is scaled by ``2^(level/(n-1))``.
        """
        if level < 0:
            raise ParameterError("refinement level must be >= 0")
        if level == 0:
            return self
        order = int(math.ceil(self.angular_order * 2.0 ** (level / max(n - 1, 1))))
        return QuadConfig(self.radial_nodes_per_decade * 2**level, order, self.r_floor)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"radial_nodes_per_decade", "angular_order", "r_floor"}
        if unknown:
            raise ParameterError(f"unknown quadrature keys: {sorted(unknown)}")
        return cls(**d)


@lru_cache(maxsize=None)
def _gauss_unit(m):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def radial_rule(r_lo: float, r_hi: float, nodes_per_decade: int = 16):
    """Nodes ``r`` and weights ``w`` with ``sum w F(r) ~ int_{r_lo}^{r_hi} F(r) dr/r``."""
    if not 0 < r_lo < r_hi:
        raise ParameterError("radial rule needs 0 < r_lo < r_hi")
    span = math.log(r_hi / r_lo)
    panels_per_decade = nodes_per_decade / GAUSS_PER_PANEL
    panels = max(1, int(math.ceil(span / LN10 * panels_per_decade - 1e-9)))
    h = span / panels
    x, w = _gauss_unit(GAUSS_PER_PANEL)
    t0 = -math.log(r_hi)
    t = (t0 + h * (np.arange(panels)[:, None] + x[None, :])).ravel()
    return np.exp(-t), np.tile(w * h, panels)


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


@lru_cache(maxsize=None)
def sphere_rule(n: int, order: int):
    """Product rule on the unit sphere of R^n, exact for polynomials of degree <= order.

    Returns ``(directions, weights)`` with shapes ``(m, n)`` and ``(m,)``.  The
    arrays are cached; callers must not modify them.
    """
    if n < 2:
        raise ParameterError("sphere rules need n >= 2")
    if order < 1:
        raise ParameterError("order must be >= 1")
    if n == 2:
        m = order + 1
        phi = 2.0 * math.pi * (np.arange(m) + 0.5) / m
        d = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        w = np.full(m, 2.0 * math.pi / m)
    else:
        a = (n - 3) / 2.0
        k = order // 2 + 1
        t, wt = roots_jacobi(k, a, a)
        sub_d, sub_w = sphere_rule(n - 1, order)
        c = np.sqrt(1.0 - t * t)
        d = np.concatenate(
            [np.column_stack([c[i] * sub_d, np.full(len(sub_d), t[i])]) for i in range(k)]
        )
        w = np.concatenate([wt[i] * sub_w for i in range(k)])
    d.setflags(write=False)
    w.setflags(write=False)
    return d, w


def sphere_integral(fn, n: int, order: int = 40) -> float:
    """Integral of ``fn`` over the unit sphere of R^n."""
    d, w = sphere_rule(n, order)
    return float(np.dot(w, fn(d)))

