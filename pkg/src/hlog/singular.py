"""Homogeneous singular kernels and principal-value convolution.

A kernel is ``K(x) = sigma(x/|x|) / |x|^n`` with a mean-zero symbol sigma.
Convolutions use the regularised form

    (K * phi)(x) = int (phi(y) - phi(x)) K(x - y) dy

in polar coordinates about x: Gauss panels in ``t = -log r`` (with extra
cuts across the support scale) times a product rule on the sphere.  Because the angular rule integrates sigma exactly, the
shells beyond the support of phi contribute nothing and the radial range
stops at ``|x| + R``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import AccuracyWarning, DomainError, InvalidKernelError, ParameterError, PreconditionError
from .fields import ScalarField
from .moduli import fixed_directions
from .quadrature import QuadConfig, radial_rule, sphere_area, sphere_rule

NORM_ORDER = 60
FD_STEP = 1e-6


@dataclass(frozen=True, eq=False)
class SingularKernel:
    dimension: int
    sigma: Callable[[np.ndarray], np.ndarray]
    name: str = "kernel"
    sigma_gradient: Callable[[np.ndarray], np.ndarray] | None = None
    parameters: dict = field(default_factory=dict)

    def symbol(self, d):
        """sigma at arbitrary nonzero vectors (normalised first)."""
        d = np.asarray(d, float)
        return self.sigma(d / np.linalg.norm(d, axis=-1, keepdims=True))

    def tangent_gradient(self, d):
        """Gradient of the degree-0 extension of sigma at unit vectors ``d``."""
        d = np.asarray(d, float)
        if self.sigma_gradient is not None:
            return self.sigma_gradient(d)
        n = self.dimension
        g = np.empty(d.shape)
        for i in range(n):
            e = FD_STEP * np.eye(n)[i]
            g[..., i] = (self.symbol(d + e) - self.symbol(d - e)) / (2 * FD_STEP)
        return g

    def __call__(self, x):
        x = np.asarray(x, float)
        s = np.linalg.norm(x, axis=-1)
        return self.sigma(x / s[..., None]) / s**self.dimension

    def gradient(self, x):
        """``d_i K = (grad sigma(x_hat)_i - n sigma(x_hat) x_hat_i) / |x|^(n+1)``."""
        x = np.asarray(x, float)
        s = np.linalg.norm(x, axis=-1)
        xh = x / s[..., None]
        n = self.dimension
        g = self.tangent_gradient(xh) - n * self.sigma(xh)[..., None] * xh
        return g / (s ** (n + 1))[..., None]

    @cached_property
    def norms(self) -> dict:
        """Sup norms of sigma and its tangential gradient over a dense sphere sample."""
        d = np.concatenate([sphere_rule(self.dimension, NORM_ORDER)[0], fixed_directions(self.dimension, 4000)])
        s = float(np.max(np.abs(self.sigma(d))))
        g = float(np.max(np.linalg.norm(self.tangent_gradient(d), axis=-1)))
        return {"sigma": s, "grad_sigma": g, "triple": s + g}

    @property
    def triple_norm(self):
        return self.norms["triple"]

    def scaled(self, c: float) -> "SingularKernel":
        grad = None
        if self.sigma_gradient is not None:
            grad = lambda d: c * self.sigma_gradient(d)  # noqa: E731
        return SingularKernel(
            self.dimension, lambda d: c * self.sigma(d), f"{c:g}*{self.name}", grad, {"c": c, "base": self.name}
        )

    def to_record(self):
        return {"name": self.name, "dimension": self.dimension, "parameters": dict(self.parameters)}


# ---------------------------------------------------------------------------
# registry


def _eye_grad(fn):
    """Tangential part of an ambient gradient ``fn(d)``."""

    def grad(d):
        g = fn(d)
        return g - np.sum(g * d, axis=-1, keepdims=True) * d

    return grad


def _d1d2(n):
    def sig(d):
        return d[..., 0] * d[..., 1]

    def amb(d):
        g = np.zeros(d.shape)
        g[..., 0], g[..., 1] = d[..., 1], d[..., 0]
        return g

    return SingularKernel(n, sig, f"d1d2-{n}d", _eye_grad(amb))


def _one_minus(n):
    def sig(d):
        return 1.0 - n * d[..., 0] ** 2

    def amb(d):
        g = np.zeros(d.shape)
        g[..., 0] = -2.0 * n * d[..., 0]
        return g

    return SingularKernel(n, sig, f"one-minus-{n}d1sq-{n}d", _eye_grad(amb))


def laplace_kernel(i: int, j: int, n: int = 3) -> SingularKernel:
    """Symbol ``(delta_ij - n d_i d_j) / |S^(n-1)|`` of ``d_i d_j`` of the Newtonian kernel."""
    area = sphere_area(n)
    dij = 1.0 if i == j else 0.0

    def sig(d):
        return (dij - n * d[..., i] * d[..., j]) / area

    def amb(d):
        g = np.zeros(d.shape)
        g[..., i] -= n * d[..., j] / area
        g[..., j] -= n * d[..., i] / area
        return g

    return SingularKernel(n, sig, f"laplace-{i + 1}{j + 1}-{n}d", _eye_grad(amb), {"i": i, "j": j, "n": n})


def _const(n, c):
    return SingularKernel(n, lambda d: np.full(d.shape[:-1], float(c)), f"const-{c:g}-{n}d",
                          lambda d: np.zeros(d.shape))


_KERNELS = {
    "d1d2-3d": lambda: _d1d2(3),
    "d1d2-2d": lambda: _d1d2(2),
    "one-minus-3d1sq-3d": lambda: _one_minus(3),
    "one-minus-2d1sq-2d": lambda: _one_minus(2),
    "laplace-11-3d": lambda: laplace_kernel(0, 0, 3),
    "laplace-12-3d": lambda: laplace_kernel(0, 1, 3),
    "zero-3d": lambda: _const(3, 0.0),
    "zero-2d": lambda: _const(2, 0.0),
    "const-1-3d": lambda: _const(3, 1.0),
}


def kernel_names():
    return sorted(_KERNELS)


def get_kernel(name: str) -> SingularKernel:
    try:
        k = _KERNELS[name]()
    except KeyError:
        raise KeyError(f"unknown kernel {name!r}") from None
    return SingularKernel(k.dimension, k.sigma, name, k.sigma_gradient, dict(k.parameters, registry=name))


# ---------------------------------------------------------------------------
# validation


@dataclass
class KernelValidation:
    name: str
    sphere_mean: float
    annuli: list
    annulus_integrals: list
    tol: float
    annuli_ok: bool
    norms: dict

    def to_dict(self):
        return {
            "name": self.name,
            "sphere_mean": self.sphere_mean,
            "annuli": [list(a) for a in self.annuli],
            "annulus_integrals": self.annulus_integrals,
            "tol": self.tol,
            "annuli_ok": self.annuli_ok,
            "norms": self.norms,
        }


DEFAULT_ANNULI = ((0.1, 0.2), (1e-3, 0.5), (1e-9, 1e-6))


def annulus_integral(k: SingularKernel, r1: float, r2: float, quad: QuadConfig | None = None) -> float:
    """``int_{r1 < |x| < r2} K(x) dx`` by the polar tensor rule."""
    quad = quad or QuadConfig(angular_order=NORM_ORDER)
    r, wr = radial_rule(r1, r2, quad.radial_nodes_per_decade)
    d, dw = sphere_rule(k.dimension, quad.angular_order)
    pts = r[:, None, None] * d[None, :, :]
    # |x|^n dr/r dS cancels the |x|^-n of the kernel; summed in a fixed order
    vals = k(pts) * r[:, None] ** k.dimension
    return float(wr @ (vals @ dw))


def validate_kernel(k: SingularKernel, tol: float = 1e-8, annuli=DEFAULT_ANNULI, order: int = NORM_ORDER):
    d, w = sphere_rule(k.dimension, order)
    mean = float(np.dot(w, k.sigma(d)))
    if abs(mean) > tol:
        raise InvalidKernelError(f"kernel {k.name!r} has sphere mean {mean:.3e}", mean)
    quad = QuadConfig(angular_order=order)
    ints = [annulus_integral(k, a, b, quad) for a, b in annuli]
    return KernelValidation(
        name=k.name,
        sphere_mean=mean,
        annuli=[tuple(a) for a in annuli],
        annulus_integrals=ints,
        tol=tol,
        annuli_ok=bool(all(abs(v) <= tol for v in ints)),
        norms=dict(k.norms),
    )


# ---------------------------------------------------------------------------
# closed forms


def radial_log_integral(alpha: float, r1: float, r2: float) -> float:
    """``int_{r1}^{r2} (-log r)^-alpha dr / r``."""
    if not (0 < r1 < 1 and 0 < r2 < 1):
        raise ParameterError("bounds must lie in (0, 1)")
    if r2 < r1:
        raise ParameterError("need r1 <= r2")
    if r1 == r2:
        return 0.0
    l1, l2 = -math.log(r1), -math.log(r2)
    if alpha == 1:
        return math.log(l1) - math.log(l2)
    return (l2 ** (1 - alpha) - l1 ** (1 - alpha)) / (alpha - 1)


def radial_quadrature(fn, r1, r2, nodes_per_decade=16):
    """``int_{r1}^{r2} fn(r) dr / r`` with the engine's radial rule."""
    r, w = radial_rule(r1, r2, nodes_per_decade)
    return float(np.dot(w, fn(r)))


# ---------------------------------------------------------------------------
# principal-value convolution


def _radial_nodes(r_lo, r_hi, breaks, npd):
    """Radial rule on ``[r_lo, r_hi]`` split at ``breaks``.

    The range is also cut at ``npd // 2`` equally spaced radii so that the
    support scale of the integrand gets as many panels as the decades near 0.
    """
    m = max(1, npd // 2)
    breaks = list(breaks) + [r_hi * k / m for k in range(1, m)]
    edges = [r_lo]
    for b in sorted(breaks):
        if edges[-1] * (1 + 1e-9) < b < r_hi * (1 - 1e-9):
            edges.append(b)
    edges.append(r_hi)
    parts = [radial_rule(a, b, npd) for a, b in zip(edges[:-1], edges[1:])]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _support(phi: ScalarField, R):
    R = phi.support_radius if R is None else R
    if R is None:
        raise PreconditionError(f"field {phi.label!r} has no declared support radius")
    return float(R)


def _breaks(phi, x, R):
    s = float(np.linalg.norm(x))
    out = [s + R, abs(R - s)]
    out += [float(np.linalg.norm(x - np.asarray(p))) for p in phi.singular_points]
    return out


def pv_convolve_many(kernels, phi: ScalarField, points, quad: QuadConfig | None = None, R=None,
                     precision: float = 1e-8):
    """``PV(K * phi)`` for several kernels at several points; shape ``(len(kernels), m)``."""
    quad = quad or QuadConfig()
    if quad.r_floor > precision:
        warnings.warn(
            f"radial floor {quad.r_floor:g} exceeds requested precision {precision:g}", AccuracyWarning, stacklevel=2
        )
    R = _support(phi, R)
    n = phi.dimension
    for k in kernels:
        if k.dimension != n:
            raise DomainError("kernel and field dimensions differ")
    pts = np.atleast_2d(np.asarray(points, float))
    if np.any(np.linalg.norm(pts, axis=1) > R * (1 + 1e-12)):
        raise DomainError(f"evaluation point outside the ball |x| <= {R:g}")
    d, dw = sphere_rule(n, quad.angular_order)
    # K(x - y) with y = x + r d sees the direction -d
    sw = np.stack([dw * k.sigma(-d) for k in kernels], axis=1)
    out = np.zeros((len(kernels), len(pts)))
    for m, x in enumerate(pts):
        r_hi = float(np.linalg.norm(x)) + R
        r, wr = _radial_nodes(quad.r_floor, r_hi, _breaks(phi, x, R), quad.radial_nodes_per_decade)
        y = x + r[:, None, None] * d[None, :, :]
        diff = phi(y) - float(phi(x))
        out[:, m] = wr @ (diff @ sw)
    return out


def pv_convolve(k: SingularKernel, phi: ScalarField, x, quad: QuadConfig | None = None, R=None,
                precision: float = 1e-8):
    x = np.asarray(x, float)
    v = pv_convolve_many([k], phi, x, quad, R, precision)[0]
    return float(v[0]) if x.ndim == 1 else v


def pv_tail_bound(k: SingularKernel, phi_seminorm: float, alpha: float, r_floor: float) -> float:
    """Bound on the part of the PV integral over ``r < r_floor`` for an H-log phi (alpha > 1)."""
    if not alpha > 1:
        return math.inf
    n = k.dimension
    return k.norms["sigma"] * sphere_area(n) * phi_seminorm * (-math.log(r_floor)) ** (1 - alpha) / (alpha - 1)


# ---------------------------------------------------------------------------
# decay test


def dezer_lhs(alpha: float, delta: float, nodes_per_decade: int = 64) -> float:
    """``delta int_{2 delta}^{1/2} (-log(3r/2))^-alpha r^-2 dr``."""
    return radial_quadrature(lambda r: delta * (-np.log(1.5 * r)) ** -alpha / r, 2 * delta, 0.5, nodes_per_decade)


def dezer_ratio(alpha, delta):
    return dezer_lhs(alpha, delta) * (-math.log(delta)) ** alpha


@dataclass
class DezerReport:
    alpha: float
    rows: list
    delta0: float
    limit: float
    holds_below_delta0: bool
    ratio_trend: str
    approaches_limit: bool

    def to_dict(self):
        return self.__dict__.copy()


def dezer_check(alpha: float, deltas) -> DezerReport:
    """Tabulate ``lhs / (-log delta)^-alpha`` and locate where it crosses 1."""
    if not alpha > 1:
        raise ParameterError("the decay test needs alpha > 1")
    deltas = sorted((float(x) for x in np.atleast_1d(deltas)), reverse=True)
    if not deltas:
        raise ParameterError("empty delta ladder")
    if any(not 0 < x < 1 / 9 for x in deltas):
        raise ParameterError("delta ladder must lie in (0, 1/9)")
    rows = []
    for dl in deltas:
        lhs = dezer_lhs(alpha, dl)
        rhs = (-math.log(dl)) ** -alpha
        rows.append({"delta": dl, "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs, "holds": bool(lhs <= rhs)})
    delta0 = dezer_delta0(alpha)
    ratios = [row["ratio"] for row in rows]
    steps = np.diff(ratios)
    if len(steps) == 0:
        trend = "single"
    elif np.all(steps > 0):
        trend = "increasing"
    elif np.all(steps < 0):
        trend = "decreasing"
    else:
        trend = "mixed"
    gaps = np.abs(np.asarray(ratios) - 0.5)
    return DezerReport(
        alpha=alpha,
        rows=rows,
        delta0=delta0,
        limit=0.5,
        holds_below_delta0=bool(all(row["holds"] for row in rows if row["delta"] <= delta0)),
        ratio_trend=trend,
        approaches_limit=bool(np.all(np.diff(gaps) < 0)) if len(gaps) > 1 else True,
    )


def dezer_delta0(alpha: float) -> float:
    """Largest delta in (0, 1/9] below which the ratio stays under 1 (1/9 if it never reaches 1)."""
    g = lambda t: dezer_ratio(alpha, math.exp(-t)) - 1.0  # noqa: E731
    t_hi = math.log(9.0)
    if g(t_hi) <= 0:
        return 1.0 / 9.0
    t = t_hi
    while g(t) > 0:
        t *= 2
        if t > 700:
            return 0.0
    return math.exp(-brentq(g, t_hi, t, xtol=1e-12))


# ---------------------------------------------------------------------------
# displacement bound for the kernel


def kernel_gradient_bound_check(k: SingularKernel, n_triples: int = 10_000, seed: int = 0, triples=None) -> dict:
    """Measure ``c`` in ``|K(x0-y) - K(x1-y)| <= c |||sigma||| delta / |y-x0|^(n+1)``.

    Triples have ``|x0 - x1| = delta`` and ``|y - x0| > 2 delta``.  Also checks
    ``|x0-y| <= 2|x2-y| <= 4|x0-y|`` for points x2 on the segment [x0, x1].
    """
    n = k.dimension
    if triples is None:
        rng = np.random.default_rng(seed)
        x0 = rng.standard_normal((n_triples, n)) * 0.3
        u = rng.standard_normal((n_triples, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        delta = 10.0 ** rng.uniform(-6, -1, n_triples)
        x1 = x0 + delta[:, None] * u
        v = rng.standard_normal((n_triples, n))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        dist = 2 * delta * (1 + 10.0 ** rng.uniform(-3, 2, n_triples))
        y = x0 + dist[:, None] * v
        t = rng.uniform(0, 1, n_triples)
    else:
        x0, x1, y = (np.asarray(a, float) for a in zip(*triples))
        delta = np.linalg.norm(x1 - x0, axis=1)
        t = np.full(len(x0), 0.5)
    d0 = np.linalg.norm(y - x0, axis=1)
    admissible = d0 > 2 * delta
    lhs = np.abs(k(x0 - y) - k(x1 - y))
    triple = k.triple_norm
    scale = delta * triple / d0 ** (n + 1)
    ratio = np.where(scale > 0, lhs / np.where(scale > 0, scale, 1.0), np.where(lhs > 0, np.inf, 0.0))
    x2 = x0 + t[:, None] * (x1 - x0)
    d2 = np.linalg.norm(y - x2, axis=1)
    comparable = (d0 <= 2 * d2 * (1 + 1e-12)) & (2 * d2 <= 4 * d0 * (1 + 1e-12))
    return {
        "kernel": k.name,
        "n_triples": int(len(x0)),
        "n_admissible": int(admissible.sum()),
        "c_max": float(np.max(ratio[admissible])) if admissible.any() else 0.0,
        "lhs_max": float(np.max(lhs[admissible])) if admissible.any() else 0.0,
        "finite": bool(np.all(np.isfinite(ratio[admissible]))),
        "comparable": bool(np.all(comparable[admissible])),
    }
