"""Scalar fields on simple domains.

Fields are vectorised: ``evaluate`` takes an array of points with shape
``(..., n)`` and returns values with shape ``(...)``.  Gradients return
``(..., n)`` and hessians ``(..., n, n)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import expit, ndtri

from .errors import DomainError, ParameterError, PreconditionError

DOMAIN_KINDS = ("unit-ball", "ball", "box", "annulus")

# below this norm the log-type fields are clamped to their limit at the origin
ORIGIN_CLAMP = 1e-300


@dataclass(frozen=True)
class DomainSpec:
    kind: str
    dimension: int
    radius: float = 1.0
    inner: float = 0.0
    lower: tuple | None = None
    upper: tuple | None = None

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise ParameterError(f"unknown domain kind {self.kind!r}")
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise ParameterError("dimension must be an integer >= 2")
        if self.kind == "unit-ball" and self.radius != 1.0:
            raise ParameterError("unit-ball has radius 1")
        if self.kind == "box":
            if self.lower is None or self.upper is None:
                raise ParameterError("box needs lower and upper corners")
            lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
            if lo.shape != (self.dimension,) or hi.shape != (self.dimension,):
                raise ParameterError("box corners must have one entry per dimension")
            if np.any(hi <= lo):
                raise ParameterError("box extents must be positive")
        elif not self.radius > 0:
            raise ParameterError("radius must be positive")
        if self.kind == "annulus" and not 0 < self.inner < self.radius:
            raise ParameterError("annulus needs 0 < inner < outer")

    @property
    def is_ball(self):
        return self.kind in ("unit-ball", "ball")

    @property
    def diameter(self):
        if self.kind == "box":
            return float(np.linalg.norm(np.subtract(self.upper, self.lower)))
        return 2.0 * self.radius

    def contains(self, x, tol=1e-12):
        x = np.asarray(x, float)
        if self.kind == "box":
            lo, hi = np.asarray(self.lower), np.asarray(self.upper)
            return np.all((x >= lo - tol) & (x <= hi + tol), axis=-1)
        s = np.linalg.norm(x, axis=-1)
        inside = s <= self.radius * (1 + tol) + tol
        if self.kind == "annulus":
            inside &= s >= self.inner * (1 - tol) - tol
        return inside

    def from_unit_cube(self, u):
        """Map points of the unit cube ``[0,1]^(n+1)`` into the domain (uniformly)."""
        u = np.clip(np.asarray(u, float), 1e-12, 1 - 1e-12)
        n = self.dimension
        if self.kind == "box":
            lo, hi = np.asarray(self.lower), np.asarray(self.upper)
            return lo + u[:, :n] * (hi - lo)
        d = _directions_from_cube(u[:, :n])
        if self.kind == "annulus":
            a, b = self.inner, self.radius
            r = (a**n + u[:, n] * (b**n - a**n)) ** (1.0 / n)
        else:
            r = self.radius * u[:, n] ** (1.0 / n)
        return d * r[:, None]

    def boundary_points(self, u):
        """Map cube points to the boundary of the domain."""
        u = np.clip(np.asarray(u, float), 1e-12, 1 - 1e-12)
        n = self.dimension
        if self.kind == "box":
            lo, hi = np.asarray(self.lower), np.asarray(self.upper)
            x = lo + u[:, :n] * (hi - lo)
            face = np.minimum((u[:, n] * 2 * n).astype(int), 2 * n - 1)
            axis, side = face // 2, face % 2
            rows = np.arange(len(x))
            x[rows, axis] = np.where(side == 0, lo[axis], hi[axis])
            return x
        d = _directions_from_cube(u[:, :n])
        r = np.full(len(u), self.radius)
        if self.kind == "annulus":
            r = np.where(u[:, n] < 0.5, self.inner, self.radius)
        return d * r[:, None]

    def to_record(self):
        rec = {"kind": self.kind, "dimension": self.dimension}
        if self.kind == "box":
            rec.update(lower=list(self.lower), upper=list(self.upper))
        else:
            rec["radius"] = self.radius
        if self.kind == "annulus":
            rec["inner"] = self.inner
        return rec


def ball(n, radius=1.0):
    if radius == 1.0:
        return DomainSpec("unit-ball", n)
    return DomainSpec("ball", n, radius=radius)


def box(lower, upper):
    return DomainSpec("box", len(lower), lower=tuple(lower), upper=tuple(upper))


def annulus(n, inner, outer):
    return DomainSpec("annulus", n, radius=outer, inner=inner)


def _directions_from_cube(u):
    g = ndtri(u)
    nrm = np.linalg.norm(g, axis=-1, keepdims=True)
    nrm[nrm == 0] = 1.0
    return g / nrm


@dataclass(frozen=True, eq=False)
class ScalarField:
    domain: DomainSpec
    evaluate: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    hessian: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = "field"
    kind: str = "custom"
    parameters: dict = field(default_factory=dict)
    singular_points: tuple = ()
    support_radius: float | None = None
    modulus_note: str = ""

    def __call__(self, x):
        return self.evaluate(np.asarray(x, float))

    @property
    def dimension(self):
        return self.domain.dimension

    def grad(self, x):
        if self.gradient is None:
            raise PreconditionError(f"field {self.label!r} has no analytic gradient")
        return self.gradient(np.asarray(x, float))

    def hess(self, x):
        if self.hessian is None:
            raise PreconditionError(f"field {self.label!r} has no analytic hessian")
        return self.hessian(np.asarray(x, float))

    def to_record(self):
        return {"label": self.label, "kind": self.kind, "parameters": dict(self.parameters)}


def with_domain(f: ScalarField, domain: DomainSpec) -> ScalarField:
    if domain.dimension != f.dimension:
        raise DomainError("dimension mismatch")
    return replace(f, domain=domain)


# ---------------------------------------------------------------------------
# algebra of fields


def scaled_field(f: ScalarField, c: float) -> ScalarField:
    return ScalarField(
        domain=f.domain,
        evaluate=lambda x: c * f.evaluate(x),
        gradient=None if f.gradient is None else (lambda x: c * f.gradient(x)),
        hessian=None if f.hessian is None else (lambda x: c * f.hessian(x)),
        label=f"{c:g}*{f.label}",
        kind="scaled",
        parameters={"c": c, "field": f.to_record()},
        singular_points=f.singular_points,
        support_radius=f.support_radius,
    )


def sum_field(f: ScalarField, g: ScalarField) -> ScalarField:
    has_grad = f.gradient is not None and g.gradient is not None
    has_hess = f.hessian is not None and g.hessian is not None
    return ScalarField(
        domain=f.domain,
        evaluate=lambda x: f.evaluate(x) + g.evaluate(x),
        gradient=(lambda x: f.gradient(x) + g.gradient(x)) if has_grad else None,
        hessian=(lambda x: f.hessian(x) + g.hessian(x)) if has_hess else None,
        label=f"{f.label}+{g.label}",
        kind="sum",
        parameters={"terms": [f.to_record(), g.to_record()]},
        singular_points=_merge_points(f.singular_points, g.singular_points),
        support_radius=_max_support(f.support_radius, g.support_radius),
    )


def product_field(f: ScalarField, g: ScalarField, label=None) -> ScalarField:
    """Pointwise product; derivatives follow the product rule when both factors have them."""

    def grad(x):
        return g.evaluate(x)[..., None] * f.gradient(x) + f.evaluate(x)[..., None] * g.gradient(x)

    def hess(x):
        fv, gv = f.evaluate(x), g.evaluate(x)
        fg, gg = f.gradient(x), g.gradient(x)
        cross = fg[..., :, None] * gg[..., None, :]
        return (
            gv[..., None, None] * f.hessian(x)
            + fv[..., None, None] * g.hessian(x)
            + cross
            + np.swapaxes(cross, -1, -2)
        )

    has_grad = f.gradient is not None and g.gradient is not None
    has_hess = has_grad and f.hessian is not None and g.hessian is not None
    supports = [s for s in (f.support_radius, g.support_radius) if s is not None]
    return ScalarField(
        domain=f.domain,
        evaluate=lambda x: f.evaluate(x) * g.evaluate(x),
        gradient=grad if has_grad else None,
        hessian=hess if has_hess else None,
        label=label or f"{f.label}*{g.label}",
        kind="product",
        parameters={"factors": [f.to_record(), g.to_record()]},
        singular_points=_merge_points(f.singular_points, g.singular_points),
        support_radius=min(supports) if supports else None,
    )


def gradient_component(f: ScalarField, i: int) -> ScalarField:
    if f.gradient is None:
        raise PreconditionError(f"field {f.label!r} has no analytic gradient")
    return ScalarField(
        domain=f.domain,
        evaluate=lambda x: f.gradient(x)[..., i],
        label=f"d{i + 1}({f.label})",
        kind="gradient-component",
        parameters={"i": i, "field": f.to_record()},
        singular_points=f.singular_points,
        support_radius=f.support_radius,
    )


def hessian_component(f: ScalarField, i: int, j: int) -> ScalarField:
    if f.hessian is None:
        raise PreconditionError(f"field {f.label!r} has no analytic hessian")
    return ScalarField(
        domain=f.domain,
        evaluate=lambda x: f.hessian(x)[..., i, j],
        label=f"d{i + 1}d{j + 1}({f.label})",
        kind="hessian-component",
        parameters={"i": i, "j": j, "field": f.to_record()},
        singular_points=f.singular_points,
        support_radius=f.support_radius,
    )


def operator_field(f: ScalarField, a, label=None) -> ScalarField:
    """The field ``sum_ij a_ij d_i d_j f`` computed from the analytic hessian."""
    if f.hessian is None:
        raise PreconditionError(f"field {f.label!r} has no analytic hessian")
    a = np.asarray(a, float)
    return ScalarField(
        domain=f.domain,
        evaluate=lambda x: np.einsum("ij,...ij->...", a, f.hessian(x)),
        label=label or f"L({f.label})",
        kind="operator-image",
        parameters={"a": a.tolist(), "field": f.to_record()},
        singular_points=f.singular_points,
        support_radius=f.support_radius,
    )


def _merge_points(p, q):
    out = list(p)
    for s in q:
        if not any(np.allclose(s, t) for t in out):
            out.append(s)
    return tuple(out)


def _max_support(a, b):
    if a is None or b is None:
        return None
    return max(a, b)


# ---------------------------------------------------------------------------
# counterexample u(x) = (-log|x|)^(-alpha) * sum_{i != j} x_i x_j


def _radial_split(x):
    s = np.linalg.norm(x, axis=-1)
    ok = s > ORIGIN_CLAMP
    ss = np.where(ok, s, 1.0)
    return s, ok, ss, x / ss[..., None]


def counterexample_field(alpha: float, n: int = 2, radius: float = 0.5) -> ScalarField:
    """The optimality counterexample on the ball ``|x| <= radius < 1``.

    With ``q = (sum x_i)^2 - |x|^2`` and ``G = (-log|x|)^(-alpha)`` the hessian is
    assembled from ``x_hat = x/|x|`` and powers of ``L = -log|x|`` only, so every
    entry stays finite near the origin, where value and derivatives are set to
    their limit 0.
    """
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    if n < 2:
        raise ParameterError("counterexample needs n >= 2")
    if not 0 < radius < 1:
        raise ParameterError("counterexample lives inside the unit ball")
    eye, ones = np.eye(n), np.ones((n, n))

    def pieces(x):
        s, ok, ss, xh = _radial_split(x)
        L = -np.log(np.where(ok, ss, 0.5))
        G = np.where(ok, L**-alpha, 0.0)
        a1 = np.where(ok, alpha * L ** (-alpha - 1), 0.0)
        a2 = np.where(ok, alpha * (alpha + 1) * L ** (-alpha - 2), 0.0) - a1
        sx = xh.sum(axis=-1)
        qh = sx**2 - 1.0
        ph = 2.0 * sx[..., None] - 2.0 * xh
        return s, ok, xh, G, a1, a2, qh, ph

    def value(x):
        x = np.asarray(x, float)
        _, ok, _, _ = _radial_split(x)
        s = np.linalg.norm(x, axis=-1)
        L = -np.log(np.where(ok, s, 0.5))
        q = x.sum(axis=-1) ** 2 - (x * x).sum(axis=-1)
        return np.where(ok, L**-alpha * q, 0.0)

    def gradient(x):
        s, ok, xh, G, a1, _, qh, ph = pieces(np.asarray(x, float))
        g = s[..., None] * (qh[..., None] * a1[..., None] * xh + G[..., None] * ph)
        return np.where(ok[..., None], g, 0.0)

    def hessian(x):
        _, ok, xh, G, a1, a2, qh, ph = pieces(np.asarray(x, float))
        xx = xh[..., :, None] * xh[..., None, :]
        xp = xh[..., :, None] * ph[..., None, :]
        h = (
            qh[..., None, None] * (a2[..., None, None] * xx + a1[..., None, None] * (eye - xx))
            + a1[..., None, None] * (xp + np.swapaxes(xp, -1, -2))
            + 2.0 * G[..., None, None] * (ones - eye)
        )
        return np.where(ok[..., None, None], h, 0.0)

    return ScalarField(
        domain=ball(n, radius),
        evaluate=value,
        gradient=gradient,
        hessian=hessian,
        label=f"counterexample(alpha={alpha:g},n={n})",
        kind="counterexample",
        parameters={"alpha": alpha, "n": n, "radius": radius},
        singular_points=(tuple([0.0] * n),),
        modulus_note=(
            "pure second derivatives ~ (-log r)^-(alpha+1), mixed ~ 2(-log r)^-alpha "
            "near the origin"
        ),
    )


# ---------------------------------------------------------------------------
# cutoff profile


def smoothstep(s, order=0):
    """C-infinity step ``S(s) = h(s) / (h(s) + h(1-s))`` with ``h(s) = exp(-1/s)``.

    ``order`` selects the derivative (0..3).  S = 0 for s <= 0 and 1 for s >= 1.
    """
    s = np.asarray(s, float)
    inner = (s > 0) & (s < 1)
    sc = np.where(inner, s, 0.5)
    e = 1.0 / sc - 1.0 / (1.0 - sc)
    S = np.where(inner, expit(-e), (s >= 1).astype(float))
    if order == 0:
        return S
    T = np.where(inner, expit(-e) * expit(e), 0.0)
    live = T > 0
    sc = np.where(live, s, 0.5)
    P = 1 / sc**2 + 1 / (1 - sc) ** 2
    d1 = T * P
    if order == 1:
        return np.where(live, d1, 0.0)
    P1 = -2 / sc**3 + 2 / (1 - sc) ** 3
    T1 = d1 * (1 - 2 * S)
    d2 = T1 * P + T * P1
    if order == 2:
        return np.where(live, d2, 0.0)
    if order == 3:
        P2 = 6 / sc**4 + 6 / (1 - sc) ** 4
        T2 = d2 * (1 - 2 * S) - 2 * d1**2
        return np.where(live, T2 * P + 2 * T1 * P1 + T * P2, 0.0)
    raise ParameterError("smoothstep derivatives available up to order 3")


def theta(t, order=0):
    """Cutoff profile: 1 on [0, 1/3], 0 on [2/3, 1], ``theta(t) = 1 - S(3t - 1)``."""
    t = np.asarray(t, float)
    v = smoothstep(3.0 * t - 1.0, order)
    if order == 0:
        return 1.0 - v
    return -(3.0**order) * v


@lru_cache(maxsize=None)
def theta_holder_norms(lam: float = 1.0) -> dict:
    """Sup norms of theta and its first two derivatives plus ``[theta'']_H(lam)``.

    Hölder exponents above 1 make the seminorm of a non-constant function
    infinite, so ``lam`` is clipped to 1 (where the seminorm is ``sup|theta'''|``).
    """
    lam = min(float(lam), 1.0)
    if not lam > 0:
        raise ParameterError("Hölder exponent must be positive")
    t = np.linspace(0.0, 1.0, 4001)
    sups = [float(np.max(np.abs(theta(t, k)))) for k in range(4)]
    if lam == 1.0:
        holder = sups[3]
    else:
        d2 = theta(t, 2)
        h = t[1] - t[0]
        holder = 0.0
        for k in range(1, len(t)):
            holder = max(holder, float(np.max(np.abs(d2[k:] - d2[:-k]))) / (k * h) ** lam)
    return {
        "sup": sups[0],
        "sup_d1": sups[1],
        "sup_d2": sups[2],
        "holder_exponent": lam,
        "holder_d2": holder,
        "H2": sups[0] + sups[1] + sups[2] + holder,
    }


@dataclass(frozen=True)
class CutoffSpec:
    R: float

    def __post_init__(self):
        if not 0 < self.R < 0.5:
            raise ParameterError("cutoff radius R must lie in (0, 1/2)")

    def theta_holder_norms(self, alpha=1.0):
        return theta_holder_norms(min(alpha, 1.0))


def build_cutoff(spec: CutoffSpec, n: int) -> ScalarField:
    """Radial cutoff ``zeta(x) = theta((|x| - R) / R)``: 1 on ``|x| <= R``, 0 beyond 2R."""
    if not isinstance(spec, CutoffSpec):
        spec = CutoffSpec(float(spec))
    R = spec.R
    eye = np.eye(n)

    def profile(s, k):
        return theta((s - R) / R, k) / R**k

    def value(x):
        return profile(np.linalg.norm(x, axis=-1), 0)

    def gradient(x):
        s, ok, _, xh = _radial_split(x)
        return np.where(ok[..., None], profile(s, 1)[..., None] * xh, 0.0)

    def hessian(x):
        s, ok, ss, xh = _radial_split(x)
        xx = xh[..., :, None] * xh[..., None, :]
        h = profile(s, 2)[..., None, None] * xx + (profile(s, 1) / ss)[..., None, None] * (eye - xx)
        return np.where(ok[..., None, None], h, 0.0)

    return ScalarField(
        domain=ball(n, 2 * R),
        evaluate=value,
        gradient=gradient,
        hessian=hessian,
        label=f"cutoff(R={R:g})",
        kind="cutoff",
        parameters={"R": R, "n": n},
        support_radius=5.0 * R / 3.0,
        modulus_note="1 on |x|<=R, 0 on |x|>=5R/3, transition of width R/3",
    )


# ---------------------------------------------------------------------------
# building blocks for the corpus


def hlog_radial_field(alpha: float, n: int = 2, radius: float = 0.5) -> ScalarField:
    """``(-log|x|)^(-alpha)`` on ``|x| <= radius``; 0 at the origin."""
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    if not 0 < radius < 1:
        raise ParameterError("radius must lie in (0, 1)")
    eye = np.eye(n)

    def coeffs(x):
        s, ok, ss, xh = _radial_split(np.asarray(x, float))
        L = -np.log(np.where(ok, ss, 0.5))
        a1 = np.where(ok, alpha * L ** (-alpha - 1), 0.0)
        a2 = np.where(ok, alpha * (alpha + 1) * L ** (-alpha - 2), 0.0) - a1
        return ok, ss, xh, L, a1, a2

    def value(x):
        ok, _, _, L, _, _ = coeffs(x)
        return np.where(ok, L**-alpha, 0.0)

    def gradient(x):
        ok, ss, xh, _, a1, _ = coeffs(x)
        return np.where(ok[..., None], (a1 / ss)[..., None] * xh, 0.0)

    def hessian(x):
        ok, ss, xh, _, a1, a2 = coeffs(x)
        xx = xh[..., :, None] * xh[..., None, :]
        h = (a2[..., None, None] * xx + a1[..., None, None] * (eye - xx)) / (ss**2)[..., None, None]
        return np.where(ok[..., None, None], h, 0.0)

    return ScalarField(
        domain=ball(n, radius),
        evaluate=value,
        gradient=gradient,
        hessian=hessian,
        label=f"hlog(alpha={alpha:g})",
        kind="hlog",
        parameters={"alpha": alpha, "n": n, "radius": radius},
        singular_points=(tuple([0.0] * n),),
        modulus_note=f"omega(r) >= (-log r)^-{alpha:g} from the pair (0, r e1)",
    )


def smooth_bump(n: int = 2, rho: float = 0.5, domain: DomainSpec | None = None) -> ScalarField:
    """``exp(1 - 1/(1 - |x|^2/rho^2))`` inside ``|x| < rho``, 0 outside; peak value 1."""
    if not rho > 0:
        raise ParameterError("bump radius must be positive")
    eye = np.eye(n)

    def parts(x):
        x = np.asarray(x, float)
        v = (x * x).sum(axis=-1) / rho**2
        w = 1.0 / np.where(v < 1, 1.0 - v, 1.0)
        live = (v < 1) & (w < 1e3)
        phi = np.where(live, np.exp(1.0 - np.where(live, w, 1.0)), 0.0)
        d1 = -phi * w**2
        d2 = phi * (2 * v - 1) * w**4
        return x, phi, np.where(live, d1, 0.0), np.where(live, d2, 0.0)

    def value(x):
        return parts(x)[1]

    def gradient(x):
        x, _, d1, _ = parts(x)
        return (2.0 / rho**2) * d1[..., None] * x

    def hessian(x):
        x, _, d1, d2 = parts(x)
        xx = x[..., :, None] * x[..., None, :]
        return (4.0 / rho**4) * d2[..., None, None] * xx + (2.0 / rho**2) * d1[..., None, None] * eye

    return ScalarField(
        domain=domain or ball(n),
        evaluate=value,
        gradient=gradient,
        hessian=hessian,
        label=f"bump(rho={rho:g},n={n})",
        kind="bump",
        parameters={"n": n, "rho": rho},
        support_radius=rho,
        modulus_note="C-infinity; omega(r) <= r * sup|grad| (Lipschitz)",
    )


def _power_radial(lam: float, n: int) -> ScalarField:
    def value(x):
        return np.linalg.norm(x, axis=-1) ** lam

    def gradient(x):
        s, ok, ss, xh = _radial_split(np.asarray(x, float))
        return np.where(ok[..., None], (lam * ss ** (lam - 1))[..., None] * xh, 0.0)

    return ScalarField(
        domain=ball(n),
        evaluate=value,
        gradient=gradient,
        label=f"|x|^{lam:g}",
        kind="power",
        parameters={"lambda": lam, "n": n},
        singular_points=(tuple([0.0] * n),),
        modulus_note=f"exact: omega(r) = r^{lam:g} (pair (0, r e1); concavity)",
    )


def _polynomial(n, value, gradient, hessian, label, note):
    return ScalarField(
        domain=ball(n),
        evaluate=value,
        gradient=gradient,
        hessian=hessian,
        label=label,
        kind="polynomial",
        parameters={"n": n},
        modulus_note=note,
    )


def quadratic_field(n: int = 2) -> ScalarField:
    """``x1 x2 + x1^2 / 2``; constant hessian."""
    H = np.zeros((n, n))
    H[0, 1] = H[1, 0] = 1.0
    H[0, 0] = 1.0

    def value(x):
        return x[..., 0] * x[..., 1] + 0.5 * x[..., 0] ** 2

    def gradient(x):
        return np.einsum("ij,...j->...i", H, x)

    def hessian(x):
        return np.broadcast_to(H, x.shape[:-1] + (n, n)).copy()

    return _polynomial(n, value, gradient, hessian, "x1*x2+x1^2/2",
                       "omega(r) <= r * sup|grad| on the unit ball (Lipschitz 1+sqrt(2))")


# ---------------------------------------------------------------------------
# corpus registry

_CORPUS: dict[str, Callable[[], ScalarField]] = {}
_FAMILIES: list[tuple[re.Pattern, Callable]] = []


def _register(name):
    def deco(fn):
        _CORPUS[name] = fn
        return fn

    return deco


def _family(pattern):
    def deco(fn):
        _FAMILIES.append((re.compile(pattern + r"$"), fn))
        return fn

    return deco


def _named(f: ScalarField, name: str) -> ScalarField:
    return replace(f, label=name, kind="corpus", parameters={"name": name})


@_register("const-5")
def _const5():
    n = 2
    return ScalarField(
        domain=ball(n),
        evaluate=lambda x: np.full(np.shape(x)[:-1], 5.0),
        gradient=lambda x: np.zeros(np.shape(x)),
        hessian=lambda x: np.zeros(np.shape(x) + (n,)),
        modulus_note="exact: omega(r) = 0",
    )


@_register("linear-x1")
def _linear():
    n = 2
    return ScalarField(
        domain=ball(n),
        evaluate=lambda x: np.asarray(x)[..., 0].astype(float),
        gradient=lambda x: np.broadcast_to(np.eye(n)[0], np.shape(x)).copy(),
        hessian=lambda x: np.zeros(np.shape(x) + (n,)),
        modulus_note="exact: omega(r) = r for r <= 2 (aligned pairs)",
    )


@_register("abs-x")
def _abs():
    return _power_radial(1.0, 2)


@_register("wave")
def _wave():
    n = 2

    def value(x):
        return np.sin(3 * x[..., 0]) * np.cos(2 * x[..., 1])

    def gradient(x):
        a, b = 3 * x[..., 0], 2 * x[..., 1]
        return np.stack([3 * np.cos(a) * np.cos(b), -2 * np.sin(a) * np.sin(b)], axis=-1)

    def hessian(x):
        a, b = 3 * x[..., 0], 2 * x[..., 1]
        h11 = -9 * np.sin(a) * np.cos(b)
        h12 = -6 * np.cos(a) * np.sin(b)
        h22 = -4 * np.sin(a) * np.cos(b)
        return np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)

    return _polynomial(n, value, gradient, hessian, "wave",
                       "omega(r) <= sqrt(13) r (Lipschitz bound)")


@_register("quadratic")
def _quad2():
    return quadratic_field(2)


@_register("quadratic-3d")
def _quad3():
    return quadratic_field(3)


@_register("smooth-bump")
def _bump2():
    return smooth_bump(2, 0.5)


@_register("smooth-bump-3d")
def _bump3():
    return smooth_bump(3, 0.5)


@_register("hlog-cutoff-2")
def _hlog_cut():
    f = hlog_radial_field(2.0, 2, 0.5)
    z = with_domain(build_cutoff(CutoffSpec(0.2), 2), f.domain)
    return replace(product_field(f, z), modulus_note="omega(r) >= (-log r)^-2 for small r")


@_family(r"hlog-alpha-(\d+(?:\.\d+)?)")
def _hlog_family(a):
    return hlog_radial_field(float(a), 2, 0.5)


@_family(r"holder-(\d+(?:\.\d+)?)")
def _holder_family(lam):
    lam = float(lam)
    if not 0 < lam <= 1:
        raise ParameterError("Hölder exponent must lie in (0, 1]")
    return _power_radial(lam, 2)


@_family(r"counterexample-(\d+(?:\.\d+)?)(-3d)?")
def _ce_family(a, three=None):
    return counterexample_field(float(a), 3 if three else 2, 0.5)


@_family(r"cutoff-(\d+(?:\.\d+)?)(-3d)?")
def _cutoff_family(R, three=None):
    return build_cutoff(CutoffSpec(float(R)), 3 if three else 2)


def corpus_names() -> list[str]:
    """Fixed entries plus one representative of each parameterised family."""
    return sorted(_CORPUS) + [
        "hlog-alpha-1",
        "hlog-alpha-2",
        "holder-0.5",
        "counterexample-1",
        "counterexample-1-3d",
        "cutoff-0.2",
    ]


def corpus(name: str) -> ScalarField:
    if name in _CORPUS:
        return _named(_CORPUS[name](), name)
    for pat, fn in _FAMILIES:
        m = pat.match(name)
        if m:
            return _named(fn(*m.groups()), name)
    raise KeyError(f"unknown corpus field {name!r}")


def field_from_record(rec: dict) -> ScalarField:
    """Rebuild a field from its JSON record (corpus, counterexample and cutoff kinds)."""
    kind, params = rec.get("kind"), rec.get("parameters", {})
    if kind == "corpus":
        return corpus(params["name"])
    if kind == "counterexample":
        return counterexample_field(params["alpha"], params.get("n", 2), params.get("radius", 0.5))
    if kind == "cutoff":
        return build_cutoff(CutoffSpec(params["R"]), params["n"])
    if kind == "hlog":
        return hlog_radial_field(params["alpha"], params.get("n", 2), params.get("radius", 0.5))
    if kind == "bump":
        return smooth_bump(params["n"], params["rho"])
    raise KeyError(f"field kind {kind!r} is not reconstructible from a record")

