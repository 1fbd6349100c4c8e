"""Sampled moduli of continuity and the seminorms built from them.

Every modulus here is a lower bound: it is the largest oscillation seen over a
finite set of pairs.  The pair set depends only on the domain, the ladder and
the sampler settings, so two fields sampled with the same settings are compared
on exactly the same pairs, and a larger budget only ever adds pairs.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import qmc

from .errors import CoverageError, DomainError, FitError, ParameterError, UnsupportedDomainError
from .fields import DomainSpec, ScalarField, ball
from .quadrature import QuadConfig, radial_rule, sphere_area, sphere_rule

DEFAULT_DELTA0 = 1.0 / 9.0
EXTENSION_K = 2.0


# ---------------------------------------------------------------------------
# ladders


def dyadic_ladder(kmax=52, include=(DEFAULT_DELTA0,)):
    """Radii ``2^-k`` for ``k = 1..kmax`` plus any extra radii, sorted ascending."""
    if kmax < 1:
        raise ParameterError("kmax must be >= 1")
    r = [2.0**-k for k in range(1, kmax + 1)] + list(include)
    return check_ladder(r)


def log_ladder(r_min, r_max, per_decade=10, include=()):
    if not 0 < r_min < r_max < 1:
        raise ParameterError("log ladder needs 0 < r_min < r_max < 1")
    m = max(2, int(round(math.log10(r_max / r_min) * per_decade)) + 1)
    return check_ladder(list(np.geomspace(r_min, r_max, m)) + list(include))


def check_ladder(ladder):
    r = np.unique(np.asarray(ladder, float).ravel())
    if r.size == 0:
        raise ParameterError("empty radius ladder")
    if np.any(r <= 0) or np.any(r >= 1):
        raise ParameterError("ladder radii must lie in (0, 1)")
    return r


# ---------------------------------------------------------------------------
# pair sampling


@dataclass
class PairSet:
    x: np.ndarray
    y: np.ndarray
    shell: np.ndarray  # index into radii of the shell each pair belongs to
    radii: np.ndarray  # ascending
    meta: dict = field(default_factory=dict)

    @property
    def distances(self):
        return np.linalg.norm(self.x - self.y, axis=-1)

    def __len__(self):
        return len(self.x)


def fixed_directions(n, m):
    """Deterministic, roughly uniform unit vectors (no RNG involved)."""
    if n == 2:
        phi = 2 * math.pi * (np.arange(m) + 0.5) / m
        return np.stack([np.cos(phi), np.sin(phi)], axis=1)
    if n == 3:
        k = np.arange(m) + 0.5
        z = 1 - 2 * k / m
        phi = math.pi * (1 + 5**0.5) * k
        c = np.sqrt(1 - z * z)
        return np.stack([c * np.cos(phi), c * np.sin(phi), z], axis=1)
    g = np.random.default_rng(12345).standard_normal((m, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _unit(v):
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(nrm > 0, nrm, 1.0)


def _domain_center(domain):
    if domain.kind == "box":
        return 0.5 * (np.asarray(domain.lower) + np.asarray(domain.upper))
    return np.zeros(domain.dimension)


def _place(domain, x, step):
    """Partner ``x + step``, flipped to ``x - step`` when outside; mask of usable pairs."""
    y = x + step
    bad = ~domain.contains(y)
    y[bad] = x[bad] - step[bad]
    ok = domain.contains(y) & domain.contains(x)
    return y, ok


def sample_pairs(
    domain: DomainSpec,
    ladder=None,
    budget: int = 256,
    seed: int = 0,
    singular_points=(),
    n_directions: int = 16,
) -> PairSet:
    """Pairs at distance exactly ``r`` for every ladder radius ``r``.

    Per shell: ``budget`` Halton anchors each paired along a random direction,
    the radial direction and a coordinate axis, ``budget // 4`` boundary anchors paired the
    same way, and ``n_directions`` fixed directions out of every singular point.
    """
    if budget < 1:
        raise ParameterError("budget must be >= 1")
    radii = dyadic_ladder() if ladder is None else check_ladder(ladder)
    n = domain.dimension
    center = _domain_center(domain)
    sing = [np.asarray(s, float) for s in singular_points]
    sdirs = fixed_directions(n, n_directions)
    n_bnd = max(1, budget // 4)
    xs, ys, shells = [], [], []
    for k, r in enumerate(radii):
        anchors = domain.from_unit_cube(qmc.Halton(n + 1, rng=np.random.default_rng([seed, k, 0])).random(budget))
        bnd = domain.boundary_points(qmc.Halton(n + 1, rng=np.random.default_rng([seed, k, 2])).random(n_bnd))
        d_in = _unit(np.random.default_rng([seed, k, 1]).standard_normal((budget, n)))
        d_bd = _unit(np.random.default_rng([seed, k, 3]).standard_normal((n_bnd, n)))
        blocks = [
            (anchors, d_in),
            (anchors, _unit(anchors - center)),
            (anchors, np.eye(n)[np.arange(budget) % n]),
            (bnd, d_bd),
            (bnd, -_unit(bnd - center)),
        ]
        for s in sing:
            blocks.append((np.broadcast_to(s, (n_directions, n)).copy(), sdirs))
        for x, d in blocks:
            y, ok = _place(domain, x.copy(), r * d)
            xs.append(x[ok])
            ys.append(y[ok])
            shells.append(np.full(int(ok.sum()), k))
    return PairSet(
        np.concatenate(xs),
        np.concatenate(ys),
        np.concatenate(shells),
        radii,
        {"budget": budget, "seed": seed, "n_directions": n_directions, "n_singular": len(sing)},
    )


# ---------------------------------------------------------------------------
# modulus tables


@dataclass
class Modulus:
    radii: np.ndarray  # ascending
    values: np.ndarray  # running max, nondecreasing in r
    shell_max: np.ndarray | None = None
    sup_abs: float = float("nan")  # max |f| over every evaluated point
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.radii = np.asarray(self.radii, float)
        self.values = np.asarray(self.values, float)
        if self.radii.shape != self.values.shape:
            raise ParameterError("radii and values must have equal length")
        if self.radii.size == 0:
            raise ParameterError("empty radius ladder")
        if np.any(np.diff(self.radii) <= 0):
            raise ParameterError("radii must be strictly ascending")

    @classmethod
    def synthetic(cls, radii, omega, sup_abs=None):
        """Table of a known modulus function ``omega`` (cumulative max enforced)."""
        r = check_ladder(radii)
        v = np.maximum.accumulate(np.asarray(omega(r), float))
        return cls(r, v, v.copy(), float(v[-1] / 2) if sup_abs is None else sup_abs, {"synthetic": True})

    def at(self, r):
        """Value at the largest ladder radius not exceeding ``r`` (0 below the ladder)."""
        i = np.searchsorted(self.radii, r, side="right") - 1
        return np.where(i >= 0, self.values[np.maximum(i, 0)], 0.0)

    def csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "omega"])
        for r, v in zip(self.radii, self.values):
            w.writerow([repr(float(r)), repr(float(v))])
        return buf.getvalue()

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], data[:, 1].copy(), float("nan"), {"source": str(path)})

    def to_dict(self):
        return {
            "r": self.radii.tolist(),
            "omega": self.values.tolist(),
            "sup_abs": self.sup_abs,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["r"], d["omega"], None, d.get("sup_abs", float("nan")), d.get("meta", {}))


def modulus_from_values(vx, vy, pairs: PairSet, meta=None) -> Modulus:
    """Modulus table from field values at both ends of every pair."""
    diff = np.abs(np.asarray(vx, float) - np.asarray(vy, float))
    shell = np.zeros(len(pairs.radii))
    np.maximum.at(shell, pairs.shell, diff)
    sup_abs = float(max(np.max(np.abs(vx), initial=0.0), np.max(np.abs(vy), initial=0.0)))
    return Modulus(
        pairs.radii.copy(),
        np.maximum.accumulate(shell),
        shell,
        sup_abs,
        dict(pairs.meta, n_pairs=len(pairs), **(meta or {})),
    )


def modulus_from_pairs(f: ScalarField, pairs: PairSet) -> Modulus:
    return modulus_from_values(f(pairs.x), f(pairs.y), pairs, {"label": f.label})


def estimate_modulus(f: ScalarField, ladder=None, budget=256, seed=0, n_directions=16, pairs=None) -> Modulus:
    if pairs is None:
        pairs = sample_pairs(f.domain, ladder, budget, seed, f.singular_points, n_directions)
    return modulus_from_pairs(f, pairs)


# ---------------------------------------------------------------------------
# seminorms from a modulus table


def _as_modulus(source, delta0=None, **sampling):
    if isinstance(source, Modulus):
        return source
    if isinstance(source, ScalarField):
        include = (DEFAULT_DELTA0,) if delta0 is None else (DEFAULT_DELTA0, delta0)
        ladder = sampling.pop("ladder", None)
        if ladder is None:
            ladder = dyadic_ladder(include=include)
        return estimate_modulus(source, ladder, **sampling)
    raise TypeError("expected a Modulus or a ScalarField")


def _weighted(mod, alpha):
    return mod.values * (-np.log(mod.radii)) ** alpha


def hlog_full(mod: Modulus, alpha: float) -> float:
    """``sup_r omega(r) (-log r)^alpha`` over the whole ladder."""
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    return float(np.max(_weighted(mod, alpha)))


def hlog_seminorm(source, alpha: float, delta0: float = DEFAULT_DELTA0, **sampling):
    """Restricted seminorm over ladder radii ``r <= delta0`` and the bound
    ``restricted + 2 (-log delta0)^alpha ||f||`` on the full seminorm."""
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    if not 0 < delta0 < 1:
        raise ParameterError("delta0 must lie in (0, 1)")
    mod = _as_modulus(source, delta0, **sampling)
    sel = mod.radii <= delta0
    if not np.any(mod.radii < delta0):
        raise CoverageError(f"ladder does not reach below delta0={delta0:g}")
    restricted = float(np.max(_weighted(mod, alpha)[sel]))
    sup = mod.sup_abs if np.isfinite(mod.sup_abs) else float(np.max(mod.values))
    return restricted, restricted + 2.0 * (-math.log(delta0)) ** alpha * sup


def holder_seminorm(source, lam: float, **sampling) -> float:
    if not 0 < lam <= 1:
        raise ParameterError("Hölder exponent must lie in (0, 1]")
    mod = _as_modulus(source, **sampling)
    return float(np.max(mod.values / mod.radii**lam))


def holder_divergence(mod: Modulus, lam: float, tail: int = 8) -> dict:
    """Flag a Hölder ratio that keeps growing at the smallest ladder radii."""
    ratio = mod.values / mod.radii**lam
    t = ratio[:tail]
    growing = bool(np.all(t > 0) and np.all(np.diff(t) < -1e-9 * t[1:]))
    return {"divergent": growing, "ratios": t.tolist(), "radii": mod.radii[:tail].tolist()}


def dini_seminorm(mod: Modulus, delta: float, tail_alpha: float | None = None):
    """``int_0^delta omega(r) dr / r`` by the trapezoid rule in ``t = -log r``.

    Returns ``(value, tail)``.  ``value`` covers ``[r_min, delta]`` with linear
    interpolation in t at ``delta``.  The tail over ``(0, r_min)`` is bounded
    assuming ``omega(r) <= omega(r_min) (log r_min / log r)^tail_alpha``; with
    no ``tail_alpha`` the tail is unbounded and reported as ``inf`` unless
    ``omega(r_min) = 0``.
    """
    if not 0 < delta < 1:
        raise ParameterError("delta must lie in (0, 1)")
    r, w = mod.radii, mod.values
    if r[0] >= delta:
        raise CoverageError(f"ladder does not reach below delta={delta:g}")
    t = -np.log(r)
    td = -math.log(delta)
    keep = r < delta
    wd = float(np.interp(td, t[::-1], w[::-1]))
    tt = np.concatenate([[td], t[keep][::-1]])
    ww = np.concatenate([[wd], w[keep][::-1]])
    value = float(np.sum(0.5 * (ww[1:] + ww[:-1]) * np.diff(tt)))
    w0, L0 = float(w[0]), float(t[0])
    if w0 == 0:
        tail = 0.0
    elif tail_alpha is None or tail_alpha <= 1:
        tail = math.inf
    else:
        tail = w0 * L0 / (tail_alpha - 1.0)
    return value, tail


def interpolation_bound(mod: Modulus, alpha: float, beta: float):
    """``([f]_beta, [f]_alpha^(beta/alpha) (2||f||)^(1-beta/alpha))`` on one table."""
    if not 0 < beta < alpha:
        raise ParameterError("need 0 < beta < alpha")
    lhs = hlog_full(mod, beta)
    rhs = hlog_full(mod, alpha) ** (beta / alpha) * (2.0 * mod.sup_abs) ** (1.0 - beta / alpha)
    return lhs, rhs


def dini_hlog_bound(mod: Modulus, alpha: float, delta0: float = DEFAULT_DELTA0):
    """``([f]_*, (alpha-1)^-1 (-log delta0)^(1-alpha) [f]_{alpha;delta0})``."""
    if not alpha > 1:
        raise ParameterError("the Dini bound needs alpha > 1")
    value, tail = dini_seminorm(mod, delta0, tail_alpha=alpha)
    restricted, _ = hlog_seminorm(mod, alpha, delta0)
    return value + tail, restricted * (-math.log(delta0)) ** (1 - alpha) / (alpha - 1)


# ---------------------------------------------------------------------------
# integral seminorm


def integral_seminorm(
    f: ScalarField,
    p: float,
    lam: float,
    centers,
    rho_ladder,
    quad: QuadConfig | None = None,
    reference: str = "mean",
) -> float:
    """``sup (-log rho)^lam int_{B(x0,rho)} |u - c|^p |x - x0|^-n dx`` to the power 1/p.

    ``reference="mean"`` takes ``c`` as the ball mean; the integral then
    diverges (returns ``inf``) whenever ``u(x0)`` differs from it, and otherwise
    equals the centred value.
    ``reference="center"`` takes ``c = u(x0)``.
    """
    if not p >= 1:
        raise ParameterError("p must be >= 1")
    if not lam > 0:
        raise ParameterError("lambda must be positive")
    if reference not in ("mean", "center"):
        raise ParameterError("reference must be 'mean' or 'center'")
    quad = quad or QuadConfig()
    rhos = check_ladder(rho_ladder)
    n = f.dimension
    dirs, dw = sphere_rule(n, quad.angular_order)
    best = 0.0
    for x0 in np.atleast_2d(np.asarray(centers, float)):
        if not f.domain.contains(x0):
            raise DomainError("integral seminorm centre outside the domain")
        u0 = float(f(x0))
        for rho in rhos:
            r, wr = radial_rule(quad.r_floor, rho, quad.radial_nodes_per_decade)
            pts = x0 + r[:, None, None] * dirs[None, :, :]
            inside = f.domain.contains(pts)
            u = np.where(inside, f(np.where(inside[..., None], pts, x0)), 0.0)
            w = wr[:, None] * dw[None, :] * inside
            mean = float(np.sum(w * r[:, None] ** n * u) / np.sum(w * r[:, None] ** n))
            dev = np.abs(u - mean) * inside
            if reference == "mean":
                if abs(u0 - mean) > 1e-10 * max(1.0, float(np.max(dev))):
                    return math.inf
            # a finite value forces c = u(x0); using it exactly avoids rounding residue
            c = u0
            integral = float(np.sum(w * np.abs(u - c) ** p))
            best = max(best, (-math.log(rho)) ** lam * integral)
    return best ** (1.0 / p)


def integral_constant(n: int, p: float, lam: float) -> float:
    """Constant in ``[f]_{p,lam} <= c [f]_alpha`` with ``alpha = (1 + lam) / p``."""
    return (sphere_area(n) / lam) ** (1.0 / p)


# ---------------------------------------------------------------------------
# extension to a neighbourhood of the unit ball


def project_to_unit_ball(x):
    x = np.asarray(x, float)
    s = np.linalg.norm(x, axis=-1, keepdims=True)
    return np.where(s > 1.0, x / np.where(s > 0, s, 1.0), x)


def extend(f: ScalarField, rho: float) -> ScalarField:
    """``Tf(x) = f(x / max(1, |x|))`` on the ball of radius ``1 + rho``."""
    if not (f.domain.is_ball and f.domain.radius == 1.0):
        raise UnsupportedDomainError("extension is implemented for the unit ball only")
    if not 0 < rho < 1:
        raise ParameterError("band width rho must lie in (0, 1)")
    return ScalarField(
        domain=ball(f.dimension, 1.0 + rho),
        evaluate=lambda x: f.evaluate(project_to_unit_ball(x)),
        label=f"T({f.label})",
        kind="extension",
        parameters={"rho": rho, "field": f.to_record()},
        singular_points=f.singular_points,
        modulus_note=f"omega_Tf(r) <= omega_f({EXTENSION_K:g} r)",
    )


def pair_hlog(diffs, dists, alpha, delta):
    """``max |f(x)-f(y)| (-log |x-y|)^alpha`` over pairs with ``0 < |x-y| <= delta``."""
    sel = (dists > 0) & (dists <= delta)
    if not np.any(sel):
        return 0.0
    return float(np.max(np.abs(diffs[sel]) * (-np.log(dists[sel])) ** alpha))


def extension_check(f: ScalarField, rho=0.5, alpha=2.0, delta0=0.05, budget=256, seed=0):
    """Compare ``[Tf]_{alpha;delta0}`` with ``2^alpha [f]_{alpha;2 delta0}`` on shared pairs.

    The right side is evaluated at the projected pairs, whose distances never
    exceed the originals, so both sides see the same field values.
    """
    if not 0 < 2 * delta0 < 1:
        raise ParameterError("need 0 < 2 delta0 < 1")
    tf = extend(f, rho)
    ladder = dyadic_ladder(include=(delta0,))
    pairs = sample_pairs(tf.domain, ladder, budget, seed, f.singular_points)
    px, py = project_to_unit_ball(pairs.x), project_to_unit_ball(pairs.y)
    fx, fy = f(px), f(py)
    lhs = pair_hlog(fx - fy, pairs.distances, alpha, delta0)
    rhs_inner = pair_hlog(fx - fy, np.linalg.norm(px - py, axis=-1), alpha, EXTENSION_K * delta0)
    return {
        "label": f.label,
        "lhs": lhs,
        "rhs": 2.0**alpha * rhs_inner,
        "holds": bool(lhs <= 2.0**alpha * rhs_inner * (1 + 1e-12)),
        "n_pairs": len(pairs),
    }


# ---------------------------------------------------------------------------
# exponent fitting


@dataclass
class LogFit:
    alpha_hat: float
    intercept: float
    r2: float
    n_points: int
    window: tuple

    def to_dict(self):
        return asdict(self)


def fit_log_exponent(mod: Modulus, window=(1e-8, 1e-3)) -> LogFit:
    """Least squares of ``log omega`` against ``log(-log r)`` inside the window.

    Returns ``alpha_hat = -slope``: an exact law ``C (-log r)^-a`` gives ``a``
    and intercept ``log C``.
    """
    lo, hi = window
    sel = (mod.radii >= lo) & (mod.radii <= hi)
    if np.count_nonzero(sel) < 5:
        raise FitError("need at least 5 ladder points in the fit window")
    w = mod.values[sel]
    if np.any(w <= 0):
        raise FitError("zero modulus values in the fit window")
    x = np.log(-np.log(mod.radii[sel]))
    y = np.log(w)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return LogFit(float(-slope), float(intercept), r2, int(np.count_nonzero(sel)), (lo, hi))


# ---------------------------------------------------------------------------
# full report


@dataclass
class SeminormReport:
    label: str
    alpha: float
    delta0: float
    lam: float
    p: float
    integral_lambda: float
    sup_norm: float
    holder: float
    holder_divergent: bool
    hlog: float
    hlog_restricted: float
    hlog_upper: float
    dini: float
    dini_tail: float
    integral: float
    integral_centered: float
    full_norms: dict = field(default_factory=dict)

    def to_dict(self):
        return {k: _jsonable(v) for k, v in asdict(self).items()}

    def rows(self):
        return [(k, v) for k, v in self.to_dict().items() if k != "full_norms"] + [
            (f"norm:{k}", v) for k, v in self.full_norms.items()
        ]


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def _integral_centers(f: ScalarField):
    pts = [np.asarray(s, float) for s in f.singular_points] or [_domain_center(f.domain)]
    return np.array(pts)


def seminorm_report(
    f: ScalarField,
    alpha: float = 2.0,
    delta0: float = DEFAULT_DELTA0,
    lam: float = 1.0,
    p: float = 2.0,
    integral_lambda: float = 1.0,
    budget: int = 256,
    seed: int = 0,
    ladder=None,
    quad: QuadConfig | None = None,
) -> SeminormReport:
    ladder = dyadic_ladder(include=(DEFAULT_DELTA0, delta0)) if ladder is None else check_ladder(ladder)
    pairs = sample_pairs(f.domain, ladder, budget, seed, f.singular_points)
    mod = modulus_from_pairs(f, pairs)
    restricted, upper = hlog_seminorm(mod, alpha, delta0)
    dini, tail = dini_seminorm(mod, delta0, tail_alpha=alpha if alpha > 1 else None)
    full = hlog_full(mod, alpha)

    centers = _integral_centers(f)
    room = f.domain.radius - np.max(np.linalg.norm(centers, axis=1)) if f.domain.is_ball else 0.25
    rhos = [r for r in (0.25, 0.125, 0.0625) if r < 0.9 * room] or [0.5 * room]
    quad = quad or QuadConfig()
    integral = integral_seminorm(f, p, integral_lambda, centers, rhos, quad, "mean")
    centered = integral_seminorm(f, p, integral_lambda, centers, rhos, quad, "center")

    norms = {"sup": mod.sup_abs, "alpha": full + mod.sup_abs}
    for k, deriv in ((1, f.gradient), (2, f.hessian)):
        if deriv is None:
            break
        dx, dy = deriv(pairs.x), deriv(pairs.y)
        dx, dy = dx.reshape(len(pairs), -1), dy.reshape(len(pairs), -1)
        semis = [hlog_full(modulus_from_values(dx[:, c], dy[:, c], pairs), alpha) for c in range(dx.shape[1])]
        sup_k = float(max(np.max(np.abs(dx)), np.max(np.abs(dy))))
        norms[f"sup_d{k}"] = sup_k
        lower = norms["sup"] + sum(norms.get(f"sup_d{j}", 0.0) for j in range(1, k + 1))
        norms[f"{k},alpha"] = lower + max(semis)

    return SeminormReport(
        label=f.label,
        alpha=alpha,
        delta0=delta0,
        lam=lam,
        p=p,
        integral_lambda=integral_lambda,
        sup_norm=mod.sup_abs,
        holder=holder_seminorm(mod, lam),
        holder_divergent=holder_divergence(mod, lam)["divergent"],
        hlog=full,
        hlog_restricted=restricted,
        hlog_upper=upper,
        dini=dini,
        dini_tail=tail,
        integral=integral,
        integral_centered=centered,
        full_norms=norms,
    )


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj) if isinstance(obj, dict) else obj, indent=2, sort_keys=True)
