"""Constant-coefficient elliptic operators, their potentials and the regularity experiments.

For ``L = sum a_ij d_i d_j`` with cofactor matrix ``A = det(a) a^-1`` the
fundamental solution is ``J(x) = c (x^T A x)^((2-n)/2)``.  The constant ``c``
is calibrated so that ``S(L phi) = phi`` on a bump and compared with the
closed form ``-det(a)^((n-3)/2) / ((n-2) |S^(n-1)|)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (
    InvalidKernelError,
    ParameterError,
    PreconditionError,
    UnsupportedDimensionError,
)
from .fields import (
    CutoffSpec,
    ScalarField,
    ball,
    build_cutoff,
    counterexample_field,
    hessian_component,
    hlog_radial_field,
    operator_field,
    product_field,
    smooth_bump,
    theta_holder_norms,
    with_domain,
)
from .moduli import (
    DEFAULT_DELTA0,
    Modulus,
    PairSet,
    check_ladder,
    dyadic_ladder,
    fit_log_exponent,
    fixed_directions,
    hlog_seminorm,
    log_ladder,
    modulus_from_values,
    sample_pairs,
)
from .quadrature import QuadConfig, sphere_area, sphere_rule
from .singular import SingularKernel, _breaks, _radial_nodes, pv_convolve_many, validate_kernel


@dataclass(frozen=True, eq=False)
class EllipticOperator:
    a: np.ndarray
    name: str = "L"

    def __post_init__(self):
        a = np.array(self.a, float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ParameterError("coefficient matrix must be square")
        if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
            raise ParameterError("coefficient matrix must be symmetric")
        a = 0.5 * (a + a.T)
        if np.linalg.eigvalsh(a)[0] <= 0:
            raise ParameterError("coefficient matrix must be positive definite")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def ellipticity(self):
        ev = np.linalg.eigvalsh(self.a)
        return float(ev[0]), float(ev[-1])

    @property
    def det(self):
        return float(np.linalg.det(self.a))

    @property
    def cofactors(self):
        return self.det * np.linalg.inv(self.a)

    def apply(self, f: ScalarField) -> ScalarField:
        return operator_field(f, self.a, label=f"{self.name}({f.label})")

    def key(self):
        return tuple(np.round(self.a, 15).ravel())

    def to_record(self):
        return {"name": self.name, "a": self.a.tolist()}


def laplacian(n: int = 3) -> EllipticOperator:
    return EllipticOperator(np.eye(n), "laplace")


def diagonal_operator(diag) -> EllipticOperator:
    d = [float(v) for v in diag]
    return EllipticOperator(np.diag(d), "diag(" + ",".join(f"{v:g}" for v in d) + ")")


def operator_from_record(rec) -> EllipticOperator:
    if isinstance(rec, str):
        if rec.startswith("laplace"):
            return laplacian(int(rec.split("-")[1][0]) if "-" in rec else 3)
        raise KeyError(f"unknown operator {rec!r}")
    return EllipticOperator(np.asarray(rec["a"], float), rec.get("name", "L"))


# ---------------------------------------------------------------------------
# fundamental solution


def closed_form_constant(op: EllipticOperator) -> float:
    n = op.n
    return -(op.det ** ((n - 3) / 2)) / ((n - 2) * sphere_area(n))


CALIBRATION_POINTS = np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.0, 0.2, 0.1], [0.25, 0.1, -0.1]])


@dataclass(eq=False)
class FundamentalSolutionData:
    op: EllipticOperator
    c_norm: float
    c_closed: float
    calibration: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.op.n

    def _quad(self, x):
        x = np.asarray(x, float)
        A = self.op.cofactors
        return x, np.einsum("...i,ij,...j->...", x, A, x), A

    def __call__(self, x):
        _, Q, _ = self._quad(x)
        return self.c_norm * Q ** ((2 - self.n) / 2)

    def gradient(self, x):
        x, Q, A = self._quad(x)
        p = (2 - self.n) / 2
        return self.c_norm * 2 * p * (Q ** (p - 1))[..., None] * (x @ A)

    def hessian(self, x):
        """``K_ij(x) = c [4p(p-1) Q^(p-2) (Ax)_i (Ax)_j + 2p Q^(p-1) A_ij]``, ``p = (2-n)/2``."""
        x, Q, A = self._quad(x)
        p = (2 - self.n) / 2
        Ax = x @ A
        outer = Ax[..., :, None] * Ax[..., None, :]
        return self.c_norm * (
            4 * p * (p - 1) * (Q ** (p - 2))[..., None, None] * outer + 2 * p * (Q ** (p - 1))[..., None, None] * A
        )

    def to_record(self):
        return {
            "operator": self.op.to_record(),
            "c_norm": self.c_norm,
            "c_closed": self.c_closed,
            "calibration": self.calibration,
        }


def _check_dimension(op):
    if op.n < 3:
        raise UnsupportedDimensionError("fundamental solutions are provided for n >= 3 only")


@lru_cache(maxsize=None)
def _calibrated_constant(key, n):
    op = EllipticOperator(np.asarray(key).reshape(n, n))
    unit = FundamentalSolutionData(op, 1.0, closed_form_constant(op))
    bump = smooth_bump(n, 0.5)
    pts = np.zeros((len(CALIBRATION_POINTS), n))
    pts[:, :3] = CALIBRATION_POINTS
    s1 = potential_apply(unit, op.apply(bump), pts, QuadConfig().refined(1, n))
    target = bump(pts)
    c = float(np.dot(s1, target) / np.dot(s1, s1))
    resid = float(np.max(np.abs(c * s1 - target)) / np.max(np.abs(target)))
    return c, resid


def fundamental_solution(op: EllipticOperator, calibrate: bool = True) -> FundamentalSolutionData:
    """``J = c (x^T A x)^((2-n)/2)`` with ``c`` fitted by least squares on ``S(L phi) = phi``."""
    _check_dimension(op)
    closed = closed_form_constant(op)
    if not calibrate:
        return FundamentalSolutionData(op, closed, closed, {"calibrated": False})
    c, resid = _calibrated_constant(op.key(), op.n)
    return FundamentalSolutionData(
        op,
        c,
        closed,
        {
            "calibrated": True,
            "field": "bump(rho=0.5)",
            "points": CALIBRATION_POINTS.tolist(),
            "relative_residual": resid,
            "relative_gap_to_closed_form": abs(c - closed) / abs(closed),
        },
    )


def potential_apply(fs: FundamentalSolutionData, phi: ScalarField, x, quad: QuadConfig | None = None, R=None):
    """``(S phi)(x) = int J(x - y) phi(y) dy`` in polar coordinates about ``x``."""
    quad = quad or QuadConfig()
    n = fs.n
    if phi.dimension != n:
        raise ParameterError("field and operator dimensions differ")
    R = phi.support_radius if R is None else R
    if R is None:
        raise PreconditionError(f"field {phi.label!r} has no declared support radius")
    pts = np.asarray(x, float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    d, dw = sphere_rule(n, quad.angular_order)
    # J(-r d) r^n = r^2 J(-d): the r^(2-n) singularity is absorbed by the volume element
    jw = dw * fs(-d)
    out = np.empty(len(pts))
    for m, xm in enumerate(pts):
        s = float(np.linalg.norm(xm))
        r_lo, r_hi = max(quad.r_floor, s - R), s + R
        if r_lo >= r_hi:
            out[m] = 0.0
            continue
        r, wr = _radial_nodes(r_lo, r_hi, _breaks(phi, xm, R), quad.radial_nodes_per_decade)
        vals = phi(xm + r[:, None, None] * d[None, :, :])
        out[m] = wr @ ((vals @ jw) * r**2)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# second-derivative kernels


@dataclass
class SecondDerivativeKernel:
    i: int
    j: int
    kernel: SingularKernel
    c_ij: float
    c_ij_reference: float

    def to_dict(self):
        return {"i": self.i, "j": self.j, "kernel": self.kernel.name, "c_ij": self.c_ij,
                "c_ij_reference": self.c_ij_reference}


def _symbol(fs, i, j):
    def sig(d):
        return fs.hessian(d)[..., i, j]

    return SingularKernel(fs.n, sig, f"{fs.op.name}-K{i + 1}{j + 1}", None, {"i": i, "j": j})


def local_term_reference(fs: FundamentalSolutionData, i: int, j: int, order: int = 40) -> float:
    """``int_S theta_i d_j J(theta) dS``."""
    d, w = sphere_rule(fs.n, order)
    return float(np.dot(w, d[:, i] * fs.gradient(d)[:, j]))


_LOCAL_CACHE: dict = {}


def second_derivative_kernels(fs: FundamentalSolutionData, quad: QuadConfig | None = None):
    """Kernels ``K_ij = d_i d_j J`` with local terms ``c_ij`` so that
    ``d_i d_j S phi = PV(K_ij * phi) + c_ij phi``.

    ``c_ij`` is calibrated at the centre of a bump from ``S(d_i d_j phi)``.
    """
    n = fs.n
    quad = quad or QuadConfig().refined(1, n)
    bump = smooth_bump(n, 0.5)
    x0 = np.zeros(n)
    out = []
    for i in range(n):
        for j in range(i, n):
            k = _symbol(fs, i, j)
            try:
                validate_kernel(k, tol=1e-8)
            except InvalidKernelError as exc:
                raise InvalidKernelError(f"second-derivative symbol ({i + 1},{j + 1}) is not mean-zero", exc.mean)
            key = (fs.op.key(), fs.c_norm, i, j, quad)
            if key not in _LOCAL_CACHE:
                sdd = potential_apply(fs, hessian_component(bump, i, j), x0, quad, R=0.5)
                pv = pv_convolve_many([k], bump, x0, quad, R=0.5)[0, 0]
                _LOCAL_CACHE[key] = (sdd - pv) / float(bump(x0))
            c = _LOCAL_CACHE[key]
            out.append(SecondDerivativeKernel(i, j, k, c, local_term_reference(fs, i, j)))
            if i != j:
                out.append(SecondDerivativeKernel(j, i, k, c, local_term_reference(fs, j, i)))
    out.sort(key=lambda s: (s.i, s.j))
    return out


def local_term_trace(fs, kernels) -> float:
    """``sum a_ij c_ij``; equals 1 when ``L S phi = phi``."""
    return float(sum(fs.op.a[s.i, s.j] * s.c_ij for s in kernels))


def second_derivative_fd(fs, phi, x, h=2e-2, quad=None, R=None):
    """Centred finite-difference hessian of ``S phi`` at ``x`` (cross-check oracle)."""
    n = fs.n
    x = np.asarray(x, float)
    e = np.eye(n) * h
    H = np.empty((n, n))
    f0 = potential_apply(fs, phi, x, quad, R)
    for i in range(n):
        fp = potential_apply(fs, phi, x + e[i], quad, R)
        fm = potential_apply(fs, phi, x - e[i], quad, R)
        H[i, i] = (fp - 2 * f0 + fm) / h**2
        for j in range(i + 1, n):
            v = [potential_apply(fs, phi, x + si * e[i] + sj * e[j], quad, R) for si, sj in
                 ((1, 1), (1, -1), (-1, 1), (-1, -1))]
            H[i, j] = H[j, i] = (v[0] - v[1] - v[2] + v[3]) / (4 * h * h)
    return H


# ---------------------------------------------------------------------------
# roundtrip S(L phi) = phi


ROUNDTRIP_POINTS = np.array(
    [[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.05, -0.1, 0.15], [0.2, 0.2, 0.0], [-0.15, 0.1, -0.2], [0.0, 0.0, 0.3]]
)


def potential_roundtrip(fs: FundamentalSolutionData, phi: ScalarField, points=None, quad=None) -> dict:
    """Max deviation of ``S(L phi)`` from ``phi``, relative to ``max |phi|`` on the points."""
    if phi.hessian is None:
        raise PreconditionError(f"field {phi.label!r} has no analytic hessian")
    pts = ROUNDTRIP_POINTS if points is None else np.atleast_2d(np.asarray(points, float))
    quad = quad or QuadConfig()
    Lphi = fs.op.apply(phi)
    s = potential_apply(fs, Lphi, pts, quad)
    ref = phi(pts)
    scale = float(np.max(np.abs(ref)))
    err = float(np.max(np.abs(s - ref)))
    return {
        "field": phi.label,
        "operator": fs.op.name,
        "quad": quad.to_dict(),
        "max_abs_error": err,
        "max_rel_error": err / scale if scale > 0 else err,
        "n_points": len(pts),
    }


# ---------------------------------------------------------------------------
# KLG experiment


def klg_fields(alpha: float, R: float = 0.25, n: int = 3) -> dict:
    """Charges supported in ``|x| <= R``: smooth bump, cut-off log bump and the
    Laplacian of a cut-off counterexample (exponent ``alpha - 1``)."""
    dom = ball(n, R)
    zeta = with_domain(build_cutoff(CutoffSpec(R / 2), n), dom)
    hl = with_domain(hlog_radial_field(alpha, n, 0.5), dom)
    ce = with_domain(counterexample_field(alpha - 1, n, 0.5), dom)
    return {
        "bump": smooth_bump(n, R, dom),
        "hlog-bump": product_field(hl, zeta, f"hlog-bump(alpha={alpha:g})"),
        "forcing": laplacian(n).apply(product_field(zeta, ce, f"cut-counterexample({alpha - 1:g})")),
    }


def klg_point_pairs(n=3, R=0.25, per_decade=3, n_dirs=3, n_random=8, seed=0):
    """Small pair set for moduli of convolution outputs: origin-anchored pairs on a
    log ladder plus pairs at a few random anchors."""
    radii = log_ladder(1e-8, DEFAULT_DELTA0, per_decade)
    dirs = fixed_directions(n, n_dirs)
    x0 = np.zeros(n)
    xs, ys, dist = [], [], []
    for r in radii:
        for d in dirs:
            xs.append(x0)
            ys.append(r * d)
            dist.append(r)
    rng = np.random.default_rng(seed)
    anchors = rng.standard_normal((n_random, n))
    anchors *= (0.5 * R * rng.uniform(0, 1, n_random) ** (1 / n) / np.linalg.norm(anchors, axis=1))[:, None]
    steps = rng.standard_normal((n_random, n))
    steps /= np.linalg.norm(steps, axis=1, keepdims=True)
    for r in (1e-1, 1e-2, 1e-3, 1e-4):
        for a, d in zip(anchors, steps):
            xs.append(a)
            ys.append(a + r * d)
            dist.append(r)
    xs, ys, dist = np.array(xs), np.array(ys), np.array(dist)
    ladder = check_ladder(dist)
    shell = np.searchsorted(ladder, dist)
    return PairSet(xs, ys, shell, ladder, {"origin_per_decade": per_decade, "n_dirs": n_dirs, "n_random": n_random})


def _unique_points(pairs):
    allp = np.concatenate([pairs.x, pairs.y])
    uniq, inv = np.unique(allp, axis=0, return_inverse=True)
    inv = inv.ravel()
    return uniq, inv[: len(pairs)], inv[len(pairs):]


def hlog_norm(mod: Modulus, alpha: float, delta0: float = DEFAULT_DELTA0) -> float:
    """``[g]_{alpha;delta0} + sup|g|`` from one modulus table."""
    return hlog_seminorm(mod, alpha, delta0)[0] + mod.sup_abs


def klg_experiment(
    alpha: float,
    kernels,
    fields: dict | None = None,
    R: float = 0.25,
    quad: QuadConfig | None = None,
    levels=(0, 1),
    budget: int = 128,
    seed: int = 0,
    delta0: float = DEFAULT_DELTA0,
    pairs: PairSet | None = None,
) -> dict:
    """Ratio ``||K * phi||_{alpha-1;delta0} / ||phi||_{alpha;delta0}`` per kernel and charge,
    at each quadrature refinement level."""
    if not alpha > 1:
        raise ParameterError("the KLG bound needs alpha > 1")
    if not 0 < R < 0.5:
        raise ParameterError("R must lie in (0, 1/2)")
    quad = quad or QuadConfig()
    n = kernels[0].dimension
    fields = klg_fields(alpha, R, n) if fields is None else fields
    pairs = pairs or klg_point_pairs(n, R, seed=seed)
    uniq, ix, iy = _unique_points(pairs)
    phi_ladder = dyadic_ladder(include=(delta0,))
    rows = []
    for fname, phi in fields.items():
        phi_pairs = sample_pairs(ball(n, R), phi_ladder, budget, seed, phi.singular_points)
        phi_mod = modulus_from_values(phi(phi_pairs.x), phi(phi_pairs.y), phi_pairs)
        phi_norm = hlog_norm(phi_mod, alpha, delta0)
        for level in levels:
            q = quad.refined(level, n)
            psi = pv_convolve_many(kernels, phi, uniq, q, R=R)
            for k, vals in zip(kernels, psi):
                mod = modulus_from_values(vals[ix], vals[iy], pairs)
                psi_norm = hlog_norm(mod, alpha - 1, delta0)
                rows.append(
                    {
                        "alpha": alpha,
                        "field": fname,
                        "kernel": k.name,
                        "level": level,
                        "phi_norm": phi_norm,
                        "psi_norm": psi_norm,
                        "psi_sup": mod.sup_abs,
                        "ratio": psi_norm / phi_norm if phi_norm > 0 else 0.0,
                    }
                )
    return {"alpha": alpha, "R": R, "delta0": delta0, "levels": list(levels), "quad": quad.to_dict(),
            "n_points": len(uniq), "rows": rows, "stability": klg_stability(rows)}


def klg_stability(rows) -> list:
    """Relative change of each ratio between the two finest levels."""
    out = []
    keys = sorted({(r["field"], r["kernel"]) for r in rows})
    for fname, kname in keys:
        sel = sorted((r for r in rows if r["field"] == fname and r["kernel"] == kname), key=lambda r: r["level"])
        if len(sel) < 2:
            continue
        a, b = sel[-2]["ratio"], sel[-1]["ratio"]
        rel = abs(b - a) / max(abs(b), 1e-300) if (a or b) else 0.0
        out.append({"field": fname, "kernel": kname, "coarse": a, "fine": b, "rel_change": rel})
    return out


def klg_alpha_sweep(alphas, kernel: SingularKernel, field_name="forcing", R=0.25, quad=None, level=0,
                    budget=128, seed=0) -> dict:
    """KLG ratio of one charge family across exponents, with ``(alpha-1) * ratio``."""
    rows = []
    for a in alphas:
        fields = {field_name: klg_fields(a, R, kernel.dimension)[field_name]}
        rep = klg_experiment(a, [kernel], fields, R, quad, (level,), budget, seed)
        r = rep["rows"][0]
        rows.append({"alpha": a, "ratio": r["ratio"], "scaled": (a - 1) * r["ratio"],
                     "phi_norm": r["phi_norm"], "psi_norm": r["psi_norm"]})
    ratios = [r["ratio"] for r in rows]
    return {
        "field": field_name,
        "kernel": kernel.name,
        "rows": rows,
        "monotone_decreasing": bool(np.all(np.diff(ratios) < 0)),
    }


# ---------------------------------------------------------------------------
# interior estimate


def cutoff_norm_bound(R: float, alpha: float) -> float:
    """``||theta||_H(2) (1 + 1/R + 1/R^2 + R^-(2+alpha))`` with generic constant 1."""
    H2 = theta_holder_norms(min(alpha, 1.0))["H2"]
    return H2 * (1 + 1 / R + R**-2 + R ** -(2 + alpha))


def _component_norms(values_x, values_y, pairs, alpha, delta0):
    """Per-component ``sup + [.]_{alpha;delta0}``; returns the max and each entry."""
    vx = values_x.reshape(len(pairs), -1)
    vy = values_y.reshape(len(pairs), -1)
    norms = [hlog_norm(modulus_from_values(vx[:, c], vy[:, c], pairs), alpha, delta0) for c in range(vx.shape[1])]
    return max(norms), norms


def cutoff_direct_norm(R, n, alpha, budget=128, seed=0, delta0=DEFAULT_DELTA0) -> float:
    """``||zeta||_{2,alpha;2R}`` = sup norms up to order 2 plus max ``[d_i d_j zeta]_{alpha;delta0}``."""
    zeta = build_cutoff(CutoffSpec(R), n)
    pairs = sample_pairs(zeta.domain, dyadic_ladder(include=(delta0,)), budget, seed, zeta.singular_points)
    sup0 = float(np.max(np.abs(zeta(np.concatenate([pairs.x, pairs.y])))))
    g = np.concatenate([zeta.grad(pairs.x), zeta.grad(pairs.y)])
    sup1 = float(np.max(np.abs(g)))
    hx, hy = zeta.hess(pairs.x), zeta.hess(pairs.y)
    semis = []
    for c in range(n * n):
        mod = modulus_from_values(hx.reshape(-1, n * n)[:, c], hy.reshape(-1, n * n)[:, c], pairs)
        semis.append(hlog_seminorm(mod, alpha, delta0)[0])
    sup2 = float(max(np.max(np.abs(hx)), np.max(np.abs(hy))))
    return sup0 + sup1 + sup2 + max(semis)


def interior_estimate_experiment(
    op: EllipticOperator,
    u: ScalarField,
    alpha: float,
    R: float,
    budget: int = 128,
    seed: int = 0,
    delta0: float = DEFAULT_DELTA0,
    C: float = 1.0,
    fit_window=(1e-8, 1e-3),
) -> dict:
    """``||grad^2 u||_{alpha-1;R}`` against ``C_theta(R) (||Lu||_{alpha;2R} + C ||u||_{1,alpha;2R})``."""
    if u.hessian is None:
        raise PreconditionError(f"field {u.label!r} has no analytic hessian")
    if not 0 < R < 0.5:
        raise ParameterError("R must lie in (0, 1/2)")
    if not alpha > 1:
        raise ParameterError("alpha must exceed 1")
    n = op.n
    if u.dimension != n:
        raise ParameterError("field and operator dimensions differ")
    ladder = dyadic_ladder(include=(delta0,))

    inner = with_domain(u, ball(n, R))
    p_in = sample_pairs(inner.domain, ladder, budget, seed, u.singular_points)
    lhs, hess_norms = _component_norms(u.hess(p_in.x), u.hess(p_in.y), p_in, alpha - 1, delta0)

    outer = with_domain(u, ball(n, 2 * R))
    p_out = sample_pairs(outer.domain, ladder, budget, seed, u.singular_points)
    Lu = op.apply(outer)
    lu_norm = hlog_norm(modulus_from_values(Lu(p_out.x), Lu(p_out.y), p_out), alpha, delta0)
    ux, uy = u(p_out.x), u(p_out.y)
    gx, gy = u.grad(p_out.x), u.grad(p_out.y)
    grad_norm, _ = _component_norms(gx, gy, p_out, alpha, delta0)
    sup_u = float(max(np.max(np.abs(ux)), np.max(np.abs(uy))))
    u1 = sup_u + grad_norm

    c_theta = cutoff_norm_bound(R, alpha)
    rhs = c_theta * (lu_norm + C * u1)

    # commutator: L(zeta u) = zeta L u + u L zeta + 2 sum a_ij d_i zeta d_j u
    zeta = with_domain(build_cutoff(CutoffSpec(R), n), outer.domain)
    phi = product_field(zeta, outer)
    pts = np.concatenate([p_out.x[::7], p_out.y[::7]])
    a = op.a
    N = u(pts) * np.einsum("ij,...ij->...", a, zeta.hess(pts)) + 2 * np.einsum(
        "ij,...i,...j->...", a, zeta.grad(pts), u.grad(pts)
    )
    Lphi = np.einsum("ij,...ij->...", a, phi.hess(pts))
    commutator_err = float(np.max(np.abs(Lphi - zeta(pts) * op.apply(outer)(pts) - N)))

    report = {
        "field": u.label,
        "operator": op.name,
        "alpha": alpha,
        "R": R,
        "lhs": lhs,
        "hess_component_norms": hess_norms,
        "lu_norm": lu_norm,
        "u_1alpha_norm": u1,
        "C": C,
        "c_theta": c_theta,
        "rhs": rhs,
        "ratio": lhs / rhs,
        "holds": bool(lhs <= rhs),
        "zeta_direct_norm": cutoff_direct_norm(R, n, alpha, budget, seed, delta0),
        "commutator_max_error": commutator_err,
    }
    if u.singular_points:
        report["mixed_exponent_fit"] = _origin_fit(u, 0, 1, fit_window)
    return report


def cutoff_slope(alpha: float, radii=None, n: int = 3, budget: int = 128, seed: int = 0) -> dict:
    """Fitted slopes of ``log ||zeta||`` (measured) and ``log C_theta(R)`` against ``log R``."""
    radii = np.geomspace(0.02, 0.2, 6) if radii is None else np.asarray(radii, float)
    direct = np.array([cutoff_direct_norm(R, n, alpha, budget, seed) for R in radii])
    bound = np.array([cutoff_norm_bound(R, alpha) for R in radii])
    lr = np.log(radii)
    return {
        "alpha": alpha,
        "radii": radii.tolist(),
        "direct": direct.tolist(),
        "bound": bound.tolist(),
        "direct_slope": float(np.polyfit(lr, np.log(direct), 1)[0]),
        "bound_slope": float(np.polyfit(lr, np.log(bound), 1)[0]),
        "target_slope": -(2 + alpha),
        "bound_dominates": bool(np.all(bound >= direct)),
    }


# ---------------------------------------------------------------------------
# optimality of the exponent loss


def origin_modulus(g: ScalarField, ladder, n_dirs: int = 64) -> Modulus:
    """Modulus from origin-anchored pairs ``(0, r d)`` over fixed directions."""
    n = g.dimension
    radii = check_ladder(ladder)
    d = fixed_directions(n, n_dirs)
    pts = radii[:, None, None] * d[None, :, :]
    v0 = float(g(np.zeros(n)))
    vals = np.abs(g(pts) - v0)
    shell = vals.max(axis=1)
    return Modulus(radii, np.maximum.accumulate(shell), shell, float(max(abs(v0), np.max(np.abs(g(pts))))),
                   {"anchor": "origin", "n_dirs": n_dirs})


def _origin_fit(u, i, j, window, per_decade=8, n_dirs=64):
    lad = log_ladder(window[0], window[1], per_decade)
    return fit_log_exponent(origin_modulus(hessian_component(u, i, j), lad, n_dirs), window).to_dict()


def optimality_experiment(
    alpha: float,
    n: int = 2,
    window=(1e-8, 1e-3),
    per_decade: int = 8,
    n_dirs: int = 64,
    beta: float | None = None,
    deltas=(1e-2, 1e-4, 1e-6, 1e-8),
    band: float = 0.15,
) -> dict:
    """Exponent fits for the counterexample's second derivatives near the origin.

    The restricted seminorm at ``beta`` uses the ladder radii in ``[delta0, 1/9]``:
    it is the value a table resolved down to ``delta0`` reports.
    """
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    beta = alpha + 0.5 if beta is None else beta
    u = counterexample_field(alpha, n)
    lap = laplacian(n).apply(u)
    fit_ladder = log_ladder(window[0], window[1], per_decade)
    fits = {
        "d1d1": fit_log_exponent(origin_modulus(hessian_component(u, 0, 0), fit_ladder, n_dirs), window),
        "forcing": fit_log_exponent(origin_modulus(lap, fit_ladder, n_dirs), window),
        "d1d2": fit_log_exponent(origin_modulus(hessian_component(u, 0, 1), fit_ladder, n_dirs), window),
    }
    expected = {"d1d1": alpha + 1, "forcing": alpha + 1, "d1d2": alpha}
    in_band = {k: bool(abs(fits[k].alpha_hat - expected[k]) <= band) for k in fits}

    lo = min(deltas)
    sem_ladder = log_ladder(lo, DEFAULT_DELTA0, per_decade, include=deltas)
    mixed = origin_modulus(hessian_component(u, 0, 1), sem_ladder, n_dirs)
    weighted = mixed.values * (-np.log(mixed.radii)) ** beta
    growth = []
    for d0 in sorted(deltas, reverse=True):
        sel = mixed.radii >= d0 * (1 - 1e-12)
        growth.append({"delta0": d0, "seminorm": float(np.max(weighted[sel])),
                       "rate": (-math.log(d0)) ** (beta - alpha)})
    sem = [g["seminorm"] for g in growth]
    lap_sem = origin_modulus(lap, sem_ladder, n_dirs)
    return {
        "alpha": alpha,
        "n": n,
        "window": list(window),
        "fits": {k: v.to_dict() for k, v in fits.items()},
        "expected": expected,
        "band": band,
        "in_band": in_band,
        "beta": beta,
        "mixed_seminorm_growth": growth,
        "mixed_diverges": bool(np.all(np.diff(sem) > 0)),
        "forcing_seminorm": float(np.max(lap_sem.values * (-np.log(lap_sem.radii)) ** (alpha + 1))),
    }
