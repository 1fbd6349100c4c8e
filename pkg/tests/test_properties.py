import math
from functools import lru_cache

import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st

from hlog.elliptic import EllipticOperator, fundamental_solution
from hlog.fields import ball, corpus, scaled_field, sum_field, with_domain
from hlog.moduli import (
    Modulus,
    dini_seminorm,
    dyadic_ladder,
    extend,
    fit_log_exponent,
    hlog_full,
    hlog_seminorm,
    interpolation_bound,
    log_ladder,
    modulus_from_pairs,
    sample_pairs,
)
from hlog.singular import dezer_ratio, get_kernel, radial_log_integral, radial_quadrature

UNIT_DISC = ["abs-x", "linear-x1", "quadratic", "smooth-bump", "wave", "holder-0.5"]
names = st.sampled_from(UNIT_DISC)
alphas = st.floats(0.25, 4.0)
scales = st.floats(-50, 50, allow_nan=False).filter(lambda c: abs(c) > 1e-6)


@lru_cache(maxsize=None)
def disc_pairs(budget=24, seed=0):
    return sample_pairs(ball(2), dyadic_ladder(30), budget, seed, [(0.0, 0.0)])


def mod(f, budget=24, seed=0):
    return modulus_from_pairs(f, disc_pairs(budget, seed))


@given(names, scales, alphas)
def test_absolute_homogeneity(name, c, alpha):
    f = corpus(name)
    a = hlog_full(mod(scaled_field(f, c)), alpha)
    assert math.isclose(a, abs(c) * hlog_full(mod(f), alpha), rel_tol=1e-12, abs_tol=1e-300)


@given(names, names, alphas)
def test_triangle_inequality(a, b, alpha):
    f, g = corpus(a), corpus(b)
    lhs = hlog_full(mod(sum_field(f, g)), alpha)
    assert lhs <= (hlog_full(mod(f), alpha) + hlog_full(mod(g), alpha)) * (1 + 1e-12)


@given(names, alphas, st.sampled_from([1e-3, 1e-2, 1 / 9]))
def test_sandwich(name, alpha, delta0):
    m = modulus_from_pairs(corpus(name), sample_pairs(ball(2), dyadic_ladder(30, (delta0,)), 24, 0, [(0.0, 0.0)]))
    restricted, upper = hlog_seminorm(m, alpha, delta0)
    assert restricted <= hlog_full(m, alpha) <= upper


@given(names, st.floats(0.2, 4.0), st.floats(0.05, 0.95))
def test_interpolation(name, alpha, frac):
    lhs, rhs = interpolation_bound(mod(corpus(name)), alpha, frac * alpha)
    assert lhs <= rhs * (1 + 1e-12)


@given(names, st.integers(0, 3), st.integers(1, 3))
def test_budget_monotone(name, seed, factor):
    f = corpus(name)
    small, big = mod(f, 8, seed), mod(f, 8 * 2**factor, seed)
    assert np.all(small.values <= big.values)


@given(names, st.integers(0, 5))
def test_modulus_nondecreasing(name, seed):
    m = mod(corpus(name), 16, seed)
    assert np.all(np.diff(m.values) >= 0)


@given(st.lists(st.floats(0.1, 10), min_size=3, max_size=3), st.floats(-0.3, 0.3))
def test_cofactor_identity(diag, off):
    a = np.diag(diag)
    a[0, 1] = a[1, 0] = off * min(diag[0], diag[1])
    op = EllipticOperator(a)
    assert np.allclose(op.cofactors @ op.a, op.det * np.eye(3), atol=1e-9 * op.det)


@given(st.lists(st.floats(0.2, 5), min_size=3, max_size=3), st.floats(0.1, 10))
def test_fundamental_solution_homogeneity(diag, t):
    fs = fundamental_solution(EllipticOperator(np.diag(diag)), calibrate=False)
    x = np.array([0.3, -0.4, 0.2])
    assert math.isclose(fs(t * x), fs(x) / t, rel_tol=1e-12)


@given(st.sampled_from(["d1d2-3d", "one-minus-3d1sq-3d", "laplace-12-3d", "d1d2-2d"]), scales, st.floats(0.01, 100))
def test_kernel_scaling(name, c, t):
    k = get_kernel(name)
    x = np.array([0.3, -0.2, 0.5][: k.dimension])
    assert math.isclose(k.scaled(c)(x), c * k(x), rel_tol=1e-12, abs_tol=1e-300)
    assert math.isclose(k(t * x), k(x) / t**k.dimension, rel_tol=1e-12)


@given(st.floats(0.5, 4.0), st.floats(1e-12, 1e-2), st.floats(1.5, 1e6))
def test_radial_closed_form(alpha, r1, span):
    r2 = min(r1 * span, 0.5)
    assume(r2 > r1)
    num = radial_quadrature(lambda r: (-np.log(r)) ** -alpha, r1, r2)
    assert math.isclose(num, radial_log_integral(alpha, r1, r2), rel_tol=1e-6)


@given(st.floats(1.05, 3.0), st.floats(4, 30))
def test_decay_ratio_above_half(alpha, t):
    assert dezer_ratio(alpha, 10.0**-t) > 0.5


@given(st.floats(-3, 3), st.floats(-3, 3), st.lists(st.floats(-1.4, 1.4), min_size=2, max_size=2))
def test_extension_linear(a, b, x):
    f, g = corpus("wave"), corpus("quadratic")
    h = sum_field(scaled_field(f, a), scaled_field(g, b))
    x = np.asarray(x)
    assume(np.linalg.norm(x) < 1.5)
    lhs = extend(h, 0.5)(x)
    rhs = a * extend(f, 0.5)(x) + b * extend(g, 0.5)(x)
    assert math.isclose(lhs, rhs, rel_tol=1e-12, abs_tol=1e-12)


@given(st.floats(0.3, 4.0), st.floats(0.01, 100))
def test_fit_recovers_law(alpha, c):
    m = Modulus.synthetic(log_ladder(1e-9, 1e-2, 6), lambda r: c * (-np.log(r)) ** -alpha)
    fit = fit_log_exponent(m, (1e-9, 1e-2))
    assert math.isclose(fit.alpha_hat, alpha, rel_tol=1e-9)


@given(names, st.floats(1e-6, 1e-2), st.floats(1.5, 10))
def test_dini_monotone_in_delta(name, d1, factor):
    d2 = min(d1 * factor, 0.2)
    m = mod(corpus(name))
    assert dini_seminorm(m, d1)[0] <= dini_seminorm(m, d2)[0] + 1e-15


@given(st.lists(st.floats(0, 5), min_size=4, max_size=4))
def test_modulus_csv_roundtrip(vals):
    import io

    m = Modulus.synthetic([1e-4, 1e-3, 1e-2, 1e-1], lambda r: np.array(vals))
    data = np.loadtxt(io.StringIO(m.csv_text()), delimiter=",", skiprows=1)
    assert np.array_equal(data[:, 1], m.values)


def test_restricting_domain_lowers_modulus():
    f = corpus("wave")
    small = with_domain(f, ball(2, 0.5))
    lad = dyadic_ladder(20)
    a = modulus_from_pairs(f, sample_pairs(f.domain, lad, 64, 0))
    b = modulus_from_pairs(small, sample_pairs(small.domain, lad, 64, 0))
    assert hlog_full(b, 2.0) <= hlog_full(a, 2.0) * 1.05


@given(st.sampled_from(["abs-x", "linear-x1", "const-5", "holder-0.5", "hlog-alpha-1", "hlog-alpha-2"]),
       st.integers(0, 3))
def test_subadditive_on_dyadic_ladder(name, seed):
    # fields whose maximal oscillation is attained on the sampled pairs
    m = modulus_from_pairs(corpus(name), sample_pairs(corpus(name).domain, dyadic_ladder(40, ()), 32, seed,
                                                      corpus(name).singular_points))
    w = m.values
    assert np.all(w[1:] <= 2 * w[:-1] + 1e-12)
