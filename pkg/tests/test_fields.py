import json

import numpy as np
import pytest

from hlog.errors import ParameterError, PreconditionError
from hlog.fields import (
    CutoffSpec,
    DomainSpec,
    annulus,
    ball,
    box,
    build_cutoff,
    corpus,
    corpus_names,
    counterexample_field,
    field_from_record,
    hessian_component,
    product_field,
    smoothstep,
    theta,
    theta_holder_norms,
    with_domain,
)

# high-precision evaluation of the closed form at (0.1, 0.1), alpha = 1
CE_VALUE_01 = 0.010224888745413258


def fd_gradient(f, x, h):
    n = len(x)
    return np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(n)])


def fd_hessian(f, x, h):
    n = len(x)
    E = np.eye(n) * h
    H = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        H[i, i] = (f(x + E[i]) - 2 * f0 + f(x - E[i])) / h**2
        for j in range(i + 1, n):
            H[i, j] = H[j, i] = (
                f(x + E[i] + E[j]) - f(x + E[i] - E[j]) - f(x - E[i] + E[j]) + f(x - E[i] - E[j])
            ) / (4 * h * h)
    return H


class TestDomain:
    def test_rejects_bad_parameters(self):
        with pytest.raises(ParameterError):
            DomainSpec("ball", 1, radius=1.0)
        with pytest.raises(ParameterError):
            ball(2, -1.0)
        with pytest.raises(ParameterError):
            annulus(2, 0.5, 0.4)
        with pytest.raises(ParameterError):
            DomainSpec("sphere", 2)

    @pytest.mark.parametrize("dom", [ball(2), ball(3, 0.4), box([0, 0], [1, 2]), annulus(3, 0.2, 0.6)])
    def test_cube_map_lands_inside(self, dom):
        u = np.random.default_rng(1).uniform(size=(500, dom.dimension + 1))
        assert np.all(dom.contains(dom.from_unit_cube(u)))
        assert np.all(dom.contains(dom.boundary_points(u)))

    def test_record(self):
        assert box([0, 0], [1, 1]).to_record() == {"kind": "box", "dimension": 2, "lower": [0, 0], "upper": [1, 1]}
        assert ball(3).to_record() == {"kind": "unit-ball", "dimension": 3, "radius": 1.0}


class TestCounterexample:
    def test_value_matches_high_precision(self):
        u = counterexample_field(1.0, 2)
        assert u([0.1, 0.1]) == pytest.approx(CE_VALUE_01, rel=1e-14)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.5])
    def test_vanishes_on_axes(self, alpha):
        u = counterexample_field(alpha, 2)
        pts = np.array([[0.3, 0.0], [0.0, -0.2], [1e-9, 0.0]])
        assert np.all(u(pts) == 0.0)

    def test_origin_clamped(self):
        u = counterexample_field(1.0, 3)
        z = np.zeros(3)
        assert u(z) == 0.0
        assert np.all(u.grad(z) == 0.0)
        assert np.all(u.hess(z) == 0.0)

    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
    def test_hessian_matches_finite_differences(self, alpha, n):
        u = counterexample_field(alpha, n)
        rng = np.random.default_rng(7)
        for _ in range(6):
            x = rng.uniform(-0.3, 0.3, n)
            if np.linalg.norm(x) < 0.05:
                continue
            H = u.hess(x)
            Hfd = fd_hessian(u, x, 1e-5)
            assert np.max(np.abs(H - Hfd)) <= 1e-6 * np.max(np.abs(H))
            g = u.grad(x)
            assert np.allclose(g, fd_gradient(u, x, 1e-6), rtol=1e-7, atol=1e-12)

    def test_leading_terms(self):
        # along the diagonal direction the mixed derivative behaves like 2 L^-alpha
        alpha = 1.5
        u = counterexample_field(alpha, 2)
        for s in (1e-6, 1e-10, 1e-14):
            x = s * np.array([1.0, 0.0])
            L = -np.log(s)
            h12 = u.hess(x)[0, 1]
            assert h12 / (2 * L**-alpha) == pytest.approx(1 + alpha / L, rel=1e-10)

    def test_rejects_alpha(self):
        with pytest.raises(ParameterError):
            counterexample_field(0.0)


class TestCutoff:
    def test_plateaus(self):
        z = build_cutoff(CutoffSpec(0.2), 2)
        assert z([0.1, 0.0]) == 1.0
        assert z([0.0, 0.45]) == 0.0
        assert z([0.3, 0.0]) == pytest.approx(0.5, abs=1e-15)
        assert theta(0.5) == pytest.approx(0.5, abs=1e-15)

    def test_radially_nonincreasing(self):
        z = build_cutoff(CutoffSpec(0.15), 3)
        s = np.linspace(0.15, 0.3, 2001)
        v = z(np.column_stack([s, 0 * s, 0 * s]))
        assert np.all(np.diff(v) <= 0)

    @pytest.mark.parametrize("R", [0.0, 0.5, 0.7, -0.1])
    def test_rejects_radius(self, R):
        with pytest.raises(ParameterError):
            CutoffSpec(R)

    def test_derivatives(self):
        z = build_cutoff(CutoffSpec(0.2), 3)
        for x in ([0.25, 0.05, 0.0], [0.1, 0.2, -0.1], [0.0, 0.0, 0.3]):
            x = np.array(x)
            assert np.allclose(z.hess(x), fd_hessian(z, x, 1e-4), atol=1e-5 * max(1, np.abs(z.hess(x)).max()))

    def test_smoothstep_derivatives(self):
        s = np.linspace(0.05, 0.95, 19)
        h = 1e-6
        for k in range(3):
            fd = (smoothstep(s + h, k) - smoothstep(s - h, k)) / (2 * h)
            assert np.allclose(smoothstep(s, k + 1), fd, rtol=1e-5, atol=1e-6)

    def test_holder_norms(self):
        norms = theta_holder_norms(1.0)
        assert norms["sup"] == pytest.approx(1.0)
        assert norms["H2"] == pytest.approx(norms["sup"] + norms["sup_d1"] + norms["sup_d2"] + norms["holder_d2"])
        assert theta_holder_norms(3.0)["holder_exponent"] == 1.0


class TestCorpus:
    def test_entries(self):
        assert corpus("const-5")(np.zeros((4, 2))).tolist() == [5.0] * 4
        assert corpus("linear-x1")([0.3, -0.2]) == 0.3
        f = corpus("hlog-alpha-2")
        assert f.domain.radius == 0.5
        assert f([np.exp(-4), 0.0]) == pytest.approx(1 / 16)

    def test_unknown(self):
        with pytest.raises(KeyError):
            corpus("nope")

    @pytest.mark.parametrize("name", corpus_names())
    def test_every_entry_documents_its_modulus(self, name):
        f = corpus(name)
        assert f.modulus_note
        pts = f.domain.from_unit_cube(np.random.default_rng(0).uniform(size=(64, f.dimension + 1)))
        assert np.all(np.isfinite(f(pts)))

    @pytest.mark.parametrize("name", [n for n in corpus_names() if corpus(n).gradient is not None])
    def test_gradient_second_order(self, name):
        f = corpus(name)
        rng = np.random.default_rng(3)
        x = f.domain.from_unit_cube(rng.uniform(size=(1, f.dimension + 1)))[0] * 0.8
        x = x + 0.05 * np.sign(x + 1e-3)  # keep away from the origin kink
        if not f.domain.contains(x):
            x = 0.5 * x
        g = f.grad(x)
        errs = [np.max(np.abs(fd_gradient(f, x, h) - g)) for h in (1e-2, 5e-3)]
        if errs[0] > 1e-9:
            assert errs[1] / errs[0] == pytest.approx(0.25, abs=0.05)

    def test_records_roundtrip(self):
        for name in ("hlog-alpha-2", "counterexample-1-3d", "smooth-bump"):
            rec = json.loads(json.dumps(corpus(name).to_record()))
            g = field_from_record(rec)
            x = np.array([[0.1, 0.2, 0.05][: g.dimension]])
            assert g(x) == corpus(name)(x)
        rec = counterexample_field(1.5, 3).to_record()
        assert field_from_record(rec).parameters == {"alpha": 1.5, "n": 3, "radius": 0.5}

    def test_missing_hessian(self):
        with pytest.raises(PreconditionError):
            hessian_component(corpus("abs-x"), 0, 0)

    def test_product_rule(self):
        f = with_domain(corpus("counterexample-1-3d"), ball(3, 0.4))
        z = with_domain(build_cutoff(CutoffSpec(0.2), 3), ball(3, 0.4))
        p = product_field(f, z)
        x = np.array([0.21, 0.1, -0.05])
        assert np.allclose(p.hess(x), fd_hessian(p, x, 1e-5), atol=1e-5)
