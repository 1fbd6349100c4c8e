import math

import numpy as np
import pytest

from hlog.errors import ParameterError, PreconditionError, UnsupportedDimensionError
from hlog.fields import corpus, counterexample_field, scaled_field, smooth_bump, sum_field
from hlog.quadrature import QuadConfig
from hlog.elliptic import (
    EllipticOperator,
    closed_form_constant,
    cutoff_norm_bound,
    diagonal_operator,
    fundamental_solution,
    interior_estimate_experiment,
    klg_experiment,
    klg_fields,
    klg_point_pairs,
    laplacian,
    local_term_trace,
    operator_from_record,
    optimality_experiment,
    potential_apply,
    potential_roundtrip,
    second_derivative_fd,
    second_derivative_kernels,
)
from hlog.singular import get_kernel

# int phi over R^3 for the bump with rho = 1/2, by adaptive radial quadrature
BUMP_MASS = 0.14987548837739997


@pytest.fixture(scope="module")
def fs_lap():
    return fundamental_solution(laplacian(3))


class TestOperator:
    def test_validation(self):
        with pytest.raises(ParameterError):
            EllipticOperator(np.array([[1.0, 2.0], [0.0, 1.0]]))
        with pytest.raises(ParameterError):
            EllipticOperator(np.diag([1.0, -1.0, 1.0]))
        with pytest.raises(ParameterError):
            EllipticOperator(np.ones((2, 3)))

    def test_cofactors(self):
        op = EllipticOperator(np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 3.0]]))
        assert np.allclose(op.cofactors @ op.a, op.det * np.eye(3))
        lo, hi = op.ellipticity
        assert 0 < lo <= hi

    def test_records(self):
        op = diagonal_operator([1, 1, 4])
        assert operator_from_record(op.to_record()).key() == op.key()
        assert operator_from_record("laplace-3").n == 3
        with pytest.raises(KeyError):
            operator_from_record("wave")

    def test_dimension(self):
        with pytest.raises(UnsupportedDimensionError):
            fundamental_solution(laplacian(2))


class TestFundamentalSolution:
    def test_laplace_constant(self, fs_lap):
        assert closed_form_constant(laplacian(3)) == pytest.approx(-1 / (4 * math.pi), rel=1e-15)
        assert fs_lap.c_norm == pytest.approx(-1 / (4 * math.pi), rel=1e-6)

    def test_anisotropic_constant(self):
        fs = fundamental_solution(diagonal_operator([1, 1, 4]))
        assert fs.c_norm == pytest.approx(fs.c_closed, rel=1e-5)

    def test_solves_the_operator(self):
        op = EllipticOperator(np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 3.0]]))
        fs = fundamental_solution(op, calibrate=False)
        x = np.array([0.3, -0.2, 0.4])
        assert np.einsum("ij,ij->", op.a, fs.hessian(x)) == pytest.approx(0.0, abs=1e-10)
        h = 1e-5
        fd = np.array([(fs(x + h * e) - fs(x - h * e)) / (2 * h) for e in np.eye(3)])
        assert np.allclose(fs.gradient(x), fd, rtol=1e-7)

    def test_shell_theorem(self, fs_lap):
        # outside the support the charge only fills a spherical cap around x,
        # which the product rule resolves slowly
        phi = smooth_bump(3, 0.5)
        fine = QuadConfig().refined(1)
        for x in ([0.7, 0.0, 0.0], [0.3, 0.4, 0.5], [0.55, 0.0, 0.0]):
            exact = -BUMP_MASS / (4 * math.pi * np.linalg.norm(x))
            assert potential_apply(fs_lap, phi, x) == pytest.approx(exact, rel=3e-3)
            assert potential_apply(fs_lap, phi, x, fine) == pytest.approx(exact, rel=3e-4)

    def test_needs_support(self, fs_lap):
        with pytest.raises(PreconditionError):
            potential_apply(fs_lap, corpus("quadratic-3d"), [0.0, 0.0, 0.0])

    def test_roundtrip(self, fs_lap):
        out = potential_roundtrip(fs_lap, smooth_bump(3, 0.5))
        assert out["max_rel_error"] <= 1e-2
        fine = potential_roundtrip(fs_lap, smooth_bump(3, 0.5), quad=QuadConfig().refined(1))
        assert fine["max_rel_error"] <= 1e-3


    def test_refinement_does_not_worsen_roundtrip(self, fs_lap):
        errs = [potential_roundtrip(fs_lap, smooth_bump(3, 0.5), quad=QuadConfig().refined(k))["max_abs_error"]
                for k in (0, 1, 2)]
        assert errs[0] >= errs[1] >= errs[2]

    def test_linear_in_charge(self, fs_lap):
        a, b = smooth_bump(3, 0.5), smooth_bump(3, 0.3)
        x = np.array([[0.1, 0.0, 0.2], [0.0, 0.0, 0.0]])
        both = potential_apply(fs_lap, sum_field(scaled_field(a, 2.0), scaled_field(b, -3.0)), x, R=0.5)
        parts = 2.0 * potential_apply(fs_lap, a, x) - 3.0 * potential_apply(fs_lap, b, x, R=0.5)
        assert np.allclose(both, parts, rtol=1e-10, atol=1e-14)
        assert np.all(potential_apply(fs_lap, scaled_field(a, 0.0), x) == 0.0)


class TestSecondDerivatives:
    def test_local_terms(self, fs_lap):
        ks = second_derivative_kernels(fs_lap)
        assert len(ks) == 9
        for s in ks:
            expect = 1 / 3 if s.i == s.j else 0.0
            assert s.c_ij == pytest.approx(expect, abs=1e-6)
            assert s.c_ij_reference == pytest.approx(expect, abs=1e-6)
        assert local_term_trace(fs_lap, ks) == pytest.approx(1.0, abs=1e-6)
        c = {(s.i, s.j): s.c_ij for s in ks}
        assert all(c[i, j] == c[j, i] for i, j in c)

    def test_against_finite_differences(self, fs_lap):
        phi = smooth_bump(3, 0.5)
        x = np.array([0.1, 0.05, -0.05])
        ks = second_derivative_kernels(fs_lap)
        H = second_derivative_fd(fs_lap, phi, x, quad=QuadConfig().refined(1))
        from hlog.singular import pv_convolve_many

        pv = pv_convolve_many([s.kernel for s in ks], phi, x)[:, 0]
        model = np.array([p + s.c_ij * float(phi(x)) for p, s in zip(pv, ks)]).reshape(3, 3)
        assert np.max(np.abs(H - model)) <= 2e-3


class TestKlg:
    def test_fields(self):
        f = klg_fields(2.0)
        assert set(f) == {"bump", "hlog-bump", "forcing"}
        assert all(g.support_radius <= 0.25 for g in f.values())

    def test_small_run(self):
        pairs = klg_point_pairs(per_decade=1, n_dirs=2, n_random=2)
        fields = {"bump": klg_fields(2.0)["bump"]}
        rep = klg_experiment(2.0, [get_kernel("laplace-12-3d")], fields, levels=(0, 1), budget=16, pairs=pairs)
        assert len(rep["rows"]) == 2
        assert rep["stability"][0]["rel_change"] < 1e-3
        assert 0 < rep["rows"][0]["ratio"] < 1

    def test_rejects(self):
        with pytest.raises(ParameterError):
            klg_experiment(1.0, [get_kernel("laplace-12-3d")])


class TestInterior:
    def test_quadratic(self):
        rep = interior_estimate_experiment(laplacian(3), corpus("quadratic-3d"), 2.0, 0.1, budget=32)
        assert rep["holds"] and rep["commutator_max_error"] < 1e-8

    def test_counterexample(self):
        u = counterexample_field(1.0, 3)
        rep = interior_estimate_experiment(laplacian(3), u, 2.0, 0.1, budget=32)
        assert rep["holds"]
        assert rep["mixed_exponent_fit"]["alpha_hat"] == pytest.approx(1.0, abs=0.15)

    def test_bound_scaling(self):
        # the R^-(2+alpha) term dominates for small R
        lr = np.log([1e-3, 1e-4])
        lb = np.log([cutoff_norm_bound(r, 2.0) for r in (1e-3, 1e-4)])
        assert (lb[1] - lb[0]) / (lr[1] - lr[0]) == pytest.approx(-4.0, abs=1e-3)

    def test_rejects(self):
        with pytest.raises(PreconditionError):
            interior_estimate_experiment(laplacian(3), corpus("abs-x"), 2.0, 0.1)
        with pytest.raises(ParameterError):
            interior_estimate_experiment(laplacian(3), corpus("quadratic-3d"), 2.0, 0.6)


class TestOptimality:
    def test_exponents(self):
        rep = optimality_experiment(1.0)
        assert all(rep["in_band"].values())
        assert rep["mixed_diverges"]
        assert rep["fits"]["d1d2"]["alpha_hat"] == pytest.approx(1.0, abs=0.15)

    def test_rejects(self):
        with pytest.raises(ParameterError):
            optimality_experiment(0.0)
