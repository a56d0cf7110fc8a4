"""Fundamental matrix, spectrum classification, subprincipal symbol."""
import numpy as np
import pytest
import scipy.linalg

from triplechar import (
    EFFECTIVELY_HYPERBOLIC,
    NOT_EFFECTIVELY_HYPERBOLIC,
    FullSymbol,
    PhasePoint,
    check_necessary_conditions,
    classify_spectrum,
    critical_points_on_t0,
    fundamental_matrix,
    laplacian_operator,
    monomial_symbol,
    random_model_operator,
    subprincipal_symbol,
)
from triplechar.errors import IllConditionedWarning, NotCritical
from triplechar.geometry import FundamentalMatrix, symplectic_matrix
from triplechar.operators import quartic_degenerate_symbol, saddle_check_symbol


def phase(t, x, tau, xi):
    return PhasePoint(np.concatenate([[t], np.atleast_1d(x)]), np.concatenate([[tau], np.atleast_1d(xi)]))


class TestCriticalPoints:
    def test_model_operator_t0_slice_all_critical(self, generic_op):
        p = generic_op.principal_symbol()
        dirs = [np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([0.6, 0.8])]
        xs = [np.zeros(2), np.array([0.5, -0.5])]
        points = critical_points_on_t0(p, xs, dirs)
        assert len(points) == len(dirs) * len(xs)

    def test_strictly_hyperbolic_empty(self):
        # tau^2 - xi^2 with t-independent simple roots: dp != 0 on p = 0
        p = monomial_symbol(1, 1.0, tau=2) + monomial_symbol(1, -1.0, xi=(2,))
        assert critical_points_on_t0(p, [np.zeros(1)], [np.array([1.0])]) == []

    def test_saddle_symbol_hand_gradient(self):
        # p = tau^2 - t^2 xi^2: dp = (2tau, -2t xi^2, 0, -2t^2 xi)
        p = saddle_check_symbol()
        z = phase(0.0, 0.7, 0.0, 1.0)
        assert np.allclose(p.gradient(z.coords), 0.0)
        points = critical_points_on_t0(p, [np.array([0.7])], [np.array([1.0])])
        assert len(points) == 1


class TestFundamentalMatrix:
    def test_saddle_entries_and_spectrum(self):
        p = saddle_check_symbol()
        z = phase(0.0, 0.3, 0.0, 1.0)
        f = fundamental_matrix(p, z)
        # only nonzero Hessian entries: p_tautau = 2, p_tt = -2
        hess = f.hessian
        assert hess[2, 2] == pytest.approx(2.0)  # (tau, tau)
        assert hess[0, 0] == pytest.approx(-2.0)  # (t, t)
        assert np.count_nonzero(np.abs(hess) > 1e-14) == 2
        rep = classify_spectrum(f)
        assert np.allclose(np.sort(rep.eigenvalues.real), [-2, 0, 0, 2], atol=1e-10)
        assert np.allclose(rep.eigenvalues.imag, 0.0, atol=1e-10)
        assert rep.verdict == EFFECTIVELY_HYPERBOLIC

    def test_model_operator_tau_t_entry_is_minus_a2(self, generic_op):
        p = generic_op.principal_symbol()
        x = np.array([0.2, -0.4])
        xi = np.array([0.6, 0.8])
        z = phase(0.0, x, 0.0, xi)
        f = fundamental_matrix(p, z)
        a2v = generic_op.a2(0.0, x, xi)
        # Hessian ordering (t, x1, x2, tau, xi1, xi2): (tau, t) entry
        assert f.hessian[3, 0] == pytest.approx(-a2v, rel=1e-12)
        rep = classify_spectrum(f)
        assert rep.verdict == EFFECTIVELY_HYPERBOLIC
        assert rep.real_pair[0] == pytest.approx(a2v, rel=1e-9)

    def test_not_critical_raises(self):
        p = saddle_check_symbol()
        with pytest.raises(NotCritical):
            fundamental_matrix(p, phase(0.5, 0.0, 0.4, 1.0))

    def test_scaling_covariance(self, generic_op):
        p = generic_op.principal_symbol()
        z = phase(0.0, np.array([0.1, 0.1]), 0.0, np.array([1.0, 0.5]))
        f1 = fundamental_matrix(p, z)
        f3 = fundamental_matrix(p * 3.0, z)
        assert np.allclose(f3.entries, 3.0 * f1.entries, rtol=1e-12)
        assert classify_spectrum(f3).verdict == classify_spectrum(f1).verdict

    def test_hamiltonian_structure(self, generic_op):
        f = fundamental_matrix(
            generic_op.principal_symbol(), phase(0.0, np.array([0.3, 0.0]), 0.0, np.array([0.0, 2.0]))
        )
        assert f.hamiltonian_residual() < 1e-14
        m = f.entries.shape[0] // 2
        jf = symplectic_matrix(m) @ f.entries
        assert np.allclose(jf, jf.T)

    def test_closed_form_vs_finite_difference_hessian(self, generic_op):
        p = generic_op.principal_symbol()
        z = np.array([0.15, 0.3, -0.2, 0.05, 1.0, 0.7])
        exact = p.hessian(z)
        fd = p.hessian_fd(z)
        scale = max(1.0, np.abs(exact).max())
        assert np.max(np.abs(exact - fd)) / scale < 1e-6


class TestClassifySpectrum:
    def test_quartic_degeneracy_not_effective(self):
        p = quartic_degenerate_symbol()
        z = phase(0.0, 0.0, 0.0, 1.0)
        with pytest.warns(IllConditionedWarning):
            rep = classify_spectrum(fundamental_matrix(p, z))
        assert rep.verdict == NOT_EFFECTIVELY_HYPERBOLIC
        assert rep.ill_conditioned  # defective zero block: flagged, not fatal
        assert np.all(np.abs(rep.eigenvalues.real) <= 1e-8 * np.linalg.norm(rep.residuals["norm"]))

    def test_zero_matrix(self):
        f = FundamentalMatrix(entries=np.zeros((4, 4)), basepoint=phase(0, 0, 0, 1), hessian=np.zeros((4, 4)))
        rep = classify_spectrum(f)
        assert rep.verdict == NOT_EFFECTIVELY_HYPERBOLIC
        assert np.all(rep.eigenvalues == 0)

    def test_quadruple_symmetry_residual(self):
        for k in range(20):
            op = random_model_operator(np.random.default_rng(300 + k), n=2)
            f = fundamental_matrix(
                op.principal_symbol(), phase(0.0, np.array([0.1, -0.1]), 0.0, np.array([0.8, 0.6]))
            )
            rep = classify_spectrum(f)
            assert rep.residuals["symmetry"] < 1e-9
            assert rep.verdict == EFFECTIVELY_HYPERBOLIC  # -a2 < 0 criterion

    def test_linear_symplectic_invariance(self, generic_op, rng):
        # eigenvalues of J H are invariant under H -> S^T H S for symplectic S
        p = generic_op.principal_symbol()
        z = phase(0.0, np.array([0.2, 0.1]), 0.0, np.array([1.0, 0.0]))
        hess = p.hessian(z.coords)
        j = symplectic_matrix(3)
        eigs = np.sort_complex(np.linalg.eigvals(j @ hess))
        for _ in range(5):
            sym = rng.normal(size=(6, 6))
            sym = (sym + sym.T) / 2
            s = scipy.linalg.expm(j @ sym * 0.3)
            assert np.allclose(s.T @ j @ s, j, atol=1e-10)
            transformed = np.sort_complex(np.linalg.eigvals(j @ (s.T @ hess @ s)))
            assert np.max(np.abs(transformed - eigs)) < 1e-8 * max(1.0, np.abs(eigs).max())


class TestSubprincipal:
    def test_x_independent_with_quadratic_lower_term(self):
        # b = beta |xi|^2, B1 = 0: spatial mixed trace vanishes, the (t, tau)
        # pair contributes -a2, so p' = beta |xi|^2 - (i/2) a2(xi)
        beta = 0.7
        op = laplacian_operator(n=2, beta=beta)
        z = phase(0.0, np.array([0.4, 0.1]), 0.0, np.array([0.6, 0.8]))
        sub = subprincipal_symbol(op.full_symbol(), z)
        assert sub == pytest.approx(beta - 0.5j, rel=1e-12)

    def test_spatial_trace_vanishes_at_t0_for_x_dependent_a2(self):
        # every mixed d^2/dx_j dxi_j of the principal part carries t or tau
        from triplechar.coeffs import CoefficientSpec, CoeffTerm, XTerm

        a2 = CoefficientSpec(2, 2, (CoeffTerm((2, 0), (1.0,), (XTerm(1.0, (0, 0)), XTerm(0.5, (1, 0)))), CoeffTerm((0, 2), (1.0,))))
        from triplechar import ModelOperator

        op = ModelOperator(n=2, a2=a2)
        p = op.principal_symbol()
        z = phase(0.0, np.array([0.3, 0.2]), 0.0, np.array([1.0, 1.0]))
        m = 3
        spatial = sum(p.derivative(j).derivative(m + j).at(z.coords) for j in range(1, m))
        assert spatial == pytest.approx(0.0, abs=1e-14)
        # the full trace is then exactly the (t, tau) term, -a2(0, x, xi)
        assert p.mixed_trace(z.coords) == pytest.approx(-op.a2(0.0, z.x[1:], z.xi[1:]), rel=1e-12)

    def test_model_operator_imaginary_part(self, generic_op):
        # real b: Im p' = -a2/2 at the critical points (trace term only)
        z = phase(0.0, np.zeros(2), 0.0, np.array([1.0, 0.0]))
        sub = subprincipal_symbol(generic_op.full_symbol(), z)
        assert sub.imag == pytest.approx(-0.5 * generic_op.a2(0.0, np.zeros(2), z.xi[1:]), rel=1e-12)

    def test_off_critical_raises(self, generic_op):
        with pytest.raises(NotCritical):
            subprincipal_symbol(generic_op.full_symbol(), phase(0.4, np.zeros(2), 0.2, np.array([1.0, 0.0])))


class TestNecessaryConditions:
    def test_effectively_hyperbolic_vacuous(self, generic_op):
        rep = check_necessary_conditions(
            generic_op.full_symbol(), phase(0.0, np.zeros(2), 0.0, np.array([0.0, 1.5]))
        )
        assert rep.vacuous and rep.verdict == "ConditionsVacuous"

    def test_quartic_with_first_order_term_fails_quarter_sum(self):
        # p = tau^2 - t^4 xi^2, lower term b1 * xi (b1 real, nonzero):
        # spectrum is nilpotent (all zero), Im p' = 0 passes, and the
        # quarter-sum bound |Re p'| <= 0 fails.
        p = quartic_degenerate_symbol()
        lower = monomial_symbol(1, 0.8, xi=(1,))
        full = FullSymbol(2, p, lower)
        with pytest.warns(IllConditionedWarning):
            rep = check_necessary_conditions(full, phase(0.0, 0.0, 0.0, 1.0))
        assert not rep.vacuous
        assert rep.im_ok
        assert rep.quarter_sum == pytest.approx(0.0, abs=1e-9)
        assert not rep.re_ok
        assert rep.verdict == "Fail"

    def test_zero_lower_terms_pass(self):
        p = quartic_degenerate_symbol()
        full = FullSymbol(2, p, monomial_symbol(1, 0.0))
        with pytest.warns(IllConditionedWarning):
            rep = check_necessary_conditions(full, phase(0.0, 0.0, 0.0, 1.0))
        assert not rep.vacuous
        assert rep.im_ok and rep.re_ok and rep.verdict == "Pass"
