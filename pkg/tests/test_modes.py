"""Mode-equation assembly, manufactured solutions, sweeps."""
import numpy as np
import pytest
import scipy.integrate

from triplechar import (
    ModeProblem,
    ZERO_FORCING,
    assemble_rhs,
    integrate_mode,
    laplacian_operator,
    sweep,
)
from triplechar.coeffs import ForcingSpec, ForcingTerm
from triplechar.modes import ModeFailure


class TestAssembleRhs:
    def test_flat_coefficients(self, flat_op):
        ode = assemble_rhs(flat_op, np.array([2.0, 0.0]))
        s = 0.7
        assert ode.c2(s) == 0.0
        assert ode.c1(s) == pytest.approx(s * 4.0)  # s * a2(xi), a2 = |xi|^2 = 4
        assert ode.c0(s) == 0.0

    def test_lower_term_is_minus_i_b(self):
        beta = 3.0
        op = laplacian_operator(n=2, beta=beta)
        ode = assemble_rhs(op, np.array([1.0, 1.0]))
        # b(s, xi) = beta |xi|^2 = 6: c0 = -i b
        assert ode.c0(0.4) == pytest.approx(-6j * 1.0)

    def test_degeneracy_at_origin(self, tilted_op):
        ode = assemble_rhs(tilted_op, np.array([1.0, 0.0]))
        assert ode.c2(0.0) == 0.0
        assert ode.c1(0.0) == 0.0
        # with b = 0, c0(0) reduces to the (empty) lower term
        assert ode.c0(0.0) == 0.0

    def test_c2_is_i_s_a1(self, tilted_op):
        ode = assemble_rhs(tilted_op, np.array([1.0, 0.0]))
        assert ode.c2(0.5) == pytest.approx(0.5j)  # i s a1, a1(xi) = xi_1 = 1


class TestIntegrateMode:
    def test_manufactured_cubic(self, flat_op):
        forcing = ForcingSpec((ForcingTerm(6.0, 0), ForcingTerm(3.0, 3)))  # 6 + 3 s^3
        prob = ModeProblem(op=flat_op, xi=np.array([1.0, 0.0]), forcing=forcing)
        traj = integrate_mode(prob, rtol=1e-10)
        assert np.max(np.abs(traj.u - traj.s**3)) < 1e-9
        assert np.max(np.abs(traj.u1 - 3 * traj.s**2)) < 1e-9

    def test_zero_data_zero_forcing(self, generic_op):
        prob = ModeProblem(op=generic_op, xi=np.array([0.0, 2.0]), forcing=ZERO_FORCING)
        traj = integrate_mode(prob)
        assert np.max(np.abs(traj.u)) == 0.0
        assert np.max(np.abs(traj.u2)) == 0.0

    def test_manufactured_oscillation(self, flat_op):
        # u = exp(is) with a2 = |xi|^2 = 1: g = -i exp(is) (1 - s)
        def forcing(s):
            s = np.asarray(s)
            return -1j * np.exp(1j * s) * (1.0 - s)

        prob = ModeProblem(op=flat_op, xi=np.array([1.0, 0.0]), forcing=forcing, data=(1.0, 1j, -1.0))
        traj = integrate_mode(prob, rtol=1e-10)
        assert np.max(np.abs(traj.u - np.exp(1j * traj.s))) < 1e-8

    def test_residual_tracks_equation(self, generic_op):
        forcing = ForcingSpec((ForcingTerm(1.0 + 0.3j, 1, 2.0),))
        prob = ModeProblem(op=generic_op, xi=np.array([3.0, 1.0]), forcing=forcing, data=(0.1, 0.0, 0.2j))
        traj = integrate_mode(prob)
        assert traj.max_residual < 1e-6

    def test_against_dop853_oracle(self, generic_op):
        forcing = ForcingSpec((ForcingTerm(1.0 + 0.5j, 1, 2.0), ForcingTerm(0.3 - 0.2j, 0, 0.0)))
        prob = ModeProblem(op=generic_op, xi=np.array([2.0, 1.0]), forcing=forcing, data=(0.1, -0.2j, 0.3))
        traj = integrate_mode(prob)
        ode = traj.ode

        def rhs(s, y):
            u, u1, u2 = y[0] + 1j * y[1], y[2] + 1j * y[3], y[4] + 1j * y[5]
            w = forcing(s) - ode.c2(s) * u2 - ode.c1(s) * u1 - ode.c0(s) * u
            return [y[2], y[3], y[4], y[5], w.real, w.imag]

        ref = scipy.integrate.solve_ivp(
            rhs, (0, 1), [0.1, 0, 0, -0.2, 0.3, 0], method="DOP853", rtol=1e-12, atol=1e-13, dense_output=True
        )
        yref = ref.sol(traj.s).T
        assert np.max(np.abs(traj.u - (yref[:, 0] + 1j * yref[:, 1]))) < 1e-9

    def test_time_reversal_round_trip(self, tilted_op):
        forcing = ForcingSpec((ForcingTerm(2.0 - 1.0j, 2, 1.0),))
        data = (0.5, -0.2j, 1.0 + 0.1j)
        fwd = integrate_mode(ModeProblem(op=tilted_op, xi=np.array([2.0, 1.0]), forcing=forcing, data=data))
        end = (fwd.u[-1], fwd.u1[-1], fwd.u2[-1])
        back = integrate_mode(
            ModeProblem(op=tilted_op, xi=np.array([2.0, 1.0]), forcing=forcing, data_site="upper", data=end)
        )
        gap = max(abs(back.u[0] - data[0]), abs(back.u1[0] - data[1]), abs(back.u2[0] - data[2]))
        assert gap < 1e-9  # 10 x rtol

    def test_linearity_in_data_and_forcing(self, generic_op):
        f1 = ForcingSpec((ForcingTerm(1.0, 1, 1.0),))
        f2 = ForcingSpec((ForcingTerm(0.5j, 0, 2.5),))
        alpha = 1.7 - 0.4j
        combo = ForcingSpec(tuple(ForcingTerm(alpha * t.coeff, t.power, t.omega) for t in f1.terms) + f2.terms)
        xi = np.array([1.0, 2.0])
        t1 = integrate_mode(ModeProblem(op=generic_op, xi=xi, forcing=f1))
        t2 = integrate_mode(ModeProblem(op=generic_op, xi=xi, forcing=f2))
        tc = integrate_mode(ModeProblem(op=generic_op, xi=xi, forcing=combo))
        assert np.max(np.abs(tc.u - (alpha * t1.u + t2.u))) < 1e-9

    def test_convergence_order_fixed_step(self, flat_op):
        def forcing(s):
            s = np.asarray(s)
            return -1j * np.exp(1j * s) * (1.0 - s)

        errs = []
        for h in (1 / 20, 1 / 40, 1 / 80):  # below h = 1/80 roundoff floors the error
            prob = ModeProblem(op=flat_op, xi=np.array([1.0, 0.0]), forcing=forcing, data=(1.0, 1j, -1.0))
            traj = integrate_mode(prob, fixed_step=h)
            errs.append(np.max(np.abs(traj.u - np.exp(1j * traj.s))))
        orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(orders) >= 4.5

    def test_rtol_validation(self, flat_op):
        prob = ModeProblem(op=flat_op, xi=np.array([1.0, 0.0]), forcing=ZERO_FORCING)
        with pytest.raises(ValueError, match="rtol"):
            integrate_mode(prob, rtol=1e-3)

    def test_interval_validation(self, flat_op):
        with pytest.raises(ValueError, match="interval"):
            ModeProblem(op=flat_op, xi=np.array([1.0, 0.0]), forcing=ZERO_FORCING, t0=0.5, T=1.5)


class TestSweep:
    def _problems(self, op, count=6):
        probs = []
        for k in range(count):
            forcing = ForcingSpec((ForcingTerm(1.0 + 0.1j * k, k % 3, 0.5 * k),))
            probs.append(ModeProblem(op=op, xi=np.array([1.0 + k, 0.5]), forcing=forcing))
        return probs

    def test_singleton_matches_integrate_mode(self, flat_op):
        probs = self._problems(flat_op, 1)
        res = sweep(probs)[0]
        direct = integrate_mode(probs[0])
        assert np.array_equal(res.u, direct.u)

    def test_permutation_bit_identical(self, generic_op):
        probs = self._problems(generic_op, 5)
        fwd = sweep(probs)
        perm = [3, 0, 4, 2, 1]
        shuffled = sweep([probs[i] for i in perm])
        for j, i in enumerate(perm):
            assert np.array_equal(shuffled[j].u, fwd[i].u)
            assert np.array_equal(shuffled[j].u2, fwd[i].u2)

    def test_workers_bit_identical(self, generic_op):
        probs = self._problems(generic_op, 4)
        seq = sweep(probs, workers=1)
        par = sweep(probs, workers=2)
        for a, b in zip(seq, par):
            assert np.array_equal(a.u, b.u)

    def test_failures_collected_not_raised(self, flat_op):
        good = self._problems(flat_op, 2)

        def poisoned(s):
            # non-finite forcing past the midpoint kills the step controller
            return np.nan + 0j if np.ndim(s) == 0 and s > 0.5 else np.zeros(np.shape(s), complex)

        bad = ModeProblem(op=flat_op, xi=np.array([1.0, 0.0]), forcing=poisoned, data=(1.0, 0, 0))
        results = sweep([good[0], bad, good[1]])
        assert not isinstance(results[0], ModeFailure)
        assert not isinstance(results[2], ModeFailure)
        assert isinstance(results[1], ModeFailure)
        assert results[1].kind in ("StepFailure", "ToleranceUnachievable")

    def test_sixty_four_mode_log_sweep_residuals(self, flat_op):
        mags = np.geomspace(1.0, 32.0, 32)
        probs = []
        for r in mags:
            for d in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
                forcing = ForcingSpec((ForcingTerm(1.0, 0, 1.0),))
                probs.append(ModeProblem(op=flat_op, xi=r * d, forcing=forcing))
        results = sweep(probs)
        assert len(results) == 64
        assert all(not isinstance(r, ModeFailure) for r in results)
        assert max(r.max_residual for r in results) < 1e-6

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            sweep([])


def test_lower_term_survives_at_origin():
    # every principal coefficient vanishes at s = 0; the lower term does not
    op = laplacian_operator(n=2, beta=3.0)
    ode = assemble_rhs(op, np.array([1.0, 1.0]))
    assert ode.c2(0.0) == 0.0
    assert ode.c1(0.0) == 0.0
    assert ode.c0(0.0) == pytest.approx(-1j * 3.0 * 2.0)  # b1(0) = -i b(0, xi)
