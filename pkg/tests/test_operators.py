"""Phase-space polynomial symbols and operator assembly."""
import json

import numpy as np
import pytest

from triplechar import ModelOperator, laplacian_operator, monomial_symbol, random_model_operator, xi_norm_sq
from triplechar.coeffs import xi_component
from triplechar.operators import poly_from_spec, saddle_check_symbol


class TestPolySymbol:
    def test_evaluation_and_arithmetic(self):
        p = monomial_symbol(1, 2.0, t=1, tau=1) + monomial_symbol(1, -1.0, xi=(2,))
        # 2 t tau - xi^2
        assert p(0.5, [0.0], 3.0, [2.0]) == pytest.approx(2 * 0.5 * 3 - 4)
        q = p * monomial_symbol(1, 1.0, tau=1)
        assert q(0.5, [0.0], 3.0, [2.0]) == pytest.approx((2 * 0.5 * 3 - 4) * 3)

    def test_derivative_against_finite_differences(self, rng):
        op = random_model_operator(np.random.default_rng(88), n=2)
        p = op.principal_symbol()
        z = np.array([0.2, 0.4, -0.1, 0.3, 1.0, -0.5])
        grad = np.real(p.gradient(z))
        eps = 1e-6
        for v in range(6):
            dz = np.zeros(6)
            dz[v] = eps
            fd = (p.at(z + dz) - p.at(z - dz)) / (2 * eps)
            assert grad[v] == pytest.approx(np.real(fd), rel=1e-6, abs=1e-6)

    def test_mixed_trace_includes_time_pair(self):
        # p = t tau: the only mixed second derivative is d^2 p / dt dtau = 1
        p = monomial_symbol(1, 1.0, t=1, tau=1)
        assert p.mixed_trace(np.array([0.3, 0.1, 0.2, 0.4])) == pytest.approx(1.0)

    def test_poly_from_spec_matches_spec_evaluation(self, rng):
        spec = xi_norm_sq(2)
        p = poly_from_spec(spec, extra_t=1, tau_exp=1, factor=-1.0)  # -t |xi|^2 tau
        for _ in range(10):
            t, tau = rng.uniform(0, 1), rng.normal()
            x, xi = rng.uniform(-1, 1, 2), rng.normal(size=2)
            assert p(t, x, tau, xi) == pytest.approx(-t * spec(t, x, xi) * tau, rel=1e-13)


class TestModelOperator:
    def test_principal_matches_symbol(self, generic_op, rng):
        p = generic_op.principal_symbol()
        for _ in range(20):
            t, tau = rng.uniform(0, 0.5), rng.normal()
            x, xi = rng.uniform(-1, 1, 2), rng.normal(size=2)
            assert generic_op.principal(t, x, tau, xi) == pytest.approx(
                np.real(p(t, x, tau, xi)), rel=1e-12, abs=1e-12
            )

    def test_degree_validation(self):
        with pytest.raises(ValueError, match="degree"):
            ModelOperator(n=2, a2=xi_component(2, 0))  # degree 1 in the a2 slot

    def test_json_round_trip(self):
        op = laplacian_operator(n=2, beta=2.5)
        back = ModelOperator.from_json(json.loads(json.dumps(op.to_json())))
        assert back == op

    def test_ellipticity_margin(self, flat_op):
        dirs = np.array([[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]])
        assert flat_op.ellipticity_margin(dirs) == pytest.approx(0.0)  # a2 = |xi|^2, delta0 = 1

    def test_random_operator_is_elliptic(self):
        for k in range(10):
            op = random_model_operator(np.random.default_rng(k), n=2)
            angles = np.linspace(0, 2 * np.pi, 32, endpoint=False)
            dirs = np.column_stack([np.cos(angles), np.sin(angles)])
            assert op.ellipticity_margin(dirs) >= 0.0


def test_saddle_symbol_shape():
    p = saddle_check_symbol()
    assert p(0.5, [0.0], 1.0, [2.0]) == pytest.approx(1.0 - 0.25 * 4)
