import numpy as np
import pytest

from triplechar import ModelOperator, laplacian_operator, random_model_operator, xi_component, xi_norm_sq


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture
def flat_op():
    """D_t^3 - t |D_x|^2 D_t in two space dimensions."""
    return laplacian_operator(n=2)


@pytest.fixture
def tilted_op():
    """a1(xi) = xi_1 added to the flat operator; still a3 = 0."""
    return ModelOperator(n=2, a2=xi_norm_sq(2), a1=xi_component(2, 0), delta0=1.0)


@pytest.fixture
def generic_op():
    return random_model_operator(np.random.default_rng(7), n=2)


def sample_hyperbolic(rng, op, t_range=(1e-3, 0.2), max_tries=200):
    """Random (t, x, xi) with the discriminant nonpositive."""
    from triplechar import discriminant

    for _ in range(max_tries):
        t = rng.uniform(*t_range)
        x = rng.uniform(-1, 1, size=op.n)
        xi = rng.normal(size=op.n)
        xi *= rng.uniform(0.5, 4.0) / np.linalg.norm(xi)
        if discriminant(op, t, x, xi) <= 0.0:
            return t, x, xi
    raise RuntimeError("no hyperbolic sample found")
