"""Grammar-level checks: homogeneity, dilation, serialization, forcings."""
import json

import numpy as np
import pytest

from triplechar import CoefficientSpec, CoeffTerm, ForcingSpec, ForcingTerm, SampledForcing, XTerm
from triplechar.coeffs import forcing_from_json, quadratic_form, xi_component, xi_monomial, xi_norm_sq


def test_homogeneity_in_xi(rng):
    spec = CoefficientSpec(
        2,
        3,
        (
            CoeffTerm((2, 1), (0.5, -1.0), (XTerm(2.0, (1, 0)),)),
            CoeffTerm((0, 3), (1.0,)),
        ),
    )
    for _ in range(50):
        t = rng.uniform(0, 1)
        x = rng.uniform(-1, 1, 2)
        xi = rng.normal(size=2)
        s = rng.uniform(0.1, 5.0)
        assert spec(t, x, s * xi) == pytest.approx(s**3 * spec(t, x, xi), rel=1e-12)


def test_degree_validation():
    with pytest.raises(ValueError, match="homogeneity"):
        CoefficientSpec(2, 2, (CoeffTerm((1, 0)),))
    with pytest.raises(ValueError):
        CoefficientSpec(2, 1, (CoeffTerm((1, 0, 0)),))


def test_real_valued_and_vectorized(rng):
    spec = xi_norm_sq(3)
    pts = rng.normal(size=(40, 3))
    vals = spec(0.3, np.zeros(3), pts)
    assert vals.shape == (40,)
    assert np.allclose(vals, np.sum(pts**2, axis=1))


def test_t_poly_collapse_matches_evaluation(rng):
    spec = CoefficientSpec(
        2,
        2,
        (
            CoeffTerm((2, 0), (1.0, -0.5, 0.25), (XTerm(1.5, (0, 1)),)),
            CoeffTerm((0, 2), (2.0, 1.0)),
        ),
    )
    x = np.array([0.3, -0.7])
    xi = np.array([1.2, 0.5])
    coeffs = spec.t_poly_at(x, xi)
    for t in rng.uniform(0, 1, 20):
        direct = spec(t, x, xi)
        horner = sum(c * t**j for j, c in enumerate(coeffs))
        assert direct == pytest.approx(horner, rel=1e-14)


def test_dilation_absorbs_scales(rng):
    spec = CoefficientSpec(1, 1, (CoeffTerm((1,), (1.0, 2.0), (XTerm(3.0, (2,)),)),))
    d = spec.dilated(0.25, 0.5)
    for _ in range(20):
        t, x, xi = rng.uniform(0, 1), rng.uniform(-1, 1, 1), rng.normal(size=1)
        assert d(t, x, xi) == pytest.approx(spec(0.25 * t, 0.5 * x, xi), rel=1e-13)


def test_json_round_trip():
    spec = quadratic_form([[2.0, 0.5], [0.5, 1.0]])
    back = CoefficientSpec.from_json(2, json.loads(json.dumps(spec.to_json())))
    assert back == spec
    assert back.degree == 2


def test_builders():
    assert xi_norm_sq(2)(0, np.zeros(2), np.array([3.0, 4.0])) == pytest.approx(25.0)
    assert xi_component(2, 1)(0, np.zeros(2), np.array([3.0, 4.0])) == pytest.approx(4.0)
    mono = xi_monomial(2, (1, 2), t_poly=(0.0, 2.0))
    assert mono(0.5, np.zeros(2), np.array([2.0, 3.0])) == pytest.approx(1.0 * 2.0 * 9.0)


def test_forcing_terms_and_json():
    f = ForcingSpec((ForcingTerm(1.0 + 2.0j, 2, 1.5), ForcingTerm(-0.5j, 0, 0.0)))
    s = np.linspace(0, 1, 11)
    vals = f(s)
    expect = (1 + 2j) * s**2 * np.exp(1.5j * s) - 0.5j
    assert np.allclose(vals, expect)
    back = forcing_from_json(json.loads(json.dumps(f.to_json())))
    assert np.allclose(back(s), vals)
    assert isinstance(f(0.3), complex)


def test_sampled_forcing_interpolates():
    s = np.linspace(0, 1, 60)
    vals = np.exp(1j * 2.0 * s) * (1 + s)
    f = SampledForcing(s, vals)
    fine = np.linspace(0, 1, 301)
    assert np.max(np.abs(f(fine) - np.exp(1j * 2.0 * fine) * (1 + fine))) < 1e-5
    back = forcing_from_json(f.to_json())
    assert np.allclose(back(fine), f(fine))
