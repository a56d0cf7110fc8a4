"""Coefficient grammar for symbols and forcings.

A coefficient is a polynomial in the covariable ``xi`` of fixed homogeneity
degree; each xi-monomial is multiplied by a polynomial in ``t`` times a
polynomial in ``x``.  The grammar is small on purpose: it is closed under
d/dt, d/dx_i and under the anisotropic dilations used by the scaling
transform, and it round-trips through the scenario JSON format.

Forcings for the mode solver use the same closed-form idea extended with
complex constants and oscillatory factors, plus a sampled variant backed by
cubic interpolation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline


def _powers(base, exps):
    out = 1.0
    for b, e in zip(base, exps):
        if e:
            out = out * b**e
    return out


@dataclass(frozen=True)
class XTerm:
    """One spatial monomial ``coeff * x^exponents``."""

    coeff: float
    exponents: tuple[int, ...]


@dataclass(frozen=True)
class CoeffTerm:
    """``(sum_j t_poly[j] t^j) * (sum_k x_terms[k]) * xi^xi_exponents``.

    An empty ``x_terms`` means the spatial factor is identically 1.
    """

    xi_exponents: tuple[int, ...]
    t_poly: tuple[float, ...] = (1.0,)
    x_terms: tuple[XTerm, ...] = ()

    def t_factor(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for j, c in enumerate(self.t_poly):
            if c != 0.0:
                out = out + c * t**j
        return out if out.shape else float(out)

    def x_factor(self, x) -> float:
        if not self.x_terms:
            return 1.0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return float(sum(term.coeff * _powers(x, term.exponents) for term in self.x_terms))


@dataclass(frozen=True)
class CoefficientSpec:
    """Homogeneous-degree polynomial in xi with (t, x)-polynomial coefficients.

    Invariants enforced at construction: every xi-monomial has total degree
    equal to ``degree`` (so ``evaluate(t, x, s*xi) == s**degree *
    evaluate(t, x, xi)`` for s > 0), and all constants are real.
    """

    n: int
    degree: int
    terms: tuple[CoeffTerm, ...]

    def __post_init__(self):
        for term in self.terms:
            if len(term.xi_exponents) != self.n:
                raise ValueError(f"xi exponent tuple has length {len(term.xi_exponents)}, expected {self.n}")
            if sum(term.xi_exponents) != self.degree:
                raise ValueError(f"monomial {term.xi_exponents} breaks homogeneity degree {self.degree}")
            for xt in term.x_terms:
                if len(xt.exponents) != self.n:
                    raise ValueError("x exponent tuple length mismatch")

    def __call__(self, t, x, xi):
        """Evaluate at time t (scalar or array), position x (n,), covector xi.

        ``xi`` may be a single covector of shape (n,) or a stack (..., n);
        the result broadcasts over t and the leading xi axes.
        """
        xi = np.asarray(xi, dtype=float)
        out = 0.0
        for term in self.terms:
            mono = _powers(np.moveaxis(xi, -1, 0), term.xi_exponents)
            out = out + term.t_factor(t) * term.x_factor(x) * mono
        if np.ndim(out) == 0:
            return float(out)
        return out

    @property
    def is_t_independent(self) -> bool:
        return all(len(term.t_poly) <= 1 for term in self.terms)

    @property
    def is_x_independent(self) -> bool:
        return all(
            not term.x_terms or all(sum(xt.exponents) == 0 for xt in term.x_terms)
            for term in self.terms
        )

    def scaled(self, c: float) -> "CoefficientSpec":
        return CoefficientSpec(
            self.n,
            self.degree,
            tuple(
                CoeffTerm(term.xi_exponents, tuple(c * v for v in term.t_poly), term.x_terms)
                for term in self.terms
            ),
        )

    def dilated(self, t_scale: float, x_scale: float) -> "CoefficientSpec":
        """Substitute t -> t_scale * t and x -> x_scale * x, absorbing the
        scale factors into the constants.  Exact for the grammar."""
        terms = []
        for term in self.terms:
            t_poly = tuple(v * t_scale**j for j, v in enumerate(term.t_poly))
            x_terms = tuple(
                XTerm(xt.coeff * x_scale ** sum(xt.exponents), xt.exponents)
                for xt in term.x_terms
            )
            terms.append(CoeffTerm(term.xi_exponents, t_poly, x_terms))
        return CoefficientSpec(self.n, self.degree, tuple(terms))

    def t_poly_at(self, x, xi) -> tuple[float, ...]:
        """Collapse to a plain polynomial in t at frozen (x, xi).

        Returns ascending coefficients; exact, since the grammar is
        polynomial in t.
        """
        xi = np.asarray(xi, dtype=float)
        deg = max((len(term.t_poly) for term in self.terms), default=1)
        coeffs = [0.0] * deg
        for term in self.terms:
            factor = term.x_factor(x) * _powers(xi, term.xi_exponents)
            for j, c in enumerate(term.t_poly):
                coeffs[j] += c * factor
        return tuple(coeffs)

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "terms": [
                {
                    "xi": list(term.xi_exponents),
                    "t_poly": list(term.t_poly),
                    **(
                        {"x_poly": [{"coeff": xt.coeff, "exponents": list(xt.exponents)} for xt in term.x_terms]}
                        if term.x_terms
                        else {}
                    ),
                }
                for term in self.terms
            ],
        }

    @classmethod
    def from_json(cls, n: int, data: dict) -> "CoefficientSpec":
        terms = []
        for raw in data["terms"]:
            x_terms = tuple(
                XTerm(float(xt["coeff"]), tuple(int(e) for e in xt["exponents"]))
                for xt in raw.get("x_poly", [])
            )
            terms.append(
                CoeffTerm(
                    tuple(int(e) for e in raw["xi"]),
                    tuple(float(v) for v in raw.get("t_poly", [1.0])),
                    x_terms,
                )
            )
        return cls(n, int(data["degree"]), tuple(terms))


def xi_norm_sq(n: int) -> CoefficientSpec:
    """The elliptic quadratic form |xi|^2."""
    terms = []
    for i in range(n):
        exps = tuple(2 if j == i else 0 for j in range(n))
        terms.append(CoeffTerm(exps))
    return CoefficientSpec(n, 2, tuple(terms))


def xi_component(n: int, i: int) -> CoefficientSpec:
    exps = tuple(1 if j == i else 0 for j in range(n))
    return CoefficientSpec(n, 1, (CoeffTerm(exps),))


def quadratic_form(matrix) -> CoefficientSpec:
    """xi^T A xi for a symmetric matrix A with constant entries."""
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    terms = []
    for i in range(n):
        for j in range(i, n):
            c = a[i, i] if i == j else a[i, j] + a[j, i]
            if c == 0.0:
                continue
            exps = [0] * n
            exps[i] += 1
            exps[j] += 1
            terms.append(CoeffTerm(tuple(exps), (float(c),)))
    return CoefficientSpec(n, 2, tuple(terms))


def xi_monomial(n: int, exps, t_poly=(1.0,), x_terms=()) -> CoefficientSpec:
    term = CoeffTerm(tuple(int(e) for e in exps), tuple(float(v) for v in t_poly), tuple(x_terms))
    return CoefficientSpec(n, sum(term.xi_exponents), (term,))


# ---------------------------------------------------------------------------
# Forcings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForcingTerm:
    coeff: complex
    power: int = 0
    omega: float = 0.0


@dataclass(frozen=True)
class ForcingSpec:
    """Closed-form forcing ``sum_k c_k s^{p_k} exp(i w_k s)``."""

    terms: tuple[ForcingTerm, ...]

    def __call__(self, s):
        s_arr = np.asarray(s, dtype=float)
        out = np.zeros(s_arr.shape, dtype=complex)
        for term in self.terms:
            val = term.coeff * s_arr**term.power
            if term.omega != 0.0:
                val = val * np.exp(1j * term.omega * s_arr)
            out = out + val
        if out.shape == ():
            return complex(out)
        return out

    def to_json(self) -> dict:
        return {
            "terms": [
                {"re": t.coeff.real, "im": t.coeff.imag, "power": t.power, "omega": t.omega}
                for t in self.terms
            ]
        }

    @classmethod
    def from_json(cls, data: dict) -> "ForcingSpec":
        return cls(
            tuple(
                ForcingTerm(
                    complex(float(t.get("re", 0.0)), float(t.get("im", 0.0))),
                    int(t.get("power", 0)),
                    float(t.get("omega", 0.0)),
                )
                for t in data["terms"]
            )
        )


ZERO_FORCING = ForcingSpec(())


class SampledForcing:
    """Forcing given by samples on a time grid, evaluated by cubic splines."""

    def __init__(self, s_nodes, values):
        s_nodes = np.asarray(s_nodes, dtype=float)
        values = np.asarray(values, dtype=complex)
        if s_nodes.ndim != 1 or s_nodes.size < 4:
            raise ValueError("need at least 4 sample nodes for cubic interpolation")
        self.s_nodes = s_nodes
        self.values = values
        self._re = CubicSpline(s_nodes, values.real)
        self._im = CubicSpline(s_nodes, values.imag)

    def __call__(self, s):
        out = self._re(s) + 1j * self._im(s)
        if np.ndim(s) == 0:
            return complex(out)
        return out

    def to_json(self) -> dict:
        return {
            "samples": {
                "s": self.s_nodes.tolist(),
                "re": self.values.real.tolist(),
                "im": self.values.imag.tolist(),
            }
        }


def forcing_from_json(data: dict):
    if "samples" in data:
        raw = data["samples"]
        values = np.asarray(raw["re"], dtype=float) + 1j * np.asarray(raw.get("im", np.zeros(len(raw["re"]))), dtype=float)
        return SampledForcing(raw["s"], values)
    return ForcingSpec.from_json(data)
