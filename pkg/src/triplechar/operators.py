"""Model operators and their phase-space symbols.

``ModelOperator`` carries the coefficient data of the degenerate third-order
operator

    D_t^3 + t a1(t,x,D_x) D_t^2 - t a2(t,x,D_x) D_t + t^2 a3(t,x,D_x)
        + b(t,D_x) + B1(t,x,D_x) D_t + C1

whose characteristic root tau = 0 is triple at t = 0.  ``PolySymbol`` is the
workhorse behind the geometry diagnostics: a plain polynomial in
(t, x, tau, xi) supporting exact differentiation, so gradients, Hessians and
mixed-trace terms come out in closed form.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .coeffs import CoefficientSpec, CoeffTerm, quadratic_form, xi_norm_sq

_COEFF_EPS = 0.0  # dropped terms must be exactly zero; no silent rounding


@dataclass(frozen=True)
class PolyTerm:
    coeff: complex
    t_exp: int
    x_exps: tuple[int, ...]
    tau_exp: int
    xi_exps: tuple[int, ...]

    def key(self):
        return (self.t_exp, self.x_exps, self.tau_exp, self.xi_exps)


def _merge(terms):
    acc: dict = {}
    for term in terms:
        key = term.key()
        acc[key] = acc.get(key, 0.0) + term.coeff
    out = []
    for (t_exp, x_exps, tau_exp, xi_exps), coeff in sorted(acc.items()):
        if coeff != _COEFF_EPS:
            out.append(PolyTerm(coeff, t_exp, x_exps, tau_exp, xi_exps))
    return tuple(out)


@dataclass(frozen=True)
class PolySymbol:
    """Polynomial in the phase variables (t, x_1..x_n, tau, xi_1..xi_n).

    Phase coordinates are ordered X = (t, x) and Xi = (tau, xi); variable
    index v in [0, 2n+2) addresses X_v for v <= n and Xi_{v-n-1} above.
    """

    n: int
    terms: tuple[PolyTerm, ...]

    @property
    def dim(self) -> int:
        return 2 * (self.n + 1)

    def __call__(self, t, x, tau, xi):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        out = 0.0 + 0.0j
        for term in self.terms:
            val = term.coeff
            if term.t_exp:
                val = val * t**term.t_exp
            if term.tau_exp:
                val = val * tau**term.tau_exp
            for b, e in zip(x, term.x_exps):
                if e:
                    val = val * b**e
            for b, e in zip(xi, term.xi_exps):
                if e:
                    val = val * b**e
            out += val
        if abs(out.imag) == 0.0:
            return out.real
        return out

    def at(self, z) -> complex:
        """Evaluate at a phase point with coordinates (X, Xi) stacked."""
        m = self.n + 1
        vec = np.asarray(z, dtype=float)
        return self(vec[0], vec[1:m], vec[m], vec[m + 1 :])

    @property
    def is_real(self) -> bool:
        return all(complex(term.coeff).imag == 0.0 for term in self.terms)

    def __add__(self, other: "PolySymbol") -> "PolySymbol":
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        return PolySymbol(self.n, _merge(self.terms + other.terms))

    def __mul__(self, other):
        if np.isscalar(other):
            return PolySymbol(
                self.n, _merge(PolyTerm(t.coeff * other, *t.key()) for t in self.terms)
            )
        out = []
        for a, b in itertools.product(self.terms, other.terms):
            out.append(
                PolyTerm(
                    a.coeff * b.coeff,
                    a.t_exp + b.t_exp,
                    tuple(p + q for p, q in zip(a.x_exps, b.x_exps)),
                    a.tau_exp + b.tau_exp,
                    tuple(p + q for p, q in zip(a.xi_exps, b.xi_exps)),
                )
            )
        return PolySymbol(self.n, _merge(out))

    __rmul__ = __mul__

    def derivative(self, var: int) -> "PolySymbol":
        """d/dz_v in the (t, x, tau, xi) ordering."""
        m = self.n + 1
        out = []
        for term in self.terms:
            if var == 0:
                e = term.t_exp
                if e:
                    out.append(PolyTerm(term.coeff * e, e - 1, term.x_exps, term.tau_exp, term.xi_exps))
            elif var < m:
                i = var - 1
                e = term.x_exps[i]
                if e:
                    x_exps = list(term.x_exps)
                    x_exps[i] -= 1
                    out.append(PolyTerm(term.coeff * e, term.t_exp, tuple(x_exps), term.tau_exp, term.xi_exps))
            elif var == m:
                e = term.tau_exp
                if e:
                    out.append(PolyTerm(term.coeff * e, term.t_exp, term.x_exps, e - 1, term.xi_exps))
            else:
                i = var - m - 1
                e = term.xi_exps[i]
                if e:
                    xi_exps = list(term.xi_exps)
                    xi_exps[i] -= 1
                    out.append(PolyTerm(term.coeff * e, term.t_exp, term.x_exps, term.tau_exp, tuple(xi_exps)))
        return PolySymbol(self.n, _merge(out))

    def gradient(self, z) -> np.ndarray:
        return np.array([self.derivative(v).at(z) for v in range(self.dim)])

    def hessian(self, z) -> np.ndarray:
        """Exact Hessian in the (X, Xi) coordinate ordering."""
        d = self.dim
        firsts = [self.derivative(v) for v in range(d)]
        hess = np.zeros((d, d))
        for i in range(d):
            for j in range(i, d):
                val = firsts[i].derivative(j).at(z)
                hess[i, j] = hess[j, i] = np.real(val)
        return hess

    def hessian_fd(self, z, rel_step: float = 1e-5) -> np.ndarray:
        """Central-difference Hessian, for cross-validation only."""
        z = np.asarray(z, dtype=float)
        d = self.dim
        hess = np.zeros((d, d))
        steps = rel_step * np.maximum(1.0, np.abs(z))
        for i in range(d):
            for j in range(i, d):
                hi = np.zeros(d)
                hj = np.zeros(d)
                hi[i] = steps[i]
                hj[j] = steps[j]
                val = (
                    self.at(z + hi + hj)
                    - self.at(z + hi - hj)
                    - self.at(z - hi + hj)
                    + self.at(z - hi - hj)
                ) / (4 * steps[i] * steps[j])
                hess[i, j] = hess[j, i] = np.real(val)
        return hess

    def mixed_trace(self, z) -> complex:
        """sum_j d^2 p / dX_j dXi_j at z, the trace entering the subprincipal
        correction; j runs over all phase pairs including (t, tau)."""
        m = self.n + 1
        total = 0.0
        for j in range(m):
            total += self.derivative(j).derivative(m + j).at(z)
        return total


def poly_from_spec(spec: CoefficientSpec, extra_t: int = 0, tau_exp: int = 0, factor: complex = 1.0) -> PolySymbol:
    """Expand ``factor * t^extra_t * spec(t,x,xi) * tau^tau_exp``."""
    terms = []
    for term in spec.terms:
        x_items = term.x_terms or (None,)
        for j, c in enumerate(term.t_poly):
            if c == 0.0:
                continue
            for xt in x_items:
                coeff = factor * c * (1.0 if xt is None else xt.coeff)
                x_exps = tuple([0] * spec.n) if xt is None else xt.exponents
                terms.append(PolyTerm(coeff, j + extra_t, x_exps, tau_exp, term.xi_exponents))
    return PolySymbol(spec.n, _merge(terms))


def monomial_symbol(n: int, coeff: complex = 1.0, t: int = 0, x=(), tau: int = 0, xi=()) -> PolySymbol:
    x_exps = tuple(x) if x else tuple([0] * n)
    xi_exps = tuple(xi) if xi else tuple([0] * n)
    return PolySymbol(n, (PolyTerm(coeff, t, x_exps, tau, xi_exps),))


@dataclass(frozen=True)
class FullSymbol:
    """Principal part plus the order-(m-1) polynomial used by the
    subprincipal symbol."""

    m: int
    principal: PolySymbol
    lower: PolySymbol

    @property
    def n(self) -> int:
        return self.principal.n


# ---------------------------------------------------------------------------
# The model operator
# ---------------------------------------------------------------------------

_DEGREES = {"a1": 1, "a2": 2, "a3": 3, "b": 2, "B1": 1}


@dataclass(frozen=True)
class ModelOperator:
    """Coefficient data for the degenerate third-order model operator.

    ``a2`` must be elliptic (>= delta0 |xi|^2) for the energy machinery;
    degenerate choices are allowed at construction so that the
    well-posedness probes can drive the operator outside that class on
    purpose.  ``b`` is the second-order lower term of the constant-x model;
    ``B1`` (order 1, times D_t) and ``C1`` (order <= 1) extend it to the
    general lower-order form.
    """

    n: int
    a2: CoefficientSpec
    a1: CoefficientSpec | None = None
    a3: CoefficientSpec | None = None
    b: CoefficientSpec | None = None
    B1: CoefficientSpec | None = None
    C1: CoefficientSpec | None = None
    delta0: float = 0.0

    def __post_init__(self):
        for name, deg in _DEGREES.items():
            spec = getattr(self, name)
            if spec is None:
                continue
            if spec.n != self.n:
                raise ValueError(f"{name} has dimension {spec.n}, expected {self.n}")
            if spec.degree != deg:
                raise ValueError(f"{name} must have xi-degree {deg}, got {spec.degree}")
        if self.C1 is not None and self.C1.degree not in (0, 1):
            raise ValueError("C1 must have xi-degree 0 or 1")

    # -- pointwise evaluation ---------------------------------------------

    def _val(self, spec, t, x, xi):
        return 0.0 if spec is None else spec(t, x, xi)

    def coefficient_values(self, t, x, xi):
        return (
            self._val(self.a1, t, x, xi),
            self.a2(t, x, xi),
            self._val(self.a3, t, x, xi),
        )

    def cubic_coefficients(self, t, x, xi):
        """Monic cubic tau^3 + B tau^2 + C tau + D at the symbol point."""
        a1v, a2v, a3v = self.coefficient_values(t, x, xi)
        return t * a1v, -t * a2v, t * t * a3v

    def principal(self, t, x, tau, xi):
        b_, c_, d_ = self.cubic_coefficients(t, x, xi)
        return ((tau + b_) * tau + c_) * tau + d_

    # -- phase-space symbols ------------------------------------------------

    def principal_symbol(self) -> PolySymbol:
        p = monomial_symbol(self.n, 1.0, tau=3)
        if self.a1 is not None:
            p = p + poly_from_spec(self.a1, extra_t=1, tau_exp=2)
        p = p + poly_from_spec(self.a2, extra_t=1, tau_exp=1, factor=-1.0)
        if self.a3 is not None:
            p = p + poly_from_spec(self.a3, extra_t=2)
        return p

    def lower_symbol(self) -> PolySymbol:
        p = PolySymbol(self.n, ())
        if self.b is not None:
            p = p + poly_from_spec(self.b)
        if self.B1 is not None:
            p = p + poly_from_spec(self.B1, tau_exp=1)
        return p

    def full_symbol(self) -> FullSymbol:
        return FullSymbol(3, self.principal_symbol(), self.lower_symbol())

    # -- validation ----------------------------------------------------------

    def ellipticity_margin(self, directions) -> float:
        """min over unit directions of a2(0, 0, xi) - delta0; a2 is
        evaluated on the t = 0, x = 0 slice."""
        x0 = np.zeros(self.n)
        vals = self.a2(0.0, x0, np.asarray(directions, dtype=float))
        return float(np.min(vals) - self.delta0)

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        out = {"n": self.n, "delta0": self.delta0, "a2": self.a2.to_json()}
        for name in ("a1", "a3", "b", "B1", "C1"):
            spec = getattr(self, name)
            if spec is not None:
                out[name] = spec.to_json()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ModelOperator":
        n = int(data["n"])
        kwargs = {}
        for name in ("a1", "a3", "b", "B1", "C1"):
            if data.get(name) is not None:
                kwargs[name] = CoefficientSpec.from_json(n, data[name])
        return cls(
            n=n,
            a2=CoefficientSpec.from_json(n, data["a2"]),
            delta0=float(data.get("delta0", 0.0)),
            **kwargs,
        )


def laplacian_operator(n: int = 2, beta: float = 0.0) -> ModelOperator:
    """The flat model D_t^3 - t |D_x|^2 D_t + beta |D_x|^2."""
    b = None if beta == 0.0 else xi_norm_sq(n).scaled(beta)
    return ModelOperator(n=n, a2=xi_norm_sq(n), b=b, delta0=1.0)


def random_model_operator(rng: np.random.Generator, n: int = 2, lower_scale: float = 0.0) -> ModelOperator:
    """Draw a generic operator of the degenerate class: random SPD a2,
    random homogeneous a1, a3 with O(1) coefficients.

    The discriminant is then negative for small t, so samples with modest t
    stay inside the hyperbolicity region.
    """
    m = rng.normal(size=(n, n))
    spd = m @ m.T + np.eye(n)
    a2 = quadratic_form(spd)
    delta0 = 0.9 * float(np.linalg.eigvalsh(spd).min())

    a1_terms = []
    a3_terms = []
    for exps in itertools.product(range(4), repeat=n):
        if sum(exps) == 1:
            a1_terms.append(CoeffTerm(exps, tuple(rng.uniform(-1, 1, size=2))))
        if sum(exps) == 3:
            a3_terms.append(CoeffTerm(exps, tuple(rng.uniform(-0.5, 0.5, size=2))))
    a1 = CoefficientSpec(n, 1, tuple(a1_terms))
    a3 = CoefficientSpec(n, 3, tuple(a3_terms))

    b = None
    if lower_scale:
        b = quadratic_form(rng.normal(size=(n, n)) * lower_scale + lower_scale * np.eye(n))
    return ModelOperator(n=n, a2=a2, a1=a1, a3=a3, b=b, delta0=delta0)


# Hand-checked second-order symbols used across the geometry tests.

def saddle_check_symbol() -> PolySymbol:
    """p = tau^2 - t^2 xi^2 in one space dimension; the reference
    effectively hyperbolic point sits at t = tau = 0."""
    return monomial_symbol(1, 1.0, tau=2) + monomial_symbol(1, -1.0, t=2, xi=(2,))


def quartic_degenerate_symbol() -> PolySymbol:
    """p = tau^2 - t^4 xi^2; the real eigenvalue pair collapses at t = 0."""
    return monomial_symbol(1, 1.0, tau=2) + monomial_symbol(1, -1.0, t=4, xi=(2,))
