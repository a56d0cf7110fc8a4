"""Anisotropic scaling of the operator and the order-function calculus.

Under t = eps^{2/3} s, x = eps y (0 < eps <= 1) and multiplication by
eps^2 the operator regroups as

    D_s^3 - s a2(.) D_s + b(.)
    + eps^{1/3} [ s a1(.) D_s^2 + s^2 a3(.) + B1(.) D_s ] + eps C1(.),

with every coefficient evaluated at (eps^{2/3} s, eps y).  The group
prefactors are kept symbolically (exact rational exponents of eps) so the
placement can be checked without floating arithmetic, and eps = 1 recovers
the original operator exactly.

The order function m_N(t, x, xi) = f^{-N}(t, xi) <xi>^{mu/2} and the slowly
varying metrics |dx|^2 + <xi>^{-2}|dxi|^2 (plus the eps-dilated variant)
are provided as plain evaluators for finite-sample symbol diagnostics.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .operators import ModelOperator
from .symbols import WeightFunction

T_EXPONENT = Fraction(2, 3)  # t = eps^{2/3} s
X_EXPONENT = Fraction(1, 1)  # x = eps y

# exact eps-exponent carried by each coefficient group after the eps^2
# multiplication; the bracketed a1/a3/B1 group shares eps^{1/3}
GROUP_EXPONENTS = {
    "a2": Fraction(0),
    "b": Fraction(0),
    "a1": Fraction(1, 3),
    "a3": Fraction(1, 3),
    "B1": Fraction(1, 3),
    "C1": Fraction(1),
}


@dataclass(frozen=True)
class ScalingTransform:
    epsilon: float

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in (0, 1]")

    def to_original(self, s, y):
        return self.epsilon**(2.0 / 3.0) * np.asarray(s), self.epsilon * np.asarray(y)

    def covariable_map(self, sigma, eta):
        """(tau, xi) corresponding to the rescaled covariables."""
        return np.asarray(sigma) * self.epsilon ** (-2.0 / 3.0), np.asarray(eta) / self.epsilon


@dataclass(frozen=True)
class RescaledOperator:
    """Rescaled coefficients plus the symbolic eps-prefactor bookkeeping."""

    epsilon: float
    base: ModelOperator           # argument-substituted specs, prefactors not folded
    prefactor_exponents: dict     # name -> Fraction exponent of eps

    def prefactor(self, name: str) -> float:
        return float(self.epsilon) ** float(self.prefactor_exponents[name])

    def as_model_operator(self) -> ModelOperator:
        """Fold the eps prefactors into the coefficient constants."""
        def fold(name):
            spec = getattr(self.base, name)
            if spec is None:
                return None
            return spec.scaled(self.prefactor(name))

        return ModelOperator(
            n=self.base.n,
            a2=fold("a2"),
            a1=fold("a1"),
            a3=fold("a3"),
            b=fold("b"),
            B1=fold("B1"),
            C1=fold("C1"),
            delta0=self.base.delta0,
        )

    def principal(self, s, y, sigma, eta) -> float:
        return self.as_model_operator().principal(s, y, sigma, eta)

    def full_value(self, s, y, sigma, eta) -> float:
        """Principal plus lower-order groups, remainder slot included."""
        op = self.as_model_operator()
        val = op.principal(s, y, sigma, eta)
        if op.b is not None:
            val += op.b(s, y, eta)
        if op.B1 is not None:
            val += op.B1(s, y, eta) * sigma
        if op.C1 is not None:
            val += op.C1(s, y, eta)
        return val


def rescale_operator(op: ModelOperator, epsilon: float) -> RescaledOperator:
    """Apply the scaling substitution to every coefficient and attach the
    symbolic group prefactors; epsilon = 1 is the identity transform
    (bitwise: every constant is multiplied by exactly 1.0)."""
    tr = ScalingTransform(epsilon)
    t_scale = float(epsilon) ** float(T_EXPONENT)
    x_scale = float(epsilon) ** float(X_EXPONENT)

    def subst(spec):
        return None if spec is None else spec.dilated(t_scale, x_scale)

    base = ModelOperator(
        n=op.n,
        a2=subst(op.a2),
        a1=subst(op.a1),
        a3=subst(op.a3),
        b=subst(op.b),
        B1=subst(op.B1),
        C1=subst(op.C1),
        delta0=op.delta0,
    )
    return RescaledOperator(epsilon=tr.epsilon, base=base, prefactor_exponents=dict(GROUP_EXPONENTS))


# ---------------------------------------------------------------------------
# Order functions and metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrderFunction:
    """m(t, x, xi) = f^{-N}(t, xi) <xi>^{mu/2} with <xi>^2 = 1 + |xi|^2."""

    weight: WeightFunction
    N: int
    mu: float = 0.0

    def __call__(self, t, x, xi):
        xi = np.asarray(xi, dtype=float)
        bracket_sq = 1.0 + np.sum(np.atleast_2d(xi) ** 2, axis=-1)
        if xi.ndim == 1:
            bracket_sq = float(bracket_sq[0])
        return self.weight.f(t, xi) ** (-self.N) * bracket_sq ** (self.mu / 4.0)


def order_function_eval(of: OrderFunction, t, x, xi):
    return of(t, x, xi)


def metric_eval(which: str, basepoint, tangent, epsilon: float | None = None) -> float:
    """Quadratic form of the slowly varying metric (``"g"``) or its
    eps-dilated variant (``"g_eps"``) at the basepoint on a tangent
    (dx, dxi)."""
    x, xi = (np.asarray(v, dtype=float) for v in basepoint)
    dx, dxi = (np.asarray(v, dtype=float) for v in tangent)
    bracket_sq = 1.0 + float(np.sum(xi**2))
    if which == "g":
        cx = 1.0
    elif which == "g_eps":
        if epsilon is None:
            raise ValueError("g_eps requires epsilon")
        cx = float(epsilon) ** 2
    else:
        raise ValueError(f"unknown metric {which!r}")
    return cx * float(np.sum(dx**2)) + float(np.sum(dxi**2)) / bracket_sq


def resolve_coupling(epsilon: float | None, N: int | None, coupling: float = 1.0):
    """Tie eps and N through eps * N <= coupling; derive the missing one
    from equality when only one is given."""
    if epsilon is None and N is None:
        raise ValueError("need epsilon or N")
    if epsilon is None:
        epsilon = coupling / N
    elif N is None:
        N = max(1, int(round(coupling / epsilon)))
    if epsilon * N > coupling * (1.0 + 1e-12):
        raise ValueError(f"epsilon * N = {epsilon * N:.4g} exceeds the coupling constant {coupling}")
    if not (0.0 < epsilon <= 1.0):
        raise ValueError("derived epsilon must lie in (0, 1]")
    return float(epsilon), int(N)
