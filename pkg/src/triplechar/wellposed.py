"""Empirical well-posedness probes and the loss-of-derivatives count.

The classical second-order example

    P = D_t^2 - a(z) D_x^2 + b0(z) D_t + b1(z) D_x + c(z),  z = (t, x),

is well posed near a point z0 with a(z0) = da(z0) = 0 and a_tt(z0) > 0 for
arbitrary lower-order terms, at the price of losing

    N = 3 + 2 * floor(3/2 + |b1(z0)| / sqrt(a_tt(z0)))

derivatives; with a_tt(z0) = 0 and b1(z0) != 0 the problem is not well
posed.  The probes below freeze the coefficients at z0's spatial
coordinate, integrate single modes over a ladder of frequencies, and fit
polynomial versus super-polynomial growth of the mode magnitudes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCase, IllPosedCase, InsufficientData
from .ivp import solve_dp54
from .modes import LOWER_END, ModeProblem, integrate_mode
from .operators import ModelOperator, PolySymbol

POLYNOMIAL = "PolynomialLoss"
SUPERPOLYNOMIAL = "SuperPolynomial"


@dataclass(frozen=True)
class SecondOrderExample:
    """Coefficient data of the second-order example; ``a`` must be real and
    nonnegative around the basepoint, the lower-order coefficients may be
    complex."""

    a: PolySymbol
    b0: PolySymbol
    b1: PolySymbol
    c: PolySymbol
    z0: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.a.is_real:
            raise ValueError("a must be real-valued")

    def _z(self):
        t0, x0 = self.z0
        return np.array([t0, x0, 0.0, 0.0])

    def a_at(self, t, x) -> float:
        return float(np.real(self.a(t, [x], 0.0, [0.0])))


def zero_coefficient() -> PolySymbol:
    return PolySymbol(1, ())


def oleinik_loss_count(ex: SecondOrderExample, tol: float = 1e-12) -> int:
    """Loss-of-derivatives count N = 3 + 2 [3/2 + |b1| a_tt^{-1/2}] at z0.

    Requires a = da = 0 and a_tt > 0 at the basepoint; a_tt <= tol with
    b1 != 0 is the configuration known not to be well posed
    (IllPosedCase), with b1 = 0 the formula simply does not apply
    (DegenerateCase).
    """
    z = ex._z()
    a0 = np.real(ex.a.at(z))
    da = np.real(np.array([ex.a.derivative(0).at(z), ex.a.derivative(1).at(z)]))
    a_tt = float(np.real(ex.a.derivative(0).derivative(0).at(z)))
    if abs(a0) > tol or np.max(np.abs(da)) > tol:
        raise ValueError("basepoint must satisfy a(z0) = da(z0) = 0")
    b1_0 = complex(ex.b1.at(z))
    if a_tt <= tol:
        if abs(b1_0) > tol:
            raise IllPosedCase("a_tt = 0 with b1 != 0: not well posed")
        raise DegenerateCase("a_tt vanishes; the loss count formula does not apply")
    return 3 + 2 * math.floor(1.5 + abs(b1_0) / math.sqrt(a_tt))


@dataclass
class SecondOrderTrajectory:
    xi: float
    s: np.ndarray
    u: np.ndarray
    u1: np.ndarray
    stats: dict = field(default_factory=dict)

    def endpoint_magnitude(self) -> float:
        scale = max(1.0, abs(self.xi))
        return float(max(abs(self.u[-1]), abs(self.u1[-1]) / scale))

    def peak_magnitude(self) -> float:
        scale = max(1.0, abs(self.xi))
        return float(max(np.max(np.abs(self.u)), np.max(np.abs(self.u1)) / scale))


def simulate_second_order(
    ex: SecondOrderExample,
    xi_list,
    interval=(0.0, 1.0),
    data=(1.0, 0.0),
    forcing=None,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    dense_n: int = 1024,
) -> list[SecondOrderTrajectory]:
    """Integrate the frozen-coefficient mode equation

        u'' + a(s, x0) xi^2 u + i b0(s, x0) u' - b1(s, x0) xi u - c(s, x0) u = g

    per frequency (coefficients frozen at the basepoint's spatial
    coordinate; the probe detects necessary-condition failures, it is not a
    variable-coefficient simulation).
    """
    t0, t1 = interval
    x0 = ex.z0[1]

    def poly_at(sym: PolySymbol):
        # collapse to a complex polynomial in t at x = x0
        coeffs: dict[int, complex] = {}
        for term in sym.terms:
            c = term.coeff * (x0 ** term.x_exps[0] if term.x_exps[0] else 1.0)
            coeffs[term.t_exp] = coeffs.get(term.t_exp, 0.0) + c
        deg = max(coeffs, default=0)
        return tuple(coeffs.get(k, 0.0) for k in range(deg + 1))

    a_p, b0_p, b1_p, c_p = (poly_at(sym) for sym in (ex.a, ex.b0, ex.b1, ex.c))

    def horner(p, s):
        out = 0.0 + 0.0j
        for v in reversed(p):
            out = out * s + v
        return out

    out = []
    for xi in xi_list:
        g = forcing if forcing is not None else (lambda s: 0.0 + 0.0j)

        def rhs(s, y, xi=xi, g=g):
            u = complex(y[0], y[1])
            u1 = complex(y[2], y[3])
            u2 = (
                g(s)
                - horner(a_p, s) * xi * xi * u
                - 1j * horner(b0_p, s) * u1
                + horner(b1_p, s) * xi * u
                + horner(c_p, s) * u
            )
            return np.array([y[2], y[3], u2.real, u2.imag])

        y0 = np.array([complex(data[0]).real, complex(data[0]).imag,
                       complex(data[1]).real, complex(data[1]).imag])
        sol = solve_dp54(rhs, t0, t1, y0, rtol=rtol, atol=atol)
        s = np.linspace(t0, t1, dense_n + 1)
        y = sol.eval(s)
        out.append(
            SecondOrderTrajectory(
                xi=float(xi),
                s=s,
                u=y[:, 0] + 1j * y[:, 1],
                u1=y[:, 2] + 1j * y[:, 3],
                stats={"naccept": sol.naccept, "nfev": sol.nfev},
            )
        )
    return out


# ---------------------------------------------------------------------------
# Growth-model fitting
# ---------------------------------------------------------------------------


@dataclass
class GrowthReport:
    xi_abs: np.ndarray
    magnitudes: np.ndarray
    verdict: str
    poly_exponent: float
    poly_residual: float
    super_c: float
    super_sigma: float
    super_exponent: float
    super_residual: float
    residual_ratio: float
    magnitude_kind: str = "peak"

    @property
    def is_superpolynomial(self) -> bool:
        return self.verdict == SUPERPOLYNOMIAL


def _super_fit(logxi, logm, xi, sigma):
    """Least squares for log m = c xi^sigma + k log xi + c0 at fixed sigma."""
    basis = np.column_stack([xi**sigma, logxi, np.ones_like(logxi)])
    coef, *_ = np.linalg.lstsq(basis, logm, rcond=None)
    resid = logm - basis @ coef
    return coef, float(np.sum(resid**2))


def growth_fit(xi_abs, magnitudes, ratio_threshold: float = 100.0) -> GrowthReport:
    """Fit polynomial and super-polynomial growth models to mode magnitudes.

    The polynomial model is log m = k log|xi| + c0; the alternative adds a
    c |xi|^sigma term with sigma scanned then locally refined.  The verdict
    is SuperPolynomial only when the polynomial residual exceeds the
    alternative by ratio_threshold on the largest magnitude decade.
    """
    xi_abs = np.asarray(xi_abs, dtype=float)
    mags = np.asarray(magnitudes, dtype=float)
    if xi_abs.size < 8 or xi_abs.max() / xi_abs.min() < 2.0**7:
        raise InsufficientData("need at least 8 points spanning 8 octaves")
    if np.any(mags <= 0.0):
        raise ValueError("magnitudes must be positive")

    logxi = np.log(xi_abs)
    logm = np.log(mags)

    pk, pc = np.polyfit(logxi, logm, 1)
    poly_resid = float(np.sum((logm - (pk * logxi + pc)) ** 2))

    sigmas = np.arange(0.05, 1.51, 0.025)
    best = None
    for sigma in sigmas:
        coef, ssr = _super_fit(logxi, logm, xi_abs, sigma)
        if coef[0] < 0:
            continue  # decaying exponential is not a growth model
        if best is None or ssr < best[1]:
            best = (coef, ssr, sigma)
    if best is None:
        best = (np.array([0.0, pk, pc]), poly_resid, 0.0)
    # golden-section refinement of sigma around the best grid value
    (coef, ssr, sigma) = best
    lo, hi = max(0.01, sigma - 0.05), sigma + 0.05
    for _ in range(30):
        m1 = lo + 0.382 * (hi - lo)
        m2 = lo + 0.618 * (hi - lo)
        _, s1 = _super_fit(logxi, logm, xi_abs, m1)
        _, s2 = _super_fit(logxi, logm, xi_abs, m2)
        if s1 <= s2:
            hi = m2
        else:
            lo = m1
    sigma = 0.5 * (lo + hi)
    coef, ssr = _super_fit(logxi, logm, xi_abs, sigma)

    # model selection on the largest decade of |xi|
    top = xi_abs >= xi_abs.max() / 10.0
    poly_top = float(np.sum((logm - (pk * logxi + pc))[top] ** 2))
    super_top = float(np.sum((logm - (np.column_stack([xi_abs**sigma, logxi, np.ones_like(logxi)]) @ coef))[top] ** 2))
    ratio = poly_top / max(super_top, 1e-24)
    super_wins = ratio >= ratio_threshold and coef[0] > 0
    return GrowthReport(
        xi_abs=xi_abs,
        magnitudes=mags,
        verdict=SUPERPOLYNOMIAL if super_wins else POLYNOMIAL,
        poly_exponent=float(pk),
        poly_residual=poly_resid,
        super_c=float(coef[0]),
        super_sigma=float(sigma),
        super_exponent=float(coef[1]),
        super_residual=ssr,
        residual_ratio=float(ratio),
    )


def probe_second_order(
    ex: SecondOrderExample,
    octaves: int = 10,
    interval=(0.0, 1.0),
    data=(1.0, 0.0),
    rtol: float = 1e-8,
) -> GrowthReport:
    """Frequency-ladder growth probe of the second-order example; each
    magnitude is the worse of the two frequency signs."""
    xi_abs = 2.0 ** np.arange(octaves + 1)
    mags = []
    for xi in xi_abs:
        pair = simulate_second_order(ex, [xi, -xi], interval=interval, data=data, rtol=rtol)
        mags.append(max(t.peak_magnitude() for t in pair))
    return growth_fit(xi_abs, np.asarray(mags))


def probe_model_operator(
    op: ModelOperator,
    octaves: int = 10,
    direction=None,
    interval=(0.0, 1.0),
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> GrowthReport:
    """Growth probe of the third-order operator: zero data, unit forcing,
    frequencies on an octave ladder along a fixed direction (both signs)."""
    direction = np.asarray(direction if direction is not None else [1.0] + [0.0] * (op.n - 1))
    direction = direction / np.linalg.norm(direction)
    xi_abs = 2.0 ** np.arange(octaves + 1)
    unit = lambda s: 1.0 + 0.0j  # noqa: E731

    mags = []
    for r in xi_abs:
        worst = 0.0
        for sign in (1.0, -1.0):
            prob = ModeProblem(
                op=op,
                xi=sign * r * direction,
                forcing=unit,
                t0=interval[0],
                T=interval[1],
                data_site=LOWER_END,
                data=(0.0, 0.0, 0.0),
            )
            traj = integrate_mode(prob, rtol=rtol, atol=atol, dense_n=512)
            scale = max(1.0, r)
            worst = max(
                worst,
                float(np.max(np.abs(traj.u))),
                float(np.max(np.abs(traj.u1))) / scale,
                float(np.max(np.abs(traj.u2))) / scale**2,
            )
        mags.append(worst)
    return growth_fit(xi_abs, np.asarray(mags))
