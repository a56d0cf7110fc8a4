"""Characteristic-root diagnostics for the degenerate cubic symbol.

The monic characteristic cubic at a symbol point is

    tau^3 + B tau^2 + C tau + D,   B = t a1, C = -t a2, D = t^2 a3.

With q = (3C - B^2)/9 and r = (9BC - 27D - 2B^3)/54 the discriminant is
Delta = q^3 + r^2, nonpositive exactly on the hyperbolic region, and the
real roots take the trigonometric form

    lambda_k = 2 rho^{1/3} cos(theta/3 + 2 pi (k-1)/3) - B/3,
    rho = (-q)^{3/2},  theta = arccos(r / rho).

delta_k is the tau-derivative of the cubic at the k-th root, equal to the
product of root gaps; its lower bound gamma * t * a2 on a time window is
what the scan below fits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DiscriminantPositive, ScanFailed
from .operators import ModelOperator

RHO_MIN = 1e-30  # below this the arccos form is numerically meaningless


def principal_symbol(op: ModelOperator, t, x, tau, xi) -> float:
    """tau^3 + t a1 tau^2 - t a2 tau + t^2 a3 at the symbol point."""
    return op.principal(t, x, tau, xi)


def _qr(op: ModelOperator, t, x, xi):
    b_, c_, d_ = op.cubic_coefficients(t, x, xi)
    q = (3.0 * c_ - b_ * b_) / 9.0
    r = (9.0 * b_ * c_ - 27.0 * d_ - 2.0 * b_**3) / 54.0
    return b_, q, r


@dataclass(frozen=True)
class CubicAnalysis:
    """Roots of the characteristic cubic with the intermediates that
    produced them."""

    lam: np.ndarray
    q: float
    r: float
    rho: float
    theta: float
    discriminant: float
    delta: np.ndarray
    branch: str  # "trig" or "cardano_fallback"
    clamp_excess: float = 0.0

    def as_sorted(self) -> np.ndarray:
        return np.sort(self.lam)


def _delta_values(op: ModelOperator, t, x, xi, roots) -> np.ndarray:
    a1v, a2v, _ = op.coefficient_values(t, x, xi)
    lam = np.asarray(roots, dtype=float)
    return 3.0 * lam**2 + 2.0 * t * a1v * lam - t * a2v


def solve_cubic_trig(op: ModelOperator, t, x, xi, tol: float = 1e-9) -> CubicAnalysis:
    """Real roots of the characteristic cubic via the arccos form.

    Raises DiscriminantPositive when Delta exceeds tol relative to its
    natural scale max(|q|^3, r^2): the point left the hyperbolic region.
    When rho < RHO_MIN (coincident-root regime, e.g. t = 0) the arccos form
    is replaced by a Newton-polished depressed-cubic solve and the branch
    flag records the fallback.
    """
    b_, q, r = _qr(op, t, x, xi)
    delta_disc = q**3 + r**2
    scale = max(abs(q) ** 3, r * r, 1e-300)
    if delta_disc > tol * scale:
        raise DiscriminantPositive(delta_disc)

    shift = b_ / 3.0
    rho = (-q) ** 1.5 if q < 0.0 else 0.0
    if rho < RHO_MIN:
        roots = _depressed_fallback(q, r) - shift
        analysis = CubicAnalysis(
            lam=roots,
            q=q,
            r=r,
            rho=rho,
            theta=0.0,
            discriminant=delta_disc,
            delta=_delta_values(op, t, x, xi, roots),
            branch="cardano_fallback",
        )
        return analysis

    ratio = r / rho
    clamped = min(1.0, max(-1.0, ratio))
    theta = math.acos(clamped)
    base = 2.0 * rho ** (1.0 / 3.0)
    roots = np.array(
        [
            base * math.cos(theta / 3.0) - shift,
            base * math.cos(theta / 3.0 + 2.0 * math.pi / 3.0) - shift,
            base * math.cos(theta / 3.0 + 4.0 * math.pi / 3.0) - shift,
        ]
    )
    return CubicAnalysis(
        lam=roots,
        q=q,
        r=r,
        rho=rho,
        theta=theta,
        discriminant=delta_disc,
        delta=_delta_values(op, t, x, xi, roots),
        branch="trig",
        clamp_excess=abs(ratio) - 1.0 if abs(ratio) > 1.0 else 0.0,
    )


def _depressed_fallback(q: float, r: float) -> np.ndarray:
    """Roots of y^3 + 3 q y - 2 r = 0 (all real): one Newton-polished real
    root, then quadratic deflation."""
    # y^3 + p y + qq with p = 3 q, qq = -2 r
    p = 3.0 * q
    qq = -2.0 * r
    y = -math.copysign(abs(qq) ** (1.0 / 3.0), qq) if qq != 0.0 else 0.0
    for _ in range(50):
        f = y**3 + p * y + qq
        df = 3.0 * y * y + p
        if df == 0.0:
            break
        step = f / df
        y -= step
        if abs(step) <= 1e-16 * max(1.0, abs(y)):
            break
    disc = -3.0 * y * y - 4.0 * p
    s = math.sqrt(disc) if disc > 0.0 else 0.0
    return np.array([y, (-y + s) / 2.0, (-y - s) / 2.0])


def discriminant(op: ModelOperator, t, x, xi, full: bool = False):
    """Delta = q^3 + r^2 at the direction xi/|xi|.

    Inputs with |xi| != 1 are normalized first; with ``full=True`` the
    applied normalization |xi| is returned alongside (Delta is homogeneous
    of degree 6, so Delta(xi) = |xi|^6 * Delta(xi/|xi|)).
    """
    xi = np.asarray(xi, dtype=float)
    norm = float(np.linalg.norm(xi))
    if norm == 0.0:
        raise ValueError("xi must be nonzero")
    unit = xi / norm
    _, q, r = _qr(op, t, x, unit)
    value = q**3 + r**2
    if full:
        return value, norm
    return value


def delta_symbols(analysis: CubicAnalysis, op: ModelOperator, t, x, xi, check_tol: float = 1e-6) -> np.ndarray:
    """tau-derivative of the cubic at each root.

    The values are verified internally against the product of root gaps
    (lam_k - lam_i)(lam_k - lam_j), an identity for monic cubics.
    """
    lam = analysis.lam
    formula = _delta_values(op, t, x, xi, lam)
    product = np.array(
        [
            (lam[0] - lam[1]) * (lam[0] - lam[2]),
            (lam[1] - lam[0]) * (lam[1] - lam[2]),
            (lam[2] - lam[0]) * (lam[2] - lam[1]),
        ]
    )
    scale = max(1.0, float(np.max(np.abs(lam))) ** 2)
    gap = float(np.max(np.abs(formula - product)))
    if gap > check_tol * scale:
        raise ArithmeticError(f"delta identity violated by {gap:.3g} (roots inconsistent)")
    return formula


@dataclass
class Lemma2Scan:
    gamma: float
    gamma1: float
    table: list = field(default_factory=list)  # rows (t, xi, min|delta|/(t a2), cos_dev)
    cos_dev_max: float = 0.0
    cos_dev_sqrt_coeff: float = 0.0  # max |cos(theta/3) - sqrt(3)/2| / sqrt(t)


def unit_directions(n: int, count: int) -> np.ndarray:
    """Antipodally symmetric unit directions; analytic for n <= 2."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        angles = 2.0 * math.pi * np.arange(count) / count
        return np.column_stack([np.cos(angles), np.sin(angles)])
    rng = np.random.default_rng(7)
    half = max(1, count // 2)
    dirs = rng.normal(size=(half, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return np.vstack([dirs, -dirs])


def lemma2_scan(
    op: ModelOperator,
    x,
    t_max: float,
    n_t: int = 40,
    n_dir: int = 16,
    a2_floor: float = 1e-12,
) -> Lemma2Scan:
    """Fit the largest gamma with min_k |delta_k| >= gamma * t * a2 on the
    scanned window, and the largest prefix gamma1 <= t_max on which the
    bound stays positive.

    Raises ScanFailed when no positive gamma exists on any subinterval
    (degenerate a2, or a non-effectively-hyperbolic input).
    """
    dirs = unit_directions(op.n, n_dir)
    t_nodes = t_max * (np.arange(1, n_t + 1) / n_t)
    sqrt32 = math.sqrt(3.0) / 2.0

    per_t_min = []
    table = []
    cos_dev_max = 0.0
    cos_dev_sqrt = 0.0
    for t in t_nodes:
        worst = math.inf
        worst_dir = None
        worst_cos = 0.0
        for d in dirs:
            a2v = op.a2(t, x, d)
            if a2v <= a2_floor:
                raise ScanFailed(f"a2 <= {a2_floor:g} at t={t:.4g}, xi={d}")
            try:
                analysis = solve_cubic_trig(op, t, x, d)
            except DiscriminantPositive as exc:
                raise ScanFailed(f"left hyperbolic region at t={t:.4g}, xi={d}") from exc
            ratio = float(np.min(np.abs(analysis.delta))) / (t * a2v)
            cos_dev = abs(math.cos(analysis.theta / 3.0) - sqrt32) if analysis.branch == "trig" else 0.0
            cos_dev_max = max(cos_dev_max, cos_dev)
            cos_dev_sqrt = max(cos_dev_sqrt, cos_dev / math.sqrt(t))
            if ratio < worst:
                worst = ratio
                worst_dir = d
                worst_cos = cos_dev
        per_t_min.append(worst)
        table.append((float(t), np.array(worst_dir), worst, worst_cos))

    per_t_min = np.asarray(per_t_min)
    if per_t_min[0] <= 0.0:
        raise ScanFailed("no positive gamma on any subinterval")
    positive = per_t_min > 0.0
    k_stop = int(np.argmin(positive)) if not positive.all() else len(t_nodes)
    gamma1 = float(t_nodes[k_stop - 1])
    gamma = float(np.min(per_t_min[:k_stop]))
    return Lemma2Scan(
        gamma=gamma,
        gamma1=gamma1,
        table=table,
        cos_dev_max=cos_dev_max,
        cos_dev_sqrt_coeff=cos_dev_sqrt,
    )


# ---------------------------------------------------------------------------
# The degenerate-scale weight f(t, xi) = t + (1 + a(xi))^{-1/3}
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightFunction:
    """Weight driving the energy method; a(xi) is the elliptic form of the
    operator evaluated on the t = 0, x = 0 slice (the model's a2 carries no
    time dependence)."""

    op: ModelOperator

    def a_value(self, xi):
        return self.op.a2(0.0, np.zeros(self.op.n), xi)

    def f(self, t, xi):
        a = np.asarray(self.a_value(xi))
        return t + (1.0 + a) ** (-1.0 / 3.0)

    def f_power(self, t, xi, p: float):
        return self.f(t, xi) ** p


def weight_f(op: ModelOperator, t, xi):
    return WeightFunction(op).f(t, xi)


def weight_power(op: ModelOperator, t, xi, p: float):
    return WeightFunction(op).f_power(t, xi, p)


def max_root_multiplicity(op: ModelOperator, x, t_nodes, n_dir: int = 8, cluster_tol: float = 1e-7) -> int:
    """Largest characteristic-root cluster over the sampled (t, xi) slices.

    Roots within cluster_tol (relative to the root scale) count as one
    cluster; the degenerate class shows multiplicity 3 exactly on the t = 0
    slice and at most 2 on interior slices.  Sampled slices only: no global
    certification is attempted.
    """
    dirs = unit_directions(op.n, n_dir)
    worst = 1
    for t in np.atleast_1d(np.asarray(t_nodes, dtype=float)):
        for d in dirs:
            lam = np.sort(solve_cubic_trig(op, t, x, d).lam)
            scale = max(1.0, float(np.abs(lam).max()))
            cluster = 1
            run = 1
            for a, b in zip(lam[:-1], lam[1:]):
                run = run + 1 if (b - a) <= cluster_tol * scale else 1
                cluster = max(cluster, run)
            worst = max(worst, cluster)
    return worst


def hyperbolicity_window(op: ModelOperator, x, t_max: float = 1.0, n_t: int = 200, n_dir: int = 8) -> float:
    """Largest scanned t0 <= t_max with Delta <= 0 on [0, t0] across unit
    directions; 0.0 when the very first node already fails."""
    dirs = unit_directions(op.n, n_dir)
    t_nodes = t_max * (np.arange(1, n_t + 1) / n_t)
    t0 = 0.0
    for t in t_nodes:
        if any(discriminant(op, t, x, d) > 0.0 for d in dirs):
            return t0
        t0 = float(t)
    return t0


def weight_alpha_scan(t_nodes, a_nodes) -> float:
    """Largest alpha validated on the (t, a) grid for the reduced weight
    inequality 1/(1+a) + t f^2 >= alpha f^3.

    The infimum of the left/right ratio over t >= 0, a >= 0 is
    1 - 2/(3 sqrt(3)) ~= 0.615, so the fitted alpha always clears the
    admissible term-by-term constant 1/3.
    """
    t = np.asarray(t_nodes, dtype=float)[:, None]
    a = np.asarray(a_nodes, dtype=float)[None, :]
    g = (1.0 + a) ** (-1.0 / 3.0)
    f = t + g
    lhs = 1.0 / (1.0 + a) + t * f**2
    ratio = lhs / f**3
    return float(ratio.min())


def weight_inequality_alpha(op: ModelOperator, t_nodes, xi_nodes) -> float:
    """Same scan with a = a2(xi) taken from the operator over a xi grid."""
    w = WeightFunction(op)
    a_vals = np.atleast_1d(np.asarray(w.a_value(np.asarray(xi_nodes, dtype=float))))
    return weight_alpha_scan(t_nodes, a_vals)


def weight_consequence_margin(t_nodes, a_nodes, alpha: float, N: int) -> float:
    """Worst margin of  t a f^{-2N-1} + f^{-2N-3} - alpha a f^{-2N}  on the
    grid (nonnegative when the consequence inequality holds)."""
    t = np.asarray(t_nodes, dtype=float)[:, None]
    a = np.asarray(a_nodes, dtype=float)[None, :]
    f = t + (1.0 + a) ** (-1.0 / 3.0)
    lhs = t * a * f ** (-2 * N - 1) + f ** (-2 * N - 3)
    rhs = alpha * a * f ** (-2 * N)
    return float((lhs - rhs).min())
