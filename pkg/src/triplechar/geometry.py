"""Fundamental-matrix diagnostics at critical points of the principal symbol.

At a critical point the linearized Hamiltonian flow of the symbol p is the
Hamiltonian map F = J H, with H the phase-space Hessian of p and J the
standard symplectic matrix; in block form

    F = [[p_{xi,x}, p_{xi,xi}], [-p_{x,x}, -p_{x,xi}]].

An operator point is effectively hyperbolic when F carries exactly one
simple real eigenvalue pair (mu, -mu) and everything else sits on the
imaginary axis.  When no real pair exists, two classical necessary
conditions on the subprincipal symbol apply; both are evaluated here.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import IllConditionedWarning, NotCritical
from .operators import FullSymbol, PolySymbol

SNAP_TOL = 1e-8   # |Re mu| <= SNAP_TOL * ||F|| is treated as purely imaginary
SEP_TOL = 1e-6    # required spectral separation of the real pair
COND_LIMIT = 1e8  # eigenvalue condition estimate that trips the warning flag

EFFECTIVELY_HYPERBOLIC = "EffectivelyHyperbolic"
NOT_EFFECTIVELY_HYPERBOLIC = "NotEffectivelyHyperbolic"


@dataclass(frozen=True)
class PhasePoint:
    """Point (x, xi) of phase space with the x_0 = t, xi_0 = tau convention."""

    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=float))
        if self.x.shape != self.xi.shape or self.x.ndim != 1:
            raise ValueError("x and xi must be 1-d arrays of equal length")
        if np.linalg.norm(self.xi) == 0.0:
            raise ValueError("xi must be nonzero")

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate([self.x, self.xi])

    @property
    def t(self) -> float:
        return float(self.x[0])

    @property
    def tau(self) -> float:
        return float(self.xi[0])


def symplectic_matrix(m: int) -> np.ndarray:
    j = np.zeros((2 * m, 2 * m))
    j[:m, m:] = np.eye(m)
    j[m:, :m] = -np.eye(m)
    return j


def _symbol_scale(p: PolySymbol, z: PhasePoint) -> float:
    return max(1.0, float(np.linalg.norm(z.xi)) ** 3, float(np.linalg.norm(z.coords)) ** 3)


def gradient_norm(p: PolySymbol, z: PhasePoint) -> float:
    return float(np.linalg.norm(np.real(p.gradient(z.coords))))


@dataclass(frozen=True)
class FundamentalMatrix:
    entries: np.ndarray
    basepoint: PhasePoint
    hessian: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def hamiltonian_residual(self) -> float:
        """||J F - (J F)^T|| / ||F||; zero for an exact Hamiltonian map."""
        m = self.entries.shape[0] // 2
        jf = symplectic_matrix(m) @ self.entries
        denom = max(self.norm, 1e-300)
        return float(np.linalg.norm(jf - jf.T) / denom)


def fundamental_matrix(p: PolySymbol, z: PhasePoint, tol: float = 1e-7) -> FundamentalMatrix:
    """Hamiltonian map J H(z) of the symbol; defined invariantly only on the
    critical set, so a non-critical point raises NotCritical."""
    scale = _symbol_scale(p, z)
    if gradient_norm(p, z) > tol * scale:
        raise NotCritical(f"|dp| = {gradient_norm(p, z):.3g} at the requested point")
    hess = p.hessian(z.coords)
    m = hess.shape[0] // 2
    f = symplectic_matrix(m) @ hess
    return FundamentalMatrix(entries=f, basepoint=z, hessian=hess)


def critical_points_on_t0(p: PolySymbol, x_slice, xi_grid, tol: float = 1e-9) -> list[PhasePoint]:
    """Grid points (t=0, x, tau=0, xi) where p and dp vanish to tolerance.

    The gradient is evaluated in closed form from the polynomial symbol.
    """
    found = []
    for x_sp in np.atleast_2d(np.asarray(x_slice, dtype=float)):
        for xi_sp in np.atleast_2d(np.asarray(xi_grid, dtype=float)):
            z = PhasePoint(np.concatenate([[0.0], x_sp]), np.concatenate([[0.0], xi_sp]))
            scale = _symbol_scale(p, z)
            if abs(np.real(p.at(z.coords))) <= tol * scale and gradient_norm(p, z) <= tol * scale:
                found.append(z)
    return found


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    verdict: str
    real_pair: tuple[float, float] | None = None
    residuals: dict = field(default_factory=dict)
    ill_conditioned: bool = False


def spectral_symmetry_residual(eigs: np.ndarray, norm: float) -> float:
    """Distance of the spectrum from its images under mu -> -mu and
    mu -> conj(mu), normalized by ||F||; zero for an exact Hamiltonian
    spectrum (quadruple symmetry)."""
    denom = max(norm, 1e-300)

    def hausdorff(a, b):
        return max(np.min(np.abs(a[:, None] - b[None, :]), axis=1).max(), 0.0)

    res = max(hausdorff(eigs, -eigs), hausdorff(eigs, np.conj(eigs)))
    return float(res / denom)


def classify_spectrum(
    f: FundamentalMatrix,
    snap_tol: float = SNAP_TOL,
    sep_tol: float = SEP_TOL,
) -> SpectrumReport:
    """Eigenvalues of F with the effective-hyperbolicity verdict.

    Values with |Re mu| <= snap_tol * ||F|| are snapped to the imaginary
    axis.  The verdict is positive exactly when one simple real pair
    (mu, -mu) survives and every other eigenvalue is purely imaginary after
    snapping.  Ill-conditioned eigenproblems are flagged, not fatal.
    """
    a = f.entries
    norm = f.norm
    if norm == 0.0:
        eigs = np.zeros(a.shape[0], dtype=complex)
        return SpectrumReport(eigenvalues=eigs, verdict=NOT_EFFECTIVELY_HYPERBOLIC,
                              residuals={"symmetry": 0.0, "norm": 0.0})

    eigs, vl, vr = scipy.linalg.eig(a, left=True, right=True)
    # reciprocal eigenvalue condition numbers
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.abs(np.einsum("ij,ij->j", vl.conj(), vr))
        s /= np.linalg.norm(vl, axis=0) * np.linalg.norm(vr, axis=0)
    max_cond = float(np.max(1.0 / np.maximum(s, 1e-300)))
    ill = max_cond > COND_LIMIT
    if ill:
        warnings.warn(
            f"eigenvalue condition estimate {max_cond:.2e} exceeds {COND_LIMIT:.0e}",
            IllConditionedWarning,
        )

    snapped = eigs.copy()
    snapped[np.abs(snapped.real) <= snap_tol * norm] = 1j * snapped[np.abs(snapped.real) <= snap_tol * norm].imag

    real_mask = (np.abs(snapped.imag) <= snap_tol * norm) & (snapped.real != 0.0)
    pos = snapped[real_mask & (snapped.real > 0.0)]
    neg = snapped[real_mask & (snapped.real < 0.0)]

    verdict = NOT_EFFECTIVELY_HYPERBOLIC
    real_pair = None
    off_axis = snapped[~real_mask & (np.abs(snapped.real) > snap_tol * norm)]
    if len(pos) == 1 and len(neg) == 1 and len(off_axis) == 0:
        mu = float(pos[0].real)
        mu_neg = float(neg[0].real)
        others = snapped[~real_mask]
        sep = np.min(np.abs(others - mu)) if len(others) else np.inf
        sep_n = np.min(np.abs(others - mu_neg)) if len(others) else np.inf
        if (
            abs(mu + mu_neg) <= sep_tol * norm
            and min(sep, sep_n) >= sep_tol * norm
        ):
            verdict = EFFECTIVELY_HYPERBOLIC
            real_pair = (mu, mu_neg)

    return SpectrumReport(
        eigenvalues=eigs,
        verdict=verdict,
        real_pair=real_pair,
        residuals={
            "symmetry": spectral_symmetry_residual(eigs, norm),
            "norm": norm,
            "max_eig_condition": max_cond,
        },
        ill_conditioned=ill,
    )


# ---------------------------------------------------------------------------
# Subprincipal symbol and the necessary conditions
# ---------------------------------------------------------------------------


def subprincipal_symbol(full: FullSymbol, z: PhasePoint, tol: float = 1e-7) -> complex:
    """p_{m-1}(z) + (i/2) sum_j d^2 p_m / dx_j dxi_j (z).

    The trace runs over all phase pairs including (t, tau); for the model
    operator part d^2 p_3 / dt dtau = -a2 at the t = tau = 0 critical
    points, so the correction there is -(i/2) a2.  Only invariantly defined
    on the critical set: NotCritical otherwise.
    """
    scale = _symbol_scale(full.principal, z)
    if gradient_norm(full.principal, z) > tol * scale:
        raise NotCritical("subprincipal symbol requested off the critical set")
    lower = full.lower.at(z.coords)
    trace = full.principal.mixed_trace(z.coords)
    return complex(lower) + 0.5j * complex(trace)


@dataclass
class NecessaryConditionsReport:
    vacuous: bool
    spectrum: SpectrumReport
    subprincipal: complex | None = None
    im_value: float | None = None
    im_ok: bool | None = None
    quarter_sum: float | None = None
    re_value: float | None = None
    re_ok: bool | None = None

    @property
    def verdict(self) -> str:
        if self.vacuous:
            return "ConditionsVacuous"
        return "Pass" if (self.im_ok and self.re_ok) else "Fail"


def check_necessary_conditions(
    full: FullSymbol,
    z: PhasePoint,
    im_tol: float = 1e-9,
    snap_tol: float = SNAP_TOL,
) -> NecessaryConditionsReport:
    """Evaluate the two classical necessary conditions at a critical point.

    With a real eigenvalue pair present the conditions are vacuous
    (effectively hyperbolic case).  Otherwise both Im p' = 0 and the
    quarter-sum bound |Re p'| <= (1/4) sum_j |mu_j| are checked, the sum
    running over the (purely imaginary) eigenvalues with multiplicity.
    """
    f = fundamental_matrix(full.principal, z)
    spectrum = classify_spectrum(f, snap_tol=snap_tol)
    if spectrum.verdict == EFFECTIVELY_HYPERBOLIC:
        return NecessaryConditionsReport(vacuous=True, spectrum=spectrum)

    sub = subprincipal_symbol(full, z)
    scale = max(1.0, abs(sub))
    quarter = 0.25 * float(np.sum(np.abs(spectrum.eigenvalues.imag)))
    im_ok = abs(sub.imag) <= im_tol * scale
    re_ok = abs(sub.real) <= quarter + im_tol * scale
    return NecessaryConditionsReport(
        vacuous=False,
        spectrum=spectrum,
        subprincipal=sub,
        im_value=float(sub.imag),
        im_ok=bool(im_ok),
        quarter_sum=quarter,
        re_value=float(sub.real),
        re_ok=bool(re_ok),
    )
