"""Built-in invariant battery behind the ``selftest`` subcommand.

A fast subset of the acceptance checks: root/oracle agreement, weight
inequalities, fundamental-matrix verdicts, one manufactured mode, the
master identity and the scalar weight inequality.  Prints one line per
check.
"""
from __future__ import annotations

import numpy as np

from . import energy, geometry, modes, symbols
from .operators import laplacian_operator, random_model_operator, saddle_check_symbol


def _sample_hyperbolic(rng, op, n):
    while True:
        t = rng.uniform(1e-3, 0.2)
        x = rng.uniform(-1, 1, size=n)
        xi = rng.normal(size=n)
        xi *= rng.uniform(0.5, 4.0) / np.linalg.norm(xi)
        if symbols.discriminant(op, t, x, xi) <= 0.0:
            return t, x, xi


def run_selftest(verbose: bool = True, samples: int = 500) -> bool:
    rng = np.random.default_rng(1234)
    checks = []

    def record(name, ok, detail=""):
        checks.append(ok)
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}{': ' + detail if detail else ''}")

    # roots against the companion-matrix oracle, plus the product identity
    worst_root = worst_vieta = 0.0
    for k in range(samples):
        op = random_model_operator(np.random.default_rng(k), n=2)
        t, x, xi = _sample_hyperbolic(rng, op, 2)
        analysis = symbols.solve_cubic_trig(op, t, x, xi)
        bq, cq, dq = op.cubic_coefficients(t, x, xi)
        ref = np.sort(np.roots([1.0, bq, cq, dq]).real)
        scale = max(1.0, float(np.max(np.abs(ref))))
        worst_root = max(worst_root, float(np.max(np.abs(np.sort(analysis.lam) - ref))) / scale)
        lam = analysis.lam
        vieta = max(
            abs(lam.sum() + bq),
            abs(lam[0] * lam[1] + lam[0] * lam[2] + lam[1] * lam[2] - cq),
            abs(lam.prod() + dq),
        ) / max(1.0, scale**3)
        worst_vieta = max(worst_vieta, vieta)
    record("roots vs companion oracle", worst_root < 1e-9, f"max rel err {worst_root:.2e}")
    record("Vieta residuals", worst_vieta < 1e-9, f"max rel err {worst_vieta:.2e}")

    # weight inequalities on a coarse grid
    alpha = symbols.weight_alpha_scan(np.linspace(0, 1, 200), np.geomspace(1e-4, 1e6, 200))
    record("weight inequality alpha >= 1/3", alpha >= 1.0 / 3.0 - 1e-12, f"alpha {alpha:.4f}")

    # fundamental matrix benchmark spectrum
    p = saddle_check_symbol()
    z = geometry.PhasePoint(np.array([0.0, 0.3]), np.array([0.0, 1.0]))
    rep = geometry.classify_spectrum(geometry.fundamental_matrix(p, z))
    eigs = np.sort(rep.eigenvalues.real)
    ok = np.allclose(eigs, [-2, 0, 0, 2], atol=1e-10) and rep.verdict == geometry.EFFECTIVELY_HYPERBOLIC
    record("saddle symbol spectrum {2,-2,0,0}", ok)

    verdicts = []
    for k in range(10):
        op = random_model_operator(np.random.default_rng(1000 + k), n=2)
        zz = geometry.PhasePoint(np.array([0.0, 0.1, -0.2]), np.array([0.0, 0.6, 0.8]))
        r = geometry.classify_spectrum(geometry.fundamental_matrix(op.principal_symbol(), zz))
        verdicts.append(r.verdict == geometry.EFFECTIVELY_HYPERBOLIC)
    record("model operators effectively hyperbolic", all(verdicts), f"{sum(verdicts)}/10")

    # one manufactured mode: u = s^3 for the flat operator
    op = laplacian_operator(n=2)
    forcing = lambda s: 6.0 + 3.0 * np.asarray(s) ** 3 + 0.0j  # noqa: E731
    prob = modes.ModeProblem(op=op, xi=np.array([1.0, 0.0]), forcing=forcing)
    traj = modes.integrate_mode(prob)
    err = float(np.max(np.abs(traj.u - traj.s**3)))
    record("manufactured cubic mode", err < 1e-8, f"max err {err:.2e}")

    res = energy.verify_master_identity(traj, op, lam=10.0, n_weight=2)
    record("master identity residual", res < 1e-7, f"{res:.2e}")

    s = np.linspace(0, 1, 2049)
    margin = energy.verify_scalar_weight_inequality(s, s**2 + 0j, 2 * s + 0j, a=1.0, k=2, lam=10.0)
    record("scalar weight inequality margin <= 0", margin <= 1e-9, f"{margin:.2e}")

    ok = all(checks)
    if verbose:
        print(f"selftest: {sum(checks)}/{len(checks)} checks passed")
    return ok
