"""Scenario-driven command line: parse configs, dispatch subcommands, run
sweeps, emit CSV/JSON reports.

Exit codes: 0 on success, 2 on verification failure, 1 on input error.
Reports embed the scenario hash and tool version; no timestamps, so
identical scenario + seed + worker count reproduces identical bytes.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import energy, geometry, modes, scaling, symbols, wellposed
from .errors import NoStabilization, ScanFailed, ScenarioError, TriplecharError
from .scenario import Scenario

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VERIFY = 2


def _load_scenario(args) -> Scenario:
    if args.scenario is None:
        raise ScenarioError("/: --scenario is required (bundled ones live in triplechar/scenarios)")
    path = Path(args.scenario)
    if not path.exists():
        bundled = resources.files("triplechar") / "scenarios" / args.scenario
        if bundled.is_file():
            return Scenario.from_dict(json.loads(bundled.read_text()), path=str(bundled))
        raise ScenarioError(f"/: scenario file not found: {args.scenario}")
    sc = Scenario.load(path)
    if args.seed is not None:
        sc.raw["seed"] = args.seed
    return sc


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, scenario: Scenario, payload: dict):
    doc = {"version": __version__, "scenario_hash": scenario.canonical_hash(), **payload}
    path.write_text(json.dumps(doc, sort_keys=True, indent=2, default=_json_default) + "\n")
    print(f"wrote {path}")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"not serializable: {type(obj)}")


def _write_csv(path: Path, header: list[str], rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path}")


def _write_table(path: Path, header: list[str], rows):
    """Whitespace-separated table with a comment header (plot-friendly)."""
    with open(path, "w") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for row in rows:
            fh.write(" ".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row) + "\n")
    print(f"wrote {path}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_roots(args) -> int:
    sc = _load_scenario(args)
    op = sc.operator()
    scan = sc.scan_params()
    out = _out_dir(args)
    x0 = np.zeros(sc.n)
    try:
        result = symbols.lemma2_scan(op, x0, scan["t_max"], n_t=scan["n_t"], n_dir=scan["n_dir"])
    except ScanFailed as exc:
        _write_json(out / f"roots_{sc.name}.json", sc, {"status": "ScanFailed", "detail": str(exc)})
        return EXIT_VERIFY

    rows = []
    oracle_err = 0.0
    for t, d, ratio, cos_dev in result.table:
        analysis = symbols.solve_cubic_trig(op, t, x0, d)
        bq, cq, dq = op.cubic_coefficients(t, x0, d)
        ref = np.sort(np.roots([1.0, bq, cq, dq]).real)
        oracle_err = max(oracle_err, float(np.max(np.abs(np.sort(analysis.lam) - ref))))
        rows.append(
            [t, *d, *analysis.lam, *analysis.delta, ratio, analysis.discriminant, cos_dev]
        )
    n = sc.n
    header = (
        ["t"] + [f"xi{i}" for i in range(n)] + ["lam1", "lam2", "lam3"]
        + ["delta1", "delta2", "delta3", "min_ratio", "Delta", "cos_dev"]
    )
    _write_csv(out / f"roots_{sc.name}.csv", header, rows)
    _write_json(
        out / f"roots_{sc.name}.json",
        sc,
        {
            "status": "ok",
            "gamma": result.gamma,
            "gamma1": result.gamma1,
            "cos_dev_max": result.cos_dev_max,
            "cos_dev_sqrt_coeff": result.cos_dev_sqrt_coeff,
            "companion_oracle_max_abs_err": oracle_err,
        },
    )
    return EXIT_OK


def cmd_geometry(args) -> int:
    sc = _load_scenario(args)
    op = sc.operator()
    full = op.full_symbol()
    p = full.principal
    dirs = symbols.unit_directions(sc.n, 8)
    x_slice = [np.zeros(sc.n)]
    points = geometry.critical_points_on_t0(p, x_slice, dirs)
    reports = []
    for z in points:
        f = geometry.fundamental_matrix(p, z)
        spec = geometry.classify_spectrum(f)
        cond = geometry.check_necessary_conditions(full, z)
        sub = geometry.subprincipal_symbol(full, z)
        reports.append(
            {
                "x": z.x,
                "xi": z.xi,
                "eigenvalues": [{"re": v.real, "im": v.imag} for v in np.sort_complex(spec.eigenvalues)],
                "verdict": spec.verdict,
                "real_pair": spec.real_pair,
                "symmetry_residual": spec.residuals["symmetry"],
                "hamiltonian_residual": f.hamiltonian_residual(),
                "subprincipal": sub,
                "conditions": cond.verdict,
            }
        )
    _write_json(_out_dir(args) / f"geometry_{sc.name}.json", sc, {"reports": reports})
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = _load_scenario(args)
    op = sc.operator()
    grid = sc.xi_grid()
    params = sc.solver_params()
    if args.tol is not None:
        params["rtol"] = args.tol
        params["atol"] = args.tol * 1e-2
    t0, t1 = sc.interval
    if args.t0 is not None:
        t0 = args.t0
    if args.T is not None:
        t1 = args.T
    direction = args.direction
    site = modes.LOWER_END if direction == "forward" else modes.UPPER_END
    count = args.modes if args.modes else grid.size
    problems = [
        modes.ModeProblem(
            op=op,
            xi=pt,
            forcing=sc.battery_forcing(0, q, pt),
            t0=t0,
            T=t1,
            data_site=site,
            label=f"mode{q}",
        )
        for q, pt in enumerate(grid.points[:count])
    ]
    results = modes.sweep(problems, rtol=params["rtol"], atol=params["atol"],
                          dense_n=params["dense_n"], workers=args.workers)
    out = _out_dir(args)
    summary = []
    failures = 0
    for q, res in enumerate(results):
        if isinstance(res, modes.ModeFailure):
            failures += 1
            summary.append({"mode": q, "xi": res.problem.xi, "status": res.kind, "detail": res.error})
            continue
        rows = np.column_stack(
            [res.s, res.u.real, res.u.imag, np.abs(res.u1), np.abs(res.u2), res.residual]
        )
        _write_csv(
            out / f"simulate_{sc.name}_mode{q}.csv",
            ["s", "re_u", "im_u", "abs_u1", "abs_u2", "residual"],
            rows.tolist(),
        )
        summary.append(
            {
                "mode": q,
                "xi": res.problem.xi,
                "status": "ok",
                "max_residual": res.max_residual,
                "steps": res.stats["naccept"],
            }
        )
    _write_json(out / f"simulate_{sc.name}.json", sc,
                {"direction": direction, "modes": summary, "failures": failures})
    return EXIT_VERIFY if failures else EXIT_OK


def _sweep_battery(sc: Scenario, direction: str, workers: int):
    params = sc.solver_params()
    battery = []
    for member in sc.battery_problems(direction):
        results = modes.sweep(member, rtol=params["rtol"], atol=params["atol"],
                              dense_n=params["dense_n"], workers=workers)
        bad = [r for r in results if isinstance(r, modes.ModeFailure)]
        if bad:
            raise TriplecharError(f"battery sweep failed: {bad[0].error}")
        battery.append(results)
    return battery


def cmd_verify_estimate(args) -> int:
    sc = _load_scenario(args)
    if args.battery is not None:
        try:
            sc.raw["battery"] = json.loads(Path(args.battery).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"/battery: cannot read battery file: {exc}") from exc
        sc = Scenario.from_dict(sc.raw, path=sc.path)
    op = sc.operator()
    grid = sc.xi_grid()
    direction = args.direction
    battery = _sweep_battery(sc, direction, args.workers)
    out = _out_dir(args)

    if args.N is not None and args.lam is not None:
        report = energy.assemble_estimate(battery[0], op, grid, args.lam, args.N, direction)
        ratios = [
            energy.assemble_estimate(member, op, grid, lam, args.N, direction).ratio
            for member in battery
            for lam in (args.lam, 2 * args.lam)
        ]
        fitted_c = max(ratios[0::2])
        improving = all(r2 <= r1 * (1.0 + 1e-9) for r1, r2 in zip(ratios[0::2], ratios[1::2]))
        passed = improving and report.ratio <= fitted_c * (1.0 + 1e-12)
        payload = {
            "direction": direction,
            "N": args.N,
            "lambda": args.lam,
            "lhs": report.lhs,
            "rhs": report.rhs,
            "ratio": report.ratio,
            "C": fitted_c,
            "ratio_improves_with_lambda": improving,
            "pass": bool(passed),
            "norm_orders": report.norm_orders,
            "rhs_order": report.rhs_order,
            "semi_discrete": report.semi_discrete,
        }
        _write_json(out / f"estimate_{sc.name}_{direction}.json", sc, payload)
        _write_csv(
            out / f"estimate_{sc.name}_{direction}_modes.csv",
            [f"xi{i}" for i in range(sc.n)] + ["lhs", "rhs"],
            [[*xi, l, r] for xi, l, r in report.per_mode],
        )
        return EXIT_OK if passed else EXIT_VERIFY

    try:
        fit = energy.fit_constants(battery, op, grid, sc.n_list(), sc.lambda_grid(), direction)
    except NoStabilization as exc:
        _write_json(out / f"estimate_{sc.name}_{direction}.json", sc,
                    {"status": "NoStabilization", "detail": str(exc)})
        return EXIT_VERIFY
    row = fit.selected
    check = energy.check_lambda_multiples(row, battery, op, grid, direction)
    payload = {
        "direction": direction,
        "status": "ok",
        "selected_N": row.n_weight,
        "lambda0": row.lambda0,
        "C": row.c_constant,
        "multiples_check": check,
        "rows": {
            str(n): {"lambda0": r.lambda0, "C": r.c_constant} for n, r in fit.rows.items()
        },
    }
    _write_json(out / f"estimate_{sc.name}_{direction}.json", sc, payload)
    return EXIT_OK if check["ok"] else EXIT_VERIFY


def cmd_probe(args) -> int:
    sc = _load_scenario(args)
    op = sc.operator()
    params = sc.probe_params()
    report = wellposed.probe_model_operator(op, octaves=params["octaves"], direction=params["direction"])
    out = _out_dir(args)
    rows = np.column_stack([report.xi_abs, report.magnitudes]).tolist()
    _write_csv(out / f"probe_{sc.name}.csv", ["abs_xi", "magnitude"], rows)
    _write_table(out / f"probe_{sc.name}.dat", ["abs_xi", "magnitude"], rows)
    _write_json(
        out / f"probe_{sc.name}.json",
        sc,
        {
            "verdict": report.verdict,
            "poly_exponent": report.poly_exponent,
            "super_sigma": report.super_sigma,
            "super_c": report.super_c,
            "residual_ratio": report.residual_ratio,
            "magnitude_kind": report.magnitude_kind,
        },
    )
    return EXIT_OK


def cmd_oleinik(args) -> int:
    sc = _load_scenario(args)
    ex = sc.second_order_example()
    out = _out_dir(args)
    payload: dict = {}
    code = EXIT_OK
    try:
        payload["loss_count"] = wellposed.oleinik_loss_count(ex)
        payload["status"] = "WellPosed"
    except wellposed.IllPosedCase as exc:
        payload["status"] = "IllPosedCase"
        payload["detail"] = str(exc)
    except wellposed.DegenerateCase as exc:
        payload["status"] = "DegenerateCase"
        payload["detail"] = str(exc)

    if not args.no_probe:
        report = wellposed.probe_second_order(ex, octaves=10)
        payload["probe_verdict"] = report.verdict
        payload["probe_poly_exponent"] = report.poly_exponent
        payload["probe_super_sigma"] = report.super_sigma
        rows = np.column_stack([report.xi_abs, report.magnitudes]).tolist()
        _write_csv(out / f"oleinik_{sc.name}.csv", ["abs_xi", "magnitude"], rows)
        _write_table(out / f"oleinik_{sc.name}.dat", ["abs_xi", "magnitude"], rows)
    _write_json(out / f"oleinik_{sc.name}.json", sc, payload)
    return code


def cmd_scale(args) -> int:
    sc = _load_scenario(args)
    op = sc.operator()
    eps, n_big = scaling.resolve_coupling(args.epsilon, args.N, coupling=args.coupling)
    rescaled = scaling.rescale_operator(op, eps)
    payload = {
        "epsilon": eps,
        "N": n_big,
        "coupling": args.coupling,
        "prefactor_exponents": {k: str(v) for k, v in rescaled.prefactor_exponents.items()},
        "prefactors": {k: rescaled.prefactor(k) for k in rescaled.prefactor_exponents},
        "operator": rescaled.as_model_operator().to_json(),
    }
    _write_json(_out_dir(args) / f"scale_{sc.name}.json", sc, payload)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    ok = run_selftest(verbose=True)
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="triplechar", description=__doc__)
    ap.add_argument("--version", action="version", version=f"triplechar {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", help="scenario JSON path or bundled name")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")

    p = sub.add_parser("roots", help="characteristic-root scan and gap-bound fit")
    common(p)
    p.set_defaults(func=cmd_roots)

    p = sub.add_parser("geometry", help="fundamental-matrix spectra at t=0 critical points")
    common(p)
    p.set_defaults(func=cmd_geometry)

    p = sub.add_parser("simulate", help="per-mode trajectories")
    common(p)
    p.add_argument("--modes", type=int, default=None, help="limit the number of grid modes")
    p.add_argument("--tol", type=float, default=None, help="override solver rtol")
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--direction", choices=["forward", "backward"], default="forward")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-estimate", help="fit and verify the weighted a-priori estimate")
    common(p)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--direction", choices=["forward", "backward"], default="forward")
    p.add_argument("--battery", default=None, help="JSON file overriding the scenario battery section")
    p.set_defaults(func=cmd_verify_estimate)

    p = sub.add_parser("probe", help="frequency-ladder growth probe of the operator")
    common(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("oleinik", help="loss-of-derivatives count and second-order probe")
    common(p)
    p.add_argument("--no-probe", action="store_true", help="skip the frequency ladder")
    p.set_defaults(func=cmd_oleinik)

    p = sub.add_parser("scale", help="anisotropic rescaling of the operator")
    common(p)
    group = p.add_argument_group("coupling (epsilon * N <= coupling)")
    group.add_argument("--epsilon", type=float, default=None)
    group.add_argument("--N", type=int, default=None)
    group.add_argument("--coupling", type=float, default=1.0)
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("selftest", help="run the built-in invariant battery")
    common(p)
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TriplecharError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
