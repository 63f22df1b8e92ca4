"""Command-line interface: scenario runs, audits, reports, plots."""
import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import backend, io, svgplot, __version__
from .audit import audit_report
from .errors import GCFError, ScenarioError
from .graph2d import run_graph2d
from .hodograph import analyze_patches
from .interface import extract_level, fit_vanishing_exponent
from .params import derive_exponents
from .radial import (flat_radius, run_radial, verify_supersolution,
                     waiting_time)
from .scenario import Scenario, build_initial_state, builtin_scenario


def _load_scenario(args) -> Scenario:
    if getattr(args, "builtin", None):
        return builtin_scenario(args.builtin)
    if not args.scenario:
        raise ScenarioError("provide --scenario <path> or --builtin <name>")
    return Scenario.from_file(args.scenario)


def _workers() -> int:
    env = os.environ.get("GCF_THREADS", "")
    return max(1, int(env)) if env else min(4, os.cpu_count() or 1)


def _run_to_dir(scenario: Scenario, outdir: Path, refine: int = 0):
    outdir.mkdir(parents=True, exist_ok=True)
    params = scenario.params()
    state = build_initial_state(scenario, refine=refine)
    shash = scenario.scenario_hash
    outputs = scenario.outputs()
    if scenario.geometry == "radial":
        traj = run_radial(state, params, outputs, cfl=scenario.cfl)
        io.write_radial_trajectory(outdir / "trajectory.csv", traj, shash)
    else:
        traj = run_graph2d(state, params, outputs, cfl=scenario.cfl)
        io.write_graph_trajectory(outdir, traj, shash)
    eps_levels = (0.0,) + tuple(scenario.audit_config().eps_levels)
    curves = []
    for s in traj.states:
        for eps in eps_levels:
            c = extract_level(s, eps, n_theta=scenario.audit_config().n_theta,
                              params=params)
            if not c.partial:
                curves.append(c)
    io.write_interface_series(outdir / "interface_series.csv", curves, shash)
    if scenario.initial.get("kind") == "flat_disc":
        try:
            rep = fit_vanishing_exponent(traj.states[-1], params,
                                         (0.2, 0.1, 0.05))
            io.write_exponent_report(outdir / "exponent_report.csv", rep,
                                     shash)
        except GCFError:
            pass  # flat side consumed or collar unresolved at this grid
    io.write_manifest(outdir / "manifest.json", scenario, traj,
                      extra={"refine": refine})
    return traj


def cmd_simulate(args) -> int:
    scenario = _load_scenario(args)
    traj = _run_to_dir(scenario, Path(args.out), refine=args.refine)
    print(f"simulated {scenario.name}: {len(traj.states)} snapshots, "
          f"{traj.steps} steps -> {args.out}")
    return 0


def cmd_audit(args) -> int:
    scenario = _load_scenario(args)
    outdir = Path(args.out)
    params = scenario.params()
    if scenario.geometry != "graph2d":
        print("audit requires a graph2d artifact directory", file=sys.stderr)
        return 2
    traj = io.read_graph_trajectory(outdir, params)
    report = audit_report(traj, scenario.audit_config())
    if args.check:
        report.records = [r for r in report.records if args.check in r.name]
    io.write_audit_report(outdir, report, scenario.scenario_hash)
    for line in report.summary_lines():
        print(line)
    return 0 if report.passed else 1


def cmd_waiting(args) -> int:
    scenario = _load_scenario(args)
    outdir = Path(args.out)
    params = scenario.params()
    if scenario.geometry != "radial":
        print("waiting requires a radial artifact directory", file=sys.stderr)
        return 2
    traj = io.read_radial_trajectory(outdir / "trajectory.csv", params)
    traj.params = params
    wcfg = scenario.waiting
    tol = wcfg.get("tol", 1e-8)
    tstar = waiting_time(traj, wcfg.get("p0_radius", 0.0), tol=tol)
    radii = [(s.t, flat_radius(s, tol=tol)) for s in traj.states]
    T = wcfg.get("barrier_T", 1.0)
    scan_t = np.linspace(0.0, 0.5 * T, 9)
    scan_r = np.linspace(0.05, traj.states[0].r[-1], 64)
    ss = verify_supersolution(params, scan_r, scan_t, T)
    io.write_supersolution_report(outdir / "supersolution_scan.csv", ss,
                                  scenario.scenario_hash)
    lines = [f"# scenario={scenario.scenario_hash}", "t,flat_radius"]
    lines += [f"{repr(t)},{repr(r)}" for t, r in radii]
    (outdir / "flat_radius.csv").write_text("\n".join(lines) + "\n",
                                            encoding="utf-8")
    doc = {"t_star": tstar, "tol": tol,
           "supersolution_min_residual": ss.min_residual,
           "flat_radius_at_half_tstar": float(
               np.interp(tstar / 2, [r[0] for r in radii],
                         [r[1] for r in radii]))}
    (outdir / "waiting.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"waiting time t*={tstar:g}; min supersolution residual "
          f"{ss.min_residual:.3e}")
    return 0


def cmd_hodograph(args) -> int:
    scenario = _load_scenario(args)
    outdir = Path(args.out)
    params = scenario.params()
    if scenario.geometry != "graph2d":
        print("hodograph requires a graph2d artifact directory", file=sys.stderr)
        return 2
    traj = io.read_graph_trajectory(outdir, params)
    hcfg = scenario.hodograph
    results = analyze_patches(
        traj.pressures(), params,
        n_targets=hcfg.get("n_targets", 4), c_min=hcfg.get("c_min", 0.05),
        nz=hcfg.get("nz", 13), ny=hcfg.get("ny", 13),
        gamma=hcfg.get("gamma", 0.5), n_pairs=hcfg.get("n_pairs", 4000),
        seed=hcfg.get("seed", scenario.seed))
    summary = []
    for k, entry in enumerate(results):
        row = {"p0": list(entry["p0"]), "theta": entry["theta"]}
        if "frame_error" in entry:
            row["frame_error"] = entry["frame_error"]
        else:
            ell = entry["ellipticity"]
            row.update({
                "eta": entry["frame"].eta,
                "roundtrip_max": entry["patch"].roundtrip_max,
                "lambda_min": ell.lambda_min, "lambda_max": ell.lambda_max,
                "b_min": ell.b_min, "btilde1_min": ell.b1t_min,
                "ellipticity_passed": ell.passed,
                "residual_sup": entry["residual_sup"],
                "seminorms": entry["seminorms"],
            })
            io.write_patch_csv(outdir / f"patch_{k:02d}.csv", entry["patch"],
                               entry["coeffs"], entry["residual"],
                               entry["residual_alt"], scenario.scenario_hash)
        summary.append(row)
    (outdir / "hodograph.json").write_text(
        json.dumps({"scenario_hash": scenario.scenario_hash,
                    "patches": summary}, indent=2, sort_keys=True,
                   default=float) + "\n", encoding="utf-8")
    print(f"analyzed {len(summary)} interface targets -> hodograph.json")
    return 0


def cmd_converge(args) -> int:
    scenario = _load_scenario(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    params = scenario.params()
    levels = list(range(args.refine + 1))

    def observable(level):
        state = build_initial_state(scenario, refine=level)
        if scenario.geometry == "radial":
            traj = run_radial(state, params, [scenario.t_end], cfl=scenario.cfl)
            last = traj.states[-1]
            curve = extract_level(last, 0.0, params=params)
            return float(last.f[0]), float(curve.gamma[0])
        traj = run_graph2d(state, params, [scenario.t_end], cfl=scenario.cfl)
        last = traj.states[-1]
        curve = extract_level(last, 0.0, params=params)
        i, j = last.f.shape[0] // 2, last.f.shape[1] // 2
        return float(last.f[i, j]), float(np.mean(curve.gamma[curve.valid]))

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        obs = list(pool.map(observable, levels))
    doc = {"levels": levels,
           "center_height": [o[0] for o in obs],
           "interface_radius": [o[1] for o in obs]}
    for key in ("center_height", "interface_radius"):
        vals = doc[key]
        if len(vals) >= 3:
            d1 = abs(vals[1] - vals[0])
            d2 = abs(vals[2] - vals[1])
            doc[f"{key}_order"] = float(np.log2(d1 / d2)) if d2 > 0 else np.inf
    (outdir / "converge.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True, default=float) + "\n",
        encoding="utf-8")
    for key in ("center_height_order", "interface_radius_order"):
        if key in doc:
            print(f"{key}: {doc[key]:.2f}")
    return 0


def cmd_sphere_test(args) -> int:
    alpha = args.alpha
    scenario = builtin_scenario("sphere")
    scenario = Scenario(**{**json.loads(scenario.canonical_json()),
                           "alpha": alpha,
                           "grid": {"n": args.n, "r_max": 0.98}})
    params = derive_exponents(alpha)
    state = build_initial_state(scenario)
    t0 = time.time()
    traj = run_radial(state, params, scenario.outputs(), cfl=scenario.cfl)
    wall = time.time() - t0
    m = 2 * alpha + 1
    errs = [abs(s.f[0] - (1.0 - (1.0 - m * s.t) ** (1.0 / m)))
            for s in traj.states]
    err = max(errs)
    ok = err <= args.tol
    print(f"sphere-test alpha={alpha} n={args.n}: sup center-height error "
          f"{err:.3e} (tol {args.tol:g}), {traj.steps} steps, {wall:.1f}s "
          f"[{'PASS' if ok else 'FAIL'}]")
    return 0 if ok else 1


def cmd_plot(args) -> int:
    outdir = Path(args.out)
    made = []
    series_path = outdir / "interface_series.csv"
    manifest = outdir / "manifest.json"
    prov = ""
    if manifest.exists():
        prov = json.loads(manifest.read_text()).get("scenario_hash", "")
    if series_path.exists():
        data = io.read_interface_series(series_path)
        series = []
        for eps in sorted(data):
            pts = [(t, float(np.mean(g))) for t, _, g in data[eps]]
            series.append((np.array([p[0] for p in pts]),
                           np.array([p[1] for p in pts]),
                           f"eps={eps:g}"))
        svgplot.line_plot(outdir / "interface_radius.svg", series,
                          title="interface radius vs time", xlabel="t",
                          ylabel="mean gamma",
                          provenance=f"scenario={prov}")
        made.append("interface_radius.svg")
    exp_path = outdir / "exponent_report.csv"
    if exp_path.exists():
        rows = np.loadtxt(exp_path, delimiter=",", skiprows=2)
        rows = np.atleast_2d(rows)
        svgplot.line_plot(outdir / "exponent_fit.svg",
                          [(rows[:, 0], rows[:, 1], "beta_hat")],
                          title="vanishing exponent vs collar width",
                          xlabel="collar width", ylabel="beta_hat",
                          provenance=f"scenario={prov}")
        made.append("exponent_fit.svg")
    if not made:
        print(f"nothing to plot in {outdir} (no interface_series.csv)",
              file=sys.stderr)
        return 2
    print("wrote " + ", ".join(made))
    return 0


def cmd_bench(args) -> int:
    from ._kernels_py import graph_advance as py_graph
    results = {}
    for name in backend.available():
        mod = backend._BACKENDS[name]
        n = args.n
        x = np.linspace(-2, 2, n)
        xx, yy = np.meshgrid(x, x, indexing="ij")
        rr = np.sqrt(xx ** 2 + yy ** 2)
        f = np.maximum(rr - 0.5, 0.0) ** 2 * 0.2
        f = np.ascontiguousarray(f + 1.8 * np.maximum(rr - 1.3, 0.0) ** 2)
        dx = x[1] - x[0]
        t0 = time.time()
        t, steps, _, _ = mod.graph_advance(f, dx, dx, 1.0, 0.4, 0.0, args.t)
        wall = time.time() - t0
        results[name] = (wall, steps)
        print(f"{name:9s}: {steps} steps in {wall:.2f}s "
              f"({steps * n * n / wall / 1e6:.1f} Mnode-updates/s)")
    if len(results) == 2:
        speedup = results["python"][0] / results["compiled"][0]
        print(f"speedup compiled/python: {speedup:.1f}x")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gcflab",
        description="Numerical laboratory for alpha-Gauss curvature flow "
                    "with flat sides")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_out=True):
        p.add_argument("--scenario", help="scenario JSON path")
        p.add_argument("--builtin", help="builtin scenario name")
        if needs_out:
            p.add_argument("--out", required=True, help="artifact directory")

    p = sub.add_parser("simulate", help="run a scenario and write artifacts")
    add_common(p)
    p.add_argument("--refine", type=int, default=0,
                   help="halve the grid spacing this many times")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("audit", help="estimate audits on a graph2d artifact")
    add_common(p)
    p.add_argument("--check", default="", help="run only checks whose name "
                   "contains this substring")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("waiting", help="waiting-time report on a radial artifact")
    add_common(p)
    p.set_defaults(func=cmd_waiting)

    p = sub.add_parser("hodograph", help="hodograph patches on a graph2d artifact")
    add_common(p)
    p.set_defaults(func=cmd_hodograph)

    p = sub.add_parser("converge", help="refinement study with observed orders")
    add_common(p)
    p.add_argument("--refine", type=int, default=2)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("sphere-test", help="shrinking-sphere oracle check")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--n", type=int, default=2048)
    p.add_argument("--tol", type=float, default=5e-3)
    p.set_defaults(func=cmd_sphere_test)

    p = sub.add_parser("plot", help="emit SVG diagnostics from an artifact dir")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("bench", help="compare kernel backends")
    p.add_argument("--n", type=int, default=129)
    p.add_argument("--t", type=float, default=0.05)
    p.set_defaults(func=cmd_bench)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GCFError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
