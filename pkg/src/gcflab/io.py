"""Artifact readers/writers: CSV, binary snapshots, manifests.

All writers format floats with repr (shortest round-trip) and embed the
scenario hash, so identical scenarios reproduce byte-identical files.
"""
import json
import struct
from pathlib import Path

import numpy as np

from . import backend, __version__
from .graph2d import GraphState, GraphTrajectory
from .radial import RadialState, RadialTrajectory

_MAGIC = b"GCFB"
_BIN_VERSION = 1


def _fmt(v) -> str:
    return repr(float(v))


def write_manifest(path, scenario, traj=None, extra=None):
    params = scenario.params()
    doc = {
        "tool": "gcflab",
        "version": __version__,
        "backend": backend.name(),
        "scenario_hash": scenario.scenario_hash,
        "scenario": json.loads(scenario.canonical_json()),
        "alpha": params.alpha,
        "exponents": {
            "beta": params.beta, "theta": params.theta, "mu": params.mu,
            "gamma_exp": params.gamma_exp, "c_plus": params.c_plus,
        },
        "lambda_nd": params.lambda_nd,
        "cfl": scenario.cfl,
        "grid": scenario.grid,
        "seed": scenario.seed,
    }
    if traj is not None:
        doc["steps"] = traj.steps
        doc["clamps"] = traj.clamps
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True,
                                     default=float) + "\n", encoding="utf-8")


def write_radial_trajectory(path, traj: RadialTrajectory, scenario_hash: str):
    lines = [f"# scenario={scenario_hash}", "t,r,f,flat_flag"]
    for s in traj.states:
        tstr = _fmt(s.t)
        flat = s.flat_mask
        for i in range(s.r.size):
            lines.append(f"{tstr},{_fmt(s.r[i])},{_fmt(s.f[i])},{int(flat[i])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_radial_trajectory(path, params):
    times = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("t,"):
                continue
            t, r, f, _ = line.rstrip("\n").split(",")
            times.setdefault(float(t), []).append((float(r), float(f)))
    states = []
    for t in sorted(times):
        rows = np.array(times[t])
        states.append(RadialState(rows[:, 0], rows[:, 1], t))
    return RadialTrajectory(params=params, states=states)


def write_graph_snapshot_csv(path, state: GraphState, g: np.ndarray,
                             scenario_hash: str):
    lines = [f"# scenario={scenario_hash} t={_fmt(state.t)}",
             "x,y,f,g,flat_flag"]
    flat = state.flat_mask
    for i in range(state.x.size):
        xs = _fmt(state.x[i])
        for j in range(state.y.size):
            lines.append(
                f"{xs},{_fmt(state.y[j])},{_fmt(state.f[i, j])},"
                f"{_fmt(g[i, j])},{int(flat[i, j])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_graph_snapshot_binary(path, state: GraphState, g: np.ndarray,
                                alpha: float):
    """Header (magic, version, nx, ny, alpha, t) + x, y, f, g row-major f64
    + flat mask u8.  Format documented in the README."""
    nx, ny = state.f.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIIdd", _BIN_VERSION, nx, ny, alpha, state.t))
        fh.write(np.ascontiguousarray(state.x).tobytes())
        fh.write(np.ascontiguousarray(state.y).tobytes())
        fh.write(np.ascontiguousarray(state.f).tobytes())
        fh.write(np.ascontiguousarray(g).tobytes())
        fh.write(state.flat_mask.astype(np.uint8).tobytes())


def read_graph_snapshot_binary(path):
    """Returns (GraphState, g, alpha)."""
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not a gcflab binary snapshot")
    ver, nx, ny, alpha, t = struct.unpack_from("<IIIdd", raw, 4)
    if ver != _BIN_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {ver}")
    off = 4 + struct.calcsize("<IIIdd")
    x = np.frombuffer(raw, dtype="<f8", count=nx, offset=off).copy()
    off += 8 * nx
    y = np.frombuffer(raw, dtype="<f8", count=ny, offset=off).copy()
    off += 8 * ny
    f = np.frombuffer(raw, dtype="<f8", count=nx * ny, offset=off).reshape(nx, ny).copy()
    off += 8 * nx * ny
    g = np.frombuffer(raw, dtype="<f8", count=nx * ny, offset=off).reshape(nx, ny).copy()
    return GraphState(x, y, f, t), g, alpha


def write_graph_trajectory(outdir, traj: GraphTrajectory, scenario_hash: str):
    outdir = Path(outdir)
    index = [f"# scenario={scenario_hash}", "k,t,csv,bin"]
    for k, (s, p) in enumerate(zip(traj.states, traj.pressures())):
        csv_name = f"snapshot_{k:04d}.csv"
        bin_name = f"snapshot_{k:04d}.bin"
        write_graph_snapshot_csv(outdir / csv_name, s, p.g, scenario_hash)
        write_graph_snapshot_binary(outdir / bin_name, s, p.g,
                                    traj.params.alpha)
        index.append(f"{k},{_fmt(s.t)},{csv_name},{bin_name}")
    (outdir / "snapshots.csv").write_text("\n".join(index) + "\n",
                                          encoding="utf-8")


def read_graph_trajectory(outdir, params) -> GraphTrajectory:
    outdir = Path(outdir)
    states = []
    for path in sorted(outdir.glob("snapshot_*.bin")):
        state, _, _ = read_graph_snapshot_binary(path)
        states.append(state)
    if not states:
        raise FileNotFoundError(f"no snapshot_*.bin files in {outdir}")
    return GraphTrajectory(params=params, states=states)


def write_interface_series(path, curves, scenario_hash: str):
    lines = [f"# scenario={scenario_hash}", "t,epsilon,theta,gamma"]
    for c in curves:
        ts, es = _fmt(c.t), _fmt(c.epsilon)
        for th, ga, ok in zip(c.theta, c.gamma, c.valid):
            if ok:
                lines.append(f"{ts},{es},{_fmt(th)},{_fmt(ga)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_interface_series(path):
    """Returns {epsilon: [(t, theta array, gamma array)], ...}."""
    rows = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("t,"):
                continue
            t, e, th, ga = (float(v) for v in line.rstrip("\n").split(","))
            rows.setdefault(e, {}).setdefault(t, []).append((th, ga))
    out = {}
    for e, by_t in rows.items():
        series = []
        for t in sorted(by_t):
            arr = np.array(by_t[t])
            series.append((t, arr[:, 0], arr[:, 1]))
        out[e] = series
    return out


def write_supersolution_report(path, report, scenario_hash: str):
    lines = [f"# scenario={scenario_hash}", "r,t,residual"]
    for r, t, res in report.rows():
        lines.append(f"{_fmt(r)},{_fmt(t)},{_fmt(res)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_exponent_report(path, report, scenario_hash: str):
    lines = [f"# scenario={scenario_hash}", "collar_width,beta_hat,r2"]
    for fit in report.fits:
        lines.append(f"{_fmt(fit.collar_width)},{_fmt(fit.beta_hat)},{_fmt(fit.r2)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_audit_report(outdir, report, scenario_hash: str):
    outdir = Path(outdir)
    doc = {"scenario_hash": scenario_hash,
           "passed": report.passed,
           "records": json.loads(report.to_json())}
    (outdir / "audit.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True, default=float) + "\n",
        encoding="utf-8")
    lines = [f"# scenario={scenario_hash}",
             "name,passed,measured_min,measured_max,fitted_constant,region,t0,t1"]
    for r in report.records:
        lines.append(
            f"{r.name},{int(r.passed)},{_fmt(r.measured_min)},"
            f"{_fmt(r.measured_max)},{_fmt(r.fitted_constant)},"
            f"\"{r.region}\",{_fmt(r.time_range[0])},{_fmt(r.time_range[1])}")
    (outdir / "audit.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_patch_csv(path, patch, coeffs, residual, residual_alt,
                    scenario_hash: str):
    lines = [f"# scenario={scenario_hash}",
             "z,y,t,h,a11,a12,a22,b,btilde1,btilde2,Kh,residual"]
    nt, nz, ny = patch.h.shape
    for kt in range(nt):
        for iz in range(nz):
            for jy in range(ny):
                if not patch.valid[kt, iz, jy]:
                    continue
                vals = [patch.z[iz], patch.y[jy], patch.times[kt],
                        patch.h[kt, iz, jy], coeffs.a11[kt, iz, jy],
                        coeffs.a12[kt, iz, jy], coeffs.a22[kt, iz, jy],
                        coeffs.b[kt, iz, jy], coeffs.b1t[kt, iz, jy],
                        coeffs.b2t[kt, iz, jy], coeffs.k_h[kt, iz, jy],
                        residual[kt, iz, jy]]
                lines.append(",".join(_fmt(v) for v in vals))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
