"""Snapshot audits of the quantitative a-priori bounds.

Each check measures a band (or a sup) of one diagnostic quantity on the
strictly convex collar next to the free boundary and compares it against a
configured threshold.  The underlying theory proves that the constants exist;
it does not give values, so every threshold is configuration, calibrated once
on the benchmark scenario.
"""
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from ._kernels_py import graph_stencil
from .graph2d import GraphState, GraphTrajectory, PressureState, p_quantity, \
    gauss_curvature, pressure_state
from .interface import check_envelope, extract_level, fit_speed_band
from .params import FlowParams


@dataclass
class AuditConfig:
    """Thresholds and region cuts for the estimate audits."""

    collar_lo: float = 0.02      # pressure range of the audit collar
    collar_hi: float = 0.5
    grad_region_hi: float = 1.0  # gradient band region {0 < g <= this}
    grad_lo: float = None        # default: lambda_nd
    grad_hi: float = None        # default: 1/lambda_nd
    pinch_max: float = 4.0       # max/min of K^a / g^(1/(2a-1))
    gt_max: float = 10.0
    tang_max: float = 12.0
    x_max: float = 15.0          # sup of the level-set curvature quantity
    ab_min: float = -1.0         # det D^2 g >= this
    z_max: float = 15.0
    sd_lo: float = 0.02          # second-derivative bands in [sd_lo, 1/sd_lo]
    p_max: float = np.inf
    frame_tol: float = 1e-8      # |grad g| below this: frame undefined
    eps_levels: tuple = (0.01, 0.04)
    n_theta: int = 181
    envelope_t0_frac: float = 0.3
    envelope_residual_tol: float = 0.05
    r0: float = None             # enclosing-ball radius for P (default: grid)

    def gradient_thresholds(self, params: FlowParams):
        lo = params.lambda_nd if self.grad_lo is None else self.grad_lo
        hi = 1.0 / params.lambda_nd if self.grad_hi is None else self.grad_hi
        return lo, hi


@dataclass
class CheckRecord:
    """One audited bound: what was measured and whether it passed."""

    name: str
    bound_form: str
    measured_min: float
    measured_max: float
    fitted_constant: float
    passed: bool
    region: str
    time_range: tuple
    details: dict = field(default_factory=dict)


@dataclass
class EstimateReport:
    records: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failures(self):
        return [r for r in self.records if not r.passed]

    def to_json(self) -> str:
        return json.dumps([asdict(r) for r in self.records], indent=2,
                          default=float, sort_keys=True)

    def summary_lines(self):
        for r in self.records:
            yield (f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: "
                   f"[{r.measured_min:.6g}, {r.measured_max:.6g}] "
                   f"({r.bound_form})")


def _fields(pstate: PressureState):
    g = pstate.g
    gx, gy, gxx, gyy, gxy = graph_stencil(g, pstate.dx, pstate.dy)
    return g, gx, gy, gxx, gyy, gxy


def _interior(shape, margin=1):
    m = np.zeros(shape, dtype=bool)
    m[margin:-margin, margin:-margin] = True
    return m


def gradient_band(pstate: PressureState, params: FlowParams,
                  config: AuditConfig = AuditConfig()):
    """|Dg| band on {collar_lo < g <= grad_region_hi}.

    The collar_lo floor keeps the band out of the half-cell layer at the
    interface where central stencils smear the gradient.
    """
    g, gx, gy, *_ = _fields(pstate)
    sel = ((g > config.collar_lo) & (g <= config.grad_region_hi)
           & _interior(g.shape))
    if not sel.any():
        return None
    mag = np.hypot(gx[sel], gy[sel])
    lo, hi = config.gradient_thresholds(params)
    mn, mx = float(mag.min()), float(mag.max())
    return CheckRecord(
        name="gradient_band", bound_form=f"{lo:g} <= |Dg| <= {hi:g}",
        measured_min=mn, measured_max=mx,
        fitted_constant=mx / mn if mn > 0 else np.inf,
        passed=bool(mn >= lo and mx <= hi),
        region=f"{config.collar_lo:g}<g<={config.grad_region_hi:g}",
        time_range=(pstate.t, pstate.t))


def curvature_pinching(state: GraphState, pstate: PressureState,
                       params: FlowParams, config: AuditConfig = AuditConfig()):
    """Band of (K / g^(1/(2a-1)))^a on the collar.

    K in the stated convention det D^2 f / (1+|Df|^2); the decay exponent of
    K itself is 1/(2a-1) = 2 beta - 3, so the a-th power of the normalized
    curvature is the quantity with a finite positive band (it equals
    g_t (1+|Df|^2)^((2a-1)/2)).
    """
    k, _ = gauss_curvature(state, convention="paper")
    g = pstate.g
    sel = (g > config.collar_lo) & (g <= config.collar_hi) & _interior(g.shape)
    if not sel.any():
        return None
    zero_k = int(np.count_nonzero(k[sel] <= 0))
    ok = sel & (k > 0)
    ratio = (k[ok] / g[ok] ** (1.0 / (2 * params.alpha - 1.0))) ** params.alpha
    mn, mx = float(ratio.min()), float(ratio.max())
    return CheckRecord(
        name="curvature_pinching",
        bound_form=f"max/min of (K/g^(1/(2a-1)))^a <= {config.pinch_max:g}",
        measured_min=mn, measured_max=mx, fitted_constant=mx / mn,
        passed=bool(mx / mn <= config.pinch_max and zero_k == 0),
        region=f"{config.collar_lo:g}<g<={config.collar_hi:g}",
        time_range=(pstate.t, pstate.t),
        details={"zero_curvature_nodes": zero_k})


def gt_band(pstates, params: FlowParams, config: AuditConfig = AuditConfig()):
    """Band of g_t (central differences over snapshots) on the collar."""
    if len(pstates) < 3:
        raise ValueError("need at least 3 snapshots for g_t")
    mn, mx = np.inf, -np.inf
    for k in range(1, len(pstates) - 1):
        a, b, c = pstates[k - 1], pstates[k], pstates[k + 1]
        gt = (c.g - a.g) / (c.t - a.t)
        sel = ((b.g > config.collar_lo) & (b.g <= config.collar_hi)
               & (a.g > 0) & (c.g > 0) & _interior(b.g.shape))
        if not sel.any():
            continue
        mn = min(mn, float(gt[sel].min()))
        mx = max(mx, float(gt[sel].max()))
    if not np.isfinite(mn):
        return None
    return CheckRecord(
        name="gt_band", bound_form=f"0 < g_t <= {config.gt_max:g}",
        measured_min=mn, measured_max=mx,
        fitted_constant=mx / mn if mn > 0 else np.inf,
        passed=bool(mn > 0 and mx <= config.gt_max),
        region=f"{config.collar_lo:g}<g<={config.collar_hi:g}",
        time_range=(pstates[0].t, pstates[-1].t))


def _frame_select(pstate, config):
    g, gx, gy, gxx, gyy, gxy = _fields(pstate)
    mag2 = gx ** 2 + gy ** 2
    sel = ((g > config.collar_lo) & (g <= config.collar_hi)
           & (mag2 >= config.frame_tol ** 2) & _interior(g.shape))
    skipped = int(np.count_nonzero(
        (g > config.collar_lo) & (g <= config.collar_hi)
        & (mag2 < config.frame_tol ** 2)))
    return (g, gx, gy, gxx, gyy, gxy, mag2, sel, skipped)


def tangential_band(pstate: PressureState, params: FlowParams,
                    config: AuditConfig = AuditConfig()):
    """Band of g_tau_tau (second tangential derivative on level sets)."""
    g, gx, gy, gxx, gyy, gxy, mag2, sel, skipped = _frame_select(pstate, config)
    if not sel.any():
        return None
    gtt = (gy ** 2 * gxx - 2 * gx * gy * gxy + gx ** 2 * gyy)[sel] / mag2[sel]
    mn, mx = float(gtt.min()), float(gtt.max())
    return CheckRecord(
        name="tangential_band", bound_form=f"0 < g_tautau <= {config.tang_max:g}",
        measured_min=mn, measured_max=mx,
        fitted_constant=mx / mn if mn > 0 else np.inf,
        passed=bool(mn > 0 and mx <= config.tang_max),
        region=f"{config.collar_lo:g}<g<={config.collar_hi:g}",
        time_range=(pstate.t, pstate.t),
        details={"skipped_frame_nodes": skipped})


def lemma43_quantity(pstate: PressureState, params: FlowParams) -> np.ndarray:
    """X = gy^2 gxx - 2 gx gy gxy + gx^2 gyy + (g (gxx+gyy) + theta |Dg|^2)."""
    g, gx, gy, gxx, gyy, gxy = _fields(pstate)
    return (gy ** 2 * gxx - 2 * gx * gy * gxy + gx ** 2 * gyy
            + (g * (gxx + gyy) + params.theta * (gx ** 2 + gy ** 2)))


def x_quantity_record(pstate: PressureState, params: FlowParams,
                      config: AuditConfig = AuditConfig(),
                      gt_field: np.ndarray = None):
    """Sup of the maximum-principle quantity X over the collar.

    When a g_t field is supplied, the free-boundary identity
    X = g_t^(1/a)/theta + theta |Dg|^2 is probed on the innermost band of the
    collar and the median relative mismatch is recorded.
    """
    x = lemma43_quantity(pstate, params)
    g, gx, gy, *_ = _fields(pstate)
    sel = (g > 0) & (g <= config.collar_hi) & _interior(g.shape)
    if not sel.any():
        return None
    details = {}
    if gt_field is not None:
        band = sel & (g <= max(2 * config.collar_lo, 1e-3)) & (gt_field > 0)
        if band.any():
            ref = (gt_field[band] ** (1.0 / params.alpha) / params.theta
                   + params.theta * (gx[band] ** 2 + gy[band] ** 2))
            details["boundary_identity_median_mismatch"] = float(
                np.median(np.abs(x[band] - ref) / np.abs(ref)))
    mn, mx = float(x[sel].min()), float(x[sel].max())
    return CheckRecord(
        name="x_quantity", bound_form=f"sup X <= {config.x_max:g}",
        measured_min=mn, measured_max=mx, fitted_constant=mx,
        passed=bool(mx <= config.x_max),
        region=f"0<g<={config.collar_hi:g}",
        time_range=(pstate.t, pstate.t), details=details)


def aronson_benilan(pstate: PressureState, params: FlowParams,
                    config: AuditConfig = AuditConfig()):
    """Minimum of det D^2 g over the collar (one-sided lower bound)."""
    g, gx, gy, gxx, gyy, gxy = _fields(pstate)
    sel = (g > config.collar_lo) & (g <= config.collar_hi) & _interior(g.shape)
    if not sel.any():
        return None
    det = (gxx * gyy - gxy ** 2)[sel]
    mn, mx = float(det.min()), float(det.max())
    return CheckRecord(
        name="aronson_benilan", bound_form=f"det D^2 g >= {config.ab_min:g}",
        measured_min=mn, measured_max=mx, fitted_constant=mn,
        passed=bool(mn >= config.ab_min),
        region=f"{config.collar_lo:g}<g<={config.collar_hi:g}",
        time_range=(pstate.t, pstate.t))


def z_quantity(pstate: PressureState, params: FlowParams) -> np.ndarray:
    """Closed form of Z = max_dir (g D_dirdir g + theta |D_dir g|^2).

    Largest eigenvalue of the symmetric matrix g D^2 g + theta Dg Dg^T,
    zero outside {g > 0}.
    """
    g, gx, gy, gxx, gyy, gxy = _fields(pstate)
    th = params.theta
    m11 = g * gxx + th * gx * gx
    m22 = g * gyy + th * gy * gy
    m12 = g * gxy + th * gx * gy
    tr = m11 + m22
    disc = np.sqrt(np.maximum((m11 - m22) ** 2 + 4 * m12 ** 2, 0.0))
    z = 0.5 * (tr + disc)
    return np.where(g > 0, z, 0.0)


def z_quantity_bruteforce(pstate: PressureState, params: FlowParams,
                          n_dirs: int = 360, polish_iters: int = 80) -> np.ndarray:
    """Direction-sweep evaluation of Z.

    Scans n_dirs directions on the half circle, then sharpens the bracketing
    arc with golden-section iterations (the raw sweep alone quantizes the
    angle and cannot resolve the maximum to the cross-check tolerance).
    """
    g, gx, gy, gxx, gyy, gxy = _fields(pstate)
    th = params.theta
    m11 = (g * gxx + th * gx * gx).ravel()
    m22 = (g * gyy + th * gy * gy).ravel()
    m12 = (g * gxy + th * gx * gy).ravel()

    def q(phi):
        c, s = np.cos(phi), np.sin(phi)
        return m11 * c * c + 2 * m12 * c * s + m22 * s * s

    phis = np.linspace(0.0, np.pi, n_dirs, endpoint=False)
    vals = np.vstack([q(p) for p in phis])
    best = np.argmax(vals, axis=0)
    dphi = np.pi / n_dirs
    a = phis[best] - dphi
    b = phis[best] + dphi
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c1 = b - invphi * (b - a)
    c2 = a + invphi * (b - a)
    f1, f2 = q(c1), q(c2)
    for _ in range(polish_iters):
        take = f1 > f2
        b = np.where(take, c2, b)
        a = np.where(take, a, c1)
        c1n = b - invphi * (b - a)
        c2n = a + invphi * (b - a)
        f1 = np.where(take, q(c1n), f2)
        f2 = np.where(take, f2, q(c2n))
        # recompute both where intervals collapsed to keep arrays in sync
        c1, c2 = c1n, c2n
        f1, f2 = q(c1), q(c2)
    z = np.maximum(np.maximum(f1, f2), vals.max(axis=0)).reshape(g.shape)
    return np.where(g > 0, z, 0.0)


def global_z(pstate: PressureState, params: FlowParams,
             config: AuditConfig = AuditConfig()):
    """Sup of Z over {g > 0}."""
    z = z_quantity(pstate, params)
    sel = (pstate.g > 0) & _interior(pstate.g.shape)
    if not sel.any():
        return None
    mn, mx = float(z[sel].min()), float(z[sel].max())
    return CheckRecord(
        name="global_z", bound_form=f"sup Z <= {config.z_max:g}",
        measured_min=mn, measured_max=mx, fitted_constant=mx,
        passed=bool(mx <= config.z_max and mn >= -1e-12),
        region="g>0", time_range=(pstate.t, pstate.t))


def second_derivative_decay(state: GraphState, pstate: PressureState,
                            params: FlowParams,
                            config: AuditConfig = AuditConfig()):
    """Bands of f_nunu, f_tautau/g^(beta-1), |f_nutau|/g^((beta-1)/2)."""
    g, gx, gy, gxx, gyy, gxy, mag2, sel, skipped = _frame_select(pstate, config)
    if not sel.any():
        return None
    fx, fy, fxx, fyy, fxy = graph_stencil(state.f, state.dx, state.dy)
    nx_, ny_ = gx[sel] / np.sqrt(mag2[sel]), gy[sel] / np.sqrt(mag2[sel])
    fnn = fxx[sel] * nx_ ** 2 + 2 * fxy[sel] * nx_ * ny_ + fyy[sel] * ny_ ** 2
    ftt = fxx[sel] * ny_ ** 2 - 2 * fxy[sel] * nx_ * ny_ + fyy[sel] * nx_ ** 2
    fnt = (fyy[sel] - fxx[sel]) * nx_ * ny_ + fxy[sel] * (nx_ ** 2 - ny_ ** 2)
    gsel = g[sel]
    b = params.beta
    ratio_t = ftt / gsel ** (b - 1.0)
    ratio_m = np.abs(fnt) / gsel ** ((b - 1.0) / 2.0)
    lo, hi = config.sd_lo, 1.0 / config.sd_lo
    degenerate = bool(np.abs(ftt).max() < 1e-14)
    ok = (fnn.min() >= lo and fnn.max() <= hi
          and (degenerate or (ratio_t.min() >= lo and ratio_t.max() <= hi
                              and ratio_m.max() <= hi)))
    details = {
        "f_nunu": (float(fnn.min()), float(fnn.max())),
        "f_tautau_over_g_beta1": (float(ratio_t.min()), float(ratio_t.max())),
        "mixed_over_g_half": (float(ratio_m.min()), float(ratio_m.max())),
        "skipped_frame_nodes": skipped,
        "degenerate_slice": degenerate,
    }
    return CheckRecord(
        name="second_derivative_decay",
        bound_form=f"bands within [{lo:g}, {hi:g}]",
        measured_min=float(min(fnn.min(), ratio_t.min())),
        measured_max=float(max(fnn.max(), ratio_t.max(), ratio_m.max())),
        fitted_constant=float(fnn.max()), passed=ok,
        region=f"{config.collar_lo:g}<g<={config.collar_hi:g}",
        time_range=(pstate.t, pstate.t), details=details)


def p_quantity_record(state: GraphState, r0: float,
                      config: AuditConfig = AuditConfig()):
    """Band of P = H/(psi + 4R^2 - |X|^2) over valid strictly convex nodes."""
    p, valid = p_quantity(state, r0)
    valid = valid & _interior(p.shape)
    if not valid.any():
        return None
    mn, mx = float(p[valid].min()), float(p[valid].max())
    return CheckRecord(
        name="p_quantity", bound_form=f"P <= {config.p_max:g}",
        measured_min=mn, measured_max=mx, fitted_constant=mx,
        passed=bool(mx <= config.p_max and np.isfinite(mx)),
        region="valid nodes", time_range=(state.t, state.t),
        details={"invalid_nodes": int((~valid).sum())})


def _pool(records):
    """Merge same-named per-snapshot records into one band record."""
    recs = [r for r in records if r is not None]
    if not recs:
        return None
    out = recs[0]
    for r in recs[1:]:
        out = CheckRecord(
            name=out.name, bound_form=out.bound_form,
            measured_min=min(out.measured_min, r.measured_min),
            measured_max=max(out.measured_max, r.measured_max),
            fitted_constant=max(out.fitted_constant, r.fitted_constant),
            passed=out.passed and r.passed,
            region=out.region,
            time_range=(out.time_range[0], r.time_range[1]),
            details={**out.details, **r.details})
    return out


def audit_report(traj: GraphTrajectory, config: AuditConfig = AuditConfig(),
                 skip_first: int = 1) -> EstimateReport:
    """Run every estimate audit over a trajectory's snapshots.

    skip_first drops the earliest snapshots (initial data has not yet
    equilibrated to the flow's own bands).  Interface speed/envelope records
    are appended for each configured epsilon level.
    """
    params = traj.params
    states = traj.states[skip_first:] if len(traj.states) > skip_first + 2 \
        else traj.states
    if not states:
        return EstimateReport(records=[])
    pstates = [pressure_state(s, params) for s in states]
    r0 = config.r0
    if r0 is None:
        s0 = states[0]
        r0 = float(max(s0.x[-1], s0.y[-1], np.sqrt(2) * s0.x[-1]))

    records = []
    records.append(_pool([gradient_band(p, params, config) for p in pstates]))
    records.append(_pool([curvature_pinching(s, p, params, config)
                          for s, p in zip(states, pstates)]))
    records.append(gt_band(pstates, params, config) if len(pstates) >= 3 else None)
    records.append(_pool([tangential_band(p, params, config) for p in pstates]))
    gt_mid = None
    if len(pstates) >= 3:
        gt_mid = (pstates[-1].g - pstates[-3].g) / (pstates[-1].t - pstates[-3].t)
    xrecs = []
    for i, p in enumerate(pstates):
        gt_f = gt_mid if (gt_mid is not None and i == len(pstates) - 2) else None
        xrecs.append(x_quantity_record(p, params, config, gt_field=gt_f))
    records.append(_pool(xrecs))
    records.append(_pool([aronson_benilan(p, params, config) for p in pstates]))
    records.append(_pool([global_z(p, params, config) for p in pstates]))
    records.append(_pool([second_derivative_decay(s, p, params, config)
                          for s, p in zip(states, pstates)]))
    records.append(_pool([p_quantity_record(s, r0, config) for s in states]))

    # interface speed and envelope records
    if len(states) >= 3:
        for eps in config.eps_levels:
            curves = [extract_level(s, eps, n_theta=config.n_theta,
                                    params=params) for s in states]
            if any(c.partial for c in curves):
                continue
            band = fit_speed_band(curves)
            records.append(CheckRecord(
                name=f"interface_speed_eps={eps:g}",
                bound_form="0 < C1 <= -d(gamma)/dt <= C2",
                measured_min=band.c1, measured_max=band.c2,
                fitted_constant=band.c2 / band.c1 if band.c1 > 0 else np.inf,
                passed=band.passed, region=f"eps={eps:g}",
                time_range=band.t_range,
                details={"monotone_ok": band.monotone_ok,
                         "degenerate": band.degenerate}))
            t0 = states[0].t + config.envelope_t0_frac * (states[-1].t - states[0].t)
            if t0 > 0 and len(states) >= 4:
                env = check_envelope(curves, t0,
                                     residual_tol=config.envelope_residual_tol)
                records.append(CheckRecord(
                    name=f"envelope_eps={eps:g}",
                    bound_form="exp envelope, rel residual <= "
                               f"{config.envelope_residual_tol:g}",
                    measured_min=env.tau_lower, measured_max=env.tau_upper,
                    fitted_constant=env.k_hat, passed=env.passed,
                    region=f"eps={eps:g}", time_range=(env.t0, states[-1].t),
                    details={"max_rel_residual": env.max_rel_residual,
                             "A": env.const_A, "B": env.const_B,
                             "C": env.const_C}))
    return EstimateReport(records=[r for r in records if r is not None])
