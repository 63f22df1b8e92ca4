"""Free-boundary and level-set tracking in polar form.

Extracts gamma_eps(theta, t) curves, measures interface speed bands and
exponential shrink envelopes, and fits the vanishing exponent of the height
near the free boundary.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .errors import GCFError, InsufficientDataError
from .graph2d import GraphState, GraphTrajectory, PressureState
from .params import FlowParams
from .radial import RadialState

# Values below this are treated as the numerical precursor tail, not as part
# of the power-law profile, when locating the eps = 0 boundary.
TAIL_FLOOR = 1e-12
# Ray samples (beyond the first above-floor one) anchoring the power-law
# inversion of the boundary position.
ANCHORS = (3, 7)


@dataclass
class InterfaceCurve:
    """Polar samples of one epsilon-level set at one time."""

    theta: np.ndarray
    gamma: np.ndarray
    epsilon: float
    t: float
    valid: np.ndarray = None

    def __post_init__(self):
        if self.valid is None:
            self.valid = np.ones(self.theta.shape, dtype=bool)

    @property
    def partial(self) -> bool:
        return not bool(self.valid.all())

    def points(self) -> np.ndarray:
        """Cartesian vertices (m, 2) of the polar curve."""
        return np.column_stack(
            [self.gamma * np.cos(self.theta), self.gamma * np.sin(self.theta)]
        )

    def is_convex(self, tol: float = 1e-8) -> bool:
        """Discrete support-function test: all polygon turns one way."""
        if self.partial:
            return False
        p = self.points()
        e = np.roll(p, -1, axis=0) - p
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        scale = float(np.abs(cross).max()) or 1.0
        return bool((cross >= -tol * scale).all() or (cross <= tol * scale).all())


def _power_law_root(r1, v1, r2, v2, exponent):
    """Root of v = C (r - gamma)^exponent through two samples."""
    q = (v2 / v1) ** (1.0 / exponent)
    if q == 1.0:
        return r1
    return (r2 - q * r1) / (1.0 - q)


def _boundary_from_profile(rads, vals, exponent, floor=TAIL_FLOOR, anchors=ANCHORS):
    """eps = 0 boundary radius from one monotone profile sample."""
    above = np.nonzero(vals > floor)[0]
    if above.size == 0:
        return float(rads[-1]), True
    i0 = int(above[0])
    k1, k2 = i0 + anchors[0], i0 + anchors[1]
    if k2 >= rads.size or vals[k1] <= 0 or vals[k2] <= vals[k1]:
        # too close to the window edge for the two-sample refinement
        g = rads[i0 - 1] if i0 > 0 else 0.0
        return float(g), True
    g = _power_law_root(rads[k1], vals[k1], rads[k2], vals[k2], exponent)
    g = min(max(g, rads[i0 - 1] if i0 > 0 else 0.0), rads[k1])
    return float(g), True


def _crossing_from_profile(rads, vals, eps):
    """First radius where the profile crosses a positive level."""
    above = np.nonzero(vals >= eps)[0]
    if above.size == 0 or above[0] == 0:
        return np.nan, False
    j = int(above[0])
    r0, r1 = rads[j - 1], rads[j]
    v0, v1 = vals[j - 1], vals[j]
    return float(r0 + (eps - v0) * (r1 - r0) / (v1 - v0)), True


def _vanish_exponent_for(state, params):
    if isinstance(state, PressureState):
        return 1.0
    if params is None:
        raise ValueError("params required to extract the eps=0 boundary of f")
    return params.beta


def extract_level(state, epsilon: float, n_theta: int = 181,
                  params: FlowParams = None) -> InterfaceCurve:
    """Polar curve of the epsilon-level set (epsilon = 0: free boundary).

    Rays emanate from the origin (the flat-disc center of the scenarios).
    For epsilon = 0 the mask boundary is refined by inverting the vanishing
    power law through two ray samples above the numerical tail; pressure
    fields use exponent 1.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    theta = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    if isinstance(state, RadialState):
        exponent = params.beta if params is not None else None
        if epsilon == 0.0:
            if exponent is None:
                raise ValueError("params required for eps=0 extraction")
            g, ok = _boundary_from_profile(state.r, state.f, exponent)
        else:
            g, ok = _crossing_from_profile(state.r, state.f, epsilon)
        gamma = np.full(n_theta, g)
        valid = np.full(n_theta, ok)
        return InterfaceCurve(theta, gamma, epsilon, state.t, valid)

    vals2d = state.f if isinstance(state, GraphState) else state.g
    x, y = state.x, state.y
    h_ray = 0.5 * min(state.dx, state.dy)
    gamma = np.full(n_theta, np.nan)
    valid = np.zeros(n_theta, dtype=bool)
    exponent = _vanish_exponent_for(state, params) if epsilon == 0.0 else None
    for j, th in enumerate(theta):
        c, s = np.cos(th), np.sin(th)
        lim_x = (x[-1] if c >= 0 else -x[0]) / abs(c) if c != 0 else np.inf
        lim_y = (y[-1] if s >= 0 else -y[0]) / abs(s) if s != 0 else np.inf
        rmax = min(lim_x, lim_y)
        rads = np.arange(0.0, rmax, h_ray)
        ci = (rads * c - x[0]) / state.dx
        cj = (rads * s - y[0]) / state.dy
        vals = map_coordinates(vals2d, np.vstack([ci, cj]), order=1)
        if epsilon == 0.0:
            gamma[j], valid[j] = _boundary_from_profile(rads, vals, exponent)
        else:
            gamma[j], valid[j] = _crossing_from_profile(rads, vals, epsilon)
    return InterfaceCurve(theta, gamma, epsilon, state.t, valid)


@dataclass
class SpeedBand:
    """Band of the inward interface speed -d(gamma)/dt over (theta, t)."""

    c1: float
    c2: float
    epsilon: float
    t_range: tuple
    monotone_ok: bool
    degenerate: bool
    passed: bool


def fit_speed_band(curves, tol_mono: float = 1e-8) -> SpeedBand:
    """Min/max of -d(gamma)/dt by central differences across >= 3 curves."""
    if len(curves) < 3:
        raise ValueError("need at least 3 curves")
    eps = curves[0].epsilon
    theta0 = curves[0].theta
    for c in curves:
        if c.epsilon != eps or c.theta.shape != theta0.shape:
            raise ValueError("curves must share epsilon and the theta grid")
    t = np.array([c.t for c in curves])
    if np.any(np.diff(t) <= 0):
        raise ValueError("curves must be ordered in time")
    gam = np.vstack([c.gamma for c in curves])
    ok = np.vstack([c.valid for c in curves]).all(axis=0)
    if not ok.any():
        raise GCFError("no ray is valid across the whole series")
    speed = -(gam[2:, ok] - gam[:-2, ok]) / (t[2:, None] - t[:-2, None])
    c1, c2 = float(speed.min()), float(speed.max())
    monotone_ok = bool((np.diff(gam[:, ok], axis=0)
                        <= tol_mono * max(1.0, float(np.abs(gam).max()))).all())
    degenerate = c2 <= tol_mono
    passed = monotone_ok and not degenerate and c1 > 0.0 and np.isfinite(c2)
    return SpeedBand(c1=c1, c2=c2, epsilon=eps,
                     t_range=(float(t[0]), float(t[-1])),
                     monotone_ok=monotone_ok, degenerate=degenerate,
                     passed=passed)


@dataclass
class EnvelopeReport:
    """Exponential shrink envelope gamma(t0) e^{-k dt} fitted to a series."""

    t0: float
    k_hat: float
    tau_upper: float   # least B + A T with the upper envelope valid
    tau_lower: float   # least C t0 with the lower envelope valid
    const_A: float
    const_B: float
    const_C: float
    max_rel_residual: float
    monotone_ok: bool
    passed: bool


def check_envelope(curves, t0: float, residual_tol: float = 0.05) -> EnvelopeReport:
    """Fit the least envelope constants and the exponential-decay residual.

    The envelope inequalities e^{-(t-t0)/tau_upper} gamma(t0) >= gamma(t)
    >= e^{-(t-t0)/tau_lower} gamma(t0) hold with the returned taus by
    construction; the report fails if the series is not shrinking or the
    exponential fit residual exceeds residual_tol.
    """
    if t0 <= 0:
        raise ValueError("t0 must be positive")
    t = np.array([c.t for c in curves])
    i0 = int(np.argmin(np.abs(t - t0)))
    later = [c for c in curves[i0 + 1:]]
    if len(later) < 2:
        raise ValueError("need at least two curves after t0")
    base = curves[i0]
    ok = base.valid.copy()
    for c in later:
        ok &= c.valid
    g0 = base.gamma[ok]
    dt = np.array([c.t - base.t for c in later])
    gam = np.vstack([c.gamma[ok] for c in later])
    yv = np.log(gam / g0[None, :])
    monotone_ok = bool((yv <= 1e-12).all())
    num = -(yv * dt[:, None]).sum()
    den = (dt ** 2).sum() * ok.sum()
    k_hat = float(num / den)
    fit = g0[None, :] * np.exp(-k_hat * dt[:, None])
    max_rel = float(np.abs((gam - fit) / gam).max())
    if monotone_ok:
        tau = dt[:, None] / (-yv)
        tau_upper = float(tau.max())
        tau_lower = float(tau[yv < 0].min()) if (yv < 0).any() else 0.0
    else:
        tau_upper = np.inf
        tau_lower = 0.0
    passed = monotone_ok and max_rel <= residual_tol
    return EnvelopeReport(
        t0=float(base.t), k_hat=k_hat, tau_upper=tau_upper, tau_lower=tau_lower,
        const_A=0.0, const_B=tau_upper,
        const_C=tau_lower / base.t if base.t > 0 else np.inf,
        max_rel_residual=max_rel, monotone_ok=monotone_ok, passed=passed,
    )


def _polyline_distance(points, verts):
    """Distance from each point (m,2) to a closed convex polyline (s,2)."""
    a = verts
    b = np.roll(verts, -1, axis=0)
    ab = b - a
    ab2 = (ab ** 2).sum(axis=1)
    ap = points[:, None, :] - a[None, :, :]
    tt = np.clip((ap * ab[None, :, :]).sum(axis=2) / ab2[None, :], 0.0, 1.0)
    proj = a[None, :, :] + tt[:, :, None] * ab[None, :, :]
    d = np.sqrt(((points[:, None, :] - proj) ** 2).sum(axis=2))
    return d.min(axis=1)


@dataclass
class ExponentFit:
    collar_width: float
    beta_hat: float
    r2: float
    n_nodes: int


@dataclass
class ExponentReport:
    fits: list
    gamma_curve: InterfaceCurve = None

    @property
    def beta_hats(self) -> np.ndarray:
        return np.array([f.beta_hat for f in self.fits])


def fit_vanishing_exponent(state, params: FlowParams, collar_widths,
                           curve: InterfaceCurve = None, n_theta: int = 181,
                           skip_cells: float = 5.0) -> ExponentReport:
    """Least-squares slope of log f vs log dist(X, interface) per collar width.

    The first skip_cells grid cells next to the boundary are excluded: they
    carry the activation tail and the O(dr) front error, not the power law.
    """
    if curve is None:
        curve = extract_level(state, 0.0, n_theta=n_theta, params=params)
    if isinstance(state, RadialState):
        dist = state.r - curve.gamma[0]
        vals = state.f
        h = state.dr
    else:
        h = min(state.dx, state.dy)
        vals2d = state.f if isinstance(state, GraphState) else state.g
        xx, yy = np.meshgrid(state.x, state.y, indexing="ij")
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        rad = np.sqrt(pts[:, 0] ** 2 + pts[:, 1] ** 2)
        gmin, gmax = curve.gamma.min(), curve.gamma.max()
        wmax = max(collar_widths)
        cand = (rad > gmin - h) & (rad < gmax + wmax + h)
        dist = np.full(pts.shape[0], -np.inf)
        dist[cand] = _polyline_distance(pts[cand], curve.points())
        outside = rad < gmin - h
        dist[outside] = -np.inf
        inside_poly = rad <= np.interp(
            np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * np.pi),
            curve.theta, curve.gamma, period=2 * np.pi)
        dist[inside_poly] = -np.inf
        vals = vals2d.ravel()
    fits = []
    for w in collar_widths:
        sel = (vals > 0) & (dist >= skip_cells * h) & (dist <= w)
        n = int(sel.sum())
        if n < 10:
            raise InsufficientDataError(
                f"only {n} nodes in collar of width {w}")
        lx = np.log(dist[sel])
        ly = np.log(vals[sel])
        A = np.column_stack([lx, np.ones(n)])
        coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
        ss_tot = float(((ly - ly.mean()) ** 2).sum())
        ss_res = float(res[0]) if res.size else 0.0
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        fits.append(ExponentFit(collar_width=float(w), beta_hat=float(coef[0]),
                                r2=r2, n_nodes=n))
    return ExponentReport(fits=fits, gamma_curve=curve)


def waiting_time_2d(trajectory: GraphTrajectory, p0=(0.0, 0.0),
                    tol: float = 1e-8) -> float:
    """Waiting time of the grid node nearest p0; see radial.waiting_time."""
    first = trajectory.states[0]
    i = int(np.argmin(np.abs(first.x - p0[0])))
    j = int(np.argmin(np.abs(first.y - p0[1])))
    if first.f[i, j] != 0.0:
        raise GCFError("P0 is not in the initial flat set")
    tstar = first.t
    for s in trajectory.states:
        if s.f[i, j] <= tol:
            tstar = s.t
        else:
            break
    return float(tstar)
