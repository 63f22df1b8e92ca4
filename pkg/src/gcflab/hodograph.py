"""Local hodograph chart near an interface point.

Solves g(h(z,y,t), y, t) = z for the chart x = h(z,y,t) in a rotated frame
whose first axis passes through the interface point, assembles the linearized
operator's coefficient fields on the box {0 <= z <= eta^2, |y| <= eta,
t0 - eta^2 <= t <= t0}, and measures ellipticity, drift positivity, the
degenerate-metric Holder seminorms and the chart PDE residual.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.optimize import brentq

from .errors import FrameError, GCFError
from .graph2d import PressureState
from .params import FlowParams

# K_h at or below this is treated as a degenerate linearization node
# (covers exact zeros polluted by stencil round-off on flat charts)
K_H_DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class SPoint:
    """Point in chart coordinates; z must be nonnegative."""

    z: float
    y: float
    t: float = 0.0


def s_distance(q1, q2) -> float:
    """Parabolic degenerate metric |sqrt(z1)-sqrt(z2)| + |y1-y2| + sqrt|t1-t2|."""
    z1, y1, t1 = q1.z, q1.y, q1.t
    z2, y2, t2 = q2.z, q2.y, q2.t
    if z1 < 0 or z2 < 0:
        raise ValueError("z coordinates must be nonnegative")
    return (abs(np.sqrt(z1) - np.sqrt(z2)) + abs(y1 - y2)
            + np.sqrt(abs(t1 - t2)))


class SnapshotSource:
    """Pressure snapshots wrapped as smooth interpolants g(x, y, t_k)."""

    def __init__(self, pstates):
        if len(pstates) < 1:
            raise ValueError("need at least one snapshot")
        self.times = np.array([p.t for p in pstates])
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshots must be ordered in time")
        self._splines = [
            RectBivariateSpline(p.x, p.y, p.g, kx=3, ky=3) for p in pstates
        ]
        self.x_range = (pstates[0].x[0], pstates[0].x[-1])
        self.y_range = (pstates[0].y[0], pstates[0].y[-1])
        self.grid_h = float(max(pstates[0].dx, pstates[0].dy))

    def eval(self, x, y, k):
        return float(self._splines[k](x, y)[0, 0])

    def eval_dx(self, x, y, k, direction):
        gx = float(self._splines[k](x, y, dx=1, dy=0)[0, 0])
        gy = float(self._splines[k](x, y, dx=0, dy=1)[0, 0])
        return gx * direction[0] + gy * direction[1]


class AnalyticSource:
    """Closed-form g(x, y, t) with a synthetic time grid (for tests/MMS)."""

    def __init__(self, func, times):
        self.func = func
        self.times = np.asarray(times, dtype=float)
        self.x_range = (-np.inf, np.inf)
        self.y_range = (-np.inf, np.inf)
        self.grid_h = 0.0

    def eval(self, x, y, k):
        return float(self.func(x, y, self.times[k]))

    def eval_dx(self, x, y, k, direction, h=1e-6):
        t = self.times[k]
        return float(
            (self.func(x + h * direction[0], y + h * direction[1], t)
             - self.func(x - h * direction[0], y - h * direction[1], t))
            / (2 * h))


@dataclass
class LocalFrame:
    """Rotation taking the interface-point direction to the first axis."""

    p0: tuple
    angle: float
    eta: float
    c_measured: float

    @property
    def rotation(self) -> np.ndarray:
        c, s = np.cos(self.angle), np.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    def to_global(self, xt, yt):
        c, s = np.cos(self.angle), np.sin(self.angle)
        return c * xt - s * yt, s * xt + c * yt


def local_frame(source, p0, params: FlowParams, c_min: float = 0.05,
                eta_candidates=(0.4, 0.3, 0.2, 0.15, 0.1, 0.075, 0.05),
                n_probe: int = 7, time_index: int = -1,
                g_floor: float = None) -> LocalFrame:
    """Rotated frame at interface point p0 with a verified g_x band.

    Finds the largest candidate eta for which c_min <= dg/de1 <= 1/c_min at
    every probe point of the eta-ball around p0 where g > g_floor; refuses
    (raises FrameError) if no candidate works.  g_floor defaults to one grid
    cell of the source: below it the interpolant smears the interface kink
    and its gradient is not meaningful.
    """
    if g_floor is None:
        g_floor = source.grid_h
    p0 = np.asarray(p0, dtype=float)
    norm = float(np.hypot(p0[0], p0[1]))
    if norm == 0:
        raise FrameError("interface point must not be the origin")
    angle = float(np.arctan2(p0[1], p0[0]))
    n0 = p0 / norm
    k = time_index if time_index >= 0 else len(source.times) + time_index
    best = None
    for eta in eta_candidates:
        ok = True
        cmin_seen = np.inf
        offs = np.linspace(-eta, eta, n_probe)
        for ox in offs:
            for oy in offs:
                if ox * ox + oy * oy > eta * eta:
                    continue
                x, y = p0[0] + ox, p0[1] + oy
                if not (source.x_range[0] <= x <= source.x_range[1]
                        and source.y_range[0] <= y <= source.y_range[1]):
                    ok = False
                    break
                if source.eval(x, y, k) <= g_floor:
                    continue
                d = source.eval_dx(x, y, k, n0)
                cmin_seen = min(cmin_seen, d)
                if not (c_min <= d <= 1.0 / c_min):
                    ok = False
                    break
            if not ok:
                break
        if ok and np.isfinite(cmin_seen):
            best = LocalFrame(p0=(float(p0[0]), float(p0[1])), angle=angle,
                              eta=float(eta), c_measured=float(cmin_seen))
            break
    if best is None:
        raise FrameError(
            f"no eta candidate satisfies the g_x band [{c_min}, {1/c_min}] at {p0}")
    return best


@dataclass
class HodographPatch:
    """Chart samples h(z, y, t) on the box around an interface point."""

    z: np.ndarray          # (nz,), quadratically graded, z[0] = 0
    y: np.ndarray          # (ny,), offsets from y0 in the rotated frame
    times: np.ndarray      # (nt,), ascending, last = t0
    h: np.ndarray          # (nt, nz, ny)
    valid: np.ndarray      # same shape, chart node resolved
    frame: LocalFrame
    params: FlowParams
    roundtrip_max: float = 0.0
    z_floor: float = 0.0   # rows below this z sit inside the source's
                           # interface-smoothing layer (grid resolution limit)

    @property
    def eta(self) -> float:
        return self.frame.eta

    def resolved(self) -> np.ndarray:
        """Mask of nodes at or above the resolved z range."""
        return self.valid & (self.z[None, :, None] >= self.z_floor)


def _root_solve(geval, target, x_lo, x_hi, x_guess):
    """Root of g(x) = target, bracketed Brent to machine precision."""
    f_lo = geval(x_lo) - target
    f_hi = geval(x_hi) - target
    if f_lo > 0 or f_hi < 0:
        return np.nan
    if f_lo == 0.0:
        return x_lo
    if f_hi == 0.0:
        return x_hi
    return brentq(lambda x: geval(x) - target, x_lo, x_hi, xtol=1e-14)


def build_patch(source, frame: LocalFrame, params: FlowParams,
                nz: int = 25, ny: int = 25, nt: int = None,
                z_max: float = None, z_floor_cells: float = 1.0) -> HodographPatch:
    """Chart h on the box: per-node monotone root solve of g(h, y, t) = z.

    The z grid is uniform in sqrt(z) so the degenerate scale near z = 0 is
    resolved; node (z, y, t) is marked invalid if the root is not bracketed
    within the frame ball.
    """
    eta = frame.eta
    z_max = eta * eta if z_max is None else z_max
    z = (np.linspace(0.0, np.sqrt(z_max), nz)) ** 2
    yoff = np.linspace(-eta, eta, ny)
    t_all = np.asarray(source.times, dtype=float)
    t0 = t_all[-1]
    sel = np.nonzero(t_all >= t0 - eta * eta - 1e-12)[0]
    if nt is not None:
        sel = sel[-nt:]
    times = t_all[sel]
    if times.size < 3:
        raise GCFError("patch needs at least 3 snapshot times in the window")
    x0 = float(np.hypot(*frame.p0))
    h = np.full((times.size, z.size, yoff.size), np.nan)
    valid = np.zeros(h.shape, dtype=bool)
    rt_max = 0.0
    for kt, k in enumerate(sel):
        for jy, yv in enumerate(yoff):
            def geval(xt, _yv=yv, _k=k):
                gx, gy = frame.to_global(xt, _yv)
                return source.eval(gx, gy, _k)

            guess = x0
            for iz, zv in enumerate(z):
                root = _root_solve(geval, zv, x0 - 2 * eta, x0 + 2 * eta, guess)
                if np.isnan(root):
                    continue
                h[kt, iz, jy] = root
                valid[kt, iz, jy] = True
                rt_max = max(rt_max, abs(geval(root) - zv))
                guess = root
    return HodographPatch(z=z, y=yoff, times=times, h=h, valid=valid,
                          frame=frame, params=params, roundtrip_max=rt_max,
                          z_floor=z_floor_cells * source.grid_h)


def _d1_nonuniform(u, x, axis):
    """First derivative on a nonuniform grid via local quadratics."""
    u = np.moveaxis(u, axis, 0)
    x = np.asarray(x, dtype=float)
    out = np.empty_like(u)
    n = x.size
    for i in range(n):
        i0 = min(max(i - 1, 0), n - 3)
        x0, x1, x2 = x[i0], x[i0 + 1], x[i0 + 2]
        xi = x[i]
        w0 = (2 * xi - x1 - x2) / ((x0 - x1) * (x0 - x2))
        w1 = (2 * xi - x0 - x2) / ((x1 - x0) * (x1 - x2))
        w2 = (2 * xi - x0 - x1) / ((x2 - x0) * (x2 - x1))
        out[i] = w0 * u[i0] + w1 * u[i0 + 1] + w2 * u[i0 + 2]
    return np.moveaxis(out, 0, axis)


def _d2_nonuniform(u, x, axis):
    """Second derivative on a nonuniform grid via local quadratics."""
    u = np.moveaxis(u, axis, 0)
    x = np.asarray(x, dtype=float)
    out = np.empty_like(u)
    n = x.size
    for i in range(n):
        i0 = min(max(i - 1, 0), n - 3)
        x0, x1, x2 = x[i0], x[i0 + 1], x[i0 + 2]
        w0 = 2.0 / ((x0 - x1) * (x0 - x2))
        w1 = 2.0 / ((x1 - x0) * (x1 - x2))
        w2 = 2.0 / ((x2 - x0) * (x2 - x1))
        out[i] = w0 * u[i0] + w1 * u[i0 + 1] + w2 * u[i0 + 2]
    return np.moveaxis(out, 0, axis)


def _dt_backward(u, t):
    """Time derivative using only past samples (2- or 3-point one-sided)."""
    out = np.full_like(u, np.nan)
    for k in range(1, t.size):
        if k == 1:
            out[k] = (u[k] - u[k - 1]) / (t[k] - t[k - 1])
        else:
            t0, t1, t2 = t[k - 2], t[k - 1], t[k]
            w0 = (t2 - t1) / ((t0 - t1) * (t0 - t2))
            w1 = (t2 - t0) / ((t1 - t0) * (t1 - t2))
            w2 = (2 * t2 - t0 - t1) / ((t2 - t0) * (t2 - t1))
            out[k] = w0 * u[k - 2] + w1 * u[k - 1] + w2 * u[k]
    return out


@dataclass
class PatchCoefficients:
    """Derivative and linearized-operator fields on a patch."""

    h_z: np.ndarray
    h_y: np.ndarray
    h_t: np.ndarray
    h_zz: np.ndarray
    h_yy: np.ndarray
    h_zy: np.ndarray
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray
    b: np.ndarray
    b1t: np.ndarray
    b2t: np.ndarray
    k_h: np.ndarray
    jfac: np.ndarray
    degenerate: np.ndarray  # K_h <= 0 flags
    valid: np.ndarray


def coefficients(patch: HodographPatch, params: FlowParams) -> PatchCoefficients:
    """Finite-difference derivative fields and linearized coefficients.

    a11 = -h_yy, a12 = sqrt(z) h_zy, a22 = theta h_z - z h_zz;
    K_h = z (h_zz h_yy - h_zy^2) - theta h_z h_yy;
    J = z^(2(beta-1)) + h_z^2 + z^(2(beta-1)) h_y^2.
    """
    th, a, beta = params.theta, params.alpha, params.beta
    h = patch.h
    z = patch.z
    h_z = _d1_nonuniform(h, z, 1)
    h_zz = _d2_nonuniform(h, z, 1)
    h_y = _d1_nonuniform(h, patch.y, 2)
    h_yy = _d2_nonuniform(h, patch.y, 2)
    h_zy = _d1_nonuniform(h_z, patch.y, 2)
    h_t = _dt_backward(h, patch.times)
    zz = z[None, :, None]
    k_h = zz * (h_zz * h_yy - h_zy ** 2) - th * h_z * h_yy
    zpow = zz ** (2.0 * (beta - 1.0))
    jfac = zpow + h_z ** 2 + zpow * h_y ** 2
    a11 = -h_yy
    a12 = np.sqrt(zz) * h_zy
    a22 = th * h_z - zz * h_zz
    degenerate = k_h <= K_H_DEGENERATE_TOL
    q1 = (4.0 * a + 1.0) / 2.0
    with np.errstate(invalid="ignore"):
        k_pow_a = np.where(~degenerate, np.abs(k_h) ** a, np.nan)
        k_pow_am1 = np.where(~degenerate, np.abs(k_h) ** (a - 1.0), np.nan)
        b = ((4.0 * a - 1.0) * k_pow_a * h_z
             + a * k_pow_am1 * th * (h_z ** 2 + zpow * (1.0 + h_y ** 2)) * h_yy
             ) / jfac ** q1
        b1t = b - a * th * k_pow_am1 * jfac * h_yy / jfac ** q1
        b2t = (4.0 * a - 1.0) * zpow * k_pow_a * h_y / jfac ** q1
    valid = (patch.valid & np.isfinite(h_z) & np.isfinite(h_y)
             & np.isfinite(h_zz) & np.isfinite(h_yy) & np.isfinite(h_zy))
    return PatchCoefficients(h_z=h_z, h_y=h_y, h_t=h_t, h_zz=h_zz, h_yy=h_yy,
                             h_zy=h_zy, a11=a11, a12=a12, a22=a22, b=b,
                             b1t=b1t, b2t=b2t, k_h=k_h, jfac=jfac,
                             degenerate=degenerate, valid=valid)


@dataclass
class EllipticityReport:
    lambda_min: float
    lambda_max: float
    b_min: float
    b1t_min: float
    degenerate_nodes: int
    passed: bool


def ellipticity_check(patch: HodographPatch, params: FlowParams,
                      coeffs: PatchCoefficients = None,
                      lambda_cfg: float = 1e-6,
                      nu_cfg: float = 1e-6) -> EllipticityReport:
    """Eigenvalue band of (a_ij) and drift minima over nondegenerate nodes."""
    c = coeffs if coeffs is not None else coefficients(patch, params)
    sel = patch.resolved() & c.valid & ~c.degenerate
    if not sel.any():
        return EllipticityReport(np.nan, np.nan, np.nan, np.nan,
                                 int(c.degenerate.sum()), False)
    tr = c.a11[sel] + c.a22[sel]
    disc = np.sqrt(np.maximum((c.a11[sel] - c.a22[sel]) ** 2
                              + 4 * c.a12[sel] ** 2, 0.0))
    lam_min = float((0.5 * (tr - disc)).min())
    lam_max = float((0.5 * (tr + disc)).max())
    b_min = float(np.nanmin(c.b[sel]))
    b1t_min = float(np.nanmin(c.b1t[sel]))
    passed = bool(lam_min >= lambda_cfg and b1t_min >= nu_cfg)
    return EllipticityReport(lambda_min=lam_min, lambda_max=lam_max,
                             b_min=b_min, b1t_min=b1t_min,
                             degenerate_nodes=int(c.degenerate.sum()),
                             passed=passed)


def holder_seminorm(values, points, gamma: float, n_pairs: int = 4000,
                    seed: int = 0) -> float:
    """max |u(Q1)-u(Q2)| / s(Q1,Q2)^gamma over sampled point pairs.

    points is an (n, 3) array of (z, y, t); coincident pairs are skipped.
    """
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must lie in (0, 1)")
    values = np.asarray(values, dtype=float)
    points = np.asarray(points, dtype=float)
    n = values.size
    if n < 2:
        return 0.0
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, size=n_pairs)
    j = rng.integers(0, n, size=n_pairs)
    keep = i != j
    i, j = i[keep], j[keep]
    p1, p2 = points[i], points[j]
    s = (np.abs(np.sqrt(p1[:, 0]) - np.sqrt(p2[:, 0]))
         + np.abs(p1[:, 1] - p2[:, 1])
         + np.sqrt(np.abs(p1[:, 2] - p2[:, 2])))
    keep = s > 0
    if not keep.any():
        return 0.0
    return float((np.abs(values[i] - values[j])[keep] / s[keep] ** gamma).max())


SEMINORM_FIELDS = ("h_z", "h_y", "h_t", "z_h_zz", "z32_h_zy", "h_yy")


def patch_seminorms(patch: HodographPatch, params: FlowParams,
                    gamma: float = 0.5, coeffs: PatchCoefficients = None,
                    n_pairs: int = 4000, seed: int = 0) -> dict:
    """Holder-s seminorms of the six chart fields of the C^{2+gamma}_s class."""
    c = coeffs if coeffs is not None else coefficients(patch, params)
    zz = patch.z[None, :, None]
    fields = {
        "h_z": c.h_z,
        "h_y": c.h_y,
        "h_t": c.h_t,
        "z_h_zz": zz * c.h_zz,
        "z32_h_zy": zz * np.sqrt(zz) * c.h_zy,
        "h_yy": c.h_yy,
    }
    tt, zzz, yyy = np.meshgrid(patch.times, patch.z, patch.y, indexing="ij")
    pts_all = np.column_stack([zzz.ravel(), yyy.ravel(), tt.ravel()])
    out = {}
    resolved = patch.resolved().ravel()
    for name, f in fields.items():
        sel = resolved & np.isfinite(f.ravel())
        out[name] = holder_seminorm(f.ravel()[sel], pts_all[sel], gamma,
                                    n_pairs=n_pairs, seed=seed)
    return out


def analyze_patches(pstates, params: FlowParams, n_targets: int = 4,
                    c_min: float = 0.05, nz: int = 25, ny: int = 25,
                    gamma: float = 0.5, n_pairs: int = 4000, seed: int = 0,
                    interface_curve=None, z_floor: float = None,
                    eta_candidates=(0.4, 0.3, 0.2, 0.15, 0.1, 0.075, 0.05)):
    """Whole pipeline at n_targets interface points of the last snapshot.

    Returns a list of dicts with the frame, patch, coefficient fields,
    ellipticity report, seminorms and residual sup for each target that
    admits a valid frame; targets whose g_x band fails are skipped with the
    failure recorded.
    """
    from .interface import extract_level

    source = SnapshotSource(pstates)
    if interface_curve is None:
        interface_curve = extract_level(pstates[-1], 0.0, n_theta=181,
                                        params=params)
    idx = np.linspace(0, interface_curve.theta.size, n_targets, endpoint=False)
    results = []
    for k in np.asarray(idx, dtype=int):
        th = interface_curve.theta[k]
        ga = interface_curve.gamma[k]
        p0 = (ga * np.cos(th), ga * np.sin(th))
        entry = {"p0": p0, "theta": float(th)}
        try:
            frame = local_frame(source, p0, params, c_min=c_min,
                                eta_candidates=eta_candidates)
        except FrameError as exc:
            entry["frame_error"] = str(exc)
            results.append(entry)
            continue
        patch = build_patch(source, frame, params, nz=nz, ny=ny)
        if z_floor is not None:
            patch.z_floor = z_floor
        coeffs = coefficients(patch, params)
        entry["frame"] = frame
        entry["patch"] = patch
        entry["coeffs"] = coeffs
        entry["ellipticity"] = ellipticity_check(patch, params, coeffs)
        entry["seminorms"] = patch_seminorms(patch, params, gamma=gamma,
                                             coeffs=coeffs, n_pairs=n_pairs,
                                             seed=seed)
        res, res_alt, rvalid = pde_residual(patch, params, coeffs)
        rvalid = rvalid & patch.resolved()
        # sup over interior stencils and 3-point time rows: the one-sided
        # edge/first-step stencils carry their own O(dz), O(dt) truncation
        inner = np.zeros_like(rvalid)
        inner[2:, 1:-1, 1:-1] = True
        rstat = rvalid & inner
        entry["residual_sup"] = float(np.nanmax(np.abs(res[rstat]))) \
            if rstat.any() else np.nan
        entry["residual"] = res
        entry["residual_alt"] = res_alt
        entry["residual_valid"] = rvalid
        results.append(entry)
    return results


def pde_residual(patch: HodographPatch, params: FlowParams,
                 coeffs: PatchCoefficients = None):
    """Residual fields of the chart equation h_t = -K_h^a / J^((4a-1)/2).

    Returns (residual, residual_alt, valid): the second uses the alternative
    denominator z^2 + h_z^2 + z^2 h_y^2 (recorded, never preferred); nodes
    with K_h <= 0 or without a time derivative are invalid.
    """
    c = coeffs if coeffs is not None else coefficients(patch, params)
    a = params.alpha
    q = (4.0 * a - 1.0) / 2.0
    zz = patch.z[None, :, None]
    with np.errstate(invalid="ignore"):
        k_pow = np.where(~c.degenerate, np.abs(c.k_h) ** a, np.nan)
        res = c.h_t + k_pow / c.jfac ** q
        j_alt = zz ** 2 + c.h_z ** 2 + zz ** 2 * c.h_y ** 2
        res_alt = c.h_t + k_pow / j_alt ** q
    valid = c.valid & ~c.degenerate & np.isfinite(res)
    valid[0] = False  # no backward time derivative at the first snapshot
    return res, res_alt, valid
