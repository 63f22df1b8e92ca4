"""Pure-numpy stepping kernels.

Fallback backend; gcflab._kernels (Cython) implements the same four entry
points with identical stencils and step-size logic.  Any change here must be
mirrored there.
"""
import numpy as np

BACKEND_NAME = "python"

# Node released from the flat set only when its update rate exceeds this.
ACTIVATION_TOL = 1e-14
# Floor on the clamped second derivative / determinant inside the step-size
# estimate only (never in the flux); caps the singular a^(alpha-1) factor
# for alpha < 1.
DEFF_FLOOR = 1e-9

MAX_STEPS = 200_000_000


def _center_frr(f, dr):
    # least-squares parabola a + c r^2 through nodes 0,1,2 (symmetry f_r(0)=0)
    return (-5.0 * f[0] - 2.0 * f[1] + 7.0 * f[2]) / (13.0 * dr * dr)


def radial_rhs(f, r, dr, alpha, act_tol=ACTIVATION_TOL, dfloor=DEFF_FLOOR):
    """Time derivative of the rotationally symmetric height field.

    Returns (rhs, dmax, clamps): per-node f_t, the max effective diffusion
    coefficient (for the CFL bound), and the count of strictly negative
    second differences at nodes with f > 0.
    """
    f = np.asarray(f, dtype=float)
    n = f.size
    q = (4.0 * alpha - 1.0) / 2.0
    fr = np.zeros(n)
    frr = np.zeros(n)
    fr[1:-1] = (f[2:] - f[:-2]) / (2.0 * dr)
    frr[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / (dr * dr)
    frr0 = _center_frr(f, dr)
    frp = np.maximum(fr, 0.0)
    frrp = np.maximum(frr, 0.0)
    w = (1.0 + fr * fr) ** q
    rhs = np.zeros(n)
    rp = r[1:-1] ** (-alpha)
    rhs[1:-1] = (frp[1:-1] * frrp[1:-1]) ** alpha * rp / w[1:-1]
    rhs[0] = max(frr0, 0.0) ** (2.0 * alpha)
    rhs[-1] = 0.0  # Dirichlet frame
    flat = f == 0.0
    rhs[flat & (rhs <= act_tol)] = 0.0

    d = np.zeros(n)
    pos = frp[1:-1] > 0.0
    d[1:-1][pos] = (
        alpha
        * frp[1:-1][pos] ** alpha
        * np.maximum(frrp[1:-1][pos], dfloor) ** (alpha - 1.0)
        * rp[pos]
        / w[1:-1][pos]
    )
    if frr0 > 0.0:
        d[0] = alpha * frr0 ** (2.0 * alpha - 1.0)
    clamps = int(np.count_nonzero((frr[1:-1] < 0.0) & (f[1:-1] > 0.0)))
    return rhs, float(d.max()), clamps


def radial_advance(f, r, dr, alpha, cfl, t, t_end,
                   act_tol=ACTIVATION_TOL, dfloor=DEFF_FLOOR):
    """Advance f in place by forward Euler with dt = cfl*dr^2/dmax until t_end.

    Returns (t, steps, dt_last, clamps_total).
    """
    steps = 0
    dt = 0.0
    clamps_total = 0
    while t < t_end - 1e-18:
        rhs, dmax, clamps = radial_rhs(f, r, dr, alpha, act_tol, dfloor)
        clamps_total += clamps
        if dmax <= 0.0:
            t = t_end
            break
        dt = min(cfl * dr * dr / dmax, t_end - t)
        f += dt * rhs
        t += dt
        steps += 1
        if steps > MAX_STEPS:
            raise RuntimeError("radial_advance exceeded MAX_STEPS")
    return t, steps, dt, clamps_total


def _dx1(f, h, axis):
    """First derivative, central interior, 3-point one-sided at the edges."""
    f = np.moveaxis(f, axis, 0)
    g = np.empty_like(f)
    g[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    g[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    g[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
    return np.moveaxis(g, 0, axis)


def _dx2(f, h, axis):
    """Second derivative, central interior, shifted 3-point at the edges."""
    f = np.moveaxis(f, axis, 0)
    g = np.empty_like(f)
    g[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / (h * h)
    g[0] = (f[0] - 2.0 * f[1] + f[2]) / (h * h)
    g[-1] = (f[-1] - 2.0 * f[-2] + f[-3]) / (h * h)
    return np.moveaxis(g, 0, axis)


def graph_stencil(f, dx, dy):
    """All first/second differences of a 2-D field (x is axis 0)."""
    fx = _dx1(f, dx, 0)
    fy = _dx1(f, dy, 1)
    fxx = _dx2(f, dx, 0)
    fyy = _dx2(f, dy, 1)
    fxy = _dx1(fx, dy, 1)
    return fx, fy, fxx, fyy, fxy


def graph_rhs(f, dx, dy, alpha, act_tol=ACTIVATION_TOL, dfloor=DEFF_FLOOR):
    """Time derivative of the 2-D height field.

    Returns (rhs, smax, clamps): per-node f_t, the max CFL rate (so that
    dt = cfl/smax is stable), and the count of negative Hessian determinants
    at nodes with f > 0.
    """
    f = np.asarray(f, dtype=float)
    q = (4.0 * alpha - 1.0) / 2.0
    fx, fy, fxx, fyy, fxy = graph_stencil(f, dx, dy)
    det = fxx * fyy - fxy * fxy
    detp = np.maximum(det, 0.0)
    w = (1.0 + fx * fx + fy * fy) ** q
    rhs = detp ** alpha / w
    flat = f == 0.0
    rhs[flat & (rhs <= act_tol)] = 0.0

    pref = alpha * np.maximum(detp, dfloor) ** (alpha - 1.0) / w
    pref[detp == 0.0] = 0.0
    s = pref * (
        np.maximum(fyy, 0.0) / (dx * dx)
        + np.maximum(fxx, 0.0) / (dy * dy)
        + np.abs(fxy) / (dx * dy)
    )
    clamps = int(np.count_nonzero((det < 0.0) & (f > 0.0)))
    return rhs, float(s.max()), clamps


def graph_advance(f, dx, dy, alpha, cfl, t, t_end,
                  act_tol=ACTIVATION_TOL, dfloor=DEFF_FLOOR):
    """Advance the 2-D field in place until t_end; see radial_advance."""
    steps = 0
    dt = 0.0
    clamps_total = 0
    while t < t_end - 1e-18:
        rhs, smax, clamps = graph_rhs(f, dx, dy, alpha, act_tol, dfloor)
        clamps_total += clamps
        if smax <= 0.0:
            t = t_end
            break
        dt = min(cfl / smax, t_end - t)
        f += dt * rhs
        t += dt
        steps += 1
        if steps > MAX_STEPS:
            raise RuntimeError("graph_advance exceeded MAX_STEPS")
    return t, steps, dt, clamps_total
