# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled stepping kernels (hot loops).

Mirrors gcflab._kernels_py exactly: same stencils, same step-size logic,
same flat-set activation rule.  Keep the two modules in lockstep.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"

ACTIVATION_TOL = 1e-14
DEFF_FLOOR = 1e-9
MAX_STEPS = 200_000_000

cdef inline double _pospow(double x, double e) nogil:
    # x**e for x > 0 with cheap paths for the exponents common to
    # alpha in {1, 3/4}: {0, 1/4, 1/2, 3/4, 1, 3/2, 2, -1/4, -1/2}
    if e == 1.0:
        return x
    if e == 0.0:
        return 1.0
    if e == 2.0:
        return x * x
    if e == 0.5:
        return sqrt(x)
    if e == 1.5:
        return x * sqrt(x)
    if e == 0.75:
        return sqrt(x) * sqrt(sqrt(x))
    if e == 0.25:
        return sqrt(sqrt(x))
    if e == -0.25:
        return 1.0 / sqrt(sqrt(x))
    if e == -0.5:
        return 1.0 / sqrt(x)
    return pow(x, e)


cdef inline double _center_frr(double f0, double f1, double f2, double dr) nogil:
    return (-5.0 * f0 - 2.0 * f1 + 7.0 * f2) / (13.0 * dr * dr)


cdef double _radial_pass(double[::1] f, double[::1] rp, double dr,
                         double alpha, double q, double act_tol,
                         double dfloor, double[::1] rhs,
                         long long* clamps) nogil:
    """Fill rhs, return dmax; rp holds r^(-alpha) (slot 0 unused)."""
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t i
    cdef double fr, frr, frp, frrp, w, v, d, dmax, frr0
    dmax = 0.0
    frr0 = _center_frr(f[0], f[1], f[2], dr)
    if frr0 > 0.0:
        rhs[0] = _pospow(frr0, 2.0 * alpha)
        d = alpha * _pospow(frr0, 2.0 * alpha - 1.0)
        if d > dmax:
            dmax = d
    else:
        rhs[0] = 0.0
    if f[0] == 0.0 and rhs[0] <= act_tol:
        rhs[0] = 0.0
    for i in range(1, n - 1):
        fr = (f[i + 1] - f[i - 1]) / (2.0 * dr)
        frr = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (dr * dr)
        if frr < 0.0 and f[i] > 0.0:
            clamps[0] += 1
        frp = fr if fr > 0.0 else 0.0
        frrp = frr if frr > 0.0 else 0.0
        w = _pospow(1.0 + fr * fr, q)
        if frp > 0.0 and frrp > 0.0:
            v = _pospow(frp * frrp, alpha) * rp[i] / w
        else:
            v = 0.0
        if f[i] == 0.0 and v <= act_tol:
            v = 0.0
        rhs[i] = v
        if frp > 0.0:
            d = alpha * _pospow(frp, alpha) * \
                _pospow(frrp if frrp > dfloor else dfloor, alpha - 1.0) * \
                rp[i] / w
            if d > dmax:
                dmax = d
    rhs[n - 1] = 0.0
    return dmax


def radial_rhs(f, r, double dr, double alpha,
               double act_tol=ACTIVATION_TOL, double dfloor=DEFF_FLOOR):
    f = np.ascontiguousarray(f, dtype=np.float64)
    r = np.ascontiguousarray(r, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0]
    rhs = np.zeros(n)
    rp = np.zeros(n)
    rp[1:] = r[1:] ** (-alpha)
    cdef double[::1] fv = f, rhsv = rhs, rpv = rp
    cdef double q = (4.0 * alpha - 1.0) / 2.0
    cdef long long clamps = 0
    cdef double dmax
    with nogil:
        dmax = _radial_pass(fv, rpv, dr, alpha, q, act_tol, dfloor, rhsv, &clamps)
    return rhs, float(dmax), int(clamps)


def radial_advance(f, r, double dr, double alpha, double cfl,
                   double t, double t_end,
                   double act_tol=ACTIVATION_TOL, double dfloor=DEFF_FLOOR):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fa = np.asarray(f, dtype=np.float64)
    if fa is not f:
        raise TypeError("radial_advance requires a float64 array (updated in place)")
    cdef Py_ssize_t n = fa.shape[0]
    rhs = np.zeros(n)
    rp = np.zeros(n)
    rp[1:] = np.asarray(r)[1:] ** (-alpha)
    cdef double[::1] fv = fa, rhsv = rhs, rpv = rp
    cdef double q = (4.0 * alpha - 1.0) / 2.0
    cdef double dmax, dt = 0.0
    cdef long long steps = 0, clamps = 0
    cdef Py_ssize_t i
    cdef long long max_steps = MAX_STEPS
    with nogil:
        while t < t_end - 1e-18:
            dmax = _radial_pass(fv, rpv, dr, alpha, q, act_tol, dfloor, rhsv, &clamps)
            if dmax <= 0.0:
                t = t_end
                break
            dt = cfl * dr * dr / dmax
            if dt > t_end - t:
                dt = t_end - t
            for i in range(n):
                fv[i] += dt * rhsv[i]
            t += dt
            steps += 1
            if steps > max_steps:
                break
    if steps > max_steps:
        raise RuntimeError("radial_advance exceeded MAX_STEPS")
    return float(t), int(steps), float(dt), int(clamps)


cdef void _fx_pass(double[:, ::1] f, double dx, double[:, ::1] fx) nogil:
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1]
    cdef Py_ssize_t i, j
    for j in range(ny):
        fx[0, j] = (-3.0 * f[0, j] + 4.0 * f[1, j] - f[2, j]) / (2.0 * dx)
        fx[nx - 1, j] = (3.0 * f[nx - 1, j] - 4.0 * f[nx - 2, j] + f[nx - 3, j]) / (2.0 * dx)
    for i in range(1, nx - 1):
        for j in range(ny):
            fx[i, j] = (f[i + 1, j] - f[i - 1, j]) / (2.0 * dx)


cdef double _graph_pass(double[:, ::1] f, double dx, double dy,
                        double alpha, double q, double act_tol, double dfloor,
                        double[:, ::1] fx, double[:, ::1] rhs,
                        long long* clamps) nogil:
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1]
    cdef Py_ssize_t i, j
    cdef double fxv, fyv, fxxv, fyyv, fxyv, det, detp, w, v, pref, s, smax, de
    _fx_pass(f, dx, fx)
    smax = 0.0
    for i in range(nx):
        for j in range(ny):
            if j == 0:
                fyv = (-3.0 * f[i, 0] + 4.0 * f[i, 1] - f[i, 2]) / (2.0 * dy)
                fyyv = (f[i, 0] - 2.0 * f[i, 1] + f[i, 2]) / (dy * dy)
                fxyv = (-3.0 * fx[i, 0] + 4.0 * fx[i, 1] - fx[i, 2]) / (2.0 * dy)
            elif j == ny - 1:
                fyv = (3.0 * f[i, ny - 1] - 4.0 * f[i, ny - 2] + f[i, ny - 3]) / (2.0 * dy)
                fyyv = (f[i, ny - 1] - 2.0 * f[i, ny - 2] + f[i, ny - 3]) / (dy * dy)
                fxyv = (3.0 * fx[i, ny - 1] - 4.0 * fx[i, ny - 2] + fx[i, ny - 3]) / (2.0 * dy)
            else:
                fyv = (f[i, j + 1] - f[i, j - 1]) / (2.0 * dy)
                fyyv = (f[i, j + 1] - 2.0 * f[i, j] + f[i, j - 1]) / (dy * dy)
                fxyv = (fx[i, j + 1] - fx[i, j - 1]) / (2.0 * dy)
            if i == 0:
                fxxv = (f[0, j] - 2.0 * f[1, j] + f[2, j]) / (dx * dx)
            elif i == nx - 1:
                fxxv = (f[nx - 1, j] - 2.0 * f[nx - 2, j] + f[nx - 3, j]) / (dx * dx)
            else:
                fxxv = (f[i + 1, j] - 2.0 * f[i, j] + f[i - 1, j]) / (dx * dx)
            fxv = fx[i, j]
            det = fxxv * fyyv - fxyv * fxyv
            if det < 0.0 and f[i, j] > 0.0:
                clamps[0] += 1
            detp = det if det > 0.0 else 0.0
            w = _pospow(1.0 + fxv * fxv + fyv * fyv, q)
            if detp > 0.0:
                v = _pospow(detp, alpha) / w
            else:
                v = 0.0
            if f[i, j] == 0.0 and v <= act_tol:
                v = 0.0
            rhs[i, j] = v
            if detp > 0.0:
                de = detp if detp > dfloor else dfloor
                pref = alpha * _pospow(de, alpha - 1.0) / w
                s = pref * ((fyyv if fyyv > 0.0 else 0.0) / (dx * dx)
                            + (fxxv if fxxv > 0.0 else 0.0) / (dy * dy)
                            + fabs(fxyv) / (dx * dy))
                if s > smax:
                    smax = s
    return smax


def graph_rhs(f, double dx, double dy, double alpha,
              double act_tol=ACTIVATION_TOL, double dfloor=DEFF_FLOOR):
    f = np.ascontiguousarray(f, dtype=np.float64)
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1]
    rhs = np.zeros((nx, ny))
    fxbuf = np.zeros((nx, ny))
    cdef double[:, ::1] fv = f, rhsv = rhs, fxv = fxbuf
    cdef double q = (4.0 * alpha - 1.0) / 2.0
    cdef long long clamps = 0
    cdef double smax
    with nogil:
        smax = _graph_pass(fv, dx, dy, alpha, q, act_tol, dfloor, fxv, rhsv, &clamps)
    return rhs, float(smax), int(clamps)


def graph_advance(f, double dx, double dy, double alpha, double cfl,
                  double t, double t_end,
                  double act_tol=ACTIVATION_TOL, double dfloor=DEFF_FLOOR):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] fa = np.asarray(f, dtype=np.float64)
    if fa is not f:
        raise TypeError("graph_advance requires a float64 array (updated in place)")
    cdef Py_ssize_t nx = fa.shape[0], ny = fa.shape[1]
    rhs = np.zeros((nx, ny))
    fxbuf = np.zeros((nx, ny))
    cdef double[:, ::1] fv = fa, rhsv = rhs, fxv = fxbuf
    cdef double q = (4.0 * alpha - 1.0) / 2.0
    cdef double smax, dt = 0.0
    cdef long long steps = 0, clamps = 0
    cdef Py_ssize_t i, j
    cdef long long max_steps = MAX_STEPS
    with nogil:
        while t < t_end - 1e-18:
            smax = _graph_pass(fv, dx, dy, alpha, q, act_tol, dfloor, fxv, rhsv, &clamps)
            if smax <= 0.0:
                t = t_end
                break
            dt = cfl / smax
            if dt > t_end - t:
                dt = t_end - t
            for i in range(nx):
                for j in range(ny):
                    fv[i, j] += dt * rhsv[i, j]
            t += dt
            steps += 1
            if steps > max_steps:
                break
    if steps > max_steps:
        raise RuntimeError("graph_advance exceeded MAX_STEPS")
    return float(t), int(steps), float(dt), int(clamps)
