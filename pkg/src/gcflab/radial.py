"""Rotationally symmetric flow solver.

Evolves f_t = (f_r)+^a (f_rr)+^a / (r^a (1+f_r^2)^((4a-1)/2)) on a uniform
radial grid by forward Euler, with one-sided positive-part clamps so the flat
set {f = 0} stays stationary until activated.  Also provides the waiting-time
barrier C+ |X-P0|^mu / (T-t)^gamma and its verification.
"""
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import CFLError, GCFError
from .params import FlowParams

DEFAULT_CFL = 0.4


@dataclass
class RadialState:
    """Discrete radial height profile at one time."""

    r: np.ndarray
    f: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.r = np.ascontiguousarray(self.r, dtype=float)
        self.f = np.ascontiguousarray(self.f, dtype=float)
        if self.r.ndim != 1 or self.r.shape != self.f.shape or self.r.size < 3:
            raise ValueError("r and f must be 1-D arrays of equal size >= 3")
        if self.r[0] != 0.0:
            raise ValueError("radial grid must start at r = 0")
        if np.any(np.diff(self.r) <= 0):
            raise ValueError("radial grid must be strictly increasing")
        if np.any(self.f < 0):
            raise ValueError("height field must be nonnegative")

    @property
    def dr(self) -> float:
        return float(self.r[1] - self.r[0])

    @property
    def flat_mask(self) -> np.ndarray:
        return self.f == 0.0

    def copy(self) -> "RadialState":
        return RadialState(self.r.copy(), self.f.copy(), self.t)

    def check_convexity(self, tol: float = 1e-10):
        """Raise unless f is nondecreasing and discretely convex up to tol."""
        if np.any(np.diff(self.f) < -tol):
            raise GCFError("profile is not nondecreasing in r")
        d2 = np.diff(self.f, 2)
        if np.any(d2 < -tol * max(1.0, float(self.f.max()))):
            raise GCFError("profile violates discrete convexity")


@dataclass
class RadialTrajectory:
    """Snapshots of a radial run at the requested output times."""

    params: FlowParams
    states: list
    cfl: float = DEFAULT_CFL
    steps: int = 0
    clamps: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])


def rhs_radial(state: RadialState, params: FlowParams) -> np.ndarray:
    """f_t per node; zero on the flat set and on the Dirichlet frame node."""
    rhs, _, _ = backend.active().radial_rhs(
        state.f, state.r, state.dr, params.alpha
    )
    return rhs


def cfl_dt(state: RadialState, params: FlowParams, cfl: float = DEFAULT_CFL) -> float:
    """Largest stable forward-Euler step for the current profile."""
    _, dmax, _ = backend.active().radial_rhs(
        state.f, state.r, state.dr, params.alpha
    )
    if dmax <= 0.0:
        return np.inf
    return cfl * state.dr ** 2 / dmax


def step_radial(state: RadialState, dt: float, params: FlowParams,
                cfl: float = DEFAULT_CFL) -> RadialState:
    """One forward-Euler step; refuses dt above the stability bound."""
    rhs, dmax, _ = backend.active().radial_rhs(
        state.f, state.r, state.dr, params.alpha
    )
    if dmax > 0.0 and dt > cfl * state.dr ** 2 / dmax:
        raise CFLError(
            f"dt={dt:g} exceeds CFL bound {cfl * state.dr ** 2 / dmax:g}"
        )
    return RadialState(state.r, state.f + dt * rhs, state.t + dt)


def run_radial(state: RadialState, params: FlowParams, output_times,
               cfl: float = DEFAULT_CFL) -> RadialTrajectory:
    """Advance to each output time, collecting snapshots.

    The initial state is included as the first snapshot when output_times
    starts at (or before) state.t.
    """
    output_times = np.atleast_1d(np.asarray(output_times, dtype=float))
    if np.any(np.diff(output_times) <= 0):
        raise ValueError("output times must be strictly increasing")
    adv = backend.active().radial_advance
    f = state.f.copy()
    t = state.t
    states = []
    steps = clamps = 0
    for tt in output_times:
        if tt < t - 1e-15:
            raise ValueError("output time precedes current state time")
        if tt > t:
            t, ns, _, nc = adv(f, state.r, state.dr, params.alpha, cfl, t, tt)
            steps += ns
            clamps += nc
        states.append(RadialState(state.r, f.copy(), t))
    return RadialTrajectory(params=params, states=states, cfl=cfl,
                            steps=steps, clamps=clamps)


def supersolution_value(params: FlowParams, x, p0, T: float, t: float) -> float:
    """Barrier value C+ |X-P0|^mu / (T-t)^gamma at one space-time point."""
    if t >= T:
        raise ValueError("t must be strictly below T")
    d = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))
                             - np.atleast_1d(np.asarray(p0, dtype=float))))
    return params.c_plus * d ** params.mu / (T - t) ** params.gamma_exp


@dataclass
class SupersolutionReport:
    """Residual scan of the barrier against the radial flow operator."""

    r: np.ndarray
    t: np.ndarray
    residual: np.ndarray  # shape (nt, nr): h_t - RHS(h) >= 0 means super
    min_residual: float = field(init=False)

    def __post_init__(self):
        self.min_residual = float(self.residual.min())

    def passed(self, tol: float = 1e-8) -> bool:
        return self.min_residual >= -tol

    def rows(self):
        for i, tv in enumerate(self.t):
            for j, rv in enumerate(self.r):
                yield rv, tv, self.residual[i, j]


def verify_supersolution(params: FlowParams, r_grid, t_grid, T: float,
                         c_plus: float | None = None) -> SupersolutionReport:
    """Evaluate h_t - RHS(h) for h = c |r|^mu (T-t)^-gamma on a scan grid.

    Uses the closed-form derivatives of the barrier, not finite differences,
    so the report reflects the PDE inequality itself.  c_plus overrides the
    critical constant (used to probe its sharpness).
    """
    r = np.asarray(r_grid, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    if np.any(r <= 0):
        raise ValueError("scan radii must be positive (origin is singular)")
    if np.any(t >= T):
        raise ValueError("scan times must be strictly below T")
    c = params.c_plus if c_plus is None else float(c_plus)
    a, mu, g, q = params.alpha, params.mu, params.gamma_exp, (4 * params.alpha - 1) / 2
    tt = t[:, None]
    rr = r[None, :]
    h_t = g * c * rr ** mu * (T - tt) ** (-g - 1.0)
    h_r = mu * c * rr ** (mu - 1.0) * (T - tt) ** (-g)
    h_rr = mu * (mu - 1.0) * c * rr ** (mu - 2.0) * (T - tt) ** (-g)
    rhs = (h_r * h_rr) ** a / (rr ** a * (1.0 + h_r ** 2) ** q)
    return SupersolutionReport(r=r, t=t, residual=h_t - rhs)


def flat_radius(state: RadialState, tol: float = 0.0) -> float:
    """Largest grid radius below the first node with f > tol."""
    above = np.nonzero(state.f > tol)[0]
    if above.size == 0:
        return float(state.r[-1])
    i = int(above[0])
    return float(state.r[i - 1]) if i > 0 else 0.0


def waiting_time(trajectory: RadialTrajectory, p0_radius: float = 0.0,
                 tol: float = 1e-8) -> float:
    """Waiting time of the point at radius p0_radius: sup{t : f(P0,t) <= tol}.

    The point must lie in the initial flat set; measured on the trajectory's
    sampled times, so the resolution is one output interval.
    """
    first = trajectory.states[0]
    idx = int(np.argmin(np.abs(first.r - p0_radius)))
    if first.f[idx] != 0.0:
        raise GCFError("P0 is not in the initial flat set")
    tstar = first.t
    for s in trajectory.states:
        if s.f[idx] <= tol:
            tstar = s.t
        else:
            break
    return float(tstar)


def compare_with_supersolution(trajectory: RadialTrajectory, T: float,
                               rho: float, c_plus: float | None = None):
    """A-posteriori comparison f <= h+ on the ball r <= rho.

    Returns (t_window, min_margin): the last sampled time while the ordering
    holds on the ball boundary, and the minimum of h+ - f inside the ball up
    to that time (nonnegative means the comparison held).
    """
    params = trajectory.params
    c = params.c_plus if c_plus is None else float(c_plus)
    r = trajectory.states[0].r
    inside = r <= rho
    edge = int(np.nonzero(inside)[0][-1])
    t_window = None
    margin = np.inf
    for s in trajectory.states:
        if s.t >= T:
            break
        h = c * r ** params.mu / (T - s.t) ** params.gamma_exp
        if s.f[edge] > h[edge]:
            break
        t_window = s.t
        margin = min(margin, float((h[inside] - s.f[inside]).min()))
    if t_window is None:
        raise GCFError("ordering fails on the ball boundary at the first sample")
    return t_window, margin
