"""Full 2-D graph flow f_t = (det D^2 f)+^a / (1+|Df|^2)^((4a-1)/2).

The height equation is the primary evolution; the pressure field
g = (beta f)^(1/beta) is derived per snapshot.  Geometric diagnostics
(Gauss curvature in both conventions, mean curvature, the support-function
quantity P) are computed from the graph.
"""
from dataclasses import dataclass

import numpy as np

from . import backend
from ._kernels_py import graph_stencil
from .errors import CFLError
from .params import FlowParams, pressure_from_height

DEFAULT_CFL = 0.4


@dataclass
class GraphState:
    """Discrete height field on a uniform Cartesian grid (x is axis 0)."""

    x: np.ndarray
    y: np.ndarray
    f: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=float)
        self.y = np.ascontiguousarray(self.y, dtype=float)
        self.f = np.ascontiguousarray(self.f, dtype=float)
        if self.f.shape != (self.x.size, self.y.size):
            raise ValueError("f must have shape (len(x), len(y))")
        if self.x.size < 3 or self.y.size < 3:
            raise ValueError("grid must have at least 3 nodes per axis")
        if np.any(self.f < 0):
            raise ValueError("height field must be nonnegative")

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])

    @property
    def flat_mask(self) -> np.ndarray:
        return self.f == 0.0

    def copy(self) -> "GraphState":
        return GraphState(self.x, self.y, self.f.copy(), self.t)


@dataclass
class PressureState:
    """Pressure field g = (beta f)^(1/beta) paired with a GraphState."""

    x: np.ndarray
    y: np.ndarray
    g: np.ndarray
    t: float = 0.0

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])


def pressure_state(state: GraphState, params: FlowParams) -> PressureState:
    return PressureState(state.x, state.y,
                         pressure_from_height(state.f, params), state.t)


@dataclass
class GraphTrajectory:
    params: FlowParams
    states: list
    cfl: float = DEFAULT_CFL
    steps: int = 0
    clamps: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def pressures(self):
        return [pressure_state(s, self.params) for s in self.states]


def rhs_height(state: GraphState, params: FlowParams) -> np.ndarray:
    """f_t per node (clamped determinant), zero on the flat set."""
    rhs, _, _ = backend.active().graph_rhs(
        state.f, state.dx, state.dy, params.alpha
    )
    return rhs


def clamp_count(state: GraphState, params: FlowParams) -> int:
    """Nodes with det D^2 f < 0 and f > 0 (determinant clamp activity)."""
    _, _, clamps = backend.active().graph_rhs(
        state.f, state.dx, state.dy, params.alpha
    )
    return clamps


def rhs_pressure(pstate: PressureState, params: FlowParams) -> np.ndarray:
    """g_t from the pressure equation (diagnostic; not used for stepping)."""
    th, a, beta = params.theta, params.alpha, params.beta
    q = (4.0 * a - 1.0) / 2.0
    g = pstate.g
    gx, gy, gxx, gyy, gxy = graph_stencil(g, pstate.dx, pstate.dy)
    num = g * (gxx * gyy - gxy ** 2) + th * (
        gx ** 2 * gyy + gy ** 2 * gxx - 2.0 * gx * gy * gxy
    )
    nump = np.maximum(num, 0.0)
    denom = (1.0 + g ** (2.0 * beta - 2.0) * (gx ** 2 + gy ** 2)) ** q
    return nump ** a / denom


def cfl_dt(state: GraphState, params: FlowParams, cfl: float = DEFAULT_CFL) -> float:
    _, smax, _ = backend.active().graph_rhs(
        state.f, state.dx, state.dy, params.alpha
    )
    if smax <= 0.0:
        return np.inf
    return cfl / smax


def step(state: GraphState, dt: float, params: FlowParams,
         cfl: float = DEFAULT_CFL) -> GraphState:
    """One forward-Euler step; refuses dt above the stability bound."""
    rhs, smax, _ = backend.active().graph_rhs(
        state.f, state.dx, state.dy, params.alpha
    )
    if smax > 0.0 and dt > cfl / smax:
        raise CFLError(f"dt={dt:g} exceeds CFL bound {cfl / smax:g}")
    return GraphState(state.x, state.y, state.f + dt * rhs, state.t + dt)


def run_graph2d(state: GraphState, params: FlowParams, output_times,
                cfl: float = DEFAULT_CFL) -> GraphTrajectory:
    """Advance to each output time, collecting snapshots."""
    output_times = np.atleast_1d(np.asarray(output_times, dtype=float))
    if np.any(np.diff(output_times) <= 0):
        raise ValueError("output times must be strictly increasing")
    adv = backend.active().graph_advance
    f = state.f.copy()
    t = state.t
    states = []
    steps = clamps = 0
    for tt in output_times:
        if tt < t - 1e-15:
            raise ValueError("output time precedes current state time")
        if tt > t:
            t, ns, _, nc = adv(f, state.dx, state.dy, params.alpha, cfl, t, tt)
            steps += ns
            clamps += nc
        states.append(GraphState(state.x, state.y, f.copy(), t))
    return GraphTrajectory(params=params, states=states, cfl=cfl,
                           steps=steps, clamps=clamps)


def gauss_curvature(state: GraphState, convention: str = "paper"):
    """Gauss curvature field and a validity mask.

    convention "paper": det D^2 f / (1+|Df|^2)   (as used by the decay audits)
    convention "graph": det D^2 f / (1+|Df|^2)^2 (standard graph curvature)
    Flat-set nodes return 0 and are flagged invalid.
    """
    if convention not in ("paper", "graph"):
        raise ValueError("convention must be 'paper' or 'graph'")
    fx, fy, fxx, fyy, fxy = graph_stencil(state.f, state.dx, state.dy)
    det = fxx * fyy - fxy ** 2
    w = 1.0 + fx ** 2 + fy ** 2
    k = det / w if convention == "paper" else det / w ** 2
    valid = ~state.flat_mask
    k = np.where(valid, k, 0.0)
    return k, valid


def mean_curvature(state: GraphState) -> np.ndarray:
    """Divergence-form mean curvature (sum of principal curvatures).

    Sign convention: positive for a convex lower graph with respect to the
    outward (downward) normal; the unit-sphere cap gives H = 2.
    """
    fx, fy, fxx, fyy, fxy = graph_stencil(state.f, state.dx, state.dy)
    w = np.sqrt(1.0 + fx ** 2 + fy ** 2)
    return ((1.0 + fy ** 2) * fxx - 2.0 * fx * fy * fxy
            + (1.0 + fx ** 2) * fyy) / w ** 3


def support_psi(state: GraphState) -> np.ndarray:
    """psi = <X, nu> for X = (x, y, f) and nu the downward outward normal."""
    fx, fy, _, _, _ = graph_stencil(state.f, state.dx, state.dy)
    w = np.sqrt(1.0 + fx ** 2 + fy ** 2)
    xx = state.x[:, None]
    yy = state.y[None, :]
    return (xx * fx + yy * fy - state.f) / w


def p_quantity(state: GraphState, r0: float):
    """P = H / (psi + 4 R^2 - |X|^2) with R^2 = max(r0^2, r0).

    Returns (P, valid): nodes with nonpositive denominator or on the flat set
    are flagged invalid (P set to 0 there).
    """
    h = mean_curvature(state)
    psi = support_psi(state)
    r2 = max(r0 * r0, r0)
    xx = state.x[:, None]
    yy = state.y[None, :]
    denom = psi + 4.0 * r2 - (xx ** 2 + yy ** 2 + state.f ** 2)
    valid = (denom > 0.0) & ~state.flat_mask
    p = np.zeros_like(h)
    np.divide(h, denom, out=p, where=valid)
    return p, valid
