"""Scenario configuration: JSON schema, validation, initial profiles.

A scenario is a single JSON document; unknown keys anywhere are errors so
typos in exponent-sensitive settings cannot pass silently.
"""
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .audit import AuditConfig
from .errors import ScenarioError
from .graph2d import GraphState
from .params import FlowParams, derive_exponents
from .radial import RadialState

_TOP_KEYS = {
    "name", "alpha", "geometry", "initial", "grid", "cfl", "t_end",
    "n_outputs", "output_times", "seed", "lambda_nd", "audit", "hodograph",
    "waiting",
}
_INITIAL_KEYS = {
    "kind", "rho0", "rim_coef", "rim_exponent", "blend_start", "outer_height",
    "radius", "curvature", "bump_amp", "bump_r", "bump_w",
}
_GRID_KEYS = {"n", "r_max", "half_width"}
_AUDIT_KEYS = {
    "collar_lo", "collar_hi", "grad_region_hi", "grad_lo", "grad_hi",
    "pinch_max", "gt_max", "tang_max", "x_max", "ab_min", "z_max", "sd_lo",
    "p_max", "frame_tol", "eps_levels", "n_theta", "envelope_t0_frac",
    "envelope_residual_tol", "r0",
}
_HODOGRAPH_KEYS = {"n_targets", "c_min", "nz", "ny", "gamma", "n_pairs", "seed"}
_WAITING_KEYS = {"p0_radius", "tol", "barrier_T", "barrier_rho"}


def _check_keys(d, allowed, where):
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ScenarioError(f"unknown {where} keys: {', '.join(unknown)}")


@dataclass
class Scenario:
    """Validated scenario configuration."""

    name: str
    alpha: float
    geometry: str
    initial: dict
    grid: dict
    cfl: float = 0.4
    t_end: float = 0.25
    n_outputs: int = 11
    output_times: list = None
    seed: int = 0
    lambda_nd: float = 0.1
    audit: dict = field(default_factory=dict)
    hodograph: dict = field(default_factory=dict)
    waiting: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.geometry not in ("radial", "graph2d"):
            raise ScenarioError(f"geometry must be radial|graph2d, got {self.geometry!r}")
        if not (0.5 < self.alpha <= 1.0):
            raise ScenarioError(f"alpha must lie in (1/2, 1], got {self.alpha}")
        _check_keys(self.initial, _INITIAL_KEYS, "initial")
        _check_keys(self.grid, _GRID_KEYS, "grid")
        _check_keys(self.audit, _AUDIT_KEYS, "audit")
        _check_keys(self.hodograph, _HODOGRAPH_KEYS, "hodograph")
        _check_keys(self.waiting, _WAITING_KEYS, "waiting")
        kind = self.initial.get("kind")
        if kind not in ("flat_disc", "sphere_cap", "paraboloid"):
            raise ScenarioError(f"unknown initial profile kind {kind!r}")
        if kind == "sphere_cap" and self.geometry != "radial":
            raise ScenarioError("sphere_cap profiles are radial-only")
        rho0 = self.initial.get("rho0", 0.0)
        if kind == "flat_disc" and not rho0 > 0:
            raise ScenarioError("flat_disc requires rho0 > 0")
        if self.geometry == "radial" and "r_max" not in self.grid:
            raise ScenarioError("radial grid requires r_max")
        if self.geometry == "graph2d" and "half_width" not in self.grid:
            raise ScenarioError("graph2d grid requires half_width")

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ScenarioError("scenario document must be a JSON object")
        _check_keys(doc, _TOP_KEYS, "scenario")
        missing = {"name", "alpha", "geometry", "initial", "grid"} - set(doc)
        if missing:
            raise ScenarioError(f"missing keys: {', '.join(sorted(missing))}")
        return cls(**doc)

    @classmethod
    def from_file(cls, path) -> "Scenario":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def canonical_json(self) -> str:
        doc = {
            "name": self.name, "alpha": self.alpha, "geometry": self.geometry,
            "initial": self.initial, "grid": self.grid, "cfl": self.cfl,
            "t_end": self.t_end, "n_outputs": self.n_outputs,
            "output_times": self.output_times, "seed": self.seed,
            "lambda_nd": self.lambda_nd, "audit": self.audit,
            "hodograph": self.hodograph, "waiting": self.waiting,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @property
    def scenario_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def params(self) -> FlowParams:
        return derive_exponents(self.alpha, lambda_nd=self.lambda_nd)

    def audit_config(self) -> AuditConfig:
        cfg = dict(self.audit)
        if "eps_levels" in cfg:
            cfg["eps_levels"] = tuple(cfg["eps_levels"])
        return AuditConfig(**cfg)

    def outputs(self) -> np.ndarray:
        if self.output_times is not None:
            return np.asarray(self.output_times, dtype=float)
        return np.linspace(0.0, self.t_end, self.n_outputs)


def _profile_values(spec: dict, r: np.ndarray, params: FlowParams,
                    domain_radius: float) -> np.ndarray:
    kind = spec["kind"]
    if kind == "sphere_cap":
        r0 = spec.get("radius", 1.0)
        if r[-1] >= r0:
            raise ScenarioError("sphere_cap grid must stay inside the sphere radius")
        return r0 - np.sqrt(r0 * r0 - r * r)
    if kind == "paraboloid":
        a = spec.get("curvature", 1.0)
        return 0.5 * a * r * r
    # flat_disc: power-law rim, quadratic blend up to the normalization height
    rho0 = spec["rho0"]
    c = spec.get("rim_coef", 0.2)
    kappa = spec.get("rim_exponent") or params.beta
    s1 = spec.get("blend_start", 0.8)
    outer = spec.get("outer_height", 2.2)
    s = np.maximum(r - rho0, 0.0)
    smax = domain_radius - rho0
    if smax <= s1:
        raise ScenarioError("blend_start must lie inside the domain")
    b = (outer - c * smax ** kappa) / (smax - s1) ** 2
    if b < 0:
        raise ScenarioError("outer_height below the rim profile; increase it")
    f = c * s ** kappa + b * np.maximum(s - s1, 0.0) ** 2
    amp = spec.get("bump_amp", 0.0)
    if amp:
        rc = spec.get("bump_r", rho0 + 0.5 * (s1 + smax) / 2.0)
        w = spec.get("bump_w", 0.1)
        f = f + amp * np.exp(-((r - rc) / w) ** 2)
    return f


def build_initial_state(scenario: Scenario, refine: int = 0):
    """Initial RadialState or GraphState at the (optionally refined) grid."""
    params = scenario.params()
    n = scenario.grid["n"]
    n = (n - 1) * 2 ** refine + 1
    if scenario.geometry == "radial":
        r_max = scenario.grid["r_max"]
        r = np.linspace(0.0, r_max, n)
        f = _profile_values(scenario.initial, r, params, r_max)
        return RadialState(r, f, 0.0)
    half = scenario.grid["half_width"]
    x = np.linspace(-half, half, n)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    rr = np.sqrt(xx ** 2 + yy ** 2)
    f = _profile_values(scenario.initial, rr, params,
                        domain_radius=half * np.sqrt(2.0))
    return GraphState(x, x, f, 0.0)


def builtin_scenario(name: str) -> Scenario:
    """Canonical scenarios used by the acceptance suite and the CLI."""
    if name == "sphere":
        return Scenario(
            name="sphere", alpha=1.0, geometry="radial",
            initial={"kind": "sphere_cap", "radius": 1.0},
            grid={"n": 2048, "r_max": 0.98}, t_end=0.1, n_outputs=11)
    if name == "bench-radial":
        return Scenario(
            name="bench-radial", alpha=1.0, geometry="radial",
            initial={"kind": "flat_disc", "rho0": 0.5, "rim_coef": 0.2,
                     "blend_start": 0.8, "outer_height": 2.2},
            grid={"n": 1025, "r_max": 2.0}, t_end=0.25, n_outputs=11)
    if name == "waiting":
        return Scenario(
            name="waiting", alpha=1.0, geometry="radial",
            initial={"kind": "flat_disc", "rho0": 0.5, "rim_coef": 0.01,
                     "blend_start": 0.8, "outer_height": 2.2},
            grid={"n": 513, "r_max": 2.0}, t_end=1.0, n_outputs=129,
            waiting={"p0_radius": 0.0, "tol": 1e-8,
                     "barrier_T": 1.0, "barrier_rho": 0.8})
    if name == "bench-2d":
        return Scenario(
            name="bench-2d", alpha=1.0, geometry="graph2d",
            initial={"kind": "flat_disc", "rho0": 0.5, "rim_coef": 0.2,
                     "blend_start": 0.8, "outer_height": 2.2},
            grid={"n": 129, "half_width": 2.0}, t_end=0.25, n_outputs=11,
            hodograph={"n_targets": 4, "c_min": 0.05, "nz": 13, "ny": 13,
                       "gamma": 0.5})
    if name == "nonconvex":
        # negative control: the bump dents convexity (det D^2 f < 0 ring)
        return Scenario(
            name="nonconvex", alpha=1.0, geometry="graph2d",
            initial={"kind": "flat_disc", "rho0": 0.5, "rim_coef": 0.2,
                     "blend_start": 0.8, "outer_height": 2.2,
                     "bump_amp": 0.08, "bump_r": 0.9, "bump_w": 0.2},
            grid={"n": 97, "half_width": 2.0}, t_end=0.002, n_outputs=5)
    raise ScenarioError(f"unknown builtin scenario {name!r}")
