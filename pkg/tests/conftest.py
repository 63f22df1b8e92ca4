"""Shared trajectory fixtures (session-scoped: the runs are reused)."""
import numpy as np
import pytest

from gcflab.graph2d import run_graph2d
from gcflab.radial import run_radial
from gcflab.scenario import Scenario, build_initial_state, builtin_scenario


def _radial_bench_scenario(alpha, t_end, n=1025):
    return Scenario(
        name=f"bench-radial-a{alpha}", alpha=alpha, geometry="radial",
        initial={"kind": "flat_disc", "rho0": 0.5, "rim_coef": 0.2,
                 "blend_start": 0.8, "outer_height": 2.2},
        grid={"n": n, "r_max": 2.0}, t_end=t_end, n_outputs=11)


# the flat spot shrinks faster at small alpha; stop while it is still wide
RADIAL_BENCH_T_END = {1.0: 0.25, 0.75: 0.12, 0.6: 0.05}


@pytest.fixture(scope="session")
def radial_bench():
    """alpha -> (scenario, trajectory) for the radial flat-disc benchmark."""
    out = {}
    for alpha, t_end in RADIAL_BENCH_T_END.items():
        scen = _radial_bench_scenario(alpha, t_end)
        traj = run_radial(build_initial_state(scen), scen.params(),
                          scen.outputs(), cfl=scen.cfl)
        out[alpha] = (scen, traj)
    return out


@pytest.fixture(scope="session")
def radial_bench_fine():
    """Refined (n=2049) alpha=1 radial benchmark."""
    scen = _radial_bench_scenario(1.0, RADIAL_BENCH_T_END[1.0])
    traj = run_radial(build_initial_state(scen, refine=1), scen.params(),
                      scen.outputs(), cfl=scen.cfl)
    return scen, traj


@pytest.fixture(scope="session")
def bench2d():
    scen = builtin_scenario("bench-2d")
    traj = run_graph2d(build_initial_state(scen), scen.params(),
                       scen.outputs(), cfl=scen.cfl)
    return scen, traj


@pytest.fixture(scope="session")
def bench2d_fine():
    scen = builtin_scenario("bench-2d")
    traj = run_graph2d(build_initial_state(scen, refine=1), scen.params(),
                       scen.outputs(), cfl=scen.cfl)
    return scen, traj


@pytest.fixture(scope="session")
def bench2d_a075():
    scen = builtin_scenario("bench-2d")
    doc = {**__import__("json").loads(scen.canonical_json()),
           "alpha": 0.75, "t_end": 0.12, "name": "bench-2d-a075"}
    scen = Scenario(**doc)
    traj = run_graph2d(build_initial_state(scen), scen.params(),
                       scen.outputs(), cfl=scen.cfl)
    return scen, traj


@pytest.fixture(scope="session")
def waiting_runs():
    """(scenario, trajectory at cfl, trajectory at cfl/2)."""
    scen = builtin_scenario("waiting")
    params = scen.params()
    t1 = run_radial(build_initial_state(scen), params, scen.outputs(),
                    cfl=scen.cfl)
    t2 = run_radial(build_initial_state(scen), params, scen.outputs(),
                    cfl=scen.cfl / 2)
    return scen, t1, t2
