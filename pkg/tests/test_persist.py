import math

import numpy as np
import pytest

from burgerlab import persist
from burgerlab.analysis import track_convergence
from burgerlab.cell import build_stationary, enumerate_stationary
from burgerlab.forcing import ForcingSpec
from burgerlab.resonance import resonance_scan
from burgerlab.solver import SolverConfig, evolve
from burgerlab.torus import make_grid, sine_field

SPEC1 = ForcingSpec.cosine_squared(1)


def test_fmt_round_trips():
    for x in (math.pi, 1e-300, -2.5e17, 0.1 + 0.2):
        assert float(persist.fmt(x)) == x
    assert persist.json_float(math.inf) == "inf" and persist.json_float(-math.inf) == "-inf"


def test_trajectory_round_trip(tmp_path):
    g = make_grid(64)
    traj = evolve(SolverConfig(g, SPEC1, t_end=1.0, record_every=0.25), sine_field(g))
    files = persist.write_trajectory(traj, tmp_path / "traj")
    assert {f.name for f in files} >= {"trajectory.json", "diagnostics.csv", "snapshot_00004.csv"}
    assert (tmp_path / "traj" / "diagnostics.csv").read_text().startswith(
        "t,mean,l2_energy,power_input,shock_indicator\n")
    back = persist.read_trajectory(tmp_path / "traj")
    assert np.array_equal(back.times, traj.times)
    for a, b in zip(back.snapshots, traj.snapshots):
        assert np.array_equal(a.values, b.values)
    assert np.array_equal(back.diagnostics.l2_energy, traj.diagnostics.l2_energy)
    assert back.steps == traj.steps


@pytest.mark.parametrize("p", [0.0, 2.0])
def test_cell_solution_round_trip(tmp_path, p):
    sol = build_stationary(SPEC1, p, None, make_grid(64))
    persist.write_cell_solution(sol, tmp_path, "s")
    back = persist.read_cell_solution(tmp_path / "s.json", SPEC1)
    assert (back.p, back.lam, back.branch, back.x0, back.xbar) == \
        (sol.p, sol.lam, sol.branch, sol.x0, sol.xbar)
    assert np.array_equal(back.ubar.values, sol.ubar.values)
    assert np.array_equal(back.phi.values, sol.phi.values)


def test_scan_round_trip(tmp_path):
    sc = resonance_scan(SPEC1, 0.0, [0.0, 1.5], sine_field(make_grid(64)), t_end=10.0)
    persist.write_scan(sc, tmp_path / "scan.csv")
    assert (tmp_path / "scan.csv").read_text().startswith("omega,avg_power,classification,slope\n")
    rows = persist.read_scan(tmp_path / "scan.csv")
    assert [r[2] for r in rows] == sc.classification
    assert [r[1] for r in rows] == list(sc.avg_power)


def test_convergence_round_trip(tmp_path):
    g = make_grid(64)
    traj = evolve(SolverConfig(g, SPEC1, t_end=2.0, record_every=0.5), sine_field(g))
    rep = track_convergence(traj, enumerate_stationary(SPEC1, 0.0, g))
    persist.write_convergence(rep, tmp_path / "c.csv", tmp_path / "c.json")
    back = persist.read_convergence(tmp_path / "c.csv", tmp_path / "c.json")
    assert np.array_equal(back.distances_l1, rep.distances_l1)
    assert np.array_equal(back.shocked, rep.shocked)
    assert back.shock_time_estimate == rep.shock_time_estimate


def test_wrong_header_rejected(tmp_path):
    (tmp_path / "x.csv").write_text("a,b\n")
    with pytest.raises(ValueError):
        persist.read_scan(tmp_path / "x.csv")
