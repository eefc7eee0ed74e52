import math

import numpy as np
import pytest

from burgerlab.analysis import (
    BELOW_NOISE,
    ConvergenceReport,
    InsufficientSpectrum,
    decay_exponent,
    distance_to_set,
    equivalent_jump,
    fitted_spectrum,
    spectrum_dynamics,
    track_convergence,
)
from burgerlab.cell import build_stationary, enumerate_stationary
from burgerlab.forcing import ForcingSpec
from burgerlab.solver import SolverConfig, evolve
from burgerlab.torus import GridError, TorusField, dft_magnitudes, make_grid, sine_field

SPEC1 = ForcingSpec.cosine_squared(1)
G = make_grid(1024)


def square(g=G):
    return TorusField(g, np.where(g.centers < math.pi, 1.0, -1.0))


def triangle(g=G):
    return TorusField(g, np.abs(np.remainder(g.centers + math.pi, 2 * math.pi) - math.pi))


def test_decay_examples():
    assert decay_exponent(dft_magnitudes(square()), 2, 64) == pytest.approx(-1.0, abs=0.05)
    assert decay_exponent(triangle(), 2, 64) == pytest.approx(-2.0, abs=0.05)
    with pytest.raises(InsufficientSpectrum, match="insufficient spectral content"):
        decay_exponent(sine_field(G), 2, 64)


def test_decay_window_checks():
    for kmin, kmax in ((1, 64), (10, 10), (2, 512)):
        with pytest.raises(ValueError):
            decay_exponent(square(), kmin, kmax)


@pytest.mark.parametrize("c", [-3.0, 0.01, 7.5])
def test_decay_scale_invariant(c):
    f = triangle()
    assert decay_exponent(f.with_values(c * f.values), 2, 64) == pytest.approx(
        decay_exponent(f, 2, 64), abs=1e-10)


def test_fitted_spectrum_carries_slope():
    rep = fitted_spectrum(square(), 2, 64)
    assert rep.fit_window == (2, 64) and rep.slope == pytest.approx(-1.0, abs=0.05)


def test_equivalent_jump_single_discontinuity():
    # sawtooth x - pi jumps by -2 pi at x = 0 and has |u_hat(k)| close to 1 / k
    saw = TorusField(G, G.centers - math.pi)
    # grid factor pi k / (n sin(pi k / n)) stays below 1% for k <= 64
    assert equivalent_jump(dft_magnitudes(saw), 2, 64) == pytest.approx(2 * math.pi, rel=1e-2)
    assert equivalent_jump(dft_magnitudes(sine_field(G)), 2, 64) < 1e-12


def test_distance_examples():
    g = make_grid(256)
    cands = enumerate_stationary(ForcingSpec.cosine_squared(2), 0.0, g)
    d, i = distance_to_set(cands[0].ubar, cands, 1)
    assert d <= 1e-12 and i == 0
    d, i = distance_to_set(cands[1].ubar.with_values(cands[1].ubar.values + 0.1), cands, 1)
    assert d == pytest.approx(0.1, abs=1e-12) and i == 1
    moved = cands[0].ubar.with_values(np.roll(cands[0].ubar.values, g.n // 2))
    d, i = distance_to_set(moved, cands, 2)
    assert d <= 1e-10 and i == 1
    with pytest.raises(GridError):
        distance_to_set(TorusField.constant(make_grid(64), 0.0), cands, 1)
    with pytest.raises(ValueError):
        distance_to_set(cands[0].ubar, [], 1)


def test_distance_ties_go_to_lower_index():
    g = make_grid(64)
    sol = build_stationary(SPEC1, 0.0, None, g)
    assert distance_to_set(sol.ubar, [sol, sol], 1) == (0.0, 0)


def test_track_from_stationary_start():
    sol = build_stationary(SPEC1, 0.0, None, G)
    traj = evolve(SolverConfig(G, SPEC1, t_end=10.0, record_every=1.0), sol.ubar)
    rep = track_convergence(traj, [sol])
    assert np.all(rep.distances_l1 <= 0.01) and np.all(rep.distances_l2 <= 0.01)
    assert rep.shock_time_estimate == 0.0
    assert rep.at(5.0) == (rep.distances_l1[5], rep.distances_l2[5])


def _unforced_shock_time(n):
    g = make_grid(n)
    flat = ForcingSpec.from_table(TorusField.constant(g, 0.0))
    traj = evolve(SolverConfig(g, flat, t_end=2.0, record_every=0.05), sine_field(g))
    sol = build_stationary(flat, 0.0, None, g)
    return track_convergence(traj, [sol]).shock_time_estimate


def test_unforced_breaking_time():
    assert _unforced_shock_time(1024) == pytest.approx(1.0, abs=0.1)


def test_shock_time_no_later_under_refinement():
    coarse, fine = _unforced_shock_time(256), _unforced_shock_time(1024)
    assert fine <= coarse + 0.05 + 1e-12


def test_report_validation():
    with pytest.raises(ValueError):
        ConvergenceReport(np.array([0.0]), np.array([-1.0]), np.array([0.0]), 0, math.inf)


def test_spectrum_dynamics_phases():
    g = make_grid(4096)
    traj = evolve(SolverConfig(g, SPEC1, t_end=5.0, record_every=0.5), sine_field(g))
    dyn = dict(spectrum_dynamics(traj, 2, 128))
    assert dyn[0.0] == BELOW_NOISE and dyn[0.5] == BELOW_NOISE
    assert -1.3 <= dyn[5.0] <= -0.7


def test_phi_slope():
    phi = build_stationary(SPEC1, 0.0, None, make_grid(4096)).phi
    assert -2.2 <= decay_exponent(phi, 2, 128) <= -1.8
