import math

import numpy as np
import pytest
from scipy.integrate import simpson
from scipy.optimize import brentq

from burgerlab.cell import (
    Branch,
    CellProblemError,
    WaveSolutionSpec,
    build_corrector,
    build_stationary,
    check_entropy_jumps,
    critical_momentum,
    detect_jumps,
    effective_hamiltonian,
    enumerate_stationary,
    solve_xbar,
    stationary_residual,
    wave_convergence,
)
from burgerlab.forcing import ForcingSpec
from burgerlab.solver import reconstruct_potential, trajectory_from_fields
from burgerlab.torus import TorusField, make_grid

SPEC1 = ForcingSpec.cosine_squared(1)
PCR = 2 * math.sqrt(2) / math.pi
# frozen from a refinement study: the mismatch is in fact O(dx^2)
CONSISTENCY_C = 2e-3


def oracle_hbar(p, n=10**6):
    """Fixed-grid Simpson plus Brent, independent of the package quadrature."""
    x = np.linspace(0.0, 2 * math.pi, n + 1)
    v = np.cos(x / 2) ** 2

    def g(lam):
        return math.sqrt(2) / (2 * math.pi) * simpson(np.sqrt(v + lam), x=x) - abs(p)

    return brentq(g, p * p / 2 - 1.0, p * p / 2, xtol=1e-15)


def test_critical_momentum_examples():
    assert critical_momentum(SPEC1) == pytest.approx(PCR, abs=1e-12)
    assert critical_momentum(ForcingSpec.cosine_squared(3)) == pytest.approx(PCR, abs=1e-12)
    flat = ForcingSpec.from_table(TorusField.constant(make_grid(64), 1.0))
    assert critical_momentum(flat) == 0.0


def test_hbar_examples():
    assert effective_hamiltonian(SPEC1, 0.0) == 0.0
    assert effective_hamiltonian(SPEC1, PCR) == 0.0
    lam = effective_hamiltonian(SPEC1, 2.0)
    assert 1.0 <= lam <= 2.0
    assert lam == pytest.approx(oracle_hbar(2.0), abs=1e-10)


def test_hbar_properties():
    for p in (0.1, 0.5, 1.0, 2.0, 5.0):
        assert abs(effective_hamiltonian(SPEC1, p) - effective_hamiltonian(SPEC1, -p)) <= 1e-10
    for dp in (1e-6, -1e-6):
        assert abs(effective_hamiltonian(SPEC1, PCR + dp)) <= 1e-4
    scan = [effective_hamiltonian(SPEC1, p) for p in np.linspace(0, 5, 50)]
    assert np.all(np.diff(scan) >= 0)
    assert abs(effective_hamiltonian(SPEC1, 20.0) - 200.0 + 0.5) <= 1e-3


def test_hbar_flat_potential():
    flat = ForcingSpec.from_table(TorusField.constant(make_grid(64), 0.0))
    assert effective_hamiltonian(flat, 1.5) == pytest.approx(1.125, abs=1e-12)


def test_xbar_examples():
    assert solve_xbar(SPEC1, 0.0, math.pi) == pytest.approx(2 * math.pi, abs=1e-12)
    assert solve_xbar(SPEC1, PCR, math.pi) == pytest.approx(3 * math.pi, abs=1e-10)
    assert solve_xbar(SPEC1, -PCR, math.pi) == pytest.approx(math.pi, abs=1e-10)


def test_corrector_closed_form():
    g = make_grid(256)
    sol = build_corrector(SPEC1, 0.0, math.pi, g)
    assert sol.branch is Branch.SUBCRITICAL and sol.lam == 0.0
    assert sol.xbar == pytest.approx(2 * math.pi, abs=1e-12)
    assert float(sol.corrector(2 * math.pi)) == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    x = np.linspace(math.pi, 3 * math.pi, 41)
    exact = np.where(x <= 2 * math.pi, 2 * math.sqrt(2) * (1 - np.sin(x / 2)),
                     2 * math.sqrt(2) * (1 + np.sin(x / 2)))
    assert np.allclose(sol.corrector(x), exact, atol=1e-11)
    assert np.argmax(sol.corrector(x)) == 20


def test_corrector_requires_zero_base():
    with pytest.raises(CellProblemError):
        build_corrector(SPEC1, 0.0, 1.0, make_grid(64))


def test_supercritical_corrector_is_c1():
    second = []
    for n in (256, 1024):
        phi = build_corrector(SPEC1, 2.0, None, make_grid(n)).phi.values
        second.append(np.max(np.abs(np.roll(phi, -1) - 2 * phi + np.roll(phi, 1))) / (2 * math.pi / n) ** 2)
    assert second[1] <= 1.1 * second[0]


def test_stationary_profiles():
    g = make_grid(1024)
    sol = build_stationary(SPEC1, 0.0, math.pi, g)
    x = np.array([0.5, 2.0, 4.0, 5.5])
    assert np.allclose(sol.velocity(x), np.where(x > math.pi, 1, -1) * math.sqrt(2) * np.abs(np.cos(x / 2)))
    assert abs(np.mean(sol.ubar.values)) < 1e-12
    sup = build_stationary(SPEC1, 2.0, None, g)
    assert sup.xbar is None and sup.branch is Branch.SUPERCRITICAL
    assert np.min(sup.ubar.values) == pytest.approx(math.sqrt(2 * sup.lam), abs=1e-5)
    assert np.mean(sup.ubar.values) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("p", [0.0, 0.5, -0.3, 2.0])
def test_two_constructions_agree(p):
    g = make_grid(1024)
    sol = build_stationary(SPEC1, p, None, g)
    d = p + (np.roll(sol.phi.values, -1) - np.roll(sol.phi.values, 1)) / (2 * g.dx)
    keep = np.ones(g.n, dtype=bool)
    if sol.xbar is not None:
        keep = np.abs(np.remainder(g.centers - sol.xbar + math.pi, 2 * math.pi) - math.pi) > 2 * g.dx
    assert np.max(np.abs(sol.ubar.values - d)[keep]) <= CONSISTENCY_C * g.dx


@pytest.mark.parametrize("p", [0.0, 0.7, 2.0])
def test_stationary_residual_small(p):
    assert stationary_residual(build_stationary(SPEC1, p, None, make_grid(256))) <= 1e-8


def test_enumerate_examples():
    g = make_grid(1024)
    assert len(enumerate_stationary(SPEC1, 0.0, g)) == 1
    spec2 = ForcingSpec.cosine_squared(2)
    pair = enumerate_stationary(spec2, 0.0, g)
    assert len(pair) == 2
    assert np.max(np.abs(np.roll(pair[0].ubar.values, g.n // 2) - pair[1].ubar.values)) <= 1e-10
    assert len(enumerate_stationary(spec2, 1.0, g)) == 1


def test_entropy_jump_examples():
    g = make_grid(1024)
    rep = check_entropy_jumps(build_stationary(SPEC1, 0.0, None, g))
    assert rep.admissible and len(rep.jumps) == 1
    assert rep.jumps[0].location % (2 * math.pi) == pytest.approx(0.0, abs=1e-9) or \
        rep.jumps[0].location == pytest.approx(2 * math.pi, abs=1e-9)
    assert rep.jumps[0].size == pytest.approx(-2 * math.sqrt(2), abs=1e-6)
    rep = check_entropy_jumps(build_stationary(SPEC1, 2.0, None, g))
    assert rep.admissible and rep.jumps == []
    # hand-built upward step at x = pi / 2, where V = 1/2
    bad = TorusField(g, np.where((g.centers > math.pi / 2) & (g.centers < 3 * math.pi / 2), 1.0, -1.0))
    rep = check_entropy_jumps(bad, SPEC1)
    assert not rep.admissible
    assert [round(j.size, 9) for j in rep.jumps] == [2.0, -2.0]


def test_detect_jumps_smooth_field():
    g = make_grid(512)
    assert detect_jumps(TorusField(g, np.sin(g.centers))) == []


@pytest.mark.parametrize("k0,p", [(1, 0.3), (2, 0.0), (3, -0.5), (2, 1.5)])
def test_every_solution_admissible(k0, p):
    spec = ForcingSpec.cosine_squared(k0)
    for sol in enumerate_stationary(spec, p, make_grid(1024)):
        assert check_entropy_jumps(sol).admissible


def test_wave_solution_spec():
    w = WaveSolutionSpec.for_forcing(SPEC1, 0.5, 2.0)
    assert w.hbar_p == pytest.approx(effective_hamiltonian(SPEC1, 2.0))
    assert float(w(0.0, -1.0)) == pytest.approx(2.5)
    assert float(w(1.0, 2 * math.pi + 1.0)) == pytest.approx(2.5 - w.hbar_p)


@pytest.mark.parametrize("p", [0.0, 2.0])
def test_wave_convergence_exact(p):
    g = make_grid(1024)
    sol = build_stationary(SPEC1, p, None, g)
    times = np.linspace(0.0, 1.0, 6)
    pot = reconstruct_potential(trajectory_from_fields(times, [sol.ubar] * 6, SPEC1), p)
    d = wave_convergence(pot, sol)
    assert np.all(d <= 1e-6)
    shifted = type(pot)(pot.times, [f.with_values(f.values + 3.0) for f in pot.fields], pot.p)
    assert np.allclose(wave_convergence(shifted, sol), d, atol=1e-12)
