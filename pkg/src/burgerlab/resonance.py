"""Traveling waves under forcing ``f(x - omega t)`` and resonance scans.

A wave ``u(t, x) = p + G(x - omega t)`` solves the forced equation iff
``G + p - omega`` is a stationary profile of momentum ``p - omega``, so the
steady cell problem delivers it. Resonance (a shock that dissipates the work
done by the forcing) occurs for ``|omega - p| <= omega_cr``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .analysis import BELOW_NOISE, spectrum_dynamics
from .cell import CellSolution, build_corrector, critical_momentum, is_subcritical
from .forcing import ForcingSpec
from .solver import SolverConfig, Trajectory, evolve
from .torus import TWO_PI, TorusField, TorusGrid

POWER_FLOOR = -1e-8
THRESHOLD_FRACTION = 1e-3


class Classification(str, Enum):
    RESONANT = "Resonant"
    NON_RESONANT = "NonResonant"


def critical_frequency(spec: ForcingSpec, p: float = 0.0) -> tuple[float, tuple[float, float]]:
    """``omega_cr`` (the same integral as ``p_cr``) and the window ``(p - omega_cr, p + omega_cr)``."""
    w = critical_momentum(spec.with_omega(0.0))
    return w, (p - w, p + w)


@dataclass(frozen=True)
class TravelingWave:
    """``u(t, x) = p + G(x - omega t)``; ``solution`` is the cell solution at ``p - omega``."""

    p: float
    omega: float
    solution: CellSolution
    G: TorusField

    @property
    def resonant(self) -> bool:
        return self.solution.xbar is not None

    def velocity(self, t: float, x) -> np.ndarray:
        z = np.mod(np.asarray(x, dtype=np.float64) - self.omega * t, TWO_PI)
        return self.omega + self.solution.velocity(z)


def build_traveling_wave(spec: ForcingSpec, p: float, omega: float, x0: float | None,
                         grid: TorusGrid) -> TravelingWave:
    steady = spec.with_omega(0.0)
    q = p - omega
    sol = build_corrector(steady, q, x0, grid)
    return TravelingWave(p, omega, sol, sol.ubar.with_values(sol.ubar.values - q))


def shock_dissipation(spec: ForcingSpec, p: float, omega: float,
                      omega_cr: float | None = None) -> float:
    """Normalized dissipation ``[u]^3 / (12 * 2pi)`` of the traveling wave's shock.

    Zero outside the resonance window.
    """
    steady = spec.with_omega(0.0)
    omega_cr = critical_momentum(steady) if omega_cr is None else omega_cr
    q = p - omega
    if not is_subcritical(q, omega_cr):
        return 0.0
    sol = build_corrector(steady, q, None, TorusGrid(8), p_cr=omega_cr)
    jump = 2.0 * math.sqrt(2.0 * float(steady.potential(sol.xbar)))
    return jump**3 / (12.0 * TWO_PI)


@dataclass
class ResonanceScan:
    p: float
    omegas: np.ndarray
    avg_power: np.ndarray
    classification: list[Classification]
    omega_cr: float
    window: tuple[float, float]
    slopes: np.ndarray
    analytic_power: np.ndarray
    threshold: float

    def __post_init__(self) -> None:
        if np.any(np.diff(self.omegas) <= 0):
            raise ValueError("omegas must be increasing")
        bad = np.nonzero(self.avg_power < POWER_FLOOR)[0]
        if bad.size:
            i = int(bad[0])
            raise ValueError(f"negative average power {self.avg_power[i]:.3g} at "
                             f"omega = {self.omegas[i]:.6g}")

    def boundaries(self) -> list[float]:
        """Midpoints between neighbouring omegas whose classification differs."""
        out = []
        for i in range(len(self.omegas) - 1):
            if self.classification[i] != self.classification[i + 1]:
                out.append(0.5 * (self.omegas[i] + self.omegas[i + 1]))
        return out


def default_horizon(omega_cr: float) -> tuple[float, float]:
    """``(t_end, t_burn)`` defaults: ``200 / max(omega_cr, 0.1)`` and half of it."""
    t_end = 200.0 / max(omega_cr, 0.1)
    return t_end, 0.5 * t_end


@dataclass(frozen=True)
class _Job:
    spec: ForcingSpec
    u0: TorusField
    t_end: float
    t_burn: float
    cfl: float
    kmax: int


def _run_one(job: _Job) -> tuple[float, float, Trajectory]:
    record = job.t_end / 200.0
    cfg = SolverConfig(job.u0.grid, job.spec, cfl=job.cfl, t_end=job.t_end,
                       record_every=record)
    traj = evolve(cfg, job.u0, keep_snapshots=False)
    power = traj.diagnostics.average_power(job.t_burn, job.t_end)
    final = Trajectory(traj.times[-1:], traj.snapshots[-1:], traj.diagnostics, traj.config,
                       traj.steps)
    if job.kmax <= 4:  # grid too coarse for a fit window
        return power, math.nan, traj
    (_, slope), = spectrum_dynamics(final, 4, job.kmax)
    return power, (math.nan if slope == BELOW_NOISE else float(slope)), traj


def resonance_scan(spec: ForcingSpec, p: float, omegas, u0: TorusField,
                   t_end: float | None = None, t_burn: float | None = None,
                   cfl: float = 0.45, workers: int = 1,
                   keep: list | None = None) -> ResonanceScan:
    """Evolve once per omega and classify by time-averaged power input.

    The average runs over ``[t_burn, t_end]``. An omega is resonant when its
    average exceeds ``1e-3`` times the largest average of the scan. Runs are
    independent; with ``workers > 1`` they go to a process pool, and the result
    is assembled in omega order either way. Trajectories (initial and final
    states plus diagnostics) are appended to ``keep`` when given.
    """
    omegas = np.asarray(omegas, dtype=np.float64)
    if abs(float(np.mean(u0.values)) - p) > 1e-8:
        raise ValueError(f"initial data has mean {np.mean(u0.values):.12g}, expected p = {p}")
    omega_cr, window = critical_frequency(spec, p)
    d_end, d_burn = default_horizon(omega_cr)
    t_end = d_end if t_end is None else float(t_end)
    t_burn = 0.5 * t_end if t_burn is None else float(t_burn)
    if not 0.0 <= t_burn < t_end:
        raise ValueError(f"need 0 <= t_burn < t_end, got t_burn = {t_burn}, t_end = {t_end}")
    n = u0.grid.n
    kmax = min(64, max(n // 16, 8), n // 4)
    jobs = [_Job(spec.with_omega(float(w)), u0, t_end, t_burn, cfl, kmax) for w in omegas]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]
    power = np.array([r[0] for r in results])
    slopes = np.array([r[1] for r in results])
    if keep is not None:
        keep.extend(r[2] for r in results)
    threshold = THRESHOLD_FRACTION * max(float(np.max(power)), 0.0)
    labels = [Classification.RESONANT if pw > threshold else Classification.NON_RESONANT
              for pw in power]
    analytic = np.array([shock_dissipation(spec, p, w, omega_cr) for w in omegas])
    return ResonanceScan(p, omegas, power, labels, omega_cr, window, slopes, analytic,
                         threshold)
