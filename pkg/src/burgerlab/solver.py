"""Godunov finite-volume evolution of ``u_t + (u^2/2)_x = f(x - omega t)`` on the torus.

First-order, unsplit explicit Euler source, adaptive time step
``dt = cfl dx / max|u|``. The scheme is monotone for ``cfl <= 1/2``, conserves
the mean exactly up to rounding (telescoping fluxes, zero-mean discrete
source) and converges to the entropy solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .forcing import ForcingSpec
from .torus import TorusField, TorusGrid, shock_indicator


class SolverError(RuntimeError):
    """Numerical failure: CFL violation or blow-up beyond the a priori bound."""


@dataclass(frozen=True)
class SolverConfig:
    grid: TorusGrid
    forcing: ForcingSpec
    cfl: float = 0.45
    t_end: float = 1.0
    record_every: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 < self.cfl <= 0.5:
            raise ValueError(f"cfl must lie in (0, 1/2], got {self.cfl}")
        if not self.t_end > 0.0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if not self.record_every > 0.0:
            raise ValueError(f"record_every must be positive, got {self.record_every}")


@dataclass
class Diagnostics:
    """Per-record-time diagnostics.

    ``work[i]`` is the discrete energy injected by the source up to
    ``times[i]`` (see ``kernels.advance``); its increments divided by the
    elapsed time give the time-averaged power input.
    """

    times: np.ndarray
    mean: np.ndarray
    l2_energy: np.ndarray
    power_input: np.ndarray
    shock_indicator: np.ndarray
    work: np.ndarray

    def index_at(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))

    def average_power(self, t0: float, t1: float | None = None) -> float:
        """Time-averaged discrete work rate over ``[t0, t1]`` (record times)."""
        i0 = self.index_at(t0)
        i1 = len(self.times) - 1 if t1 is None else self.index_at(t1)
        span = self.times[i1] - self.times[i0]
        if span <= 0:
            raise ValueError("empty averaging window")
        return float((self.work[i1] - self.work[i0]) / span)


@dataclass
class Trajectory:
    times: np.ndarray
    snapshots: list[TorusField]
    diagnostics: Diagnostics
    config: SolverConfig | None = None
    steps: int = 0

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=np.float64)
        if len(self.times) != len(self.snapshots):
            raise ValueError("one snapshot per time required")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def final(self) -> TorusField:
        return self.snapshots[-1]

    def index_at(self, t: float) -> int:
        """Index of the snapshot closest to time ``t``."""
        return int(np.argmin(np.abs(self.times - t)))


def godunov_flux(ul: float, ur: float) -> float:
    """Exact Riemann flux for g(u) = u^2/2: min of g on [ul, ur] if ul <= ur, else max on [ur, ul]."""
    a = max(ul, 0.0)
    b = min(ur, 0.0)
    return max(0.5 * a * a, 0.5 * b * b)


def forcing_samples(spec: ForcingSpec, grid: TorusGrid, t: float) -> np.ndarray:
    """Zero-mean discrete forcing at the cell centers at time ``t``."""
    if spec.steady:
        return spec.sample_steady(grid)
    ks, bc, bs = spec.traveling_basis(grid)
    theta = spec.omega * t
    f = np.zeros(grid.n)
    for m in range(len(ks)):
        kt = ks[m] * theta
        f += bc[m] * math.cos(kt) + bs[m] * math.sin(kt)
    return f - np.sum(f) / grid.n


def max_dt(state: TorusField, cfl: float) -> float:
    umax = float(np.max(np.abs(state.values)))
    return cfl * state.grid.dx / max(umax, kernels.SPEED_FLOOR)


def step(state: TorusField, t: float, dt: float, config: SolverConfig) -> TorusField:
    """One explicit Godunov step with the source sampled at the beginning-of-step time."""
    if state.grid != config.grid:
        raise ValueError("state and config live on different grids")
    if dt <= 0 or dt > max_dt(state, config.cfl) * (1.0 + 1e-12):
        raise SolverError(
            f"dt = {dt:.6g} violates the CFL bound {max_dt(state, config.cfl):.6g}"
        )
    f = forcing_samples(config.forcing, config.grid, t)
    u = np.ascontiguousarray(state.values, dtype=np.float64)
    new = kernels.godunov_update(u, f, dt / config.grid.dx, dt)
    return state.with_values(new)


def power_input(state: TorusField, spec: ForcingSpec, t: float = 0.0) -> float:
    """Normalized work rate ``(1/n) sum_j f(x_j - omega t) u_j``."""
    f = forcing_samples(spec, state.grid, t)
    return float(np.dot(f, state.values) / state.grid.n)


def max_principle_bounds(u0: TorusField, spec: ForcingSpec) -> tuple[float, float]:
    """Smallest ``k-, k+ >= 0`` with ``u-_{k-} <= u0 <= u+_{k+}`` on the grid.

    ``u+-_k = +-sqrt(2 (k + V))`` are smooth stationary solutions.
    """
    if not spec.steady:
        raise ValueError("the stationary sandwich needs a steady forcing")
    v = u0.values
    pot = spec.sample_potential(u0.grid)
    k_plus = max(float(np.max(0.5 * np.maximum(v, 0.0) ** 2 - pot)), 0.0)
    k_minus = max(float(np.max(0.5 * np.minimum(v, 0.0) ** 2 - pot)), 0.0)
    return k_minus, k_plus


def sandwich_field(grid: TorusGrid, spec: ForcingSpec, k: float, sign: float = 1.0) -> TorusField:
    """Samples of the stationary solution ``sign * sqrt(2 (k + V))``."""
    return TorusField(grid, sign * np.sqrt(2.0 * (k + spec.sample_potential(grid))))


def sandwich_bound(u0: TorusField, spec: ForcingSpec) -> float:
    """Sup-norm bound from the sandwich, in the frame moving with the forcing."""
    w = u0.with_values(u0.values - spec.omega)
    k_minus, k_plus = max_principle_bounds(w, spec.with_omega(0.0))
    vmax = spec.max_potential
    return abs(spec.omega) + math.sqrt(2.0 * (max(k_minus, k_plus) + vmax))


def _diagnostics(u: np.ndarray, f: np.ndarray) -> tuple[float, float, float, float]:
    n = len(u)
    return (float(np.mean(u)), float(np.mean(u * u)), float(np.dot(f, u) / n),
            shock_indicator(u))


def evolve(config: SolverConfig, u0: TorusField, fixed_dt: float | None = None,
           keep_snapshots: bool = True) -> Trajectory:
    """Run from ``u0`` to ``config.t_end``, recording every ``config.record_every``.

    Record times are hit exactly (the last step before each is shortened).
    With ``keep_snapshots=False`` only the initial and final states are kept,
    diagnostics are still recorded at every record time.
    """
    grid, spec = config.grid, config.forcing
    if u0.grid != grid:
        raise ValueError("initial data and config live on different grids")
    bound = 10.0 * sandwich_bound(u0, spec)

    if spec.steady:
        f_static = spec.sample_steady(grid)
        ks = np.zeros(0, dtype=np.int64)
        bc = bs = np.zeros((0, grid.n))
    else:
        f_static = np.zeros(grid.n)
        ks, bc, bs = spec.traveling_basis(grid)
        ks = np.ascontiguousarray(ks, dtype=np.int64)
        bc = np.ascontiguousarray(bc)
        bs = np.ascontiguousarray(bs)

    u = np.array(u0.values, dtype=np.float64)
    t = 0.0
    times, snaps = [0.0], [u0]
    diag = [_diagnostics(u, forcing_samples(spec, grid, 0.0))]
    diag_times, work = [0.0], [0.0]
    total_steps = 0
    k = 1
    while t < config.t_end:
        t_next = min(k * config.record_every, config.t_end)
        if config.t_end - t_next < 1e-12 * config.t_end:
            t_next = config.t_end
        try:
            t, nsteps, w, umax = kernels.advance(
                u, t, t_next, grid.dx, config.cfl, f_static, ks, bc, bs,
                spec.omega, fixed_dt or 0.0,
            )
        except ValueError as exc:
            raise SolverError(str(exc)) from exc
        if umax > bound or not np.all(np.isfinite(u)):
            raise SolverError(
                f"max|u| = {umax:.4g} exceeds 10x the a priori bound at t = {t:.4g}"
            )
        total_steps += nsteps
        diag_times.append(t)
        work.append(work[-1] + w)
        diag.append(_diagnostics(u, forcing_samples(spec, grid, t)))
        if keep_snapshots or t >= config.t_end:
            times.append(t)
            snaps.append(TorusField(grid, u.copy()))
        k += 1

    d = np.array(diag)
    diagnostics = Diagnostics(np.array(diag_times), d[:, 0], d[:, 1], d[:, 2], d[:, 3],
                              np.array(work))
    return Trajectory(np.array(times), snaps, diagnostics, config=config, steps=total_steps)


@dataclass
class PotentialTrajectory:
    """Hamilton-Jacobi potential U with ``u = p + dU/dx``.

    ``fields[i].values[j]`` is U at the right face ``x_{j+1/2}`` of cell j.
    """

    times: np.ndarray
    fields: list[TorusField]
    p: float


def reconstruct_potential(traj: Trajectory, p: float, spec: ForcingSpec | None = None
                          ) -> PotentialTrajectory:
    """Integrate ``u - p`` in space and the Hamilton-Jacobi equation in time.

    ``U(t, x_{j+1/2}) = sum_{i<=j} (u_i - p) dx + c(t)``, where ``c`` is the
    trapezoidal time integral of ``-H(x_ref, u(t, x_ref))`` at the first cell.
    """
    spec = spec if spec is not None else traj.config.forcing
    for t, snap in zip(traj.times, traj.snapshots):
        m = float(np.mean(snap.values))
        if abs(m - p) > 1e-8:
            raise ValueError(f"snapshot at t = {t:g} has mean {m:.12g}, expected p = {p:.12g}")
    grid = traj.snapshots[0].grid
    v_ref = float(spec.sample_potential(grid)[0])
    theta_ref = grid.centers[0]
    rates = []
    for t, snap in zip(traj.times, traj.snapshots):
        pot = v_ref if spec.steady else float(spec.potential(theta_ref - spec.omega * t))
        u_ref = snap.values[0]
        rates.append(-(0.5 * u_ref * u_ref - pot))
    rates = np.array(rates)
    c = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(traj.times) * (rates[1:] + rates[:-1]))])
    fields = [
        TorusField(grid, np.cumsum((snap.values - p) * grid.dx) + ci)
        for snap, ci in zip(traj.snapshots, c)
    ]
    return PotentialTrajectory(np.array(traj.times), fields, p)


def trajectory_from_fields(times, fields: list[TorusField], spec: ForcingSpec) -> Trajectory:
    """Wrap given fields (e.g. an exact stationary profile) as a trajectory."""
    grid = fields[0].grid
    times = np.asarray(times, dtype=np.float64)
    d = np.array([_diagnostics(s.values, forcing_samples(spec, grid, t))
                  for t, s in zip(times, fields)])
    diagnostics = Diagnostics(times, d[:, 0], d[:, 1], d[:, 2], d[:, 3], np.zeros(len(times)))
    config = SolverConfig(grid, spec, t_end=float(times[-1]) or 1.0)
    return Trajectory(times, list(fields), diagnostics, config=config)
