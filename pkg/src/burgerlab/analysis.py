"""Spectral slopes, distances to the stationary set and convergence tracking."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cell import CellSolution
from .torus import (
    SHOCK_FRACTION,
    GridError,
    SpectrumReport,
    TorusField,
    dft_magnitudes,
    is_shocked,
    lq_norm,
    shock_indicator,
)

__all__ = [
    "BELOW_NOISE",
    "ConvergenceReport",
    "InsufficientSpectrum",
    "MAGNITUDE_FLOOR",
    "MIN_MODES",
    "decay_exponent",
    "distance_to_set",
    "equivalent_jump",
    "is_shocked",
    "shock_indicator",
    "spectrum_dynamics",
    "track_convergence",
]

MAGNITUDE_FLOOR = 1e-13
MIN_MODES = 8
BELOW_NOISE = "below-noise"


class InsufficientSpectrum(ValueError):
    def __init__(self, usable: int) -> None:
        super().__init__(f"insufficient spectral content: {usable} usable modes, need {MIN_MODES}")
        self.usable = usable


def decay_exponent(report: SpectrumReport | TorusField, kmin: int, kmax: int) -> float:
    """Least-squares slope of ``log|u_hat(k)|`` against ``log k`` on ``[kmin, kmax]``.

    Modes at or below ``MAGNITUDE_FLOOR`` are left out (structural zeros such
    as the even harmonics of odd-symmetric profiles).
    """
    if isinstance(report, TorusField):
        report = dft_magnitudes(report)
    if kmin < 2 or kmax > report.n // 4 or kmin >= kmax:
        raise ValueError(f"fit window [{kmin}, {kmax}] must satisfy 2 <= kmin < kmax <= n/4 = "
                         f"{report.n // 4}")
    k = np.asarray(report.wavenumbers)
    mag = np.asarray(report.magnitudes)
    sel = (k >= kmin) & (k <= kmax) & (mag > MAGNITUDE_FLOOR)
    usable = int(np.count_nonzero(sel))
    if usable < MIN_MODES:
        raise InsufficientSpectrum(usable)
    slope, _ = np.polyfit(np.log(k[sel]), np.log(mag[sel]), 1)
    return float(slope)


def fitted_spectrum(field: TorusField, kmin: int, kmax: int) -> SpectrumReport:
    """Spectrum of ``field`` with the fitted slope attached."""
    rep = dft_magnitudes(field)
    return SpectrumReport(rep.wavenumbers, rep.magnitudes, decay_exponent(rep, kmin, kmax),
                          (kmin, kmax))


def distance_to_set(field: TorusField, candidates: list[CellSolution], q: float
                    ) -> tuple[float, int]:
    """Smallest L^q distance from ``field`` to a candidate ``ubar``; ties go to the lower index."""
    if not candidates:
        raise ValueError("no candidates")
    best, arg = math.inf, -1
    for i, sol in enumerate(candidates):
        if sol.ubar.grid != field.grid:
            raise GridError("field and candidate live on different grids")
        d = lq_norm(field.values - sol.ubar.values, q)
        if d < best:
            best, arg = d, i
    return best, arg


@dataclass
class ConvergenceReport:
    times: np.ndarray
    distances_l1: np.ndarray
    distances_l2: np.ndarray
    argmin_index: int
    shock_time_estimate: float
    shocked: np.ndarray | None = None

    def __post_init__(self) -> None:
        if np.any(np.asarray(self.distances_l1) < 0) or np.any(np.asarray(self.distances_l2) < 0):
            raise ValueError("distances must be nonnegative")
        if self.shocked is None:
            self.shocked = np.zeros(len(self.times), dtype=bool)

    def at(self, t: float) -> tuple[float, float]:
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        return float(self.distances_l1[i]), float(self.distances_l2[i])


def track_convergence(traj, candidates: list[CellSolution],
                      fraction: float = SHOCK_FRACTION) -> ConvergenceReport:
    """L^1 and L^2 distance of every snapshot to the candidate set.

    Each distance is the minimum over candidates at that time; ``argmin_index``
    refers to the final snapshot.
    """
    if not candidates:
        raise ValueError("no candidates")
    d1, d2, flags = [], [], []
    for snap in traj.snapshots:
        d1.append(distance_to_set(snap, candidates, 1)[0])
        d2.append(distance_to_set(snap, candidates, 2)[0])
        flags.append(is_shocked(snap, fraction))
    flags = np.array(flags, dtype=bool)
    hit = np.nonzero(flags)[0]
    t_shock = float(traj.times[hit[0]]) if hit.size else math.inf
    _, arg = distance_to_set(traj.snapshots[-1], candidates, 1)
    return ConvergenceReport(np.array(traj.times), np.array(d1), np.array(d2), arg, t_shock,
                             flags)


def equivalent_jump(report: SpectrumReport, kmin: int, kmax: int) -> float:
    """Jump height whose ``J / (2 pi k)`` tail matches the upper half of the window.

    ``2 pi median(k |u_hat(k)|)`` over ``[max(kmin, kmax/2), kmax]``; for a
    field with a single discontinuity this is the size of that jump.
    """
    lo = max(kmin, kmax // 2)
    k = np.asarray(report.wavenumbers)[lo - 1:kmax]
    m = np.asarray(report.magnitudes)[lo - 1:kmax]
    return float(2.0 * math.pi * np.median(k * m))


def spectrum_dynamics(traj, kmin: int, kmax: int,
                      fraction: float = SHOCK_FRACTION) -> list[tuple[float, float | str]]:
    """Per-snapshot decay exponent, or ``BELOW_NOISE`` when the fit has no content.

    A snapshot is below noise when its high-wavenumber tail carries less than
    a shock's worth of content (``equivalent_jump`` under ``fraction`` times
    the field's range, the same rule as ``is_shocked``); the residual tail of
    a smooth solution is then numerical, not a power law. It is also below
    noise when fewer than ``MIN_MODES`` modes exceed ``MAGNITUDE_FLOOR``.
    """
    out: list[tuple[float, float | str]] = []
    for t, snap in zip(traj.times, traj.snapshots):
        rep = dft_magnitudes(snap)
        spread = float(np.max(snap.values) - np.min(snap.values))
        if equivalent_jump(rep, kmin, kmax) < fraction * spread or spread == 0.0:
            out.append((float(t), BELOW_NOISE))
            continue
        try:
            out.append((float(t), decay_exponent(rep, kmin, kmax)))
        except InsufficientSpectrum:
            out.append((float(t), BELOW_NOISE))
    return out
