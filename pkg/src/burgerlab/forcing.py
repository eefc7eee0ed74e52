"""Potential V, forcing f = dV/dx, and traveling forcing f(x - omega t).

The flow is ``u_t + u u_x = f`` with ``f = V'``: then ``u^2/2 - V`` is constant
along stationary profiles, which is what makes ``sqrt(2 (V + k))`` stationary.
For the reference potential ``V = cos^2(k0 x / 2)`` this is
``f(x) = -k0 cos(k0 x / 2) sin(k0 x / 2) = -(k0 / 2) sin(k0 x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from .torus import TWO_PI, TorusField, TorusGrid, read_field_csv

ZERO_TOL = 1e-10


class ForcingError(ValueError):
    pass


@dataclass(frozen=True)
class TabulatedPotential:
    """Periodic cubic interpolant of V samples, shifted so that min V = 0."""

    table: TorusField

    def __post_init__(self) -> None:
        vals = self.table.values - np.min(self.table.values)
        object.__setattr__(self, "table", self.table.with_values(vals))

    @cached_property
    def _spline(self) -> CubicSpline:
        x = self.table.grid.centers
        y = self.table.values
        return CubicSpline(np.append(x, x[0] + TWO_PI), np.append(y, y[0]),
                           bc_type="periodic")

    def _wrap(self, x):
        x0 = self.table.grid.dx / 2
        return x0 + np.mod(np.asarray(x, dtype=np.float64) - x0, TWO_PI)

    def potential(self, x):
        return np.maximum(self._spline(self._wrap(x)), 0.0)

    def derivative(self, x):
        return self._spline(self._wrap(x), 1)

    @property
    def max_value(self) -> float:
        return float(np.max(self.potential(np.linspace(0, TWO_PI, 8 * self.table.grid.n))))


@dataclass(frozen=True)
class ForcingSpec:
    """Either ``V = cos^2(kappa0 x / 2)`` or a tabulated potential, moving at ``omega``."""

    kappa0: int | None = None
    tabulated: TabulatedPotential | None = field(default=None, repr=False)
    omega: float = 0.0

    def __post_init__(self) -> None:
        if (self.kappa0 is None) == (self.tabulated is None):
            raise ForcingError("give exactly one of kappa0 or a tabulated potential")
        if self.kappa0 is not None:
            if int(self.kappa0) != self.kappa0 or self.kappa0 < 1:
                raise ForcingError(f"kappa0 must be a positive integer, got {self.kappa0}")
            object.__setattr__(self, "kappa0", int(self.kappa0))
        object.__setattr__(self, "omega", float(self.omega))

    @classmethod
    def cosine_squared(cls, kappa0: int, omega: float = 0.0) -> ForcingSpec:
        return cls(kappa0=kappa0, omega=omega)

    @classmethod
    def from_table(cls, table: TorusField, omega: float = 0.0) -> ForcingSpec:
        return cls(tabulated=TabulatedPotential(table), omega=omega)

    @classmethod
    def from_csv(cls, path, omega: float = 0.0) -> ForcingSpec:
        return cls.from_table(read_field_csv(path), omega)

    @property
    def kind(self) -> str:
        return "cosine_squared" if self.kappa0 is not None else "tabulated"

    @property
    def steady(self) -> bool:
        return self.omega == 0.0

    def with_omega(self, omega: float) -> ForcingSpec:
        return replace(self, omega=float(omega))

    def potential(self, x):
        if self.kappa0 is not None:
            return np.cos(0.5 * self.kappa0 * np.asarray(x, dtype=np.float64)) ** 2
        return self.tabulated.potential(x)

    def profile(self, z):
        """Steady forcing ``f(z) = V'(z)``."""
        if self.kappa0 is not None:
            k = self.kappa0
            return -0.5 * k * np.sin(k * np.asarray(z, dtype=np.float64))
        return self.tabulated.derivative(z)

    @property
    def max_potential(self) -> float:
        return 1.0 if self.kappa0 is not None else self.tabulated.max_value

    # grid sampling used by the solver

    def sample_potential(self, grid: TorusGrid) -> np.ndarray:
        if self.kappa0 is not None:
            # cos^2(k x / 2) = (1 + cos(k x)) / 2
            return 0.5 * (1.0 + np.cos(grid.phase_angles(self.kappa0)))
        return self.tabulated.potential(grid.centers)

    def sample_steady(self, grid: TorusGrid) -> np.ndarray:
        """Zero-mean forcing samples at the cell centers (omega ignored)."""
        if self.kappa0 is not None:
            k = self.kappa0
            f = -0.5 * k * np.sin(grid.phase_angles(k))
        else:
            f = self.tabulated.derivative(grid.centers)
        return f - math.fsum(f) / grid.n

    def traveling_basis(self, grid: TorusGrid, rtol: float = 1e-14):
        """Basis for ``f(x_j - omega t) = sum_m C[m, j] cos(k_m theta) + S[m, j] sin(k_m theta)``.

        ``theta = omega t``. The reference potential has the single mode
        ``k0``; a tabulated one is expanded in Fourier modes of its forcing.
        """
        if self.kappa0 is not None:
            k = self.kappa0
            ang = grid.phase_angles(k)
            amp = 0.5 * k
            return (np.array([k]), (-amp * np.sin(ang))[None, :],
                    (amp * np.cos(ang))[None, :])
        m = 8 * grid.n
        z = np.arange(m) * (TWO_PI / m)
        c = np.fft.rfft(self.tabulated.derivative(z)) / m
        ks = np.arange(len(c))
        keep = (ks >= 1) & (ks < grid.n // 2) & (np.abs(c) > rtol * np.max(np.abs(c[1:])))
        ks = ks[keep]
        # f(z) = sum_k a_k cos kz + b_k sin kz
        a, b = 2.0 * c.real[keep], -2.0 * c.imag[keep]
        cos_kx = np.cos(np.outer(ks, grid.centers))
        sin_kx = np.sin(np.outer(ks, grid.centers))
        basis_c = a[:, None] * cos_kx + b[:, None] * sin_kx
        basis_s = a[:, None] * sin_kx - b[:, None] * cos_kx
        return ks, basis_c, basis_s


def potential_eval(spec: ForcingSpec, x: float) -> float:
    return float(spec.potential(np.mod(x, TWO_PI)))


def forcing_eval(spec: ForcingSpec, x: float, t: float) -> float:
    return float(spec.profile(np.mod(x - spec.omega * t, TWO_PI)))


def find_minima(spec: ForcingSpec) -> list[float]:
    """Zeros of V in [0, 2pi), ordered."""
    if spec.kappa0 is not None:
        k = spec.kappa0
        return [(2 * j + 1) * math.pi / k for j in range(k)]
    table = spec.tabulated.table
    vals = table.values
    zero = vals <= ZERO_TOL
    if not np.any(zero):
        raise ForcingError("tabulated potential has no zero within tolerance")
    n = len(vals)
    if np.all(zero):
        return [float(table.grid.centers[0])]
    # clusters of adjacent zero samples, cyclically
    starts = [j for j in range(n) if zero[j] and not zero[j - 1]]
    minima = []
    for s in starts:
        j, best = s, s
        while zero[j % n]:
            if vals[j % n] < vals[best % n]:
                best = j
            j += 1
        minima.append(float(table.grid.centers[best % n]))
    return sorted(minima)
