"""Uniform periodic grid on [0, 2pi), cell-averaged fields, norms and spectra.

All averages are normalized by the period, so ``mean(u)`` is the conserved
momentum ``p`` of the Burgers flow and ``lq_norm`` is the normalized L^q norm.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

TWO_PI = 2.0 * math.pi


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class TorusGrid:
    n: int

    def __post_init__(self) -> None:
        n = self.n
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise GridError(f"cell count must be an integer, got {n!r}")
        if n < 8 or n & (n - 1):
            raise GridError(f"cell count must be a power of two >= 8, got {n}")

    @property
    def dx(self) -> float:
        # division by a power of two is exact
        return TWO_PI / self.n

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.dx

    @property
    def faces(self) -> np.ndarray:
        """Left faces ``j * dx``; the right face of cell j is ``faces[j] + dx``."""
        return np.arange(self.n) * self.dx

    def phase_angles(self, k: int) -> np.ndarray:
        """``k * x_j`` reduced to [0, 2pi) through integer arithmetic.

        The reduction is exact, so grids nested by a power-of-two factor see
        bit-identical angles (used by the rescale experiment).
        """
        r = (int(k) * (2 * np.arange(self.n, dtype=np.int64) + 1)) % (2 * self.n)
        return r * (math.pi / self.n)


def make_grid(n: int) -> TorusGrid:
    return TorusGrid(int(n) if isinstance(n, np.integer) else n)


@dataclass(frozen=True)
class TorusField:
    grid: TorusGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.float64)
        if vals.shape != (self.grid.n,):
            raise GridError(
                f"field has {vals.shape} values, grid expects ({self.grid.n},)"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(
        cls, grid: TorusGrid, fn: Callable[[np.ndarray], np.ndarray]
    ) -> TorusField:
        """Sample ``fn`` at the cell centers (midpoint rule)."""
        return cls(grid, np.asarray(fn(grid.centers), dtype=np.float64))

    @classmethod
    def constant(cls, grid: TorusGrid, c: float) -> TorusField:
        return cls(grid, np.full(grid.n, float(c)))

    def with_values(self, values: np.ndarray) -> TorusField:
        return TorusField(self.grid, values)

    def __len__(self) -> int:
        return self.grid.n


def sine_field(grid: TorusGrid, k: int = 1, amplitude: float = 1.0,
               offset: float = 0.0) -> TorusField:
    """``offset + amplitude * sin(k x)`` sampled with exact phase reduction."""
    return TorusField(grid, offset + amplitude * np.sin(grid.phase_angles(k)))


def mean(field: TorusField) -> float:
    return float(np.mean(field.values))


def lq_norm(field: TorusField | np.ndarray, q: float) -> float:
    if q < 1:
        raise ValueError(f"L^q norm requires q >= 1, got {q}")
    v = np.abs(field.values if isinstance(field, TorusField) else np.asarray(field))
    if q == 1:
        return float(np.mean(v))
    if q == 2:
        return float(np.sqrt(np.mean(v * v)))
    return float(np.mean(v**q) ** (1.0 / q))


@dataclass(frozen=True)
class SpectrumReport:
    wavenumbers: np.ndarray
    magnitudes: np.ndarray
    slope: float | None = None
    fit_window: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if len(self.wavenumbers) != len(self.magnitudes):
            raise ValueError("wavenumbers and magnitudes differ in length")
        if self.fit_window is not None:
            kmin, kmax = self.fit_window
            if not 1 <= kmin < kmax <= len(self.magnitudes):
                raise ValueError(f"invalid fit window {self.fit_window}")

    @property
    def n(self) -> int:
        return 2 * len(self.magnitudes)


def dft_magnitudes(field: TorusField) -> SpectrumReport:
    """``|u_hat(k)| = |(1/n) sum_j u_j exp(-i k x_j)|`` for k = 1..n/2."""
    n = field.grid.n
    coeffs = np.fft.rfft(field.values) / n
    return SpectrumReport(np.arange(1, n // 2 + 1), np.abs(coeffs[1:]))


def parseval_defect(field: TorusField) -> float:
    """Relative mismatch between the variance and the one-sided spectrum.

    The Nyquist mode appears once in the two-sided sum, every other mode twice.
    """
    report = dft_magnitudes(field)
    m2 = report.magnitudes**2
    spectral = 2.0 * np.sum(m2[:-1]) + m2[-1]
    v = field.values
    variance = float(np.mean(v * v) - np.mean(v) ** 2)
    scale = max(abs(variance), float(np.mean(v * v)), 1e-300)
    return abs(variance - spectral) / scale


SHOCK_FRACTION = 0.25


def shock_indicator(field: TorusField | np.ndarray) -> float:
    """Largest cyclic jump between neighbouring cells."""
    v = field.values if isinstance(field, TorusField) else np.asarray(field)
    return float(np.max(np.abs(np.roll(v, -1) - v)))


def is_shocked(field: TorusField | np.ndarray, fraction: float = SHOCK_FRACTION) -> bool:
    """Flag a jump larger than ``fraction`` of the field's range."""
    v = field.values if isinstance(field, TorusField) else np.asarray(field)
    spread = float(np.max(v) - np.min(v))
    return spread > 0.0 and shock_indicator(v) > fraction * spread


def write_field_csv(field: TorusField, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "value"])
        for x, v in zip(field.grid.centers, field.values):
            w.writerow([f"{x:.17g}", f"{v:.17g}"])


def read_field_csv(path: str | Path) -> TorusField:
    path = Path(path)
    xs, vs = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header != ["x", "value"]:
            raise ValueError(f"{path}: expected header 'x,value', got {header}")
        for row in rows:
            if row:
                xs.append(float(row[0]))
                vs.append(float(row[1]))
    grid = make_grid(len(vs))
    if not np.allclose(xs, grid.centers, rtol=0, atol=1e-12):
        raise ValueError(f"{path}: x column does not match a uniform cell-centered grid")
    return TorusField(grid, np.array(vs))
