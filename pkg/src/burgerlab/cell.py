"""Cell problem ``H(x, p + phi') = lambda`` for ``H(x, q) = q^2/2 - V(x)``.

Builds the effective Hamiltonian, the correctors phi and the stationary
entropy solutions ``ubar = p + phi' = eta sqrt(2 (V + lambda))``:

* ``|p| <= p_cr``: ``lambda = 0``; eta is +1 on ``(x0, xbar)`` and -1 on
  ``(xbar, x0 + 2pi)`` for a zero x0 of V; one solution per zero.
* ``|p| > p_cr``: ``lambda > 0`` solves ``|p| = <sqrt(2 (V + lambda))>``;
  eta = sign(p); the solution is smooth and unique.

Stationary profiles are stored as exact cell averages, correctors as point
values at the cell centers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .forcing import ForcingSpec, find_minima
from .quadrature import bisect, cumulative, integrate
from .torus import TWO_PI, TorusField, TorusGrid

QUAD_TOL = 1e-13
LAMBDA_TOL = 1e-12
XBAR_TOL = 1e-12
# momenta this close to p_cr are indistinguishable from it at quadrature precision
CRITICAL_RTOL = 1e-12


class CellProblemError(ValueError):
    pass


class Branch(str, Enum):
    SUBCRITICAL = "subcritical"
    SUPERCRITICAL = "supercritical"


def _sqrt_v(spec: ForcingSpec):
    return lambda x: np.sqrt(2.0 * spec.potential(x))


def _speed(spec: ForcingSpec, lam: float):
    return lambda x: np.sqrt(2.0 * (spec.potential(x) + lam))


def _zeros(spec: ForcingSpec) -> np.ndarray:
    return np.asarray(find_minima(spec))


def is_subcritical(p: float, p_cr: float) -> bool:
    return abs(p) <= p_cr * (1.0 + CRITICAL_RTOL)


def _require_steady(spec: ForcingSpec) -> None:
    if not spec.steady:
        raise CellProblemError("the cell problem needs a steady forcing (omega = 0)")


def critical_momentum(spec: ForcingSpec) -> float:
    """``p_cr = <sqrt(2 V)>``, split at the zeros of V."""
    _require_steady(spec)
    total = integrate(_sqrt_v(spec), 0.0, TWO_PI, breaks=_zeros(spec), period=TWO_PI,
                      tol=QUAD_TOL)
    return total / TWO_PI


def mean_speed(spec: ForcingSpec, lam: float) -> float:
    """``<sqrt(2 (V + lambda))>`` by split adaptive quadrature."""
    return integrate(_speed(spec, lam), 0.0, TWO_PI, breaks=_zeros(spec), period=TWO_PI,
                     tol=QUAD_TOL) / TWO_PI


def effective_hamiltonian(spec: ForcingSpec, p: float, p_cr: float | None = None) -> float:
    """``Hbar(p)``: zero on ``[-p_cr, p_cr]``, else the root of ``<sqrt(2 (V + lambda))> = |p|``."""
    _require_steady(spec)
    p_cr = critical_momentum(spec) if p_cr is None else p_cr
    ap = abs(p)
    if is_subcritical(p, p_cr):
        return 0.0
    lo = max(0.0, 0.5 * ap * ap - spec.max_potential)
    hi = 0.5 * ap * ap
    if hi - lo <= LAMBDA_TOL:  # flat potential: the bracket has collapsed
        return hi
    return bisect(lambda lam: mean_speed(spec, lam) - ap, lo, hi, tol=LAMBDA_TOL)


def solve_xbar(spec: ForcingSpec, p: float, x0: float, p_cr: float | None = None) -> float:
    """Jump point of the subcritical profile based at the zero ``x0``.

    Solves ``int_{x0}^{xbar} sqrt(2V) = A/2 + pi p`` with ``A`` the full-period
    integral, i.e. the equal-area condition that makes phi periodic.
    """
    _require_steady(spec)
    p_cr = critical_momentum(spec) if p_cr is None else p_cr
    if not is_subcritical(p, p_cr):
        raise CellProblemError(f"|p| = {abs(p):.6g} exceeds p_cr = {p_cr:.6g}: no jump point")
    sv = _sqrt_v(spec)
    zeros = _zeros(spec)
    total = TWO_PI * p_cr
    target = min(max(0.5 * total + math.pi * p, 0.0), total)
    if target >= total:
        return x0 + TWO_PI
    if target <= 0.0:
        return x0
    # bracket on a coarse partition, then bisect inside one piece
    pts = np.linspace(x0, x0 + TWO_PI, 257)
    acc = cumulative(sv, pts, breaks=zeros, period=TWO_PI, tol=QUAD_TOL)
    i = int(np.searchsorted(acc, target, side="left"))
    i = min(max(i, 1), len(pts) - 1)
    a, base = pts[i - 1], acc[i - 1]

    def residual(xb: float) -> float:
        return base + integrate(sv, a, xb, breaks=zeros, period=TWO_PI, tol=QUAD_TOL) - target

    return bisect(residual, a, pts[i], tol=XBAR_TOL)


def _first_level_crossing(spec: ForcingSpec, level: float) -> float:
    """Smallest x in [0, 2pi) with ``V(x) = level``."""
    xs = np.linspace(0.0, TWO_PI, 4097)
    g = spec.potential(xs) - level
    if abs(g[0]) <= 1e-15:
        return 0.0
    idx = np.nonzero(np.sign(g[1:]) != np.sign(g[:-1]))[0]
    if idx.size == 0:
        j = int(np.argmin(np.abs(g)))
        return float(xs[j] % TWO_PI)
    j = int(idx[0])
    if g[j + 1] == 0.0:
        return float(xs[j + 1] % TWO_PI)
    return bisect(lambda x: float(spec.potential(x)) - level, xs[j], xs[j + 1],
                  tol=1e-14) % TWO_PI


@dataclass(frozen=True)
class CellSolution:
    """One stationary branch of the cell problem.

    ``x0`` is the base zero of V (subcritical) or the point where
    ``sqrt(2 (V + lambda)) = |p|`` (supercritical); ``phi(x0) = 0``.
    """

    spec: ForcingSpec = field(repr=False)
    p: float
    lam: float
    branch: Branch
    x0: float
    xbar: float | None
    phi: TorusField = field(repr=False)
    ubar: TorusField = field(repr=False)

    @property
    def sign(self) -> float:
        return 1.0 if self.p >= 0 else -1.0

    @property
    def grid(self) -> TorusGrid:
        return self.ubar.grid

    def eta(self, x, side: float = 0.0) -> np.ndarray:
        """Sign pattern; at ``xbar`` use ``side`` < 0 / > 0 for the left / right limit."""
        x = np.asarray(x, dtype=np.float64)
        if self.branch is Branch.SUPERCRITICAL:
            return np.full(x.shape, self.sign)
        y = np.mod(x - self.x0, TWO_PI)
        ybar = self.xbar - self.x0
        inside = (y < ybar) | ((y == ybar) & (side < 0))
        if ybar >= TWO_PI:
            inside = np.ones(x.shape, dtype=bool)
        return np.where(inside, 1.0, -1.0)

    def velocity(self, x, side: float = 0.0) -> np.ndarray:
        """Pointwise ``ubar(x) = eta(x) sqrt(2 (V(x) + lambda))``."""
        return self.eta(x, side) * _speed(self.spec, self.lam)(x)

    def corrector(self, x) -> np.ndarray:
        """phi at arbitrary points, by quadrature of ``eta sqrt(2 (V + lambda)) - p``."""
        return _corrector_values(self.spec, self.p, self.lam, self.branch, self.x0,
                                 self.xbar, np.asarray(x, dtype=np.float64))

    def hamiltonian_residual(self, x, dphi) -> np.ndarray:
        """``(p + phi')^2 / 2 - V - lambda`` for a supplied derivative of phi."""
        q = self.p + np.asarray(dphi)
        return 0.5 * q * q - self.spec.potential(x) - self.lam


def _corrector_values(spec, p, lam, branch, x0, xbar, x) -> np.ndarray:
    speed = _speed(spec, lam)
    zeros = _zeros(spec)
    y = np.mod(x - x0, TWO_PI)
    shape = y.shape
    y = y.ravel()
    # G(y) = int_{x0}^{x0+y} sqrt(2 (V + lambda)) for all requested y and the full period
    pts = np.concatenate([[x0, x0 + TWO_PI], x0 + y])
    if branch is Branch.SUBCRITICAL:
        pts = np.append(pts, xbar)
    acc = cumulative(speed, pts, breaks=zeros, period=TWO_PI, tol=QUAD_TOL)
    total = acc[1] - acc[0]
    g = acc[2:2 + y.size] - acc[0]
    if branch is Branch.SUPERCRITICAL:
        sgn = 1.0 if p >= 0 else -1.0
        return (sgn * g - p * y).reshape(shape)
    ybar = xbar - x0
    left = g - p * y
    right = (total - g) + p * (TWO_PI - y)
    return np.where(y <= ybar, left, right).reshape(shape)


def _cell_averages(spec, lam, eta_fn, grid: TorusGrid, cuts) -> np.ndarray:
    """Exact cell averages of ``eta sqrt(2 (V + lambda))``, cells split at ``cuts``."""
    speed = _speed(spec, lam)
    zeros = _zeros(spec)
    faces = np.append(grid.faces, TWO_PI)
    cuts = np.mod(np.asarray(cuts, dtype=np.float64), TWO_PI)
    nodes = np.unique(np.concatenate([faces, cuts]))
    # elementary pieces are further split at the zeros of V
    acc = cumulative(speed, nodes, breaks=zeros, period=TWO_PI, tol=QUAD_TOL)
    piece_int = np.diff(acc)
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    signed = piece_int * eta_fn(mids)
    cell = np.searchsorted(faces, mids, side="right") - 1
    sums = np.bincount(cell, weights=signed, minlength=grid.n)[: grid.n]
    return sums / grid.dx


def build_corrector(spec: ForcingSpec, p: float, x0: float | None, grid: TorusGrid,
                    p_cr: float | None = None) -> CellSolution:
    """Corrector and stationary profile for momentum ``p``.

    ``|p| <= p_cr`` (the critical value included) takes the subcritical
    branch based at ``x0`` (default: the smallest zero of V); otherwise the
    supercritical branch starting at the smallest x with
    ``sqrt(2 (V(x) + lambda)) = |p|``, for which ``x0`` is ignored.
    """
    _require_steady(spec)
    p = float(p)
    p_cr = critical_momentum(spec) if p_cr is None else p_cr
    if is_subcritical(p, p_cr):
        zeros = find_minima(spec)
        if x0 is None:
            x0 = zeros[0]
        elif min(abs(math.remainder(x0 - z, TWO_PI)) for z in zeros) > 1e-8:
            raise CellProblemError(f"x0 = {x0:.6g} is not a zero of V")
        x0 = float(x0)
        xbar = solve_xbar(spec, p, x0, p_cr=p_cr)
        lam, branch = 0.0, Branch.SUBCRITICAL
    else:
        lam = effective_hamiltonian(spec, p, p_cr=p_cr)
        x0 = _first_level_crossing(spec, 0.5 * p * p - lam)
        xbar, branch = None, Branch.SUPERCRITICAL

    phi_vals = _corrector_values(spec, p, lam, branch, x0, xbar, grid.centers)
    if branch is Branch.SUBCRITICAL:
        ybar = xbar - x0

        def eta_fn(x):
            y = np.mod(x - x0, TWO_PI)
            return np.where((y < ybar) | (ybar >= TWO_PI), 1.0, -1.0)

        cuts = [x0, xbar]
    else:
        sgn = 1.0 if p >= 0 else -1.0

        def eta_fn(x):
            return np.full(np.shape(x), sgn)

        cuts = []
    ubar_vals = _cell_averages(spec, lam, eta_fn, grid, cuts)
    return CellSolution(spec, p, lam, branch, x0, xbar,
                        TorusField(grid, phi_vals), TorusField(grid, ubar_vals))


def build_stationary(spec: ForcingSpec, p: float, x0: float | None, grid: TorusGrid,
                     p_cr: float | None = None) -> CellSolution:
    """Same as ``build_corrector``; ``ubar`` holds cell averages of the closed form
    ``eta sqrt(2 (V + lambda))``, never differences of phi."""
    return build_corrector(spec, p, x0, grid, p_cr=p_cr)


def enumerate_stationary(spec: ForcingSpec, p: float, grid: TorusGrid) -> list[CellSolution]:
    """One solution per zero of V below the critical momentum, a single one above."""
    p_cr = critical_momentum(spec)
    if abs(p) < p_cr:
        return [build_corrector(spec, p, z, grid, p_cr=p_cr) for z in find_minima(spec)]
    return [build_corrector(spec, p, None, grid, p_cr=p_cr)]


@dataclass(frozen=True)
class WaveSolutionSpec:
    """Affine-data wave ``alpha + p |x| - t Hbar(p)``."""

    alpha: float
    p: float
    hbar_p: float

    @classmethod
    def for_forcing(cls, spec: ForcingSpec, alpha: float, p: float) -> WaveSolutionSpec:
        return cls(alpha, p, effective_hamiltonian(spec, p))

    def __call__(self, t: float, x) -> np.ndarray:
        # |x| on [-pi, pi), extended periodically
        xr = np.mod(np.asarray(x, dtype=np.float64) + math.pi, TWO_PI) - math.pi
        return self.alpha + self.p * np.abs(xr) - t * self.hbar_p


# -- jump detection ---------------------------------------------------------

JUMP_FACTOR = 5.0
_WINDOW = 8


@dataclass(frozen=True)
class Jump:
    location: float
    size: float


@dataclass(frozen=True)
class JumpReport:
    jumps: list[Jump]
    admissible: bool


def _trace(values: np.ndarray, cells: np.ndarray, dx: float, x: float) -> float:
    """Point value at ``x`` from a cubic through the primitive at the faces of ``cells``.

    ``cells`` are consecutive unwrapped indices; third-order accurate.
    """
    faces = np.append(cells, cells[-1] + 1) * dx
    prim = np.concatenate([[0.0], np.cumsum(values[np.mod(cells, len(values))] * dx)])
    coef = np.polyfit(faces - x, prim, 3)
    return float(coef[2])


def detect_jumps(field: TorusField, factor: float = JUMP_FACTOR) -> list[Jump]:
    """Discrete jumps of a cell-averaged field.

    An increment is flagged when it exceeds ``factor`` times the median
    increment in a window around it (the flagged face and its immediate
    neighbours excluded). Adjacent flagged faces are merged; sizes come from
    one-sided third-order traces, so a jump smeared over one cell is still
    measured accurately.
    """
    v = field.values
    n = len(v)
    dx = field.grid.dx
    d = np.roll(v, -1) - v  # d[j] sits at the right face of cell j
    ad = np.abs(d)
    offsets = [o for o in range(-_WINDOW, _WINDOW + 1) if abs(o) > 2]
    local = np.median(np.stack([np.roll(ad, -o) for o in offsets]), axis=0)
    floor = 1e-8 * max(1.0, float(np.max(np.abs(v))))
    flagged = (ad > factor * local) & (ad > floor)
    if not flagged.any():
        return []
    if flagged.all():
        return []
    # start scanning right after an unflagged face so runs do not wrap
    start = int(np.nonzero(~flagged)[0][-1]) + 1
    jumps = []
    j = start
    end = start + n
    while j < end:
        if not flagged[j % n]:
            j += 1
            continue
        a = j
        while j + 1 < end and flagged[(j + 1) % n]:
            j += 1
        b = j
        # cells a..: left clean cell is a, mixed cells a+1..b, right clean cell b+1
        mixed = list(range(a + 1, b + 1))
        if len(mixed) == 0:
            loc = (a + 1) * dx
        else:
            left_guess = _trace(v, np.arange(a - 2, a + 1), dx, (a + 1) * dx)
            right_guess = _trace(v, np.arange(b + 1, b + 4), dx, (b + 1) * dx)
            share = sum(v[c % n] for c in mixed) * dx
            # location where left_guess * (loc - x_l) + right_guess * (x_r - loc) = share
            span = (b + 1 - (a + 1)) * dx
            if abs(left_guess - right_guess) > 0:
                theta = (share - right_guess * span) / ((left_guess - right_guess))
                loc = (a + 1) * dx + min(max(theta, 0.0), span)
            else:
                loc = (a + 1) * dx + 0.5 * span
        ul = _trace(v, np.arange(a - 2, a + 1), dx, loc)
        ur = _trace(v, np.arange(b + 1, b + 4), dx, loc)
        jumps.append(Jump(float(loc % TWO_PI), ur - ul))
        j += 1
    return sorted(jumps, key=lambda jmp: jmp.location)


def check_entropy_jumps(sol: CellSolution | TorusField, spec: ForcingSpec | None = None,
                        lam: float = 0.0) -> JumpReport:
    """Detected jumps of ``ubar`` and whether they satisfy the entropy condition.

    A negative jump (u decreasing across it) is admissible. A positive jump is
    admissible only at a point where ``V + lambda <= 1e-10``, i.e. where the two
    branches of eta meet continuously and the detected step is spurious.
    """
    if isinstance(sol, CellSolution):
        field_, spec, lam = sol.ubar, sol.spec, sol.lam
    else:
        field_ = sol
    jumps = detect_jumps(field_)
    ok = True
    for jmp in jumps:
        if jmp.size < 0:
            continue
        if spec is None or float(spec.potential(jmp.location)) + lam > 1e-10:
            ok = False
    return JumpReport(jumps, ok)


def wave_convergence(u_traj, sol: CellSolution) -> np.ndarray:
    """``d(t) = min_c max_j |U(t) + lambda t - phi - c|`` for a potential trajectory.

    ``u_traj`` holds U at the right faces (see ``solver.reconstruct_potential``),
    so phi is evaluated there by quadrature.
    """
    grid = sol.grid
    if u_traj.fields[0].grid != grid:
        raise CellProblemError("potential trajectory and cell solution live on different grids")
    if abs(u_traj.p - sol.p) > 1e-12:
        raise CellProblemError(f"momentum mismatch: {u_traj.p} vs {sol.p}")
    phi_faces = sol.corrector(grid.faces + grid.dx)
    out = np.empty(len(u_traj.times))
    for i, (t, fld) in enumerate(zip(u_traj.times, u_traj.fields)):
        diff = fld.values + sol.lam * t - phi_faces
        out[i] = 0.5 * (float(np.max(diff)) - float(np.min(diff)))
    return out


def stationary_residual(sol: CellSolution, x=None, h: float | None = None) -> float:
    """``max |(p + phi')^2 / 2 - V - lambda|`` with phi' from five-point differences.

    phi is evaluated by quadrature (``corrector``), not from the stored
    samples. Stencils never straddle ``xbar`` or a zero of V: near those
    points they become one-sided, and a point sitting exactly on one is
    skipped. ``h`` defaults to ``dx / 8``.
    """
    grid = sol.grid
    x = grid.centers if x is None else np.asarray(x, dtype=np.float64)
    h = grid.dx / 8 if h is None else h
    if sol.branch is Branch.SUBCRITICAL:
        sing = np.append(_zeros(sol.spec), sol.xbar % TWO_PI)
    else:
        sing = np.zeros(0)
    # signed offset from x to the nearest singular point
    if sing.size:
        off = np.remainder(sing[None, :] - x[:, None] + math.pi, TWO_PI) - math.pi
        nearest = off[np.arange(len(x)), np.argmin(np.abs(off), axis=1)]
    else:
        nearest = np.full(len(x), np.inf)
    keep = np.abs(nearest) > 1e-3 * h
    x, nearest = x[keep], nearest[keep]
    central = np.abs(nearest) > 2 * h
    forward = ~central & (nearest < 0)   # singular point on the left: look right
    steps = np.arange(-2, 5)
    vals = sol.corrector(x[:, None] + steps[None, :] * h)
    f = {s: vals[:, i] for i, s in enumerate(steps)}
    d_central = (f[-2] - 8 * f[-1] + 8 * f[1] - f[2]) / (12 * h)
    d_forward = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    back = sol.corrector(x[:, None] - np.arange(0, 5)[None, :] * h)
    d_backward = (25 * back[:, 0] - 48 * back[:, 1] + 36 * back[:, 2] - 16 * back[:, 3]
                  + 3 * back[:, 4]) / (12 * h)
    dphi = np.where(central, d_central, np.where(forward, d_forward, d_backward))
    return float(np.max(np.abs(sol.hamiltonian_residual(x, dphi))))
