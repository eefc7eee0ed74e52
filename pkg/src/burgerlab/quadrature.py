"""Adaptive Simpson quadrature and bisection.

The integrands of the cell problem are square roots of the potential and are
only Lipschitz where the potential vanishes, so callers pass those points as
mandatory breakpoints. Panels are refined level by level over all intervals
at once, which keeps the Python overhead independent of the panel count.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

Integrand = Callable[[np.ndarray], np.ndarray]


class QuadratureError(RuntimeError):
    pass


class BracketError(RuntimeError):
    pass


def adaptive_simpson(fn: Integrand, a, b, tol: float = 1e-13,
                     max_depth: int = 48) -> np.ndarray:
    """Integrate ``fn`` over each interval ``[a_i, b_i]``.

    ``fn`` must accept arrays. A panel is accepted when the two-half Simpson
    estimate differs from the whole-panel estimate by at most ``15 * tol``;
    the accepted value carries the Richardson correction.
    """
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    a, b = np.broadcast_arrays(a, b)
    out = np.zeros(a.shape, dtype=np.float64)
    if a.size == 0:
        return out

    owner = np.arange(a.size)
    lo, hi = a.ravel().copy(), b.ravel().copy()
    mid = 0.5 * (lo + hi)
    flo, fmid, fhi = fn(lo), fn(mid), fn(hi)
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    flat = out.ravel()

    for _ in range(max_depth):
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm, frm = fn(lm), fn(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        err = left + right - whole
        done = np.abs(err) <= 15.0 * tol
        if np.any(done):
            np.add.at(flat, owner[done], (left + right + err / 15.0)[done])
        keep = ~done
        if not np.any(keep):
            return out
        owner = np.concatenate([owner[keep], owner[keep]])
        lo, mid, hi = (
            np.concatenate([lo[keep], mid[keep]]),
            np.concatenate([lm[keep], rm[keep]]),
            np.concatenate([mid[keep], hi[keep]]),
        )
        flo, fmid, fhi = (
            np.concatenate([flo[keep], fmid[keep]]),
            np.concatenate([flm[keep], frm[keep]]),
            np.concatenate([fmid[keep], fhi[keep]]),
        )
        whole = np.concatenate([left[keep], right[keep]])
    raise QuadratureError(
        f"adaptive Simpson did not reach tolerance {tol:g} within depth {max_depth}"
    )


def periodic_breaks(breaks, lo: float, hi: float, period: float) -> np.ndarray:
    """All translates of ``breaks`` by multiples of ``period`` inside (lo, hi)."""
    breaks = np.asarray(breaks, dtype=np.float64)
    if breaks.size == 0 or hi <= lo:
        return np.empty(0)
    kmin = int(np.floor((lo - breaks.max()) / period)) - 1
    kmax = int(np.ceil((hi - breaks.min()) / period)) + 1
    shifts = np.arange(kmin, kmax + 1) * period
    pts = (breaks[None, :] + shifts[:, None]).ravel()
    return np.unique(pts[(pts > lo) & (pts < hi)])


def cumulative(fn: Integrand, points, breaks=(), period: float | None = None,
               tol: float = 1e-13) -> np.ndarray:
    """Integral of ``fn`` from ``min(points)`` to each point.

    Elementary intervals run between consecutive sorted points and
    breakpoints, so no Simpson panel straddles a breakpoint.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        return points.copy()
    lo, hi = float(points.min()), float(points.max())
    brk = np.asarray(breaks, dtype=np.float64)
    if period is not None:
        brk = periodic_breaks(brk, lo, hi, period)
    else:
        brk = brk[(brk > lo) & (brk < hi)]
    nodes = np.unique(np.concatenate([points.ravel(), brk]))
    pieces = adaptive_simpson(fn, nodes[:-1], nodes[1:], tol=tol)
    acc = np.concatenate([[0.0], np.cumsum(pieces)])
    return acc[np.searchsorted(nodes, points)]


def integrate(fn: Integrand, a: float, b: float, breaks=(), period: float | None = None,
              tol: float = 1e-13) -> float:
    """Integral of ``fn`` over ``[a, b]`` split at the breakpoints."""
    if b == a:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    brk = np.asarray(breaks, dtype=np.float64)
    if period is not None:
        brk = periodic_breaks(brk, a, b, period)
    else:
        brk = brk[(brk > a) & (brk < b)]
    nodes = np.concatenate([[a], np.sort(brk), [b]])
    return sign * float(np.sum(adaptive_simpson(fn, nodes[:-1], nodes[1:], tol=tol)))


def bisect(fn: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12,
           max_iter: int = 200) -> float:
    """Root of a monotone scalar function on ``[lo, hi]`` to absolute ``tol``."""
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(
            f"no sign change on [{lo:.17g}, {hi:.17g}]: f = {flo:.3g}, {fhi:.3g}"
        )
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)
