"""Pure numpy Godunov kernels; used when the compiled extension is unavailable.

Arithmetic is ordered exactly as in ``_kernels.pyx`` so both backends agree to
rounding.
"""

from __future__ import annotations

import math

import numpy as np

SPEED_FLOOR = 1e-8


def face_fluxes(u: np.ndarray) -> np.ndarray:
    """Godunov flux at the right face of every cell, for g(u) = u^2 / 2."""
    a = np.maximum(u, 0.0)
    b = np.minimum(np.roll(u, -1), 0.0)
    return np.maximum(0.5 * a * a, 0.5 * b * b)


def godunov_update(u: np.ndarray, f: np.ndarray, lam: float, dt: float) -> np.ndarray:
    flux = face_fluxes(u)
    return (u - lam * (flux - np.roll(flux, 1))) + dt * f


def _forcing(f_static, ks, basis_c, basis_s, theta, out):
    out[:] = f_static
    for m in range(len(ks)):
        kt = ks[m] * theta
        out += basis_c[m] * math.cos(kt) + basis_s[m] * math.sin(kt)
    if len(ks):
        out -= np.sum(out) / len(out)
    return out


def advance(u, t, t_stop, dx, cfl, f_static, ks, basis_c, basis_s, omega,
            fixed_dt=0.0, max_steps=100_000_000):
    """Advance ``u`` in place from ``t`` to exactly ``t_stop``.

    Returns ``(t_stop, steps, work, umax_seen)`` where ``work`` accumulates the
    energy the source injects per step, ``dt <f, H> + dt^2 <f, f> / 2`` with
    ``H`` the transported state, so that the discrete energy (1/n) sum u^2
    rises by at most ``2 * work``.
    """
    n = u.shape[0]
    f = np.empty(n)
    work = 0.0
    steps = 0
    umax_seen = float(np.max(np.abs(u)))
    while t < t_stop:
        if steps >= max_steps:
            raise RuntimeError("step budget exhausted")
        umax = float(np.max(np.abs(u)))
        if umax > umax_seen:
            umax_seen = umax
        if fixed_dt > 0.0:
            dt = fixed_dt
            if dt * max(umax, SPEED_FLOOR) > cfl * dx * (1.0 + 1e-12):
                raise ValueError("fixed time step violates the CFL bound")
        else:
            dt = cfl * dx / max(umax, SPEED_FLOOR)
        last = t + dt >= t_stop
        if last:
            dt = t_stop - t
        _forcing(f_static, ks, basis_c, basis_s, omega * t, f)
        lam = dt / dx
        flux = face_fluxes(u)
        h = u - lam * (flux - np.roll(flux, 1))
        work += dt * (np.sum(f * h) / n) + 0.5 * dt * dt * (np.sum(f * f) / n)
        u[:] = h + dt * f
        steps += 1
        t = t_stop if last else t + dt
    return t, steps, work, umax_seen


BACKEND = "numpy"
