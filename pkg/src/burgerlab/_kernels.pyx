# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Godunov kernels. Mirrors ``_kernels_py`` operation for operation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, fabs

cnp.import_array()

SPEED_FLOOR = 1e-8
BACKEND = "cython"


cdef inline double _flux(double ul, double ur) noexcept nogil:
    cdef double a = ul if ul > 0.0 else 0.0
    cdef double b = ur if ur < 0.0 else 0.0
    cdef double ga = 0.5 * a * a
    cdef double gb = 0.5 * b * b
    return ga if ga > gb else gb


cdef void _fluxes(const double[::1] u, double[::1] flux) noexcept nogil:
    cdef Py_ssize_t n = u.shape[0], j
    for j in range(n - 1):
        flux[j] = _flux(u[j], u[j + 1])
    flux[n - 1] = _flux(u[n - 1], u[0])


def face_fluxes(const double[::1] u):
    out = np.empty(u.shape[0])
    cdef double[::1] flux = out
    _fluxes(u, flux)
    return out


def godunov_update(const double[::1] u, const double[::1] f, double lam, double dt):
    cdef Py_ssize_t n = u.shape[0], j
    out = np.empty(n)
    cdef double[::1] res = out
    cdef double[::1] flux = np.empty(n)
    _fluxes(u, flux)
    res[0] = (u[0] - lam * (flux[0] - flux[n - 1])) + dt * f[0]
    for j in range(1, n):
        res[j] = (u[j] - lam * (flux[j] - flux[j - 1])) + dt * f[j]
    return out


def advance(double[::1] u, double t, double t_stop, double dx, double cfl,
            double[::1] f_static, long[::1] ks, double[:, ::1] basis_c,
            double[:, ::1] basis_s, double omega, double fixed_dt=0.0,
            long max_steps=100_000_000):
    cdef Py_ssize_t n = u.shape[0], j, m
    cdef Py_ssize_t nm = ks.shape[0]
    cdef double[::1] f = np.empty(n)
    cdef double[::1] flux = np.empty(n)
    cdef double[::1] h = np.empty(n)
    cdef double work = 0.0, umax, umax_seen = 0.0, dt, lam, kt, ck, sk, s, sfh, sff
    cdef long steps = 0
    cdef bint last
    for j in range(n):
        if fabs(u[j]) > umax_seen:
            umax_seen = fabs(u[j])
    while t < t_stop:
        if steps >= max_steps:
            raise RuntimeError("step budget exhausted")
        umax = 0.0
        for j in range(n):
            if fabs(u[j]) > umax:
                umax = fabs(u[j])
        if umax > umax_seen:
            umax_seen = umax
        if fixed_dt > 0.0:
            dt = fixed_dt
            if dt * (umax if umax > SPEED_FLOOR else SPEED_FLOOR) > cfl * dx * (1.0 + 1e-12):
                raise ValueError("fixed time step violates the CFL bound")
        else:
            dt = cfl * dx / (umax if umax > SPEED_FLOOR else SPEED_FLOOR)
        last = t + dt >= t_stop
        if last:
            dt = t_stop - t
        for j in range(n):
            f[j] = f_static[j]
        if nm > 0:
            for m in range(nm):
                kt = ks[m] * (omega * t)
                ck = cos(kt)
                sk = sin(kt)
                for j in range(n):
                    f[j] += basis_c[m, j] * ck + basis_s[m, j] * sk
            s = 0.0
            for j in range(n):
                s += f[j]
            s = s / n
            for j in range(n):
                f[j] -= s
        lam = dt / dx
        _fluxes(u, flux)
        h[0] = u[0] - lam * (flux[0] - flux[n - 1])
        for j in range(1, n):
            h[j] = u[j] - lam * (flux[j] - flux[j - 1])
        sfh = 0.0
        sff = 0.0
        for j in range(n):
            sfh += f[j] * h[j]
            sff += f[j] * f[j]
            u[j] = h[j] + dt * f[j]
        work += dt * (sfh / n) + 0.5 * dt * dt * (sff / n)
        steps += 1
        if last:
            t = t_stop
        else:
            t = t + dt
    return t, steps, work, umax_seen
