import numpy as np
import pytest

from burgerlab import kernels
from burgerlab.forcing import ForcingSpec
from burgerlab.torus import make_grid

BACKENDS = kernels.backends()


def test_compiled_backend_present():
    assert "cython" in BACKENDS
    assert kernels.BACKEND == "cython"


def _args(spec, n):
    g = make_grid(n)
    if spec.steady:
        return g, spec.sample_steady(g), np.zeros(0, dtype=np.int64), np.zeros((0, n)), np.zeros((0, n))
    ks, bc, bs = spec.traveling_basis(g)
    return g, np.zeros(n), np.ascontiguousarray(ks, dtype=np.int64), np.ascontiguousarray(bc), \
        np.ascontiguousarray(bs)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
@pytest.mark.parametrize("omega", [0.0, 0.6])
def test_backends_agree(omega):
    spec = ForcingSpec.cosine_squared(1, omega)
    g, fs, ks, bc, bs = _args(spec, 256)
    rng = np.random.default_rng(7)
    u0 = rng.normal(size=g.n)
    out = {}
    for name, mod in BACKENDS.items():
        u = u0.copy()
        t, steps, work, umax = mod.advance(u, 0.0, 1.5, g.dx, 0.45, fs, ks, bc, bs, omega)
        out[name] = (u, t, steps, work, umax)
        assert np.allclose(mod.face_fluxes(u0), BACKENDS["numpy"].face_fluxes(u0), rtol=0, atol=1e-15)
    a, b = out["numpy"], out["cython"]
    assert a[1] == b[1] == 1.5 and a[2] == b[2]
    assert np.max(np.abs(a[0] - b[0])) < 1e-11
    assert abs(a[3] - b[3]) < 1e-11


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
def test_update_agrees_and_accepts_readonly():
    rng = np.random.default_rng(3)
    u, f = rng.normal(size=64), rng.normal(size=64)
    u.setflags(write=False)
    f.setflags(write=False)
    a = BACKENDS["numpy"].godunov_update(u, f, 0.3, 0.01)
    b = BACKENDS["cython"].godunov_update(u, f, 0.3, 0.01)
    assert np.allclose(a, b, rtol=0, atol=1e-15)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_fixed_step_cfl_violation(name):
    spec = ForcingSpec.cosine_squared(1)
    g, fs, ks, bc, bs = _args(spec, 64)
    u = np.full(g.n, 2.0)
    with pytest.raises(ValueError):
        BACKENDS[name].advance(u, 0.0, 1.0, g.dx, 0.45, fs, ks, bc, bs, 0.0, g.dx)
