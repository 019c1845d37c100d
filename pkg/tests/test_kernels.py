import numpy as np
import pytest

from bornsim import kernels

from conftest import random_model, random_state

pytestmark = pytest.mark.skipif(
    not kernels._HAVE_NUMBA, reason="numba unavailable; backend comparison impossible"
)


@pytest.fixture
def restore_backend():
    saved = kernels.get_backend()
    yield
    kernels.set_backend(saved)


def _run_trajectory(backend, model, psi0, scheme, dt, n_steps, seed):
    rng = np.random.default_rng(seed)
    n_lind = len(model.lindblads)
    d = model.dim
    uniforms = rng.random((n_steps, 2))
    normals = rng.standard_normal((n_steps, max(n_lind, 1)))
    psis = np.empty((1 + n_steps, d), dtype=np.complex128)
    jumped = np.zeros(n_steps, dtype=np.uint8)
    branches = np.full(n_steps, -1, dtype=np.int64)
    rates = np.zeros(n_steps, dtype=np.float64)
    a = np.ascontiguousarray(np.array(model.lindblads).reshape(n_lind, d, d))
    ad = np.ascontiguousarray(a.conj().transpose(0, 2, 1))
    kernels.set_backend(backend)
    fn = kernels.kernel("trajectory")
    fn(
        np.ascontiguousarray(model.H), a, ad,
        np.ascontiguousarray(psi0), dt, n_steps, model.hbar,
        kernels.BORN if scheme == "born" else kernels.QSD,
        uniforms, normals, 1, psis, jumped, branches, rates,
    )
    return psis, jumped, branches, rates


def test_born_trajectory_matches_across_backends(rng, restore_backend):
    # matrix products take different BLAS paths under numba, so the states
    # agree to round-off; the discrete jump decisions must agree exactly.
    model = random_model(rng, 4, 2)
    model.lindblads = [3.0 * a for a in model.lindblads]     # make jumps frequent
    psi0 = random_state(rng, 4)
    out_nb = _run_trajectory("numba", model, psi0, "born", 1e-3, 3000, 11)
    out_np = _run_trajectory("numpy", model, psi0, "born", 1e-3, 3000, 11)
    assert np.abs(out_nb[0] - out_np[0]).max() < 1e-12
    assert np.array_equal(out_nb[1], out_np[1])
    assert np.array_equal(out_nb[2], out_np[2])
    assert np.abs(out_nb[3] - out_np[3]).max() < 1e-12
    assert out_nb[1].sum() > 0      # the comparison actually exercised jumps


def test_qsd_trajectory_matches_across_backends(rng, restore_backend):
    # QSD uses eigh inside the step; LAPACK paths differ between the two
    # backends at the ulp level, so equality is asserted to tight tolerance
    # rather than bitwise.
    model = random_model(rng, 4, 2)
    psi0 = random_state(rng, 4)
    out_nb = _run_trajectory("numba", model, psi0, "qsd", 5e-4, 400, 12)
    out_np = _run_trajectory("numpy", model, psi0, "qsd", 5e-4, 400, 12)
    assert np.abs(out_nb[0] - out_np[0]).max() < 1e-10


def test_standard_map_bit_identical(restore_backend):
    rng = np.random.default_rng(0)
    theta0 = rng.uniform(0, 2 * np.pi, 256)
    p0 = rng.normal(0, 1, 256)
    kernels.set_backend("numba")
    t1, p1 = kernels.kernel("standard_map")(theta0.copy(), p0.copy(), 2.5, 100)
    kernels.set_backend("numpy")
    t2, p2 = kernels.kernel("standard_map")(theta0.copy(), p0.copy(), 2.5, 100)
    assert np.array_equal(t1, t2)
    assert np.array_equal(p1, p2)


def test_standard_map_inverse_round_trip(restore_backend):
    rng = np.random.default_rng(1)
    theta0 = rng.uniform(0, 2 * np.pi, 64)
    p0 = rng.normal(0, 0.5, 64)
    for backend in ("numba", "numpy"):
        kernels.set_backend(backend)
        t, p = kernels.kernel("standard_map")(theta0.copy(), p0.copy(), 1.7, 20)
        tb, pb = kernels.kernel("standard_map_back")(t, p, 1.7, 20)
        assert np.abs((tb - theta0 + np.pi) % (2 * np.pi) - np.pi).max() < 1e-9
        assert np.abs(pb - p0).max() < 1e-9


def test_langevin_chunk_bit_identical(restore_backend):
    rng = np.random.default_rng(2)
    x0 = rng.normal(size=512)
    p0 = rng.normal(size=512)
    noise = rng.standard_normal((200, 512))
    args = (1.0, 0.25, 0.5, 1e-3, 1, 1.0, 0.0, False)
    kernels.set_backend("numba")
    x1, p1 = kernels.kernel("langevin_chunk")(x0.copy(), p0.copy(), noise, *args)
    kernels.set_backend("numpy")
    x2, p2 = kernels.kernel("langevin_chunk")(x0.copy(), p0.copy(), noise, *args)
    assert np.array_equal(x1, x2)
    assert np.array_equal(p1, p2)


def test_tangent_stretch_bit_identical(restore_backend):
    kernels.set_backend("numba")
    s1 = kernels.kernel("tangent_stretch")(1.3, 0.2, 8.0, 500, 10)
    kernels.set_backend("numpy")
    s2 = kernels.kernel("tangent_stretch")(1.3, 0.2, 8.0, 500, 10)
    assert s1 == s2


def test_set_backend_validation(restore_backend):
    with pytest.raises(ValueError):
        kernels.set_backend("cython")
    kernels.set_backend("numpy")
    assert kernels.get_backend() == "numpy"
    kernels.set_backend("numba")
    assert kernels.get_backend() == "numba"
