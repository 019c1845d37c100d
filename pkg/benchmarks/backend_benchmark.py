"""Compare the numba and numpy kernel backends on the three hot loops.

Usage:  python3 benchmarks/backend_benchmark.py [--repeats N]

Each kernel runs on identical pre-drawn random inputs on both backends; the
report shows wall time per backend, the speedup, and the maximum deviation
between the two results (zero for the pure-array kernels, round-off level for
the trajectory kernel).
"""

import argparse
import time

import numpy as np

from bornsim import kernels
from bornsim.lindblad import LindbladModel


def _timeit(fn, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_trajectory(repeats):
    rng = np.random.default_rng(0)
    d, n_lind, n_steps = 16, 2, 2000
    h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    model = LindbladModel(H=0.5 * (h + h.conj().T) / np.sqrt(d),
                          lindblads=[(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
                                     / np.sqrt(2.0 * d) for _ in range(n_lind)])
    psi0 = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi0 /= np.linalg.norm(psi0)
    uniforms = rng.random((n_steps, 2))
    normals = rng.standard_normal((n_steps, n_lind))
    a = np.ascontiguousarray(np.array(model.lindblads))
    ad = np.ascontiguousarray(a.conj().transpose(0, 2, 1))

    def run():
        psis = np.empty((1 + n_steps, d), dtype=np.complex128)
        jumped = np.zeros(n_steps, dtype=np.uint8)
        branches = np.full(n_steps, -1, dtype=np.int64)
        rates = np.zeros(n_steps, dtype=np.float64)
        kernels.kernel("trajectory")(
            np.ascontiguousarray(model.H), a, ad, np.ascontiguousarray(psi0),
            1e-3, n_steps, 1.0, kernels.BORN, uniforms, normals, 1,
            psis, jumped, branches, rates,
        )
        return psis

    return _compare("trajectory (d=16, 2000 steps)", run, repeats)


def bench_standard_map(repeats):
    rng = np.random.default_rng(1)
    theta0 = rng.uniform(0, 2 * np.pi, 100_000)
    p0 = rng.normal(0, 1, 100_000)

    def run():
        return kernels.kernel("standard_map")(theta0.copy(), p0.copy(), 10.0, 200)[1]

    return _compare("standard map (1e5 pts, 200 steps)", run, repeats)


def bench_langevin(repeats):
    rng = np.random.default_rng(2)
    x0 = rng.normal(size=50_000)
    p0 = rng.normal(size=50_000)
    noise = rng.standard_normal((500, 50_000))

    def run():
        return kernels.kernel("langevin_chunk")(
            x0.copy(), p0.copy(), noise, 1.0, 0.25, 1.0, 1e-3, 0, 0.0, 0.0, False
        )[1]

    return _compare("langevin (5e4 samples, 500 steps)", run, repeats)


def _compare(label, run, repeats):
    kernels.set_backend("numba")
    run()                                   # JIT warm-up outside the timing
    t_nb, out_nb = _timeit(run, repeats)
    kernels.set_backend("numpy")
    t_np, out_np = _timeit(run, repeats)
    dev = float(np.abs(np.asarray(out_nb) - np.asarray(out_np)).max())
    print(f"{label:44s}  numba {t_nb*1e3:9.2f} ms   numpy {t_np*1e3:9.2f} ms   "
          f"speedup {t_np / t_nb:6.1f}x   max dev {dev:.2e}")
    return t_nb, t_np


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    if not kernels._HAVE_NUMBA:
        raise SystemExit("numba backend unavailable (SIM_NO_NUMBA set or numba missing)")
    print(f"backends: numba vs numpy, best of {args.repeats} runs\n")
    bench_trajectory(args.repeats)
    bench_standard_map(args.repeats)
    bench_langevin(args.repeats)


if __name__ == "__main__":
    main()
