"""Hot inner loops: single-trajectory stochastic stepping, the classical
standard map, and Langevin ensemble updates.

Every kernel exists in two forms compiled from the same source: a plain-numpy
implementation and a numba ``@njit`` clone.  Set the environment variable
``SIM_NO_NUMBA=1`` (or call :func:`set_backend`) to force the numpy path.
Randomness is always pre-generated by the caller, so the discrete decisions
(jump firing, branch choice) agree between backends for the same inputs.  The
pure-array kernels (standard map, tangent stretch, Langevin) are bit-identical;
the trajectory kernel differs at round-off level because matrix products and
eigendecompositions take different BLAS/LAPACK paths under numba.
"""

from __future__ import annotations

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("SIM_NO_NUMBA", "0") == "1"
_HAVE_NUMBA = False
if not _FORCE_NUMPY:
    try:
        from numba import njit as _njit

        _HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass

BORN = 0
QSD = 1

_backend = "numba" if _HAVE_NUMBA else "numpy"


def set_backend(name: str):
    """Select 'numba' or 'numpy' at runtime (mainly for benchmarks/tests)."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError("backend must be 'numba' or 'numpy'")
    if name == "numba" and not _HAVE_NUMBA:
        raise RuntimeError("numba backend unavailable (SIM_NO_NUMBA set or numba missing)")
    _backend = name


def get_backend() -> str:
    return _backend


def _cdot(a, b):
    """<a|b> for 1-D complex arrays (numba-safe)."""
    return np.sum(np.conj(a) * b)


def _trajectory_impl(
    h,          # (d, d) complex Hamiltonian
    a_ops,      # (n, d, d) complex Lindblad operators
    ad_ops,     # (n, d, d) their adjoints
    psi0,       # (d,) complex, normalized
    dt,
    n_steps,
    hbar,
    scheme,     # BORN or QSD
    uniforms,   # (n_steps, 2) pre-drawn uniforms (jump test, branch pick)
    normals,    # (n_steps, n) pre-drawn standard normals (QSD noise)
    record_every,
    psis_out,   # (n_rec, d) complex, filled with state snapshots (t=0 first)
    jumped_out,     # (n_steps,) uint8
    branch_out,     # (n_steps,) int64, -1 when no jump
    rate_out,       # (n_steps,) float64, total branch rate at step start
):
    n_lind = a_ops.shape[0]
    psi = psi0.copy()
    psis_out[0] = psi
    rec = 1
    sqrt_dt = np.sqrt(dt)
    for step in range(n_steps):
        # branch images v_j = (A_j - <A_j>) psi and the deterministic drift
        hpsi = h @ psi
        drift = (-1j / hbar) * hpsi
        r_tot = 0.0
        v = np.empty((n_lind, psi.shape[0]), dtype=np.complex128)
        for j in range(n_lind):
            apsi = a_ops[j] @ psi
            a_mean = _cdot(psi, apsi)
            vj = apsi - a_mean * psi
            wj = ad_ops[j] @ psi - np.conj(a_mean) * psi
            v[j] = vj
            r_tot += _cdot(vj, vj).real
            # (i hbar / 2)(<A~^+> J - <A~> J^+ - J^+ J) psi contracted over the
            # fixing unitary; the rotation drops out of the sum
            drift += 0.5 * (
                np.conj(a_mean) * vj - a_mean * wj - (ad_ops[j] @ vj - np.conj(a_mean) * vj)
            )
        rate_out[step] = r_tot
        jumped_out[step] = 0
        branch_out[step] = -1
        if scheme == BORN and uniforms[step, 0] < r_tot * dt:
            # jump: diagonalize the branch Gram matrix and pick a destination
            g = np.empty((n_lind, n_lind), dtype=np.complex128)
            for i in range(n_lind):
                for j in range(n_lind):
                    g[i, j] = _cdot(v[i], v[j])
            rates, w = np.linalg.eigh(g)
            u2 = uniforms[step, 1] * r_tot
            chosen = -1
            cum = 0.0
            for i in range(n_lind - 1, -1, -1):   # descending rate order
                ri = rates[i]
                if ri < 0.0:
                    ri = 0.0
                cum += ri
                if u2 <= cum:
                    chosen = i
                    break
            if chosen < 0:
                chosen = 0
            new_psi = np.zeros_like(psi)
            for j in range(n_lind):
                new_psi += w[j, chosen] * v[j]
            nrm = np.sqrt(_cdot(new_psi, new_psi).real)
            if nrm > 0.0:
                psi = new_psi / nrm
                jumped_out[step] = 1
                # branch index counted from the largest rate downwards
                branch_out[step] = n_lind - 1 - chosen
        else:
            if scheme == BORN:
                # Heun step of the norm-preserving deterministic flow
                d1 = drift + 0.5 * r_tot * psi
                pred = psi + dt * d1
                pred = pred / np.sqrt(_cdot(pred, pred).real)
                hp = h @ pred
                d2 = (-1j / hbar) * hp
                r2 = 0.0
                for j in range(n_lind):
                    apsi = a_ops[j] @ pred
                    a_mean = _cdot(pred, apsi)
                    vj = apsi - a_mean * pred
                    wj = ad_ops[j] @ pred - np.conj(a_mean) * pred
                    r2 += _cdot(vj, vj).real
                    d2 += 0.5 * (
                        np.conj(a_mean) * vj
                        - a_mean * wj
                        - (ad_ops[j] @ vj - np.conj(a_mean) * vj)
                    )
                d2 = d2 + 0.5 * r2 * pred
                psi = psi + 0.5 * dt * (d1 + d2)
            else:
                # Euler-Maruyama with noise along the orthogonalized images
                psi = psi + dt * drift
                if n_lind > 0:
                    g = np.empty((n_lind, n_lind), dtype=np.complex128)
                    for i in range(n_lind):
                        for j in range(n_lind):
                            g[i, j] = _cdot(v[i], v[j])
                    rates, w = np.linalg.eigh(g)
                    for i in range(n_lind):
                        dw = normals[step, i] * sqrt_dt
                        for j in range(n_lind):
                            psi += dw * w[j, i] * v[j]
            psi = psi / np.sqrt(_cdot(psi, psi).real)
        if (step + 1) % record_every == 0:
            psis_out[rec] = psi
            rec += 1
    return rec


def _standard_map_impl(theta, p, k_eff, n_steps):
    """Chirikov standard map, iterated in place: p' = p + K sin(theta),
    theta' = theta + p' (mod 2 pi)."""
    two_pi = 2.0 * np.pi
    for _ in range(n_steps):
        p += k_eff * np.sin(theta)
        theta += p
        theta %= two_pi
    return theta, p


def _standard_map_back_impl(theta, p, k_eff, n_steps):
    two_pi = 2.0 * np.pi
    for _ in range(n_steps):
        theta -= p
        theta %= two_pi
        p -= k_eff * np.sin(theta)
    return theta, p


def _tangent_stretch_impl(theta0, p0, k_eff, n_steps, renorm_every):
    """Accumulated log of tangent-vector growth along one standard-map orbit."""
    theta = theta0
    p = p0
    dtheta = 1.0
    dp = 0.0
    log_sum = 0.0
    for step in range(n_steps):
        c = k_eff * np.cos(theta)
        p += k_eff * np.sin(theta)
        theta = (theta + p) % (2.0 * np.pi)
        dp_new = dp + c * dtheta
        dtheta_new = dtheta + dp_new
        dtheta = dtheta_new
        dp = dp_new
        if (step + 1) % renorm_every == 0:
            nrm = np.sqrt(dtheta * dtheta + dp * dp)
            log_sum += np.log(nrm)
            dtheta /= nrm
            dp /= nrm
    nrm = np.sqrt(dtheta * dtheta + dp * dp)
    if nrm > 0.0:
        log_sum += np.log(nrm)
    return log_sum


def _langevin_chunk_impl(x, p, noise, m, gamma, kt, dt, pot_code, pot_a, pot_b, leapfrog):
    """Advance a Langevin ensemble by noise.shape[0] Euler-Maruyama steps.

    ``noise`` holds pre-drawn standard normals, shape (chunk_steps, n_samples).
    With ``leapfrog`` the deterministic drift uses a kick-drift-kick split
    (exact energy behaviour in the conservative limit).
    """
    amp = np.sqrt(4.0 * gamma * m * kt * dt)
    n_steps = noise.shape[0]
    for s in range(n_steps):
        if leapfrog:
            p += -0.5 * dt * _grad(pot_code, pot_a, pot_b, x)
            x += dt * p / m
            p += -0.5 * dt * _grad(pot_code, pot_a, pot_b, x)
            p += -2.0 * gamma * p * dt + amp * noise[s]
        else:
            xdot = p / m
            pdot = -_grad(pot_code, pot_a, pot_b, x) - 2.0 * gamma * p
            x += dt * xdot
            p += dt * pdot + amp * noise[s]
    return x, p


def _grad_impl(pot_code, pot_a, pot_b, x):
    if pot_code == 0:      # free
        return np.zeros_like(x)
    if pot_code == 1:      # harmonic: a = m * omega^2
        return pot_a * x
    if pot_code == 2:      # double well: a (x^2 - b^2)^2
        return 4.0 * pot_a * x * (x * x - pot_b * pot_b)
    return -pot_a * pot_b * np.sin(pot_b * x)    # cosine: a cos(b x)


# numpy-path aliases
_grad = _grad_impl
_numpy_impls = {
    "trajectory": _trajectory_impl,
    "standard_map": _standard_map_impl,
    "standard_map_back": _standard_map_back_impl,
    "tangent_stretch": _tangent_stretch_impl,
    "langevin_chunk": _langevin_chunk_impl,
}

_numba_impls = {}
if _HAVE_NUMBA:
    _grad_jit = _njit(cache=True)(_grad_impl)
    _cdot_jit = _njit(cache=True)(_cdot)

    def _compile(fn, globals_override):
        import types

        g = dict(fn.__globals__)
        g.update(globals_override)
        clone = types.FunctionType(fn.__code__, g, fn.__name__, fn.__defaults__)
        return _njit(cache=True, nogil=True)(clone)

    _numba_impls = {
        "trajectory": _compile(_trajectory_impl, {"_cdot": _cdot_jit}),
        "standard_map": _njit(cache=True, nogil=True)(_standard_map_impl),
        "standard_map_back": _njit(cache=True, nogil=True)(_standard_map_back_impl),
        "tangent_stretch": _njit(cache=True, nogil=True)(_tangent_stretch_impl),
        "langevin_chunk": _compile(_langevin_chunk_impl, {"_grad": _grad_jit}),
    }


def kernel(name):
    """Resolve a kernel by name on the active backend."""
    if _backend == "numba":
        return _numba_impls[name]
    return _numpy_impls[name]
