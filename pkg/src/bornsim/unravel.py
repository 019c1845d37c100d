"""Continuum-limit conditioned dynamics: state-dependent branch operators,
effective Hamiltonian, piecewise-deterministic jump trajectories, quantum
state diffusion, and ensemble averaging.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .hilbert import dag, expectation, normalize, projector
from .lindblad import LindbladModel, StepSizeWarning, liouvillian_apply

RATE_REL_FLOOR = 1e-12
RATE_ABS_FLOOR = 1e-14


@dataclass
class BranchSet:
    """Orthogonalized jump destinations for a conditioned state.

    ``images[i]`` is the (unnormalized) branch image J_i|psi> with rate
    r_i = <image|image>; ``fixing`` is the unitary W^T with
    J_i = sum_j W[j, i] (A_j - <A_j>); ``active`` indexes rates above the
    numerical floor.
    """

    images: np.ndarray          # (n, d)
    rates: np.ndarray           # (n,) descending
    fixing: np.ndarray          # (n, n) unitary U with A_i = <A_i> + (U^-1 J)_i
    mean_a: np.ndarray          # (n,) <A_i>_psi
    active: np.ndarray          # indices with non-negligible rate

    @property
    def total_rate(self) -> float:
        return float(self.rates[self.active].sum()) if len(self.active) else 0.0


def branch_set(model: LindbladModel, psi: np.ndarray) -> BranchSet:
    """Diagonalize the Gram matrix of the centered Lindblad images of psi."""
    n = len(model.lindblads)
    d = model.dim
    if n == 0:
        z = np.zeros((0, d), dtype=complex)
        return BranchSet(z, np.zeros(0), np.zeros((0, 0)), np.zeros(0), np.zeros(0, dtype=int))
    mean_a = np.array([expectation(psi, a) for a in model.lindblads])
    v = np.array([model.lindblads[j] @ psi - mean_a[j] * psi for j in range(n)])
    gram = v.conj() @ v.T
    vals, w = np.linalg.eigh(gram)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, None)
    w = w[:, order]
    images = (v.T @ w).T
    # phase convention: largest-magnitude image component real positive
    for i in range(n):
        k = int(np.argmax(np.abs(images[i])))
        if np.abs(images[i][k]) > 1e-14:
            ph = images[i][k] / np.abs(images[i][k])
            images[i] = images[i] / ph
            w[:, i] = w[:, i] / ph
    total = vals.sum()
    active = np.flatnonzero(vals > max(RATE_REL_FLOOR * total, RATE_ABS_FLOOR))
    return BranchSet(images=images, rates=vals, fixing=w.T, mean_a=mean_a, active=active)


def branch_operators(model: LindbladModel, bs: BranchSet) -> list[np.ndarray]:
    """Dense branch creation operators J_i = sum_j U_ij (A_j - <A_j>)."""
    d = model.dim
    eye = np.eye(d)
    ops = []
    for i in range(len(model.lindblads)):
        op = np.zeros((d, d), dtype=complex)
        for j in range(len(model.lindblads)):
            op += bs.fixing[i, j] * (model.lindblads[j] - bs.mean_a[j] * eye)
        ops.append(op)
    return ops


@dataclass
class EffectiveHamiltonianTerms:
    hermitian_part: np.ndarray
    anti_hermitian_part: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.hermitian_part + self.anti_hermitian_part


def effective_hamiltonian(
    model: LindbladModel, psi: np.ndarray, bs: BranchSet | None = None
) -> EffectiveHamiltonianTerms:
    """H_eff = H + (i hbar/2) sum_i { <(UA)_i^+> J_i - <(UA)_i> J_i^+ - J_i^+ J_i }.

    The sums are invariant under the fixing rotation, so they are assembled
    directly from the centered Lindblad operators.
    """
    if bs is None:
        bs = branch_set(model, psi)
    d = model.dim
    eye = np.eye(d)
    corr = np.zeros((d, d), dtype=complex)
    jj = np.zeros((d, d), dtype=complex)
    for j, a in enumerate(model.lindblads):
        centered = a - bs.mean_a[j] * eye
        corr += np.conj(bs.mean_a[j]) * centered - bs.mean_a[j] * dag(centered)
        jj += dag(centered) @ centered
    h_eff = model.H + (1j * model.hbar / 2.0) * (corr - jj)
    herm = 0.5 * (h_eff + dag(h_eff))
    anti = 0.5 * (h_eff - dag(h_eff))
    return EffectiveHamiltonianTerms(hermitian_part=herm, anti_hermitian_part=anti)


def unconditioned_generator(model: LindbladModel, psi: np.ndarray) -> np.ndarray:
    """(H_eff rho - rho H_eff^+)/(i hbar) + sum_i J_i rho J_i^+ evaluated on
    rho = |psi><psi|; equals the Lindblad generator applied to the same rho."""
    bs = branch_set(model, psi)
    terms = effective_hamiltonian(model, psi, bs)
    h_eff = terms.total
    rho = projector(psi)
    out = (h_eff @ rho - rho @ dag(h_eff)) / (1j * model.hbar)
    for img in bs.images:
        out += np.outer(img, img.conj())
    return out


def deterministic_rhs(model: LindbladModel, psi: np.ndarray) -> np.ndarray:
    """Norm-preserving deterministic part of the jump unravelling:
    (1/(i hbar)) H_eff psi + (1/2) (sum_i r_i) psi."""
    bs = branch_set(model, psi)
    terms = effective_hamiltonian(model, psi, bs)
    return terms.total @ psi / (1j * model.hbar) + 0.5 * float(bs.rates.sum()) * psi


@dataclass
class JumpEvent:
    branch_index: int
    rate: float


def pdp_step(
    model: LindbladModel, psi: np.ndarray, dt: float, rng: np.random.Generator
) -> tuple[np.ndarray, JumpEvent | None]:
    """One step of the piecewise-deterministic jump process (reference
    implementation; ensembles use the compiled kernel)."""
    bs = branch_set(model, psi)
    r_tot = bs.total_rate
    if r_tot * dt > 0.1:
        warnings.warn(f"dt * total rate = {r_tot * dt:.3f} > 0.1", StepSizeWarning)
    u = rng.random()
    if u < r_tot * dt:
        u2 = rng.random() * r_tot
        cum = 0.0
        chosen = bs.active[-1]
        for i in bs.active:
            cum += bs.rates[i]
            if u2 <= cum:
                chosen = i
                break
        psi_new = normalize(bs.images[chosen])
        return psi_new, JumpEvent(branch_index=int(chosen), rate=float(bs.rates[chosen]))
    d1 = deterministic_rhs(model, psi)
    pred = normalize(psi + dt * d1)
    d2 = deterministic_rhs(model, pred)
    return normalize(psi + 0.5 * dt * (d1 + d2)), None


def qsd_step(
    model: LindbladModel, psi: np.ndarray, dt: float, rng: np.random.Generator
) -> np.ndarray:
    """Euler-Maruyama quantum-state-diffusion step with renormalization."""
    bs = branch_set(model, psi)
    if bs.total_rate * dt > 0.1:
        warnings.warn(f"dt * total rate = {bs.total_rate * dt:.3f} > 0.1", StepSizeWarning)
    terms = effective_hamiltonian(model, psi, bs)
    out = psi + dt * (terms.total @ psi) / (1j * model.hbar)
    if len(model.lindblads):
        dw = rng.standard_normal(len(model.lindblads)) * np.sqrt(dt)
        for i in range(len(model.lindblads)):
            out = out + dw[i] * bs.images[i]
    return normalize(out)


@dataclass
class ConditionedIncrement:
    drift: float
    jump_terms: dict[int, float]   # branch index -> <J^+ (O - <O>) J>/r


def conditioned_increment(
    model: LindbladModel, psi: np.ndarray, obs: np.ndarray, bs: BranchSet | None = None
) -> ConditionedIncrement:
    """Drift and per-branch jump terms of d<O> in the conditioned state."""
    if bs is None:
        bs = branch_set(model, psi)
    drift = float(np.trace(obs @ liouvillian_apply(model, projector(psi))).real)
    o_mean = expectation(psi, obs).real
    jump_terms = {}
    for i in bs.active:
        img = bs.images[i]
        num = np.vdot(img, obs @ img).real - o_mean * np.vdot(img, img).real
        jump_terms[int(i)] = float(num / bs.rates[i])
    return ConditionedIncrement(drift=drift, jump_terms=jump_terms)


class ZeroRateBranchError(ValueError):
    pass


def jump_displacement_stats(
    psi: np.ndarray, bs: BranchSet, x: np.ndarray, p: np.ndarray
) -> list[tuple[float, float]]:
    """(gamma_x, gamma_p) per active branch: the mean displacement of the
    packet centroid caused by a jump into that branch."""
    if len(bs.active) == 0:
        raise ZeroRateBranchError("no branch has a nonzero rate")
    x_mean = expectation(psi, x).real
    p_mean = expectation(psi, p).real
    out = []
    for i in bs.active:
        img = bs.images[i]
        r = np.vdot(img, img).real
        gx = (np.vdot(img, x @ img).real - x_mean * r) / r
        gp = (np.vdot(img, p @ img).real - p_mean * r) / r
        out.append((float(gx), float(gp)))
    return out


def deterministic_flow(
    model: LindbladModel,
    psi0: np.ndarray,
    dt: float,
    n_steps: int,
    record_every: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the jump-free deterministic flow with the compiled trajectory
    kernel (the jump test is disabled).  Returns (times, states)."""
    n_lind = len(model.lindblads)
    d = model.dim
    n_rec = 1 + n_steps // record_every
    psis = np.empty((n_rec, d), dtype=np.complex128)
    jumped = np.zeros(n_steps, dtype=np.uint8)
    branches = np.full(n_steps, -1, dtype=np.int64)
    rates = np.zeros(n_steps, dtype=np.float64)
    a_stack = np.ascontiguousarray(np.array(model.lindblads).reshape(n_lind, d, d))
    ad_stack = np.ascontiguousarray(a_stack.conj().transpose(0, 2, 1))
    uniforms = np.full((n_steps, 2), 2.0)     # jump threshold never reached
    normals = np.zeros((n_steps, max(n_lind, 1)))
    fn = kernels.kernel("trajectory")
    fn(
        np.ascontiguousarray(model.H),
        a_stack,
        ad_stack,
        np.ascontiguousarray(normalize(np.asarray(psi0, dtype=complex))),
        float(dt),
        int(n_steps),
        float(model.hbar),
        kernels.BORN,
        uniforms,
        normals,
        int(record_every),
        psis,
        jumped,
        branches,
        rates,
    )
    times = np.arange(n_rec) * record_every * dt
    return times, psis


# ---------------------------------------------------------------------------
# Ensemble driver


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    ex: np.ndarray
    ep: np.ndarray
    var_x: np.ndarray
    var_p: np.ndarray
    jump_steps: np.ndarray         # step indices at which a jump fired
    jump_branches: np.ndarray
    n_jumps: int
    seed: int

    def csv_rows(self, record_every: int, dt: float):
        """Rows (step, t, jumped, branch_index, n_jumps_cum, ex, ep, var_x, var_p)."""
        jump_set = {int(s): int(b) for s, b in zip(self.jump_steps, self.jump_branches)}
        cum = 0
        rows = []
        for k, t in enumerate(self.times):
            step = k * record_every
            lo = (k - 1) * record_every if k else -1
            jumped = 0
            branch = -1
            for s in range(max(lo, -1) + 1, step + 1):
                if s in jump_set:
                    jumped = 1
                    branch = jump_set[s]
                    cum += 1
            rows.append(
                (step, t, jumped, branch, cum, self.ex[k], self.ep[k], self.var_x[k], self.var_p[k])
            )
        return rows


@dataclass
class EnsembleResult:
    times: np.ndarray
    rho_avg: np.ndarray            # (n_times, d, d)
    records: list[TrajectoryRecord]
    scheme: str
    seed: int


def _worker_count() -> int:
    env = os.environ.get("SIM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_single_trajectory(
    model: LindbladModel,
    psi0: np.ndarray,
    scheme: str,
    dt: float,
    n_steps: int,
    seed_seq,
    record_every: int,
    obs_x: np.ndarray,
    obs_p: np.ndarray,
) -> tuple[TrajectoryRecord, np.ndarray]:
    rng = np.random.default_rng(seed_seq)
    n_lind = len(model.lindblads)
    uniforms = rng.random((n_steps, 2))
    normals = rng.standard_normal((n_steps, n_lind)) if scheme == "qsd" else np.zeros((n_steps, max(n_lind, 1)))
    n_rec = 1 + n_steps // record_every
    d = model.dim
    psis = np.empty((n_rec, d), dtype=np.complex128)
    jumped = np.zeros(n_steps, dtype=np.uint8)
    branches = np.full(n_steps, -1, dtype=np.int64)
    rates = np.zeros(n_steps, dtype=np.float64)
    a_stack = np.ascontiguousarray(np.array(model.lindblads).reshape(n_lind, d, d))
    ad_stack = np.ascontiguousarray(a_stack.conj().transpose(0, 2, 1))
    fn = kernels.kernel("trajectory")
    fn(
        np.ascontiguousarray(model.H),
        a_stack,
        ad_stack,
        np.ascontiguousarray(psi0, dtype=np.complex128),
        float(dt),
        int(n_steps),
        float(model.hbar),
        kernels.BORN if scheme == "born" else kernels.QSD,
        uniforms,
        normals,
        int(record_every),
        psis,
        jumped,
        branches,
        rates,
    )
    ex = np.einsum("ki,ij,kj->k", psis.conj(), obs_x, psis).real
    ep = np.einsum("ki,ij,kj->k", psis.conj(), obs_p, psis).real
    x2 = np.einsum("ki,ij,kj->k", psis.conj(), obs_x @ obs_x, psis).real
    p2 = np.einsum("ki,ij,kj->k", psis.conj(), obs_p @ obs_p, psis).real
    times = np.arange(n_rec) * record_every * dt
    jump_steps = np.flatnonzero(jumped)
    rec = TrajectoryRecord(
        times=times,
        ex=ex,
        ep=ep,
        var_x=x2 - ex**2,
        var_p=p2 - ep**2,
        jump_steps=jump_steps,
        jump_branches=branches[jump_steps],
        n_jumps=int(jumped.sum()),
        seed=-1,
    )
    return rec, psis


def ensemble_run(
    model: LindbladModel,
    psi0: np.ndarray,
    scheme: str,
    n_traj: int,
    t_final: float,
    dt: float,
    seed: int,
    obs_x: np.ndarray | None = None,
    obs_p: np.ndarray | None = None,
    record_every: int | None = None,
    keep_records: bool = True,
) -> EnsembleResult:
    """Run ``n_traj`` independent conditioned trajectories and average them.

    Trajectory k draws its randomness from SeedSequence(seed, spawn_key=(k,)),
    and the density-matrix reduction runs in trajectory order with compensated
    summation, so results do not depend on the worker count (``SIM_THREADS``).
    """
    if scheme not in ("born", "qsd"):
        raise ValueError("scheme must be 'born' or 'qsd'")
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    d = model.dim
    if obs_x is None:
        obs_x = np.diag(np.arange(d)).astype(complex)
    if obs_p is None:
        obs_p = np.eye(d, dtype=complex)
    n_steps = int(round(t_final / dt))
    if record_every is None:
        record_every = max(1, n_steps // 200)
    psi0 = normalize(np.asarray(psi0, dtype=complex))

    def job(k: int):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(k,))
        rec, psis = run_single_trajectory(
            model, psi0, scheme, dt, n_steps, ss, record_every, obs_x, obs_p
        )
        rec.seed = k
        return rec, psis

    workers = _worker_count()
    if workers > 1 and n_traj > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(n_traj)))
    else:
        results = [job(k) for k in range(n_traj)]

    n_rec = len(results[0][0].times)
    rho_sum = np.zeros((n_rec, d, d), dtype=np.complex128)
    comp = np.zeros_like(rho_sum)
    for _, psis in results:   # fixed order: trajectory index
        contrib = np.einsum("ki,kj->kij", psis, psis.conj())
        y = contrib - comp
        t = rho_sum + y
        comp = (t - rho_sum) - y
        rho_sum = t
    rho_avg = rho_sum / n_traj
    records = [r for r, _ in results] if keep_records else []
    return EnsembleResult(
        times=results[0][0].times,
        rho_avg=rho_avg,
        records=records,
        scheme=scheme,
        seed=seed,
    )
