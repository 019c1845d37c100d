"""Classical-side ground truth: Langevin ensemble integration, Fokker-Planck
moment checks, and the quantum/classical moment bridge.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .potentials import PotentialSpec


class StepSizeWarning(UserWarning):
    pass


_POT_CODES = {"free": 0, "harmonic": 1, "double_well": 2, "cosine": 3}


def _pot_args(potential: PotentialSpec) -> tuple[int, float, float]:
    code = _POT_CODES[potential.name]
    p = potential.params
    if potential.name == "free":
        return code, 0.0, 0.0
    if potential.name == "harmonic":
        return code, p["m"] * p["omega"] ** 2, 0.0
    if potential.name == "double_well":
        return code, p["a"], p["b"]
    return code, p["amplitude"], p["k"]


@dataclass(frozen=True)
class LangevinParams:
    """Brownian particle: dx = p/m dt, dp = (-V' - 2 gamma p) dt + noise,
    with noise amplitude fixed by the bath: amplitude^2 = 4 gamma m kT."""

    m: float
    gamma: float
    kT: float
    potential: PotentialSpec = field(default_factory=lambda: PotentialSpec("free"))
    dt: float = 1e-3

    def __post_init__(self):
        if self.m <= 0 or self.gamma < 0 or self.kT < 0 or self.dt <= 0:
            raise ValueError("m and dt must be positive, gamma and kT nonnegative")

    @property
    def noise_amplitude(self) -> float:
        return float(np.sqrt(4.0 * self.gamma * self.m * self.kT))


@dataclass
class ClassicalEnsemble:
    x: np.ndarray
    p: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.p])


def langevin_run(
    ensemble: ClassicalEnsemble,
    params: LangevinParams,
    n_steps: int,
    seed: int,
    record_every: int | None = None,
    scheme: str = "euler",
    chunk: int = 64,
) -> tuple[np.ndarray, list[ClassicalEnsemble]]:
    """Euler-Maruyama (or leapfrog-drift) evolution of an ensemble.

    Noise is pre-drawn per chunk from SeedSequence(seed), so the numba and
    numpy kernel backends produce identical ensembles.  Returns the recorded
    times and ensemble snapshots (initial state first).
    """
    if scheme not in ("euler", "leapfrog"):
        raise ValueError("scheme must be 'euler' or 'leapfrog'")
    if params.dt * params.gamma > 0.05:
        warnings.warn(
            f"dt*gamma = {params.dt * params.gamma:.3f} > 0.05", StepSizeWarning
        )
    if record_every is None:
        record_every = max(1, n_steps // 200)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    x = np.array(ensemble.x, dtype=np.float64)
    p = np.array(ensemble.p, dtype=np.float64)
    code, pa, pb = _pot_args(params.potential)
    fn = kernels.kernel("langevin_chunk")
    leapfrog = scheme == "leapfrog"
    times = [0.0]
    snaps = [ClassicalEnsemble(x=x.copy(), p=p.copy())]
    done = 0
    while done < n_steps:
        todo = min(chunk, n_steps - done)
        # draw in fixed chunks so records can fall inside a chunk boundary
        for sub in range(todo):
            noise = rng.standard_normal((1, x.size))
            x, p = fn(x, p, noise, params.m, params.gamma, params.kT, params.dt,
                      code, pa, pb, leapfrog)
            done += 1
            if done % record_every == 0 or done == n_steps:
                times.append(done * params.dt)
                snaps.append(ClassicalEnsemble(x=x.copy(), p=p.copy()))
    return np.array(times), snaps


def thermal_ensemble(
    n: int, params: LangevinParams, seed: int, x_std: float = 1.0
) -> ClassicalEnsemble:
    rng = np.random.default_rng(seed)
    return ClassicalEnsemble(
        x=rng.normal(0.0, x_std, n),
        p=rng.normal(0.0, np.sqrt(params.m * params.kT), n),
    )


@dataclass
class MomentCheckReport:
    times: np.ndarray
    mean_p: np.ndarray
    var_p: np.ndarray
    var_x: np.ndarray
    dmean_p_dt: np.ndarray
    predicted_dmean_p_dt: np.ndarray
    dvar_p_dt: np.ndarray
    predicted_dvar_p_dt: np.ndarray
    stderr_scale: float
    passes: bool


def fokker_planck_moment_check(
    times: np.ndarray,
    snaps: list[ClassicalEnsemble],
    params: LangevinParams,
    n_sigma: float = 3.0,
) -> MomentCheckReport:
    """Compare empirical moment derivatives with the closed moment hierarchy
    d<p>/dt = -<V'> - 2 gamma <p>, dVar(p)/dt = -4 gamma Var(p) + 4 gamma m kT
    - 2 Cov(p, V').  Only free and harmonic potentials close the hierarchy."""
    if params.potential.name not in ("free", "harmonic"):
        raise ValueError("moment check supports free or harmonic potentials only")
    n_samp = snaps[0].x.size
    mean_p = np.array([s.p.mean() for s in snaps])
    var_p = np.array([s.p.var() for s in snaps])
    var_x = np.array([s.x.var() for s in snaps])
    vprime = [params.potential.gradient(s.x) for s in snaps]
    mean_vp = np.array([v.mean() for v in vprime])
    cov_pvp = np.array([np.mean((s.p - s.p.mean()) * (v - v.mean()))
                        for s, v in zip(snaps, vprime)])
    d_mean = np.gradient(mean_p, times)
    d_var = np.gradient(var_p, times)
    pred_mean = -mean_vp - 2.0 * params.gamma * mean_p
    pred_var = (
        -4.0 * params.gamma * var_p
        + 4.0 * params.gamma * params.m * params.kT
        - 2.0 * cov_pvp
    )
    # standard error of a derivative estimated over the record spacing
    dt_rec = times[1] - times[0]
    p_std = np.sqrt(np.maximum(var_p.mean(), 1e-300))
    se_mean = p_std * np.sqrt(2.0 / n_samp) / dt_rec
    se_var = var_p.mean() * np.sqrt(8.0 / n_samp) / dt_rec
    ok_mean = np.abs(d_mean[1:-1] - pred_mean[1:-1]).max() <= n_sigma * se_mean
    ok_var = np.abs(d_var[1:-1] - pred_var[1:-1]).max() <= n_sigma * se_var
    return MomentCheckReport(
        times=times,
        mean_p=mean_p,
        var_p=var_p,
        var_x=var_x,
        dmean_p_dt=d_mean,
        predicted_dmean_p_dt=pred_mean,
        dvar_p_dt=d_var,
        predicted_dvar_p_dt=pred_var,
        stderr_scale=float(se_var),
        passes=bool(ok_mean and ok_var),
    )


@dataclass
class BridgeReport:
    times: np.ndarray
    quantum_mean_p: np.ndarray
    classical_mean_p: np.ndarray
    quantum_var_centroid_p: np.ndarray
    classical_var_p: np.ndarray
    slope_quantum: float
    slope_classical: float
    slope_expected: float
    rel_slope_error: float
    passes: bool


def _ou_slope(u: np.ndarray, v: np.ndarray) -> float:
    """Least-squares slope of v against u with a free intercept."""
    a = np.vstack([u, np.ones_like(u)]).T
    coef, *_ = np.linalg.lstsq(a, v, rcond=None)
    return float(coef[0])


def moment_bridge(
    times_q: np.ndarray,
    centroid_p: np.ndarray,        # (n_traj, n_times) conditioned <p> per trajectory
    times_c: np.ndarray,
    snaps_c: list[ClassicalEnsemble],
    params: LangevinParams,
    slope_tolerance: float = 0.15,
    t_min: float = 0.0,
) -> BridgeReport:
    """Compare the spread of quantum trajectory centroids against the
    classical Langevin ensemble.  Slopes are fitted (with a free intercept)
    against the Ornstein-Uhlenbeck clock u(t) = (1 - e^{-4 gamma t})/(4 gamma).
    For the exact free-particle moment hierarchy the variance is linear in u
    with slope 4 gamma m kT - 4 gamma var_p(0); the intercept absorbs the
    transient in which the conditioned wave-packet width equilibrates, so the
    fit window may start at ``t_min`` after that transient."""
    if len(times_q) != len(times_c) or np.abs(np.asarray(times_q) - np.asarray(times_c)).max() > 1e-9:
        raise ValueError("quantum and classical output times must match")
    t = np.asarray(times_q)
    vq = centroid_p.var(axis=0)
    vc = np.array([s.p.var() for s in snaps_c])
    if params.gamma > 0:
        u = (1.0 - np.exp(-4.0 * params.gamma * t)) / (4.0 * params.gamma)
    else:
        u = t.copy()
    expected = 4.0 * params.gamma * params.m * params.kT
    sel = t >= t_min
    if sel.sum() < 3:
        raise ValueError("fit window must contain at least 3 output times")
    slope_q = _ou_slope(u[sel], vq[sel])
    slope_c = _ou_slope(u[sel], vc[sel])
    rel = abs(slope_q - expected) / expected if expected > 0 else abs(slope_q)
    return BridgeReport(
        times=t,
        quantum_mean_p=centroid_p.mean(axis=0),
        classical_mean_p=np.array([s.p.mean() for s in snaps_c]),
        quantum_var_centroid_p=vq,
        classical_var_p=vc,
        slope_quantum=slope_q,
        slope_classical=slope_c,
        slope_expected=expected,
        rel_slope_error=float(rel),
        passes=bool(rel <= slope_tolerance),
    )
