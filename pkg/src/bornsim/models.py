"""Concrete physical systems: the quantum and classical kicked rotor,
Lyapunov/Ehrenfest scale estimates, and the wave-packet localization scales.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .lindblad import QBMParams
from .potentials import PotentialSpec

__all__ = [
    "KickedRotorParams",
    "PotentialSpec",
    "rotor_floquet",
    "rotor_momenta",
    "boundary_leakage",
    "classical_standard_map",
    "standard_map_inverse",
    "lyapunov_estimate",
    "ehrenfest_time",
    "localization_scales",
    "LocalizationScales",
]


@dataclass(frozen=True)
class KickedRotorParams:
    """Free rotation for one period followed by a cosine kick.

    One period: exp(-i tau L^2 / (2 I hbar)) . exp(-i (K/hbar) cos(theta)),
    L = hbar * m on the truncated angular-momentum lattice (kick first, then
    free rotation).  The classical limit is the standard map
    p' = p + K_eff sin(theta), theta' = theta + p' with K_eff = K tau / I.
    """

    kick_strength: float
    inertia: float
    hbar: float = 1.0
    dim: int = 201
    kick_period: float = 1.0

    def __post_init__(self):
        if self.dim % 2 == 0 or self.dim < 65:
            raise ValueError("rotor dimension must be odd and at least 65")
        if self.inertia <= 0 or self.kick_period <= 0 or self.hbar <= 0:
            raise ValueError("inertia, period and hbar must be positive")

    @property
    def k_eff(self) -> float:
        return self.kick_strength * self.kick_period / self.inertia

    @property
    def l_max(self) -> int:
        return (self.dim - 1) // 2


def rotor_momenta(params: KickedRotorParams) -> np.ndarray:
    """Angular-momentum quantum numbers m, centered on zero."""
    l = params.l_max
    return np.arange(-l, l + 1)


def rotor_floquet(params: KickedRotorParams) -> np.ndarray:
    """One-period unitary; the kick is applied in the angle representation via
    the discrete Fourier transform that maps m to theta_j = 2 pi j / dim."""
    d = params.dim
    m = rotor_momenta(params)
    free_phase = np.exp(
        -1j * params.kick_period * params.hbar * m**2 / (2.0 * params.inertia)
    )
    theta = 2.0 * np.pi * np.arange(d) / d
    kick_phase = np.exp(-1j * (params.kick_strength / params.hbar) * np.cos(theta))
    # angle-representation amplitudes: <theta_j|m> = e^{i m theta_j} / sqrt(d)
    f = np.exp(1j * np.outer(theta, m)) / np.sqrt(d)
    u = free_phase[:, None] * (f.conj().T @ (kick_phase[:, None] * f))
    return u


def boundary_leakage(psi_m: np.ndarray, margin: int = 3) -> float:
    """Population within ``margin`` states of the truncation boundary."""
    lo = np.sum(np.abs(psi_m[:margin]) ** 2)
    hi = np.sum(np.abs(psi_m[-margin:]) ** 2)
    return float(lo + hi)


def classical_standard_map(
    points: np.ndarray, k_eff: float, n_steps: int
) -> np.ndarray:
    """Iterate the standard map on (theta, p) rows: p' = p + K sin theta,
    theta' = theta + p' (mod 2 pi)."""
    pts = np.array(points, dtype=np.float64)
    theta = np.ascontiguousarray(pts[:, 0])
    p = np.ascontiguousarray(pts[:, 1])
    fn = kernels.kernel("standard_map")
    theta, p = fn(theta, p, float(k_eff), int(n_steps))
    return np.column_stack([theta, p])


def standard_map_inverse(points: np.ndarray, k_eff: float, n_steps: int) -> np.ndarray:
    pts = np.array(points, dtype=np.float64)
    theta = np.ascontiguousarray(pts[:, 0])
    p = np.ascontiguousarray(pts[:, 1])
    fn = kernels.kernel("standard_map_back")
    theta, p = fn(theta, p, float(k_eff), int(n_steps))
    return np.column_stack([theta, p])


def lyapunov_estimate(
    k_eff: float,
    n_steps: int = 2000,
    n_samples: int = 64,
    seed: int = 0,
    renorm_every: int = 10,
) -> tuple[float, float]:
    """Largest Lyapunov exponent of the standard map from tangent-map
    log-stretch, averaged over random initial conditions.

    Returns (lambda per step, standard error)."""
    rng = np.random.default_rng(seed)
    fn = kernels.kernel("tangent_stretch")
    lams = np.empty(n_samples)
    for i in range(n_samples):
        theta0 = rng.uniform(0.0, 2.0 * np.pi)
        p0 = rng.uniform(0.0, 2.0 * np.pi)
        lams[i] = fn(theta0, p0, float(k_eff), int(n_steps), int(renorm_every)) / n_steps
    return float(lams.mean()), float(lams.std(ddof=1) / np.sqrt(n_samples))


def ehrenfest_time(lam: float, action: float, hbar: float) -> float:
    """lambda^-1 * log(I/hbar): the time for a minimal packet to spread to the
    macroscopic action scale in a chaotic system."""
    if lam <= 0 or action <= 0 or hbar <= 0 or action <= hbar:
        raise ValueError("require lam > 0 and action > hbar > 0")
    return float(np.log(action / hbar) / lam)


@dataclass(frozen=True)
class LocalizationScales:
    ell: float        # balance wave-packet size
    tau: float        # localization time at that size
    rate: float       # jump-rate estimate at that size


def localization_scales(params: QBMParams, lam: float, hbar: float = 1.0) -> LocalizationScales:
    """Balance of bath localization against chaotic spreading at Lyapunov
    rate ``lam``: ell = hbar sqrt(lam/(gamma m kT)), tau(ell) = hbar^2 /
    (gamma m kT ell^2), r(ell) = gamma m kT ell^2 / hbar^2 = 1/tau."""
    if lam <= 0:
        raise ValueError("Lyapunov rate must be positive")
    g = params.gamma * params.m * params.kT
    ell = hbar * np.sqrt(lam / g)
    tau = hbar**2 / (g * ell**2)
    rate = g * ell**2 / hbar**2
    return LocalizationScales(ell=float(ell), tau=float(tau), rate=float(rate))
