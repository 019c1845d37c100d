"""Coherent states and Wigner/Husimi phase-space fields on the plane and on
the cylinder (kicked-rotor geometry).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hilbert
from .lindblad import GridRep


@dataclass(frozen=True)
class PhaseGrid:
    """Rectangular sampling grid; geometry 'plane' carries (x, p) ranges,
    'cylinder' fixes theta to [0, 2 pi) and carries an L range."""

    geometry: str
    x_range: tuple[float, float]
    p_range: tuple[float, float]
    nx: int
    np_: int

    def __post_init__(self):
        if self.geometry not in ("plane", "cylinder"):
            raise ValueError("geometry must be 'plane' or 'cylinder'")
        if self.nx < 2 or self.np_ < 2:
            raise ValueError("grid resolution must be at least 2 in each direction")
        if self.geometry == "cylinder" and self.x_range != (0.0, 2.0 * np.pi):
            raise ValueError("cylinder theta range must be exactly [0, 2 pi)")

    @property
    def xs(self) -> np.ndarray:
        lo, hi = self.x_range
        return lo + (hi - lo) * np.arange(self.nx) / self.nx if self.geometry == "cylinder" \
            else np.linspace(lo, hi, self.nx)

    @property
    def ps(self) -> np.ndarray:
        return np.linspace(self.p_range[0], self.p_range[1], self.np_)

    @property
    def cell_area(self) -> float:
        xs, ps = self.xs, self.ps
        dx = xs[1] - xs[0]
        dp = ps[1] - ps[0]
        return float(dx * dp)


@dataclass
class PhaseField:
    grid: PhaseGrid
    values: np.ndarray     # (nx, np_)

    def mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_area)


def coherent_state(
    x0: float, p0: float, sigma: float, rep: GridRep
) -> np.ndarray:
    """Normalized Gaussian on the position grid with <x> = x0, <p> = p0 and
    position variance sigma^2/2 (minimal uncertainty: var_x var_p = hbar^2/4)."""
    if sigma <= 0:
        raise ValueError("width must be positive")
    x = rep.x
    if sigma < 2.0 * rep.dx or rep.hbar / sigma > 0.5 * np.pi * rep.hbar / rep.dx:
        raise ValueError("grid cannot resolve the requested width")
    psi = np.exp(-((x - x0) ** 2) / (2.0 * sigma**2) + 1j * p0 * x / rep.hbar)
    return hilbert.normalize(psi.astype(complex))


def canonical_wigner_grid(rep: GridRep) -> PhaseGrid:
    """The momentum lattice dual to half-steps of the position grid; marginals
    computed on this grid are exact."""
    n = rep.n
    dp = np.pi * rep.hbar / (n * rep.dx)
    p0 = -dp * (n // 2)
    return PhaseGrid(
        geometry="plane",
        x_range=(float(rep.x[0]), float(rep.x[-1])),
        p_range=(float(p0), float(p0 + dp * (n - 1))),
        nx=n,
        np_=n,
    )


def wigner(state, rep: GridRep, grid: PhaseGrid | None = None) -> PhaseField:
    """Wigner quasi-probability of a state vector or density matrix on the
    position grid: W(x,p) = (1/(pi hbar)) sum_y rho(x+y, x-y) e^{-2ipy/hbar} dx."""
    if grid is None:
        grid = canonical_wigner_grid(rep)
    psi_or_rho = np.asarray(state)
    if psi_or_rho.ndim == 1:
        rho = np.outer(psi_or_rho, psi_or_rho.conj())
    else:
        rho = psi_or_rho
    n = rep.n
    dx = rep.dx
    ps = grid.ps
    xs = grid.xs
    x_grid = rep.x
    values = np.zeros((grid.nx, grid.np_))
    idx = np.rint((xs - x_grid[0]) / dx).astype(int)
    if np.abs(xs - (x_grid[0] + idx * dx)).max() > 1e-9 * dx:
        raise ValueError("wigner grid x-points must lie on the state's position grid")
    shifts = np.arange(-(n - 1), n)
    for col, i in enumerate(idx):
        js = shifts[(i + shifts >= 0) & (i + shifts < n) & (i - shifts >= 0) & (i - shifts < n)]
        corr = rho[i + js, i - js]
        phases = np.exp(-2j * np.outer(ps, js * dx) / rep.hbar)
        # grid amplitudes carry sqrt(dx), so the y-integral's dx cancels:
        # sum_j rho_grid = integral dy rho_cont
        values[col] = (phases @ corr).real / (np.pi * rep.hbar)
    field = PhaseField(grid=grid, values=values)
    return field


def wigner_marginal_x(field: PhaseField) -> np.ndarray:
    dp = field.grid.ps[1] - field.grid.ps[0]
    return field.values.sum(axis=1) * dp


def husimi(
    psi: np.ndarray, rep: GridRep, grid: PhaseGrid, sigma: float | None = None
) -> PhaseField:
    """Smoothed nonnegative phase-space density
    |<coherent(x, p, sigma)|psi>|^2 / (2 pi hbar)."""
    if sigma is None:
        sigma = np.sqrt(rep.hbar / 2.0)
    x = rep.x
    values = np.empty((grid.nx, grid.np_))
    # direct overlap; the coherent envelope is shared per x-column
    for i, x0 in enumerate(grid.xs):
        envelope = np.exp(-((x - x0) ** 2) / (4.0 * (sigma**2 / 2.0)))
        for j, p0 in enumerate(grid.ps):
            coh = envelope * np.exp(1j * p0 * x / rep.hbar)
            coh = coh / np.linalg.norm(coh)
            ov = np.vdot(coh, psi)
            values[i, j] = (ov.conj() * ov).real / (2.0 * np.pi * rep.hbar)
    return PhaseField(grid=grid, values=values)


def cylinder_coherent(
    theta0: float, l0: float, sigma_theta: float, dim: int
) -> np.ndarray:
    """Minimal wrapped Gaussian on the angular-momentum lattice
    m in [-(dim-1)/2, (dim-1)/2]: Gaussian amplitudes in m with std
    1/(2 sigma_theta), localized at angle theta0."""
    l = (dim - 1) // 2
    m = np.arange(-l, l + 1)
    amps = np.exp(-(sigma_theta**2) * (m - l0) ** 2) * np.exp(-1j * m * theta0)
    return hilbert.normalize(amps.astype(complex))


def husimi_cylinder(
    psi_m: np.ndarray, grid: PhaseGrid, sigma_theta: float, hbar: float = 1.0
) -> PhaseField:
    """Husimi field on the cylinder; the L axis is sampled at grid.ps (in
    units of hbar * m)."""
    if grid.geometry != "cylinder":
        raise ValueError("cylinder geometry required")
    dim = len(psi_m)
    l = (dim - 1) // 2
    m = np.arange(-l, l + 1)
    values = np.empty((grid.nx, grid.np_))
    for j, l0 in enumerate(grid.ps):
        envelope = np.exp(-(sigma_theta**2) * (m - l0 / hbar) ** 2)
        nrm2 = float(np.sum(envelope**2))
        weighted = envelope * psi_m
        for i, th in enumerate(grid.xs):
            ov = np.sum(np.exp(1j * m * th) * weighted)
            values[i, j] = (ov.conj() * ov).real / nrm2
    values /= 2.0 * np.pi * hbar
    return PhaseField(grid=grid, values=values)


@dataclass
class FieldMoments:
    mean_x: float
    mean_p: float
    var_x: float
    var_p: float
    cov_xp: float
    mass: float


def field_moments(field: PhaseField, mass_floor: float = 0.99) -> FieldMoments:
    """Riemann-sum moments; on the cylinder the theta mean and variance use
    circular statistics."""
    w = field.values * field.grid.cell_area
    mass = float(w.sum())
    if mass <= mass_floor:
        raise ValueError(f"field mass {mass:.4f} below {mass_floor}; grid too small")
    xs = field.grid.xs
    ps = field.grid.ps
    wx = w.sum(axis=1)
    wp = w.sum(axis=0)
    if field.grid.geometry == "cylinder":
        z = np.sum(wx * np.exp(1j * xs)) / mass
        mean_x = float(np.angle(z) % (2.0 * np.pi))
        var_x = float(-2.0 * np.log(max(np.abs(z), 1e-300)))   # circular variance scale
        dx_wrapped = np.angle(np.exp(1j * (xs - mean_x)))
        cov_xp = float(np.sum(w * np.outer(dx_wrapped, ps - (wp * ps).sum() / mass)) / mass)
    else:
        mean_x = float((wx * xs).sum() / mass)
        var_x = float((wx * (xs - mean_x) ** 2).sum() / mass)
        cov_xp = float(
            np.sum(w * np.outer(xs - mean_x, ps - (wp * ps).sum() / mass)) / mass
        )
    mean_p = float((wp * ps).sum() / mass)
    var_p = float((wp * (ps - mean_p) ** 2).sum() / mass)
    return FieldMoments(
        mean_x=mean_x, mean_p=mean_p, var_x=var_x, var_p=var_p, cov_xp=cov_xp, mass=mass
    )


def ensemble_moments(points: np.ndarray, circular_x: bool = False) -> FieldMoments:
    """Moments of a classical point ensemble (theta, p) or (x, p) rows."""
    x = points[:, 0]
    p = points[:, 1]
    if circular_x:
        z = np.mean(np.exp(1j * x))
        mean_x = float(np.angle(z) % (2.0 * np.pi))
        var_x = float(-2.0 * np.log(max(np.abs(z), 1e-300)))
        dxw = np.angle(np.exp(1j * (x - mean_x)))
        cov = float(np.mean(dxw * (p - p.mean())))
    else:
        mean_x = float(x.mean())
        var_x = float(x.var())
        cov = float(np.mean((x - mean_x) * (p - p.mean())))
    return FieldMoments(
        mean_x=mean_x,
        mean_p=float(p.mean()),
        var_x=var_x,
        var_p=float(p.var()),
        cov_xp=cov,
        mass=1.0,
    )
