import numpy as np
import pytest

from bornsim.lindblad import GridRep
from bornsim.phasespace import (
    PhaseGrid,
    canonical_wigner_grid,
    coherent_state,
    cylinder_coherent,
    ensemble_moments,
    field_moments,
    husimi,
    husimi_cylinder,
    wigner,
    wigner_marginal_x,
)

REP = GridRep(n=128, length=40.0)


def test_phase_grid_validation():
    with pytest.raises(ValueError):
        PhaseGrid("torus", (0, 1), (0, 1), 8, 8)
    with pytest.raises(ValueError):
        PhaseGrid("plane", (0, 1), (0, 1), 1, 8)
    with pytest.raises(ValueError):
        PhaseGrid("cylinder", (0.0, 3.0), (-5, 5), 8, 8)
    g = PhaseGrid("cylinder", (0.0, 2.0 * np.pi), (-5, 5), 8, 8)
    assert g.xs[0] == 0.0
    assert g.xs[-1] < 2.0 * np.pi      # periodic point not duplicated


def test_coherent_state_moments():
    sigma = 1.5
    psi = coherent_state(2.0, 0.7, sigma, REP)
    x = REP.x
    prob = np.abs(psi) ** 2
    assert (prob * x).sum() == pytest.approx(2.0, abs=1e-9)
    assert (prob * (x - 2.0) ** 2).sum() == pytest.approx(sigma**2 / 2.0, rel=1e-6)
    p = REP.p_operator()
    assert np.vdot(psi, p @ psi).real == pytest.approx(0.7, abs=1e-9)
    with pytest.raises(ValueError):
        coherent_state(0.0, 0.0, -1.0, REP)
    with pytest.raises(ValueError):
        coherent_state(0.0, 0.0, 0.1, REP)     # narrower than the grid resolves


def test_wigner_gaussian_peak_and_mass():
    """A pure Gaussian has W(x0, p0) = 1/(pi hbar) at its center and unit mass."""
    psi = coherent_state(0.0, 0.0, 1.0, REP)
    field = wigner(psi, REP)
    assert field.mass() == pytest.approx(1.0, abs=1e-6)
    i = int(np.argmin(np.abs(field.grid.xs)))
    j = int(np.argmin(np.abs(field.grid.ps)))
    assert field.values[i, j] == pytest.approx(1.0 / np.pi, rel=1e-6)


def test_wigner_marginal_is_position_density():
    psi = coherent_state(1.0, 0.4, 1.2, REP)
    field = wigner(psi, REP)
    marg = wigner_marginal_x(field)
    prob = np.abs(psi) ** 2 / REP.dx
    assert np.abs(marg - prob).max() < 1e-8


def test_wigner_cat_state_negativity():
    """Superposition of separated packets shows interference fringes with
    negative Wigner values near the midpoint."""
    a = coherent_state(-4.0, 0.0, 1.0, REP)
    b = coherent_state(4.0, 0.0, 1.0, REP)
    cat = (a + b) / np.linalg.norm(a + b)
    field = wigner(cat, REP)
    i = int(np.argmin(np.abs(field.grid.xs)))
    assert field.values[i].min() < -0.1 / np.pi
    assert field.mass() == pytest.approx(1.0, abs=1e-6)
    # a statistical mixture of the same packets has no negativity
    rho = 0.5 * np.outer(a, a.conj()) + 0.5 * np.outer(b, b.conj())
    field_mix = wigner(rho, REP)
    assert field_mix.values.min() > -1e-9


def test_wigner_rejects_off_lattice_grid():
    psi = coherent_state(0.0, 0.0, 1.0, REP)
    bad = PhaseGrid("plane", (-5.01, 5.01), (-3, 3), 32, 32)
    with pytest.raises(ValueError):
        wigner(psi, REP, bad)


def test_husimi_gaussian_variance_offsets():
    """Husimi smoothing adds sigma^2/2 to var_x and hbar^2/(2 sigma^2) to
    var_p for a matched-width kernel."""
    s_state = 1.4
    s_kernel = 0.9
    psi = coherent_state(0.5, -0.3, s_state, REP)
    grid = PhaseGrid("plane", (-12.0, 12.0), (-4.0, 4.0), 96, 96)
    field = husimi(psi, REP, grid, sigma=s_kernel)
    m = field_moments(field)
    assert m.mean_x == pytest.approx(0.5, abs=1e-3)
    assert m.mean_p == pytest.approx(-0.3, abs=1e-3)
    var_x_want = s_state**2 / 2.0 + s_kernel**2 / 2.0
    var_p_want = REP.hbar**2 / (2 * s_state**2) + REP.hbar**2 / (2 * s_kernel**2)
    assert m.var_x == pytest.approx(var_x_want, rel=2e-3)
    assert m.var_p == pytest.approx(var_p_want, rel=2e-3)
    assert np.all(field.values >= 0.0)


def test_cylinder_coherent_localization():
    dim = 129
    psi = cylinder_coherent(1.2, 5.0, 0.15, dim)
    l = (dim - 1) // 2
    m = np.arange(-l, l + 1)
    prob = np.abs(psi) ** 2
    assert (prob * m).sum() == pytest.approx(5.0, abs=1e-9)
    # Gaussian in m with std 1/(2 sigma_theta)
    var_m = (prob * (m - 5.0) ** 2).sum()
    assert var_m == pytest.approx(1.0 / (4 * 0.15**2), rel=1e-3)


def test_husimi_cylinder_moments_match_state():
    dim = 129
    sigma = 0.2
    theta0, l0 = 2.5, 3.0
    psi = cylinder_coherent(theta0, l0, sigma, dim)
    grid = PhaseGrid("cylinder", (0.0, 2.0 * np.pi), (-30.0, 30.0), 96, 121)
    field = husimi_cylinder(psi, grid, sigma_theta=sigma)
    m = field_moments(field)
    assert m.mass == pytest.approx(1.0, abs=1e-3)
    assert m.mean_x == pytest.approx(theta0, abs=1e-2)
    assert m.mean_p == pytest.approx(l0, abs=1e-2)
    # the kernel envelope matches the state's m-envelope, so the m variances
    # add: 1/(4 sigma^2) + 1/(4 sigma^2); the combined amplitude Gaussian
    # exp(-2 sigma^2 m^2) Fourier-transforms to intensity variance 2 sigma^2
    assert m.var_p == pytest.approx(1.0 / (2 * sigma**2), rel=5e-2)
    assert m.var_x == pytest.approx(2.0 * sigma**2, rel=5e-2)


def test_field_moments_mass_floor():
    grid = PhaseGrid("plane", (-1.0, 1.0), (-1.0, 1.0), 16, 16)
    from bornsim.phasespace import PhaseField

    small = PhaseField(grid=grid, values=np.full((16, 16), 1e-6))
    with pytest.raises(ValueError):
        field_moments(small)


def test_ensemble_moments_plain_and_circular():
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.normal(1.0, 0.3, 40000), rng.normal(-2.0, 0.7, 40000)])
    m = ensemble_moments(pts)
    assert m.mean_x == pytest.approx(1.0, abs=0.01)
    assert m.var_x == pytest.approx(0.09, rel=0.05)
    assert m.mean_p == pytest.approx(-2.0, abs=0.02)
    assert m.var_p == pytest.approx(0.49, rel=0.05)
    # circular statistics handle wrap-around near 0/2pi
    wrapped = np.column_stack(
        [(rng.normal(0.05, 0.2, 40000)) % (2 * np.pi), rng.normal(0, 1, 40000)]
    )
    mc = ensemble_moments(wrapped, circular_x=True)
    d = (mc.mean_x - 0.05 + np.pi) % (2 * np.pi) - np.pi
    assert abs(d) < 0.01
    assert mc.var_x == pytest.approx(0.04, rel=0.1)
