import numpy as np
import pytest

from bornsim.classical import (
    ClassicalEnsemble,
    LangevinParams,
    StepSizeWarning,
    fokker_planck_moment_check,
    langevin_run,
    moment_bridge,
    thermal_ensemble,
)
from bornsim.potentials import PotentialSpec


def test_params_validation():
    with pytest.raises(ValueError):
        LangevinParams(m=-1.0, gamma=0.1, kT=1.0)
    with pytest.raises(ValueError):
        LangevinParams(m=1.0, gamma=0.1, kT=1.0, dt=0.0)
    p = LangevinParams(m=2.0, gamma=0.25, kT=0.5)
    assert p.noise_amplitude == pytest.approx(np.sqrt(4 * 0.25 * 2.0 * 0.5))


def test_step_size_warning():
    p = LangevinParams(m=1.0, gamma=10.0, kT=1.0, dt=0.01)
    ens = ClassicalEnsemble(x=np.zeros(4), p=np.zeros(4))
    with pytest.warns(StepSizeWarning):
        langevin_run(ens, p, 2, seed=0)


def test_free_ou_momentum_relaxation_closed_form():
    """<p>(t) = p0 e^{-2 gamma t} and Var(p)(t) = mkT + (v0 - mkT) e^{-4 gamma t}."""
    params = LangevinParams(m=1.0, gamma=0.5, kT=0.8, dt=5e-4)
    n = 40000
    ens = ClassicalEnsemble(x=np.zeros(n), p=np.full(n, 2.0))
    times, snaps = langevin_run(ens, params, 4000, seed=1, record_every=500)
    mkt = params.m * params.kT
    for t, s in zip(times, snaps):
        want_mean = 2.0 * np.exp(-2.0 * params.gamma * t)
        want_var = mkt + (0.0 - mkt) * np.exp(-4.0 * params.gamma * t)
        se_mean = np.sqrt(max(want_var, 1e-12) / n)
        assert abs(s.p.mean() - want_mean) < 4 * se_mean + 4e-3   # O(dt) bias
        se_var = want_var * np.sqrt(2.0 / n) + 1e-4
        assert abs(s.p.var() - want_var) < 4 * se_var + 8e-3


def test_free_diffusion_variance_growth():
    """At long times Var(x) grows as 2 D t with D = kT/(2 gamma m)."""
    params = LangevinParams(m=1.0, gamma=1.0, kT=1.0, dt=1e-3)
    n = 20000
    ens = thermal_ensemble(n, params, seed=2, x_std=0.0)
    times, snaps = langevin_run(ens, params, 20000, seed=3, record_every=2000)
    d = params.kT / (2.0 * params.gamma * params.m)
    var_x = np.array([s.x.var() for s in snaps])
    # compare slope over the diffusive tail (t >> 1/(2 gamma))
    slope = (var_x[-1] - var_x[-5]) / (times[-1] - times[-5])
    assert slope == pytest.approx(2.0 * d, rel=0.1)


def test_harmonic_equipartition():
    omega = 1.3
    pot = PotentialSpec("harmonic", {"m": 1.0, "omega": omega})
    params = LangevinParams(m=1.0, gamma=0.4, kT=0.6, potential=pot, dt=1e-3)
    n = 20000
    ens = ClassicalEnsemble(x=np.zeros(n), p=np.zeros(n))
    times, snaps = langevin_run(ens, params, 30000, seed=4, record_every=3000)
    final = snaps[-1]
    assert final.p.var() == pytest.approx(params.m * params.kT, rel=0.05)
    assert final.x.var() == pytest.approx(params.kT / (params.m * omega**2), rel=0.05)


def test_thermal_ensemble_statistics():
    params = LangevinParams(m=2.0, gamma=0.1, kT=0.5)
    ens = thermal_ensemble(50000, params, seed=5, x_std=0.7)
    assert ens.p.var() == pytest.approx(params.m * params.kT, rel=0.05)
    assert ens.x.var() == pytest.approx(0.49, rel=0.05)
    assert ens.points.shape == (50000, 2)


def test_fokker_planck_moment_check_passes_free():
    params = LangevinParams(m=1.0, gamma=0.3, kT=1.0, dt=1e-3)
    ens = thermal_ensemble(30000, params, seed=6, x_std=1.0)
    ens.p += 1.0     # displaced so the mean relaxes
    times, snaps = langevin_run(ens, params, 3000, seed=7, record_every=300)
    report = fokker_planck_moment_check(times, snaps, params)
    assert report.passes


def test_fokker_planck_moment_check_passes_harmonic():
    pot = PotentialSpec("harmonic", {"m": 1.0, "omega": 0.8})
    params = LangevinParams(m=1.0, gamma=0.3, kT=1.0, potential=pot, dt=1e-3)
    ens = thermal_ensemble(30000, params, seed=8, x_std=0.5)
    times, snaps = langevin_run(ens, params, 3000, seed=9, record_every=300)
    report = fokker_planck_moment_check(times, snaps, params)
    assert report.passes


def test_fokker_planck_negative_control():
    """An ensemble evolved with different friction must fail the check for the
    stated parameters."""
    params_run = LangevinParams(m=1.0, gamma=0.3, kT=1.0, dt=1e-3)
    params_claim = LangevinParams(m=1.0, gamma=1.5, kT=1.0, dt=1e-3)
    ens = thermal_ensemble(30000, params_run, seed=10, x_std=1.0)
    ens.p += 2.0
    times, snaps = langevin_run(ens, params_run, 3000, seed=11, record_every=300)
    report = fokker_planck_moment_check(times, snaps, params_claim)
    assert not report.passes


def test_fokker_planck_rejects_anharmonic():
    pot = PotentialSpec("double_well", {"a": 1.0, "b": 1.0})
    params = LangevinParams(m=1.0, gamma=0.3, kT=1.0, potential=pot)
    ens = thermal_ensemble(100, params, seed=0)
    times, snaps = langevin_run(ens, params, 10, seed=0)
    with pytest.raises(ValueError):
        fokker_planck_moment_check(times, snaps, params)


def test_langevin_determinism_same_seed():
    params = LangevinParams(m=1.0, gamma=0.2, kT=0.5, dt=1e-3)
    ens = thermal_ensemble(256, params, seed=12)
    t1, s1 = langevin_run(ens, params, 500, seed=13, record_every=100)
    t2, s2 = langevin_run(ens, params, 500, seed=13, record_every=100)
    assert np.array_equal(s1[-1].x, s2[-1].x)
    assert np.array_equal(s1[-1].p, s2[-1].p)


def _synthetic_bridge(var_p0, n_traj=4000, noise=0.0, seed=0):
    """Build OU-exact synthetic 'quantum centroids' and a matching classical
    ensemble; the true variance is linear in u(t) with slope 4 gamma (mkT - var_p0)."""
    params = LangevinParams(m=1.0, gamma=0.25, kT=2.0, dt=1e-3)
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 2.0, 21)
    mkt = params.m * params.kT
    var = mkt + (var_p0 - mkt) * np.exp(-4.0 * params.gamma * t)
    centroids = rng.standard_normal((n_traj, len(t))) * np.sqrt(var)[None, :]
    if noise:
        centroids += rng.normal(0.0, noise, centroids.shape)
    snaps = [
        ClassicalEnsemble(x=np.zeros(n_traj), p=rng.normal(0.0, np.sqrt(v), n_traj))
        for v in var
    ]
    return params, t, centroids, snaps


def test_moment_bridge_recovers_ou_slope():
    params, t, centroids, snaps = _synthetic_bridge(var_p0=0.0)
    report = moment_bridge(t, centroids, t, snaps, params, t_min=0.0)
    assert report.slope_expected == pytest.approx(4 * 0.25 * 2.0)
    # var_p(0) = 0 makes the fitted slope equal the expected slope
    assert report.rel_slope_error < 0.1
    assert report.passes
    assert abs(report.slope_classical - report.slope_expected) / report.slope_expected < 0.1


def test_moment_bridge_detects_wrong_temperature():
    params, t, centroids, snaps = _synthetic_bridge(var_p0=0.0)
    cold = LangevinParams(m=1.0, gamma=0.25, kT=4.0, dt=1e-3)
    report = moment_bridge(t, centroids, t, snaps, cold, t_min=0.0)
    assert not report.passes


def test_moment_bridge_intercept_absorbs_offset():
    """A constant additive variance offset (equilibrated packet width) must not
    bias the slope thanks to the free intercept."""
    params, t, centroids, snaps = _synthetic_bridge(var_p0=0.0, noise=0.5)
    report = moment_bridge(t, centroids, t, snaps, params, t_min=0.0)
    assert report.rel_slope_error < 0.1


def test_moment_bridge_input_validation():
    params, t, centroids, snaps = _synthetic_bridge(var_p0=0.0, n_traj=50)
    with pytest.raises(ValueError):
        moment_bridge(t, centroids, t + 0.5, snaps, params)
    with pytest.raises(ValueError):
        moment_bridge(t, centroids, t, snaps, params, t_min=10.0)
