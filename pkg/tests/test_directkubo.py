import math

import numpy as np
import pytest
from scipy import integrate

from mottlab.directkubo import (BoxParams, KuboEstimate, calibrate_overlap, dos_histogram,
                                ensemble_kubo, kubo_sigma, mott_scaling_fit, pair_weights,
                                run_ensemble, sample_realization)
from mottlab.errors import BroadeningError, ConfigurationError, IllConditionedFit, InvalidParameterError
from mottlab.model import DensityProfile, RegimeParams
from mottlab.response import sigma_two_well

NARROW = DensityProfile.uniform(0.05, 0.975, 1.025)


def test_empty_box_has_no_bound_levels():
    real = sample_realization(BoxParams(50.0, 0.05), seed=1)
    assert real.energies.size == 0


@pytest.mark.parametrize("g", [1.0, 4.0])
def test_single_well_level(g):
    real = sample_realization(BoxParams(40.0, 0.01), seed=0, forced_wells=((20.0, g),))
    assert real.energies.size == 1
    assert real.energies[0] == pytest.approx(-g, rel=1e-3)


def test_resolution_guard():
    with pytest.raises(ConfigurationError):
        BoxParams(100.0, 0.2, 0.1, DensityProfile.uniform(0.1, 1.0, 2.0))
    with pytest.raises(InvalidParameterError):
        BoxParams(100.0, 0.05, 0.1)


def test_eigenvectors_orthonormal():
    real = sample_realization(BoxParams(200.0, 0.05, 0.05, NARROW), seed=3)
    v = real.vectors
    assert np.abs(v.T @ v - np.eye(v.shape[1])).max() < 1e-10


def test_same_seed_same_levels():
    p = BoxParams(200.0, 0.05, 0.05, NARROW)
    a = sample_realization(p, 42)
    b = sample_realization(p, 42)
    assert np.array_equal(a.energies, b.energies)
    assert np.array_equal(a.centers, b.centers)


def test_ensemble_independent_of_threads():
    p = BoxParams(100.0, 0.098, 0.05, NARROW)
    nus = [1e-3, 3e-3]
    a = run_ensemble(p, 7, 12, E_F=-1.0, nus=nus, window=0.04, threads=1)
    b = run_ensemble(p, 7, 12, E_F=-1.0, nus=nus, window=0.04, threads=4)
    assert all(np.array_equal(x.kubo, y.kubo) and np.array_equal(x.energies, y.energies)
               for x, y in zip(a, b))


def test_equal_pair_dipole_is_half_separation():
    y = 8.0
    real = sample_realization(BoxParams(y + 60.0, 0.02), 0, forced_wells=((30.0, 1.0), (30.0 + y, 1.0)))
    assert real.energies.size == 2
    X = real.dipole_matrix()
    assert abs(X[0, 1]) ** 2 == pytest.approx(y * y / 4, rel=2e-2)


def test_overlap_calibration():
    I0, rl = calibrate_overlap(1.0, h=0.02)
    assert rl == pytest.approx(1.0, rel=1e-2)
    assert I0 == pytest.approx(4.0, rel=2e-2)


def test_broadening_bound():
    real = sample_realization(BoxParams(40.0, 0.05), 0, forced_wells=((20.0, 1.0),))
    with pytest.raises(BroadeningError):
        kubo_sigma([real], -1.0, [1e-3], eta=5e-4)
    with pytest.raises(BroadeningError):
        kubo_sigma([real], -1.0, [1e-3], eta=0.0)


def test_window_weight_is_average_of_sharp_weights():
    En, Em, nu, eta, W = -1.003, -0.9985, 4e-3, 8e-4, 0.02
    sharp, _ = integrate.quad(lambda e: pair_weights(En, Em, e, nu, eta), -1 - W / 2, -1 + W / 2,
                              points=[En, Em - nu], limit=200)
    assert pair_weights(En, Em, -1.0, nu, eta, window=W) == pytest.approx(sharp / W, rel=1e-8)


def test_dos_histogram_counts_bound_levels():
    p = BoxParams(300.0, 0.098, 0.05, NARROW)
    reals = [sample_realization(p, s) for s in range(20)]
    hist = dos_histogram(reals, np.linspace(-10.0, 0.0, 101))
    assert hist.counts.sum() == sum(r.energies.size for r in reals)
    # roughly mu per unit length once smeared over the whole band
    total = float(np.sum(hist.density * np.diff(hist.edges)))
    assert total == pytest.approx(0.05, rel=0.3)


def _estimate(nus, sigma, rel):
    sigma = np.asarray(sigma)
    return KuboEstimate(np.asarray(nus), sigma, rel * sigma, 0.2 * np.asarray(nus), 100)


def test_fit_recovers_synthetic_power():
    nus = np.geomspace(1e-4, 3e-3, 6)
    rng = np.random.default_rng(5)
    sigma = 0.3 * nus**2 * np.log(8.0 / nus) ** 2 * np.exp(0.02 * rng.standard_normal(6))
    fit = mott_scaling_fit(_estimate(nus, sigma, 0.02), 4.0)
    assert fit.contains(2.0)
    assert fit.p == pytest.approx(2.0, abs=0.3)


def test_fit_on_two_well_response():
    reg = RegimeParams(1, -1.0, 1e-4, overlap_amplitude=4.0, localization_radius=1.0)
    nus = np.geomspace(1e-4, 3e-3, 6)
    sigma = [sigma_two_well(n, reg.replace(nu=n)).sigma_integral for n in nus]
    fit = mott_scaling_fit(_estimate(nus, sigma, 0.01), 4.0)
    assert 1.8 <= fit.p <= 2.2


def test_fit_preconditions():
    nus = np.geomspace(1e-4, 1e-3, 6)
    with pytest.raises(IllConditionedFit):
        mott_scaling_fit(_estimate(nus, nus**2, 0.01), 4.0)
    nus = np.geomspace(1e-4, 3e-3, 6)
    with pytest.raises(IllConditionedFit):
        mott_scaling_fit(_estimate(nus, nus**2, 0.5), 4.0)
    with pytest.raises(IllConditionedFit):
        mott_scaling_fit(_estimate(nus[:3], nus[:3] ** 2, 0.01), 4.0)


def test_ensemble_kubo_matches_direct_average():
    p = BoxParams(100.0, 0.098, 0.05, NARROW)
    nus = [1e-3, 3e-3]
    recs = run_ensemble(p, 3, 5, E_F=-1.0, nus=nus, window=0.04)
    reals = [sample_realization(p, s) for s in np.random.SeedSequence(3).spawn(5)]
    a = ensemble_kubo(recs, nus, window=0.04)
    b = kubo_sigma(reals, -1.0, nus, window=0.04)
    assert np.array_equal(a.sigma, b.sigma)


def test_no_pairs_no_conductivity():
    empty = sample_realization(BoxParams(50.0, 0.05), 0)
    single = sample_realization(BoxParams(50.0, 0.05), 0, forced_wells=((25.0, 1.0),))
    est = kubo_sigma([empty, single], -1.0, [1e-3, 3e-3])
    assert np.all(est.sigma == 0.0)


@pytest.mark.slow
def test_sigma_stable_under_halved_broadening():
    p = BoxParams(400.0, 0.098, 0.05, NARROW)
    nus = np.array([2e-3, 3e-3])
    recs = run_ensemble(p, 9, 300, E_F=-1.0, nus=nus, window=0.04)
    half = run_ensemble(p, 9, 300, E_F=-1.0, nus=nus, eta_ratio=0.1, window=0.04)
    a = ensemble_kubo(recs, nus, window=0.04)
    b = ensemble_kubo(half, nus, eta_ratio=0.1, window=0.04)
    # paired per-realization differences: same levels, only the broadening changes
    diff = a.samples - b.samples
    se = diff.std(axis=0, ddof=1) / np.sqrt(diff.shape[0])
    assert np.all(np.abs(diff.mean(axis=0)) < 3 * se)
    assert np.all(np.abs(diff.mean(axis=0)) < 2 * np.maximum(a.stderr, b.stderr))
