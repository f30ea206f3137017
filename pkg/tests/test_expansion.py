import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mottlab.errors import ConfigurationError, DomainError, NumericFailure
from mottlab.expansion import (ClusterFunctional, cluster_term, dos_curve, dos_one_well,
                               dos_two_well_correction, inclusion_exclusion, level_count_functional,
                               monte_carlo_pair_correction, pair_correction_density, ratio_slope)
from mottlab.model import DensityProfile, RegimeParams, WellProfile

REG1 = RegimeParams(1, -1.0, 1e-3)
PROFILE = DensityProfile.gaussian(1e-3, 1.0, 0.1)

wells = st.lists(st.tuples(st.floats(-20, 20), st.floats(0.5, 2.0)), min_size=0, max_size=5)


@given(wells, st.floats(-3.0, -0.1))
def test_inclusion_exclusion_reconstructs_F(X, E):
    F = level_count_functional(E, overlap=lambda r: math.exp(-r))
    assert inclusion_exclusion(F, X) == pytest.approx(F(X), abs=1e-9)


@given(wells)
def test_inclusion_exclusion_arbitrary_functional(X):
    F = ClusterFunctional(lambda pts: sum(g * g for _, g in pts) ** 1.5, False)
    assert inclusion_exclusion(F, X) == pytest.approx(F(X), rel=1e-9, abs=1e-9)


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(0.5, 2.0)), min_size=2, max_size=5),
       st.floats(-3.0, -0.1))
def test_cluster_terms_vanish_for_additive(Y, E):
    F = level_count_functional(E)
    assert F.additive
    assert cluster_term(F, Y) == 0.0


def test_single_cluster_term_is_F():
    F = level_count_functional(-0.5)
    assert cluster_term(F, [(0.0, 1.0)]) == F([(0.0, 1.0)]) == 1.0
    assert cluster_term(F, []) == 0.0


def test_inclusion_exclusion_size_limit():
    F = level_count_functional(-0.5)
    with pytest.raises(ConfigurationError):
        inclusion_exclusion(F, [(float(i), 1.0) for i in range(7)])


@given(wells, st.floats(-50, 50))
@settings(max_examples=20)
def test_level_count_translation_invariant(X, a):
    F = level_count_functional(-1.0, overlap=lambda r: math.exp(-r))
    assert F.shift_defect(X, a) == 0.0


def test_level_count_clusters_far_apart():
    F = level_count_functional(-1.0, overlap=lambda r: math.exp(-2 * r))
    X = [(0.0, 1.1), (1.0, 0.9)]
    Y = [(0.0, 1.3), (0.5, 0.95)]
    assert F.clustering_defect(X, Y, 400.0) == 0.0
    # a close pair hybridizes: the lower level moves below -1
    assert F([(0.0, 1.0), (1.0, 1.0)]) == 1.0
    assert F([(0.0, 0.99), (1.0, 0.99)]) == 1.0


def test_one_well_dos_is_mu_of_minus_E():
    E = np.array([-1.2, -1.0, -0.85])
    assert np.allclose(dos_one_well(E, PROFILE), PROFILE.mu(-E))
    assert dos_one_well(-1.0, PROFILE, WellProfile.delta()) == pytest.approx(float(PROFILE.mu(1.0)))


def test_one_well_dos_rejects_positive_energy():
    with pytest.raises(DomainError):
        dos_one_well(0.1, PROFILE)


def test_rho2_frozen_reference():
    # integrated-count difference against the derivative-under-the-integral form
    val = dos_two_well_correction(-1.0, PROFILE, REG1)
    direct = pair_correction_density(-1.0, PROFILE, REG1)
    assert val == pytest.approx(-2.06741e-5, rel=1e-4)
    assert val == pytest.approx(direct, rel=1e-4)


@pytest.mark.slow
def test_rho2_against_monte_carlo():
    rng = np.random.default_rng(11)
    est, se = monte_carlo_pair_correction(-1.0, PROFILE, REG1, rng, n_samples=2_000_000,
                                          bin_width=0.01)
    val = pair_correction_density(-1.0, PROFILE, REG1)
    assert abs(est - val) < 4 * se + 1e-3 * abs(val)


def test_rho2_quadratic_in_density():
    a = dos_two_well_correction(-1.0, PROFILE, REG1)
    b = dos_two_well_correction(-1.0, PROFILE.scaled(2.0), REG1)
    assert b == pytest.approx(4 * a, rel=1e-10)


def test_ratio_slope_is_one():
    assert ratio_slope(-1.0, PROFILE, REG1, [1e-4, 1e-3, 1e-2]) == pytest.approx(1.0, abs=1e-6)


def test_zero_overlap_gives_no_correction():
    assert dos_two_well_correction(-1.0, PROFILE, REG1, overlap=lambda r: 0.0 * r) == 0.0


def test_rho2_depletes_centre_and_feeds_wings():
    # level repulsion moves weight from the peak of mu into its flanks, symmetrically
    lo, hi = (pair_correction_density(e, PROFILE, REG1) for e in (-1.2, -0.8))
    assert lo > 0 and hi > 0
    assert lo == pytest.approx(hi, rel=1e-8)


def test_rho2_in_three_dimensions():
    reg = RegimeParams(3, -1.0, 1e-3)
    val = dos_two_well_correction(-1.0, PROFILE, reg)
    assert math.isfinite(val) and val < 0


def test_dos_curve_rows():
    curve = dos_curve([-1.1, -1.0], PROFILE, REG1)
    rows = curve.rows()
    assert len(rows) == 2 and rows[0][3] == 1e-3
    assert rows[1][2] == pytest.approx(-2.06741e-5, rel=1e-4)
