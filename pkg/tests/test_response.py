import math

import pytest
from hypothesis import given, strategies as st

from mottlab.errors import OutOfRegimeError
from mottlab.model import RegimeParams, WellProfile
from mottlab.response import (expected_subleading_coefficient, fit_subleading_coefficient,
                              one_well_sigma_vanishes, resonance_radius, sigma_direct_integral,
                              sigma_mott_asymptotic, sigma_sweep, sigma_two_well)

# 30-digit tanh-sinh values of the substituted integral at nu = 1e-4, I0 = r_l = rho = 1
REFERENCE = {1: 5.22142917390913102e-07, 2: 1.68086774398039105e-05, 3: 3.45191419380552402e-04}


@pytest.mark.parametrize("d", [1, 2, 3])
def test_reference_values(d):
    res = sigma_two_well(1e-4, RegimeParams(d, -1.0, 1e-4))
    assert res.sigma_integral == pytest.approx(REFERENCE[d], rel=1e-10)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_substitution_matches_direct_integral(d):
    reg = RegimeParams(d, -1.0, 1e-3)
    assert sigma_two_well(1e-3, reg).sigma_integral == pytest.approx(
        sigma_direct_integral(1e-3, reg), rel=1e-9)


def test_resonance_radius_values():
    reg = RegimeParams(1, -1.0, 1e-4)
    assert resonance_radius(1e-4, reg) == pytest.approx(math.log(2e4))
    assert resonance_radius(2.0, reg) == 0.0
    assert resonance_radius(1e-4, reg, "white-noise") == pytest.approx(math.log(8e4))
    with pytest.raises(OutOfRegimeError):
        resonance_radius(2.5, reg)
    with pytest.raises(OutOfRegimeError):
        sigma_two_well(2.0, reg)


@pytest.mark.parametrize("d,bound", [(1, 1.10), (2, 1.10), (3, 1.15)])
def test_ratio_approaches_one_from_above(d, bound):
    reg = RegimeParams(d, -1.0, 1e-4)
    ratios = [sigma_two_well(nu, reg).ratio for nu in (1e-3, 1e-5, 1e-8)]
    assert all(r > 1 for r in ratios)
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[-1] <= bound


@pytest.mark.parametrize("d", [1, 2, 3])
def test_subleading_coefficient(d):
    reg = RegimeParams(d, -1.0, 1e-4)
    nus = [10.0**-k for k in range(4, 13)]
    c = fit_subleading_coefficient(reg, nus)
    assert c == pytest.approx(expected_subleading_coefficient(d), rel=0.02)


def test_cli_example_ratio_window():
    ratio = sigma_two_well(1e-6, RegimeParams(2, -1.0, 1e-6)).ratio
    assert 1.0 <= ratio <= 1.15


@given(st.floats(1e-10, 1e-2), st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_rho_squared_homogeneity(nu, rho, lam):
    reg = RegimeParams(1, -1.0, nu, rho=rho)
    a = sigma_two_well(nu, reg).sigma_integral
    b = sigma_two_well(nu, reg.replace(rho=lam * rho)).sigma_integral
    assert b == pytest.approx(lam**2 * a, rel=1e-9)


@given(st.integers(1, 3), st.floats(1e-10, 1e-2))
def test_integral_exceeds_asymptotic(d, nu):
    reg = RegimeParams(d, -1.0, nu)
    assert sigma_two_well(nu, reg).sigma_integral > sigma_mott_asymptotic(nu, reg)


def test_white_noise_preset_changes_amplitude():
    reg = RegimeParams(1, -1.0, 1e-4)
    a = sigma_two_well(1e-4, reg, "white-noise")
    assert a.regime.I0 == 4.0


def test_one_well_term_vanishes_for_single_level():
    assert one_well_sigma_vanishes(WellProfile.poschl_teller(), 1e-4, -1.0).vanishes


def test_one_well_term_with_two_levels():
    well = WellProfile("exponential_ground_state_d", 1, (-1.0, -0.25))
    rep = one_well_sigma_vanishes(well, 1e-3, -1.0)
    assert rep.vanishes and rep.min_spacing == pytest.approx(0.75)
    assert not one_well_sigma_vanishes(well, 0.5, -1.0).vanishes


def test_sweep_rows():
    rows = sigma_sweep(RegimeParams(1, -1.0, 1e-4), [1e-4, 1e-6])
    assert len(rows) == 2 and rows[0][3] > rows[1][3] > 1
