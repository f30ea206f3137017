"""Two-well a.c. conductivity and its Mott asymptotics in d = 1, 2, 3.

The resonant-pair contribution is

    sigma = nu rho**2 S_d int_{|y| >= r(nu)} |y|**(d+1) I(y)**2 / sqrt(nu**2 - 4 I(y)**2) d|y|

with I(y) = I0 exp(-|y|/r_l) and r(nu) = r_l ln(2 I0 / nu).  Writing
exp(-(|y| - r(nu))/r_l) = cos(u) removes the inverse square-root edge and
leaves a smooth integrand on [0, pi/2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import NumericFailure, OutOfRegimeError
from .model import RegimeParams, sphere_area

QUAD_RTOL = 1e-8
PRESETS = ("mott", "white-noise")


def white_noise_regime(regime):
    """Regime with the 1D white-noise constants: I0 = 4|E|, r_l = |E|**-1/2."""
    E = abs(regime.fermi_energy)
    return regime.replace(overlap_amplitude=4.0 * E, localization_radius=E**-0.5)


def apply_preset(regime, preset):
    if preset == "mott":
        return regime
    if preset == "white-noise":
        return white_noise_regime(regime)
    raise ValueError(f"unknown preset {preset!r}")


def resonance_radius(nu, regime, preset="mott"):
    """r(nu) = r_l ln(2 I0 / nu); the white-noise preset gives r_l ln(8|E|/nu)."""
    regime = apply_preset(regime, preset)
    if nu > 2.0 * regime.I0:
        raise OutOfRegimeError(f"nu={nu} exceeds 2*I0={2 * regime.I0}; no resonant pairs")
    return regime.r_l * math.log(2.0 * regime.I0 / nu)


@dataclass(frozen=True)
class SigmaResult:
    nu: float
    sigma_integral: float
    sigma_asymptotic: float
    error_estimate: float
    d: int
    regime: RegimeParams

    @property
    def ratio(self):
        return self.sigma_integral / self.sigma_asymptotic


def _log_moment_integral(r0, rl, power):
    """int_0^{pi/2} (r0 + rl ln sec u)**power cos u du, with its error estimate."""
    def f(u):
        c = math.cos(u)
        if c <= 0.0:
            return 0.0
        return (r0 - rl * math.log(c)) ** power * c

    return integrate.quad(f, 0.0, 0.5 * math.pi, epsabs=0.0, epsrel=1e-12, limit=200)


def sigma_two_well(nu, regime, preset="mott"):
    """Resonant-pair conductivity by quadrature of the substituted integral."""
    regime = apply_preset(regime, preset)
    if nu >= 2.0 * regime.I0:
        raise OutOfRegimeError(f"nu={nu} >= 2*I0; the resonant domain is empty")
    d = regime.dimension
    rl = regime.r_l
    r0 = resonance_radius(nu, regime)
    val, err = _log_moment_integral(r0, rl, d + 1)
    if err > QUAD_RTOL * abs(val):
        raise NumericFailure("sigma quadrature did not reach 1e-8", err / abs(val))
    pref = nu**2 * regime.rho**2 * sphere_area(d) * rl / 4.0
    return SigmaResult(nu, pref * val, sigma_mott_asymptotic(nu, regime), pref * err, d, regime)


def sigma_mott_asymptotic(nu, regime, preset="mott"):
    """nu**2 rho**2 S_d r_l**(d+2) ln**(d+1)(2 I0/nu) / 4."""
    regime = apply_preset(regime, preset)
    if nu > 2.0 * regime.I0:
        raise OutOfRegimeError(f"nu={nu} exceeds 2*I0")
    d = regime.dimension
    L = math.log(2.0 * regime.I0 / nu)
    return nu**2 * regime.rho**2 * sphere_area(d) * regime.r_l ** (d + 2) * L ** (d + 1) / 4.0


def sigma_direct_integral(nu, regime):
    """Same quantity integrated in |y| without the substitution (slow reference).

    The edge singularity is integrable and handled by QUADPACK's algebraic
    weight (alpha = -1/2) on the first r_l; used only by tests.
    """
    d = regime.dimension
    rl, I0 = regime.r_l, regime.I0
    r0 = resonance_radius(nu, regime)

    def body(y):
        I = I0 * math.exp(-y / rl)
        return y ** (d + 1) * I * I / math.sqrt(nu * nu - 4 * I * I)

    # near the edge nu^2 - 4 I^2 ~ 2 nu^2 (y - r0)/r_l
    def regular(y):
        s = y - r0
        if s <= 0:
            return math.sqrt(rl / 2.0) * r0 ** (d + 1) * nu / 4.0
        return body(y) * math.sqrt(s)

    head, _ = integrate.quad(regular, r0, r0 + rl, weight="alg", wvar=(-0.5, 0.0),
                             epsabs=0, epsrel=1e-12)
    tail, _ = integrate.quad(body, r0 + rl, np.inf, epsabs=0, epsrel=1e-12, limit=200)
    return nu * regime.rho**2 * sphere_area(d) * (head + tail)


def fit_subleading_coefficient(regime, nus):
    """Coefficient c in ratio = 1 + c/L + O(1/L**2), L = ln(2 I0/nu).

    Fits (ratio - 1) L against 1/L with a quadratic and returns the intercept.
    """
    L = np.array([math.log(2.0 * regime.I0 / nu) for nu in nus])
    ratio = np.array([sigma_two_well(nu, regime).ratio for nu in nus])
    coef = np.polyfit(1.0 / L, (ratio - 1.0) * L, 2)
    return float(coef[-1])


def expected_subleading_coefficient(d):
    return (d + 1) * (1.0 - math.log(2.0))


@dataclass(frozen=True)
class OneWellReport:
    vanishes: bool
    min_spacing: float
    ratio: float
    g_mismatch: float


def one_well_sigma_vanishes(well, nu, fermi_energy, threshold=0.05):
    """Check that no intra-well level pair can absorb frequency ``nu``.

    For each level n the amplitude is fixed by g eps_n = E_F; the pair (n, m)
    then sits at spacing g |eps_n - eps_m|.  The one-well term vanishes when
    nu is small against the smallest such spacing.  ``g_mismatch`` is the
    relative change of g needed to put level m at E_F + nu instead.
    """
    levels = well.negative_levels
    if len(levels) < 2:
        return OneWellReport(True, math.inf, 0.0, math.inf)
    best = (math.inf, math.inf)
    for n, en in enumerate(levels):
        g = fermi_energy / en
        for m, em in enumerate(levels):
            if m == n:
                continue
            spacing = g * abs(en - em)
            g_m = (fermi_energy + nu) / em
            mismatch = abs(g_m - g) / g
            if spacing < best[0]:
                best = (spacing, mismatch)
    ratio = nu / best[0]
    return OneWellReport(ratio <= threshold, best[0], ratio, best[1])


def sigma_sweep(regime, nus, preset="mott"):
    """Rows (nu, sigma_integral, sigma_asym, ratio)."""
    rows = []
    for nu in nus:
        res = sigma_two_well(float(nu), regime, preset)
        rows.append((res.nu, res.sigma_integral, res.sigma_asymptotic, res.ratio))
    return rows
