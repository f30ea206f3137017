"""Inclusion-exclusion over point clusters and the density expansion of the DOS.

Wells are points ``(position, g)``.  For a functional F of finite point sets

    F(X) = sum_{Y subset X} sum_{Z subset Y} (-1)**|Y \\ Z| F(Z),

and the inner sum (the cluster term of Y) vanishes for |Y| >= 2 whenever F is
additive over its points.  Averaging over a Poisson field turns the first two
cluster orders into the one-well DOS and the pair correction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError, NumericFailure
from .model import DensityProfile, RegimeParams, WellProfile, sphere_area

MAX_CLUSTER = 6
PAIR_FACTOR = 0.5  # unordered pairs from an integral over ordered (g1, g2) and all y


@dataclass(frozen=True)
class ClusterFunctional:
    """Real function of a list of ``(position, g)`` wells."""

    evaluate: Callable = field(repr=False)
    translation_invariant: bool = True
    additive: bool = False
    label: str = "F"

    def __call__(self, points):
        return float(self.evaluate(list(points)))

    def shift_defect(self, points, shift):
        """F(X + a) - F(X)."""
        shift = np.atleast_1d(np.asarray(shift, dtype=float))
        moved = [(np.atleast_1d(np.asarray(p, float)) + shift, g) for p, g in points]
        return self(moved) - self(points)

    def clustering_defect(self, X, Y, shift):
        """F(X u (Y + a)) - F(X) - F(Y)."""
        shift = np.atleast_1d(np.asarray(shift, dtype=float))
        moved = [(np.atleast_1d(np.asarray(p, float)) + shift, g) for p, g in Y]
        return self(list(X) + moved) - self(X) - self(Y)


def _subsets(items):
    n = len(items)
    for r in range(n + 1):
        for idx in itertools.combinations(range(n), r):
            yield [items[i] for i in idx]


def cluster_term(F, Y):
    """sum_{Z subset Y} (-1)**|Y \\ Z| F(Z)."""
    Y = list(Y)
    n = len(Y)
    return sum((-1) ** (n - len(Z)) * F(Z) for Z in _subsets(Y))


def inclusion_exclusion(F, X, max_size=MAX_CLUSTER):
    """Brute-force double subset sum; equals F(X) for every F."""
    X = list(X)
    if len(X) > max_size:
        raise ConfigurationError(f"|X| = {len(X)} exceeds the limit {max_size}")
    return sum(cluster_term(F, Y) for Y in _subsets(X))


def _pair_matrix(points, overlap):
    n = len(points)
    H = np.zeros((n, n))
    for i, (xi, gi) in enumerate(points):
        H[i, i] = -gi
        for j in range(i):
            r = float(np.linalg.norm(np.atleast_1d(xi) - np.atleast_1d(points[j][0])))
            H[i, j] = H[j, i] = -overlap(r)
    return H


def level_count_functional(E, overlap=None):
    """Number of projected levels below ``E`` for a set of wells.

    The Hamiltonian is projected on the one-well ground states: diagonal -g,
    off-diagonal -I(|x_i - x_j|).  With ``overlap=None`` the wells do not
    interact and the functional is additive.
    """
    def count(points):
        if not points:
            return 0.0
        if overlap is None:
            return float(sum(-g < E for _, g in points))
        levels = np.linalg.eigvalsh(_pair_matrix(points, overlap))
        return float(np.sum(levels < E))

    return ClusterFunctional(count, True, overlap is None, f"N({E})")


def dos_one_well(E, profile, well=None):
    """sum_n mu(E/eps_n) / |eps_n| over the negative levels of the well."""
    well = well or WellProfile.exponential(1)
    E = np.asarray(E, dtype=float)
    if np.any(E >= 0):
        raise DomainError("bound-state DOS is defined for E < 0")
    total = np.zeros_like(E)
    for eps in well.negative_levels:
        total = total + profile.mu(E / eps) / abs(eps)
    return total if total.ndim else float(total)


def _gauss(order):
    return np.polynomial.legendre.leggauss(order)


def _panels(a, b, step_fn, order):
    """Gauss-Legendre nodes on panels [e_k, e_k + step_fn(e_k)] covering [a, b]."""
    edges = [a]
    while edges[-1] < b:
        edges.append(min(b, edges[-1] + step_fn(edges[-1])))
    edges = np.asarray(edges)
    xg, wg = _gauss(order)
    h = 0.5 * np.diff(edges)
    return ((edges[:-1] + h)[:, None] + h[:, None] * xg).ravel(), (h[:, None] * wg).ravel()


def _radial_nodes(regime, g_ref, cutoff, order, scale, ov):
    """Panels on [0, y_max], I(y_max) = cutoff * g_ref.

    Where I(y) exceeds the profile scale the levels move by I dy/r_l per
    step, so panels shrink to keep that below a few profile scales.
    """
    rl, I0 = regime.r_l, regime.I0
    y_max = max(rl * math.log(I0 / (cutoff * g_ref)), rl)
    y, w = _panels(0.0, y_max, lambda v: rl * min(1.0, 4.0 * scale / max(float(ov(v)), 1e-300)), order)
    d = regime.dimension
    return y, w * sphere_area(d) * y ** (d - 1)


def _t_nodes(I, width, scale, order):
    t_max = math.asinh(0.5 * width / I) + 1.0
    return _panels(0.0, t_max, lambda t: min(0.5, 4.0 * scale / (I * math.cosh(t))), order)


def _profile_scales(profile):
    lo, hi = profile.support
    if not np.isfinite(hi):
        raise ConfigurationError("pair correction needs a profile with bounded support")
    return hi - lo, (hi - lo) / 96.0


def _overlap_fn(regime, overlap):
    if overlap is not None:
        return overlap
    return lambda y: regime.I0 * np.exp(-np.asarray(y) / regime.r_l)


def integrated_correction(E, profile, regime, overlap=None, order=8, cutoff=1e-14):
    """Pair correction N2(E) to the integrated DOS (levels below E per volume).

    With delta = I sinh t the level shifts become s - |delta| = I exp(-t); both
    g-intervals [-E - s, -E - |delta|] and [-E + |delta|, -E + s] are short
    and integrated by Gauss-Legendre.
    """
    E = float(E)
    if E >= 0:
        raise DomainError("E must be negative")
    ov = _overlap_fn(regime, overlap)
    width, scale = _profile_scales(profile)
    y, wy = _radial_nodes(regime, abs(E), cutoff, order, scale, ov)
    xg, wg = _gauss(order)
    total = 0.0
    for yi, wyi in zip(y, wy):
        I = float(ov(yi))
        if I == 0.0:
            continue
        t, wt = _t_nodes(I, width, scale, order)
        delta = I * np.sinh(t)
        jac = I * np.cosh(t) * wt
        length = I * np.exp(-t)
        panels = max(1, int(math.ceil(length[0] / (4.0 * scale))))
        sub = length / panels
        acc = np.zeros_like(t)
        for k in range(panels):
            # nodes on [lo + k sub, lo + (k+1) sub] for both intervals
            frac = (k + 0.5 + 0.5 * xg[None, :])
            g_lo = (-E - I * np.cosh(t))[:, None] + frac * sub[:, None]
            g_hi = (-E + delta)[:, None] + frac * sub[:, None]
            F_lo = profile.mu(g_lo + delta[:, None]) * profile.mu(g_lo - delta[:, None])
            F_hi = profile.mu(g_hi + delta[:, None]) * profile.mu(g_hi - delta[:, None])
            acc += 0.5 * sub * ((F_lo - F_hi) @ wg)
        # even in delta: 2 for t < 0; dg1 dg2 = 2 dg ddelta
        total += wyi * 4.0 * float(jac @ acc)
    return PAIR_FACTOR * total


def dos_two_well_correction(E, profile, regime, overlap=None, step=None, rtol=1e-6):
    """rho2(E) = dN2/dE by a centered difference with step 1e-3 |E|.

    The difference is repeated at a higher quadrature order; a relative
    change above ``rtol`` raises NumericFailure.
    """
    E = float(E)
    if E >= 0:
        raise DomainError("E must be negative")
    h = step or 1e-3 * abs(E)

    def deriv(order):
        return (integrated_correction(E + h, profile, regime, overlap, order)
                - integrated_correction(E - h, profile, regime, overlap, order)) / (2 * h)

    coarse, fine = deriv(6), deriv(8)
    scale = max(abs(fine), 1e-300)
    if abs(fine - coarse) > rtol * scale and abs(fine - coarse) > 1e-30:
        raise NumericFailure("pair correction quadrature not converged", abs(fine - coarse) / scale)
    return fine


def pair_correction_density(E, profile, regime, overlap=None, order=10, cutoff=1e-14):
    """rho2(E) from the derivative taken under the integral sign.

    rho2 = 1/2 * 2 int dy ddelta [F(-E-s) + F(-E+s) - F(-E-|delta|) - F(-E+|delta|)],
    F(g) = mu(g + delta) mu(g - delta).  Independent of the centered difference.
    """
    E = float(E)
    ov = _overlap_fn(regime, overlap)
    width, scale = _profile_scales(profile)
    y, wy = _radial_nodes(regime, abs(E), cutoff, order, scale, ov)
    total = 0.0

    def F(g, d):
        return profile.mu(g + d) * profile.mu(g - d)

    for yi, wyi in zip(y, wy):
        I = float(ov(yi))
        if I == 0.0:
            continue
        t, wt = _t_nodes(I, width, scale, order)
        delta = I * np.sinh(t)
        s = I * np.cosh(t)
        body = F(-E - s, delta) + F(-E + s, delta) - F(-E - delta, delta) - F(-E + delta, delta)
        total += wyi * 2.0 * float((I * np.cosh(t) * wt) @ body)
    return 2.0 * PAIR_FACTOR * total


def monte_carlo_pair_correction(E, profile, regime, rng, n_samples=200_000, bin_width=None,
                                overlap=None, y_max=None):
    """Histogram oracle: paired level differences over sampled (y, g1, g2).

    Each sample contributes +1 per pair level and -1 per bare level inside the
    bin around E; ``rho2 = PAIR_FACTOR * mu**2 * V * mean / bin_width``.
    Returns ``(estimate, standard_error)``.
    """
    ov = _overlap_fn(regime, overlap)
    d = regime.dimension
    bin_width = bin_width or 0.02 * abs(E)
    if y_max is None:
        y_max = regime.r_l * math.log(regime.I0 / (1e-6 * bin_width))
    u = rng.random(n_samples)
    y = y_max * u ** (1.0 / d)
    volume = sphere_area(d) * y_max**d / d
    g1 = profile.sample(rng, n_samples)
    g2 = profile.sample(rng, n_samples)
    I = ov(y)
    g, delta = 0.5 * (g1 + g2), 0.5 * (g1 - g2)
    s = np.hypot(delta, I)
    lo, hi = E - 0.5 * bin_width, E + 0.5 * bin_width

    def inside(v):
        return ((v >= lo) & (v < hi)).astype(float)

    c = inside(-g - s) + inside(-g + s) - inside(-g1) - inside(-g2)
    pref = PAIR_FACTOR * profile.total_density**2 * volume / bin_width
    return pref * c.mean(), pref * c.std(ddof=1) / math.sqrt(n_samples)


@dataclass(frozen=True)
class DosCurve:
    energies: np.ndarray = field(repr=False)
    rho1: np.ndarray = field(repr=False)
    rho2: np.ndarray = field(repr=False)
    profile: DensityProfile = field(repr=False)

    def rows(self):
        mu = self.profile.total_density
        return [(float(e), float(a), float(b), mu)
                for e, a, b in zip(self.energies, self.rho1, self.rho2)]


def dos_curve(energies, profile, regime, well=None, overlap=None):
    energies = np.asarray(energies, dtype=float)
    rho1 = np.asarray(dos_one_well(energies, profile, well), dtype=float)
    rho2 = np.array([dos_two_well_correction(e, profile, regime, overlap) for e in energies])
    return DosCurve(energies, rho1, rho2, profile)


def ratio_slope(E, profile, regime, mus, overlap=None):
    """Log-log slope of |rho2/rho1| against the total density."""
    ratios = []
    for mu in mus:
        p = profile.scaled(mu / profile.total_density)
        ratios.append(abs(dos_two_well_correction(E, p, regime, overlap)) / dos_one_well(E, p))
    return float(np.polyfit(np.log(mus), np.log(ratios), 1)[0])
