"""Maryland model: an incommensurate potential with an explicit spectrum.

H = hopping + g tan(pi(alpha.t + omega)) on Z^d.  Its eigenvalues solve
N(E_t) = frac(alpha.t + omega), with the integrated DOS

    N(E) = int_{T^d} [1/2 + arctan((E - w(k))/g)/pi] dk / (2 pi)**d

(a Cauchy distribution of width g smeared by the band w(k)).  Nearby energies
on the lattice are therefore controlled by how well alpha.x approximates an
integer, which makes resonance distances grow like a power of 1/nu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable

import numpy as np

from .errors import DomainError, InvalidParameterError, NumericFailure

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_NODES = {1: 2048, 2: 256}
N_TOL = 1e-12


def cosine_band(k):
    """w(k) = 2 sum_i cos k_i; ``k`` has the torus coordinates on the last axis."""
    return 2.0 * np.cos(k).sum(axis=-1)


@dataclass(frozen=True)
class MarylandParams:
    dimension: int = 1
    g: float = 1.0
    alpha: tuple = (GOLDEN,)
    omega: float = 0.3
    C: float | None = None
    beta: float | None = None
    hopping: Callable = field(default=cosine_band, repr=False)
    nodes: int | None = None

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise InvalidParameterError("dimension", "Maryland sweeps support d = 1, 2")
        if not self.g > 0:
            raise InvalidParameterError("g", "coupling must be positive")
        alpha = tuple(float(a) for a in np.atleast_1d(self.alpha))
        if len(alpha) != self.dimension:
            raise InvalidParameterError("alpha", f"need {self.dimension} components")
        object.__setattr__(self, "alpha", alpha)
        if not 0.0 <= self.omega < 1.0:
            raise InvalidParameterError("omega", "phase must lie in [0, 1)")
        if self.C is not None and self.C <= 0:
            raise InvalidParameterError("C", "must be positive")
        if self.beta is not None and self.beta <= 0:
            raise InvalidParameterError("beta", "Diophantine exponent must be positive")

    @property
    def node_count(self):
        return self.nodes or DEFAULT_NODES[self.dimension]

    def band_samples(self):
        """w(k) on the periodic trapezoid grid of the torus (equal weights)."""
        n = self.node_count
        k1 = 2.0 * math.pi * (np.arange(n) + 0.5) / n
        grids = np.meshgrid(*([k1] * self.dimension), indexing="ij")
        k = np.stack([g.ravel() for g in grids], axis=-1)
        return np.asarray(self.hopping(k), dtype=float)

    def with_constants(self, C, beta):
        return MarylandParams(self.dimension, self.g, self.alpha, self.omega, C, beta,
                              self.hopping, self.nodes)


class _Band:
    """Cached band samples for repeated N(E) and rho(E) evaluations."""

    def __init__(self, params):
        self.g = params.g
        self.w = params.band_samples()

    def N(self, E, chunk=4096):
        E = np.atleast_1d(np.asarray(E, dtype=float))
        out = np.empty(E.shape)
        flat, res = E.ravel(), out.ravel()
        for s in range(0, flat.size, chunk):
            e = flat[s:s + chunk, None]
            res[s:s + chunk] = 0.5 + np.arctan((e - self.w[None, :]) / self.g).mean(axis=1) / math.pi
        return out

    def rho(self, E, chunk=4096):
        E = np.atleast_1d(np.asarray(E, dtype=float))
        out = np.empty(E.shape)
        flat, res = E.ravel(), out.ravel()
        for s in range(0, flat.size, chunk):
            e = flat[s:s + chunk, None]
            res[s:s + chunk] = (self.g / ((self.w[None, :] - e) ** 2 + self.g**2)).mean(axis=1) / math.pi
        return out


def integrated_dos(E, params):
    """N(E) in (0, 1); scalar in, scalar out."""
    val = _Band(params).N(E)
    return float(val[0]) if np.ndim(E) == 0 else val


def density_of_states(E, params):
    val = _Band(params).rho(E)
    return float(val[0]) if np.ndim(E) == 0 else val


def _invert(band, targets, g, max_iter=200):
    """Solve N(E) = target for every target by safeguarded Newton inside a bracket.

    The band only shifts the Cauchy CDF by at most max|w|, so
    g tan(pi(target - 1/2)) -+ (max|w| + g) brackets the root.  Each step
    halves the bracket unless the Newton step lands inside it.
    """
    t = np.asarray(targets, dtype=float)
    if np.any(t <= 0.0) or np.any(t >= 1.0):
        raise DomainError("target N = 0 or 1 sends E to -inf/+inf; the eigenvalue is unbounded")
    wmax = float(np.max(np.abs(band.w)))
    centre = g * np.tan(math.pi * (t - 0.5))
    lo, hi = centre - wmax - g, centre + wmax + g
    E = centre.copy()
    for _ in range(max_iter):
        f = band.N(E) - t
        done = np.abs(f) < N_TOL
        if done.all():
            return E
        lo = np.where(f < 0, E, lo)
        hi = np.where(f > 0, E, hi)
        step = E - f / band.rho(E)
        inside = (step > lo) & (step < hi)
        E = np.where(done, E, np.where(inside, step, 0.5 * (lo + hi)))
    resid = float(np.max(np.abs(band.N(E) - t)))
    raise NumericFailure("eigenvalue inversion did not reach 1e-12", resid)


def site_targets(sites, params):
    sites = np.atleast_2d(np.asarray(sites, dtype=float))
    phase = sites @ np.asarray(params.alpha) + params.omega
    return phase - np.floor(phase)


def eigenvalue_at_site(t, params):
    """E_t with N(E_t) = frac(alpha.t + omega)."""
    band = _Band(params)
    return float(_invert(band, site_targets(np.atleast_1d(t)[None, :], params), params.g)[0])


def window_sites(params, half_width):
    r = np.arange(-half_width, half_width + 1)
    if params.dimension == 1:
        return r[:, None]
    return np.array(list(product(r, repeat=params.dimension)))


@dataclass(frozen=True)
class MarylandSpectrum:
    sites: np.ndarray = field(repr=False)
    energies: np.ndarray = field(repr=False)
    params: MarylandParams = field(repr=False)

    def rows(self):
        return [(*map(int, s), float(e)) for s, e in zip(self.sites, self.energies)]

    def max_gap(self, E_lo, E_hi):
        e = np.sort(self.energies[(self.energies >= E_lo) & (self.energies <= E_hi)])
        return float(np.max(np.diff(e))) if e.size > 1 else math.inf


def spectrum(params, half_width):
    sites = window_sites(params, half_width)
    band = _Band(params)
    return MarylandSpectrum(sites, _invert(band, site_targets(sites, params), params.g), params)


def calibrate_diophantine(alpha, q_max):
    """Empirical (C, beta) for 1D alpha from the record minima of ||q alpha||.

    beta is the log-log slope of the record minima; C is then the smallest
    ||q alpha|| q**beta over 1 <= q <= q_max.
    """
    q = np.arange(1, q_max + 1)
    dist = np.abs(q * alpha - np.round(q * alpha))
    running = np.minimum.accumulate(dist)
    records = np.nonzero(np.r_[True, running[1:] < running[:-1]])[0]
    if records.size < 3:
        raise NumericFailure("too few record approximations to fit beta", float(records.size))
    beta = -float(np.polyfit(np.log(q[records]), np.log(dist[records]), 1)[0])
    C = float(np.min(dist * q.astype(float) ** beta))
    return C, beta


def r1_formula(nu, C, beta, rho):
    """(nu0/nu)**(1/beta) with nu0 = C/rho(E)."""
    return (C / rho / nu) ** (1.0 / beta)


@dataclass(frozen=True)
class ResonanceDistance:
    nu: float
    formula: float
    empirical: float
    inconclusive: bool


def _min_resonant_distance_1d(energies, inside, nu):
    n = energies.size
    for D in range(1, n):
        both = inside[D:] & inside[:-D]
        if not both.any():
            continue
        if np.min(np.abs(energies[D:] - energies[:-D])[both]) <= nu:
            return D
    return None


def _min_resonant_distance_2d(sites, energies, inside, nu):
    idx = np.nonzero(inside)[0]
    pts, e = sites[idx], energies[idx]
    best = None
    order = np.argsort(e)
    pts, e = pts[order], e[order]
    j0 = 0
    for i in range(e.size):
        while e[i] - e[j0] > nu:
            j0 += 1
        if j0 < i:
            d = np.sqrt(np.sum((pts[j0:i] - pts[i]) ** 2, axis=1)).min()
            best = d if best is None else min(best, d)
    return best


def resonance_distance(nu, params, half_width=2000, energy_window=(-1.0, 1.0), spec=None):
    """Formula and empirical shortest distance between sites with |dE| <= nu."""
    if not nu > 0:
        raise InvalidParameterError("nu", "must be positive")
    spec = spec or spectrum(params, half_width)
    lo, hi = energy_window
    inside = (spec.energies >= lo) & (spec.energies <= hi)
    if params.dimension == 1:
        emp = _min_resonant_distance_1d(spec.energies, inside, nu)
    else:
        emp = _min_resonant_distance_2d(spec.sites, spec.energies, inside, nu)
    rho = density_of_states(0.5 * (lo + hi), params)
    C, beta = params.C, params.beta
    if C is None or beta is None:
        C, beta = calibrate_diophantine(params.alpha[0], 2 * half_width)
    formula = max(1.0, r1_formula(nu, C, beta, rho))
    return ResonanceDistance(nu, formula, float(emp) if emp is not None else math.nan, emp is None)


def distance_exponent(results):
    """Log-log slope of the empirical distance against nu (conclusive points only)."""
    pts = [(r.nu, r.empirical) for r in results if not r.inconclusive and r.empirical > 1]
    if len(pts) < 3:
        raise NumericFailure("too few conclusive resonance distances", float(len(pts)))
    nu, d = np.array(pts).T
    return float(np.polyfit(np.log(nu), np.log(d), 1)[0])


def sigma_order_estimate(nu, C, beta, rho, r_l):
    """exp(-(nu1/nu)**(1/beta)), nu1 = 2**beta nu0 / r_l**beta, nu0 = C/rho."""
    nu1 = 2.0**beta * (C / rho) / r_l**beta
    return math.exp(-((nu1 / nu) ** (1.0 / beta)))


@dataclass(frozen=True)
class ContrastRow:
    nu: float
    r_random: float
    r1_formula: float
    r1_empirical: float


def contrast_report(params, nus, regime, half_width=2000, energy_window=(-1.0, 1.0)):
    """Logarithmic r(nu) of the random model next to the polynomial r1(nu)."""
    from .response import resonance_radius

    spec = spectrum(params, half_width)
    rows = []
    for nu in nus:
        rd = resonance_distance(nu, params, half_width, energy_window, spec)
        rows.append(ContrastRow(float(nu), resonance_radius(nu, regime), rd.formula, rd.empirical))
    return rows
