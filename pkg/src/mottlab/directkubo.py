"""Direct 1D simulation: random sech**2 wells in a box, exact levels, Kubo sum.

V(x) = -sum_j 2 g_j sech**2(sqrt(g_j)(x - xi_j)) with Poisson centers xi_j; each
well alone has exactly one bound level, at -g_j.  The box [0, L] carries
Dirichlet walls and a three-point Laplacian, so H is symmetric tridiagonal and
only the negative part of its spectrum is computed.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats
from scipy.linalg import eigh_tridiagonal

from .errors import (BroadeningError, ConfigurationError, IllConditionedFit,
                     InvalidParameterError, NumericFailure)
from .model import DensityProfile

GRID_LIMIT = 0.01
ORTHO_TOL = 1e-10
ETA_RATIO = 0.2
WELL_REACH = 40.0  # sech**2 < 1e-34 beyond this many well radii


@dataclass(frozen=True)
class BoxParams:
    L: float
    h: float
    mu: float = 0.0
    profile: DensityProfile | None = None

    def __post_init__(self):
        if not (self.L > 0 and self.h > 0):
            raise InvalidParameterError("L", "box length and spacing must be positive")
        if self.mu < 0:
            raise InvalidParameterError("mu", "density must be non-negative")
        if self.mu > 0 and self.profile is None:
            raise InvalidParameterError("profile", "a density profile is needed for mu > 0")
        if self.profile is not None:
            self.check_resolution(self.profile.support[1])

    def check_resolution(self, g_max):
        if self.h**2 * g_max >= GRID_LIMIT:
            raise ConfigurationError(
                f"h**2 * max g = {self.h**2 * g_max:.4g} must stay below {GRID_LIMIT}")

    @property
    def grid(self):
        n = int(round(self.L / self.h)) - 1
        return self.h * np.arange(1, n + 1)


@dataclass(frozen=True)
class BoxRealization:
    L: float
    h: float
    centers: np.ndarray = field(repr=False)
    amplitudes: np.ndarray = field(repr=False)
    energies: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)
    seed: object = None

    @property
    def grid(self):
        return self.h * np.arange(1, self.vectors.shape[0] + 1)

    def dipole_matrix(self):
        """X_mn = sum_i x_i psi_m(x_i) psi_n(x_i) with unit-norm grid vectors."""
        v = self.vectors
        return (v.T * self.grid) @ v


def potential(x, centers, amplitudes):
    V = np.zeros_like(x)
    for xi, g in zip(centers, amplitudes):
        k = math.sqrt(g)
        lo, hi = np.searchsorted(x, [xi - WELL_REACH / k, xi + WELL_REACH / k])
        V[lo:hi] -= 2.0 * g / np.cosh(k * (x[lo:hi] - xi)) ** 2
    return V


def sample_realization(params, seed, forced_wells=()):
    """Draw wells, build H on the grid and diagonalize its negative part.

    ``seed`` is anything ``numpy.random.default_rng`` accepts.  ``forced_wells``
    adds fixed ``(center, g)`` pairs on top of the Poisson sample.
    """
    rng = np.random.default_rng(seed)
    n_wells = rng.poisson(params.mu * params.L) if params.mu > 0 else 0
    centers = rng.uniform(0.0, params.L, n_wells)
    amps = params.profile.sample(rng, n_wells) if n_wells else np.empty(0)
    if forced_wells:
        fc, fg = np.array(forced_wells, dtype=float).T
        centers = np.concatenate([centers, fc])
        amps = np.concatenate([amps, fg])
    if amps.size:
        params.check_resolution(float(amps.max()))
    x = params.grid
    h = params.h
    if amps.size == 0:
        return BoxRealization(params.L, h, centers, amps, np.empty(0), np.empty((x.size, 0)), seed)
    diag = 2.0 / h**2 + potential(x, centers, amps)
    off = np.full(x.size - 1, -1.0 / h**2)
    lower = -2.0 * float(amps.max()) - 1.0
    energies, vectors = eigh_tridiagonal(diag, off, select="v", select_range=(lower, 0.0))
    if energies.size:
        resid = np.abs(vectors.T @ vectors - np.eye(energies.size)).max()
        if resid > ORTHO_TOL:
            raise NumericFailure("eigenvectors lost orthonormality", resid)
    return BoxRealization(params.L, h, centers, amps, energies, vectors, seed)


@dataclass(frozen=True)
class DosHistogram:
    edges: np.ndarray
    density: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def dos_histogram(realizations, edges):
    """Levels per unit length and energy, with Poisson error bars."""
    realizations = list(realizations)
    if not realizations:
        raise InvalidParameterError("realizations", "need at least one realization")
    edges = np.asarray(edges, dtype=float)
    if np.any(edges > 0):
        raise InvalidParameterError("edges", "bins must lie at negative energies")
    counts = np.zeros(edges.size - 1)
    length = 0.0
    for r in realizations:
        counts += np.histogram(r.energies, edges)[0]
        length += r.L
    norm = length * np.diff(edges)
    return DosHistogram(edges, counts / norm, np.sqrt(counts) / norm, counts)


def _gauss_delta(u, eta):
    return np.exp(-0.5 * (u / eta) ** 2) / (math.sqrt(2.0 * math.pi) * eta)


def pair_weights(En, Em, E_F, nu, eta, window=None):
    """Weight of the level pair (n, m) in the Kubo sum.

    Sharp Fermi level: delta_eta(E_F - E_n) delta_eta(E_F + nu - E_m).
    With ``window = W`` the same product is averaged over E_F uniform on
    [E_F - W/2, E_F + W/2]; the Gaussian integral is done in closed form.
    """
    if window is None:
        return _gauss_delta(E_F - En, eta) * _gauss_delta(E_F + nu - Em, eta)
    a, b = E_F - 0.5 * window, E_F + 0.5 * window
    c = 0.5 * (En + Em - nu)
    s = eta / math.sqrt(2.0)
    frac = 0.5 * (special.erf((b - c) / (math.sqrt(2.0) * s)) - special.erf((a - c) / (math.sqrt(2.0) * s)))
    return _gauss_delta(Em - En - nu, math.sqrt(2.0) * eta) * frac / window


def _check_broadening(nus, etas):
    for nu, eta in zip(nus, etas):
        if not eta > 0 or eta > ETA_RATIO * nu * (1 + 1e-12):
            raise BroadeningError(f"eta={eta:g} violates 0 < eta <= nu/5 at nu={nu:g}")


def kubo_contributions(real, E_F, nus, etas, window=None):
    """Per-realization sigma(nu) = nu**2/L sum_{m != n} w_mn |X_mn|**2."""
    out = np.zeros(len(nus))
    E = real.energies
    if E.size < 2:
        return out
    X2 = real.dipole_matrix() ** 2
    np.fill_diagonal(X2, 0.0)
    for i, (nu, eta) in enumerate(zip(nus, etas)):
        W = pair_weights(E[:, None], E[None, :], E_F, nu, eta, window)
        out[i] = nu * nu * float(np.sum(W * X2)) / real.L
    return out


@dataclass(frozen=True)
class KuboEstimate:
    nus: np.ndarray
    sigma: np.ndarray
    stderr: np.ndarray
    eta: np.ndarray
    R: int
    window: float | None = None
    samples: np.ndarray | None = field(default=None, repr=False)

    def rows(self):
        return [(float(n), float(s), float(e)) for n, s, e in zip(self.nus, self.sigma, self.stderr)]


def _etas(nus, eta, eta_ratio):
    nus = np.asarray(nus, dtype=float)
    if eta is None:
        return nus * eta_ratio
    return np.broadcast_to(np.asarray(eta, dtype=float), nus.shape).copy()


def _estimate(samples, nus, etas, window):
    R = samples.shape[0]
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.full(mean.shape, np.inf)
    return KuboEstimate(np.asarray(nus, float), mean, se, etas, R, window, samples)


def kubo_sigma(realizations, E_F, nus, eta=None, eta_ratio=ETA_RATIO, window=None):
    """Ensemble-averaged broadened Kubo conductivity."""
    nus = np.asarray(nus, dtype=float)
    etas = _etas(nus, eta, eta_ratio)
    _check_broadening(nus, etas)
    samples = np.array([kubo_contributions(r, E_F, nus, etas, window) for r in realizations])
    return _estimate(samples, nus, etas, window)


@dataclass(frozen=True)
class EnsembleRecord:
    """What survives of one realization after reduction (levels + Kubo sums)."""

    index: int
    L: float
    energies: np.ndarray = field(repr=False)
    kubo: np.ndarray = field(repr=False)


def job_seeds(master_seed, count):
    """Independent child seeds; identical for any thread count."""
    return np.random.SeedSequence(master_seed).spawn(count)


def run_ensemble(params, master_seed, count, E_F=None, nus=(), eta=None, eta_ratio=ETA_RATIO,
                 window=None, threads=1, forced_wells=()):
    """Sample ``count`` realizations and reduce each to levels and Kubo sums."""
    nus = np.asarray(nus, dtype=float)
    etas = _etas(nus, eta, eta_ratio)
    if nus.size:
        _check_broadening(nus, etas)
    seeds = job_seeds(master_seed, count)

    def job(i):
        real = sample_realization(params, seeds[i], forced_wells)
        k = kubo_contributions(real, E_F, nus, etas, window) if nus.size else np.empty(0)
        return EnsembleRecord(i, real.L, real.energies, k)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(job, range(count)))
    return [job(i) for i in range(count)]


def ensemble_kubo(records, nus, eta=None, eta_ratio=ETA_RATIO, window=None):
    nus = np.asarray(nus, dtype=float)
    samples = np.array([r.kubo for r in records])
    return _estimate(samples, nus, _etas(nus, eta, eta_ratio), window)


def calibrate_overlap(g=1.0, h=0.02, separations=(8.0, 10.0, 12.0, 14.0), margin=30.0):
    """Fit I(y) = I0 exp(-y/r_l) from the splitting of two equal wells.

    For equal wells the projected splitting is 2 I, so I = (E2 - E1)/2.
    Returns ``(I0, r_l)``.
    """
    I = []
    for y in separations:
        L = y + 2.0 * margin
        params = BoxParams(L, h)
        params.check_resolution(g)
        real = sample_realization(params, 0, forced_wells=((margin, g), (margin + y, g)))
        if real.energies.size < 2:
            raise NumericFailure(f"pair at y={y} lost its excited level")
        I.append(0.5 * (real.energies[1] - real.energies[0]))
    slope, icpt = np.polyfit(np.asarray(separations), np.log(I), 1)
    return float(math.exp(icpt)), float(-1.0 / slope)


@dataclass(frozen=True)
class MottFit:
    p: float
    p_stderr: float
    ci: tuple
    amplitude: float
    condition: float
    chi2_red: float

    def contains(self, value):
        return self.ci[0] <= value <= self.ci[1]


def mott_scaling_fit(estimate, I0, min_decades=1.45, max_rel_err=0.3, max_condition=1e8,
                     level=0.95):
    """Weighted least squares of ln(sigma/nu**2) on ln ln(2 I0/nu).

    Weights are the inverse variances (se/sigma)**2 of ln sigma.  When the
    reduced chi**2 exceeds 1 the covariance is scaled by it and a Student-t
    quantile is used for the interval.
    """
    nus = np.asarray(estimate.nus, dtype=float)
    sig = np.asarray(estimate.sigma, dtype=float)
    se = np.asarray(estimate.stderr, dtype=float)
    if nus.size < 4:
        raise IllConditionedFit("need at least 4 frequencies", math.inf)
    if math.log10(nus.max() / nus.min()) < min_decades - 1e-12:
        raise IllConditionedFit(f"frequencies span less than {min_decades} decades", math.inf)
    if np.any(sig <= 0):
        raise IllConditionedFit("sigma must be positive at every frequency", math.inf)
    rel = se / sig
    if np.any(rel >= max_rel_err):
        raise IllConditionedFit(f"relative standard error {rel.max():.2f} exceeds {max_rel_err}",
                                math.inf)
    if np.any(nus >= 2.0 * I0):
        raise IllConditionedFit("nu must stay below 2 I0", math.inf)
    X = np.column_stack([np.ones_like(nus), np.log(np.log(2.0 * I0 / nus))])
    yv = np.log(sig / nus**2)
    w = 1.0 / np.where(rel > 0, rel, 1e-300) ** 2
    A = X * np.sqrt(w)[:, None]
    cond = float(np.linalg.cond(A))
    if cond > max_condition:
        raise IllConditionedFit("design matrix ill-conditioned", cond)
    coef, *_ = np.linalg.lstsq(A, yv * np.sqrt(w), rcond=None)
    resid = yv - X @ coef
    dof = nus.size - 2
    chi2_red = float(np.sum(w * resid**2) / dof)
    cov = np.linalg.inv(A.T @ A)
    if chi2_red > 1.0:
        cov = cov * chi2_red
        q = stats.t.ppf(0.5 + 0.5 * level, dof)
    else:
        q = stats.norm.ppf(0.5 + 0.5 * level)
    p_se = float(math.sqrt(cov[1, 1]))
    p = float(coef[1])
    return MottFit(p, p_se, (p - q * p_se, p + q * p_se), float(math.exp(coef[0])), cond, chi2_red)
