"""Two-point correlators C1, C2 from resonant pairs.

With K = phi**2 * phi**2 (the autocorrelation of the ground-state density) the
two-well contributions are

    C1(x) = (2 rho**2 / nu) int_{|y|>=r(nu)} I**2/sqrt(nu**2 - 4 I**2) [K(x) - K(x-y)] dy
    C2(x) = C1(x) + rho**2 int_{|y|>=r(nu)} nu/sqrt(nu**2 - 4 I**2) K(x-y) dy

The radial integrals use exp(-(|y| - r(nu))/r_l) = sech(tau); both weights
become smooth in tau:

    (2/nu) I**2/sqrt(...) d|y| = (r_l/2) sech(tau)**2 dtau
    nu/sqrt(...) d|y|          = r_l dtau

The same discrete y-measure feeds both terms of C1, so int C1 dx = 0 holds up
to the x-quadrature error only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError, InvalidParameterError
from .model import RegimeParams, WellProfile, sphere_area
from .response import resonance_radius, sigma_two_well

ANGULAR_NODES = 64
TAU_PANEL = 0.5
TAU_ORDER = 10


@dataclass(frozen=True)
class KernelTable:
    """K(|x|) for the ground-state density of radius r_l in d dimensions."""

    d: int
    r_l: float
    r_max: float
    grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    closed_form: bool = False
    _spline: object = field(default=None, repr=False, compare=False)

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        if self.closed_form:
            return _exp_kernel_1d(r, self.r_l)
        out = np.zeros_like(r)
        inside = r <= self.r_max
        out[inside] = np.exp(self._spline(r[inside]))
        return out


def _exp_kernel_1d(r, rl):
    lam = 2.0 / rl
    z = lam * r
    return 0.25 * lam * (1.0 + z) * np.exp(-z)


def _density_constant(d, rl):
    """c**2 with phi**2 = c**2 exp(-2|x|/r_l) normalized over R^d."""
    lam = 2.0 / rl
    return lam**d / (sphere_area(d) * math.gamma(d))


def _kernel_elliptic(r, d, rl):
    """Convolution of two exponential densities, reduced in elliptic coordinates.

    With foci at 0 and x the sum of distances is |x| cosh(mu); the remaining
    angular integrals are elementary, leaving one smooth integral in mu.
    """
    lam = 2.0 / rl
    c4 = _density_constant(d, rl) ** 2
    z = lam * r
    if d == 2:
        f = lambda mu: math.cosh(2 * mu) * math.exp(-z * (math.cosh(mu) - 1.0))
        mu_max = math.acosh(1.0 + 700.0 / z)
        val, _ = integrate.quad(f, 0.0, mu_max, epsabs=0, epsrel=1e-12, limit=200)
        return c4 * math.pi * r * r / 4.0 * math.exp(-z) * val
    if d == 3:
        # w = cosh(mu) = 1 + v
        f = lambda v: (2.0 * (1.0 + v) ** 2 - 2.0 / 3.0) * math.exp(-z * v)
        val, _ = integrate.quad(f, 0.0, np.inf, epsabs=0, epsrel=1e-12, limit=200)
        return c4 * math.pi * r**3 / 4.0 * math.exp(-z) * val
    raise InvalidParameterError("d", "elliptic reduction implemented for d = 2, 3")


def kernel_at_origin(d, rl):
    """K(0) = int phi**4."""
    lam = 2.0 / rl
    c4 = _density_constant(d, rl) ** 2
    return c4 * sphere_area(d) * math.gamma(d) / (2 * lam) ** d


@lru_cache(maxsize=16)
def _tabulate(d, rl, r_max, n):
    grid = np.linspace(0.0, r_max, n)
    vals = np.empty(n)
    vals[0] = kernel_at_origin(d, rl)
    for i in range(1, n):
        vals[i] = _kernel_elliptic(grid[i], d, rl)
    return grid, vals


def build_kernel(well=None, d=1, r_l=1.0, r_max=None, points_per_rl=50):
    """Tabulate K on [0, r_max] (default 30 r_l).

    d = 1 uses the closed form (lambda/4)(1 + lambda|x|) exp(-lambda|x|) with
    lambda = 2/r_l.  d = 2, 3 tabulate the elliptic-coordinate quadrature and
    interpolate ln K with a clamped cubic spline.
    """
    well = well or WellProfile.exponential(d)
    if well.shape == "poschl_teller_1d":
        raise InvalidParameterError("well", "kernels are built for exponential ground states")
    if r_max is None:
        r_max = 30.0 * r_l
    if points_per_rl < 10:
        raise ConfigurationError(f"{points_per_rl} points per r_l is too coarse for 1e-6 accuracy")
    if d == 1:
        grid = np.linspace(0.0, r_max, int(points_per_rl * r_max / r_l) + 1)
        return KernelTable(1, r_l, r_max, grid, _exp_kernel_1d(grid, r_l), closed_form=True)
    n = int(points_per_rl * r_max / r_l) + 1
    grid, vals = _tabulate(d, float(r_l), float(r_max), n)
    spline = CubicSpline(grid, np.log(vals), bc_type=((1, 0.0), "not-a-knot"))
    return KernelTable(d, r_l, r_max, grid, vals, False, spline)


def _gauss_panels(a, b, panel, order):
    n = max(1, int(math.ceil((b - a) / panel)))
    xg, wg = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    weights = (half[:, None] * wg[None, :]).ravel()
    return nodes, weights


def _log_cosh(t):
    return t + np.log1p(np.exp(-2.0 * t)) - math.log(2.0)


@dataclass(frozen=True)
class RadialMeasure:
    """Discrete |y| nodes with the C1 and C2 weights (S_d |y|**(d-1) included)."""

    y: np.ndarray
    w1: np.ndarray
    w2: np.ndarray


def radial_measure(regime, y_max):
    d, rl = regime.dimension, regime.r_l
    r0 = resonance_radius(regime.nu, regime)
    tau_max = max((y_max - r0) / rl + math.log(2.0) + 1.0, 25.0)
    tau, wt = _gauss_panels(0.0, tau_max, TAU_PANEL, TAU_ORDER)
    y = r0 + rl * _log_cosh(tau)
    jac = sphere_area(d) * y ** (d - 1)
    sech2 = 1.0 / np.cosh(tau) ** 2
    return RadialMeasure(y, wt * jac * 0.5 * rl * sech2, wt * jac * rl)


def angular_average(kernel, x, y, nodes=ANGULAR_NODES):
    """Mean of K(|x - y n|) over unit vectors n; x, y broadcast."""
    d = kernel.d
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if d == 1:
        return 0.5 * (kernel(x - y) + kernel(x + y))
    t, w = np.polynomial.legendre.leggauss(nodes)
    if d == 2:
        cos_t = np.cos(0.5 * math.pi * (t + 1.0))
        w = 0.5 * w
    elif d == 3:
        cos_t = t
        w = 0.5 * w
    else:
        raise InvalidParameterError("d", "angular average implemented for d <= 3")
    xx, yy = np.broadcast_arrays(x, y)
    r2 = xx[..., None] ** 2 + yy[..., None] ** 2 - 2.0 * xx[..., None] * yy[..., None] * cos_t
    return np.sum(kernel(np.sqrt(np.maximum(r2, 0.0))) * w, axis=-1)


@dataclass(frozen=True)
class CorrelatorCurve:
    x: np.ndarray = field(repr=False)
    C1: np.ndarray = field(repr=False)
    C2: np.ndarray = field(repr=False)
    nu: float
    d: int
    rho: float
    r_l: float
    resonance_radius: float
    regime: RegimeParams = field(repr=False)
    method: str = ""

    @property
    def E(self):
        return self.regime.fermi_energy


def _correlator_terms(x, regime, kernel, angular_nodes, chunk=64):
    x = np.asarray(x, dtype=float)
    meas = radial_measure(regime, float(np.max(np.abs(x))) + kernel.r_max)
    rho2 = regime.rho**2
    origin_mass = meas.w1.sum()
    c1 = np.empty_like(x)
    extra = np.empty_like(x)
    for start in range(0, x.size, chunk):
        xs = x[start:start + chunk]
        A = angular_average(kernel, xs[:, None], meas.y[None, :], angular_nodes)
        c1[start:start + chunk] = rho2 * (kernel(xs) * origin_mass - A @ meas.w1)
        extra[start:start + chunk] = rho2 * (A @ meas.w2)
    return c1, extra


def _prepare(regime, kernel):
    if kernel is None:
        kernel = build_kernel(None, regime.dimension, regime.r_l)
    if kernel.d != regime.dimension or not math.isclose(kernel.r_l, regime.r_l):
        raise ConfigurationError("kernel table does not match the regime (d, r_l)")
    return kernel


def c1_two_well(x, regime, kernel=None, angular_nodes=ANGULAR_NODES):
    kernel = _prepare(regime, kernel)
    return _correlator_terms(np.abs(x), regime, kernel, angular_nodes)[0]


def c2_two_well(x, regime, kernel=None, angular_nodes=ANGULAR_NODES):
    kernel = _prepare(regime, kernel)
    c1, extra = _correlator_terms(np.abs(x), regime, kernel, angular_nodes)
    return c1 + extra


def correlator_curve(x, regime, kernel=None, angular_nodes=ANGULAR_NODES):
    kernel = _prepare(regime, kernel)
    x = np.abs(np.asarray(x, dtype=float))
    c1, extra = _correlator_terms(x, regime, kernel, angular_nodes)
    method = "closed-form kernel" if kernel.closed_form else f"tabulated kernel, {angular_nodes} angular nodes"
    return CorrelatorCurve(x, c1, c1 + extra, regime.nu, regime.dimension, regime.rho, regime.r_l,
                           resonance_radius(regime.nu, regime), regime, method)


def default_grid(regime, extent_rl=15.0, step=None):
    """Radial grid [0, r(nu) + extent] with an odd number of points (Simpson)."""
    rl = regime.r_l
    r0 = resonance_radius(regime.nu, regime)
    step = step or (0.01 * rl if regime.dimension == 1 else 0.05 * rl)
    n = int(math.ceil((r0 + extent_rl * rl) / step))
    n += n % 2
    return np.linspace(0.0, n * step, n + 1)


@dataclass(frozen=True)
class SumRuleReport:
    zero_integral_residual: float
    tail_deviation: float
    sigma_from_moment: float
    sigma_two_well: float

    @property
    def moment_mismatch(self):
        return abs(self.sigma_from_moment - self.sigma_two_well) / self.sigma_two_well


def _radial_integral(curve, values):
    d = curve.d
    w = sphere_area(d) * curve.x ** (d - 1) if d > 1 else 2.0 * np.ones_like(curve.x)
    return integrate.simpson(values * w, x=curve.x)


def sum_rules(curve):
    """Zero-integral of C1, tail of C2, and the x**2-moment of C1 against sigma."""
    rl = curve.r_l
    if curve.x[-1] < curve.resonance_radius + 15.0 * rl - 1e-9:
        raise ConfigurationError("curve must extend to r(nu) + 15 r_l for the sum rules")
    total = _radial_integral(curve, curve.C1)
    scale = _radial_integral(curve, np.abs(curve.C1))
    tail = curve.C2[-1] / curve.rho**2 - 1.0
    moment = -0.5 * curve.nu**2 * _radial_integral(curve, curve.x**2 * curve.C1)
    sigma = sigma_two_well(curve.nu, curve.regime).sigma_integral
    return SumRuleReport(abs(total) / scale, tail, moment, sigma)


@dataclass(frozen=True)
class PeakReport:
    origin_height: float
    dip_location: float
    dip_height: float
    decay_rate: float
    resonance_radius: float


def _refine_extremum(x, y, i):
    if 0 < i < len(x) - 1:
        x0, x1, x2 = x[i - 1:i + 2]
        y0, y1, y2 = y[i - 1:i + 2]
        denom = (y0 - 2 * y1 + y2)
        if denom != 0:
            h = x1 - x0
            off = 0.5 * h * (y0 - y2) / denom
            return x1 + off, y1 - 0.25 * (y0 - y2) * off / h
    return x[i], y[i]


def peak_diagnostics(curve):
    """Origin peak, negative dip near r(nu), and the decay rate near the origin.

    The decay rate comes from fitting ln C1 = c + a ln x - kappa x on
    [2 r_l, 0.4 r(nu)]; the algebraic prefactor of K is absorbed by ``a``.
    """
    x, c1 = curve.x, curve.C1
    rl, r0 = curve.r_l, curve.resonance_radius
    far = x > 0.5 * r0
    i = np.argmin(np.where(far, c1, np.inf))
    dip_x, dip_h = _refine_extremum(x, c1, i)
    window = (x >= 2.0 * rl) & (x <= 0.4 * r0) & (c1 > 0)
    kappa = float("nan")
    if window.sum() >= 4:
        X = np.column_stack([np.ones(window.sum()), np.log(x[window]), -x[window]])
        coef, *_ = np.linalg.lstsq(X, np.log(c1[window]), rcond=None)
        kappa = float(coef[2])
    return PeakReport(float(c1[0]), float(dip_x), float(dip_h), kappa, r0)


def dip_scaling(regime, nus, kernel=None, step=None):
    """Origin and dip heights for each frequency (used for ln**(d-1) scaling)."""
    out = []
    for nu in nus:
        reg = regime.replace(nu=nu)
        x = default_grid(reg, extent_rl=5.0, step=step)
        x = x[x >= 0.5 * resonance_radius(nu, reg)]
        x = np.concatenate([[0.0], x])
        curve = correlator_curve(x, reg, kernel)
        rep = peak_diagnostics(curve)
        out.append((nu, rep.origin_height, rep.dip_height, rep.dip_location))
    return out


def scaling_exponent(rows, I0, column=2):
    """Exponent q in |height| ~ ln**q(2 I0/nu) from :func:`dip_scaling` rows.

    ``column`` 1 selects the origin peak, 2 the dip.
    """
    L = np.log([math.log(2.0 * I0 / r[0]) for r in rows])
    h = np.log([abs(r[column]) for r in rows])
    return float(np.polyfit(L, h, 1)[0])


FIGURE_PRESETS = {
    "fig1": dict(dimension=1, nu=1e-4, r_l=1.0, rho=1.0),
    "fig2": dict(dimension=2, nu=1e-4, r_l=1.0, rho=1.0),
}


def figure_regime(name):
    if name not in FIGURE_PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {sorted(FIGURE_PRESETS)}")
    p = FIGURE_PRESETS[name]
    rl = p["r_l"]
    return RegimeParams(p["dimension"], -rl**-2, p["nu"], rho=p["rho"], localization_radius=rl)
