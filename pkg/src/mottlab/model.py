"""Domain types, unit conventions and regime checks.

Units throughout: hbar = 1, 2m = 1, e = 1.  Energies of bound states are
negative; the Fermi energy ``E_F`` sits in the localized (negative) tail and
the localization radius defaults to ``r_l = |E_F|**-0.5``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special
from scipy.linalg import eigh_tridiagonal

from .errors import InvalidParameterError

WELL_SHAPES = ("delta1d", "poschl_teller_1d", "exponential_ground_state_d")
DEFAULT_THRESHOLD = 0.05


def sphere_area(d):
    """Area of the unit sphere in R^d (S_1 = 2, S_2 = 2 pi, S_3 = 4 pi)."""
    if d < 1:
        raise InvalidParameterError("d", "dimension must be a positive integer")
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def _require_finite(name, value):
    if value is None or not np.isfinite(value):
        raise InvalidParameterError(name, f"must be finite, got {value!r}")


@dataclass(frozen=True)
class WellProfile:
    """Dimensionless single well ``v`` with ground level normalized to -1.

    ``phi`` is the normalized ground state as a function of the radius
    ``|x|``; it decays like ``exp(-|x|)``.
    """

    shape: str
    dimension: int = 1
    negative_levels: tuple = (-1.0,)
    well_radius: float = 1.0

    def __post_init__(self):
        if self.shape not in WELL_SHAPES:
            raise InvalidParameterError("shape", f"unknown well shape {self.shape!r}")
        if self.dimension < 1:
            raise InvalidParameterError("dimension", "must be >= 1")
        if self.shape != "exponential_ground_state_d" and self.dimension != 1:
            raise InvalidParameterError("dimension", f"{self.shape} is one-dimensional")
        levels = tuple(float(e) for e in self.negative_levels)
        if not levels or levels[0] != -1.0:
            raise InvalidParameterError("negative_levels", "ground level must equal -1 exactly")
        if any(e >= 0 for e in levels) or sorted(levels) != list(levels):
            raise InvalidParameterError("negative_levels", "levels must be negative and ascending")
        object.__setattr__(self, "negative_levels", levels)

    @classmethod
    def poschl_teller(cls):
        return cls("poschl_teller_1d", 1, (-1.0,), 1.0)

    @classmethod
    def delta(cls):
        return cls("delta1d", 1, (-1.0,), 0.0)

    @classmethod
    def exponential(cls, d):
        return cls("exponential_ground_state_d", d, (-1.0,), 1.0)

    def phi(self, r):
        """Ground state at radius ``r`` (unit L2 norm over R^d)."""
        r = np.abs(np.asarray(r, dtype=float))
        if self.shape == "poschl_teller_1d":
            e = np.exp(-r)
            return math.sqrt(2.0) * e / (1.0 + e * e)
        if self.shape == "delta1d":
            return np.exp(-r)
        d = self.dimension
        c2 = 2.0**d / (sphere_area(d) * math.gamma(d))
        return math.sqrt(c2) * np.exp(-r)

    def potential(self, x):
        """v(x) for the Poschl-Teller well; the other shapes have no pointwise form."""
        if self.shape != "poschl_teller_1d":
            raise InvalidParameterError("shape", f"{self.shape} has no sampled potential")
        return -2.0 / np.cosh(np.asarray(x, dtype=float)) ** 2

    def norm(self):
        d = self.dimension
        val, _ = integrate.quad(lambda r: self.phi(r) ** 2 * r ** (d - 1), 0.0, np.inf,
                                epsabs=0, epsrel=1e-12, limit=200)
        return sphere_area(d) * val


def finite_difference_levels(well, h, half_width=20.0, g=1.0):
    """Negative levels of ``-d2/dx2 + g v(sqrt(g) x)`` on a Dirichlet grid.

    Three-point Laplacian, so the error is O(h**2).
    """
    if h <= 0:
        raise InvalidParameterError("h", "grid spacing must be positive")
    x = np.arange(-half_width, half_width + 0.5 * h, h)
    diag = 2.0 / h**2 + g * well.potential(math.sqrt(g) * x)
    off = np.full(x.size - 1, -1.0 / h**2)
    return eigh_tridiagonal(diag, off, eigvals_only=True, select="v",
                            select_range=(-10.0 * g, 0.0))


@dataclass(frozen=True)
class RegimeParams:
    """Physical regime: dimension, Fermi level, frequency and derived scales.

    ``localization_radius`` and ``overlap_amplitude`` default to
    ``|E_F|**-0.5`` and ``|E_F|``; both can be overridden (the overlap
    amplitude is only known up to an O(1) factor).
    """

    dimension: int
    fermi_energy: float
    nu: float
    rho: float = 1.0
    localization_radius: float | None = None
    overlap_amplitude: float | None = None
    well_density: float | None = None
    well_radius: float | None = None

    def __post_init__(self):
        if not isinstance(self.dimension, (int, np.integer)) or self.dimension < 1:
            raise InvalidParameterError("dimension", "must be a positive integer")
        for name in ("fermi_energy", "nu", "rho"):
            _require_finite(name, getattr(self, name))
        if self.fermi_energy >= 0:
            raise InvalidParameterError("fermi_energy", "must be negative")
        if self.nu <= 0:
            raise InvalidParameterError("nu", "must be positive")
        if self.rho < 0:
            raise InvalidParameterError("rho", "must be non-negative")
        for name in ("localization_radius", "overlap_amplitude", "well_density", "well_radius"):
            val = getattr(self, name)
            if val is not None:
                _require_finite(name, val)
                if val < 0 or (val == 0 and name != "well_radius"):
                    raise InvalidParameterError(name, "must be positive")

    @property
    def r_l(self):
        if self.localization_radius is not None:
            return float(self.localization_radius)
        return abs(self.fermi_energy) ** -0.5

    @property
    def I0(self):
        if self.overlap_amplitude is not None:
            return float(self.overlap_amplitude)
        return abs(self.fermi_energy)

    def replace(self, **changes):
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return RegimeParams(**kw)


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    ratio: float
    threshold: float

    @property
    def passed(self):
        return self.ratio <= self.threshold


@dataclass(frozen=True)
class RegimeReport:
    checks: tuple

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self):
        return {c.name: {"ratio": c.ratio, "threshold": c.threshold, "passed": c.passed}
                for c in self.checks}


def validate_regime(params, thresholds=None):
    """Evaluate the "much less than" inequalities of the strong-localization regime.

    Checks reported (each as a ratio that must not exceed its threshold):

    ``nu_over_EF``
        nu / |E_F|.
    ``well_radius_over_spacing``
        a * mu**(1/d); only when both ``well_radius`` and ``well_density`` are set.
    ``radius_over_spacing``
        g**-1/2 * mu**(1/d) with g = |E_F|; only when ``well_density`` is set.
    """
    thresholds = dict(thresholds or {})
    default = thresholds.pop("default", DEFAULT_THRESHOLD)
    d = params.dimension
    checks = [RegimeCheck("nu_over_EF", params.nu / abs(params.fermi_energy),
                          thresholds.get("nu_over_EF", default))]
    mu = params.well_density
    if mu is not None:
        spacing = mu ** (-1.0 / d)
        if params.well_radius is not None:
            checks.append(RegimeCheck("well_radius_over_spacing", params.well_radius / spacing,
                                      thresholds.get("well_radius_over_spacing", default)))
        g = abs(params.fermi_energy)
        checks.append(RegimeCheck("radius_over_spacing", g**-0.5 / spacing,
                                  thresholds.get("radius_over_spacing", default)))
    return RegimeReport(tuple(checks))


@dataclass(frozen=True)
class DensityProfile:
    """Well density ``mu(g) = mu * p(g)`` over amplitudes ``g > 0``."""

    total_density: float
    p: Callable = field(repr=False)
    support: tuple = (0.0, np.inf)
    label: str = "custom"

    def __post_init__(self):
        _require_finite("total_density", self.total_density)
        if self.total_density < 0:
            raise InvalidParameterError("total_density", "must be non-negative")

    def mu(self, g):
        return self.total_density * self.p(np.asarray(g, dtype=float))

    def scaled(self, factor):
        return DensityProfile(self.total_density * factor, self.p, self.support, self.label)

    def normalization(self):
        lo, hi = self.support
        val, _ = integrate.quad(lambda g: float(self.p(np.array(g))), lo, hi, limit=200)
        return val

    def sample(self, rng, n):
        """Draw ``n`` amplitudes; only available for the built-in profiles."""
        raise NotImplementedError("sampling requires a built-in profile")

    @classmethod
    def uniform(cls, mu, lo, hi):
        if not 0 < lo < hi:
            raise InvalidParameterError("support", "need 0 < lo < hi")
        width = hi - lo

        def p(g):
            g = np.asarray(g, dtype=float)
            return np.where((g >= lo) & (g <= hi), 1.0 / width, 0.0)

        return _SampledProfile(mu, p, (lo, hi), f"uniform({lo},{hi})", ("uniform", lo, hi))

    @classmethod
    def gaussian(cls, mu, center, width):
        """Gaussian in g truncated to g > 0 and renormalized."""
        if center <= 0 or width <= 0:
            raise InvalidParameterError("width", "center and width must be positive")
        z = 0.5 * special.erfc(-center / (math.sqrt(2.0) * width))

        def p(g):
            g = np.asarray(g, dtype=float)
            val = np.exp(-0.5 * ((g - center) / width) ** 2) / (math.sqrt(2 * math.pi) * width * z)
            return np.where(g > 0, val, 0.0)

        lo = max(0.0, center - 12 * width)
        return _SampledProfile(mu, p, (lo, center + 12 * width),
                               f"gaussian({center},{width})", ("gaussian", center, width))


@dataclass(frozen=True)
class _SampledProfile(DensityProfile):
    kind: tuple = ()

    def scaled(self, factor):
        return _SampledProfile(self.total_density * factor, self.p, self.support, self.label,
                               self.kind)

    def sample(self, rng, n):
        name = self.kind[0]
        if name == "uniform":
            return rng.uniform(self.kind[1], self.kind[2], size=n)
        center, width = self.kind[1], self.kind[2]
        out = np.empty(0)
        while out.size < n:
            draw = rng.normal(center, width, size=2 * (n - out.size) + 4)
            out = np.concatenate([out, draw[draw > 0]])
        return out[:n]
