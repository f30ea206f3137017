"""Two-well projection: overlap integral, pair levels, mixing angle, dipole element.

The two-well Hamiltonian is projected on the span of the two one-well ground
states, giving the 2x2 matrix [[-g1, -I], [-I, -g2]].  With g = (g1+g2)/2 and
delta = (g1-g2)/2 its levels are -g -+ sqrt(delta**2 + I**2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import InvalidParameterError
from .model import WellProfile

OVERLAP_MODES = ("model", "delta_exact", "delta_state_overlap")


def overlap_integral(y, regime=None, mode="model", g1=None, g2=None):
    """Overlap integral I(|y|) between ground states of two wells.

    ``mode="model"``
        ``I0 * exp(-|y| / r_l)`` with I0 and r_l taken from ``regime``.
    ``mode="delta_exact"``
        Effective hopping of two 1D delta wells of strengths 2 sqrt(g_k):
        ``2 sqrt(g1 g2) exp(-(sqrt(g1) + sqrt(g2)) |y| / 2)``, which reduces to
        ``2 g exp(-sqrt(g)|y|)`` for equal wells.
    ``mode="delta_state_overlap"``
        Only the ``g (phi_1, phi_2)`` term, ``g (1 + sqrt(g)|y|) exp(-sqrt(g)|y|)``
        with g the mean amplitude.  Kept as a diagnostic: without the
        ``(phi_1, v_2 phi_2)`` term it is not the splitting of delta wells.
    """
    y = np.abs(np.asarray(y, dtype=float))
    if mode == "model":
        if regime is None:
            raise InvalidParameterError("regime", "model overlap needs RegimeParams")
        return regime.I0 * np.exp(-y / regime.r_l)
    if g1 is None or g2 is None:
        raise InvalidParameterError("g1", f"{mode} overlap needs both amplitudes")
    if mode == "delta_exact":
        a, b = math.sqrt(g1), math.sqrt(g2)
        return 2.0 * a * b * np.exp(-0.5 * (a + b) * y)
    if mode == "delta_state_overlap":
        g = 0.5 * (g1 + g2)
        k = math.sqrt(g)
        return g * (1.0 + k * y) * np.exp(-k * y)
    raise InvalidParameterError("mode", f"unknown overlap mode {mode!r}")


@dataclass(frozen=True)
class PairConfig:
    """Two wells of amplitudes g1 >= g2 > 0 separated by ``y``.

    Inputs with g1 < g2 are reordered; ``swapped`` records it.  Equal
    amplitudes keep the input order.
    """

    g1: float
    g2: float
    y: float
    well: WellProfile = WellProfile("exponential_ground_state_d", 1)
    swapped: bool = False

    def __post_init__(self):
        if not (self.g1 > 0 and self.g2 > 0):
            raise InvalidParameterError("g", "amplitudes must be positive")
        if self.g1 < self.g2:
            g1, g2 = self.g2, self.g1
            object.__setattr__(self, "g1", g1)
            object.__setattr__(self, "g2", g2)
            object.__setattr__(self, "swapped", not self.swapped)

    @property
    def separation(self):
        return float(np.linalg.norm(np.atleast_1d(self.y)))

    @property
    def mean(self):
        return 0.5 * (self.g1 + self.g2)

    @property
    def detuning(self):
        return 0.5 * (self.g1 - self.g2)

    @property
    def well_separated(self):
        """True when |y| exceeds ten radii of the wider ground state."""
        return self.separation > 10.0 * self.g2**-0.5


@dataclass(frozen=True)
class PairSpectrum:
    E1: float
    E2: float
    theta: float
    overlap: float
    dipole: float = float("nan")

    @property
    def splitting(self):
        return self.E2 - self.E1


def pair_levels(cfg, overlap):
    """Levels, mixing angle and dipole element of the projected pair."""
    delta = cfg.detuning
    root = math.hypot(delta, overlap)
    g = cfg.mean
    if root == 0.0:
        theta = math.pi / 4
    else:
        theta = math.atan2(abs(overlap), delta + root)
    spec = PairSpectrum(-g - root, -g + root, theta, float(overlap))
    return PairSpectrum(spec.E1, spec.E2, theta, spec.overlap, dipole_element(cfg, spec))


def dipole_element(cfg, spectrum):
    """Leading coordinate matrix element |y| I / (2 sqrt(delta**2 + I**2))."""
    root = math.hypot(cfg.detuning, spectrum.overlap)
    if root == 0.0:
        return 0.5 * cfg.separation
    return cfg.separation * abs(spectrum.overlap) / (2.0 * root)


def dipole_terms(cfg, spectrum):
    """All three terms of the 1D matrix element between the mixed states.

    Returns ``(leading, mass_term, cross_term)``.  ``mass_term`` carries
    ``int x phi**2`` and vanishes for even ``phi``; ``cross_term`` carries
    ``int x phi_1 phi_2`` and is evaluated by quadrature.
    """
    if cfg.well.dimension != 1:
        raise InvalidParameterError("well", "dipole_terms is one-dimensional")
    root = math.hypot(cfg.detuning, spectrum.overlap)
    w = abs(spectrum.overlap) / (2.0 * root) if root else 0.5
    phi = cfg.well.phi
    first_moment, _ = integrate.quad(lambda x: x * phi(x) ** 2, -60, 60, points=[0.0])
    mass_term = (cfg.g1**-0.5 - cfg.g2**-0.5) * w * first_moment
    y = cfg.separation

    def phi_k(x, g, x0):
        return g**0.25 * phi(math.sqrt(g) * (x - x0))

    cross, _ = integrate.quad(lambda x: x * phi_k(x, cfg.g1, 0.0) * phi_k(x, cfg.g2, y),
                              -40.0, y + 40.0, points=[0.0, y], limit=400)
    cross_term = (cfg.detuning / root if root else 0.0) * cross
    return y * w, mass_term, cross_term


def sweep(g1, g2, ys, regime=None, mode="model"):
    """Rows (|y|, E1, E2, theta, X12) over separations ``ys``."""
    rows = []
    for y in ys:
        cfg = PairConfig(g1, g2, float(y))
        ov = float(overlap_integral(y, regime, mode, cfg.g1, cfg.g2))
        s = pair_levels(cfg, ov)
        rows.append((float(y), s.E1, s.E2, s.theta, s.dipole))
    return rows
