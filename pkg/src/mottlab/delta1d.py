"""Exact bound states of two 1D delta wells.

H = -d2/dx2 - 2 sqrt(g1) delta(x) - 2 sqrt(g2) delta(x - y).  With k = sqrt(|E|)
the levels solve (k - a)(k - b) = a b exp(-2 k y), a = sqrt(g1), b = sqrt(g2).
Solving the quadratic in k at fixed exponential splits this into two branches

    k = m +- sqrt(q**2 + a b exp(-2 k y)),   m = (a+b)/2, q = (a-b)/2,

the "+" branch carrying the ground state and the "-" branch the excited one.
Scanning each branch separately keeps nearly degenerate roots apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import InvalidParameterError, NumericFailure
from .twowell import PairConfig, overlap_integral, pair_levels

SCAN_INTERVALS = 10_000


@dataclass(frozen=True)
class DeltaPair:
    g1: float
    g2: float
    y: float

    def __post_init__(self):
        if self.g1 <= 0 or self.g2 < 0:
            raise InvalidParameterError("g", "need g1 > 0 and g2 >= 0")
        if self.y < 0:
            raise InvalidParameterError("y", "separation must be non-negative")

    @property
    def a(self):
        return math.sqrt(self.g1)

    @property
    def b(self):
        return math.sqrt(self.g2)

    def residual(self, k):
        """(k-a)(k-b) - ab exp(-2ky); zero at every bound level k = sqrt(|E|)."""
        a, b = self.a, self.b
        return (k - a) * (k - b) - a * b * np.exp(-2.0 * k * self.y)

    def branch(self, k, sign):
        a, b = self.a, self.b
        m, q = 0.5 * (a + b), 0.5 * (a - b)
        return k - m - sign * np.sqrt(q * q + a * b * np.exp(-2.0 * k * self.y))

    @property
    def critical_separation(self):
        """Below this y the excited ("-") branch has no positive root."""
        if self.g2 == 0:
            return math.inf
        return 0.5 * (1.0 / self.a + 1.0 / self.b)


def exact_levels(pair, tol=1e-12):
    """All bound energies, ascending.  One or two values, never zero."""
    if tol <= 0:
        raise InvalidParameterError("tol", "must be positive")
    kmax = pair.a + pair.b + 1.0
    grid = np.linspace(0.0, kmax, SCAN_INTERVALS + 1)[1:]
    # k = 0 solves the "-" branch identically; start just above it
    grid = np.concatenate([[kmax * 1e-12], grid])
    roots = []
    scanned = []
    for sign in (+1, -1):
        vals = pair.branch(grid, sign)
        idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        scanned.append((sign, grid[0], grid[-1], idx.size))
        for i in idx:
            k = optimize.bisect(pair.branch, grid[i], grid[i + 1], args=(sign,),
                                xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
            res = abs(pair.residual(k))
            if res > tol * max(1.0, pair.g1):
                raise NumericFailure(f"root at k={k} fails residual check", res)
            roots.append(float(-k * k))
        exact_zero = np.nonzero(vals == 0.0)[0]
        for i in exact_zero:
            roots.append(float(-grid[i] ** 2))
    if not roots:
        raise NumericFailure(f"no sign change found; scanned {scanned}")
    return sorted(set(roots))


@dataclass(frozen=True)
class DeltaState:
    """psi(x) = A exp(-k|x|) + B exp(-k|x-y|), unit L2 norm."""

    A: float
    B: float
    k: float
    y: float
    energy: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.A * np.exp(-self.k * np.abs(x)) + self.B * np.exp(-self.k * np.abs(x - self.y))

    def components(self):
        """(amplitude, decay, center) triples, for closed-form inner products."""
        return [(self.A, self.k, 0.0), (self.B, self.k, self.y)]


def exp_overlap(p, u, q, v):
    """Closed form of int exp(-p|x-u|) exp(-q|x-v|) dx over the real line."""
    D = abs(u - v)
    out = (math.exp(-q * D) + math.exp(-p * D)) / (p + q)
    if abs(p - q) < 1e-12 * (p + q):
        return out + D * math.exp(-p * D)
    return out + (math.exp(-p * D) - math.exp(-q * D)) / (q - p)


def inner(f_components, g_components):
    return sum(c1 * c2 * exp_overlap(k1, x1, k2, x2)
               for c1, k1, x1 in f_components for c2, k2, x2 in g_components)


def exact_states(pair, E, tol=1e-12):
    """Normalized exact eigenfunction at level ``E``."""
    if E >= 0:
        raise InvalidParameterError("E", "bound levels are negative")
    k = math.sqrt(-E)
    res = abs(pair.residual(k))
    if res > tol * max(1.0, pair.g1):
        raise InvalidParameterError("E", f"not a level of this pair (residual {res:.3e})")
    a, b, e = pair.a, pair.b, math.exp(-k * pair.y)
    # null vector of [[k-a, -a e], [-b e, k-b]]; use the better conditioned row
    row1 = (k - a, -a * e)
    row2 = (-b * e, k - b)
    r = row1 if math.hypot(*row1) >= math.hypot(*row2) else row2
    A, B = -r[1], r[0]
    norm2 = (A * A + B * B) / k + 2 * A * B * exp_overlap(k, 0.0, k, pair.y)
    s = 1.0 / math.sqrt(norm2)
    if A < 0 or (A == 0 and B < 0):
        s = -s
    return DeltaState(A * s, B * s, k, pair.y, E)


def projection_states(pair):
    """Normalized projected states (ground, excited) as component lists."""
    g_at0, g_aty = pair.g1, pair.g2
    I = float(overlap_integral(pair.y, mode="delta_exact", g1=g_at0, g2=max(g_aty, 1e-300)))
    delta = 0.5 * (g_at0 - g_aty)
    root = math.hypot(delta, I)
    theta = math.atan2(I, delta + root) if root else math.pi / 4
    phi1 = (g_at0**0.25, pair.a, 0.0)
    phi2 = (g_aty**0.25, pair.b, pair.y)
    c, s = math.cos(theta), math.sin(theta)
    out = []
    for c1, c2 in ((c, s), (-s, c)):
        comps = [(c1 * phi1[0], phi1[1], 0.0), (c2 * phi2[0], phi2[1], pair.y)]
        n = math.sqrt(inner(comps, comps))
        out.append([(amp / n, kk, x0) for amp, kk, x0 in comps])
    return out


def projected_levels(pair):
    cfg = PairConfig(pair.g1, pair.g2, pair.y)
    I = float(overlap_integral(pair.y, mode="delta_exact", g1=pair.g1, g2=pair.g2))
    return pair_levels(cfg, I)


@dataclass(frozen=True)
class ProjectionReport:
    y: float
    exact: tuple
    projected: tuple
    level_errors: tuple
    splitting_rel_error: float
    state_overlaps: tuple


def projection_error_report(pair, tol=1e-12):
    """Compare exact levels and states with the 2x2 projection."""
    exact = exact_levels(pair, tol)
    spec = projected_levels(pair)
    proj = (spec.E1, spec.E2)
    if len(exact) == 2:
        errors = tuple(abs(e - p) for e, p in zip(exact, proj))
        split_exact = exact[1] - exact[0]
        split_rel = abs(spec.splitting - split_exact) / split_exact
        pstates = projection_states(pair)
        overlaps = tuple(abs(inner(exact_states(pair, e, tol).components(), ps))
                         for e, ps in zip(exact, pstates))
    else:
        errors = (abs(exact[0] - proj[0]),)
        split_rel = float("nan")
        overlaps = (abs(inner(exact_states(pair, exact[0], tol).components(),
                              projection_states(pair)[0])),)
    return ProjectionReport(pair.y, tuple(exact), proj, errors, split_rel, overlaps)


def fit_error_decay(g1, g2, ys):
    """Least-squares slope of ln(max level error) against y."""
    errs = [max(projection_error_report(DeltaPair(g1, g2, float(y))).level_errors) for y in ys]
    slope, _ = np.polyfit(np.asarray(ys, float), np.log(errs), 1)
    return float(slope), errs


def sweep_rows(g1, g2, ys):
    """Rows (y, E1_exact, E2_exact, E1_proj, E2_proj, split_err)."""
    rows = []
    for y in ys:
        rep = projection_error_report(DeltaPair(g1, g2, float(y)))
        e = list(rep.exact) + [float("nan")] * (2 - len(rep.exact))
        rows.append((float(y), e[0], e[1], rep.projected[0], rep.projected[1],
                     rep.splitting_rel_error))
    return rows
