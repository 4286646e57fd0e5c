"""Empirical-measure statistics on the line.

Order-p transport (Wasserstein) distances between empirical measures via
the sorted/quantile coupling, comparison against the semicircle limit
law, Kolmogorov-Smirnov distances, and the Hoffman-Wielandt spectral
stability check for Hermitian matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensemble import eigenvalues_dense
from .errors import DomainError


class EmpiricalMeasure:
    """Equal-weight atoms, stored sorted ascending."""

    __slots__ = ("atoms",)

    def __init__(self, atoms):
        a = np.sort(np.asarray(atoms, dtype=np.float64).ravel())
        if a.size < 1:
            raise DomainError("an empirical measure needs at least one atom")
        a.setflags(write=False)
        self.atoms = a

    def __len__(self):
        return self.atoms.size

    @classmethod
    def from_spectrum(cls, conf):
        return cls(np.asarray(conf.points if hasattr(conf, "points") else conf))


@dataclass(frozen=True)
class SemicircleLaw:
    """Limit law of the empirical measure: density sqrt(2*beta - x^2)/(beta*pi).

    Supported on [-sqrt(2*beta), sqrt(2*beta)]; second moment beta/2.
    """

    beta: float

    def __post_init__(self):
        if not self.beta > 0.0:
            raise DomainError("beta must be > 0")

    @property
    def edge(self):
        return math.sqrt(2.0 * self.beta)

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        r2 = 2.0 * self.beta
        out = np.zeros_like(x)
        inside = np.abs(x) < self.edge
        out[inside] = np.sqrt(r2 - x[inside] ** 2) / (self.beta * math.pi)
        return out if out.ndim else float(out)

    def cdf(self, x):
        """Closed form: 1/2 + [x*sqrt(2b - x^2) + 2b*asin(x/sqrt(2b))]/(2b*pi)."""
        scalar = np.isscalar(x)
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        r = self.edge
        r2 = 2.0 * self.beta
        out = np.empty_like(x)
        out[x <= -r] = 0.0
        out[x >= r] = 1.0
        mid = (x > -r) & (x < r)
        xm = x[mid]
        out[mid] = 0.5 + (xm * np.sqrt(r2 - xm**2)
                          + r2 * np.arcsin(xm / r)) / (r2 * math.pi)
        return float(out[0]) if scalar else out

    def quantile(self, u):
        """Inverse CDF by bisection on the closed form (monotone, bounded)."""
        scalar = np.isscalar(u)
        u = np.atleast_1d(np.asarray(u, dtype=np.float64))
        if np.any((u < 0.0) | (u > 1.0)):
            raise DomainError("quantile levels must lie in [0, 1]")
        lo = np.full_like(u, -self.edge)
        hi = np.full_like(u, self.edge)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = 0.5 * (lo + hi)
        return float(out[0]) if scalar else out

    def second_moment(self):
        return 0.5 * self.beta

    def sample(self, k, rng):
        """k inverse-CDF draws (for self-consistency tests)."""
        u = np.array([rng.uniform() for _ in range(k)])
        return EmpiricalMeasure(self.quantile(u))


def wasserstein_1d(p, a, b):
    """Exact order-p transport distance between two empirical measures.

    Equal atom counts use the sorted coupling directly; unequal counts
    use the exact piecewise-constant quantile coupling.
    """
    if p not in (1, 2):
        raise DomainError("p must be 1 or 2")
    xs, ys = a.atoms, b.atoms
    na, nb = xs.size, ys.size
    if na == nb:
        diff = np.abs(xs - ys)
        return float(np.mean(diff**p) ** (1.0 / p))
    # merged-breakpoint integral of |Fa^{-1}(u) - Fb^{-1}(u)|^p over (0,1)
    cuts = np.union1d(np.arange(1, na) / na, np.arange(1, nb) / nb)
    edges = np.concatenate(([0.0], cuts, [1.0]))
    widths = np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    qa = xs[np.minimum((mids * na).astype(int), na - 1)]
    qb = ys[np.minimum((mids * nb).astype(int), nb - 1)]
    return float(np.sum(widths * np.abs(qa - qb) ** p) ** (1.0 / p))


def wasserstein_to_semicircle(p, a, law, grid=10_000):
    """Order-p distance between an empirical measure and the limit law.

    Quantile-coupling quadrature at the midpoints of `grid` equal-mass
    intervals; the quadrature error is O(1/grid).  When `grid` is a
    multiple of the atom count this equals the exact distance between
    the empirical measure and the grid discretization of the law.
    """
    if p not in (1, 2):
        raise DomainError("p must be 1 or 2")
    if grid < 1000:
        raise DomainError("grid must be >= 1000")
    n = len(a)
    u = (np.arange(grid) + 0.5) / grid
    qa = a.atoms[np.minimum((u * n).astype(int), n - 1)]
    qb = law.quantile(u)
    return float(np.mean(np.abs(qa - qb) ** p) ** (1.0 / p))


@dataclass(frozen=True)
class HoffmanWielandtReport:
    lhs: float  # n * W2(spec A, spec B)^2 = sum of squared ordered differences
    rhs: float  # squared Hilbert-Schmidt norm of A - B

    @property
    def holds(self):
        return self.lhs <= self.rhs


def hoffman_wielandt_check(a, b, tol=2.220446049250313e-16):
    """Ordered spectra are 1-Lipschitz in Hilbert-Schmidt norm.

    lhs = sum_i (x_i(A) - x_i(B))^2, rhs = ||A - B||_HS^2; the report
    compares them (lhs <= rhs up to eigensolver error).
    """
    if a.n != b.n:
        raise DomainError("matrices must have the same order")
    xa = eigenvalues_dense(a, tol).points
    xb = eigenvalues_dense(b, tol).points
    lhs = float(np.sum((xa - xb) ** 2))
    da = a.diag - b.diag
    du = a.upper - b.upper
    rhs = float(np.sum(da**2) + 2.0 * np.sum(np.abs(du) ** 2))
    return HoffmanWielandtReport(lhs=lhs, rhs=rhs)


def ks_distance(a, cdf):
    """Sup distance between the empirical CDF of `a` and a target CDF."""
    n = len(a)
    f = np.asarray(cdf(a.atoms), dtype=np.float64)
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return float(max(np.max(np.abs(f - hi)), np.max(np.abs(f - lo))))


def ks_two_sample(a, b):
    """Two-sample sup distance between empirical CDFs."""
    xs, ys = a.atoms, b.atoms
    allv = np.concatenate([xs, ys])
    fa = np.searchsorted(xs, allv, side="right") / xs.size
    fb = np.searchsorted(ys, allv, side="right") / ys.size
    return float(np.max(np.abs(fa - fb)))


def normal_cdf(x):
    """Standard normal CDF (vectorized erfc)."""
    x = np.asarray(x, dtype=np.float64)
    out = 0.5 * _erfc_vec(-x / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


_erfc_vec = np.vectorize(math.erfc, otypes=[np.float64])


def semicircle_cdf(law, x):
    """CDF of the limit law, clamped outside the support edge."""
    return law.cdf(x)
