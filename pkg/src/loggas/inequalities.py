"""Monte Carlo verification of the gas measure's functional inequalities.

For a model with confinement strength rho the measure satisfies

    var(f)     <=  (1/rho) * E|grad f|^2        (spectral gap),
    ent(f^2)   <=  (2/rho) * E|grad f|^2        (log-Sobolev),

with equality exactly for affine functions of the coordinate sum in the
first case and their exponentials in the second, and no other function.
The log-Sobolev inequality yields a Gaussian Laplace-transform bound and
two-sided Lipschitz concentration.  The checks below estimate both
sides of each statement on shared exact samples, report standard errors
(contiguous batch means), and classify the outcome: a `violation`
verdict can only arise from a code bug, and the equality cases must be
detected within combined error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ensemble import iter_spectra
from .errors import DomainError
from .rng import McEstimate

N_BATCHES = 20
_Z99 = 2.5758293035489004  # two-sided 1% normal quantile for Wilson bands


class TestFunction:
    """Observable with batch evaluation, squared-gradient, and Lipschitz data.

    ``lip`` is a global Lipschitz bound on the closed ordered chamber, or
    None when unbounded (such functions are excluded from the
    Lipschitz-based concentration and Laplace checks).
    """

    def __init__(self, name, lip, value_batch, grad_batch):
        self.name = name
        self.lip = lip
        self._value_batch = value_batch
        self._grad_batch = grad_batch

    def value_batch(self, samples):
        return self._value_batch(np.asarray(samples, dtype=np.float64))

    def grad_batch(self, samples):
        """(reps, n) gradients, almost-everywhere where kinks exist."""
        return self._grad_batch(np.asarray(samples, dtype=np.float64))

    def grad_sq_batch(self, samples):
        g = self.grad_batch(samples)
        return np.sum(g * g, axis=1)

    def value(self, x):
        return float(self.value_batch(np.asarray(x, float)[None, :])[0])

    def gradient(self, x):
        return self.grad_batch(np.asarray(x, float)[None, :])[0]

    def __repr__(self):
        return f"TestFunction({self.name}, lip={self.lip})"


def linear(a, c=0.0):
    """f(x) = <a, x> + c; Lipschitz constant |a|."""
    a = np.asarray(a, dtype=np.float64)

    def val(s):
        return s @ a + c

    def grad(s):
        return np.broadcast_to(a, s.shape).copy()

    return TestFunction(f"linear:{','.join(repr(v) for v in a)}",
                        float(np.linalg.norm(a)), val, grad)


def max_coordinate():
    """f(x) = max_i x_i; gradient e_1 almost everywhere (ties are null)."""

    def val(s):
        return np.max(s, axis=1)

    def grad(s):
        g = np.zeros_like(s)
        g[np.arange(s.shape[0]), np.argmax(s, axis=1)] = 1.0
        return g

    return TestFunction("max", 1.0, val, grad)


def exp_linear(lam, c=0.0):
    """f(x) = exp(lam * sum(x) + c); positive, not Lipschitz."""
    lam = float(lam)

    def val(s):
        return np.exp(lam * s.sum(axis=1) + c)

    def grad(s):
        return lam * val(s)[:, None] * np.ones_like(s)

    return TestFunction(f"explin:{lam!r}", None, val, grad)


def linear_statistic(kind, z=None):
    """f(x) = (1/n) sum_i g(x_i) with g one of the built-in 1D functions.

    Lipschitz constant Lip(g)/sqrt(n): identity has Lip 1; the real and
    imaginary parts of the resolvent map t -> 1/(t - z) have the global
    bound 1/Im(z)^2.
    """
    if kind == "identity":
        g = lambda t: t
        gp = lambda t: np.ones_like(t)
        lip1d = 1.0
        name = "linstat:identity"
    elif kind in ("stieltjes_re", "stieltjes_im"):
        if z is None:
            raise DomainError("stieltjes statistics need the complex point z")
        z = complex(z)
        if not z.imag > 0.0:
            raise DomainError("z must have positive imaginary part")
        part = np.real if kind == "stieltjes_re" else np.imag

        def g(t):
            return part(1.0 / (t - z))

        def gp(t):
            return part(-1.0 / (t - z) ** 2)

        lip1d = 1.0 / z.imag**2
        name = f"linstat:{kind}:{z.real!r}:{z.imag!r}"
    else:
        raise DomainError(f"unknown linear statistic kind {kind!r}")

    def val(s):
        return np.mean(g(s), axis=1)

    def grad(s):
        return gp(s) / s.shape[1]

    tf = TestFunction(name, None, val, grad)
    tf._lip1d = lip1d  # resolved against n at check time
    return tf


def sym_poly(poly, beta=None):
    """Polynomial observable; exact analytic gradient, unbounded slope."""
    coeffs = poly._float_coeffs(beta)
    maxp = max((k[0] for k in coeffs if k), default=0)

    def powers(s):
        pw = {0: np.full(s.shape[0], float(s.shape[1]))}
        acc = s.copy()
        if maxp >= 1:
            pw[1] = acc.sum(axis=1)
        for k in range(2, maxp + 1):
            acc = acc * s
            pw[k] = acc.sum(axis=1)
        return pw

    def val(s):
        pw = powers(s)
        out = np.zeros(s.shape[0])
        for key, c in coeffs.items():
            term = np.full(s.shape[0], c)
            for part in key:
                term = term * pw[part]
            out += term
        return out

    def grad(s):
        pw = powers(s)
        out = np.zeros_like(s)
        for key, c in coeffs.items():
            for a, part in enumerate(key):
                rest = np.full(s.shape[0], c * part)
                for b, other in enumerate(key):
                    if b != a:
                        rest = rest * pw[other]
                out += rest[:, None] * s ** (part - 1)
        return out

    return TestFunction("poly", None, val, grad)


def resolve_lip(f, n):
    """Lipschitz bound of f on R^n (linear statistics divide by sqrt(n))."""
    lip1d = getattr(f, "_lip1d", None)
    if lip1d is not None:
        return lip1d / math.sqrt(n)
    return f.lip


# ---------------------------------------------------------------------------
# Shared-sample estimation with contiguous batch means
# ---------------------------------------------------------------------------


def _collect(model, f, reps, seed, stream0, want_grad=True, threads=1):
    """Full arrays of f values (and squared gradients) over exact samples."""
    vals = np.empty(reps)
    grads = np.empty(reps) if want_grad else None
    for start, chunk in iter_spectra(model, reps, seed, stream0,
                                     threads=threads):
        stop = start + chunk.shape[0]
        vals[start:stop] = f.value_batch(chunk)
        if want_grad:
            grads[start:stop] = f.grad_sq_batch(chunk)
    return vals, grads


def _batch_edges(reps, n_batches=N_BATCHES):
    return np.linspace(0, reps, n_batches + 1, dtype=int)


def _batch_means(values, stat, n_batches=N_BATCHES):
    edges = _batch_edges(values.shape[0], n_batches)
    per = np.array([stat(values[a:b]) for a, b in zip(edges[:-1], edges[1:])])
    per = per[np.isfinite(per)]
    if per.size < 2:
        return math.nan
    return float(per.std(ddof=1) / math.sqrt(per.size))


VERDICTS = ("equality_within_error", "strict_inequality", "violation")


@dataclass(frozen=True)
class DeficitReport:
    """Two sides of an inequality with errors and a classification."""

    name: str
    lhs: McEstimate
    rhs: McEstimate
    ratio: float
    verdict: str


def _classify(lhs, rhs):
    comb = math.hypot(lhs.std_error, rhs.std_error)
    if lhs.mean - rhs.mean > 5.0 * comb:
        return math.nan if rhs.mean == 0 else lhs.mean / rhs.mean, "violation"
    if lhs.mean == 0.0 and rhs.mean == 0.0:
        return 1.0, "equality_within_error"
    if rhs.mean == 0.0 or lhs.mean == 0.0:
        return math.nan, "strict_inequality"
    ratio = lhs.mean / rhs.mean
    eps = math.hypot(lhs.std_error / abs(lhs.mean),
                     rhs.std_error / abs(rhs.mean))
    if abs(ratio - 1.0) <= 4.0 * eps:
        return ratio, "equality_within_error"
    return ratio, "strict_inequality"


def _require_reps(reps, minimum=1000):
    if reps < minimum:
        raise DomainError(
            f"reps={reps} too small to interpret (need >= {minimum})")


def poincare_check(model, f, reps, seed, stream0=None, threads=1):
    """var(f) against (1/rho) E|grad f|^2 on shared exact samples."""
    _require_reps(reps)
    vals, grads = _collect(model, f, reps, seed, stream0, threads=threads)
    lhs_mean = float(vals.var(ddof=1))
    lhs_se = _batch_means(vals, lambda v: v.var(ddof=1))
    rhs_mean = float(grads.mean() / model.rho)
    rhs_se = _batch_means(grads, lambda g: g.mean() / model.rho)
    # a deterministic side has exactly zero spread; report se 0
    lhs = McEstimate(lhs_mean, 0.0 if math.isnan(lhs_se) else lhs_se, reps)
    rhs = McEstimate(rhs_mean, 0.0 if math.isnan(rhs_se) else rhs_se, reps)
    ratio, verdict = _classify(lhs, rhs)
    return DeficitReport(f"poincare[{f.name}]", lhs, rhs, ratio, verdict)


def _entropy_sq(vals):
    s2 = vals * vals
    m = s2.mean()
    if m <= 0.0:
        return 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(s2 > 0.0, s2 * np.log(s2), 0.0)
    return float(term.mean() - m * math.log(m))


def lsi_check(model, f, reps, seed, stream0=None, threads=1):
    """ent(f^2) against (2/rho) E|grad f|^2 on shared exact samples.

    Non-positive test functions are folded through |f| (same f^2 and
    almost-everywhere squared gradient); the plug-in entropy estimator
    carries O(1/reps) bias, dominated by the reported error bars at the
    required sample sizes.
    """
    _require_reps(reps)
    vals, grads = _collect(model, f, reps, seed, stream0, threads=threads)
    vals = np.abs(vals)
    lhs_mean = _entropy_sq(vals)
    lhs_se = _batch_means(vals, _entropy_sq)
    rhs_mean = float(2.0 * grads.mean() / model.rho)
    rhs_se = _batch_means(grads, lambda g: 2.0 * g.mean() / model.rho)
    lhs = McEstimate(lhs_mean, 0.0 if math.isnan(lhs_se) else lhs_se, reps)
    rhs = McEstimate(rhs_mean, 0.0 if math.isnan(rhs_se) else rhs_se, reps)
    ratio, verdict = _classify(lhs, rhs)
    return DeficitReport(f"lsi[{f.name}]", lhs, rhs, ratio, verdict)


# ---------------------------------------------------------------------------
# Concentration consequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HerbstRow:
    lam: float
    log_mgf: float
    std_error: float
    bound: float
    satisfied: bool


@dataclass(frozen=True)
class HerbstReport:
    name: str
    lip: float
    rows: tuple

    @property
    def all_satisfied(self):
        return all(r.satisfied for r in self.rows)


def _log_mean_exp(y):
    m = float(y.max())
    return m + math.log(float(np.mean(np.exp(y - m))))


def herbst_laplace_check(model, f, lam_grid, reps, seed, stream0=None,
                         threads=1):
    """log E[e^{lam f}] against lam*E[f] + lam^2 lip^2 / (2 rho).

    The Gaussian Laplace bound that drives Lipschitz concentration;
    satisfied means the empirical value stays below the bound plus four
    standard errors.
    """
    _require_reps(reps)
    lip = resolve_lip(f, model.n)
    if lip is None or not math.isfinite(lip):
        raise DomainError("Laplace check needs a finite Lipschitz constant")
    vals, _ = _collect(model, f, reps, seed, stream0, want_grad=False,
                       threads=threads)
    mean_f = float(vals.mean())
    rows = []
    for lam in lam_grid:
        lam = float(lam)
        log_mgf = _log_mean_exp(lam * vals)
        se = _batch_means(lam * vals, _log_mean_exp)
        if math.isnan(se):
            se = 0.0
        bound = lam * mean_f + lam * lam * lip * lip / (2.0 * model.rho)
        rows.append(HerbstRow(lam, log_mgf, se, bound,
                              log_mgf <= bound + 4.0 * se))
    return HerbstReport(f"herbst[{f.name}]", lip, tuple(rows))


@dataclass(frozen=True)
class TailRow:
    r: float
    empirical: float
    wilson_low: float
    wilson_high: float
    bound: float
    satisfied: bool


@dataclass(frozen=True)
class TailReport:
    name: str
    lip: float
    mean: float
    rows: tuple

    @property
    def all_satisfied(self):
        return all(r.satisfied for r in self.rows)


def _wilson(k, n, z=_Z99):
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def concentration_tails(model, f, r_grid, reps, seed, stream0=None,
                        threads=1):
    """Empirical P(|f - mean| >= r) against 2 exp(-rho r^2 / (2 lip^2)).

    Linear statistics carry lip = Lip(g)/sqrt(n), so the bound
    specializes to the n-accelerated exp(-n rho r^2 / (2 Lip(g)^2)) form
    automatically.  Requires bound * reps >= 10 at the largest r so the
    comparison is informative.
    """
    _require_reps(reps)
    lip = resolve_lip(f, model.n)
    if lip is None or not math.isfinite(lip):
        raise DomainError("tail check needs a finite Lipschitz constant")
    r_grid = [float(r) for r in r_grid]
    if not r_grid:
        raise DomainError("empty r grid")
    rmax = max(r_grid)
    worst = 2.0 * math.exp(-model.rho * rmax * rmax / (2.0 * lip * lip))
    if worst * reps < 10.0:
        raise DomainError(
            f"reps={reps} too small: bound*reps={worst * reps:.2f} < 10 "
            f"at r={rmax}")
    vals, _ = _collect(model, f, reps, seed, stream0, want_grad=False,
                       threads=threads)
    mean_f = float(vals.mean())
    dev = np.abs(vals - mean_f)
    rows = []
    for r in r_grid:
        k = int(np.count_nonzero(dev >= r))
        emp = k / reps
        lo, hi = _wilson(k, reps)
        bound = 2.0 * math.exp(-model.rho * r * r / (2.0 * lip * lip))
        rows.append(TailRow(r, emp, lo, hi, bound, emp <= bound))
    return TailReport(f"tails[{f.name}]", lip, mean_f, tuple(rows))


# ---------------------------------------------------------------------------
# Gaussian factor along the diagonal direction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FactorizationReport:
    var_diag: McEstimate        # Var(<x, u>), expected 1/rho
    ks_normalized: float        # KS of sqrt(rho)*<x,u> against N(0,1)
    correlations: dict = field(default_factory=dict)
    corr_threshold: float = 0.0

    @property
    def correlations_pass(self):
        return all(abs(c) <= self.corr_threshold
                   for c in self.correlations.values())


def factorization_check(model, reps, seed, stream0=None, threads=1):
    """Gaussian factor of the measure along (1,..,1)/sqrt(n).

    The projection S = <x, u> is N(0, 1/rho) and independent of the
    orthogonal complement; checks the variance, a KS test of
    sqrt(rho) S against the standard normal, and that S is uncorrelated
    with a battery of statistics of the complement (squared norm, max,
    smallest gap).  Correlations must stay within 4/sqrt(reps).
    """
    from .analysis import EmpiricalMeasure, ks_distance, normal_cdf

    _require_reps(reps)
    n = model.n
    sqrt_n = math.sqrt(n)
    s_all = np.empty(reps)
    stats = {name: np.empty(reps) for name in
             (("perp_sq_norm", "perp_max", "min_gap") if n > 1 else ())}
    for start, chunk in iter_spectra(model, reps, seed, stream0,
                                     threads=threads):
        stop = start + chunk.shape[0]
        s = chunk.sum(axis=1) / sqrt_n
        s_all[start:stop] = s
        if n > 1:
            y = chunk - (s / sqrt_n)[:, None]
            stats["perp_sq_norm"][start:stop] = np.sum(y * y, axis=1)
            stats["perp_max"][start:stop] = y[:, 0]
            stats["min_gap"][start:stop] = np.min(y[:, :-1] - y[:, 1:], axis=1)
    var_se = _batch_means(s_all, lambda v: v.var(ddof=1))
    var_diag = McEstimate(float(s_all.var(ddof=1)),
                          0.0 if math.isnan(var_se) else var_se, reps)
    ks = ks_distance(EmpiricalMeasure(math.sqrt(model.rho) * s_all),
                     normal_cdf)
    corrs = {}
    for name, arr in stats.items():
        c = np.corrcoef(s_all, arr)[0, 1]
        corrs[name] = float(c)
    return FactorizationReport(var_diag=var_diag, ks_normalized=ks,
                               correlations=corrs,
                               corr_threshold=4.0 / math.sqrt(reps))
