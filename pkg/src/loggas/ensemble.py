"""Exact samplers for ordered log-gas configurations.

The tridiagonal random-matrix model gives exact draws of the gas with
logarithmic repulsion strength beta and quadratic confinement, at the
reference confinement strength rho = n; other strengths follow by the
exact scaling law (a draw scaled by sigma has confinement rho/sigma^2).
Dense Gaussian Hermitian/symmetric models cover the classical beta = 2
and beta = 1 cases.  Eigenvalues come from the in-package implicit-shift
QL solver (the kernel lanes); a dense matrix is first reduced by
Householder similarity to tridiagonal form.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError
from .rng import PURPOSE_SAMPLING, substream_id

_EPS = 2.220446049250313e-16


@dataclass(frozen=True)
class GasModel:
    """Gas parameters: particle count n, repulsion beta, confinement rho.

    rho defaults to n, the normalization under which the tridiagonal
    model is exact without rescaling.
    """

    n: int
    beta: float
    rho: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not self.beta > 0.0:
            raise DomainError(f"beta must be > 0, got {self.beta}")
        if self.rho is None:
            object.__setattr__(self, "rho", float(self.n))
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "beta", float(self.beta))
        if not self.rho > 0.0:
            raise DomainError(f"rho must be > 0, got {self.rho}")

    @property
    def scale_from_reference(self):
        """sigma with: a rho=n draw times sigma is a rho draw (sqrt(n/rho))."""
        return math.sqrt(self.n / self.rho)


class Configuration:
    """An ordered point x1 >= x2 >= ... >= xn (closed chamber)."""

    __slots__ = ("points",)

    def __init__(self, points):
        pts = np.asarray(points, dtype=np.float64).copy()
        if pts.ndim != 1 or pts.size < 1:
            raise DomainError("a configuration is a non-empty 1D point set")
        if np.any(pts[:-1] < pts[1:]):
            raise DomainError("points must be weakly decreasing")
        pts.setflags(write=False)
        self.points = pts

    @classmethod
    def from_unsorted(cls, values):
        return cls(np.sort(np.asarray(values, dtype=np.float64))[::-1])

    def __len__(self):
        return self.points.size

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def strictly_decreasing(self):
        return bool(np.all(self.points[:-1] > self.points[1:]))

    def min_gap(self):
        if len(self) < 2:
            return math.inf
        return float(np.min(self.points[:-1] - self.points[1:]))

    def __repr__(self):
        return f"Configuration({self.points.tolist()})"


@dataclass(frozen=True)
class TridiagonalSym:
    """Symmetric tridiagonal matrix (diagonal, strictly positive off-diagonal)."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=np.float64)
        e = np.asarray(self.offdiag, dtype=np.float64)
        if d.ndim != 1 or d.size < 1:
            raise DomainError("diag must be a non-empty vector")
        if e.shape != (d.size - 1,):
            raise DomainError("offdiag must have length n-1")
        if e.size and not np.all(e > 0.0):
            raise DomainError("offdiag entries must be strictly positive")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def n(self):
        return self.diag.size

    def norm_bound(self):
        """Computable bound on the spectral radius: max absolute row sum."""
        n = self.n
        if n == 1:
            return abs(float(self.diag[0]))
        s = np.abs(self.diag).copy()
        s[:-1] += np.abs(self.offdiag)
        s[1:] += np.abs(self.offdiag)
        return float(s.max())

    def to_matrix(self):
        m = np.diag(self.diag)
        idx = np.arange(self.n - 1)
        m[idx, idx + 1] = self.offdiag
        m[idx + 1, idx] = self.offdiag
        return m


@dataclass(frozen=True)
class HermitianDense:
    """Hermitian (complex) or symmetric (real) matrix, upper triangle stored.

    ``upper`` packs the strictly-upper entries row-major:
    (0,1), (0,2), ..., (0,n-1), (1,2), ...
    """

    n: int
    diag: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=np.float64)
        u = np.asarray(self.upper)
        if u.dtype.kind == "c":
            u = u.astype(np.complex128)
        else:
            u = u.astype(np.float64)
        if d.shape != (self.n,) or u.shape != (self.n * (self.n - 1) // 2,):
            raise DomainError("diag/upper sizes inconsistent with order n")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "upper", u)

    @property
    def is_complex(self):
        return self.upper.dtype.kind == "c"

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m)
        n = m.shape[0]
        if m.shape != (n, n):
            raise DomainError("matrix must be square")
        herm_gap = np.max(np.abs(m - m.conj().T)) if n else 0.0
        if herm_gap > 1e-12 * max(1.0, np.max(np.abs(m))):
            raise DomainError("matrix is not Hermitian")
        iu = np.triu_indices(n, k=1)
        return cls(n=n, diag=np.real(np.diag(m)).copy(), upper=m[iu].copy())

    def to_matrix(self):
        dtype = np.complex128 if self.is_complex else np.float64
        m = np.zeros((self.n, self.n), dtype=dtype)
        iu = np.triu_indices(self.n, k=1)
        m[iu] = self.upper
        m += m.conj().T
        m[np.diag_indices(self.n)] = self.diag
        return m

    def hs_norm_sq(self):
        """Squared Hilbert-Schmidt (Frobenius) norm."""
        return float(np.sum(self.diag**2) + 2.0 * np.sum(np.abs(self.upper) ** 2))


# ---------------------------------------------------------------------------
# Tridiagonal model
# ---------------------------------------------------------------------------


def sample_tridiagonal(model, rng):
    """One draw of the tridiagonal matrix model (requires rho = n).

    Diagonal entries are N(0,2)/sqrt(2n) i.i.d.; off-diagonal entry k
    (from the top) is chi with (n-k)*beta degrees of freedom over
    sqrt(2n), all independent.  Draw order: diagonal first, then the
    off-diagonal top-down (the batch kernels follow the same contract).
    """
    if model.rho != model.n:
        raise DomainError(
            "the tridiagonal model is exact only at rho = n; "
            "use sample_spectrum for general rho"
        )
    n = model.n
    core = rng._core
    sqrt_n = math.sqrt(float(n))
    sqrt_2n = math.sqrt(2.0 * n)
    diag = np.array([core.normal() / sqrt_n for _ in range(n)])
    off = np.array([core.chi((n - 1 - k) * model.beta) / sqrt_2n
                    for k in range(n - 1)])
    return TridiagonalSym(diag=diag, offdiag=off)


def eigenvalues_tridiagonal(m, tol=_EPS, max_iter=64):
    """Eigenvalues of a TridiagonalSym, sorted decreasing.

    Each returned value is within O(tol * norm_bound) of an exact
    eigenvalue; non-convergence raises NumericError with the index.
    """
    if tol <= 0.0:
        raise DomainError("tol must be > 0")
    vals = kernels.tridiag_eigvals(m.diag, m.offdiag, tol, max_iter)
    return Configuration(np.asarray(vals)[::-1])


def sample_spectrum(model, rng, tol=_EPS):
    """One exact draw of the ordered gas configuration.

    Samples the tridiagonal model at rho = n, diagonalizes, and applies
    the exact sqrt(n/rho) rescaling for other confinement strengths.
    """
    ref = GasModel(model.n, model.beta)
    tri = sample_tridiagonal(ref, rng)
    conf = eigenvalues_tridiagonal(tri, tol)
    s = model.scale_from_reference
    if s == 1.0:
        return conf
    return Configuration(conf.points * s)


def sample_spectra(model, reps, seed, stream0=None, threads=1):
    """(reps, n) array of spectra, rows descending.

    Replica r consumes stream (seed, stream0 + r), so the result is
    independent of `threads` and of any chunking.
    """
    if stream0 is None:
        stream0 = substream_id(PURPOSE_SAMPLING)
    if reps < 1:
        raise DomainError("reps must be >= 1")
    if threads <= 1 or reps < 4 * threads:
        out = kernels.sample_spectra(model.n, model.beta, reps, seed, stream0)
    else:
        bounds = np.linspace(0, reps, threads + 1, dtype=int)
        with concurrent.futures.ThreadPoolExecutor(threads) as pool:
            parts = list(
                pool.map(
                    lambda se: kernels.sample_spectra(
                        model.n, model.beta, se[1] - se[0], seed, stream0 + se[0]
                    ),
                    zip(bounds[:-1], bounds[1:]),
                )
            )
        out = np.vstack(parts)
    s = model.scale_from_reference
    if s != 1.0:
        out *= s
    return out


def iter_spectra(model, reps, seed, stream0=None, chunk=65536, threads=1):
    """Yield (start_index, spectra_chunk) covering `reps` replicas."""
    if stream0 is None:
        stream0 = substream_id(PURPOSE_SAMPLING)
    start = 0
    while start < reps:
        size = min(chunk, reps - start)
        yield start, sample_spectra(
            model, size, seed, stream0 + start, threads=threads
        )
        start += size


# ---------------------------------------------------------------------------
# Dense Gaussian models (beta = 2 Hermitian, beta = 1 real symmetric)
# ---------------------------------------------------------------------------


def sample_gue_dense(n, rng):
    """Dense Hermitian Gaussian matrix: diag N(0,1/n), off-diag parts N(0,1/(2n)).

    Draw order: diagonal (n draws), then strictly-upper entries row-major
    with the real part before the imaginary part.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    core = rng._core
    sqrt_n = math.sqrt(float(n))
    sqrt_2n = math.sqrt(2.0 * n)
    diag = np.array([core.normal() / sqrt_n for _ in range(n)])
    m = n * (n - 1) // 2
    upper = np.empty(m, dtype=np.complex128)
    for k in range(m):
        re = core.normal() / sqrt_2n
        im = core.normal() / sqrt_2n
        upper[k] = complex(re, im)
    return HermitianDense(n=n, diag=diag, upper=upper)


def sample_goe_dense(n, rng):
    """Dense real symmetric Gaussian matrix: diag N(0,1/n), off-diag N(0,1/(2n))."""
    if n < 1:
        raise DomainError("n must be >= 1")
    core = rng._core
    sqrt_n = math.sqrt(float(n))
    sqrt_2n = math.sqrt(2.0 * n)
    diag = np.array([core.normal() / sqrt_n for _ in range(n)])
    m = n * (n - 1) // 2
    upper = np.array([core.normal() / sqrt_2n for _ in range(m)])
    return HermitianDense(n=n, diag=diag, upper=upper)


def tridiagonalize(mats):
    """Householder reduction of Hermitian/symmetric matrices to tridiagonal.

    Accepts a single (n, n) matrix or a stack (m, n, n); returns
    (diag, offdiag) with real diag and nonnegative real offdiag (phases
    are absorbed by a unitary diagonal similarity, leaving the spectrum
    unchanged).
    """
    a = np.asarray(mats)
    single = a.ndim == 2
    if single:
        a = a[None]
    cplx = np.iscomplexobj(a)
    a = a.astype(np.complex128 if cplx else np.float64, copy=True)
    b, n, n2 = a.shape
    if n != n2:
        raise DomainError("matrices must be square")
    for k in range(n - 2):
        x = a[:, k + 1:, k]
        sigma = np.sqrt(np.sum(np.abs(x) ** 2, axis=1))
        x0 = x[:, 0]
        absx0 = np.abs(x0)
        phase = np.where(absx0 > 0.0, x0 / np.where(absx0 > 0.0, absx0, 1.0), 1.0)
        alpha = -phase * sigma
        u = x.copy()
        u[:, 0] -= alpha
        unorm = np.sqrt(np.sum(np.abs(u) ** 2, axis=1))
        ok = unorm > 0.0
        w = u / np.where(ok, unorm, 1.0)[:, None]
        w[~ok] = 0.0
        s = a[:, k + 1:, k + 1:]
        p = np.einsum("bij,bj->bi", s, w)
        kk = np.real(np.einsum("bi,bi->b", w.conj(), p))
        q = p - kk[:, None] * w
        s -= 2.0 * (q[:, :, None] * w.conj()[:, None, :]
                    + w[:, :, None] * q.conj()[:, None, :])
        a[:, k + 1, k] = alpha
        a[:, k, k + 1] = np.conj(alpha)
        a[:, k + 2:, k] = 0.0
        a[:, k, k + 2:] = 0.0
    diag = np.real(np.einsum("bii->bi", a)).copy()
    off = np.abs(np.einsum("bii->bi", a[:, 1:, :-1])).copy() if n > 1 \
        else np.empty((b, 0))
    if single:
        return diag[0], off[0]
    return diag, off


def eigenvalues_dense(h, tol=_EPS, max_iter=64):
    """Eigenvalues of a HermitianDense, sorted decreasing.

    Householder tridiagonalization followed by the QL solver.
    """
    diag, off = tridiagonalize(h.to_matrix())
    vals = kernels.tridiag_eigvals(diag, off, tol, max_iter)
    return Configuration(np.asarray(vals)[::-1])


def sample_dense_spectra(n, beta, reps, seed, stream0=None, chunk=8192):
    """(reps, n) spectra of dense Gaussian matrices, beta in {1, 2}.

    Batched draw order matches the single-draw samplers; replica r uses
    stream (seed, stream0 + r).
    """
    if beta == 2:
        per = n * n
    elif beta == 1:
        per = n + n * (n - 1) // 2
    else:
        raise DomainError("dense models exist for beta in {1, 2} only")
    if stream0 is None:
        stream0 = substream_id(PURPOSE_SAMPLING)
    sqrt_n = math.sqrt(float(n))
    sqrt_2n = math.sqrt(2.0 * n)
    iu = np.triu_indices(n, k=1)
    out = np.empty((reps, n))
    done = 0
    while done < reps:
        size = min(chunk, reps - done)
        z = kernels.normals_batch(size, per, seed, stream0 + done)
        if beta == 2:
            mats = np.zeros((size, n, n), dtype=np.complex128)
            upper = (z[:, n::2] + 1j * z[:, n + 1::2]) / sqrt_2n
        else:
            mats = np.zeros((size, n, n), dtype=np.float64)
            upper = z[:, n:] / sqrt_2n
        mats[:, iu[0], iu[1]] = upper
        mats += np.conj(np.transpose(mats, (0, 2, 1)))
        step = np.arange(n)
        mats[:, step, step] = z[:, :n] / sqrt_n
        diag, off = tridiagonalize(mats)
        vals = kernels.tridiag_eigvals_batch(diag, off)
        out[done:done + size] = vals[:, ::-1]
        done += size
    return out


# ---------------------------------------------------------------------------
# Convexity of the energy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HessianReport:
    min_rayleigh: float
    diag_eigval: float
    rayleigh: np.ndarray = field(repr=False, default=None)  # type: ignore


def energy_hessian(model, x):
    """Hessian of the gas energy at a strictly ordered configuration.

    rho*I plus, for each pair i<j, beta/(x_i-x_j)^2 on the (i,j) pair
    difference direction.  Singular on the chamber boundary.
    """
    pts = x.points if isinstance(x, Configuration) else np.asarray(x, float)
    n = pts.size
    if n != model.n:
        raise DomainError("configuration size does not match the model")
    if n > 1 and not np.all(pts[:-1] > pts[1:]):
        raise DomainError("Hessian requires a strictly ordered interior point")
    h = model.rho * np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            c = model.beta / (pts[i] - pts[j]) ** 2
            h[i, i] += c
            h[j, j] += c
            h[i, j] -= c
            h[j, i] -= c
    return h


def hessian_check(model, x, directions):
    """Rayleigh quotients of the energy Hessian along given directions.

    Also evaluates the quotient along the diagonal direction
    (1,..,1)/sqrt(n), which equals rho exactly because the pairwise
    interaction is invariant under common shifts.
    """
    h = energy_hessian(model, x)
    n = model.n
    u = np.full(n, 1.0 / math.sqrt(n))
    diag_eigval = float(u @ (h @ u))
    quotients = []
    for v in directions:
        v = np.asarray(v, dtype=np.float64)
        nv = float(v @ v)
        if nv == 0.0:
            raise DomainError("directions must be nonzero")
        quotients.append(float(v @ (h @ v)) / nv)
    quotients = np.asarray(quotients)
    min_r = float(quotients.min()) if quotients.size else diag_eigval
    return HessianReport(min_rayleigh=min_r, diag_eigval=diag_eigval,
                         rayleigh=quotients)
