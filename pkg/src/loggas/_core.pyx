# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled kernel core.

Mirror of :mod:`loggas._core_py` (see that module for the stream and
draw-order contracts).  Every arithmetic expression is written in the
same order as the pure-Python twin and the extension is compiled with
-ffp-contract=off, so both lanes produce bit-identical streams, spectra
and paths.  The batch loops release the GIL and may be chunked across
threads by the callers.
"""

from libc.math cimport cos, copysign, fabs, log, pow, sin, sqrt
from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport free, malloc

import numpy as np

from .errors import NumericError

LANE = "compiled"

cdef uint64_t _GOLDEN = <uint64_t>0x9E3779B97F4A7C15
cdef uint64_t _MIX1 = <uint64_t>0xBF58476D1CE4E5B9
cdef uint64_t _MIX2 = <uint64_t>0x94D049BB133111EB
cdef uint64_t _STREAM_SALT = <uint64_t>0x6A09E667F3BCC909
cdef double _TWO_PI = 6.283185307179586
cdef double _INV_2_53 = 1.1102230246251565e-16

_PY_M64 = (1 << 64) - 1


cdef inline uint64_t _avalanche(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * _MIX1
    z = (z ^ (z >> 27)) * _MIX2
    return z ^ (z >> 31)


cdef inline uint64_t _origin(uint64_t seed, uint64_t stream_id) nogil:
    return _avalanche(_avalanche(seed) ^ (stream_id + _STREAM_SALT))


def stream_origin(seed, stream_id):
    """Initial state for stream (seed, stream_id); avalanche-mixed."""
    cdef uint64_t s = <uint64_t>(int(seed) & _PY_M64)
    cdef uint64_t t = <uint64_t>(int(stream_id) & _PY_M64)
    return _origin(s, t)


cdef struct rng_t:
    uint64_t state
    double spare
    int has_spare


cdef inline void rng_init(rng_t* r, uint64_t seed, uint64_t stream_id) nogil:
    r.state = _origin(seed, stream_id)
    r.spare = 0.0
    r.has_spare = 0


cdef inline uint64_t rng_u64(rng_t* r) nogil:
    r.state = r.state + _GOLDEN
    return _avalanche(r.state)


cdef inline double rng_uniform(rng_t* r) nogil:
    return (rng_u64(r) >> 11) * _INV_2_53


cdef inline double rng_normal(rng_t* r) nogil:
    cdef double u1, u2, rad, ang, z
    if r.has_spare:
        r.has_spare = 0
        return r.spare
    u1 = rng_uniform(r)
    u2 = rng_uniform(r)
    rad = sqrt(-2.0 * log(1.0 - u1))
    ang = _TWO_PI * u2
    z = rad * cos(ang)
    r.spare = rad * sin(ang)
    r.has_spare = 1
    return z


cdef double rng_gamma_ge1(rng_t* r, double shape) nogil:
    # Marsaglia-Tsang (2000) squeeze/rejection; requires shape >= 1.
    cdef double d, c, x, t, v, u, xx
    d = shape - 1.0 / 3.0
    c = 1.0 / sqrt(9.0 * d)
    while True:
        x = rng_normal(r)
        t = 1.0 + c * x
        if t <= 0.0:
            continue
        v = t * t * t
        u = rng_uniform(r)
        xx = x * x
        if u < 1.0 - 0.0331 * xx * xx:
            return d * v
        if log(u) < 0.5 * xx + d * (1.0 - v + log(v)):
            return d * v


cdef inline double rng_gamma(rng_t* r, double shape) nogil:
    cdef double x, u
    if shape < 1.0:
        x = rng_gamma_ge1(r, shape + 1.0)
        u = rng_uniform(r)
        return x * pow(1.0 - u, 1.0 / shape)
    return rng_gamma_ge1(r, shape)


cdef inline double rng_chi(rng_t* r, double k) nogil:
    return sqrt(2.0 * rng_gamma(r, 0.5 * k))


cdef class RngCore:
    """Counter-based random stream with the distribution primitives.

    Single-owner object: never share one instance between concurrent
    tasks; give each replica its own ``stream_id`` instead.
    """

    cdef rng_t _r
    cdef readonly object seed
    cdef readonly object stream_id

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed) & _PY_M64
        self.stream_id = int(stream_id) & _PY_M64
        rng_init(&self._r, <uint64_t>self.seed, <uint64_t>self.stream_id)

    def u64(self):
        return rng_u64(&self._r)

    def uniform(self):
        """Uniform on [0, 1) with 53-bit resolution."""
        return rng_uniform(&self._r)

    def normal(self):
        return rng_normal(&self._r)

    def normals(self, k):
        cdef Py_ssize_t i, kk = k
        return [rng_normal(&self._r) for i in range(kk)]

    def gamma(self, double shape):
        """Gamma(shape, 1).  The caller guarantees shape > 0."""
        return rng_gamma(&self._r, shape)

    def chi(self, double k):
        """Chi variate with k (real, > 0) degrees of freedom."""
        return rng_chi(&self._r, k)


# ---------------------------------------------------------------------------
# Symmetric tridiagonal eigenvalues: implicit-shift QL with Wilkinson shift.
# ---------------------------------------------------------------------------


cdef inline double _pythag(double a, double b) nogil:
    cdef double aa = fabs(a)
    cdef double ab = fabs(b)
    cdef double t
    if aa > ab:
        t = ab / aa
        return aa * sqrt(1.0 + t * t)
    if ab == 0.0:
        return 0.0
    t = aa / ab
    return ab * sqrt(1.0 + t * t)


cdef int _ql_eigvals(double* d, double* e, int n, double tol,
                     int max_iter) nogil:
    """QL sweeps in place; e needs one extra workspace slot (length n).

    Leaves eigenvalues in d, sorted ascending.  Returns -1 on success,
    otherwise the index of the eigenvalue that failed to deflate.
    """
    cdef int l, m, i, j, iters, underflow
    cdef double dd, g, rr, s, c, p, f, b, key
    for l in range(n):
        iters = 0
        while True:
            m = l
            while m < n - 1:
                dd = fabs(d[m]) + fabs(d[m + 1])
                if fabs(e[m]) <= tol * dd:
                    break
                m += 1
            if m == l:
                break
            iters += 1
            if iters > max_iter:
                return l
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            rr = _pythag(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + copysign(rr, g))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = 0
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                rr = _pythag(f, g)
                e[i + 1] = rr
                if rr == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = 1
                    break
                s = f / rr
                c = g / rr
                g = d[i + 1] - p
                rr = (d[i] - g) * s + 2.0 * c * b
                p = s * rr
                d[i + 1] = g + p
                g = c * rr - b
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    # stable insertion sort, ascending (matches the twin's list.sort)
    for i in range(1, n):
        key = d[i]
        j = i - 1
        while j >= 0 and d[j] > key:
            d[j + 1] = d[j]
            j -= 1
        d[j + 1] = key
    return -1


def tridiag_eigvals(diag, offdiag, double tol=2.220446049250313e-16,
                    int max_iter=64):
    """All eigenvalues of a symmetric tridiagonal matrix, ascending.

    Same contract as the pure-Python twin: deflation threshold is
    ``tol * (|d[m]| + |d[m+1]|)`` and :class:`NumericError` carries the
    index of any eigenvalue that fails to deflate within ``max_iter``
    sweeps.
    """
    cdef const double[::1] dv = np.ascontiguousarray(diag, dtype=np.float64)
    cdef const double[::1] ev = np.ascontiguousarray(offdiag, dtype=np.float64) \
        if len(offdiag) else None
    cdef int n = dv.shape[0]
    if (ev.shape[0] if ev is not None else 0) != max(n - 1, 0):
        raise ValueError("offdiag must have length n-1")
    cdef double* d = <double*>malloc(n * sizeof(double))
    cdef double* e = <double*>malloc((n + 1) * sizeof(double))
    cdef int i, fail
    try:
        for i in range(n):
            d[i] = dv[i]
        for i in range(n - 1):
            e[i] = ev[i]
        e[n - 1 if n > 0 else 0] = 0.0
        with nogil:
            fail = _ql_eigvals(d, e, n, tol, max_iter)
        if fail >= 0:
            raise NumericError(
                f"eigenvalue {fail} not converged after {max_iter} sweeps",
                index=fail,
            )
        return [d[i] for i in range(n)]
    finally:
        free(d)
        free(e)


def tridiag_eigvals_batch(diags, offdiags, double tol=2.220446049250313e-16,
                          int max_iter=64):
    """Row-wise tridiagonal eigenvalues; rows of the output are ascending."""
    cdef const double[:, ::1] dv = np.ascontiguousarray(diags, dtype=np.float64)
    cdef const double[:, ::1] ev = np.ascontiguousarray(offdiags, dtype=np.float64)
    cdef Py_ssize_t m = dv.shape[0]
    cdef int n = <int>dv.shape[1]
    if ev.shape[0] != m or ev.shape[1] != max(n - 1, 0):
        raise ValueError("offdiags must have shape (m, n-1)")
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double* d = <double*>malloc(n * sizeof(double))
    cdef double* e = <double*>malloc((n + 1) * sizeof(double))
    cdef Py_ssize_t r, fail_rep = -1
    cdef int i, fail = -1
    try:
        with nogil:
            for r in range(m):
                for i in range(n):
                    d[i] = dv[r, i]
                for i in range(n - 1):
                    e[i] = ev[r, i]
                e[n - 1] = 0.0
                fail = _ql_eigvals(d, e, n, tol, max_iter)
                if fail >= 0:
                    fail_rep = r
                    break
                for i in range(n):
                    out[r, i] = d[i]
        if fail >= 0:
            raise NumericError(
                f"eigenvalue {fail} not converged after {max_iter} sweeps",
                index=fail,
                replica=fail_rep,
            )
        return out_arr
    finally:
        free(d)
        free(e)


# ---------------------------------------------------------------------------
# Batch entry points.  Replica r always consumes stream (seed, stream0 + r),
# so results do not depend on chunking or worker count.
# ---------------------------------------------------------------------------


cdef void _draw_tridiag(rng_t* rng, int n, double beta, double* d,
                        double* e) nogil:
    # Draw order contract: n diagonal Gaussians, then n-1 chi entries
    # top-down with parameters (n-1)*beta .. beta.
    cdef double sqrt_n = sqrt(<double>n)
    cdef double sqrt_2n = sqrt(2.0 * n)
    cdef int i, k
    for i in range(n):
        d[i] = rng_normal(rng) / sqrt_n
    for k in range(n - 1):
        e[k] = rng_chi(rng, (n - 1 - k) * beta) / sqrt_2n


def sample_spectra(int n, double beta, Py_ssize_t reps, seed, stream0,
                   double tol=2.220446049250313e-16, int max_iter=64):
    """Spectra of `reps` draws of the tridiagonal model, rows descending.

    Unit-confinement normalization (confinement strength = n); callers
    rescale for other strengths.
    """
    cdef uint64_t cseed = <uint64_t>(int(seed) & _PY_M64)
    cdef uint64_t cstream = <uint64_t>(int(stream0) & _PY_M64)
    out_arr = np.empty((reps, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double* d = <double*>malloc(n * sizeof(double))
    cdef double* e = <double*>malloc((n + 1) * sizeof(double))
    cdef rng_t rng
    cdef Py_ssize_t r
    cdef int i, fail = -1
    cdef Py_ssize_t fail_rep = -1
    try:
        with nogil:
            for r in range(reps):
                rng_init(&rng, cseed, cstream + <uint64_t>r)
                _draw_tridiag(&rng, n, beta, d, e)
                e[n - 1] = 0.0
                fail = _ql_eigvals(d, e, n, tol, max_iter)
                if fail >= 0:
                    fail_rep = r
                    break
                for i in range(n):
                    out[r, i] = d[n - 1 - i]
        if fail >= 0:
            raise NumericError(
                f"eigenvalue {fail} not converged after {max_iter} sweeps",
                index=fail,
                replica=fail_rep,
            )
        return out_arr
    finally:
        free(d)
        free(e)


def normals_batch(Py_ssize_t reps, Py_ssize_t k, seed, stream0):
    """(reps, k) standard Gaussians; row r uses stream (seed, stream0+r)."""
    cdef uint64_t cseed = <uint64_t>(int(seed) & _PY_M64)
    cdef uint64_t cstream = <uint64_t>(int(stream0) & _PY_M64)
    out_arr = np.empty((reps, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef rng_t rng
    cdef Py_ssize_t r, i
    with nogil:
        for r in range(reps):
            rng_init(&rng, cseed, cstream + <uint64_t>r)
            for i in range(k):
                out[r, i] = rng_normal(&rng)
    return out_arr


def shuffle_rows(arr, seed, stream0):
    """Fisher-Yates shuffle of each row in place, one stream per row."""
    cdef double[:, ::1] a = arr
    cdef uint64_t cseed = <uint64_t>(int(seed) & _PY_M64)
    cdef uint64_t cstream = <uint64_t>(int(stream0) & _PY_M64)
    cdef Py_ssize_t reps = a.shape[0]
    cdef Py_ssize_t n = a.shape[1]
    cdef rng_t rng
    cdef Py_ssize_t r, i, j
    cdef double tmp
    with nogil:
        for r in range(reps):
            rng_init(&rng, cseed, cstream + <uint64_t>r)
            for i in range(n - 1, 0, -1):
                j = <Py_ssize_t>(rng_uniform(&rng) * (i + 1))
                if j > i:
                    j = i
                tmp = a[r, i]
                a[r, i] = a[r, j]
                a[r, j] = tmp
    return arr


# ---------------------------------------------------------------------------
# Interacting-diffusion paths (Euler-Maruyama with chamber projection).
# ---------------------------------------------------------------------------


cdef void _euler_update(double* x, double* z, double* y, int n, double beta,
                        double rho, double h) nogil:
    cdef double sig = sqrt(2.0 * h)
    cdef int i, j
    cdef double xi, s, dx
    for i in range(n):
        xi = x[i]
        s = 0.0
        for j in range(n):
            if j != i:
                dx = xi - x[j]
                if dx != 0.0:
                    # exact ties contribute no drift; the noise separates
                    # the particles on the next step
                    s += 1.0 / dx
        y[i] = xi + (beta * s - rho * xi) * h + sig * z[i]


cdef inline int _weakly_decreasing(double* y, int n) nogil:
    cdef int i
    for i in range(n - 1):
        if y[i] < y[i + 1]:
            return 0
    return 1


cdef double _project_sorted(double* y, int n, double* work) nogil:
    # Sort descending (stable insertion) into work, accumulate the L1
    # displacement, copy back.
    cdef int i, j
    cdef double key, push = 0.0
    for i in range(n):
        work[i] = y[i]
    for i in range(1, n):
        key = work[i]
        j = i - 1
        while j >= 0 and work[j] < key:
            work[j + 1] = work[j]
            j -= 1
        work[j + 1] = key
    for i in range(n):
        push += fabs(y[i] - work[i])
        y[i] = work[i]
    return push


cdef void _substep(rng_t* rng, double* xcur, double* out, double* work, int n,
                   double beta, double rho, double h, int depth, int cap,
                   double* push, int64_t* events, int64_t* flagged) nogil:
    cdef double* z = <double*>malloc(n * sizeof(double))
    cdef double* y1
    cdef int i
    for i in range(n):
        z[i] = rng_normal(rng)
    _euler_update(xcur, z, out, n, beta, rho, h)
    free(z)
    if _weakly_decreasing(out, n):
        return
    events[0] += 1
    if depth >= cap:
        flagged[0] += 1
        push[0] += _project_sorted(out, n, work)
        return
    y1 = <double*>malloc(n * sizeof(double))
    _substep(rng, xcur, y1, work, n, beta, rho, 0.5 * h, depth + 1, cap,
             push, events, flagged)
    _substep(rng, y1, out, work, n, beta, rho, 0.5 * h, depth + 1, cap,
             push, events, flagged)
    free(y1)


def _record_steps(n_steps, record_every):
    idx = list(range(0, n_steps + 1, record_every))
    # explicit last index: negative indexing is disabled by wraparound=False
    if idx[len(idx) - 1] != n_steps:
        idx.append(n_steps)
    return idx


def dou_paths(x0, double beta, double rho, double dt, Py_ssize_t n_steps,
              Py_ssize_t record_every, seed, stream0, reflected=True,
              int substep_cap=16):
    """Independent diffusion paths; one noise stream per path.

    Returns (times, xs, pushes, events, flagged) where xs has shape
    (paths, n_records, n).  ``events`` counts proposals that left the
    ordered chamber, ``pushes`` accumulates the L1 displacement applied by
    sorting, and ``flagged`` counts substep-recursion cap hits.
    """
    x0_arr = np.ascontiguousarray(x0, dtype=np.float64)
    cdef const double[:, ::1] x0v = x0_arr
    cdef Py_ssize_t paths = x0v.shape[0]
    cdef int n = <int>x0v.shape[1]
    rec = _record_steps(n_steps, record_every)
    times = np.array([k * dt for k in rec])
    cdef int64_t[::1] recv = np.asarray(rec, dtype=np.int64)
    cdef Py_ssize_t n_rec = recv.shape[0]
    xs_arr = np.empty((paths, n_rec, n), dtype=np.float64)
    pushes_arr = np.zeros(paths, dtype=np.float64)
    events_arr = np.zeros(paths, dtype=np.int64)
    flagged_arr = np.zeros(paths, dtype=np.int64)
    cdef double[:, :, ::1] xs = xs_arr
    cdef double[::1] pushes = pushes_arr
    cdef int64_t[::1] events = events_arr
    cdef int64_t[::1] flagged = flagged_arr
    cdef uint64_t cseed = <uint64_t>(int(seed) & _PY_M64)
    cdef uint64_t cstream = <uint64_t>(int(stream0) & _PY_M64)
    cdef int refl = 1 if reflected else 0
    cdef double* x = <double*>malloc(n * sizeof(double))
    cdef double* y = <double*>malloc(n * sizeof(double))
    cdef double* z = <double*>malloc(n * sizeof(double))
    cdef double* work = <double*>malloc(n * sizeof(double))
    cdef rng_t rng
    cdef Py_ssize_t p, step, rec_i
    cdef int i
    cdef double push
    cdef int64_t n_events, n_flagged
    try:
        with nogil:
            for p in range(paths):
                rng_init(&rng, cseed, cstream + <uint64_t>p)
                for i in range(n):
                    x[i] = x0v[p, i]
                push = 0.0
                n_events = 0
                n_flagged = 0
                rec_i = 0
                if recv[0] == 0:
                    for i in range(n):
                        xs[p, 0, i] = x[i]
                    rec_i = 1
                for step in range(1, n_steps + 1):
                    if refl:
                        for i in range(n):
                            z[i] = rng_normal(&rng)
                        _euler_update(x, z, y, n, beta, rho, dt)
                        if not _weakly_decreasing(y, n):
                            n_events += 1
                            push += _project_sorted(y, n, work)
                        for i in range(n):
                            x[i] = y[i]
                    else:
                        _substep(&rng, x, y, work, n, beta, rho, dt, 0,
                                 substep_cap, &push, &n_events, &n_flagged)
                        for i in range(n):
                            x[i] = y[i]
                    if rec_i < n_rec and step == recv[rec_i]:
                        for i in range(n):
                            xs[p, rec_i, i] = x[i]
                        rec_i += 1
                pushes[p] = push
                events[p] = n_events
                flagged[p] = n_flagged
    finally:
        free(x)
        free(y)
        free(z)
        free(work)
    return times, xs_arr, pushes_arr, events_arr, flagged_arr


cdef inline double _pair_dist(double* x, double* y, int n) nogil:
    cdef double s = 0.0, t
    cdef int i
    for i in range(n):
        t = x[i] - y[i]
        s += t * t
    return sqrt(s)


cdef void _coupled_substep(rng_t* rng, double* xc, double* yc, double* xout,
                           double* yout, double* work, int n, double beta,
                           double rho, double h, int depth, int cap) nogil:
    cdef double* z = <double*>malloc(n * sizeof(double))
    cdef double* xm
    cdef double* ym
    cdef int i, ok
    for i in range(n):
        z[i] = rng_normal(rng)
    _euler_update(xc, z, xout, n, beta, rho, h)
    _euler_update(yc, z, yout, n, beta, rho, h)
    free(z)
    ok = _weakly_decreasing(xout, n) and _weakly_decreasing(yout, n)
    if ok and _pair_dist(xout, yout, n) <= _pair_dist(xc, yc, n):
        return
    if depth >= cap:
        if not _weakly_decreasing(xout, n):
            _project_sorted(xout, n, work)
        if not _weakly_decreasing(yout, n):
            _project_sorted(yout, n, work)
        return
    xm = <double*>malloc(n * sizeof(double))
    ym = <double*>malloc(n * sizeof(double))
    _coupled_substep(rng, xc, yc, xm, ym, work, n, beta, rho, 0.5 * h,
                     depth + 1, cap)
    _coupled_substep(rng, xm, ym, xout, yout, work, n, beta, rho, 0.5 * h,
                     depth + 1, cap)
    free(xm)
    free(ym)


def dou_coupled(x0, y0, double beta, double rho, double dt,
                Py_ssize_t n_steps, Py_ssize_t record_every, seed, stream0,
                reflected=True, int substep_cap=16):
    """Pairs of paths driven by identical noise; records their distance.

    In reflected mode each member is sorted independently when its
    proposal leaves the chamber (sorting both never expands the pair
    distance).  In substep mode the subdivision decision is made jointly
    so the two paths keep consuming the same increments: a step is
    halved, for both, when either proposal leaves the chamber or the
    pair distance expands; the latter can only be discretization error,
    because the exact common-noise flow is pathwise non-expansive.
    Returns (times, dists) with dists of shape (paths, n_records).
    """
    x0_arr = np.ascontiguousarray(x0, dtype=np.float64)
    y0_arr = np.ascontiguousarray(y0, dtype=np.float64)
    cdef const double[:, ::1] x0v = x0_arr
    cdef const double[:, ::1] y0v = y0_arr
    cdef Py_ssize_t paths = x0v.shape[0]
    cdef int n = <int>x0v.shape[1]
    rec = _record_steps(n_steps, record_every)
    times = np.array([k * dt for k in rec])
    cdef int64_t[::1] recv = np.asarray(rec, dtype=np.int64)
    cdef Py_ssize_t n_rec = recv.shape[0]
    dists_arr = np.empty((paths, n_rec), dtype=np.float64)
    cdef double[:, ::1] dists = dists_arr
    cdef uint64_t cseed = <uint64_t>(int(seed) & _PY_M64)
    cdef uint64_t cstream = <uint64_t>(int(stream0) & _PY_M64)
    cdef double* x = <double*>malloc(n * sizeof(double))
    cdef double* y = <double*>malloc(n * sizeof(double))
    cdef double* xn = <double*>malloc(n * sizeof(double))
    cdef double* yn = <double*>malloc(n * sizeof(double))
    cdef double* z = <double*>malloc(n * sizeof(double))
    cdef double* work = <double*>malloc(n * sizeof(double))
    cdef rng_t rng
    cdef Py_ssize_t p, step, rec_i
    cdef int i
    cdef int refl = 1 if reflected else 0
    try:
        with nogil:
            for p in range(paths):
                rng_init(&rng, cseed, cstream + <uint64_t>p)
                for i in range(n):
                    x[i] = x0v[p, i]
                    y[i] = y0v[p, i]
                rec_i = 0
                if recv[0] == 0:
                    dists[p, 0] = _pair_dist(x, y, n)
                    rec_i = 1
                for step in range(1, n_steps + 1):
                    if refl:
                        for i in range(n):
                            z[i] = rng_normal(&rng)
                        _euler_update(x, z, xn, n, beta, rho, dt)
                        if not _weakly_decreasing(xn, n):
                            _project_sorted(xn, n, work)
                        _euler_update(y, z, yn, n, beta, rho, dt)
                        if not _weakly_decreasing(yn, n):
                            _project_sorted(yn, n, work)
                    else:
                        _coupled_substep(&rng, x, y, xn, yn, work, n, beta,
                                         rho, dt, 0, substep_cap)
                    for i in range(n):
                        x[i] = xn[i]
                        y[i] = yn[i]
                    if rec_i < n_rec and step == recv[rec_i]:
                        dists[p, rec_i] = _pair_dist(x, y, n)
                        rec_i += 1
    finally:
        free(x)
        free(y)
        free(xn)
        free(yn)
        free(z)
        free(work)
    return times, dists_arr
