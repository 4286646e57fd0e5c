"""Pure-Python twin of the compiled kernel core.

This lane is selected by :mod:`loggas.kernels` when the Cython extension
``loggas._core`` is unavailable (or when ``LOGGAS_PURE_PYTHON`` is set).
Both lanes implement the same stream, draw-order and arithmetic contracts
and produce bit-identical output: all transcendental calls go through the
platform libm (``math.*`` here, ``<math.h>`` there), the compiled lane is
built with ``-ffp-contract=off``, and every scalar operation is written in
the same order in both sources.  The compiled lane is typically two orders
of magnitude faster on the batch entry points; see ``benchmarks/``.

Random stream contract
----------------------
A stream is identified by ``(seed, stream_id)``.  Its origin state is a
splitmix-style avalanche hash of the pair, and the state advances by the
splitmix64 increment, so word ``i`` of the stream is a pure function of
``(seed, stream_id, i)``.  Uniforms take the top 53 bits.  Gaussians use
the Box-Muller transform (pairs, second value cached on the stream).
Gamma variates use Marsaglia-Tsang squeeze/rejection for shape >= 1 and
the boost identity ``G(a) = G(a+1) * U^(1/a)`` below 1.  Chi variates are
``sqrt(2 * Gamma(k/2, 1))``.  These choices are fixed per release; changing
any of them changes every downstream stream.
"""

from __future__ import annotations

import math

from .errors import NumericError

LANE = "python"

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STREAM_SALT = 0x6A09E667F3BCC909
_TWO_PI = 6.283185307179586
_INV_2_53 = 1.1102230246251565e-16  # 2**-53
_EPS = 2.220446049250313e-16


def _avalanche(z):
    z &= _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def stream_origin(seed, stream_id):
    """Initial state for stream (seed, stream_id); avalanche-mixed."""
    return _avalanche(_avalanche(seed) ^ ((stream_id + _STREAM_SALT) & _M64))


class RngCore:
    """Counter-based random stream with the distribution primitives.

    Single-owner object: never share one instance between concurrent
    tasks; give each replica its own ``stream_id`` instead.
    """

    __slots__ = ("seed", "stream_id", "_state", "_spare", "_has_spare")

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed) & _M64
        self.stream_id = int(stream_id) & _M64
        self._state = stream_origin(self.seed, self.stream_id)
        self._spare = 0.0
        self._has_spare = False

    def u64(self):
        self._state = (self._state + _GOLDEN) & _M64
        return _avalanche(self._state)

    def uniform(self):
        """Uniform on [0, 1) with 53-bit resolution."""
        return (self.u64() >> 11) * _INV_2_53

    def normal(self):
        if self._has_spare:
            self._has_spare = False
            return self._spare
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(1.0 - u1))
        a = _TWO_PI * u2
        z = r * math.cos(a)
        self._spare = r * math.sin(a)
        self._has_spare = True
        return z

    def normals(self, k):
        return [self.normal() for _ in range(k)]

    def _gamma_ge1(self, shape):
        # Marsaglia-Tsang (2000) squeeze/rejection; requires shape >= 1.
        d = shape - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        while True:
            x = self.normal()
            t = 1.0 + c * x
            if t <= 0.0:
                continue
            v = t * t * t
            u = self.uniform()
            xx = x * x
            if u < 1.0 - 0.0331 * xx * xx:
                return d * v
            if math.log(u) < 0.5 * xx + d * (1.0 - v + math.log(v)):
                return d * v

    def gamma(self, shape):
        """Gamma(shape, 1).  The caller guarantees shape > 0."""
        if shape < 1.0:
            x = self._gamma_ge1(shape + 1.0)
            u = self.uniform()
            # 1 - u is in (0, 1], so the boost factor is strictly positive.
            return x * math.pow(1.0 - u, 1.0 / shape)
        return self._gamma_ge1(shape)

    def chi(self, k):
        """Chi variate with k (real, > 0) degrees of freedom."""
        return math.sqrt(2.0 * self.gamma(0.5 * k))


# ---------------------------------------------------------------------------
# Symmetric tridiagonal eigenvalues: implicit-shift QL with Wilkinson shift.
# ---------------------------------------------------------------------------


def _pythag(a, b):
    aa = abs(a)
    ab = abs(b)
    if aa > ab:
        t = ab / aa
        return aa * math.sqrt(1.0 + t * t)
    if ab == 0.0:
        return 0.0
    t = aa / ab
    return ab * math.sqrt(1.0 + t * t)


def tridiag_eigvals(diag, offdiag, tol=_EPS, max_iter=64):
    """All eigenvalues of a symmetric tridiagonal matrix, ascending.

    Plain QL sweeps with implicit Wilkinson shifts; O(n^2) total.  An
    off-diagonal entry deflates once it drops below ``tol`` times the sum
    of the absolute values of its two diagonal neighbours.  Raises
    :class:`NumericError` (carrying the eigenvalue index) if an eigenvalue
    fails to deflate within ``max_iter`` sweeps.
    """
    n = len(diag)
    d = [float(v) for v in diag]
    e = [float(v) for v in offdiag]
    if len(e) != max(n - 1, 0):
        raise ValueError("offdiag must have length n-1")
    e.append(0.0)  # workspace slot used by the rotation loop
    for l in range(n):
        iters = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= tol * dd:
                    break
                m += 1
            if m == l:
                break
            iters += 1
            if iters > max_iter:
                raise NumericError(
                    f"eigenvalue {l} not converged after {max_iter} sweeps",
                    index=l,
                )
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = _pythag(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = _pythag(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    d.sort()
    return d


def tridiag_eigvals_batch(diags, offdiags, tol=_EPS, max_iter=64):
    """Row-wise tridiagonal eigenvalues; rows of the output are ascending."""
    import numpy as np

    diags = np.asarray(diags, dtype=np.float64)
    offdiags = np.asarray(offdiags, dtype=np.float64)
    m, n = diags.shape
    out = np.empty((m, n), dtype=np.float64)
    for r in range(m):
        try:
            out[r] = tridiag_eigvals(diags[r], offdiags[r], tol, max_iter)
        except NumericError as err:
            err.replica = r
            raise
    return out


# ---------------------------------------------------------------------------
# Batch entry points.  Replica r always consumes stream (seed, stream0 + r),
# so results do not depend on chunking or worker count.
# ---------------------------------------------------------------------------


def _draw_tridiag(core, n, beta, d, e):
    # Draw order contract: n diagonal Gaussians, then n-1 chi entries
    # top-down with parameters (n-1)*beta .. beta.
    sqrt_n = math.sqrt(float(n))
    sqrt_2n = math.sqrt(2.0 * n)
    for i in range(n):
        d[i] = core.normal() / sqrt_n
    for k in range(n - 1):
        e[k] = core.chi((n - 1 - k) * beta) / sqrt_2n


def sample_spectra(n, beta, reps, seed, stream0, tol=_EPS, max_iter=64):
    """Spectra of `reps` draws of the tridiagonal model, rows descending.

    Unit-confinement normalization (confinement strength = n); callers
    rescale for other strengths.
    """
    import numpy as np

    out = np.empty((reps, n), dtype=np.float64)
    d = [0.0] * n
    e = [0.0] * (n - 1)
    for r in range(reps):
        core = RngCore(seed, stream0 + r)
        _draw_tridiag(core, n, beta, d, e)
        try:
            vals = tridiag_eigvals(d, e, tol, max_iter)
        except NumericError as err:
            err.replica = r
            raise
        for i in range(n):
            out[r, i] = vals[n - 1 - i]
    return out


def normals_batch(reps, k, seed, stream0):
    """(reps, k) standard Gaussians; row r uses stream (seed, stream0+r)."""
    import numpy as np

    out = np.empty((reps, k), dtype=np.float64)
    for r in range(reps):
        core = RngCore(seed, stream0 + r)
        for i in range(k):
            out[r, i] = core.normal()
    return out


def shuffle_rows(a, seed, stream0):
    """Fisher-Yates shuffle of each row in place, one stream per row."""
    reps, n = a.shape
    for r in range(reps):
        core = RngCore(seed, stream0 + r)
        row = a[r]
        for i in range(n - 1, 0, -1):
            j = int(core.uniform() * (i + 1))
            if j > i:
                j = i
            row[i], row[j] = row[j], row[i]
    return a


# ---------------------------------------------------------------------------
# Interacting-diffusion paths (Euler-Maruyama with chamber projection).
# ---------------------------------------------------------------------------


def _euler_update(x, z, n, beta, rho, h):
    sig = math.sqrt(2.0 * h)
    y = [0.0] * n
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
    return y


def _weakly_decreasing(y):
    for i in range(len(y) - 1):
        if y[i] < y[i + 1]:
            return False
    return True


def _project_sorted(y):
    srt = sorted(y, reverse=True)
    push = 0.0
    for a, b in zip(y, srt):
        push += abs(a - b)
    return srt, push


def _record_steps(n_steps, record_every):
    idx = list(range(0, n_steps + 1, record_every))
    if idx[-1] != n_steps:
        idx.append(n_steps)
    return idx


def dou_paths(x0, beta, rho, dt, n_steps, record_every, seed, stream0,
              reflected=True, substep_cap=16):
    """Independent diffusion paths; one noise stream per path.

    Returns (times, xs, pushes, events, flagged) where xs has shape
    (paths, n_records, n).  ``events`` counts proposals that left the
    ordered chamber, ``pushes`` accumulates the L1 displacement applied by
    sorting, and ``flagged`` counts substep-recursion cap hits.
    """
    import numpy as np

    paths, n = x0.shape
    rec = _record_steps(n_steps, record_every)
    times = np.array([k * dt for k in rec])
    xs = np.empty((paths, len(rec), n), dtype=np.float64)
    pushes = np.zeros(paths)
    events = np.zeros(paths, dtype=np.int64)
    flagged = np.zeros(paths, dtype=np.int64)

    for p in range(paths):
        core = RngCore(seed, stream0 + p)
        x = [float(v) for v in x0[p]]
        push = 0.0
        n_events = 0
        n_flagged = 0
        rec_i = 0
        if rec[0] == 0:
            xs[p, 0] = x
            rec_i = 1

        def substep(xcur, h, depth):
            nonlocal push, n_events, n_flagged
            z = core.normals(n)
            y = _euler_update(xcur, z, n, beta, rho, h)
            if _weakly_decreasing(y):
                return y
            n_events += 1
            if depth >= substep_cap:
                n_flagged += 1
                y, dp = _project_sorted(y)
                push += dp
                return y
            y1 = substep(xcur, 0.5 * h, depth + 1)
            return substep(y1, 0.5 * h, depth + 1)

        for step in range(1, n_steps + 1):
            if reflected:
                z = core.normals(n)
                y = _euler_update(x, z, n, beta, rho, dt)
                if not _weakly_decreasing(y):
                    n_events += 1
                    y, dp = _project_sorted(y)
                    push += dp
                x = y
            else:
                x = substep(x, dt, 0)
            if rec_i < len(rec) and step == rec[rec_i]:
                xs[p, rec_i] = x
                rec_i += 1
        pushes[p] = push
        events[p] = n_events
        flagged[p] = n_flagged
    return times, xs, pushes, events, flagged


def dou_coupled(x0, y0, beta, rho, dt, n_steps, record_every, seed, stream0,
                reflected=True, substep_cap=16):
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
    import numpy as np

    paths, n = x0.shape
    rec = _record_steps(n_steps, record_every)
    times = np.array([k * dt for k in rec])
    dists = np.empty((paths, len(rec)), dtype=np.float64)

    for p in range(paths):
        core = RngCore(seed, stream0 + p)
        x = [float(v) for v in x0[p]]
        y = [float(v) for v in y0[p]]
        rec_i = 0
        if rec[0] == 0:
            dists[p, 0] = _dist(x, y, n)
            rec_i = 1

        def substep(xc, yc, h, depth):
            z = core.normals(n)
            xn = _euler_update(xc, z, n, beta, rho, h)
            yn = _euler_update(yc, z, n, beta, rho, h)
            ok = _weakly_decreasing(xn) and _weakly_decreasing(yn)
            if ok and _dist(xn, yn, n) <= _dist(xc, yc, n):
                return xn, yn
            if depth >= substep_cap:
                if not _weakly_decreasing(xn):
                    xn, _ = _project_sorted(xn)
                if not _weakly_decreasing(yn):
                    yn, _ = _project_sorted(yn)
                return xn, yn
            xm, ym = substep(xc, yc, 0.5 * h, depth + 1)
            return substep(xm, ym, 0.5 * h, depth + 1)

        for step in range(1, n_steps + 1):
            if reflected:
                z = core.normals(n)
                xn = _euler_update(x, z, n, beta, rho, dt)
                if not _weakly_decreasing(xn):
                    xn, _ = _project_sorted(xn)
                yn = _euler_update(y, z, n, beta, rho, dt)
                if not _weakly_decreasing(yn):
                    yn, _ = _project_sorted(yn)
                x = xn
                y = yn
            else:
                x, y = substep(x, y, dt, 0)
            if rec_i < len(rec) and step == rec[rec_i]:
                dists[p, rec_i] = _dist(x, y, n)
                rec_i += 1
    return times, dists


def _dist(x, y, n):
    s = 0.0
    for i in range(n):
        t = x[i] - y[i]
        s += t * t
    return math.sqrt(s)
