"""Independent test oracles.

Sturm-sequence bisection for symmetric tridiagonal eigenvalues (used to
cross-check the QL solver; shares no code with it) and a central
finite-difference gradient.
"""

import numpy as np


def sturm_count_below(diag, off_sq, x):
    """Number of eigenvalues strictly below x (LDL^T pivot signs)."""
    count = 0
    delta = diag[0] - x
    if delta < 0.0:
        count += 1
    for i in range(1, len(diag)):
        if delta == 0.0:
            delta = 1e-300
        delta = (diag[i] - x) - off_sq[i - 1] / delta
        if delta < 0.0:
            count += 1
    return count


def sturm_eigvals(diag, offdiag, tol=1e-13):
    """All eigenvalues by bisection on the Sturm count, ascending."""
    d = np.asarray(diag, dtype=float)
    e = np.asarray(offdiag, dtype=float)
    n = d.size
    if n == 1:
        return np.array([d[0]])
    radius = np.zeros(n)
    radius[:-1] += np.abs(e)
    radius[1:] += np.abs(e)
    lo0 = float(np.min(d - radius))
    hi0 = float(np.max(d + radius))
    e2 = e * e
    out = np.empty(n)
    for k in range(n):
        lo, hi = lo0, hi0
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if sturm_count_below(d, e2, mid) >= k + 1:
                hi = mid
            else:
                lo = mid
        out[k] = 0.5 * (lo + hi)
    return out


def central_diff_gradient(f, x, h=1e-5):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g
